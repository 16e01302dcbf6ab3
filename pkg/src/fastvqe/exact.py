"""Exact ground states: determinant-basis CASCI and a dense Jordan-Wigner cross-check."""

from __future__ import annotations

import itertools
from math import comb

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, eigsh

from .determinants import DeterminantBasis, apply_ladder
from .hamiltonian import FermionHamiltonian
from .qubit import PauliSum

CASCI_MAX_DIM = 10**6
# above this the Slater-Condon matrix is replaced by a matrix-free sigma build
CASCI_DENSE_MAX_DIM = 4000
JW_DENSE_MAX_QUBITS = 14


def casci_ground(H: FermionHamiltonian) -> tuple[float, np.ndarray, DeterminantBasis]:
    """Lowest eigenpair of H in the fixed-particle determinant basis.

    Returns ``(E0, vector, basis)``; ``vector[k]`` is the amplitude of
    ``basis.dets[k]``. Sectors up to ``CASCI_DENSE_MAX_DIM`` are diagonalized
    densely from Slater-Condon elements; larger ones use Lanczos on a
    string-based sigma vector.
    """
    dim = comb(H.n_orbitals, H.n_alpha) * comb(H.n_orbitals, H.n_beta)
    if dim > CASCI_MAX_DIM:
        raise ValueError(f"CASCI dimension {dim} exceeds the cap of {CASCI_MAX_DIM}")
    basis = DeterminantBasis(H.n_orbitals, H.n_alpha, H.n_beta)
    if dim > CASCI_DENSE_MAX_DIM:
        e, v = _lanczos_ground(H)
        return e, v, basis
    M = basis.hamiltonian_matrix(H)
    w, v = np.linalg.eigh(M)
    return float(w[0]), v[:, 0], basis


def _string_excitations(n: int, n_el: int) -> list[sp.csr_matrix]:
    """Matrices of E_pq (index p * n + q) over the n_el-electron strings, in combination order."""
    strings = [sum(1 << p for p in c) for c in itertools.combinations(range(n), n_el)]
    index = {s: k for k, s in enumerate(strings)}
    out = []
    for p, q in itertools.product(range(n), repeat=2):
        rows, cols, vals = [], [], []
        for k, s in enumerate(strings):
            hit = apply_ladder(s, [p], [q])
            if hit is not None:
                rows.append(index[hit[1]])
                cols.append(k)
                vals.append(float(hit[0]))
        m = len(strings)
        out.append(sp.csr_matrix((vals, (rows, cols)), shape=(m, m)))
    return out


def _lanczos_ground(H: FermionHamiltonian) -> tuple[float, np.ndarray]:
    n = H.n_orbitals
    A = _string_excitations(n, H.n_alpha)
    B = _string_excitations(n, H.n_beta)
    na, nb = A[0].shape[0], B[0].shape[0]
    g = H.g.reshape(n * n, n * n)
    k = (H.h - 0.5 * np.einsum("prrq->pq", H.g)).reshape(n * n)

    def excite(pq: int, C: np.ndarray) -> np.ndarray:
        return A[pq] @ C + (B[pq] @ C.T).T

    def sigma(x: np.ndarray) -> np.ndarray:
        C = x.reshape(na, nb)
        D = np.stack([excite(pq, C) for pq in range(n * n)]).reshape(n * n, -1)
        G = (0.5 * g @ D + k[:, None] * C.reshape(1, -1)).reshape(n * n, na, nb)
        out = H.e_core * C
        for pq in range(n * n):
            out = out + excite(pq, G[pq])
        return out.reshape(-1)

    dim = na * nb
    op = LinearOperator((dim, dim), matvec=sigma, dtype=float)
    v0 = np.full(dim, 1e-3)
    v0[0] = 1.0
    w, v = eigsh(op, k=1, which="SA", v0=v0, tol=1e-12)
    return float(w[0]), v[:, 0]


def sector_indices(n_qubits: int, n_alpha: int, n_beta: int) -> np.ndarray:
    """Computational-basis indices with the given alpha/beta occupation counts."""
    norb = n_qubits // 2
    idx = np.arange(1 << n_qubits, dtype=np.int64)
    alpha = np.bitwise_count(idx & ((1 << norb) - 1))
    beta = np.bitwise_count(idx >> norb)
    return idx[(alpha == n_alpha) & (beta == n_beta)]


def jw_dense_ground(H: PauliSum, n_alpha: int, n_beta: int) -> float:
    """Lowest eigenvalue of a qubit Hamiltonian restricted to a particle/spin sector."""
    n = H.n_qubits
    if n > JW_DENSE_MAX_QUBITS:
        raise ValueError(f"{n} qubits exceeds the dense cap of {JW_DENSE_MAX_QUBITS}")
    if n % 2:
        raise ValueError("blocked spin-orbital layout needs an even qubit count")
    sel = sector_indices(n, n_alpha, n_beta)
    if sel.size == 0:
        raise ValueError(f"empty sector ({n_alpha}, {n_beta}) on {n} qubits")
    M = H.to_sparse()[sel][:, sel].toarray()
    if np.max(np.abs(M - M.conj().T), initial=0.0) > 1e-10:
        raise ValueError("qubit Hamiltonian is not Hermitian")
    return float(np.linalg.eigvalsh(M)[0])
