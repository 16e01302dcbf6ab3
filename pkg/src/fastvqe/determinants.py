"""Slater determinants as spin-orbital bitmasks and Slater-Condon matrix elements.

A determinant is an ``int`` whose bit ``P`` marks spin orbital ``P`` as occupied
(blocked ordering, matching the qubit layout). The fermionic phase convention is
creation operators applied in ascending index order, the same convention the
Jordan-Wigner Z strings encode.
"""

from __future__ import annotations

import itertools
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .hamiltonian import FermionHamiltonian

Determinant = int


def as_determinant(det) -> int:
    """Accept an int mask, a ``"1100"`` pattern (qubit 0 first) or a bit sequence."""
    if isinstance(det, (int, np.integer)):
        return int(det)
    if isinstance(det, str):
        return sum(1 << q for q, c in enumerate(det) if c == "1")
    return sum(1 << q for q, b in enumerate(det) if b)


def to_pattern(det: int, n_qubits: int) -> str:
    return "".join("1" if (det >> q) & 1 else "0" for q in range(n_qubits))


def occupied(det: int) -> list[int]:
    out = []
    q = 0
    while det:
        if det & 1:
            out.append(q)
        det >>= 1
        q += 1
    return out


def spin_counts(det: int, n_orbitals: int) -> tuple[int, int]:
    alpha_mask = (1 << n_orbitals) - 1
    return (det & alpha_mask).bit_count(), (det >> n_orbitals).bit_count()


def apply_ladder(det: int, creators: Sequence[int], annihilators: Sequence[int]) -> tuple[int, int] | None:
    """Apply ``a+_{c1} a+_{c2} ... a_{a1} a_{a2} ...`` to ``det``.

    Operators act right to left. Returns ``(sign, new_det)`` or ``None`` when the
    result vanishes.
    """
    sign = 1
    ops =[(p, True) for p in creators] + [(p, False) for p in annihilators]
    for p, create in reversed(ops):
        bit = 1 << p
        if bool(det & bit) == create:
            return None
        if (det & (bit - 1)).bit_count() & 1:
            sign = -sign
        det ^= bit
    return sign, det


@lru_cache(maxsize=8)
def _spin_integrals(H: FermionHamiltonian) -> tuple[np.ndarray, np.ndarray]:
    """One-body matrix and antisymmetrized <PQ||RS> over blocked spin orbitals."""
    n = H.n_orbitals
    spin = np.repeat([0, 1], n)
    spatial = np.tile(np.arange(n), 2)
    same = spin[:, None] == spin[None, :]
    h1 = np.where(same, H.h[np.ix_(spatial, spatial)], 0.0)
    # <PQ|RS> = (pr|qs) delta(sP,sR) delta(sQ,sS)
    g = H.g[np.ix_(spatial, spatial, spatial, spatial)].transpose(0, 2, 1, 3)
    mask = same[:, None, :, None] & same[None, :, None, :]
    phys = np.where(mask, g, 0.0)
    anti = phys - phys.transpose(0, 1, 3, 2)
    return h1, anti


def slater_condon_element(H: FermionHamiltonian, det_i, det_j) -> float:
    """<D_i|H|D_j> by the Slater-Condon rules; zero beyond double excitations."""
    di, dj = as_determinant(det_i), as_determinant(det_j)
    n = H.n_orbitals
    if di >> (2 * n) or dj >> (2 * n):
        raise ValueError("determinant references spin orbitals beyond the Hamiltonian")
    if spin_counts(di, n) != spin_counts(dj, n):
        raise ValueError("determinants belong to different particle/spin sectors")
    diff = di ^ dj
    degree = diff.bit_count() // 2
    if degree > 2:
        return 0.0
    h1, anti = _spin_integrals(H)
    if degree == 0:
        occ = occupied(dj)
        e = H.e_core + sum(h1[p, p] for p in occ)
        if occ:
            sub = anti[np.ix_(occ, occ, occ, occ)]
            e += 0.5 * np.einsum("pqpq->", sub)
        return float(e)
    holes = occupied(dj & diff)
    parts = occupied(di & diff)
    if degree == 1:
        (m,), (p,) = holes, parts
        res = apply_ladder(dj, [p], [m])
        sign = res[0]
        occ = occupied(dj)
        val = h1[p, m] + sum(anti[p, q, m, q] for q in occ)
        return float(sign * val)
    m, nn = holes
    p, q = parts
    sign = apply_ladder(dj, [p, q], [nn, m])[0]
    return float(sign * anti[p, q, m, nn])


class DeterminantBasis:
    """All determinants with fixed (n_alpha, n_beta) over ``n_orbitals`` spatial orbitals."""

    def __init__(self, n_orbitals: int, n_alpha: int, n_beta: int):
        self.n_orbitals = n_orbitals
        self.n_alpha = n_alpha
        self.n_beta = n_beta
        alphas = [sum(1 << p for p in c) for c in itertools.combinations(range(n_orbitals), n_alpha)]
        betas = [sum(1 << p for p in c) for c in itertools.combinations(range(n_orbitals), n_beta)]
        self.pairs: list[tuple[int, int]] = [(a, b) for a in alphas for b in betas]
        self.dets: list[int] = [a | (b << n_orbitals) for a, b in self.pairs]
        self.index = {d: k for k, d in enumerate(self.dets)}

    def __len__(self) -> int:
        return len(self.dets)

    def __iter__(self):
        return iter(self.dets)

    def hamiltonian_matrix(self, H: FermionHamiltonian) -> np.ndarray:
        dim = len(self.dets)
        M = np.zeros((dim, dim))
        for a in range(dim):
            da = self.dets[a]
            for b in range(a, dim):
                db = self.dets[b]
                if (da ^ db).bit_count() > 4:
                    continue
                M[a, b] = M[b, a] = slater_condon_element(H, da, db)
        return M


def connected_determinants(det: int, n_orbitals: int) -> Iterable[int]:
    """``det`` itself plus every spin-conserving single and double excitation of it."""
    yield det
    n = n_orbitals
    occ = occupied(det)
    virt = [p for p in range(2 * n) if not (det >> p) & 1]
    for i in occ:
        for a in virt:
            if (i < n) == (a < n):
                yield det ^ (1 << i) ^ (1 << a)
    for i, j in itertools.combinations(occ, 2):
        s_in = (i >= n) + (j >= n)
        base = det ^ (1 << i) ^ (1 << j)
        for a, b in itertools.combinations(virt, 2):
            if (a >= n) + (b >= n) == s_in:
                yield base ^ (1 << a) ^ (1 << b)
