"""Dense statevector simulation, exact expectations and computational-basis sampling.

Bit ``q`` of an amplitude index is qubit ``q``.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping

import numpy as np
import scipy.sparse as sp

from .circuit import Circuit, ExcitationOp, Gate
from .qubit import PauliSum

MAX_QUBITS = 24
NORM_TOL = 1e-10


class StateVector:
    """Normalized amplitudes over ``n`` qubits (length ``2**n``)."""

    __slots__ = ("n", "amplitudes")

    def __init__(self, n: int, amplitudes: np.ndarray | None = None):
        if n > MAX_QUBITS:
            raise ValueError(f"{n} qubits exceeds the dense simulation cap of {MAX_QUBITS}")
        self.n = int(n)
        if amplitudes is None:
            amplitudes = np.zeros(1 << n, dtype=complex)
            amplitudes[0] = 1.0
        amplitudes = np.asarray(amplitudes, dtype=complex)
        if amplitudes.shape != (1 << n,):
            raise ValueError(f"expected {1 << n} amplitudes, got shape {amplitudes.shape}")
        self.amplitudes = amplitudes

    @classmethod
    def basis(cls, n: int, index: int) -> "StateVector":
        psi = cls(n)
        psi.amplitudes[0] = 0.0
        psi.amplitudes[index] = 1.0
        return psi

    def copy(self) -> "StateVector":
        return StateVector(self.n, self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def _matrix(g: Gate) -> np.ndarray:
    t = g.param
    if g.kind == "x":
        return np.array([[0, 1], [1, 0]], dtype=complex)
    if g.kind == "h":
        return np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
    c, s = math.cos(t / 2), math.sin(t / 2)
    if g.kind == "rx":
        return np.array([[c, -1j * s], [-1j * s, c]])
    if g.kind == "ry":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if g.kind == "rz":
        return np.array([[c - 1j * s, 0], [0, c + 1j * s]])
    if g.kind == "p":
        return np.array([[1, 0], [0, complex(math.cos(t), math.sin(t))]])
    raise ValueError(f"no 2x2 matrix for {g.kind}")


@lru_cache(maxsize=512)
def _cnot_pairs(n: int, control: int, target: int) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.int64)
    return idx[((idx >> control) & 1 == 1) & ((idx >> target) & 1 == 0)]


def _apply_gate(amp: np.ndarray, g: Gate, n: int) -> None:
    if g.kind == "cnot":
        c, t = g.qubits
        lo = _cnot_pairs(n, c, t)
        hi = lo | (1 << t)
        amp[lo], amp[hi] = amp[hi], amp[lo].copy()
        return
    (q,) = g.qubits
    v = amp.reshape(1 << (n - 1 - q), 2, 1 << q)
    u = _matrix(g)
    a0 = v[:, 0, :].copy()
    a1 = v[:, 1, :]
    v[:, 0, :] = u[0, 0] * a0 + u[0, 1] * a1
    v[:, 1, :] = u[1, 0] * a0 + u[1, 1] * a1


def apply(c: Circuit, psi: StateVector, check_norm: bool = False) -> StateVector:
    """Apply ``c`` gate by gate to a copy of ``psi``."""
    if c.n_qubits != psi.n:
        raise ValueError(f"circuit width {c.n_qubits} != state width {psi.n}")
    out = psi.copy()
    for g in c.gates:
        _apply_gate(out.amplitudes, g, out.n)
        if check_norm and abs(out.norm() - 1.0) > NORM_TOL:
            raise FloatingPointError(f"norm drifted after {g.to_line()!r}")
    return out


def circuit_unitary(c: Circuit) -> np.ndarray:
    """Dense unitary of ``c`` (columns are images of basis states); small widths only."""
    if c.n_qubits > 12:
        raise ValueError("dense unitaries are limited to 12 qubits")
    dim = 1 << c.n_qubits
    U = np.eye(dim, dtype=complex)
    for col in range(dim):
        amp = U[:, col].copy()
        for g in c.gates:
            _apply_gate(amp, g, c.n_qubits)
        U[:, col] = amp
    return U


def phase_fidelity(U: np.ndarray, V: np.ndarray) -> float:
    """|tr(U^dagger V)| / dim; equals 1 iff U and V agree up to a global phase."""
    return float(abs(np.trace(U.conj().T @ V)) / U.shape[0])


def sparse_operator(H) -> sp.spmatrix:
    if isinstance(H, PauliSum):
        cached = getattr(H, "_sparse_cache", None)
        if cached is None:
            cached = H.to_sparse()
            H._sparse_cache = cached
        return cached
    return H


def expectation(psi: StateVector, H) -> float:
    """<psi|H|psi> for a Hermitian PauliSum (or a prebuilt sparse matrix)."""
    if isinstance(H, PauliSum):
        if H.n_qubits != psi.n:
            raise ValueError(f"operator width {H.n_qubits} != state width {psi.n}")
        if not H.is_hermitian():
            raise ValueError("expectation requires a Hermitian operator")
    M = sparse_operator(H)
    val = np.vdot(psi.amplitudes, M @ psi.amplitudes)
    if abs(val.imag) > 1e-10 * max(1.0, abs(val.real)):
        raise ValueError(f"expectation has imaginary part {val.imag:.3e}")
    return float(val.real)


@dataclass
class DeterminantMultiset:
    """Sampled computational-basis patterns with occurrence counts."""

    n_qubits: int
    counts: dict[int, int] = field(default_factory=dict)

    @property
    def shots(self) -> int:
        return sum(self.counts.values())

    def patterns(self) -> dict[str, int]:
        return {
            "".join("1" if (d >> q) & 1 else "0" for q in range(self.n_qubits)): c
            for d, c in sorted(self.counts.items())
        }

    def to_lines(self) -> str:
        return "".join(f"{p} {c}\n" for p, c in self.patterns().items())

    @classmethod
    def from_lines(cls, text: str) -> "DeterminantMultiset":
        counts: dict[int, int] = {}
        n = None
        for line in text.splitlines():
            if not line.strip():
                continue
            pattern, count = line.split()
            n = len(pattern)
            det = sum(1 << q for q, ch in enumerate(pattern) if ch == "1")
            counts[det] = counts.get(det, 0) + int(count)
        return cls(n or 0, counts)

    @classmethod
    def from_probabilities(cls, n_qubits: int, probs: Mapping[int, float]) -> "DeterminantMultiset":
        """Weighted multiset with real-valued weights (the infinite-shot limit)."""
        return cls(n_qubits, {d: p for d, p in probs.items() if p > 0})


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def sample(psi: StateVector, shots: int, seed: int | np.random.Generator) -> DeterminantMultiset:
    """I.i.d. computational-basis draws from |amplitude|^2."""
    if shots < 1:
        raise ValueError("shots must be at least 1")
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed)
    p = psi.probabilities()
    p = p / p.sum()
    draws = rng.choice(p.size, size=shots, p=p)
    return DeterminantMultiset(psi.n, {int(k): int(v) for k, v in sorted(Counter(draws.tolist()).items())})


# Exact excitation kernels. Each QEB circuit is a real Givens rotation between
# the reference pattern (occupied set filled, virtual set empty) and its excited
# partner; every other basis state is untouched.


@lru_cache(maxsize=4096)
def _excitation_indices(n: int, occupied: tuple[int, ...], virtual: tuple[int, ...]) -> tuple[np.ndarray, np.ndarray]:
    idx = np.arange(1 << n, dtype=np.int64)
    occ_mask = sum(1 << q for q in occupied)
    vir_mask = sum(1 << q for q in virtual)
    src = idx[((idx & occ_mask) == occ_mask) & ((idx & vir_mask) == 0)]
    return src, src ^ (occ_mask | vir_mask)


def apply_excitation(amp: np.ndarray, op: ExcitationOp, theta: float, n: int) -> None:
    """In-place action of ``op.circuit(theta)`` on the amplitude vector."""
    src, dst = _excitation_indices(n, op.occupied, op.virtual)
    c, s = math.cos(theta), math.sin(theta)
    a, b = amp[src], amp[dst]
    amp[src] = c * a - s * b
    amp[dst] = s * a + c * b


def excitation_generator(amp: np.ndarray, op: ExcitationOp, n: int) -> np.ndarray:
    """d/dtheta of the excitation unitary at theta=0 applied to ``amp``."""
    src, dst = _excitation_indices(n, op.occupied, op.virtual)
    out = np.zeros_like(amp)
    out[dst] = amp[src]
    out[src] = -amp[dst]
    return out


def ansatz_state(ops, thetas, n: int, reference: int) -> np.ndarray:
    amp = np.zeros(1 << n, dtype=complex)
    amp[reference] = 1.0
    for op, t in zip(ops, thetas):
        apply_excitation(amp, op, t, n)
    return amp
