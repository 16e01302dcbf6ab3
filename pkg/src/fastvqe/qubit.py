"""Pauli algebra and the Jordan-Wigner encoding of fermionic Hamiltonians.

Qubit ``q`` is character ``q`` of a letter string and bit ``q`` of a basis-state
index. Spin orbitals are blocked: alpha orbital ``p`` is qubit ``p``, beta
orbital ``p`` is qubit ``n_orbitals + p``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

import numpy as np
import scipy.sparse as sp

from .hamiltonian import FermionHamiltonian

MERGE_TOL = 1e-12

_LETTER_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_BITS_LETTER = {v: k for k, v in _LETTER_BITS.items()}
_I_POW = (1, 1j, -1, -1j)


def _encode(ops: str) -> tuple[int, int]:
    x = z = 0
    for q, c in enumerate(ops.upper()):
        try:
            bx, bz = _LETTER_BITS[c]
        except KeyError:
            raise ValueError(f"invalid Pauli letter {c!r} in {ops!r}") from None
        x |= bx << q
        z |= bz << q
    return x, z


def _decode(x: int, z: int, n: int) -> str:
    return "".join(_BITS_LETTER[((x >> q) & 1, (z >> q) & 1)] for q in range(n))


def _mul_masks(x1: int, z1: int, x2: int, z2: int) -> tuple[complex, int, int]:
    # P(x,z) = i^{|x&z|} X^x Z^z, so Y = iXZ
    x3, z3 = x1 ^ x2, z1 ^ z2
    e = (x1 & z1).bit_count() + (x2 & z2).bit_count() - (x3 & z3).bit_count()
    e += 2 * (z1 & x2).bit_count()
    return _I_POW[e % 4], x3, z3


@dataclass(frozen=True)
class PauliString:
    coefficient: complex
    ops: str

    def __post_init__(self):
        _encode(self.ops)
        object.__setattr__(self, "ops", self.ops.upper())
        object.__setattr__(self, "coefficient", complex(self.coefficient))

    @property
    def n_qubits(self) -> int:
        return len(self.ops)


def pauli_product(a: PauliString, b: PauliString) -> PauliString:
    """Letterwise product with phase bookkeeping, e.g. X*Y = iZ."""
    if a.n_qubits != b.n_qubits:
        raise ValueError(f"width mismatch: {a.n_qubits} vs {b.n_qubits} qubits")
    phase, x, z = _mul_masks(*_encode(a.ops), *_encode(b.ops))
    return PauliString(a.coefficient * b.coefficient * phase, _decode(x, z, a.n_qubits))


class PauliSum:
    """Weighted sum of Pauli strings merged by letter pattern.

    Coefficients below ``MERGE_TOL`` in magnitude are dropped on construction.
    """

    __slots__ = ("n_qubits", "_terms", "_sparse_cache")

    def __init__(self, n_qubits: int, terms: Mapping[tuple[int, int], complex] | None = None):
        self.n_qubits = int(n_qubits)
        self._terms: dict[tuple[int, int], complex] = {}
        self._sparse_cache = None
        if terms:
            for key, c in terms.items():
                if abs(c) >= MERGE_TOL:
                    self._terms[key] = complex(c)

    @classmethod
    def from_strings(cls, strings: Iterable[PauliString], n_qubits: int | None = None) -> "PauliSum":
        strings = list(strings)
        if n_qubits is None:
            if not strings:
                raise ValueError("n_qubits is required for an empty sum")
            n_qubits = strings[0].n_qubits
        acc: dict[tuple[int, int], complex] = {}
        for s in strings:
            if s.n_qubits != n_qubits:
                raise ValueError(f"width mismatch: {s.n_qubits} vs {n_qubits} qubits")
            key = _encode(s.ops)
            acc[key] = acc.get(key, 0) + s.coefficient
        return cls(n_qubits, acc)

    @classmethod
    def identity(cls, n_qubits: int, coefficient: complex = 1.0) -> "PauliSum":
        return cls(n_qubits, {(0, 0): coefficient})

    @property
    def terms(self) -> list[PauliString]:
        return [PauliString(c, _decode(x, z, self.n_qubits)) for (x, z), c in sorted(self._terms.items())]

    def items(self) -> Iterator[tuple[tuple[int, int], complex]]:
        return iter(self._terms.items())

    def __len__(self) -> int:
        return len(self._terms)

    def coefficient(self, ops: str) -> complex:
        return self._terms.get(_encode(ops), 0j)

    def _check(self, other: "PauliSum") -> None:
        if other.n_qubits != self.n_qubits:
            raise ValueError(f"width mismatch: {self.n_qubits} vs {other.n_qubits} qubits")

    def __add__(self, other: "PauliSum") -> "PauliSum":
        self._check(other)
        acc = dict(self._terms)
        for k, c in other._terms.items():
            acc[k] = acc.get(k, 0) + c
        return PauliSum(self.n_qubits, acc)

    def __neg__(self) -> "PauliSum":
        return PauliSum(self.n_qubits, {k: -c for k, c in self._terms.items()})

    def __sub__(self, other: "PauliSum") -> "PauliSum":
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, PauliSum):
            self._check(other)
            acc: dict[tuple[int, int], complex] = {}
            for (x1, z1), c1 in self._terms.items():
                for (x2, z2), c2 in other._terms.items():
                    phase, x, z = _mul_masks(x1, z1, x2, z2)
                    acc[(x, z)] = acc.get((x, z), 0) + phase * c1 * c2
            return PauliSum(self.n_qubits, acc)
        return PauliSum(self.n_qubits, {k: c * other for k, c in self._terms.items()})

    __rmul__ = __mul__

    def commutator(self, other: "PauliSum") -> "PauliSum":
        return self * other - other * self

    def adjoint(self) -> "PauliSum":
        return PauliSum(self.n_qubits, {k: c.conjugate() for k, c in self._terms.items()})

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        return all(abs(c.imag) <= tol for c in self._terms.values())

    def is_zero(self) -> bool:
        return not self._terms

    def real(self) -> "PauliSum":
        return PauliSum(self.n_qubits, {k: c.real for k, c in self._terms.items()})

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PauliSum)
            and other.n_qubits == self.n_qubits
            and self._terms.keys() == other._terms.keys()
            and all(abs(self._terms[k] - other._terms[k]) < MERGE_TOL for k in self._terms)
        )

    def __repr__(self) -> str:
        body = " + ".join(f"({t.coefficient:.6g})*{t.ops}" for t in self.terms[:6])
        more = f" + ... ({len(self)} terms)" if len(self) > 6 else ""
        return f"PauliSum({body or '0'}{more})"

    def to_sparse(self) -> sp.csr_matrix:
        """Matrix in the computational basis (bit ``q`` of the index is qubit ``q``)."""
        n = self.n_qubits
        dim = 1 << n
        idx = np.arange(dim, dtype=np.int64)
        by_x: dict[int, np.ndarray] = {}
        for (x, z), c in self._terms.items():
            parity = np.bitwise_count(idx & z).astype(np.int64) & 1
            col = c * _I_POW[(x & z).bit_count() % 4] * (1 - 2 * parity)
            by_x[x] = by_x[x] + col if x in by_x else col
        mats = [
            sp.csr_matrix((vals, (idx ^ x, idx)), shape=(dim, dim)) for x, vals in by_x.items()
        ]
        if not mats:
            return sp.csr_matrix((dim, dim), dtype=complex)
        out = mats[0]
        for m in mats[1:]:
            out = out + m
        return out.tocsr()

    def to_dense(self) -> np.ndarray:
        return self.to_sparse().toarray()

    def to_lines(self) -> str:
        return "".join(f"{t.coefficient.real!r} {t.coefficient.imag!r} {t.ops}\n" for t in self.terms)

    @classmethod
    def from_lines(cls, text: str) -> "PauliSum":
        strings = []
        for line in text.splitlines():
            if line.strip():
                re_, im, ops = line.split()
                strings.append(PauliString(complex(float(re_), float(im)), ops))
        return cls.from_strings(strings)


def jw_ladder(p: int, kind: str, n: int) -> PauliSum:
    """Jordan-Wigner image of a creation (``"create"``) or annihilation operator."""
    if not 0 <= p < n:
        raise ValueError(f"spin-orbital index {p} outside [0, {n})")
    if kind not in ("create", "annihilate"):
        raise ValueError(f"kind must be 'create' or 'annihilate', got {kind!r}")
    zs = (1 << p) - 1
    bit = 1 << p
    sign = -1 if kind == "create" else 1
    # Y = i X Z in mask form, so the Y term's mask coefficient absorbs no extra phase
    return PauliSum(n, {(bit, zs): 0.5, (bit, zs | bit): 0.5j * sign})


def number_operator(n: int) -> PauliSum:
    acc: dict[tuple[int, int], complex] = {(0, 0): n / 2}
    for p in range(n):
        acc[(0, 1 << p)] = -0.5
    return PauliSum(n, acc)


def fermion_excitation(creators: Iterable[int], annihilators: Iterable[int], n: int) -> PauliSum:
    """JW image of ``a+_{c1} a+_{c2} ... a_{a1} a_{a2} ...`` in the given order."""
    op = PauliSum.identity(n)
    for p in creators:
        op = op * jw_ladder(p, "create", n)
    for p in annihilators:
        op = op * jw_ladder(p, "annihilate", n)
    return op


def jordan_wigner(H: FermionHamiltonian, ordering: str = "blocked") -> PauliSum:
    """Encode ``H`` on ``2 * n_orbitals`` qubits.

    Uses spin-summed excitation operators E_pq = sum_sigma a+_{p sigma} a_{q sigma}:
    H = e_core + sum h_pq E_pq + 1/2 sum (pq|rs) (E_pq E_rs - delta_qr E_ps).
    """
    if ordering != "blocked":
        raise ValueError(f"only blocked spin-orbital ordering is supported, got {ordering!r}")
    norb = H.n_orbitals
    nq = 2 * norb
    if norb == 0:
        return PauliSum.identity(0, H.e_core)
    E = [
        [
            fermion_excitation([p], [q], nq) + fermion_excitation([p + norb], [q + norb], nq)
            for q in range(norb)
        ]
        for p in range(norb)
    ]
    out = PauliSum.identity(nq, H.e_core)
    for p in range(norb):
        for q in range(norb):
            # one-body part with the delta_qr contraction folded in
            k_pq = H.h[p, q] - 0.5 * sum(H.g[p, r, r, q] for r in range(norb))
            if abs(k_pq) > 0:
                out = out + E[p][q] * k_pq
    for p in range(norb):
        for q in range(norb):
            acc: dict[tuple[int, int], complex] = {}
            for r in range(norb):
                for s in range(norb):
                    v = H.g[p, q, r, s]
                    if v == 0.0:
                        continue
                    for key, c in E[r][s].items():
                        acc[key] = acc.get(key, 0) + 0.5 * v * c
            if acc:
                out = out + E[p][q] * PauliSum(nq, acc)
    return out.real() if out.is_hermitian(1e-10) else out
