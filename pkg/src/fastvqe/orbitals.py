"""Fragment orbital assignment and MP2 frozen-natural-orbital virtual selection."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .hamiltonian import ActiveSpaceSpec, FermionHamiltonian, fock_matrix, fold_core, rotate_orbitals

DENOMINATOR_TOL = 1e-10
DEFAULT_OCC_WINDOW = 3


@dataclass(frozen=True)
class MoCoefficients:
    """Raw MO coefficients ``C[mu, i]`` with an atom -> AO-row partition."""

    C: np.ndarray
    atom_ao_map: Mapping[int, tuple[int, ...]]
    occupied_count: int

    def __post_init__(self):
        C = np.array(self.C, dtype=float)
        if C.ndim != 2:
            raise ValueError(f"coefficients must be a matrix, got shape {C.shape}")
        amap = {int(a): tuple(int(m) for m in rows) for a, rows in self.atom_ao_map.items()}
        owned = sorted(m for rows in amap.values() for m in rows)
        if owned != list(range(C.shape[0])):
            raise ValueError(f"atom_ao_map must partition the {C.shape[0]} AO rows")
        if not 0 <= self.occupied_count <= C.shape[1]:
            raise ValueError(f"occupied_count {self.occupied_count} outside [0, {C.shape[1]}]")
        C.setflags(write=False)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "atom_ao_map", dict(sorted(amap.items())))

    @property
    def atoms(self) -> list[int]:
        return list(self.atom_ao_map)

    @classmethod
    def from_dict(cls, data: Mapping) -> "MoCoefficients":
        try:
            C = np.asarray(data["coefficients"], dtype=float)
            n_ao, n_mo = int(data["n_ao"]), int(data["n_mo"])
            amap = {int(k): v for k, v in data["atom_ao_map"].items()}
            occ = int(data["occupied_count"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed MO coefficient record: {exc}") from None
        if C.shape != (n_ao, n_mo):
            raise ValueError(f"coefficients have shape {C.shape}, header says ({n_ao}, {n_mo})")
        return cls(C, amap, occ)

    @classmethod
    def from_json(cls, path: str | Path) -> "MoCoefficients":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _atom_weights(C: MoCoefficients) -> np.ndarray:
    # rows: atoms in sorted order; columns: occupied orbitals
    occ = np.abs(C.C[:, : C.occupied_count])
    return np.array([occ[list(rows)].sum(axis=0) for rows in C.atom_ao_map.values()]).reshape(
        len(C.atom_ao_map), C.occupied_count
    )


def _check_fragment(C: MoCoefficients, fragment_atoms: Iterable[int]) -> list[int]:
    frag = sorted({int(a) for a in fragment_atoms})
    if not frag:
        raise ValueError("fragment must contain at least one atom")
    unknown = [a for a in frag if a not in C.atom_ao_map]
    if unknown:
        raise ValueError(f"fragment atoms {unknown} not in the atom/AO map")
    return frag


def assignment_weights(C: MoCoefficients, fragment_atoms: Iterable[int]) -> np.ndarray:
    """w_i = sum over fragment atoms a and their AOs mu of |C[mu, i]|, per occupied i."""
    frag = _check_fragment(C, fragment_atoms)
    rows = [m for a in frag for m in C.atom_ao_map[a]]
    return np.abs(C.C[rows, : C.occupied_count]).sum(axis=0)


def orbital_owners(C: MoCoefficients) -> list[int]:
    """Atom with the largest coefficient mass for each occupied orbital (ties: lowest atom)."""
    atoms = C.atoms
    W = _atom_weights(C)
    return [atoms[int(np.argmax(W[:, i]))] for i in range(C.occupied_count)]


def fragment_orbital_count(C: MoCoefficients, fragment_atoms: Iterable[int]) -> int:
    frag = set(_check_fragment(C, fragment_atoms))
    return sum(1 for a in orbital_owners(C) if a in frag)


def select_fragment_orbitals(weights: Sequence[float], n: int) -> list[int]:
    """Indices of the ``n`` largest weights, descending; equal weights keep index order."""
    w = np.asarray(weights, dtype=float)
    if not 0 <= n <= w.size:
        raise ValueError(f"cannot select {n} of {w.size} occupied orbitals")
    order = np.lexsort((np.arange(w.size), -w))
    return [int(i) for i in order[:n]]


@dataclass(frozen=True)
class Mp2Amplitudes:
    """Spin-orbital amplitudes ``t[i, j, a, b]``.

    Spin orbital ``2p`` is alpha and ``2p + 1`` beta of spatial orbital ``occ[p]``
    (or ``virt[p]``); ``eps`` holds the spatial Fock diagonal of every orbital.
    """

    t: np.ndarray
    eps: np.ndarray
    occ: tuple[int, ...]
    virt: tuple[int, ...]

    def correlation_energy(self, H: FermionHamiltonian) -> float:
        anti = _antisymmetrized(H, self.occ, self.virt)
        return 0.25 * float(np.einsum("ijab,ijab->", anti, self.t))


def _spin_orbital_eri(H: FermionHamiltonian, rows: Sequence[int], cols: Sequence[int]) -> np.ndarray:
    """Physicists' <pq|rs> over spin orbitals of ``rows`` (p, q) and ``cols`` (r, s)."""
    r, c = np.asarray(rows), np.asarray(cols)
    # <pq|rs> = (pr|qs)
    spatial = H.g[np.ix_(r, c, r, c)].transpose(0, 2, 1, 3)
    nr, nc = len(r), len(c)
    out = np.zeros((2 * nr, 2 * nr, 2 * nc, 2 * nc))
    for s1 in (0, 1):
        for s2 in (0, 1):
            out[s1::2, s2::2, s1::2, s2::2] = spatial
    return out


def _antisymmetrized(H: FermionHamiltonian, occ: Sequence[int], virt: Sequence[int]) -> np.ndarray:
    v = _spin_orbital_eri(H, occ, virt)
    return v - v.transpose(0, 1, 3, 2)


def mp2_amplitudes(
    H: FermionHamiltonian,
    occ_window: Sequence[int],
    virtuals: Sequence[int],
    reference_occupied: Sequence[int] | None = None,
) -> Mp2Amplitudes:
    """t_ij^ab = <ij||ab> / (e_i + e_j - e_a - e_b) with e the Fock diagonal.

    The Fock matrix is built from ``reference_occupied`` (default: the lowest
    ``n_alpha`` orbitals, doubly occupied).
    """
    occ, virt = [int(i) for i in occ_window], [int(a) for a in virtuals]
    if set(occ) & set(virt):
        raise ValueError(f"orbitals {sorted(set(occ) & set(virt))} are both occupied and virtual")
    for p in occ + virt:
        if not 0 <= p < H.n_orbitals:
            raise ValueError(f"orbital index {p} outside [0, {H.n_orbitals})")
    eps = np.diag(fock_matrix(H, reference_occupied)).copy()
    e_o = np.repeat(eps[occ], 2)
    e_v = np.repeat(eps[virt], 2)
    den = e_o[:, None, None, None] + e_o[None, :, None, None] - e_v[None, None, :, None] - e_v[None, None, None, :]
    if den.size and np.min(np.abs(den)) < DENOMINATOR_TOL:
        raise ValueError("degenerate occupied/virtual orbital energies give a vanishing MP2 denominator")
    t = _antisymmetrized(H, occ, virt) / den if den.size else np.zeros(den.shape)
    return Mp2Amplitudes(t, eps, tuple(occ), tuple(virt))


@dataclass
class FnoSelection:
    d: np.ndarray
    eigenvalues: np.ndarray
    rotation: np.ndarray
    selected: list[int] = field(default_factory=list)
    virtuals: tuple[int, ...] = ()


def fno_density(t: Mp2Amplitudes | np.ndarray, conventional: bool = False) -> FnoSelection:
    """Virtual density d_ab = sum_{cij} t_ij^{ac} t_ij^{cb} and its eigendecomposition.

    ``conventional`` switches to t_ij^{ac} t_ij^{bc}. For ``Mp2Amplitudes`` the
    spin-orbital density is summed over spin into the spatial virtual space.
    Eigenpairs are ordered by descending ``|eigenvalue|``.
    """
    raw = t.t if isinstance(t, Mp2Amplitudes) else np.asarray(t, dtype=float)
    if raw.ndim != 4:
        raise ValueError(f"amplitudes must be a 4-index tensor, got shape {raw.shape}")
    if conventional:
        d = np.einsum("ijac,ijbc->ab", raw, raw)
    else:
        d = np.einsum("ijac,ijcb->ab", raw, raw)
    virtuals: tuple[int, ...] = ()
    if isinstance(t, Mp2Amplitudes):
        d = d[0::2, 0::2] + d[1::2, 1::2]
        virtuals = t.virt
    d = 0.5 * (d + d.T)
    w, V = np.linalg.eigh(d)
    order = np.lexsort((np.arange(w.size), -np.abs(w)))
    return FnoSelection(d, w[order], V[:, order], [], virtuals)


def select_fno_virtuals(sel: FnoSelection, count: int) -> FnoSelection:
    """Keep the ``count`` natural virtuals with the largest ``|eigenvalue|``."""
    if not 0 <= count <= sel.eigenvalues.size:
        raise ValueError(f"cannot keep {count} of {sel.eigenvalues.size} virtuals")
    return FnoSelection(sel.d, sel.eigenvalues, sel.rotation, list(range(count)), sel.virtuals)


@dataclass
class ActiveSpaceReport:
    weights: list[float]
    owners: list[int]
    fragment_count: int
    fragment_orbitals: list[int]
    occupied_window: list[int]
    fno_eigenvalues: list[float]
    n_virtuals: int
    spec: ActiveSpaceSpec

    def to_dict(self) -> dict:
        return {
            "weights": self.weights,
            "f_i": self.owners,
            "n": self.fragment_count,
            "fragment_orbitals": self.fragment_orbitals,
            "occupied_window": self.occupied_window,
            "fno_eigenvalues": self.fno_eigenvalues,
            "n_virtuals": self.n_virtuals,
            "frozen_core": list(self.spec.frozen_core),
            "active": list(self.spec.active),
            "n_active_electrons": self.spec.n_active_electrons,
        }


def build_active_space(
    H: FermionHamiltonian,
    C: MoCoefficients,
    fragment_atoms: Iterable[int],
    n_virtuals: int,
    n_occ_window: int | None = None,
    conventional_density: bool = False,
) -> tuple[FermionHamiltonian, ActiveSpaceReport]:
    """Fragment occupied orbitals plus MP2 natural virtuals, folded to an active Hamiltonian.

    The ``n`` fragment orbitals are picked by weight; of those, the ``n_occ_window``
    highest in Fock-diagonal energy form the correlated occupied window (default:
    ``min(3, n)``). All other
    occupied orbitals are frozen and folded into the core.
    """
    if H.n_alpha != H.n_beta:
        raise ValueError("active-space construction requires a closed-shell reference")
    n_occ = H.n_alpha
    if C.occupied_count != n_occ:
        raise ValueError(f"MO file has {C.occupied_count} occupied orbitals, Hamiltonian has {n_occ}")
    if C.C.shape[1] != H.n_orbitals:
        raise ValueError(f"MO file has {C.C.shape[1]} orbitals, Hamiltonian has {H.n_orbitals}")
    weights = assignment_weights(C, fragment_atoms)
    owners = orbital_owners(C)
    n = fragment_orbital_count(C, fragment_atoms)
    frag = select_fragment_orbitals(weights, n)
    eps = np.diag(fock_matrix(H))
    window_size = min(DEFAULT_OCC_WINDOW, n) if n_occ_window is None else n_occ_window
    if not 0 <= window_size <= n:
        raise ValueError(f"occupied window {window_size} exceeds the {n} fragment orbitals")
    window = sorted(sorted(frag, key=lambda i: (-eps[i], i))[:window_size])
    virt = list(range(n_occ, H.n_orbitals))
    if not 0 <= n_virtuals <= len(virt):
        raise ValueError(f"cannot keep {n_virtuals} of {len(virt)} virtuals")
    if window and virt:
        sel = fno_density(mp2_amplitudes(H, window, virt), conventional=conventional_density)
    else:
        sel = FnoSelection(np.zeros((len(virt),) * 2), np.zeros(len(virt)), np.eye(len(virt)), [], tuple(virt))
    sel = select_fno_virtuals(sel, n_virtuals)
    U = np.eye(H.n_orbitals)
    U[np.ix_(virt, virt)] = sel.rotation
    rotated = rotate_orbitals(H, U) if virt else H
    spec = ActiveSpaceSpec(
        frozen_core=tuple(i for i in range(n_occ) if i not in window),
        active=tuple(window) + tuple(virt[k] for k in sel.selected),
        n_active_electrons=2 * len(window),
    )
    report = ActiveSpaceReport(
        weights=[float(x) for x in weights],
        owners=owners,
        fragment_count=n,
        fragment_orbitals=frag,
        occupied_window=window,
        fno_eigenvalues=[float(x) for x in sel.eigenvalues],
        n_virtuals=n_virtuals,
        spec=spec,
    )
    return fold_core(rotated, spec), report
