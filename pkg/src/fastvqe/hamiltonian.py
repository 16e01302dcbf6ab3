"""Active-space electronic Hamiltonians: FCIDUMP I/O, reference energies, core folding."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

SYMMETRY_TOL = 1e-12
DUPLICATE_TOL = 1e-10


class FcidumpError(ValueError):
    """Raised for malformed FCIDUMP input; the message names the offending line."""


@dataclass(frozen=True, eq=False)
class FermionHamiltonian:
    """Spin-free electronic Hamiltonian over spatial orbitals.

    ``g`` is stored in chemists' notation, ``g[p, q, r, s] = (pq|rs)``.
    """

    e_core: float
    h: np.ndarray
    g: np.ndarray
    n_alpha: int
    n_beta: int

    def __post_init__(self):
        h = np.array(self.h, dtype=float)
        g = np.array(self.g, dtype=float)
        n = h.shape[0] if h.ndim == 2 else -1
        if h.shape != (n, n):
            raise ValueError(f"one-body matrix must be square, got {h.shape}")
        if g.shape != (n, n, n, n):
            raise ValueError(f"two-body tensor must be {(n,) * 4}, got {g.shape}")
        if n and np.max(np.abs(h - h.T)) > SYMMETRY_TOL:
            raise ValueError("one-body matrix is not symmetric")
        if n and _symmetry_defect(g) > SYMMETRY_TOL:
            raise ValueError("two-body tensor lacks 8-fold permutational symmetry")
        if self.n_alpha < 0 or self.n_beta < 0 or self.n_alpha > n or self.n_beta > n:
            raise ValueError(
                f"electron counts ({self.n_alpha}, {self.n_beta}) do not fit {n} orbitals"
            )
        h.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "e_core", float(self.e_core))

    @property
    def n_orbitals(self) -> int:
        return self.h.shape[0]

    @property
    def n_electrons(self) -> int:
        return self.n_alpha + self.n_beta

    @property
    def n_spin_orbitals(self) -> int:
        return 2 * self.n_orbitals

    def hf_occupation(self) -> tuple[list[int], list[int]]:
        """Aufbau occupation in orbital index order."""
        return list(range(self.n_alpha)), list(range(self.n_beta))

    def reference_bits(self) -> list[int]:
        """Reference determinant as a qubit occupation list (alpha block, then beta)."""
        n = self.n_orbitals
        bits = [0] * (2 * n)
        for p in range(self.n_alpha):
            bits[p] = 1
        for p in range(self.n_beta):
            bits[n + p] = 1
        return bits

    def allclose(self, other: "FermionHamiltonian", atol: float = 1e-14) -> bool:
        return (
            self.n_orbitals == other.n_orbitals
            and self.n_alpha == other.n_alpha
            and self.n_beta == other.n_beta
            and abs(self.e_core - other.e_core) <= atol
            and np.allclose(self.h, other.h, rtol=0, atol=atol)
            and np.allclose(self.g, other.g, rtol=0, atol=atol)
        )


@dataclass(frozen=True)
class ActiveSpaceSpec:
    frozen_core: tuple[int, ...]
    active: tuple[int, ...]
    n_active_electrons: int

    def __post_init__(self):
        object.__setattr__(self, "frozen_core", tuple(int(i) for i in self.frozen_core))
        object.__setattr__(self, "active", tuple(int(i) for i in self.active))

    def validate(self, H: FermionHamiltonian) -> None:
        frozen, active = set(self.frozen_core), set(self.active)
        if len(frozen) != len(self.frozen_core) or len(active) != len(self.active):
            raise ValueError("repeated orbital index in active-space specification")
        if frozen & active:
            raise ValueError(f"orbitals {sorted(frozen & active)} are both frozen and active")
        for i in frozen | active:
            if not 0 <= i < H.n_orbitals:
                raise ValueError(f"orbital index {i} outside [0, {H.n_orbitals})")
        n_frozen = len(self.frozen_core)
        n_a, n_b = H.n_alpha - n_frozen, H.n_beta - n_frozen
        if n_a < 0 or n_b < 0 or n_a + n_b != self.n_active_electrons:
            raise ValueError(
                f"{self.n_active_electrons} active electrons inconsistent with "
                f"{H.n_electrons} total and {n_frozen} doubly occupied frozen orbitals"
            )
        if n_a > len(self.active) or n_b > len(self.active):
            raise ValueError("active electrons do not fit in the active orbitals")


def _symmetry_defect(g: np.ndarray) -> float:
    perms = [(1, 0, 2, 3), (0, 1, 3, 2), (2, 3, 0, 1)]
    return max(float(np.max(np.abs(g - g.transpose(p)))) for p in perms)


def symmetrize_eri(g: np.ndarray) -> np.ndarray:
    """Average a two-body tensor over the 8 chemists'-notation permutations."""
    g = 0.5 * (g + g.transpose(1, 0, 2, 3))
    g = 0.5 * (g + g.transpose(0, 1, 3, 2))
    return 0.5 * (g + g.transpose(2, 3, 0, 1))


def _eri_images(i: int, j: int, k: int, l: int) -> set[tuple[int, int, int, int]]:
    return {
        (i, j, k, l), (j, i, k, l), (i, j, l, k), (j, i, l, k),
        (k, l, i, j), (l, k, i, j), (k, l, j, i), (l, k, j, i),
    }


_HEADER_KEY = re.compile(r"([A-Za-z0-9_]+)\s*=\s*([^=]*?)(?=,?\s*[A-Za-z0-9_]+\s*=|$)", re.S)


def _parse_header(header: str) -> dict[str, str]:
    body = re.sub(r"^\s*&FCI", "", header, flags=re.I)
    body = re.sub(r"(&END|/)\s*$", "", body.strip(), flags=re.I)
    return {k.upper(): v.strip().rstrip(",").strip() for k, v in _HEADER_KEY.findall(body)}


def parse_fcidump(text: str) -> FermionHamiltonian:
    """Parse FCIDUMP text (spatial orbitals, restricted occupation).

    Integral records use 1-based indices; ``i j 0 0`` is a one-body element and
    ``0 0 0 0`` the core energy. Symmetry-equivalent duplicates must agree to
    ``1e-10``.
    """
    lines = text.splitlines()
    if not lines or not lines[0].lstrip().upper().startswith("&FCI"):
        raise FcidumpError("line 1: missing '&FCI' namelist header")
    end = None
    for idx, line in enumerate(lines):
        stripped = line.strip().upper()
        if stripped.endswith("&END") or stripped == "/" or stripped.endswith("/"):
            end = idx
            break
    if end is None:
        raise FcidumpError("header is not terminated by '&END' or '/'")
    fields = _parse_header("\n".join(lines[: end + 1]))
    try:
        norb = int(fields["NORB"])
        nelec = int(fields["NELEC"])
        ms2 = int(fields.get("MS2", "0"))
    except KeyError as exc:
        raise FcidumpError(f"line 1: header lacks {exc.args[0]}") from None
    except ValueError as exc:
        raise FcidumpError(f"line 1: bad header value ({exc})") from None
    if norb < 0 or nelec < 0 or (nelec + ms2) % 2 or abs(ms2) > nelec:
        raise FcidumpError(f"line 1: inconsistent NELEC={nelec}, MS2={ms2}")
    n_alpha, n_beta = (nelec + ms2) // 2, (nelec - ms2) // 2

    h = np.zeros((norb, norb))
    g = np.zeros((norb, norb, norb, norb))
    e_core = 0.0
    seen: dict[tuple[int, ...], float] = {}
    for lineno in range(end + 1, len(lines)):
        raw = lines[lineno].strip()
        if not raw:
            continue
        parts = raw.split()
        where = f"line {lineno + 1}"
        if len(parts) != 5:
            raise FcidumpError(f"{where}: expected 'value i j k l', got {raw!r}")
        try:
            value = float(parts[0].replace("D", "E").replace("d", "e"))
            i, j, k, l = (int(x) for x in parts[1:])
        except ValueError:
            raise FcidumpError(f"{where}: unparseable record {raw!r}") from None
        if any(x < 0 or x > norb for x in (i, j, k, l)):
            raise FcidumpError(f"{where}: index out of range 1..{norb} in {raw!r}")
        if i == j == k == l == 0:
            key: tuple[int, ...] = ()
            targets = [()]
        elif k == l == 0:
            if i == 0 or j == 0:
                raise FcidumpError(f"{where}: orbital-energy records are not supported")
            key = tuple(sorted((i - 1, j - 1)))
            targets = [(i - 1, j - 1), (j - 1, i - 1)]
        else:
            if 0 in (i, j, k, l):
                raise FcidumpError(f"{where}: partial zero indices in {raw!r}")
            images = _eri_images(i - 1, j - 1, k - 1, l - 1)
            key = min(images)
            targets = list(images)
        if key in seen and abs(seen[key] - value) > DUPLICATE_TOL:
            raise FcidumpError(
                f"{where}: conflicting duplicate record (previous value {seen[key]!r})"
            )
        seen[key] = value
        if key == ():
            e_core = value
        elif len(key) == 2:
            for p, q in targets:
                h[p, q] = value
        else:
            for idx4 in targets:
                g[idx4] = value
    return FermionHamiltonian(e_core, h, g, n_alpha, n_beta)


def read_fcidump(path: str | Path) -> FermionHamiltonian:
    return parse_fcidump(Path(path).read_text())


def serialize_fcidump(H: FermionHamiltonian, tol: float = 0.0) -> str:
    """Write canonical unique records with full ``repr`` precision."""
    n = H.n_orbitals
    out = [
        f" &FCI NORB={n},NELEC={H.n_electrons},MS2={H.n_alpha - H.n_beta},",
        "  ORBSYM=" + "1," * n,
        "  ISYM=1,",
        " &END",
    ]
    for i in range(n):
        for j in range(i + 1):
            ij = i * (i + 1) // 2 + j
            for k in range(n):
                for l in range(k + 1):
                    if k * (k + 1) // 2 + l > ij:
                        continue
                    v = H.g[i, j, k, l]
                    if abs(v) > tol:
                        out.append(f" {float(v)!r} {i + 1} {j + 1} {k + 1} {l + 1}")
    for i in range(n):
        for j in range(i + 1):
            v = H.h[i, j]
            if abs(v) > tol:
                out.append(f" {float(v)!r} {i + 1} {j + 1} 0 0")
    out.append(f" {float(H.e_core)!r} 0 0 0 0")
    return "\n".join(out) + "\n"


def write_fcidump(H: FermionHamiltonian, path: str | Path) -> None:
    Path(path).write_text(serialize_fcidump(H))


def _check_occ(H: FermionHamiltonian, occ: Iterable[int], label: str) -> list[int]:
    occ = sorted(int(p) for p in occ)
    if len(set(occ)) != len(occ):
        raise ValueError(f"{label} occupation has repeated orbitals")
    for p in occ:
        if not 0 <= p < H.n_orbitals:
            raise ValueError(f"{label} orbital {p} outside [0, {H.n_orbitals})")
    return occ


def hf_energy(
    H: FermionHamiltonian, occ_alpha: Iterable[int], occ_beta: Iterable[int]
) -> float:
    """Energy of a single determinant with the given spatial-orbital occupations."""
    a = _check_occ(H, occ_alpha, "alpha")
    b = _check_occ(H, occ_beta, "beta")
    if len(a) != H.n_alpha or len(b) != H.n_beta:
        raise ValueError(
            f"occupation sizes ({len(a)}, {len(b)}) != electron counts "
            f"({H.n_alpha}, {H.n_beta})"
        )
    g = H.g
    e = H.e_core + sum(H.h[p, p] for p in a) + sum(H.h[p, p] for p in b)
    J = np.einsum("ppqq->pq", g)
    K = np.einsum("pqqp->pq", g)
    e += 0.5 * sum(J[p, q] - K[p, q] for p in a for q in a)
    e += 0.5 * sum(J[p, q] - K[p, q] for p in b for q in b)
    e += sum(J[p, q] for p in a for q in b)
    return float(e)


def fock_matrix(H: FermionHamiltonian, occupied: Sequence[int] | None = None) -> np.ndarray:
    """Closed-shell Fock matrix built from the doubly occupied orbitals."""
    if occupied is None:
        if H.n_alpha != H.n_beta:
            raise ValueError("Fock matrix requires a closed-shell reference")
        occupied = range(H.n_alpha)
    occ = list(occupied)
    g = H.g
    return H.h + 2.0 * np.einsum("pqcc->pq", g[:, :, occ][:, :, :, occ]) - np.einsum(
        "pccq->pq", g[:, occ][:, :, occ]
    )


def fold_core(H: FermionHamiltonian, spec: ActiveSpaceSpec) -> FermionHamiltonian:
    """Fold doubly occupied frozen orbitals into the core energy and one-body term."""
    spec.validate(H)
    core = list(spec.frozen_core)
    act = list(spec.active)
    if not core:
        if act == list(range(H.n_orbitals)):
            return H
        return FermionHamiltonian(
            H.e_core, H.h[np.ix_(act, act)], H.g[np.ix_(act, act, act, act)],
            H.n_alpha, H.n_beta,
        )
    g = H.g
    e_core = H.e_core
    e_core += 2.0 * sum(H.h[c, c] for c in core)
    e_core += sum(2.0 * g[c, c, d, d] - g[c, d, d, c] for c in core for d in core)
    veff = 2.0 * np.einsum("pqcc->pq", g[:, :, core][:, :, :, core]) - np.einsum(
        "pccq->pq", g[:, core][:, :, core]
    )
    h_act = (H.h + veff)[np.ix_(act, act)]
    g_act = g[np.ix_(act, act, act, act)]
    n_frozen = len(core)
    return FermionHamiltonian(
        e_core, 0.5 * (h_act + h_act.T), g_act, H.n_alpha - n_frozen, H.n_beta - n_frozen
    )


def rotate_orbitals(H: FermionHamiltonian, U: np.ndarray) -> FermionHamiltonian:
    """Transform integrals to new orbitals ``phi'_k = sum_p U[p, k] phi_p``.

    ``U`` must be square and orthogonal; electron counts are kept.
    """
    U = np.asarray(U, dtype=float)
    n = H.n_orbitals
    if U.shape != (n, n):
        raise ValueError(f"rotation must be {n}x{n}, got {U.shape}")
    if np.max(np.abs(U.T @ U - np.eye(n)), initial=0.0) > 1e-10:
        raise ValueError("orbital rotation is not orthogonal")
    h = U.T @ H.h @ U
    g = np.einsum("pqrs,pi,qj,rk,sl->ijkl", H.g, U, U, U, U, optimize=True)
    return FermionHamiltonian(H.e_core, 0.5 * (h + h.T), symmetrize_eri(g), H.n_alpha, H.n_beta)
