"""Nudged elastic band path optimization over analytic potentials."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np


class Potential(Protocol):
    def energy(self, x: np.ndarray) -> float: ...

    def gradient(self, x: np.ndarray) -> np.ndarray: ...


class MuellerBrown:
    """Two-dimensional Mueller-Brown surface with its standard parameters."""

    A = np.array([-200.0, -100.0, -170.0, 15.0])
    a = np.array([-1.0, -1.0, -6.5, 0.7])
    b = np.array([0.0, 0.0, 11.0, 0.6])
    c = np.array([-10.0, -10.0, -6.5, 0.7])
    x0 = np.array([1.0, 0.0, -0.5, -1.0])
    y0 = np.array([0.0, 0.5, 1.5, 1.0])

    # approximate locations of the three minima
    MINIMA = {
        "A": np.array([-0.558223634633024, 1.441725841804669]),
        "B": np.array([0.623499404930877, 0.028037758528686]),
        "C": np.array([-0.050010822998206, 0.466694104871972]),
    }

    def _terms(self, x: np.ndarray):
        dx, dy = x[0] - self.x0, x[1] - self.y0
        e = self.A * np.exp(self.a * dx**2 + self.b * dx * dy + self.c * dy**2)
        return dx, dy, e

    def energy(self, x) -> float:
        return float(self._terms(np.asarray(x, dtype=float))[2].sum())

    def gradient(self, x) -> np.ndarray:
        dx, dy, e = self._terms(np.asarray(x, dtype=float))
        return np.array([
            np.sum(e * (2 * self.a * dx + self.b * dy)),
            np.sum(e * (self.b * dx + 2 * self.c * dy)),
        ])


@dataclass
class Harmonic:
    """E(x) = 1/2 sum_k stiffness_k (x_k - center_k)^2."""

    center: np.ndarray
    stiffness: np.ndarray

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        self.stiffness = np.broadcast_to(np.asarray(self.stiffness, dtype=float), self.center.shape).copy()

    def energy(self, x) -> float:
        d = np.asarray(x, dtype=float) - self.center
        return float(0.5 * np.sum(self.stiffness * d * d))

    def gradient(self, x) -> np.ndarray:
        return self.stiffness * (np.asarray(x, dtype=float) - self.center)


@dataclass
class ShallowDoubleWell:
    """Barrier along x between a deep well at x=-1 and a shallow one at x=+1, harmonic in y.

    E = height (x^2 - 1)^2 - tilt x + 1/2 stiffness y^2
    """

    height: float = 1.0
    tilt: float = -0.2
    stiffness: float = 2.0

    def energy(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(self.height * (x[0] ** 2 - 1) ** 2 - self.tilt * x[0] + 0.5 * self.stiffness * x[1] ** 2)

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.array([4 * self.height * x[0] * (x[0] ** 2 - 1) - self.tilt, self.stiffness * x[1]])


POTENTIALS = {"mueller-brown": MuellerBrown, "harmonic": lambda: Harmonic(np.zeros(2), np.ones(2))}


def gradient_error(potential: Potential, x, step: float = 1e-6) -> float:
    """Largest deviation between the analytic gradient and central differences."""
    x = np.asarray(x, dtype=float)
    fd = np.empty_like(x)
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = step
        fd[k] = (potential.energy(x + e) - potential.energy(x - e)) / (2 * step)
    return float(np.max(np.abs(fd - potential.gradient(x))))


class DegenerateTangent(ValueError):
    pass


@dataclass
class Path:
    """Chain of images; the first and last are fixed."""

    images: np.ndarray

    def __post_init__(self):
        self.images = np.array(self.images, dtype=float)
        if self.images.ndim != 2 or self.images.shape[0] < 3:
            raise ValueError(f"a path needs at least 3 images of equal dimension, got shape {self.images.shape}")

    @property
    def n_images(self) -> int:
        return self.images.shape[0]

    def copy(self) -> "Path":
        return Path(self.images.copy())


def interpolate_linear(reactant, product, n_images: int) -> Path:
    r, p = np.asarray(reactant, dtype=float), np.asarray(product, dtype=float)
    if r.shape != p.shape or r.ndim != 1:
        raise ValueError(f"endpoint shapes differ: {r.shape} vs {p.shape}")
    if n_images < 3:
        raise ValueError("n_images must be at least 3")
    s = np.linspace(0.0, 1.0, n_images)[:, None]
    return Path((1 - s) * r + s * p)


def tangents(images: np.ndarray, energies: Sequence[float]) -> np.ndarray:
    """Unit uphill-neighbor tangents at interior images (rows 0 and -1 are zero).

    At extrema the two segments are blended, weighted toward the higher
    neighbor; where all three energies are equal the bisector is used.
    """
    R = np.asarray(images, dtype=float)
    V = np.asarray(energies, dtype=float)
    tau = np.zeros_like(R)
    for i in range(1, len(R) - 1):
        t_plus, t_minus = R[i + 1] - R[i], R[i] - R[i - 1]
        if np.linalg.norm(t_plus) == 0.0 or np.linalg.norm(t_minus) == 0.0:
            raise DegenerateTangent(f"image {i} coincides with a neighbor")
        vp, v, vm = V[i + 1], V[i], V[i - 1]
        if vp > v > vm:
            t = t_plus
        elif vp < v < vm:
            t = t_minus
        else:
            d_max = max(abs(vp - v), abs(vm - v))
            d_min = min(abs(vp - v), abs(vm - v))
            t = t_plus * d_max + t_minus * d_min if vp > vm else t_plus * d_min + t_minus * d_max
        norm = np.linalg.norm(t)
        if norm == 0.0:
            # flat energies: bisect the two segments
            t = t_plus / np.linalg.norm(t_plus) + t_minus / np.linalg.norm(t_minus)
            norm = np.linalg.norm(t)
        if norm < 1e-14:
            raise DegenerateTangent(f"tangent at image {i} vanishes (path folds back)")
        tau[i] = t / norm
    return tau


def neb_forces(
    path: Path, potential: Potential, k_spring: float = 0.1, climbing: bool = False
) -> tuple[np.ndarray, np.ndarray]:
    """Projected NEB forces per image and the image energies.

    Interior force: perpendicular part of -grad E plus the spring force
    k (|R+ - R| - |R - R-|) along the tangent. With ``climbing`` the highest
    interior image instead feels -grad E with its tangential part inverted.
    """
    R = path.images
    V = np.array([potential.energy(x) for x in R])
    tau = tangents(R, V)
    F = np.zeros_like(R)
    top = 1 + int(np.argmax(V[1:-1]))
    for i in range(1, len(R) - 1):
        g = potential.gradient(R[i])
        g_par = np.dot(g, tau[i]) * tau[i]
        if climbing and i == top:
            F[i] = -g + 2 * g_par
            continue
        spring = k_spring * (np.linalg.norm(R[i + 1] - R[i]) - np.linalg.norm(R[i] - R[i - 1]))
        F[i] = -(g - g_par) + spring * tau[i]
    return F, V


@dataclass
class NebConfig:
    max_force: float = 1e-3
    k_spring: float = 0.1
    max_steps: int = 20000
    climbing: bool = False
    dt: float = 1e-3
    dt_max: float = 1e-2
    max_step: float = 0.05

    def __post_init__(self):
        if self.max_force <= 0 or self.k_spring < 0 or self.max_steps < 0:
            raise ValueError("max_force must be positive, k_spring and max_steps non-negative")


@dataclass
class NebResult:
    path: Path
    energies: np.ndarray
    converged: bool
    steps: int
    max_force: float
    below_endpoints: dict[str, list[int]] = field(default_factory=dict)

    def profile_csv(self) -> str:
        return "image,energy\n" + "".join(f"{i},{float(e)!r}\n" for i, e in enumerate(self.energies))


def _below(V: np.ndarray) -> dict[str, list[int]]:
    interior = range(1, len(V) - 1)
    return {
        "reactant": [i for i in interior if V[i] < V[0]],
        "product": [i for i in interior if V[i] < V[-1]],
    }


def optimize_path(path: Path, potential: Potential, config: NebConfig | None = None) -> NebResult:
    """Relax interior images with FIRE until every force component is below ``max_force``.

    Interior images lying below an endpoint are reported in ``below_endpoints``.
    """
    cfg = config or NebConfig()
    p = path.copy()
    v = np.zeros_like(p.images)
    dt, alpha, since_neg = cfg.dt, 0.1, 0
    F, V = neb_forces(p, potential, cfg.k_spring, cfg.climbing)
    fmax = float(np.max(np.abs(F)))
    steps = 0
    while fmax >= cfg.max_force and steps < cfg.max_steps:
        steps += 1
        power = float(np.sum(F * v))
        if power > 0:
            fn = np.linalg.norm(F)
            v = (1 - alpha) * v + alpha * np.linalg.norm(v) * F / fn
            since_neg += 1
            if since_neg > 5:
                dt = min(dt * 1.1, cfg.dt_max)
                alpha *= 0.99
        else:
            v[:] = 0.0
            dt *= 0.5
            alpha, since_neg = 0.1, 0
        v += dt * F
        step = dt * v
        longest = np.max(np.linalg.norm(step, axis=1))
        if longest > cfg.max_step:
            step *= cfg.max_step / longest
        step[0] = step[-1] = 0.0
        p.images += step
        F, V = neb_forces(p, potential, cfg.k_spring, cfg.climbing)
        fmax = float(np.max(np.abs(F)))
    converged = fmax < cfg.max_force
    if not converged:
        warnings.warn(f"NEB stopped after {steps} steps with max force {fmax:.3e}", RuntimeWarning, stacklevel=2)
    below = _below(V)
    return NebResult(p, V, converged, steps, fmax, below)
