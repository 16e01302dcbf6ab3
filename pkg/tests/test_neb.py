import warnings

import numpy as np
import pytest
from scipy import ndimage
from scipy.optimize import root

from fastvqe.neb import (
    POTENTIALS,
    DegenerateTangent,
    Harmonic,
    MuellerBrown,
    NebConfig,
    Path,
    ShallowDoubleWell,
    gradient_error,
    interpolate_linear,
    neb_forces,
    optimize_path,
    tangents,
)


class Linear:
    def __init__(self, slope):
        self.slope = np.asarray(slope, dtype=float)

    def energy(self, x):
        return float(self.slope @ np.asarray(x))

    def gradient(self, x):
        return self.slope.copy()


def mountain_pass_saddle(pot, a, b, lo=(-1.6, -0.6), hi=(1.3, 2.1), n=541):
    """Lowest level connecting a and b in the sublevel set on a grid, refined by Newton on grad E = 0."""
    xs = np.linspace(lo[0], hi[0], n)
    ys = np.linspace(lo[1], hi[1], n)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    E = np.vectorize(lambda x, y: pot.energy((x, y)))(X, Y)

    def cell(p):
        return int(np.argmin(abs(xs - p[0]))), int(np.argmin(abs(ys - p[1])))

    ia, ib = cell(a), cell(b)
    low, high = max(E[ia], E[ib]), float(E.max())
    for _ in range(60):
        mid = 0.5 * (low + high)
        lab, _ = ndimage.label(E < mid)
        if lab[ia] and lab[ia] == lab[ib]:
            high = mid
        else:
            low = mid
    band = np.argwhere((E > high - 2.0) & (E < high + 2.0))
    gnorm = [np.linalg.norm(pot.gradient((xs[i], ys[j]))) for i, j in band]
    i, j = band[int(np.argmin(gnorm))]
    sol = root(pot.gradient, [xs[i], ys[j]], tol=1e-14)
    assert sol.success
    return pot.energy(sol.x), sol.x, high


@pytest.fixture(scope="module")
def mb_saddle():
    pot = MuellerBrown()
    e, x, level = mountain_pass_saddle(pot, MuellerBrown.MINIMA["A"], MuellerBrown.MINIMA["B"])
    assert abs(e - level) < 0.05
    return e


class TestPotentials:
    @pytest.mark.parametrize("pot", [MuellerBrown(), Harmonic([0.3, -0.2], [1.0, 4.0]), ShallowDoubleWell()])
    def test_gradients_match_finite_differences(self, pot, rng):
        for _ in range(10):
            x = rng.uniform(-1.0, 1.5, size=2)
            assert gradient_error(pot, x) < 1e-5

    def test_mueller_brown_minima_are_stationary(self):
        pot = MuellerBrown()
        for x in MuellerBrown.MINIMA.values():
            assert np.linalg.norm(pot.gradient(x)) < 1e-6

    def test_registry(self):
        assert isinstance(POTENTIALS["mueller-brown"](), MuellerBrown)
        assert POTENTIALS["harmonic"]().energy([0.0, 0.0]) == 0.0


class TestInterpolation:
    def test_equal_endpoints(self):
        p = interpolate_linear([1.0, 2.0], [1.0, 2.0], 5)
        assert np.all(p.images == [1.0, 2.0])

    def test_midpoint(self):
        p = interpolate_linear([0.0, 2.0], [4.0, -2.0], 3)
        assert np.array_equal(p.images[1], [2.0, 0.0])

    def test_uniform_spacing(self):
        p = interpolate_linear([-0.5, 1.4], [0.6, 0.03], 10)
        d = np.linalg.norm(np.diff(p.images, axis=0), axis=1)
        assert np.max(np.abs(d - d[0])) < 1e-12

    def test_errors(self):
        with pytest.raises(ValueError):
            interpolate_linear([0.0], [0.0, 1.0], 5)
        with pytest.raises(ValueError):
            interpolate_linear([0.0], [1.0], 2)
        with pytest.raises(ValueError):
            Path(np.zeros((2, 2)))


class TestForces:
    def test_linear_potential_uniform_line(self):
        slope = np.array([2.0, -1.0])
        path = interpolate_linear([0.0, 0.0], [1.0, -0.5], 7)
        F, _ = neb_forces(path, Linear(slope))
        assert np.max(np.abs(F)) < 1e-12

    def test_endpoint_forces_zero(self):
        path = interpolate_linear([-0.5, 1.4], [0.6, 0.0], 6)
        F, _ = neb_forces(path, MuellerBrown())
        assert not F[0].any() and not F[-1].any()

    def test_tangent_points_uphill(self):
        R = np.array([[0.0, 0.0], [1.0, 0.1], [2.0, 0.0]])
        t = tangents(R, [0.0, 1.0, 2.0])
        assert np.allclose(t[1], (R[2] - R[1]) / np.linalg.norm(R[2] - R[1]))
        t = tangents(R, [2.0, 1.0, 0.0])
        assert np.allclose(t[1], (R[1] - R[0]) / np.linalg.norm(R[1] - R[0]))

    def test_tangent_at_maximum_leans_to_higher_neighbor(self):
        R = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]])
        t = tangents(R, [0.0, 5.0, 4.0])
        expect = np.array([1.0, 5.0]) / np.hypot(1.0, 5.0)
        assert np.allclose(t[1], expect, atol=1e-14)

    def test_flat_energies_use_bisector(self):
        R = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 2.0]])
        t = tangents(R, [1.0, 1.0, 1.0])
        assert np.allclose(t[1], np.array([1.0, 1.0]) / np.sqrt(2))

    def test_folded_path(self):
        with pytest.raises(DegenerateTangent, match="folds back"):
            tangents(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 0.0]]), [1.0, 1.0, 1.0])

    def test_degenerate_tangent(self):
        path = Path([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0]])
        with pytest.raises(DegenerateTangent):
            neb_forces(path, MuellerBrown())

    def test_spring_force_along_tangent(self):
        path = Path([[0.0, 0.0], [0.2, 0.0], [1.0, 0.0]])
        F, _ = neb_forces(path, Linear([0.0, 0.0]), k_spring=2.0)
        assert np.allclose(F[1], [2.0 * (0.8 - 0.2), 0.0])


class TestOptimize:
    def test_converged_path_unchanged(self):
        path = interpolate_linear([0.0, 0.0], [1.0, 0.0], 5)
        res = optimize_path(path, Linear([1.0, 0.0]))
        assert res.converged and res.steps == 0
        assert np.array_equal(res.path.images, path.images)

    def test_harmonic_path_perpendicular_gradient(self):
        pot = Harmonic([0.0, 0.0], [1.0, 3.0])
        path = interpolate_linear([-1.0, 0.0], [1.0, 0.0], 9)
        path.images[1:-1, 1] += 0.3 * np.sin(np.linspace(0, np.pi, 9))[1:-1]
        res = optimize_path(path, pot, NebConfig(max_force=1e-4))
        assert res.converged
        tau = tangents(res.path.images, res.energies)
        for i in range(1, 8):
            g = pot.gradient(res.path.images[i])
            assert np.max(np.abs(g - (g @ tau[i]) * tau[i])) < 1e-4

    def test_endpoints_fixed(self):
        pot = MuellerBrown()
        path = interpolate_linear(MuellerBrown.MINIMA["A"], MuellerBrown.MINIMA["B"], 11)
        res = optimize_path(path, pot, NebConfig(climbing=True))
        assert np.array_equal(res.path.images[0], path.images[0])
        assert np.array_equal(res.path.images[-1], path.images[-1])
        assert res.energies.max() >= max(res.energies[0], res.energies[-1])

    def test_mueller_brown_climbing_matches_oracle(self, mb_saddle):
        pot = MuellerBrown()
        path = interpolate_linear(MuellerBrown.MINIMA["A"], MuellerBrown.MINIMA["B"], 11)
        res = optimize_path(path, pot, NebConfig(climbing=True))
        assert res.converged and res.max_force < 1e-3
        assert abs(res.energies.max() - mb_saddle) < 1e-3
        assert len(res.profile_csv().splitlines()) == 12

    def test_mueller_brown_k_doubling(self):
        pot = MuellerBrown()
        path = interpolate_linear(MuellerBrown.MINIMA["A"], MuellerBrown.MINIMA["B"], 11)
        a = optimize_path(path, pot, NebConfig(climbing=True, k_spring=0.1))
        b = optimize_path(path, pot, NebConfig(climbing=True, k_spring=0.2))
        assert abs(a.energies.max() - b.energies.max()) < 1e-3

    def test_plain_band_underestimates_barrier(self, mb_saddle):
        pot = MuellerBrown()
        path = interpolate_linear(MuellerBrown.MINIMA["A"], MuellerBrown.MINIMA["B"], 11)
        res = optimize_path(path, pot, NebConfig())
        assert res.converged
        assert res.energies.max() < mb_saddle

    def test_below_endpoint_reported(self):
        pot = ShallowDoubleWell()
        # product endpoint placed off its well bottom
        path = interpolate_linear([-1.0, 0.0], [1.25, 0.0], 9)
        res = optimize_path(path, pot, NebConfig(max_force=5e-2))
        assert res.below_endpoints["product"]
        for i in res.below_endpoints["product"]:
            assert res.energies[i] < res.energies[-1]

    def test_step_limit_warns(self):
        path = interpolate_linear(MuellerBrown.MINIMA["A"], MuellerBrown.MINIMA["B"], 11)
        with pytest.warns(RuntimeWarning, match="NEB stopped"):
            res = optimize_path(path, MuellerBrown(), NebConfig(max_steps=5))
        assert not res.converged and res.steps == 5

    def test_config_validation(self):
        with pytest.raises(ValueError):
            NebConfig(max_force=0.0)

    def test_deterministic(self):
        path = interpolate_linear(MuellerBrown.MINIMA["A"], MuellerBrown.MINIMA["B"], 11)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            a = optimize_path(path, MuellerBrown(), NebConfig(climbing=True))
            b = optimize_path(path, MuellerBrown(), NebConfig(climbing=True))
        assert a.profile_csv() == b.profile_csv()
