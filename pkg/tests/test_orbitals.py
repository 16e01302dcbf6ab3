import json

import numpy as np
import pytest

from conftest import FCI_REFERENCE, fixture_path, load, random_hamiltonian
from fastvqe.exact import casci_ground
from fastvqe.hamiltonian import ActiveSpaceSpec, FermionHamiltonian, fock_matrix, fold_core, rotate_orbitals
from fastvqe.orbitals import (
    Mp2Amplitudes,
    MoCoefficients,
    assignment_weights,
    build_active_space,
    fno_density,
    fragment_orbital_count,
    mp2_amplitudes,
    orbital_owners,
    select_fno_virtuals,
    select_fragment_orbitals,
)


@pytest.fixture(scope="module")
def mo10():
    return MoCoefficients.from_json(fixture_path("h10_local_mo.json"))


@pytest.fixture(scope="module")
def h10():
    return load("h10_local")


def identity_mo():
    return MoCoefficients(np.eye(2), {0: [0], 1: [1]}, 2)


class TestMoCoefficients:
    def test_partition_enforced(self):
        with pytest.raises(ValueError, match="partition"):
            MoCoefficients(np.eye(2), {0: [0]}, 2)
        with pytest.raises(ValueError, match="partition"):
            MoCoefficients(np.eye(2), {0: [0, 1], 1: [1]}, 2)

    def test_from_dict_shape_check(self):
        with pytest.raises(ValueError, match="header"):
            MoCoefficients.from_dict(
                {"n_ao": 3, "n_mo": 2, "occupied_count": 1, "coefficients": [[1, 0], [0, 1]], "atom_ao_map": {"0": [0, 1]}}
            )

    def test_from_dict_missing_key(self):
        with pytest.raises(ValueError, match="malformed"):
            MoCoefficients.from_dict({"n_ao": 2})

    def test_json_round_trip(self, mo10):
        raw = json.loads(fixture_path("h10_local_mo.json").read_text())
        assert np.array_equal(mo10.C, np.array(raw["coefficients"]))
        assert mo10.atoms == list(range(10))


class TestWeights:
    def test_identity(self):
        assert list(assignment_weights(identity_mo(), {0})) == [1.0, 0.0]

    def test_negated_coefficients(self, mo10):
        neg = MoCoefficients(-mo10.C, mo10.atom_ao_map, mo10.occupied_count)
        assert np.array_equal(assignment_weights(neg, [0, 1]), assignment_weights(mo10, [0, 1]))

    def test_column_sign_flips(self, mo10, rng):
        signs = rng.choice([-1.0, 1.0], size=mo10.C.shape[1])
        flipped = MoCoefficients(mo10.C * signs, mo10.atom_ao_map, mo10.occupied_count)
        assert np.array_equal(assignment_weights(flipped, [2, 3, 4]), assignment_weights(mo10, [2, 3, 4]))

    def test_matches_double_loop(self, mo10):
        frag = [0, 1, 2, 3, 4]
        expect = []
        for i in range(mo10.occupied_count):
            total = 0.0
            for a in frag:
                for mu in mo10.atom_ao_map[a]:
                    total += abs(mo10.C[mu, i])
            expect.append(total)
        assert np.allclose(assignment_weights(mo10, frag), expect, rtol=0, atol=1e-14)

    def test_empty_fragment(self, mo10):
        with pytest.raises(ValueError, match="at least one atom"):
            assignment_weights(mo10, [])

    def test_unknown_atom(self, mo10):
        with pytest.raises(ValueError, match="not in the atom"):
            assignment_weights(mo10, [42])


class TestFragmentCount:
    def test_identity(self):
        assert fragment_orbital_count(identity_mo(), {0}) == 1

    def test_all_atoms(self, mo10):
        assert fragment_orbital_count(mo10, mo10.atoms) == mo10.occupied_count

    def test_split_goes_to_larger_share(self):
        C = np.array([[0.6, 0.0], [0.4, 1.0]])
        mo = MoCoefficients(C, {0: [0], 1: [1]}, 2)
        assert orbital_owners(mo) == [0, 1]
        assert fragment_orbital_count(mo, {0}) == 1
        assert fragment_orbital_count(mo, {1}) == 1

    def test_tie_goes_to_lowest_atom(self):
        C = np.array([[0.5], [0.5]])
        assert orbital_owners(MoCoefficients(C, {0: [0], 1: [1]}, 1)) == [0]


class TestSelectFragment:
    def test_examples(self):
        assert select_fragment_orbitals([3, 1, 2], 2) == [0, 2]
        assert select_fragment_orbitals([1, 1], 1) == [0]
        assert select_fragment_orbitals([1, 2], 0) == []

    def test_too_many(self):
        with pytest.raises(ValueError):
            select_fragment_orbitals([1, 2], 3)

    def test_ties_resolved_by_index(self):
        assert select_fragment_orbitals([2, 5, 2, 5, 2], 4) == [1, 3, 0, 2]


class TestMp2:
    def test_zero_eri_zero_amplitudes(self):
        H = FermionHamiltonian(0.0, np.diag([-1.0, 0.5, 1.0]), np.zeros((3,) * 4), 1, 1)
        t = mp2_amplitudes(H, [0], [1, 2])
        assert not t.t.any()

    def test_two_orbital_hand_value(self, h2):
        t = mp2_amplitudes(h2, [0], [1])
        F = fock_matrix(h2)
        hand = h2.g[0, 1, 0, 1] / (2 * F[0, 0] - 2 * F[1, 1])
        # spin orbitals: 0 alpha, 1 beta
        assert t.t[0, 1, 0, 1] == pytest.approx(hand, abs=1e-14)
        assert t.t[0, 1, 1, 0] == pytest.approx(-hand, abs=1e-14)
        assert t.t[0, 0].sum() == 0.0
        assert np.count_nonzero(np.abs(t.t) > 1e-15) == 4

    def test_symmetry_and_sign_of_energy(self, water):
        t = mp2_amplitudes(water, [1, 2], [3, 4, 5])
        assert np.allclose(t.t, t.t.transpose(1, 0, 3, 2), atol=1e-14)
        assert np.allclose(t.t, -t.t.transpose(1, 0, 2, 3), atol=1e-14)
        assert t.correlation_energy(water) < 0.0

    def test_energy_matches_spatial_formula(self, water):
        occ, virt = [0, 1, 2], [3, 4, 5]
        t = mp2_amplitudes(water, occ, virt)
        eps = np.diag(fock_matrix(water))
        g = water.g
        e = 0.0
        for i in occ:
            for j in occ:
                for a in virt:
                    for b in virt:
                        iajb, ibja = g[i, a, j, b], g[i, b, j, a]
                        e += iajb * (2 * iajb - ibja) / (eps[i] + eps[j] - eps[a] - eps[b])
        assert t.correlation_energy(water) == pytest.approx(e, abs=1e-12)

    def test_degenerate_denominator(self):
        H = FermionHamiltonian(0.0, np.diag([0.0, 0.0]), np.zeros((2,) * 4), 1, 1)
        with pytest.raises(ValueError, match="degenerate"):
            mp2_amplitudes(H, [0], [1])

    def test_overlapping_sets(self, h2):
        with pytest.raises(ValueError, match="both occupied and virtual"):
            mp2_amplitudes(h2, [0], [0, 1])


def naive_density(t, conventional=False):
    no, _, nv, _ = t.shape
    d = np.zeros((nv, nv))
    for a in range(nv):
        for b in range(nv):
            for c in range(nv):
                for i in range(no):
                    for j in range(no):
                        d[a, b] += t[i, j, a, c] * (t[i, j, b, c] if conventional else t[i, j, c, b])
    return d


def symmetric_amplitudes(rng, no, nv):
    t = rng.normal(size=(no, no, nv, nv))
    return 0.5 * (t + t.transpose(1, 0, 3, 2))


class TestFnoDensity:
    def test_zero(self):
        sel = fno_density(np.zeros((2, 2, 3, 3)))
        assert not sel.d.any()
        assert not sel.eigenvalues.any()

    def test_single_amplitude(self):
        t = np.zeros((1, 1, 1, 1))
        t[0, 0, 0, 0] = 0.3
        assert fno_density(t).d[0, 0] == pytest.approx(0.09, abs=1e-15)

    @pytest.mark.parametrize("conventional", [False, True])
    def test_matches_naive_contraction(self, rng, conventional):
        t = symmetric_amplitudes(rng, 2, 3)
        sel = fno_density(t, conventional=conventional)
        assert np.allclose(sel.d, naive_density(t, conventional), rtol=0, atol=1e-13)

    def test_symmetric_for_pair_symmetric_amplitudes(self, rng):
        for _ in range(10):
            t = symmetric_amplitudes(rng, 3, 4)
            d = np.einsum("ijac,ijcb->ab", t, t)
            assert np.max(np.abs(d - d.T)) < 1e-12

    def test_eigen_order_and_rotation(self, rng):
        sel = fno_density(symmetric_amplitudes(rng, 2, 5))
        mags = np.abs(sel.eigenvalues)
        assert np.all(np.diff(mags) <= 1e-15)
        R = sel.rotation
        assert np.max(np.abs(R.T @ R - np.eye(5))) < 1e-10
        assert np.allclose(R.T @ sel.d @ R, np.diag(sel.eigenvalues), atol=1e-12)

    def test_spin_summed_for_mp2(self, water):
        t = mp2_amplitudes(water, [1, 2], [3, 4, 5])
        sel = fno_density(t)
        full = np.einsum("ijac,ijcb->ab", t.t, t.t)
        assert np.allclose(sel.d, full[0::2, 0::2] + full[1::2, 1::2], atol=1e-14)
        assert sel.virtuals == (3, 4, 5)


class TestSelectVirtuals:
    def test_largest_magnitude_first(self):
        d = np.diag([0.01, 0.9, 0.02])
        t = np.zeros((1, 1, 3, 3))
        sel = fno_density(t)
        sel.d, sel.eigenvalues, sel.rotation = d, np.array([0.9, 0.02, 0.01]), np.eye(3)[:, [1, 2, 0]]
        kept = select_fno_virtuals(sel, 1)
        assert kept.selected == [0]
        assert np.argmax(np.abs(kept.rotation[:, kept.selected[0]])) == 1

    def test_count_zero_and_too_many(self, rng):
        sel = fno_density(symmetric_amplitudes(rng, 1, 3))
        assert select_fno_virtuals(sel, 0).selected == []
        with pytest.raises(ValueError):
            select_fno_virtuals(sel, 4)

    def test_full_rotation_preserves_casci(self, water):
        occ, virt = [0, 1, 2], [3, 4, 5]
        sel = select_fno_virtuals(fno_density(mp2_amplitudes(water, occ, virt)), 3)
        U = np.eye(6)
        U[np.ix_(virt, virt)] = sel.rotation
        e_rot, _, _ = casci_ground(rotate_orbitals(water, U))
        assert e_rot == pytest.approx(FCI_REFERENCE["water_cas66"], abs=1e-9)

    def test_random_rotation_invariance(self, rng):
        H = random_hamiltonian(rng, 4, 2, 2)
        sel = fno_density(mp2_amplitudes(H, [0, 1], [2, 3]))
        U = np.eye(4)
        U[2:, 2:] = sel.rotation
        assert casci_ground(rotate_orbitals(H, U))[0] == pytest.approx(casci_ground(H)[0], abs=1e-9)


class TestActiveSpace:
    def test_h10_fragment(self, h10, mo10):
        Ha, rep = build_active_space(h10, mo10, [0, 1, 2, 3, 4], n_virtuals=3)
        assert rep.fragment_count == 3
        assert len(rep.occupied_window) == 3
        assert set(rep.occupied_window) <= set(rep.fragment_orbitals)
        assert (Ha.n_orbitals, Ha.n_electrons) == (6, 6)
        assert casci_ground(Ha)[0] == pytest.approx(FCI_REFERENCE["h10_frag_cas66"], abs=1e-9)
        d = rep.to_dict()
        assert d["n"] == 3 and d["active"] == list(rep.spec.active)
        assert len(d["frozen_core"]) == 2

    def test_window_follows_fock_energy(self, h10, mo10):
        _, rep = build_active_space(h10, mo10, [0, 1, 2, 3, 4], n_virtuals=2, n_occ_window=1)
        eps = np.diag(fock_matrix(h10))
        assert rep.occupied_window == [max(rep.fragment_orbitals, key=lambda i: (eps[i], -i))]

    def test_all_virtuals_full_space_matches_fold(self, h10, mo10):
        Ha, rep = build_active_space(h10, mo10, mo10.atoms, n_virtuals=5, n_occ_window=5)
        assert rep.spec.frozen_core == ()
        assert casci_ground(Ha)[0] == pytest.approx(FCI_REFERENCE["h10_local"], abs=1e-9)

    def test_frozen_core_equals_direct_fold(self, h10, mo10):
        Ha, rep = build_active_space(h10, mo10, [0, 1, 2, 3, 4], n_virtuals=5)
        direct = fold_core(h10, ActiveSpaceSpec(rep.spec.frozen_core, tuple(rep.occupied_window) + tuple(range(5, 10)), 6))
        assert casci_ground(Ha)[0] == pytest.approx(casci_ground(direct)[0], abs=1e-9)

    def test_window_larger_than_fragment(self, h10, mo10):
        with pytest.raises(ValueError, match="occupied window"):
            build_active_space(h10, mo10, [0], n_virtuals=1, n_occ_window=4)

    def test_mismatched_mo_file(self, h2):
        with pytest.raises(ValueError):
            build_active_space(h2, MoCoefficients(np.eye(3), {0: [0, 1, 2]}, 1), [0], 1)

    def test_mp2_amplitude_type(self, h10):
        t = mp2_amplitudes(h10, [2, 3, 4], [5, 6])
        assert isinstance(t, Mp2Amplitudes)
        assert t.t.shape == (6, 6, 4, 4)
