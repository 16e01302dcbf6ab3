import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fastvqe.circuit import (
    AnsatzState,
    Circuit,
    CircuitParseError,
    ExcitationOp,
    Gate,
    ansatz_circuit,
    build_double_excitation,
    build_single_excitation,
    gate_counts,
)
from fastvqe.simulator import (
    StateVector,
    ansatz_state,
    apply,
    apply_excitation,
    circuit_unitary,
    phase_fidelity,
)
from fastvqe.solver import build_pool

angles = st.floats(-2 * math.pi, 2 * math.pi, allow_nan=False)


def on(c: Circuit, n: int) -> Circuit:
    return Circuit(n, c.gates)


def assert_global_phase_equal(U, V, tol=1e-10):
    assert phase_fidelity(U, V) > 1 - tol


class TestGate:
    @pytest.mark.parametrize(
        "kind, qubits, param",
        [("cnot", (0, 0), None), ("cnot", (0,), None), ("rx", (0,), None), ("x", (0,), 1.0),
         ("h", (0, 1), None), ("swap", (0, 1), None), ("x", (-1,), None)],
    )
    def test_invalid(self, kind, qubits, param):
        with pytest.raises(ValueError):
            Gate(kind, qubits, param)

    def test_uppercase_kinds_normalized(self):
        assert Gate("RZ", (0,), 0.5).kind == "rz"

    def test_width_checked(self):
        with pytest.raises(ValueError):
            Circuit(2).append("cnot", 1, 2)


class TestSerialization:
    def test_round_trip(self):
        c = build_double_excitation(0, 1, 2, 3, 0.123456789)
        again = Circuit.from_text(c.to_text())
        assert again.gates == c.gates and again.n_qubits == 4

    def test_width_line_and_comments(self):
        c = Circuit.from_text("# header\nqubits 5\nh 0  # trailing\n\ncnot 0 1\n")
        assert c.n_qubits == 5 and gate_counts(c) == (1, 1)

    @pytest.mark.parametrize(
        "text, line",
        [("h 0\nrx 1\n", "line 2"), ("cnot 0\n", "line 1"), ("foo 1\n", "line 1"), ("x 0\nrz a b\n", "line 2")],
    )
    def test_parse_errors_name_line(self, text, line):
        with pytest.raises(CircuitParseError, match=line):
            Circuit.from_text(text)


class TestGateCounts:
    def test_empty(self):
        assert gate_counts(Circuit(3)) == (0, 0)

    def test_singles_builder(self):
        assert gate_counts(build_single_excitation(0, 1, 0.3)) == (8, 2)

    def test_doubles_builder(self):
        assert gate_counts(build_double_excitation(0, 1, 2, 3, 0.3)) == (23, 13)

    def test_additive(self):
        a, b = build_single_excitation(0, 2, 0.1), build_double_excitation(3, 1, 2, 0, 0.2)
        ca, cb = gate_counts(a), gate_counts(b)
        assert gate_counts(a + b) == (ca[0] + cb[0], ca[1] + cb[1])


class TestSinglesCircuit:
    def test_identity_at_zero(self):
        U = circuit_unitary(build_single_excitation(0, 1, 0.0))
        assert_global_phase_equal(U, np.eye(4), 1e-12)

    def test_rotation_pattern(self):
        theta = 0.7
        U = circuit_unitary(build_single_excitation(0, 1, theta))
        # index bit 0 is q_i, bit 1 is q_j; |q_i=0, q_j=1> is index 2
        col = U[:, 2] / U[0, 0]
        assert np.allclose(col, [0, math.sin(theta), math.cos(theta), 0], atol=1e-12)

    @pytest.mark.parametrize("theta", np.linspace(-math.pi, math.pi, 13))
    def test_two_level_subspace(self, theta):
        U = circuit_unitary(build_single_excitation(1, 0, theta))
        for idx in (1, 2):
            col = U[:, idx]
            assert abs(col[0]) < 1e-12 and abs(col[3]) < 1e-12
        assert abs(abs(U[0, 0]) - 1) < 1e-12 and abs(abs(U[3, 3]) - 1) < 1e-12

    def test_equal_indices(self):
        with pytest.raises(ValueError):
            build_single_excitation(1, 1, 0.0)


class TestDoublesCircuit:
    def test_identity_at_zero(self):
        U = circuit_unitary(build_double_excitation(0, 1, 2, 3, 0.0))
        assert_global_phase_equal(U, np.eye(16), 1e-12)

    @pytest.mark.parametrize("theta", [0.3, -1.1, math.pi / 2, 2.5])
    def test_pair_rotation(self, theta):
        U = circuit_unitary(build_double_excitation(0, 1, 2, 3, theta))
        phase = U[0, 0]
        V = U / phase
        ref = np.eye(16, dtype=complex)
        # |k l> occupied is index 12, |i j> occupied is index 3
        c, s = math.cos(theta), math.sin(theta)
        ref[12, 12], ref[3, 12], ref[3, 3], ref[12, 3] = c, s, c, -s
        assert np.allclose(V, ref, atol=1e-10)

    def test_repeated_indices(self):
        with pytest.raises(ValueError):
            build_double_excitation(0, 1, 1, 3, 0.0)


@settings(max_examples=25, deadline=None)
@given(angles)
def test_builders_unitary_and_invertible(theta):
    for build, n in ((lambda t: build_single_excitation(2, 0, t), 3),
                     (lambda t: build_double_excitation(3, 0, 2, 1, t), 4)):
        U = circuit_unitary(on(build(theta), n))
        assert np.allclose(U.conj().T @ U, np.eye(1 << n), atol=1e-10)
        V = circuit_unitary(on(build(-theta), n))
        assert_global_phase_equal(V @ U, np.eye(1 << n))


class TestExcitationOp:
    def test_validation(self):
        with pytest.raises(ValueError):
            ExcitationOp((0,), (0,))
        with pytest.raises(ValueError):
            ExcitationOp((0, 1, 2), (3, 4, 5))

    def test_label(self):
        assert ExcitationOp((0, 6), (5, 11)).label() == "0,6->5,11"

    @pytest.mark.parametrize("op", [ExcitationOp((1,), (3,)), ExcitationOp((0, 1), (2, 3)), ExcitationOp((0, 4), (3, 5))])
    def test_circuit_matches_kernel(self, op, rng):
        n = 6
        amp = rng.normal(size=64) + 1j * rng.normal(size=64)
        amp /= np.linalg.norm(amp)
        via_circuit = apply(op.circuit(0.37, n), StateVector(n, amp)).amplitudes
        via_kernel = amp.copy()
        apply_excitation(via_kernel, op, 0.37, n)
        overlap = np.vdot(via_kernel, via_circuit)
        assert abs(abs(overlap) - 1) < 1e-10


class TestAnsatzCircuit:
    def test_empty_ansatz(self):
        c = ansatz_circuit(AnsatzState(), 12, "111000111000")
        assert gate_counts(c) == (6, 0)
        assert all(g.kind == "x" for g in c.gates)

    def test_single_op_closed_form(self):
        theta = 0.41
        op = ExcitationOp((0,), (1,))
        c = ansatz_circuit(AnsatzState([(op, theta)]), 4, "1010")
        out = apply(c, StateVector(4)).amplitudes
        out = out * math.cos(theta) / out[0b0101]  # strip the global phase
        ref = np.zeros(16, dtype=complex)
        ref[0b0101] = math.cos(theta)
        ref[0b0110] = math.sin(theta)
        assert np.allclose(out, ref, atol=1e-12)

    def test_forty_operator_counts(self, rng):
        pool = build_pool("111000111000")
        ops = [pool[int(k)] for k in rng.choice(len(pool), 40, replace=False)]
        ansatz = AnsatzState([(op, float(t)) for op, t in zip(ops, rng.normal(size=40))])
        c = ansatz_circuit(ansatz, 12, "111000111000")
        per = sum(8 if op.kind == "single" else 23 for op in ops)
        assert gate_counts(c)[0] == per + 6

    def test_matches_fast_kernels(self, rng):
        pool = build_pool("11001100")
        ops = [pool[k] for k in (0, 5, len(pool) - 1, 3)]
        thetas = rng.normal(size=4)
        c = ansatz_circuit(AnsatzState(list(zip(ops, thetas))), 8, "11001100")
        via_circuit = apply(c, StateVector(8)).amplitudes
        via_kernel = ansatz_state(ops, thetas, 8, 0b00110011)
        assert abs(abs(np.vdot(via_kernel, via_circuit)) - 1) < 1e-10
