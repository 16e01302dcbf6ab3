"""Regenerate the bundled 40-operator, 12-qubit ansatz circuit.

The ansatz comes from a 40-iteration FAST-VQE run on the CAS(6,6) active space
cut from the H10 fixture (fragment atoms 0-4, three occupied, three natural
virtuals). Run from the repository root after installing the package::

    python3 tools/make_ansatz_fixture.py
"""

import pathlib

from fastvqe.circuit import ansatz_circuit, gate_counts
from fastvqe.hamiltonian import read_fcidump, write_fcidump
from fastvqe.orbitals import MoCoefficients, build_active_space
from fastvqe.solver import FastConfig, fast_vqe_run

DATA = pathlib.Path(__file__).resolve().parents[1] / "src" / "fastvqe" / "data"


def main():
    H = read_fcidump(DATA / "h10_local.fcidump")
    C = MoCoefficients.from_json(DATA / "h10_local_mo.json")
    Ha, _ = build_active_space(H, C, [0, 1, 2, 3, 4], n_virtuals=3, n_occ_window=3)
    write_fcidump(Ha, DATA / "h10_frag_cas66.fcidump")
    trace = fast_vqe_run(Ha, FastConfig(max_iterations=40, gate_budget=None, seed=7))
    c = ansatz_circuit(trace.ansatz, Ha.n_spin_orbitals, Ha.reference_bits())
    g1, g2 = gate_counts(c)
    header = f"# FAST-VQE ansatz, {len(trace.ansatz)} operators, {g1} one-qubit and {g2} CNOT gates\nqubits {c.n_qubits}\n"
    (DATA / "ansatz_40op_12q.circ").write_text(header + c.to_text())
    print(len(trace.ansatz), g1, g2)


if __name__ == "__main__":
    main()
