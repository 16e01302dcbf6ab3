"""Adaptive VQE driver with sampling-based (FAST) or gradient-based (ADAPT) operator selection."""

from __future__ import annotations

import itertools
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.optimize import minimize

from .circuit import AnsatzState, ExcitationOp, ansatz_circuit, gate_counts
from .determinants import apply_ladder, connected_determinants, slater_condon_element
from .hamiltonian import FermionHamiltonian, hf_energy
from .qubit import PauliSum, jordan_wigner
from .simulator import (
    DeterminantMultiset,
    StateVector,
    ansatz_state,
    apply_excitation,
    excitation_generator,
    make_rng,
    sample,
    sparse_operator,
)

log = logging.getLogger(__name__)

SCORE_FLOOR = 1e-8


def _bits(reference: Sequence[int] | str | int, n: int | None = None) -> list[int]:
    if isinstance(reference, int):
        if n is None:
            raise ValueError("qubit count required for an integer reference")
        return [(reference >> q) & 1 for q in range(n)]
    return [int(b) for b in reference]


def build_pool(reference_occupation: Sequence[int] | str, n_spin_orbitals: int | None = None) -> list[ExcitationOp]:
    """All spin-conserving singles and doubles out of the reference, in lexicographic order.

    Qubits ``[0, n/2)`` are alpha and ``[n/2, n)`` beta.
    """
    bits = _bits(reference_occupation)
    n = len(bits) if n_spin_orbitals is None else n_spin_orbitals
    if len(bits) > n or n % 2:
        raise ValueError("reference must fit an even number of spin orbitals")
    bits = bits + [0] * (n - len(bits))
    half = n // 2
    occ = [q for q in range(n) if bits[q]]
    vir = [q for q in range(n) if not bits[q]]
    spin = lambda q: q >= half  # noqa: E731
    singles = [ExcitationOp((i,), (a,)) for i in occ for a in vir if spin(i) == spin(a)]
    doubles = [
        ExcitationOp((i, j), (a, b))
        for i, j in itertools.combinations(occ, 2)
        for a, b in itertools.combinations(vir, 2)
        if spin(i) + spin(j) == spin(a) + spin(b)
    ]
    return singles + doubles


def _excite(det: int, op: ExcitationOp) -> tuple[int, int] | None:
    # T = a+_a a+_b a_j a_i for (i, j) -> (a, b)
    return apply_ladder(det, list(op.virtual), list(reversed(op.occupied)))


def _deexcite(det: int, op: ExcitationOp) -> tuple[int, int] | None:
    return apply_ladder(det, list(op.occupied), list(reversed(op.virtual)))


def heuristic_scores(
    pool: Sequence[ExcitationOp],
    H: FermionHamiltonian,
    samples: DeterminantMultiset,
    antihermitian: bool = False,
) -> np.ndarray:
    """Sampled importance of each pool operator.

    alpha(k) = sum_{D_i, D_j in S} <D_i| k H |D_j>, where the excitation acts on the
    sampled bra determinant, so for S = {HF} a double scores <HF_ij^ab|H|HF>.
    Multiplicities weight both sums. ``H|D_j>`` is accumulated once over the
    determinants connected to the samples, so each operator costs O(|S|).
    """
    n = H.n_orbitals
    sigma: dict[int, float] = {}
    for dj, cj in samples.counts.items():
        for dm in connected_determinants(dj, n):
            v = slater_condon_element(H, dm, dj)
            if v != 0.0:
                sigma[dm] = sigma.get(dm, 0.0) + cj * v
    scores = np.zeros(len(pool))
    for k, op in enumerate(pool):
        total = 0.0
        for di, ci in samples.counts.items():
            hit = _excite(di, op)
            if hit is not None:
                total += ci * hit[0] * sigma.get(hit[1], 0.0)
            if antihermitian:
                hit = _deexcite(di, op)
                if hit is not None:
                    total -= ci * hit[0] * sigma.get(hit[1], 0.0)
        scores[k] = total
    return scores


def qubit_excitation_generator(op: ExcitationOp, n_qubits: int) -> PauliSum:
    """Anti-Hermitian QEB generator |excited><reference| - h.c. as a PauliSum (no Z strings)."""
    raise_ = PauliSum.identity(n_qubits)
    for a in op.virtual:
        raise_ = raise_ * PauliSum(n_qubits, {(1 << a, 0): 0.5, (1 << a, 1 << a): -0.5j})
    for i in op.occupied:
        raise_ = raise_ * PauliSum(n_qubits, {(1 << i, 0): 0.5, (1 << i, 1 << i): 0.5j})
    return raise_ - raise_.adjoint()


def adapt_gradients(pool: Sequence[ExcitationOp], H: PauliSum, psi: StateVector) -> np.ndarray:
    """Energy gradient <psi|[H, G]|psi> of appending each operator at theta = 0."""
    M = sparse_operator(H)
    h_psi = M @ psi.amplitudes
    out = np.empty(len(pool))
    for k, op in enumerate(pool):
        g_psi = excitation_generator(psi.amplitudes, op, psi.n)
        out[k] = 2.0 * np.vdot(h_psi, g_psi).real
    return out


@dataclass
class VqeResult:
    thetas: np.ndarray
    energy: float
    converged: bool
    evaluations: int


def _energy_and_gradient(ops, thetas, M, n, reference):
    amp = ansatz_state(ops, thetas, n, reference)
    lam = M @ amp
    energy = float(np.vdot(amp, lam).real)
    grad = np.zeros(len(ops))
    # adjoint sweep: peel operators off both the state and H|psi> from the end
    for m in range(len(ops) - 1, -1, -1):
        op = ops[m]
        grad[m] = 2.0 * np.vdot(lam, excitation_generator(amp, op, n)).real
        apply_excitation(amp, op, -thetas[m], n)
        apply_excitation(lam, op, -thetas[m], n)
    return energy, grad


def vqe_optimize(
    ansatz: AnsatzState,
    H: PauliSum,
    reference_occupation: Sequence[int] | str,
    gradient: str = "analytic",
    gtol: float = 1e-7,
    max_evaluations: int = 2000,
    fd_step: float = 1e-5,
) -> VqeResult:
    """Jointly re-optimize all ansatz parameters from their current values (BFGS).

    The returned energy is never above the warm-start energy.
    """
    n = H.n_qubits
    reference = sum(1 << q for q, b in enumerate(_bits(reference_occupation)) if b)
    M = sparse_operator(H)
    ops = ansatz.operators
    x0 = np.array(ansatz.thetas, dtype=float)
    evals = 0

    def energy(x):
        nonlocal evals
        evals += 1
        amp = ansatz_state(ops, x, n, reference)
        return float(np.vdot(amp, M @ amp).real)

    if not ops:
        return VqeResult(x0, energy(x0), True, evals)

    def fun(x):
        nonlocal evals
        if gradient == "analytic":
            evals += 1
            return _energy_and_gradient(ops, x, M, n, reference)
        e = energy(x)
        g = np.empty_like(x)
        for k in range(x.size):
            step = np.zeros_like(x)
            step[k] = fd_step
            g[k] = (energy(x + step) - energy(x - step)) / (2 * fd_step)
        return e, g

    if gradient not in ("analytic", "fd"):
        raise ValueError(f"gradient must be 'analytic' or 'fd', got {gradient!r}")
    e0 = energy(x0)
    per_iter = 1 if gradient == "analytic" else 2 * x0.size + 1
    res = minimize(
        fun, x0, jac=True, method="BFGS",
        options={"gtol": gtol, "maxiter": max(1, max_evaluations // per_iter), "norm": np.inf},
    )
    x, e = res.x, float(res.fun)
    # BFGS reports "precision loss" once the energy is flat to machine precision
    converged = evals <= max_evaluations and (
        bool(res.success) or float(np.max(np.abs(res.jac))) < 100 * gtol
    )
    if not converged:
        log.warning("VQE stopped before convergence: %s", res.message)
    if e > e0:
        x, e = x0, e0
    return VqeResult(np.asarray(x, dtype=float), e, converged, evals)


@dataclass
class FastConfig:
    max_iterations: int = 40
    shots: int = 1024
    selector: str = "fast"
    seed: int = 7
    gate_budget: int | None = 950
    gtol: float = 1e-7
    max_evaluations: int = 2000
    gradient: str = "analytic"
    antihermitian: bool = False
    allow_repeats: bool = False
    score_floor: float = SCORE_FLOOR

    def __post_init__(self):
        if self.max_iterations < 1 or self.shots < 1:
            raise ValueError("max_iterations and shots must be positive")
        if self.selector not in ("fast", "adapt"):
            raise ValueError(f"selector must be 'fast' or 'adapt', got {self.selector!r}")
        if self.gate_budget is not None and self.gate_budget < 1:
            raise ValueError("gate_budget must be positive (or None for no limit)")
        if self.gradient not in ("analytic", "fd"):
            raise ValueError(f"gradient must be 'analytic' or 'fd', got {self.gradient!r}")


@dataclass
class IterationRecord:
    iter: int
    energy_ha: float
    op: str | None
    abs_alpha: float
    alpha_normalized: float
    gates_1q: int
    gates_2q: int
    n_params: int
    vqe_converged: bool = True
    stop_reason: str | None = None

    def to_json(self) -> str:
        d = asdict(self)
        if d["stop_reason"] is None:
            del d["stop_reason"]
        return json.dumps(d, sort_keys=True)


@dataclass
class RunTrace:
    hf_energy: float
    records: list[IterationRecord] = field(default_factory=list)
    ansatz: AnsatzState = field(default_factory=AnsatzState)
    stop_reason: str = "max_iterations"

    @property
    def energies(self) -> list[float]:
        return [r.energy_ha for r in self.records]

    @property
    def final_energy(self) -> float:
        return self.records[-1].energy_ha if self.records else self.hf_energy

    def to_jsonl(self) -> str:
        return "".join(r.to_json() + "\n" for r in self.records)


def fast_vqe_run(H: FermionHamiltonian, config: FastConfig | None = None, qubit_hamiltonian: PauliSum | None = None) -> RunTrace:
    """Grow an ansatz one operator per iteration and re-optimize all parameters.

    Stops at ``max_iterations``, when the next operator would push the one-qubit
    gate count past ``gate_budget``, or when the best score falls below
    ``score_floor``. Unless ``allow_repeats`` is set, selection sweeps the pool:
    an operator chosen in the current sweep is skipped until every operator with
    a score above the floor has been chosen, then the next sweep begins. The
    sampled score does not shrink once an operator is present, so immediate
    repeats would stall the loop.
    """
    config = config or FastConfig()
    Hq = qubit_hamiltonian if qubit_hamiltonian is not None else jordan_wigner(H)
    n = Hq.n_qubits
    ref_bits = H.reference_bits()
    reference = sum(1 << q for q, b in enumerate(ref_bits) if b)
    pool = build_pool(ref_bits)
    swept: set[int] = set()
    e_hf = hf_energy(H, *H.hf_occupation())
    trace = RunTrace(hf_energy=e_hf)
    ansatz = AnsatzState([], e_hf)
    rng = make_rng(config.seed)
    energy = e_hf

    for k in range(1, config.max_iterations + 1):
        psi = StateVector(n, ansatz_state(ansatz.operators, ansatz.thetas, n, reference))
        if config.selector == "fast":
            samples = sample(psi, config.shots, rng)
            scores = heuristic_scores(pool, H, samples, config.antihermitian)
            norm = float(samples.shots) ** 2
        else:
            scores = adapt_gradients(pool, Hq, psi)
            norm = 1.0
        mags = np.abs(scores)
        if not config.allow_repeats:
            fresh = mags.copy()
            fresh[list(swept)] = 0.0
            if len(pool) and fresh.max() < config.score_floor:
                # every operator with weight is in this sweep; start the next one
                swept.clear()
            else:
                mags = fresh
        best = int(np.argmax(mags)) if len(pool) else -1
        top = float(mags[best]) if len(pool) else 0.0
        g1, g2 = gate_counts(ansatz_circuit(ansatz, n, ref_bits))
        if top < config.score_floor:
            trace.stop_reason = "converged"
            trace.records.append(IterationRecord(k, energy, None, top, top / norm, g1, g2, len(ansatz), True, "converged"))
            break
        op = pool[best]
        candidate = AnsatzState(ansatz.ops + [(op, 0.0)], energy)
        g1, g2 = gate_counts(ansatz_circuit(candidate, n, ref_bits))
        if config.gate_budget is not None and g1 > config.gate_budget:
            trace.stop_reason = "budget"
            g1, g2 = gate_counts(ansatz_circuit(ansatz, n, ref_bits))
            trace.records.append(IterationRecord(k, energy, None, top, top / norm, g1, g2, len(ansatz), True, "budget"))
            break
        res = vqe_optimize(
            candidate, Hq, ref_bits, gradient=config.gradient,
            gtol=config.gtol, max_evaluations=config.max_evaluations,
        )
        energy = res.energy
        ansatz = candidate.with_thetas(res.thetas, energy)
        swept.add(best)
        trace.records.append(
            IterationRecord(k, energy, op.label(), top, top / norm, g1, g2, len(ansatz), res.converged)
        )
    else:
        trace.records[-1].stop_reason = "max_iterations"
    trace.ansatz = ansatz
    return trace
