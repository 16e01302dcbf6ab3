"""Gate-count reduction: CNOT-run resynthesis over GF(2) and one-qubit simplification."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .circuit import Circuit, Gate, gate_counts

OPTIMAL_MAX_WIDTH = 5
ANGLE_TOL = 1e-12
TWO_PI = 2 * math.pi


class SynthesisLimit(RuntimeError):
    """Raised when exhaustive synthesis would exceed its width or search cap."""


@dataclass(frozen=True)
class Gf2Matrix:
    """Invertible-or-not ``n x n`` bit matrix; ``rows[r]`` bit ``c`` is entry (r, c)."""

    n: int
    rows: tuple[int, ...]

    def __post_init__(self):
        if len(self.rows) != self.n:
            raise ValueError(f"expected {self.n} rows, got {len(self.rows)}")
        if any(r >> self.n for r in self.rows):
            raise ValueError("row has bits beyond the matrix width")

    @classmethod
    def identity(cls, n: int) -> "Gf2Matrix":
        return cls(n, tuple(1 << r for r in range(n)))

    @classmethod
    def from_array(cls, a) -> "Gf2Matrix":
        a = np.asarray(a, dtype=np.int64) & 1
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {a.shape}")
        return cls(a.shape[0], tuple(int(sum(int(v) << c for c, v in enumerate(row))) for row in a))

    def to_array(self) -> np.ndarray:
        return np.array([[(r >> c) & 1 for c in range(self.n)] for r in self.rows], dtype=np.uint8)

    def rank(self) -> int:
        rows = list(self.rows)
        rank = 0
        for c in range(self.n):
            piv = next((i for i in range(rank, self.n) if (rows[i] >> c) & 1), None)
            if piv is None:
                continue
            rows[rank], rows[piv] = rows[piv], rows[rank]
            for i in range(self.n):
                if i != rank and (rows[i] >> c) & 1:
                    rows[i] ^= rows[rank]
            rank += 1
        return rank

    def is_invertible(self) -> bool:
        return self.rank() == self.n

    def key(self) -> int:
        return _pack(self.rows, self.n)


def _pack(rows: Sequence[int], n: int) -> int:
    return sum(r << (i * n) for i, r in enumerate(rows))


def _unpack(key: int, n: int) -> tuple[int, ...]:
    mask = (1 << n) - 1
    return tuple((key >> (i * n)) & mask for i in range(n))


def linear_function_of(gates: Iterable[Gate], n: int) -> Gf2Matrix:
    """Bit matrix of a CNOT-only gate list: CNOT(c, t) adds row c into row t."""
    rows = [1 << r for r in range(n)]
    for g in gates:
        if g.kind != "cnot":
            raise ValueError(f"non-CNOT gate {g.to_line()!r} in a linear span")
        c, t = g.qubits
        if max(c, t) >= n:
            raise ValueError(f"gate {g.to_line()!r} exceeds width {n}")
        rows[t] ^= rows[c]
    return Gf2Matrix(n, tuple(rows))


def _cnot_moves(n: int) -> list[tuple[int, int, int, int]]:
    return [(c, t, c * n, t * n) for c in range(n) for t in range(n) if c != t]


def _neighbors(key: int, n: int, moves) -> Iterable[tuple[int, tuple[int, int]]]:
    mask = (1 << n) - 1
    for c, t, cs, ts in moves:
        yield key ^ (((key >> cs) & mask) << ts), (c, t)


def synthesize_optimal(M: Gf2Matrix, max_nodes: int = 4_000_000) -> list[tuple[int, int]]:
    """Minimum-length CNOT list realizing ``M`` by bidirectional breadth-first search.

    Returns ``(control, target)`` pairs in application order. Raises
    ``SynthesisLimit`` beyond ``OPTIMAL_MAX_WIDTH`` qubits or ``max_nodes`` visited states.
    """
    n = M.n
    if n > OPTIMAL_MAX_WIDTH:
        raise SynthesisLimit(f"optimal synthesis is limited to {OPTIMAL_MAX_WIDTH} qubits, got {n}")
    if not M.is_invertible():
        raise ValueError("matrix is singular")
    start, goal = Gf2Matrix.identity(n).key(), M.key()
    if start == goal:
        return []
    moves = _cnot_moves(n)
    # parent maps: state -> (previous state, gate)
    fwd: dict[int, tuple[int, tuple[int, int]] | None] = {start: None}
    bwd: dict[int, tuple[int, tuple[int, int]] | None] = {goal: None}
    f_front, b_front = [start], [goal]
    while f_front and b_front:
        if len(fwd) + len(bwd) > max_nodes:
            raise SynthesisLimit(f"search exceeded {max_nodes} states")
        forward = len(f_front) <= len(b_front)
        front, seen, other = (f_front, fwd, bwd) if forward else (b_front, bwd, fwd)
        nxt = []
        meet = None
        for s in front:
            for s2, gate in _neighbors(s, n, moves):
                if s2 in seen:
                    continue
                seen[s2] = (s, gate)
                if s2 in other:
                    meet = s2
                    break
                nxt.append(s2)
            if meet is not None:
                break
        if meet is not None:
            return _join(meet, fwd, bwd)
        if forward:
            f_front = nxt
        else:
            b_front = nxt
    raise ValueError("matrix is not reachable by CNOTs")  # unreachable for invertible M


def _join(meet: int, fwd: dict, bwd: dict) -> list[tuple[int, int]]:
    head = []
    s = meet
    while fwd[s] is not None:
        s, gate = fwd[s]
        head.append(gate)
    head.reverse()
    s = meet
    while bwd[s] is not None:
        s, gate = bwd[s]
        head.append(gate)
    return head


def bfs_distances(n: int) -> dict[int, int]:
    """CNOT distance from the identity for every element of GL(n, 2) (packed keys)."""
    if n > 4:
        raise SynthesisLimit("full distance tables are limited to 4 qubits")
    moves = _cnot_moves(n)
    start = Gf2Matrix.identity(n).key()
    dist = {start: 0}
    front = [start]
    while front:
        nxt = []
        for s in front:
            for s2, _ in _neighbors(s, n, moves):
                if s2 not in dist:
                    dist[s2] = dist[s] + 1
                    nxt.append(s2)
        front = nxt
    return dist


def _lower_pass(rows: list[int], n: int, section: int) -> list[tuple[int, int]]:
    """Clear entries below the diagonal with row additions; returns ``(src, dst)`` pairs."""
    ops = []

    def add(src, dst):
        rows[dst] ^= rows[src]
        ops.append((src, dst))

    for start in range(0, n, section):
        stop = min(start + section, n)
        sec_mask = ((1 << stop) - 1) ^ ((1 << start) - 1)
        seen: dict[int, int] = {}
        for r in range(start, n):
            patt = rows[r] & sec_mask
            if not patt:
                continue
            if patt in seen:
                add(seen[patt], r)
            else:
                seen[patt] = r
        for col in range(start, stop):
            bit = 1 << col
            diag = bool(rows[col] & bit)
            for r in range(col + 1, n):
                if rows[r] & bit:
                    if not diag:
                        add(r, col)
                        diag = True
                    add(col, r)
    return ops


def _transpose(rows: Sequence[int], n: int) -> list[int]:
    return [sum(((rows[r] >> c) & 1) << r for r in range(n)) for c in range(n)]


def _pmh(M: Gf2Matrix, section: int) -> list[tuple[int, int]]:
    n = M.n
    rows = list(M.rows)
    lower = _lower_pass(rows, n, section)
    upper = _lower_pass(_transpose(rows, n), n, section)
    # M = E_1..E_k (F_m^T..F_1^T); a transposed row addition is a reversed CNOT
    return [(dst, src) for src, dst in upper] + [(src, dst) for src, dst in reversed(lower)]


def synthesize_pmh(M: Gf2Matrix) -> list[tuple[int, int]]:
    """CNOT list realizing ``M`` by sectioned Gaussian elimination (at most ``n**2`` gates)."""
    if not M.is_invertible():
        raise ValueError("matrix is singular")
    n = M.n
    if n == 0:
        return []
    best = None
    for section in range(1, max(1, int(math.log2(n))) + 1):
        ops = _pmh(M, section)
        if best is None or len(ops) < len(best):
            best = ops
    return best


@dataclass
class SlicePlan:
    """Reordered circuit and the spans ``(start, stop, kind)`` that partition it."""

    circuit: Circuit
    spans: list[tuple[int, int, str]] = field(default_factory=list)

    def runs(self) -> list[list[Gate]]:
        return [self.circuit.gates[a:b] for a, b, kind in self.spans if kind == "cnot_run"]


def slice_cnot_runs(c: Circuit) -> SlicePlan:
    """Group CNOTs into maximal runs, commuting one-qubit gates out of the way.

    A one-qubit gate is hoisted ahead of the current run only if its qubit is
    untouched by the run and by gates already deferred behind it; a CNOT joins
    the run only if it shares no qubit with deferred gates.
    """
    out: list[Gate] = []
    spans: list[tuple[int, int, str]] = []
    pre: list[Gate] = []
    run: list[Gate] = []
    tail: list[Gate] = []
    run_q: set[int] = set()
    tail_q: set[int] = set()

    def flush():
        nonlocal pre, run, tail, run_q, tail_q
        if pre:
            spans.append((len(out), len(out) + len(pre), "other"))
            out.extend(pre)
        if run:
            spans.append((len(out), len(out) + len(run), "cnot_run"))
            out.extend(run)
        if tail:
            spans.append((len(out), len(out) + len(tail), "other"))
            out.extend(tail)
        pre, run, tail, run_q, tail_q = [], [], [], set(), set()

    for g in c.gates:
        q = set(g.qubits)
        if g.kind == "cnot":
            if q & tail_q:
                flush()
            run.append(g)
            run_q |= q
        elif not run:
            pre.append(g)
        elif not (q & run_q) and not (q & tail_q):
            pre.append(g)
        else:
            tail.append(g)
            tail_q |= q
    flush()
    merged: list[tuple[int, int, str]] = []
    for a, b, kind in spans:
        if merged and merged[-1][2] == kind == "other" and merged[-1][1] == a:
            merged[-1] = (merged[-1][0], b, kind)
        else:
            merged.append((a, b, kind))
    return SlicePlan(Circuit(c.n_qubits, out), merged)


def _wrap(theta: float) -> float:
    t = math.remainder(theta, TWO_PI)
    return math.pi if t == -math.pi else t


def _is_null(theta: float) -> bool:
    return abs(_wrap(theta)) < ANGLE_TOL


_Z_LIKE = ("rz", "p")
_X_LIKE = ("x", "rx")


def _commutes(e: Gate, g: Gate, q: int) -> bool:
    """Whether gates ``e`` and ``g`` sharing qubit ``q`` commute."""
    if e.kind == "cnot" and g.kind == "cnot":
        return e.qubits[0] != g.qubits[1] and e.qubits[1] != g.qubits[0]
    cx, one = (e, g) if e.kind == "cnot" else (g, e)
    if cx.kind != "cnot":
        return False
    if q == cx.qubits[0]:
        return one.kind in _Z_LIKE
    return one.kind in _X_LIKE


def _merge(e: Gate, g: Gate) -> Gate | None | bool:
    """Product of two one-qubit gates as one gate, None for identity, False if no rule."""
    if e.kind == g.kind and g.kind in ("x", "h"):
        return None
    if e.kind == g.kind and g.kind in ("rx", "ry", "rz"):
        theta = _wrap(e.param + g.param)
        return None if _is_null(theta) else Gate(g.kind, g.qubits, theta)
    if {e.kind, g.kind} == {"x", "rx"}:
        # X equals RX(pi) up to global phase
        theta = _wrap((e.param if e.kind == "rx" else g.param) + math.pi)
        return None if _is_null(theta) else Gate("rx", g.qubits, theta)
    return False


class _Peephole:
    def __init__(self, cancel_cnots: bool):
        self.cancel_cnots = cancel_cnots
        self.out: list[Gate | None] = []
        self.wires: dict[int, list[int]] = {}

    def _drop(self, idx: int) -> None:
        for q in self.out[idx].qubits:
            self.wires[q].remove(idx)
        self.out[idx] = None

    def _add(self, g: Gate) -> None:
        self.out.append(g)
        for q in g.qubits:
            self.wires.setdefault(q, []).append(len(self.out) - 1)

    def _blocker(self, g: Gate, q: int) -> int | None:
        """Latest gate on wire ``q`` that ``g`` cannot slide past (or equals ``g``)."""
        for idx in reversed(self.wires.get(q, [])):
            e = self.out[idx]
            if e == g or not _commutes(e, g, q):
                return idx
        return None

    def push(self, g: Gate) -> None:
        if g.kind == "p":
            # P(t) equals RZ(t) up to global phase
            g = Gate("rz", g.qubits, g.param)
        if g.kind in ("rx", "ry", "rz") and _is_null(g.param):
            return
        if g.kind == "cnot":
            if self.cancel_cnots:
                a, b = (self._blocker(g, q) for q in g.qubits)
                if a is not None and a == b and self.out[a] == g:
                    self._drop(a)
                    return
            self._add(g)
            return
        (q,) = g.qubits
        wire = self.wires.get(q, [])
        if g.kind == "h" and len(wire) >= 2:
            prev, prev2 = self.out[wire[-1]], self.out[wire[-2]]
            if prev.kind == "rz" and prev2.kind == "h":
                self._drop(wire[-1])
                self._drop(wire[-1])
                self.push(Gate("rx", g.qubits, prev.param))
                return
        idx = self._blocker(g, q)
        if idx is not None and self.out[idx].arity == 1:
            merged = _merge(self.out[idx], g)
            if merged is not False:
                if merged is None:
                    self._drop(idx)
                else:
                    self.out[idx] = merged
                return
        self._add(g)

    def gates(self) -> list[Gate]:
        return [g for g in self.out if g is not None]


def _peephole(c: Circuit, cancel_cnots: bool) -> Circuit:
    gates = c.gates
    while True:
        p = _Peephole(cancel_cnots)
        for g in gates:
            p.push(g)
        new = p.gates()
        if new == gates:
            return Circuit(c.n_qubits, new)
        gates = new


def simplify_one_qubit(c: Circuit) -> Circuit:
    """Merge and cancel one-qubit gates that meet on their wire.

    Same-axis rotations merge with angles wrapped to (-pi, pi]; X X and H H
    cancel; X next to RX folds into the rotation; H RZ H becomes RX; P becomes
    RZ; null rotations are dropped. Z-type gates slide past CNOT controls and
    X-type gates past CNOT targets to meet a partner. The unitary is kept up to
    global phase; CNOTs are untouched.
    """
    return _peephole(c, cancel_cnots=False)


def cancel_gates(c: Circuit) -> Circuit:
    """``simplify_one_qubit`` plus cancellation of CNOT pairs across commuting gates."""
    return _peephole(c, cancel_cnots=True)


def _resynthesize_run(run: list[Gate]) -> list[Gate]:
    qubits = sorted({q for g in run for q in g.qubits})
    local = {q: i for i, q in enumerate(qubits)}
    M = linear_function_of((Gate("cnot", (local[g.qubits[0]], local[g.qubits[1]])) for g in run), len(qubits))
    try:
        pairs = synthesize_optimal(M) if len(qubits) <= OPTIMAL_MAX_WIDTH else synthesize_pmh(M)
    except SynthesisLimit:
        pairs = synthesize_pmh(M)
    if len(pairs) >= len(run):
        return run
    return [Gate("cnot", (qubits[a], qubits[b])) for a, b in pairs]


def resynthesize_cnots(c: Circuit) -> Circuit:
    plan = slice_cnot_runs(c)
    gates: list[Gate] = []
    for a, b, kind in plan.spans:
        span = plan.circuit.gates[a:b]
        gates.extend(_resynthesize_run(span) if kind == "cnot_run" else span)
    return Circuit(c.n_qubits, gates)


def _counts(c: Circuit) -> dict[str, int]:
    g1, g2 = gate_counts(c)
    return {"g1": g1, "g2": g2}


def optimize(c: Circuit, budget: int | None = 950) -> tuple[Circuit, dict]:
    """Simplify, resynthesize CNOT runs, simplify again, repeating while counts drop.

    ``budget`` caps the one-qubit count for the ``budget_met`` verdict (None: no cap).
    """
    before = _counts(c)
    cur = cancel_gates(c)
    while True:
        nxt = cancel_gates(resynthesize_cnots(cur))
        if sum(gate_counts(nxt)) >= sum(gate_counts(cur)):
            break
        cur = nxt
    after = _counts(cur)
    report = {
        "before": before,
        "after": after,
        "budget_1q": budget,
        "budget_met": budget is None or after["g1"] <= budget,
    }
    return cur, report
