"""Gate-level circuit IR and the qubit-excitation (QEB) ansatz builders."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

ONE_QUBIT = ("x", "h", "rx", "ry", "rz", "p")
ROTATIONS = ("rx", "ry", "rz", "p")
KINDS = ONE_QUBIT + ("cnot",)

HALF_PI = math.pi / 2


class CircuitParseError(ValueError):
    pass


@dataclass(frozen=True)
class Gate:
    kind: str
    qubits: tuple[int, ...]
    param: float | None = None

    def __post_init__(self):
        kind = self.kind.lower()
        qubits = tuple(int(q) for q in self.qubits)
        if kind not in KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if kind == "cnot":
            if len(qubits) != 2 or qubits[0] == qubits[1]:
                raise ValueError(f"cnot needs two distinct qubits, got {qubits}")
        elif len(qubits) != 1:
            raise ValueError(f"{kind} acts on one qubit, got {qubits}")
        if kind in ROTATIONS:
            if self.param is None:
                raise ValueError(f"{kind} requires an angle")
            object.__setattr__(self, "param", float(self.param))
        elif self.param is not None:
            raise ValueError(f"{kind} takes no parameter")
        if any(q < 0 for q in qubits):
            raise ValueError(f"negative qubit index in {qubits}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "qubits", qubits)

    @property
    def arity(self) -> int:
        return len(self.qubits)

    def to_line(self) -> str:
        parts = [self.kind, *map(str, self.qubits)]
        if self.param is not None:
            parts.append(repr(self.param))
        return " ".join(parts)


@dataclass
class Circuit:
    n_qubits: int
    gates: list[Gate] = field(default_factory=list)

    def __post_init__(self):
        for g in self.gates:
            self._check(g)

    def _check(self, g: Gate) -> None:
        if max(g.qubits) >= self.n_qubits:
            raise ValueError(f"gate {g.to_line()!r} exceeds {self.n_qubits} qubits")

    def append(self, kind: str, *qubits: int, param: float | None = None) -> "Circuit":
        g = Gate(kind, qubits, param)
        self._check(g)
        self.gates.append(g)
        return self

    def extend(self, other: "Circuit | Iterable[Gate]") -> "Circuit":
        gates = other.gates if isinstance(other, Circuit) else list(other)
        for g in gates:
            self._check(g)
        self.gates.extend(gates)
        return self

    def __add__(self, other: "Circuit") -> "Circuit":
        return Circuit(max(self.n_qubits, other.n_qubits), self.gates + other.gates)

    def __len__(self) -> int:
        return len(self.gates)

    def copy(self) -> "Circuit":
        return Circuit(self.n_qubits, list(self.gates))

    def to_text(self) -> str:
        return "".join(g.to_line() + "\n" for g in self.gates)

    @classmethod
    def from_text(cls, text: str, n_qubits: int | None = None) -> "Circuit":
        """Parse the ``gate q0 [q1] [param]`` line format.

        A leading ``qubits N`` line fixes the width; otherwise it is inferred.
        Blank lines and ``#`` comments are skipped.
        """
        gates = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if parts[0].lower() == "qubits":
                try:
                    n_qubits = int(parts[1])
                except (IndexError, ValueError):
                    raise CircuitParseError(f"line {lineno}: bad width declaration {line!r}") from None
                continue
            kind = parts[0].lower()
            try:
                if kind == "cnot":
                    if len(parts) != 3:
                        raise ValueError("cnot takes exactly two qubits")
                    g = Gate(kind, (int(parts[1]), int(parts[2])))
                elif kind in ROTATIONS:
                    if len(parts) != 3:
                        raise ValueError(f"{kind} takes a qubit and an angle")
                    g = Gate(kind, (int(parts[1]),), float(parts[2]))
                else:
                    if len(parts) != 2:
                        raise ValueError(f"{kind} takes exactly one qubit")
                    g = Gate(kind, (int(parts[1]),))
            except ValueError as exc:
                raise CircuitParseError(f"line {lineno}: {exc}") from None
            gates.append(g)
        if n_qubits is None:
            n_qubits = 1 + max((max(g.qubits) for g in gates), default=-1)
        try:
            return cls(n_qubits, gates)
        except ValueError as exc:
            raise CircuitParseError(str(exc)) from None


def gate_counts(c: Circuit) -> tuple[int, int]:
    """``(one_qubit, two_qubit)`` gate tallies."""
    two = sum(1 for g in c.gates if g.arity == 2)
    return len(c.gates) - two, two


@dataclass(frozen=True)
class ExcitationOp:
    """Particle-hole excitation over qubit (spin-orbital) indices."""

    occupied: tuple[int, ...]
    virtual: tuple[int, ...]

    def __post_init__(self):
        occ = tuple(int(i) for i in self.occupied)
        vir = tuple(int(a) for a in self.virtual)
        if len(occ) != len(vir) or len(occ) not in (1, 2):
            raise ValueError("excitation must move one or two electrons")
        if len(set(occ + vir)) != 2 * len(occ):
            raise ValueError(f"excitation indices must be distinct: {occ} -> {vir}")
        object.__setattr__(self, "occupied", occ)
        object.__setattr__(self, "virtual", vir)

    @property
    def kind(self) -> str:
        return "single" if len(self.occupied) == 1 else "double"

    def label(self) -> str:
        return f"{','.join(map(str, self.occupied))}->{','.join(map(str, self.virtual))}"

    def circuit(self, theta: float, n_qubits: int) -> Circuit:
        if self.kind == "single":
            c = build_single_excitation(self.virtual[0], self.occupied[0], theta)
        else:
            a, b = self.virtual
            i, j = self.occupied
            c = build_double_excitation(a, b, i, j, theta)
        return Circuit(n_qubits, c.gates)


def build_single_excitation(i: int, j: int, theta: float) -> Circuit:
    """Parametrized singles circuit: 8 one-qubit gates and 2 CNOTs.

    Rotates |q_i=0, q_j=1> into cos(theta)|01> + sin(theta)|10>; the mirrored
    state picks up -sin(theta). Other basis states are unchanged.
    """
    if i == j:
        raise ValueError("single excitation needs two distinct qubits")
    c = Circuit(max(i, j) + 1)
    c.append("rz", i, param=-HALF_PI)
    c.append("rx", i, param=HALF_PI)
    c.append("rx", j, param=HALF_PI)
    c.append("cnot", i, j)
    c.append("rx", i, param=theta)
    c.append("rz", j, param=theta)
    c.append("cnot", i, j)
    c.append("rx", i, param=-HALF_PI)
    c.append("rx", j, param=-HALF_PI)
    c.append("rz", i, param=HALF_PI)
    return c


def build_double_excitation(i: int, j: int, k: int, l: int, theta: float) -> Circuit:
    """Parametrized doubles circuit: 23 one-qubit gates and 13 CNOTs.

    Rotates the pair occupation |k l> into |i j>: |..0011> maps to
    cos(theta)|0011> + sin(theta)|1100> (qubit order i j k l). Every other basis
    state is left unchanged.
    """
    if len({i, j, k, l}) != 4:
        raise ValueError(f"double excitation needs four distinct qubits, got {(i, j, k, l)}")
    q = theta / 4
    c = Circuit(max(i, j, k, l) + 1)
    c.append("cnot", i, j)
    c.append("cnot", k, l)
    c.append("cnot", i, k)
    c.append("x", j)
    c.append("x", l)
    c.append("ry", i, param=q)
    c.append("h", j)
    c.append("cnot", i, j)
    c.append("ry", i, param=-q)
    c.append("h", l)
    c.append("cnot", i, l)
    c.append("ry", i, param=q)
    c.append("cnot", i, j)
    c.append("ry", i, param=-q)
    c.append("h", k)
    c.append("cnot", i, k)
    c.append("ry", i, param=q)
    c.append("h", k)
    c.append("cnot", i, j)
    c.append("ry", i, param=-q)
    c.append("cnot", i, l)
    c.append("ry", i, param=q)
    c.append("h", l)
    c.append("cnot", i, j)
    c.append("ry", k, param=HALF_PI)
    c.append("ry", i, param=-q)
    c.append("h", j)
    c.append("p", k, param=HALF_PI)
    c.append("cnot", i, k)
    c.append("p", i, param=HALF_PI)
    c.append("p", k, param=-HALF_PI)
    c.append("x", j)
    c.append("ry", k, param=-HALF_PI)
    c.append("x", l)
    c.append("cnot", i, j)
    c.append("cnot", k, l)
    return c


@dataclass
class AnsatzState:
    """Ordered (operator, parameter) list; the first entry acts first on |HF>."""

    ops: list[tuple[ExcitationOp, float]] = field(default_factory=list)
    energy: float | None = None

    @property
    def operators(self) -> list[ExcitationOp]:
        return [op for op, _ in self.ops]

    @property
    def thetas(self) -> list[float]:
        return [t for _, t in self.ops]

    def with_thetas(self, thetas: Sequence[float], energy: float | None = None) -> "AnsatzState":
        if len(thetas) != len(self.ops):
            raise ValueError("parameter count does not match operator count")
        return AnsatzState([(op, float(t)) for (op, _), t in zip(self.ops, thetas)], energy)

    def __len__(self) -> int:
        return len(self.ops)


def ansatz_circuit(
    ansatz: AnsatzState | Iterable[tuple[ExcitationOp, float]],
    n_qubits: int,
    reference_occupation: Sequence[int] | str,
) -> Circuit:
    """X gates preparing the reference, then each operator's circuit in ansatz order."""
    ops = ansatz.ops if isinstance(ansatz, AnsatzState) else list(ansatz)
    bits = [int(b) for b in reference_occupation]
    if len(bits) > n_qubits:
        raise ValueError("reference occupation is wider than the register")
    c = Circuit(n_qubits)
    for q, b in enumerate(bits):
        if b:
            c.append("x", q)
    for op, theta in ops:
        c.extend(op.circuit(theta, n_qubits))
    return c
