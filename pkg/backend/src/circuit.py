# src/circuit.py
"""Circuit intermediate representation and the canonical JSON file format."""

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from pydantic import BaseModel

from src.errors import CircuitValidationError

FORMAT_VERSION = 1


class GateKind(str, Enum):
    ONE_QUBIT = "one_qubit"
    TWO_QUBIT = "two_qubit"
    VIRTUAL_TWO_QUBIT = "virtual_two_qubit"
    MEASURE = "measure"
    RESET = "reset"
    CONDITIONAL_PAULI = "conditional_pauli"


# name -> number of params
ONE_QUBIT_GATES: Dict[str, int] = {
    "h": 0, "x": 0, "y": 0, "z": 0, "s": 0, "sdg": 0, "t": 0, "tdg": 0,
    "rz": 1, "rx": 1, "ry": 1, "u3": 3,
}
# cu carries its 2x2 matrix as 8 floats: re/im pairs, row-major
TWO_QUBIT_GATES: Dict[str, int] = {"cx": 0, "cz": 0, "swap": 0, "rzz": 1, "cu": 8}
TELEPORTABLE_GATES = frozenset({"cx", "cz", "rzz", "cu"})
MEASURE_BASES = ("Z", "X")


@dataclass(frozen=True)
class ParityCondition:
    """Holds when the XOR of `bits` equals `parity`."""

    bits: Tuple[int, ...]
    parity: int = 1

    def holds(self, register: Sequence[int]) -> bool:
        value = 0
        for b in self.bits:
            value ^= register[b]
        return value == self.parity


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    name: str
    qubits: Tuple[int, ...]
    clbits: Tuple[int, ...] = ()
    params: Tuple[float, ...] = ()
    condition: Optional[ParityCondition] = None
    basis: Optional[str] = None
    edge: Optional[Tuple[int, int]] = None
    group: Optional[int] = None

    @property
    def is_two_qubit(self) -> bool:
        return self.kind in (GateKind.TWO_QUBIT, GateKind.VIRTUAL_TWO_QUBIT)

    def on(self, qubits: Sequence[int], clbit_offset: int = 0, group: Optional[int] = None) -> "Gate":
        """Return this gate relabelled onto new qubits (and shifted classical bits)."""
        condition = self.condition
        if condition is not None and clbit_offset:
            condition = ParityCondition(tuple(b + clbit_offset for b in condition.bits), condition.parity)
        return replace(
            self,
            qubits=tuple(qubits),
            clbits=tuple(b + clbit_offset for b in self.clbits),
            condition=condition,
            group=self.group if group is None else group,
        )


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    num_clbits: int = 0
    gates: Tuple[Gate, ...] = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.gates)

    def with_gates(self, gates: Iterable[Gate], num_qubits: Optional[int] = None,
                   num_clbits: Optional[int] = None) -> "Circuit":
        return Circuit(
            num_qubits=self.num_qubits if num_qubits is None else num_qubits,
            num_clbits=self.num_clbits if num_clbits is None else num_clbits,
            gates=tuple(gates),
        )

    @property
    def is_static(self) -> bool:
        """True when the circuit has no feed-forward, resets or virtual markers."""
        return not any(
            g.kind in (GateKind.CONDITIONAL_PAULI, GateKind.RESET, GateKind.VIRTUAL_TWO_QUBIT)
            for g in self.gates
        )


# --- Gate constructors ---

def one_qubit(name: str, qubit: int, *params: float) -> Gate:
    return Gate(GateKind.ONE_QUBIT, name, (qubit,), params=tuple(float(p) for p in params))


def two_qubit(name: str, a: int, b: int, *params: float) -> Gate:
    return Gate(GateKind.TWO_QUBIT, name, (a, b), params=tuple(float(p) for p in params))


def virtual_two_qubit(gate: Gate, qubits: Tuple[int, int]) -> Gate:
    """Mark a two-qubit gate as executed over the virtual edge joining `qubits`."""
    return Gate(
        GateKind.VIRTUAL_TWO_QUBIT,
        gate.name,
        tuple(qubits),
        params=gate.params,
        edge=(min(qubits), max(qubits)),
    )


def h(q: int) -> Gate:
    return one_qubit("h", q)


def x(q: int) -> Gate:
    return one_qubit("x", q)


def z(q: int) -> Gate:
    return one_qubit("z", q)


def rz(q: int, theta: float) -> Gate:
    return one_qubit("rz", q, theta)


def rx(q: int, theta: float) -> Gate:
    return one_qubit("rx", q, theta)


def cx(control: int, target: int) -> Gate:
    return two_qubit("cx", control, target)


def cz(a: int, b: int) -> Gate:
    return two_qubit("cz", a, b)


def swap(a: int, b: int) -> Gate:
    return two_qubit("swap", a, b)


def rzz(a: int, b: int, theta: float) -> Gate:
    return two_qubit("rzz", a, b, theta)


def cu(control: int, target: int, matrix) -> Gate:
    """Controlled-U with U given as a 2x2 complex matrix."""
    flat: List[float] = []
    for row in matrix:
        for entry in row:
            c = complex(entry)
            flat.extend((c.real, c.imag))
    return two_qubit("cu", control, target, *flat)


def measure(q: int, bit: int, basis: str = "Z") -> Gate:
    return Gate(GateKind.MEASURE, "measure", (q,), clbits=(bit,), basis=basis)


def reset(q: int) -> Gate:
    return Gate(GateKind.RESET, "reset", (q,))


def conditional_pauli(pauli: str, q: int, bits: Sequence[int], parity: int = 1) -> Gate:
    condition = ParityCondition(tuple(bits), parity)
    return Gate(GateKind.CONDITIONAL_PAULI, pauli.lower(), (q,), clbits=condition.bits, condition=condition)


def cu_matrix(gate: Gate) -> List[List[complex]]:
    p = gate.params
    return [
        [complex(p[0], p[1]), complex(p[2], p[3])],
        [complex(p[4], p[5]), complex(p[6], p[7])],
    ]


# --- Validation ---

def validate_circuit(circuit: Circuit, allow_virtual: bool = True) -> None:
    """Check the circuit invariants, raising on the first offending gate."""
    written = set()
    for index, gate in enumerate(circuit.gates):
        if not gate.qubits:
            raise CircuitValidationError(index, "gate has no qubits")
        for q in gate.qubits:
            if not 0 <= q < circuit.num_qubits:
                raise CircuitValidationError(index, f"qubit {q} out of range for {circuit.num_qubits} qubits")
        if len(set(gate.qubits)) != len(gate.qubits):
            raise CircuitValidationError(index, f"repeated qubit in {list(gate.qubits)}")
        for b in gate.clbits:
            if not 0 <= b < circuit.num_clbits:
                raise CircuitValidationError(index, f"classical bit {b} out of range for {circuit.num_clbits} bits")

        kind = gate.kind
        if kind == GateKind.ONE_QUBIT:
            _check_vocabulary(index, gate, ONE_QUBIT_GATES, 1)
        elif kind in (GateKind.TWO_QUBIT, GateKind.VIRTUAL_TWO_QUBIT):
            _check_vocabulary(index, gate, TWO_QUBIT_GATES, 2)
            if kind == GateKind.VIRTUAL_TWO_QUBIT:
                if not allow_virtual:
                    raise CircuitValidationError(index, "virtual gate in a physical circuit")
                if gate.edge is None or set(gate.edge) != set(gate.qubits):
                    raise CircuitValidationError(index, "virtual gate edge does not match its qubits")
        elif kind == GateKind.MEASURE:
            if len(gate.qubits) != 1 or len(gate.clbits) != 1:
                raise CircuitValidationError(index, "measure needs one qubit and one classical bit")
            if (gate.basis or "Z") not in MEASURE_BASES:
                raise CircuitValidationError(index, f"unknown measurement basis {gate.basis}")
            written.add(gate.clbits[0])
        elif kind == GateKind.RESET:
            if len(gate.qubits) != 1:
                raise CircuitValidationError(index, "reset acts on one qubit")
        elif kind == GateKind.CONDITIONAL_PAULI:
            if gate.name not in ("x", "z") or len(gate.qubits) != 1:
                raise CircuitValidationError(index, "conditional Pauli must be a single-qubit x or z")
            if gate.condition is None or not gate.condition.bits:
                raise CircuitValidationError(index, "conditional Pauli without a parity condition")
            if gate.condition.parity not in (0, 1):
                raise CircuitValidationError(index, "parity must be 0 or 1")
            for b in gate.condition.bits:
                if not 0 <= b < circuit.num_clbits:
                    raise CircuitValidationError(index, f"classical bit {b} out of range")
                if b not in written:
                    raise CircuitValidationError(index, f"classical bit {b} read before it is measured")


def _check_vocabulary(index: int, gate: Gate, vocabulary: Dict[str, int], arity: int) -> None:
    if gate.name not in vocabulary:
        raise CircuitValidationError(index, f"unknown gate '{gate.name}'")
    if len(gate.qubits) != arity:
        raise CircuitValidationError(index, f"'{gate.name}' expects {arity} qubit(s)")
    if len(gate.params) != vocabulary[gate.name]:
        raise CircuitValidationError(
            index, f"'{gate.name}' expects {vocabulary[gate.name]} parameter(s), got {len(gate.params)}"
        )


# --- File format ---

class ConditionRecord(BaseModel):
    bits: List[int]
    parity: int = 1


class GateRecord(BaseModel):
    kind: GateKind
    name: str
    qubits: List[int]
    clbits: List[int] = []
    params: List[float] = []
    condition: Optional[ConditionRecord] = None
    basis: Optional[str] = None
    edge: Optional[Tuple[int, int]] = None
    group: Optional[int] = None

    @classmethod
    def from_gate(cls, gate: Gate) -> "GateRecord":
        return cls(
            kind=gate.kind,
            name=gate.name,
            qubits=list(gate.qubits),
            clbits=list(gate.clbits),
            params=list(gate.params),
            condition=None if gate.condition is None else ConditionRecord(
                bits=list(gate.condition.bits), parity=gate.condition.parity
            ),
            basis=gate.basis,
            edge=gate.edge,
            group=gate.group,
        )

    def to_gate(self) -> Gate:
        return Gate(
            kind=self.kind,
            name=self.name,
            qubits=tuple(self.qubits),
            clbits=tuple(self.clbits),
            params=tuple(self.params),
            condition=None if self.condition is None else ParityCondition(
                tuple(self.condition.bits), self.condition.parity
            ),
            basis=self.basis,
            edge=None if self.edge is None else tuple(self.edge),
            group=self.group,
        )


class CircuitDocument(BaseModel):
    version: int = FORMAT_VERSION
    num_qubits: int
    num_clbits: int = 0
    data_qubits: Optional[List[int]] = None
    gates: List[GateRecord] = []

    @classmethod
    def from_circuit(cls, circuit: Circuit, data_qubits: Optional[Iterable[int]] = None) -> "CircuitDocument":
        return cls(
            num_qubits=circuit.num_qubits,
            num_clbits=circuit.num_clbits,
            data_qubits=None if data_qubits is None else sorted(data_qubits),
            gates=[GateRecord.from_gate(g) for g in circuit.gates],
        )

    def to_circuit(self) -> Circuit:
        return Circuit(self.num_qubits, self.num_clbits, tuple(r.to_gate() for r in self.gates))


def dumps_circuit(circuit: Circuit, data_qubits: Optional[Iterable[int]] = None) -> str:
    doc = CircuitDocument.from_circuit(circuit, data_qubits)
    return json.dumps(doc.model_dump(mode="json", exclude_none=True), indent=2)


def loads_circuit(text: str) -> Tuple[Circuit, Optional[List[int]]]:
    doc = CircuitDocument.model_validate_json(text)
    if doc.version != FORMAT_VERSION:
        raise CircuitValidationError(-1, f"unsupported circuit format version {doc.version}")
    circuit = doc.to_circuit()
    validate_circuit(circuit)
    return circuit, doc.data_qubits


def save_circuit(circuit: Circuit, path: str, data_qubits: Optional[Iterable[int]] = None) -> None:
    with open(path, "w") as f:
        f.write(dumps_circuit(circuit, data_qubits))


def load_circuit(path: str) -> Tuple[Circuit, Optional[List[int]]]:
    with open(path, "r") as f:
        return loads_circuit(f.read())
