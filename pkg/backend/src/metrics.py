# src/metrics.py
"""Dependency DAG, ASAP layering and per-circuit metrics.

Layers are classified for temporal depth with the precedence
teleported > native two-qubit > single-qubit class. Measurements, resets
and conditional Paulis fall in the single-qubit class.
"""

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple

import networkx as nx
from pydantic import BaseModel, Field, model_validator

from src.circuit import Circuit, Gate, GateKind, validate_circuit


class TimingErrorModel(BaseModel):
    """Layer durations (free time units) and two-qubit gate error rates."""

    t_1q: float = Field(0.1, gt=0)
    t_2q: float = Field(1.0, gt=0)
    t_tele: float = Field(3.0, gt=0)
    p_2q: float = Field(0.01, ge=0, lt=1)
    p_tele: float = Field(0.1, ge=0, lt=1)

    @classmethod
    def from_factors(cls, t_2q: float = 1.0, t_1q: float = 0.1, tele_time_factor: float = 3.0,
                     p_2q: float = 0.01, tele_error_factor: float = 10.0) -> "TimingErrorModel":
        return cls(
            t_1q=t_1q,
            t_2q=t_2q,
            t_tele=tele_time_factor * t_2q,
            p_2q=p_2q,
            p_tele=tele_error_factor * p_2q,
        )


@dataclass(frozen=True)
class LayerProfile:
    n_1q: int = 0
    n_2q: int = 0
    n_tele: int = 0

    @property
    def total(self) -> int:
        return self.n_1q + self.n_2q + self.n_tele


@dataclass(frozen=True)
class GateCounts:
    n_cnot: int = 0
    n_tele: int = 0
    n_cnot_data: int = 0
    n_g: int = 0
    n_measure: int = 0
    n_reset: int = 0


class Dag:
    """Wire-dependency DAG over gate indices.

    Each arc carries the list of wires ("q", i) / ("c", b) it follows.
    """

    def __init__(self, circuit: Circuit, graph: nx.DiGraph):
        self.circuit = circuit
        self.graph = graph

    def __len__(self) -> int:
        return self.graph.number_of_nodes()

    def gate(self, index: int) -> Gate:
        return self.circuit.gates[index]

    def arcs(self) -> List[Tuple[int, int, Tuple]]:
        return [(a, b, w) for a, b, data in self.graph.edges(data=True) for w in data["wires"]]

    def predecessors(self, index: int) -> List[int]:
        return sorted(self.graph.predecessors(index))

    def successors(self, index: int) -> List[int]:
        return sorted(self.graph.successors(index))


def gate_wires(gate: Gate) -> List[Tuple[str, int]]:
    wires = [("q", q) for q in gate.qubits]
    wires.extend(("c", b) for b in gate.clbits)
    return wires


def build_dag(circuit: Circuit) -> Dag:
    validate_circuit(circuit)
    graph = nx.DiGraph()
    graph.add_nodes_from(range(len(circuit.gates)))
    last: Dict[Tuple[str, int], int] = {}
    for index, gate in enumerate(circuit.gates):
        for wire in gate_wires(gate):
            prev = last.get(wire)
            if prev is not None:
                if graph.has_edge(prev, index):
                    graph[prev][index]["wires"].append(wire)
                else:
                    graph.add_edge(prev, index, wires=[wire])
            last[wire] = index
    return Dag(circuit, graph)


def asap_layers(dag: Dag) -> List[List[int]]:
    """Gate indices per ASAP layer, each layer sorted."""
    return [sorted(generation) for generation in nx.topological_generations(dag.graph)]


def classify_layer(gates: Iterable[Gate]) -> str:
    kinds = {g.kind for g in gates}
    if GateKind.VIRTUAL_TWO_QUBIT in kinds:
        return "tele"
    if GateKind.TWO_QUBIT in kinds:
        return "2q"
    return "1q"


def layer_profile(circuit: Circuit) -> LayerProfile:
    dag = build_dag(circuit)
    tally = {"1q": 0, "2q": 0, "tele": 0}
    for layer in asap_layers(dag):
        tally[classify_layer(dag.gate(i) for i in layer)] += 1
    return LayerProfile(n_1q=tally["1q"], n_2q=tally["2q"], n_tele=tally["tele"])


def profile_duration(profile: LayerProfile, model: TimingErrorModel) -> float:
    return model.t_1q * profile.n_1q + model.t_2q * profile.n_2q + model.t_tele * profile.n_tele


def temporal_depth(circuit: Circuit, model: TimingErrorModel) -> float:
    return profile_duration(layer_profile(circuit), model)


def depth(circuit: Circuit) -> int:
    if not circuit.gates:
        return 0
    return len(asap_layers(build_dag(circuit)))


def two_qubit_weight(gate: Gate) -> int:
    """CNOT-equivalent weight: a SWAP prices as three CNOTs."""
    if not gate.is_two_qubit:
        return 0
    return 3 if gate.name == "swap" else 1


def gate_counts(circuit: Circuit, data_qubits: Optional[Iterable[int]] = None) -> GateCounts:
    data = set(range(circuit.num_qubits) if data_qubits is None else data_qubits)
    n_cnot = n_cnot_data = n_g = n_measure = n_reset = 0
    markers = 0
    groups = set()
    for gate in circuit.gates:
        if gate.group is not None:
            groups.add(gate.group)
        weight = two_qubit_weight(gate)
        if weight:
            n_cnot += weight
            if all(q in data for q in gate.qubits):
                n_cnot_data += weight
            if gate.kind == GateKind.VIRTUAL_TWO_QUBIT:
                markers += 1
            elif gate.group is None:
                # gates inside a teleport instance are priced by p_tele
                n_g += weight
        elif gate.kind == GateKind.MEASURE:
            n_measure += 1
        elif gate.kind == GateKind.RESET:
            n_reset += 1
    return GateCounts(
        n_cnot=n_cnot,
        n_tele=markers + len(groups),
        n_cnot_data=n_cnot_data,
        n_g=n_g,
        n_measure=n_measure,
        n_reset=n_reset,
    )


class CircuitMetrics(BaseModel):
    """Metric record for one circuit, as written into run reports."""

    depth: int
    temporal_depth: float
    n_cnot: int
    n_tele: int
    n_cnot_data: int
    n_g: int
    c_2q: float
    swap_count: int = 0

    @model_validator(mode="after")
    def _check_counts(self) -> "CircuitMetrics":
        if self.n_cnot_data > self.n_cnot:
            raise ValueError("n_cnot_data cannot exceed n_cnot")
        return self


def error_cost(counts: GateCounts, model: TimingErrorModel) -> float:
    """Probability that at least one two-qubit gate fails."""
    return 1.0 - (1.0 - model.p_2q) ** counts.n_g * (1.0 - model.p_tele) ** counts.n_tele


def circuit_metrics(circuit: Circuit, data_qubits: Iterable[int], model: TimingErrorModel,
                    swap_count: int = 0) -> CircuitMetrics:
    counts = gate_counts(circuit, data_qubits)
    return CircuitMetrics(
        depth=depth(circuit),
        temporal_depth=temporal_depth(circuit, model),
        n_cnot=counts.n_cnot,
        n_tele=counts.n_tele,
        n_cnot_data=counts.n_cnot_data,
        n_g=counts.n_g,
        c_2q=error_cost(counts, model),
        swap_count=swap_count,
    )
