# src/router.py
"""SABRE-style SWAP insertion over a coupling map that may carry virtual edges.

SWAPs are only placed on native edges inside the data region (the qubits
of the initial layout). A two-qubit gate whose operands sit on the two
ends of a virtual edge is emitted as a virtual marker instead.

With `shortcut_distance` on, the heuristic prices a teleportable gate by
the shorter of its native distance and the walk that brings both operands
onto the ends of one open virtual edge. An edge closes once it has been
used `reuse_limit` times.
"""

from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional

import networkx as nx
import numpy as np
from loguru import logger
from pydantic import BaseModel, Field, field_serializer

from src.circuit import TELEPORTABLE_GATES, Circuit, Gate, GateKind, cx, swap, validate_circuit, virtual_two_qubit
from src.errors import RoutingError
from src.metrics import build_dag
from src.topology import CouplingMap, Edge, Layout, native_distances, normalize_edge


class RouterParams(BaseModel):
    extended_set_size: int = Field(20, ge=0)
    extended_weight: float = Field(0.5, ge=0, le=1)
    decay_increment: float = Field(0.001, ge=0, le=1)
    decay_reset_interval: int = Field(5, ge=1)
    seed: int = 0
    # gate names that may execute on a virtual edge
    virtual_gates: FrozenSet[str] = frozenset(TELEPORTABLE_GATES)
    shortcut_distance: bool = True
    reuse_limit: Optional[int] = Field(None, ge=1)

    @field_serializer("virtual_gates")
    def _sorted_gates(self, gates: FrozenSet[str]) -> List[str]:
        return sorted(gates)


@dataclass(frozen=True)
class RoutedCircuit:
    circuit: Circuit
    initial_layout: Layout
    final_layout: Layout
    swap_count: int = 0
    virtual_uses: Counter = field(default_factory=Counter, hash=False)


@dataclass
class RoutingReport:
    passed: bool
    violations: List[Dict] = field(default_factory=list)


class _SabreRouter:
    """Single routing run; holds the mutable search state."""

    def __init__(self, circuit: Circuit, cmap: CouplingMap, initial: Layout, params: RouterParams):
        self.circuit = circuit
        self.cmap = cmap
        self.initial = initial
        self.params = params
        self.data = initial.data_set
        self.region = cmap.graph.subgraph(self.data)
        self.dist = native_distances(cmap, self.data)
        self.log2phys = list(initial.mapping)
        self.phys2log = {p: l for l, p in enumerate(self.log2phys)}
        self.rng = np.random.default_rng(params.seed)
        self.decay = {p: 1.0 for p in self.data}
        self.max_stall = 10 * max(len(self.data), 1)
        self.dag = build_dag(circuit)
        self.out: List[Gate] = []
        self.swap_count = 0
        self.virtual_uses: Counter = Counter()
        # virtual edges between data qubits that still accept gates
        self.open_edges: List[Edge] = [ve.key for ve in cmap.virtual_edges if set(ve.key) <= self.data]

    # distance the heuristic sees for a logical gate under a given placement
    def _distance(self, gate: Gate, a: int, b: int) -> int:
        if gate.name not in self.params.virtual_gates or not self.open_edges:
            return self.dist[a][b]
        if normalize_edge(a, b) in self.open_edges:
            return 1
        if not self.params.shortcut_distance:
            return self.dist[a][b]
        best = self.dist[a][b]
        for u, v in self.open_edges:
            best = min(best, self.dist[a][u] + 1 + self.dist[v][b], self.dist[a][v] + 1 + self.dist[u][b])
        return best

    def _routable(self, gate: Gate) -> bool:
        if not gate.is_two_qubit:
            return True
        a, b = (self.log2phys[q] for q in gate.qubits)
        if self.cmap.is_native(a, b):
            return True
        return gate.name in self.params.virtual_gates and normalize_edge(a, b) in self.open_edges

    def _emit(self, gate: Gate) -> None:
        physical = tuple(self.log2phys[q] for q in gate.qubits)
        if gate.is_two_qubit and not self.cmap.is_native(*physical):
            self.out.append(virtual_two_qubit(gate, physical))
            key = normalize_edge(*physical)
            self.virtual_uses[key] += 1
            limit = self.params.reuse_limit
            if limit is not None and self.virtual_uses[key] >= limit:
                self.open_edges.remove(key)
                logger.debug(f"Virtual edge {key} closed after {limit} uses")
        else:
            self.out.append(gate.on(physical))

    def _apply_swap(self, a: int, b: int) -> None:
        la, lb = self.phys2log.get(a), self.phys2log.get(b)
        if la is not None:
            self.log2phys[la] = b
        if lb is not None:
            self.log2phys[lb] = a
        self.phys2log.pop(a, None)
        self.phys2log.pop(b, None)
        if la is not None:
            self.phys2log[b] = la
        if lb is not None:
            self.phys2log[a] = lb
        self.out.append(swap(a, b))
        self.swap_count += 1

    def _extended_set(self, front: List[int]) -> List[int]:
        limit = self.params.extended_set_size
        extended: List[int] = []
        seen = set(front)
        queue = deque(front)
        while queue and len(extended) < limit:
            node = queue.popleft()
            for succ in self.dag.successors(node):
                if succ in seen:
                    continue
                seen.add(succ)
                queue.append(succ)
                if self.dag.gate(succ).is_two_qubit:
                    extended.append(succ)
                    if len(extended) >= limit:
                        break
        return extended

    def _swap_candidates(self, front: List[int]) -> List[Edge]:
        candidates = set()
        for node in front:
            for q in self.dag.gate(node).qubits:
                p = self.log2phys[q]
                for n in self.region.neighbors(p):
                    candidates.add(normalize_edge(p, n))
        return sorted(candidates)

    def _layer_cost(self, nodes: List[int], placement: List[int]) -> float:
        total = 0
        for node in nodes:
            gate = self.dag.gate(node)
            a, b = (placement[q] for q in gate.qubits)
            total += self._distance(gate, a, b)
        return total

    def _score(self, swap_edge: Edge, front: List[int], extended: List[int]) -> float:
        a, b = swap_edge
        trial = list(self.log2phys)
        la, lb = self.phys2log.get(a), self.phys2log.get(b)
        if la is not None:
            trial[la] = b
        if lb is not None:
            trial[lb] = a
        cost = self._layer_cost(front, trial) / len(front)
        if extended:
            cost += self.params.extended_weight * self._layer_cost(extended, trial) / len(extended)
        return max(self.decay[a], self.decay[b]) * cost

    def _reset_decay(self) -> None:
        self.decay = {p: 1.0 for p in self.decay}

    def _release_valve(self, front: List[int]) -> None:
        """Walk the oldest blocked gate together along a shortest native path."""
        node = min(front)
        gate = self.dag.gate(node)
        a, b = (self.log2phys[q] for q in gate.qubits)
        path = nx.shortest_path(self.region, a, b)
        logger.debug(f"Router stalled; forcing {len(path) - 2} SWAPs for gate {node}")
        for p, n in zip(path[:-2], path[1:-1]):
            self._apply_swap(p, n)
        self._reset_decay()

    def run(self) -> RoutedCircuit:
        remaining = {n: self.dag.graph.in_degree(n) for n in self.dag.graph.nodes}
        front = sorted(n for n, d in remaining.items() if d == 0)
        steps = 0
        stall = 0
        while front:
            executable = [n for n in front if self._routable(self.dag.gate(n))]
            if executable:
                for node in executable:
                    self._emit(self.dag.gate(node))
                    front.remove(node)
                    for succ in self.dag.successors(node):
                        remaining[succ] -= 1
                        if remaining[succ] == 0:
                            front.append(succ)
                front.sort()
                self._reset_decay()
                stall = 0
                continue

            if stall >= self.max_stall:
                self._release_valve(front)
                stall = 0
                continue

            extended = self._extended_set(front)
            scores = {edge: self._score(edge, front, extended) for edge in self._swap_candidates(front)}
            best_score = min(scores.values())
            best = [edge for edge, score in scores.items() if score == best_score]
            chosen = best[int(self.rng.choice(len(best)))]
            self._apply_swap(*chosen)
            logger.debug(f"SWAP {chosen} (score {best_score:.4f}, {len(best)} tied)")

            steps += 1
            stall += 1
            if steps % self.params.decay_reset_interval == 0:
                self._reset_decay()
            else:
                self.decay[chosen[0]] += self.params.decay_increment
                self.decay[chosen[1]] += self.params.decay_increment

        return RoutedCircuit(
            circuit=Circuit(self.cmap.num_physical, self.circuit.num_clbits, tuple(self.out)),
            initial_layout=self.initial,
            final_layout=Layout(tuple(self.log2phys)),
            swap_count=self.swap_count,
            virtual_uses=self.virtual_uses,
        )


def route(circuit: Circuit, cmap: CouplingMap, initial: Layout,
          params: Optional[RouterParams] = None) -> RoutedCircuit:
    params = params or RouterParams()
    if circuit.num_qubits > len(initial):
        raise RoutingError(
            f"Circuit has {circuit.num_qubits} qubits but the layout places only {len(initial)}",
            {"num_qubits": circuit.num_qubits, "layout_size": len(initial)},
        )
    initial.check_against(cmap)
    validate_circuit(circuit, allow_virtual=False)
    region = cmap.graph.subgraph(initial.data_set)
    if len(initial) > 1 and not nx.is_connected(region):
        raise RoutingError(
            "Data qubits are not connected through native edges",
            {"data_qubits": sorted(initial.data_set)},
        )
    routed = _SabreRouter(circuit, cmap, initial, params).run()
    logger.debug(
        f"Routed {len(circuit)} gates with seed {params.seed}: "
        f"{routed.swap_count} SWAPs, {sum(routed.virtual_uses.values())} virtual gates"
    )
    return routed


def validate_routing(routed: RoutedCircuit, cmap: CouplingMap) -> RoutingReport:
    violations: List[Dict] = []
    for index, gate in enumerate(routed.circuit.gates):
        if not gate.is_two_qubit:
            continue
        a, b = gate.qubits
        if gate.kind == GateKind.TWO_QUBIT:
            if not cmap.is_native(a, b):
                reason = "SWAP off a native edge" if gate.name == "swap" else "operands not natively adjacent"
                violations.append({"gate_index": index, "name": gate.name, "qubits": [a, b], "reason": reason})
        else:
            if gate.name == "swap":
                violations.append({"gate_index": index, "name": gate.name, "qubits": [a, b],
                                   "reason": "SWAP on a virtual edge"})
            elif cmap.virtual_edge(a, b) is None:
                violations.append({"gate_index": index, "name": gate.name, "qubits": [a, b],
                                   "reason": "virtual marker on a pair without a virtual edge"})
    return RoutingReport(passed=not violations, violations=violations)


def lower_swaps(circuit: Circuit) -> Circuit:
    """Replace every SWAP with three CNOTs."""
    gates: List[Gate] = []
    for gate in circuit.gates:
        if gate.kind == GateKind.TWO_QUBIT and gate.name == "swap":
            a, b = gate.qubits
            gates.extend((cx(a, b), cx(b, a), cx(a, b)))
        else:
            gates.append(gate)
    return circuit.with_gates(gates)
