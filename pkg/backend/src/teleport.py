# src/teleport.py
"""Constant-depth teleported two-qubit gates and the expansion pass.

Template qubits are [control, a_1 .. a_N, target]; measuring a_i writes
classical bit i-1. Auxiliaries are paired into Bell pairs, the pairs and
the two data qubits are linked by one parallel CNOT layer, then
alternate auxiliaries are measured in Z and X. Z outcomes fix the target
side (X correction), X outcomes fix the control side (Z correction).
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from src.circuit import (
    Circuit,
    Gate,
    GateKind,
    conditional_pauli,
    cu,
    cu_matrix,
    cx,
    h,
    measure,
    reset,
    rzz,
    two_qubit,
)
from src.errors import TeleportError
from src.metrics import depth as circuit_depth
from src.router import RoutedCircuit
from src.topology import CouplingMap

UNITARY_TOL = 1e-12


@dataclass(frozen=True)
class TeleportTemplate:
    kind: str  # "cnot", "cu" or "rzz"
    n_aux: int
    body: Circuit
    data_touching_cnots: int
    quantum_layer_depth: int
    depth: int

    @property
    def control(self) -> int:
        return 0

    @property
    def target(self) -> int:
        return self.n_aux + 1


def _bell_pairs(n_aux: int) -> List[Tuple[int, int]]:
    """Auxiliary pairs prepared as Bell states.

    Even N pairs (a1,a2),(a3,a4)..; odd N leaves a1 for the control and pairs (a2,a3),...
    """
    first = 1 if n_aux % 2 == 0 else 2
    return [(i, i + 1) for i in range(first, n_aux, 2)]


def _chain(n_aux: int) -> Tuple[List[Gate], List[int], List[int]]:
    """Entangling chain carrying the control value onto a_N.

    Returns the gates plus the auxiliaries measured in Z and in X.
    """
    gates: List[Gate] = []
    pairs = _bell_pairs(n_aux)
    gates.extend(h(a) for a, _ in pairs)
    if n_aux % 2 == 1:
        gates.append(cx(0, 1))
    gates.extend(cx(a, b) for a, b in pairs)
    if n_aux % 2 == 0:
        gates.append(cx(0, 1))
        links = [(b, b + 1) for _, b in pairs[:-1]]
    else:
        links = [(a - 1, a) for a, _ in pairs]
    gates.extend(cx(a, b) for a, b in links)
    # the first member of each Bell pair is measured in Z
    z_measured = [a for a, _ in pairs]
    x_measured = [i for i in range(1, n_aux + 1) if i not in z_measured]
    return gates, z_measured, x_measured


def _measure_z(auxes: Sequence[int]) -> List[Gate]:
    return [measure(a, a - 1) for a in auxes]


def _measure_x(auxes: Sequence[int]) -> List[Gate]:
    gates: List[Gate] = []
    for a in auxes:
        gates.append(h(a))
        gates.append(measure(a, a - 1))
    return gates


def _bits(auxes: Sequence[int]) -> List[int]:
    return [a - 1 for a in auxes]


def _two_qubit_depth(body: Circuit) -> int:
    two_qubit_only = body.with_gates(g for g in body.gates if g.is_two_qubit)
    return circuit_depth(two_qubit_only)


def _finish(kind: str, n_aux: int, gates: List[Gate]) -> TeleportTemplate:
    body = Circuit(n_aux + 2, n_aux, tuple(gates))
    data = {0, n_aux + 1}
    touching = sum(1 for g in gates if g.name == "cx" and data & set(g.qubits))
    return TeleportTemplate(
        kind=kind,
        n_aux=n_aux,
        body=body,
        data_touching_cnots=touching,
        quantum_layer_depth=_two_qubit_depth(body),
        depth=circuit_depth(body),
    )


def synth_teleported_cnot(n_aux: int) -> TeleportTemplate:
    if n_aux < 1:
        raise TeleportError("Teleported CNOT needs at least one auxiliary qubit; emit a native CNOT instead",
                            {"n_aux": n_aux})
    target = n_aux + 1
    gates, z_measured, x_measured = _chain(n_aux)
    gates.append(cx(n_aux, target))
    gates.extend(_measure_z(z_measured))
    gates.extend(_measure_x(x_measured))
    if z_measured:
        gates.append(conditional_pauli("x", target, _bits(z_measured)))
    gates.append(conditional_pauli("z", 0, _bits(x_measured)))
    gates.extend(reset(a) for a in range(1, n_aux + 1))
    return _finish("cnot", n_aux, gates)


def _synth_controlled(kind: str, n_aux: int, middle: Gate) -> TeleportTemplate:
    """Chain the control onto a_N, then apply `middle` on (a_N, target)."""
    if n_aux < 1:
        raise TeleportError("Teleported gate needs at least one auxiliary qubit", {"n_aux": n_aux})
    target = n_aux + 1
    gates, z_measured, x_measured = _chain(n_aux)
    gates.extend(_measure_z(z_measured))
    if z_measured:
        gates.append(conditional_pauli("x", n_aux, _bits(z_measured)))
    gates.append(middle.on((n_aux, target)))
    gates.extend(_measure_x(x_measured))
    gates.append(conditional_pauli("z", 0, _bits(x_measured)))
    gates.extend(reset(a) for a in range(1, n_aux + 1))
    return _finish(kind, n_aux, gates)


def check_unitary(matrix) -> np.ndarray:
    u = np.asarray(matrix, dtype=complex)
    if u.shape != (2, 2):
        raise TeleportError(f"Controlled-U needs a 2x2 matrix, got shape {u.shape}")
    deviation = float(np.max(np.abs(u.conj().T @ u - np.eye(2))))
    if deviation > UNITARY_TOL:
        raise TeleportError("Controlled-U matrix is not unitary", {"deviation": deviation})
    return u


def synth_teleported_cu(n_aux: int, unitary=None, rzz_theta: Optional[float] = None) -> TeleportTemplate:
    """Teleported controlled-U (give `unitary`) or RZZ (give `rzz_theta`)."""
    if (unitary is None) == (rzz_theta is None):
        raise TeleportError("Give exactly one of a unitary or an RZZ angle")
    if rzz_theta is not None:
        return _synth_controlled("rzz", n_aux, rzz(0, 1, rzz_theta))
    return _synth_controlled("cu", n_aux, cu(0, 1, check_unitary(unitary)))


@lru_cache(maxsize=None)
def _cached_template(name: str, params: Tuple[float, ...], n_aux: int) -> TeleportTemplate:
    if name == "cx":
        return synth_teleported_cnot(n_aux)
    if name == "rzz":
        return synth_teleported_cu(n_aux, rzz_theta=params[0])
    if name == "cz":
        return _synth_controlled("cu", n_aux, two_qubit("cz", 0, 1))
    if name == "cu":
        check_unitary(cu_matrix(Gate(GateKind.TWO_QUBIT, "cu", (0, 1), params=params)))
        return _synth_controlled("cu", n_aux, Gate(GateKind.TWO_QUBIT, "cu", (0, 1), params=params))
    raise TeleportError(f"No teleportation template for gate '{name}'", {"gate": name})


def template_for(gate: Gate, n_aux: int) -> TeleportTemplate:
    return _cached_template(gate.name, tuple(gate.params), n_aux)


def expand_teleportations(routed: RoutedCircuit, cmap: CouplingMap,
                          reuse_limit: Optional[int] = None) -> Circuit:
    """Replace every virtual marker with its teleportation template."""
    circuit = routed.circuit
    markers = [g for g in circuit.gates if g.kind == GateKind.VIRTUAL_TWO_QUBIT]
    if not markers:
        return circuit

    edges = {}
    for index, gate in enumerate(circuit.gates):
        if gate.kind != GateKind.VIRTUAL_TWO_QUBIT:
            continue
        ve = cmap.virtual_edge(*gate.qubits)
        if ve is None:
            raise TeleportError(
                f"Virtual gate at index {index} on {list(gate.qubits)} has no virtual edge in the map",
                {"gate_index": index, "qubits": list(gate.qubits)},
            )
        edges[ve.key] = ve

    uses: Dict[Tuple[int, int], int] = {}
    aux_owner: Dict[int, Tuple[int, int]] = {}
    for ve in edges.values():
        for a in ve.aux_path:
            if a in aux_owner and aux_owner[a] != ve.key:
                raise TeleportError(f"Auxiliary qubit {a} is shared by two virtual edges",
                                    {"qubit": a, "edges": [list(aux_owner[a]), list(ve.key)]})
            aux_owner[a] = ve.key

    gates: List[Gate] = []
    next_clbit = circuit.num_clbits
    group = 0
    for index, gate in enumerate(circuit.gates):
        if gate.kind != GateKind.VIRTUAL_TWO_QUBIT:
            busy = [q for q in gate.qubits if q in aux_owner]
            if busy:
                raise TeleportError(
                    f"Gate at index {index} acts on auxiliary qubit {busy[0]} of a teleportation path",
                    {"gate_index": index, "qubit": busy[0]},
                )
            gates.append(gate)
            continue
        ve = cmap.virtual_edge(*gate.qubits)
        uses[ve.key] = uses.get(ve.key, 0) + 1
        if reuse_limit is not None and uses[ve.key] > reuse_limit:
            raise TeleportError(
                f"Virtual edge {ve.key} used {uses[ve.key]} times, limit is {reuse_limit}",
                {"edge": list(ve.key), "uses": uses[ve.key], "limit": reuse_limit},
            )
        control, target = gate.qubits
        template = template_for(gate, ve.n_aux)
        physical = (control, *ve.path_from(control), target)
        for g in template.body.gates:
            gates.append(g.on(tuple(physical[q] for q in g.qubits), clbit_offset=next_clbit, group=group))
        next_clbit += template.n_aux
        group += 1

    logger.debug(f"Expanded {len(markers)} teleported gates over {len(edges)} virtual edges")
    return Circuit(circuit.num_qubits, next_clbit, tuple(gates))
