import numpy as np
import pytest

from src.circuit import Circuit, GateKind, cu, cx, cz, h, rzz, virtual_two_qubit
from src.errors import TeleportError
from src.router import RoutedCircuit, validate_routing
from src.teleport import (
    check_unitary,
    expand_teleportations,
    synth_teleported_cnot,
    synth_teleported_cu,
    template_for,
)
from src.topology import CouplingMap, Layout, VirtualEdge, extend_with_virtual, line_map


def _names(template):
    return [(g.name, g.qubits) for g in template.body.gates]


def _count(circuit: Circuit, kind: GateKind, name=None) -> int:
    return sum(1 for g in circuit.gates if g.kind == kind and (name is None or g.name == name))


def test_cnot_single_auxiliary():
    template = synth_teleported_cnot(1)
    assert _names(template) == [
        ("cx", (0, 1)),
        ("cx", (1, 2)),
        ("h", (1,)),
        ("measure", (1,)),
        ("z", (0,)),
        ("reset", (1,)),
    ]
    assert template.control == 0
    assert template.target == 2


def test_cnot_bell_mediated_two_auxiliaries():
    template = synth_teleported_cnot(2)
    two_qubit = [(g.name, g.qubits) for g in template.body.gates if g.is_two_qubit]
    assert two_qubit == [("cx", (1, 2)), ("cx", (0, 1)), ("cx", (2, 3))]
    assert _count(template.body, GateKind.MEASURE) == 2
    corrections = [g for g in template.body.gates if g.kind == GateKind.CONDITIONAL_PAULI]
    assert [(g.name, g.qubits, g.condition.bits) for g in corrections] == [("x", (3,), (0,)), ("z", (0,), (1,))]


@pytest.mark.parametrize("n_aux", range(1, 21))
def test_cnot_resource_counts(n_aux):
    template = synth_teleported_cnot(n_aux)
    body = template.body
    assert _count(body, GateKind.TWO_QUBIT, "cx") == n_aux + 1
    assert _count(body, GateKind.MEASURE) == n_aux
    assert _count(body, GateKind.RESET) == n_aux
    assert template.data_touching_cnots == 2
    assert template.quantum_layer_depth == 2


@pytest.mark.parametrize("n_aux", range(1, 21))
def test_template_depth_is_constant(n_aux):
    cnot = synth_teleported_cnot(n_aux)
    controlled = synth_teleported_cu(n_aux, unitary=np.eye(2))
    assert cnot.quantum_layer_depth == controlled.quantum_layer_depth == 2
    if n_aux >= 2:
        assert cnot.depth == synth_teleported_cnot(2).depth
        assert controlled.depth == synth_teleported_cu(2, unitary=np.eye(2)).depth


def test_cnot_needs_an_auxiliary():
    with pytest.raises(TeleportError):
        synth_teleported_cnot(0)


def test_cu_single_auxiliary():
    u = np.array([[0, 1], [1, 0]])
    template = synth_teleported_cu(1, unitary=u)
    assert [(g.name, g.qubits) for g in template.body.gates if g.is_two_qubit] == [("cx", (0, 1)), ("cu", (1, 2))]
    assert _count(template.body, GateKind.MEASURE) == 1


@pytest.mark.parametrize("n_aux", range(1, 21))
def test_cu_resource_counts(n_aux):
    body = synth_teleported_cu(n_aux, rzz_theta=0.3).body
    assert _count(body, GateKind.TWO_QUBIT, "cx") == n_aux
    assert _count(body, GateKind.TWO_QUBIT, "rzz") == 1
    assert _count(body, GateKind.MEASURE) == n_aux


def test_cu_argument_checks():
    with pytest.raises(TeleportError):
        synth_teleported_cu(2)
    with pytest.raises(TeleportError):
        synth_teleported_cu(2, unitary=np.eye(2), rzz_theta=0.1)
    with pytest.raises(TeleportError):
        synth_teleported_cu(2, unitary=np.array([[1, 1], [0, 1]]))
    with pytest.raises(TeleportError):
        check_unitary(np.eye(3))


def test_template_for_dispatch():
    assert template_for(cx(0, 1), 3).kind == "cnot"
    assert template_for(rzz(0, 1, 0.5), 3).kind == "rzz"
    assert template_for(cz(0, 1), 3).kind == "cu"
    assert template_for(cu(0, 1, np.eye(2)), 2).kind == "cu"
    assert template_for(cx(0, 1), 3) is template_for(cx(4, 7), 3)


def _line_with_ladder():
    # data 0-1-2 on a line, auxiliaries 3-4-5 joining 0 to 2
    cmap = CouplingMap.from_edges(6, [(0, 1), (1, 2), (0, 3), (3, 4), (4, 5), (5, 2)])
    return extend_with_virtual(cmap, [VirtualEdge((0, 2), (3, 4, 5))])


def test_expand_single_marker():
    cmap = _line_with_ladder()
    layout = Layout((0, 1, 2))
    routed = RoutedCircuit(Circuit(6, 0, (virtual_two_qubit(cx(2, 0), (2, 0)),)), layout, layout)
    expanded = expand_teleportations(routed, cmap)
    assert _count(expanded, GateKind.VIRTUAL_TWO_QUBIT) == 0
    assert _count(expanded, GateKind.TWO_QUBIT, "cx") == 4
    assert _count(expanded, GateKind.MEASURE) == 3
    assert _count(expanded, GateKind.RESET) == 3
    corrections = [g for g in expanded.gates if g.kind == GateKind.CONDITIONAL_PAULI]
    assert len(corrections) == 2
    assert {g.qubits[0] for g in corrections} <= {0, 2}
    assert expanded.num_clbits == 3
    assert {g.group for g in expanded.gates} == {0}
    physical = RoutedCircuit(expanded, layout, layout)
    assert validate_routing(physical, cmap).passed
    # control 2 walks the path from its own end
    first = next(g for g in expanded.gates if g.is_two_qubit and 2 in g.qubits)
    assert first.qubits == (2, 5)


def test_expand_reuse_gets_fresh_bits_and_groups():
    cmap = _line_with_ladder()
    layout = Layout((0, 1, 2))
    marker = virtual_two_qubit(cx(0, 2), (0, 2))
    routed = RoutedCircuit(Circuit(6, 1, (marker, h(1), marker)), layout, layout)
    expanded = expand_teleportations(routed, cmap, reuse_limit=2)
    assert expanded.num_clbits == 1 + 6
    measured = [g.clbits[0] for g in expanded.gates if g.kind == GateKind.MEASURE]
    assert sorted(measured) == list(range(1, 7))
    groups = [g.group for g in expanded.gates if g.group is not None]
    assert sorted(set(groups)) == [0, 1]
    # second instance starts after the first instance's resets
    last_reset = max(i for i, g in enumerate(expanded.gates) if g.kind == GateKind.RESET and g.group == 0)
    first_second = min(i for i, g in enumerate(expanded.gates) if g.group == 1)
    assert last_reset < first_second


def test_expand_without_markers_is_identity():
    layout = Layout((0, 1))
    circuit = Circuit(2, 0, (h(0), cx(0, 1)))
    assert expand_teleportations(RoutedCircuit(circuit, layout, layout), line_map(2)) == circuit


def test_expand_errors():
    cmap = _line_with_ladder()
    layout = Layout((0, 1, 2))
    marker = virtual_two_qubit(cx(0, 2), (0, 2))
    over = RoutedCircuit(Circuit(6, 0, (marker,) * 3), layout, layout)
    with pytest.raises(TeleportError):
        expand_teleportations(over, cmap, reuse_limit=2)
    busy = RoutedCircuit(Circuit(6, 0, (marker, h(4))), layout, layout)
    with pytest.raises(TeleportError):
        expand_teleportations(busy, cmap)
    stray = RoutedCircuit(Circuit(6, 0, (virtual_two_qubit(cx(0, 1), (0, 1)),)), layout, layout)
    with pytest.raises(TeleportError):
        expand_teleportations(stray, cmap)
