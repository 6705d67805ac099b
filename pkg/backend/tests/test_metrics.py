import math

import pytest
from hypothesis import given, strategies as st
from pydantic import ValidationError

from src.bench import dj
from src.circuit import Circuit, conditional_pauli, cx, h, measure, swap, virtual_two_qubit
from src.errors import CircuitValidationError
from src.metrics import (
    CircuitMetrics,
    GateCounts,
    LayerProfile,
    TimingErrorModel,
    asap_layers,
    build_dag,
    circuit_metrics,
    depth,
    error_cost,
    gate_counts,
    layer_profile,
    profile_duration,
    temporal_depth,
)
from src.teleport import synth_teleported_cnot


def _per_wire_depth(circuit: Circuit) -> int:
    level = {}
    for gate in circuit.gates:
        wires = [("q", q) for q in gate.qubits] + [("c", b) for b in gate.clbits]
        top = max((level.get(w, 0) for w in wires), default=0) + 1
        for w in wires:
            level[w] = top
    return max(level.values(), default=0)


def test_empty_dag():
    dag = build_dag(Circuit(2))
    assert len(dag) == 0
    assert asap_layers(dag) == []


def test_single_dependency():
    dag = build_dag(Circuit(2, 0, (h(0), cx(0, 1))))
    assert len(dag) == 2
    assert dag.arcs() == [(0, 1, ("q", 0))]


def test_dag_follows_qubit_and_classical_wires():
    circuit = Circuit(2, 1, (h(0), h(1), cx(0, 1), measure(0, 0), conditional_pauli("x", 1, [0])))
    arcs = set(build_dag(circuit).arcs())
    assert arcs == {
        (0, 2, ("q", 0)),
        (1, 2, ("q", 1)),
        (2, 3, ("q", 0)),
        (2, 4, ("q", 1)),
        (3, 4, ("c", 0)),
    }


def test_dag_rejects_read_before_write():
    circuit = Circuit(1, 1, (conditional_pauli("x", 0, [0]),))
    with pytest.raises(CircuitValidationError):
        build_dag(circuit)


@pytest.mark.parametrize(
    "gates, layers",
    [
        ((h(0), h(1)), 1),
        ((h(0), cx(0, 1), h(1)), 3),
    ],
)
def test_asap_layer_count(gates, layers):
    assert len(asap_layers(build_dag(Circuit(2, 0, gates)))) == layers


def test_layers_act_on_disjoint_wires():
    circuit = dj(5, mask=[1, 1, 1, 1])
    dag = build_dag(circuit)
    for layer in asap_layers(dag):
        seen = set()
        for i in layer:
            qubits = set(dag.gate(i).qubits)
            assert not seen & qubits
            seen |= qubits


@pytest.mark.parametrize("n", [3, 5, 9])
def test_depth_matches_per_wire_counter(n):
    circuit = dj(n, seed=n)
    assert depth(circuit) == _per_wire_depth(circuit)


def test_teleport_template_depth_matches_per_wire_counter():
    body = synth_teleported_cnot(4).body
    assert depth(body) == _per_wire_depth(body)


def test_layer_profile_precedence():
    assert layer_profile(Circuit(1, 0, (h(0),))) == LayerProfile(1, 0, 0)
    parallel = Circuit(4, 0, (cx(0, 1), virtual_two_qubit(cx(2, 3), (2, 3))))
    assert layer_profile(parallel) == LayerProfile(0, 0, 1)


def test_layer_profile_and_temporal_depth_sequential(model):
    circuit = Circuit(3, 0, (h(0), cx(0, 1), virtual_two_qubit(cx(0, 2), (0, 2))))
    assert layer_profile(circuit) == LayerProfile(1, 1, 1)
    assert temporal_depth(circuit, model) == pytest.approx(4.1)


def test_temporal_depth_simple(model):
    assert temporal_depth(Circuit(2), model) == 0
    assert temporal_depth(Circuit(2, 0, (cx(0, 1),)), model) == 1.0


@given(
    st.integers(0, 50),
    st.integers(0, 50),
    st.integers(0, 50),
    st.floats(0.01, 5),
    st.floats(0.01, 5),
    st.floats(0.01, 50),
)
def test_profile_duration_is_weighted_sum(n1, n2, nt, t1, t2, tt):
    model = TimingErrorModel(t_1q=t1, t_2q=t2, t_tele=tt)
    expected = n1 * t1 + n2 * t2 + nt * tt
    assert profile_duration(LayerProfile(n1, n2, nt), model) == pytest.approx(expected, rel=1e-12)


def test_gate_counts_data_subset():
    counts = gate_counts(Circuit(3, 0, (cx(0, 1), cx(1, 2))), data_qubits={0, 1})
    assert counts.n_cnot == 2
    assert counts.n_cnot_data == 1
    assert counts.n_g == 2


def test_gate_counts_expanded_teleport():
    body = synth_teleported_cnot(3).body
    tagged = body.with_gates(g.on(g.qubits, group=0) for g in body.gates)
    counts = gate_counts(tagged, data_qubits={0, 4})
    assert counts.n_cnot == 4
    assert counts.n_cnot_data == 0
    assert counts.n_tele == 1
    assert counts.n_g == 0
    assert counts.n_measure == 3
    assert counts.n_reset == 3


def test_swap_counts_as_three():
    counts = gate_counts(Circuit(2, 0, (swap(0, 1),)))
    assert counts.n_cnot == 3
    assert counts.n_g == 3


@pytest.mark.parametrize(
    "n_g, n_tele, expected",
    [
        (0, 0, 0.0),
        (1, 0, 0.01),
        (20, 1, 1 - 0.99 ** 20 * 0.9),
    ],
)
def test_error_cost(n_g, n_tele, expected, model):
    cost = error_cost(GateCounts(n_g=n_g, n_tele=n_tele), model)
    assert cost == pytest.approx(expected, abs=1e-12)


def test_error_cost_worked_value(model):
    assert error_cost(GateCounts(n_g=20, n_tele=1), model) == pytest.approx(0.26388, abs=1e-5)


@given(st.integers(0, 100), st.integers(0, 5), st.floats(0, 0.05))
def test_error_cost_in_unit_interval(n_g, n_tele, p):
    model = TimingErrorModel(p_2q=p, p_tele=10 * p)
    cost = error_cost(GateCounts(n_g=n_g, n_tele=n_tele), model)
    assert 0 <= cost < 1
    assert cost == pytest.approx(1 - (1 - p) ** n_g * (1 - 10 * p) ** n_tele, abs=1e-12)


def test_timing_model_defaults_from_factors():
    model = TimingErrorModel.from_factors(t_2q=2.0, p_2q=0.005)
    assert model.t_tele == 6.0
    assert math.isclose(model.p_tele, 0.05)


def test_timing_model_rejects_bad_values():
    with pytest.raises(ValidationError):
        TimingErrorModel(t_2q=0)
    with pytest.raises(ValidationError):
        TimingErrorModel(p_2q=1.0)


def test_circuit_metrics_record(model):
    metrics = circuit_metrics(Circuit(2, 0, (h(0), cx(0, 1))), {0, 1}, model, swap_count=0)
    assert metrics.depth == 2
    assert metrics.temporal_depth == pytest.approx(1.1)
    assert metrics.n_cnot == 1
    assert metrics.c_2q == pytest.approx(0.01)


def test_circuit_metrics_rejects_inconsistent_counts():
    with pytest.raises(ValidationError):
        CircuitMetrics(depth=1, temporal_depth=1, n_cnot=1, n_tele=0, n_cnot_data=2, n_g=1, c_2q=0)
