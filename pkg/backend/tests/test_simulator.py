from dataclasses import replace

import numpy as np
import pytest

from src.bench import lower_rzz
from src.circuit import Circuit, GateKind, cx, h, measure, reset, rz, rzz, swap, x
from src.errors import BranchCapExceeded, SimulationError
from src.simulator import (
    StateVector,
    apply_gate,
    circuit_unitary,
    enumerate_branches,
    equal_up_to_phase,
    fidelity,
    gate_matrix,
    random_state,
    random_unitary,
    verify_routed_equivalence,
    verify_teleport,
)
from src.teleport import TeleportTemplate, synth_teleported_cnot, synth_teleported_cu
from src.topology import Layout

CNOT = gate_matrix(cx(0, 1))


def _controlled(u: np.ndarray) -> np.ndarray:
    m = np.eye(4, dtype=complex)
    m[2:, 2:] = u
    return m


def test_statevector_basics():
    zero = StateVector.zero(3)
    assert zero.n == 3
    assert zero.flat[0] == 1
    assert zero.norm() == pytest.approx(1.0)
    flipped = apply_gate(zero, x(0))
    # qubit 0 is the most significant bit
    assert flipped.flat[4] == pytest.approx(1.0)


def test_unitaries_preserve_norm():
    rng = np.random.default_rng(3)
    state = random_state(4, rng)
    for gate in (h(0), cx(0, 3), rz(2, 0.7), rzz(1, 2, 1.3), swap(0, 2)):
        state = apply_gate(state, gate)
    assert state.norm() == pytest.approx(1.0, abs=1e-12)


def test_no_measurement_single_branch():
    branches = enumerate_branches(Circuit(2, 0, (h(0), cx(0, 1))), StateVector.zero(2))
    assert len(branches) == 1
    assert branches[0].probability == pytest.approx(1.0)


def test_measurement_splits_evenly():
    branches = enumerate_branches(Circuit(1, 1, (h(0), measure(0, 0))), StateVector.zero(1))
    assert [b.outcomes for b in branches] == [(0,), (1,)]
    assert [b.probability for b in branches] == pytest.approx([0.5, 0.5])
    assert [b.clbits for b in branches] == [(0,), (1,)]


def test_zero_probability_branch_is_flagged():
    branches = enumerate_branches(Circuit(1, 1, (measure(0, 0),)), StateVector.zero(1))
    assert len(branches) == 2
    assert not branches[0].zero_probability
    assert branches[1].zero_probability
    assert branches[1].state.norm() == pytest.approx(1.0)


def test_reset_returns_qubit_to_zero():
    branches = enumerate_branches(Circuit(1, 0, (h(0), reset(0))), StateVector.zero(1))
    assert sum(b.probability for b in branches) == pytest.approx(1.0)
    for b in branches:
        assert abs(b.state.flat[0]) == pytest.approx(1.0)


def test_branch_cap():
    circuit = Circuit(1, 21, tuple(measure(0, i) for i in range(21)))
    with pytest.raises(BranchCapExceeded):
        enumerate_branches(circuit, StateVector.zero(1))


def test_branch_cap_counts_undetermined_resets():
    gates = tuple(g for _ in range(16) for g in (h(0), reset(0)))
    with pytest.raises(BranchCapExceeded) as err:
        enumerate_branches(Circuit(1, 0, gates), StateVector.zero(1), cap=2)
    assert err.value.details["cap"] == 2
    # two resets fit under the same cap: four unrecorded branches
    branches = enumerate_branches(Circuit(1, 0, gates[:4]), StateVector.zero(1), cap=2)
    assert len(branches) == 4
    assert sum(b.probability for b in branches) == pytest.approx(1.0)


def test_determined_reset_does_not_branch():
    gates = tuple(g for _ in range(30) for g in (x(0), reset(0)))
    assert len(enumerate_branches(Circuit(1, 0, gates), StateVector.zero(1), cap=0)) == 1


def test_state_size_mismatch():
    with pytest.raises(SimulationError):
        enumerate_branches(Circuit(2), StateVector.zero(3))


def test_cnot_template_single_auxiliary_branches():
    template = synth_teleported_cnot(1)
    rng = np.random.default_rng(11)
    psi = random_state(2, rng).amplitudes
    full = np.zeros((2, 2, 2), dtype=complex)
    full[:, 0, :] = psi
    branches = enumerate_branches(template.body, StateVector(full))
    assert len(branches) == 2
    expected = (CNOT @ psi.reshape(4)).reshape(2, 2)
    for b in branches:
        assert b.probability == pytest.approx(0.5, abs=1e-9)
        assert equal_up_to_phase(b.state.amplitudes[:, 0, :], expected, atol=1e-9)


@pytest.mark.parametrize("n_aux", range(1, 9))
def test_teleported_cnot_every_branch(n_aux):
    template = synth_teleported_cnot(n_aux)
    result = verify_teleport(template, CNOT, trials=20, seed=n_aux)
    assert result.passed, result.failures[:3]
    assert result.max_deviation < 1e-9
    for probabilities in result.branch_probabilities:
        assert len(probabilities) == 2 ** n_aux
        assert probabilities == pytest.approx([2.0 ** -n_aux] * 2 ** n_aux, abs=1e-9)


@pytest.mark.parametrize("n_aux", range(1, 7))
def test_teleported_cu_random_unitaries(n_aux):
    rng = np.random.default_rng(100 + n_aux)
    for _ in range(10):
        u = random_unitary(rng)
        result = verify_teleport(synth_teleported_cu(n_aux, unitary=u), _controlled(u), trials=10, seed=n_aux)
        assert result.passed, result.failures[:3]


@pytest.mark.parametrize("n_aux", range(1, 7))
def test_teleported_rzz(n_aux):
    rng = np.random.default_rng(200 + n_aux)
    for theta in rng.uniform(-np.pi, np.pi, size=10):
        target = gate_matrix(rzz(0, 1, float(theta)))
        result = verify_teleport(synth_teleported_cu(n_aux, rzz_theta=float(theta)), target, trials=10, seed=n_aux)
        assert result.passed, (theta, result.failures[:3])


def test_identity_cu_acts_as_identity():
    assert verify_teleport(synth_teleported_cu(3, unitary=np.eye(2)), np.eye(4), trials=5).passed


def test_corrupted_template_fails():
    template = synth_teleported_cnot(2)
    gates = tuple(
        replace(g, condition=replace(g.condition, parity=0)) if g.kind == GateKind.CONDITIONAL_PAULI and g.name == "z"
        else g
        for g in template.body.gates
    )
    broken = TeleportTemplate("cnot", 2, template.body.with_gates(gates), 3, 2, template.depth)
    result = verify_teleport(broken, CNOT, trials=5)
    assert not result.passed
    assert result.max_deviation > 1e-3


def test_circuit_unitary_of_rzz_lowering():
    rng = np.random.default_rng(5)
    circuit = Circuit(3, 0, (h(0), rzz(0, 2, 0.9), cx(1, 2), rzz(1, 0, float(rng.uniform(0, np.pi)))))
    lowered = lower_rzz(circuit)
    assert equal_up_to_phase(circuit_unitary(circuit), circuit_unitary(lowered), atol=1e-12)


def test_equivalence_identical_circuit():
    circuit = Circuit(3, 0, (h(0), cx(0, 1), cx(1, 2)))
    layout = Layout((0, 1, 2))
    report = verify_routed_equivalence(circuit, circuit, layout, layout, trials=5)
    assert report.passed
    assert report.max_deviation < 1e-9


def test_equivalence_undoes_swap_permutation():
    original = Circuit(3, 0, (h(0), cx(0, 2)))
    routed = Circuit(3, 0, (h(0), swap(0, 1), cx(1, 2)))
    report = verify_routed_equivalence(original, routed, Layout((0, 1, 2)), Layout((1, 0, 2)), trials=5)
    assert report.passed
    wrong = verify_routed_equivalence(original, routed, Layout((0, 1, 2)), Layout((0, 1, 2)), trials=5)
    assert not wrong.passed


def test_equivalence_rejects_dynamic_original():
    layout = Layout((0,))
    with pytest.raises(SimulationError):
        verify_routed_equivalence(Circuit(1, 1, (measure(0, 0),)), Circuit(1), layout, layout)


def test_fidelity_ignores_global_phase():
    rng = np.random.default_rng(8)
    psi = random_state(3, rng).amplitudes
    assert fidelity(psi, np.exp(0.4j) * psi) == pytest.approx(1.0)
    assert fidelity(StateVector.zero(1).amplitudes, apply_gate(StateVector.zero(1), x(0)).amplitudes) == 0.0
