# src/simulator.py
"""Dense statevector simulation with mid-circuit measurement and feed-forward.

States are numpy tensors of shape (2,) * n; qubit q is axis q, so qubit 0
is the most significant bit of the flattened amplitude index. Every
measurement outcome is followed depth-first, outcome 0 before 1.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np
from loguru import logger

from src.circuit import Circuit, Gate, GateKind, cu_matrix
from src.errors import BranchCapExceeded, SimulationError
from src.teleport import TeleportTemplate
from src.topology import Layout

BRANCH_CAP = 20
NORM_TOL = 1e-9
ZERO_PROB = 1e-14
MAX_DENSE_QUBITS = 22

_SQ2 = 1 / np.sqrt(2)
_FIXED_1Q = {
    "h": np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
    "s": np.array([[1, 0], [0, 1j]], dtype=complex),
    "sdg": np.array([[1, 0], [0, -1j]], dtype=complex),
    "t": np.array([[1, 0], [0, np.exp(1j * np.pi / 4)]], dtype=complex),
    "tdg": np.array([[1, 0], [0, np.exp(-1j * np.pi / 4)]], dtype=complex),
}
_FIXED_2Q = {
    "cx": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
    "cz": np.diag([1, 1, 1, -1]).astype(complex),
    "swap": np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex),
}


@dataclass
class StateVector:
    amplitudes: np.ndarray  # shape (2,) * n

    @property
    def n(self) -> int:
        return self.amplitudes.ndim

    @property
    def flat(self) -> np.ndarray:
        return self.amplitudes.reshape(-1)

    @classmethod
    def zero(cls, n: int) -> "StateVector":
        amps = np.zeros((2,) * n, dtype=complex)
        amps[(0,) * n] = 1.0
        return cls(amps)

    @classmethod
    def from_flat(cls, vector: np.ndarray) -> "StateVector":
        vector = np.asarray(vector, dtype=complex)
        n = int(round(np.log2(vector.size)))
        return cls(vector.reshape((2,) * n))

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass
class Branch:
    outcomes: Tuple[int, ...]
    probability: float
    state: StateVector
    clbits: Tuple[int, ...] = ()
    zero_probability: bool = False


@dataclass
class TeleportVerification:
    passed: bool
    max_deviation: float
    branch_probabilities: List[List[float]] = field(default_factory=list)
    failures: List[Dict] = field(default_factory=list)


@dataclass
class EquivalenceReport:
    passed: bool
    max_deviation: float
    trials: int
    branches: int
    failures: List[Dict] = field(default_factory=list)


def gate_matrix(gate: Gate) -> np.ndarray:
    name, p = gate.name, gate.params
    if name in _FIXED_1Q:
        return _FIXED_1Q[name]
    if name in _FIXED_2Q:
        return _FIXED_2Q[name]
    if name == "rz":
        return np.diag([np.exp(-0.5j * p[0]), np.exp(0.5j * p[0])])
    if name == "rx":
        c, s = np.cos(p[0] / 2), np.sin(p[0] / 2)
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if name == "ry":
        c, s = np.cos(p[0] / 2), np.sin(p[0] / 2)
        return np.array([[c, -s], [s, c]], dtype=complex)
    if name == "u3":
        theta, phi, lam = p
        c, s = np.cos(theta / 2), np.sin(theta / 2)
        return np.array(
            [[c, -np.exp(1j * lam) * s], [np.exp(1j * phi) * s, np.exp(1j * (phi + lam)) * c]], dtype=complex
        )
    if name == "rzz":
        a, b = np.exp(-0.5j * p[0]), np.exp(0.5j * p[0])
        return np.diag([a, b, b, a])
    if name == "cu":
        m = np.eye(4, dtype=complex)
        m[2:, 2:] = np.array(cu_matrix(gate))
        return m
    raise SimulationError(f"No matrix for gate '{name}'", {"gate": name})


def apply_matrix(amplitudes: np.ndarray, matrix: np.ndarray, qubits: Sequence[int]) -> np.ndarray:
    """Apply a 2^k x 2^k matrix to the given qubit axes. Trailing batch axes pass through."""
    k = len(qubits)
    tensor = matrix.reshape((2,) * (2 * k))
    result = np.tensordot(tensor, amplitudes, axes=(list(range(k, 2 * k)), list(qubits)))
    return np.moveaxis(result, list(range(k)), list(qubits))


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    return StateVector(apply_matrix(state.amplitudes, gate_matrix(gate), gate.qubits))


def _project(amplitudes: np.ndarray, qubit: int, outcome: int) -> Tuple[np.ndarray, float]:
    index = [slice(None)] * amplitudes.ndim
    index[qubit] = outcome
    kept = amplitudes[tuple(index)]
    prob = float(np.vdot(kept, kept).real)
    projected = np.zeros_like(amplitudes)
    if prob > ZERO_PROB:
        projected[tuple(index)] = kept / np.sqrt(prob)
    else:
        # arbitrary normalized stand-in: the other half moved onto this outcome
        other = list(index)
        other[qubit] = 1 - outcome
        rest = amplitudes[tuple(other)]
        projected[tuple(index)] = rest / np.linalg.norm(rest)
    return projected, prob


class _BranchRunner:
    """Depth-first walk over measurement outcomes and undetermined resets.

    `splits` counts the branch points on the current path; it may not pass `cap`.
    """

    def __init__(self, circuit: Circuit, cap: int):
        self.circuit = circuit
        self.cap = cap
        self.branches: List[Branch] = []

    def _split(self, splits: int) -> int:
        splits += 1
        if splits > self.cap:
            raise BranchCapExceeded(splits, self.cap)
        return splits

    def run(self, pos: int, amps: np.ndarray, bits: List[int], outcomes: Tuple[int, ...],
            prob: float, zero: bool, splits: int = 0) -> None:
        gates = self.circuit.gates
        while pos < len(gates):
            gate = gates[pos]
            pos += 1
            kind = gate.kind
            if kind in (GateKind.ONE_QUBIT, GateKind.TWO_QUBIT, GateKind.VIRTUAL_TWO_QUBIT):
                amps = apply_matrix(amps, gate_matrix(gate), gate.qubits)
            elif kind == GateKind.CONDITIONAL_PAULI:
                if gate.condition.holds(bits):
                    amps = apply_matrix(amps, _FIXED_1Q[gate.name], gate.qubits)
            elif kind == GateKind.MEASURE:
                q = gate.qubits[0]
                x_basis = gate.basis == "X"
                splits = self._split(splits)
                if x_basis:
                    amps = apply_matrix(amps, _FIXED_1Q["h"], (q,))
                for outcome in (0, 1):
                    projected, p = _project(amps, q, outcome)
                    if x_basis:
                        projected = apply_matrix(projected, _FIXED_1Q["h"], (q,))
                    child_bits = list(bits)
                    child_bits[gate.clbits[0]] = outcome
                    self.run(pos, projected, child_bits, outcomes + (outcome,), prob * p,
                             zero or p <= ZERO_PROB, splits)
                return
            elif kind == GateKind.RESET:
                q = gate.qubits[0]
                zero_part, p0 = _project(amps, q, 0)
                if p0 > 1 - ZERO_PROB:
                    amps = zero_part
                    continue
                one_part, p1 = _project(amps, q, 1)
                one_part = apply_matrix(one_part, _FIXED_1Q["x"], (q,))
                if p0 <= ZERO_PROB:
                    amps = one_part
                    continue
                # reset of an undetermined qubit splits into two unrecorded branches
                splits = self._split(splits)
                self.run(pos, zero_part, list(bits), outcomes, prob * p0, zero, splits)
                self.run(pos, one_part, list(bits), outcomes, prob * p1, zero, splits)
                return
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > NORM_TOL:
            raise SimulationError(f"State norm drifted to {norm}", {"norm": norm})
        self.branches.append(Branch(outcomes, prob, StateVector(amps), tuple(bits), zero))


def enumerate_branches(circuit: Circuit, state: StateVector, cap: int = BRANCH_CAP) -> List[Branch]:
    if state.n != circuit.num_qubits:
        raise SimulationError(
            f"State has {state.n} qubits, circuit has {circuit.num_qubits}",
            {"state_qubits": state.n, "circuit_qubits": circuit.num_qubits},
        )
    measurements = sum(1 for g in circuit.gates if g.kind == GateKind.MEASURE)
    if measurements > cap:
        raise BranchCapExceeded(measurements, cap)
    runner = _BranchRunner(circuit, cap)
    runner.run(0, state.amplitudes.astype(complex), [0] * circuit.num_clbits, (), 1.0, False)
    total = sum(b.probability for b in runner.branches)
    if abs(total - 1.0) > NORM_TOL:
        raise SimulationError(f"Branch probabilities sum to {total}", {"total": total})
    return runner.branches


def random_state(n: int, rng: np.random.Generator) -> StateVector:
    vec = rng.normal(size=2 ** n) + 1j * rng.normal(size=2 ** n)
    return StateVector.from_flat(vec / np.linalg.norm(vec))


def random_unitary(rng: np.random.Generator, dim: int = 2) -> np.ndarray:
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """|<a|b>|^2, insensitive to global phase."""
    return float(abs(np.vdot(np.ravel(a), np.ravel(b))) ** 2)


def circuit_unitary(circuit: Circuit) -> np.ndarray:
    if any(g.kind not in (GateKind.ONE_QUBIT, GateKind.TWO_QUBIT, GateKind.VIRTUAL_TWO_QUBIT)
           for g in circuit.gates):
        raise SimulationError("Only measurement-free unitary circuits have a unitary")
    n = circuit.num_qubits
    dim = 2 ** n
    amps = np.eye(dim, dtype=complex).reshape((2,) * n + (dim,))
    for gate in circuit.gates:
        amps = apply_matrix(amps, gate_matrix(gate), gate.qubits)
    return amps.reshape(dim, dim)


def equal_up_to_phase(a: np.ndarray, b: np.ndarray, atol: float = 1e-12) -> bool:
    a, b = np.asarray(a), np.asarray(b)
    idx = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    if abs(a[idx]) < atol:
        return False
    phase = b[idx] / a[idx]
    return bool(np.allclose(a * phase, b, atol=atol))


def _final_data_amplitudes(amps: np.ndarray, data_axes: Sequence[int]) -> Tuple[np.ndarray, float]:
    """Move `data_axes` to the front (in order), slice every other qubit at |0>."""
    n = amps.ndim
    others = [q for q in range(n) if q not in data_axes]
    ordered = np.transpose(amps, list(data_axes) + others)
    data = ordered[(Ellipsis,) + (0,) * len(others)] if others else ordered
    leak = 1.0 - float(np.vdot(data, data).real)
    return data, leak


def verify_teleport(template: TeleportTemplate, target: np.ndarray, trials: int = 20, tol: float = 1e-9,
                    seed: int = 0) -> TeleportVerification:
    """Check every measurement branch of a teleport template against `target` on (control, target)."""
    rng = np.random.default_rng(seed)
    body = template.body
    data_axes = (template.control, template.target)
    target = np.asarray(target, dtype=complex)
    max_dev = 0.0
    probabilities: List[List[float]] = []
    failures: List[Dict] = []
    for trial in range(trials):
        psi = random_state(2, rng).amplitudes
        full = np.zeros((2,) * body.num_qubits, dtype=complex)
        index = [0] * body.num_qubits
        for c in (0, 1):
            for t in (0, 1):
                index[data_axes[0]], index[data_axes[1]] = c, t
                full[tuple(index)] = psi[c, t]
        expected = (target @ psi.reshape(4)).reshape(2, 2)
        branches = enumerate_branches(body, StateVector(full))
        probabilities.append([b.probability for b in branches])
        for b in branches:
            if b.zero_probability:
                continue
            data, leak = _final_data_amplitudes(b.state.amplitudes, data_axes)
            deviation = max(1.0 - abs(np.vdot(expected, data)), leak)
            max_dev = max(max_dev, deviation)
            if deviation > tol:
                failures.append({"trial": trial, "outcomes": list(b.outcomes), "deviation": deviation})
    return TeleportVerification(not failures, max_dev, probabilities, failures)


def _active_qubits(circuit: Circuit, extra: Sequence[int]) -> List[int]:
    active = set(extra)
    for g in circuit.gates:
        active.update(g.qubits)
    return sorted(active)


def verify_routed_equivalence(original: Circuit, final: Circuit, initial: Layout, final_layout: Layout,
                              trials: int = 20, tol: float = 1e-6, seed: int = 0) -> EquivalenceReport:
    """Compare a routed/expanded circuit to the logical original on random inputs.

    Only the physical qubits the final circuit touches are simulated.
    """
    if any(g.kind != GateKind.ONE_QUBIT and not g.is_two_qubit for g in original.gates):
        raise SimulationError("The original circuit must be free of measurements, resets and conditions")
    n_log = len(initial)
    if original.num_qubits > n_log or len(final_layout) != n_log:
        raise SimulationError(
            "Layouts do not match the original circuit",
            {"num_qubits": original.num_qubits, "initial": n_log, "final": len(final_layout)},
        )
    active = _active_qubits(final, list(initial.mapping) + list(final_layout.mapping))
    if len(active) > MAX_DENSE_QUBITS:
        raise SimulationError(
            f"{len(active)} active qubits exceed the dense simulation limit of {MAX_DENSE_QUBITS}",
            {"active_qubits": len(active), "limit": MAX_DENSE_QUBITS},
        )
    compact = {p: i for i, p in enumerate(active)}
    local = Circuit(
        len(active),
        final.num_clbits,
        tuple(g.on(tuple(compact[q] for q in g.qubits)) for g in final.gates),
    )
    reference = Circuit(n_log, 0, original.gates)

    rng = np.random.default_rng(seed)
    start_axes = [compact[p] for p in initial.mapping]
    end_axes = [compact[p] for p in final_layout.mapping]
    max_dev = 0.0
    n_branches = 0
    failures: List[Dict] = []
    for trial in range(trials):
        psi = random_state(n_log, rng).amplitudes
        expected = psi
        for gate in reference.gates:
            expected = apply_matrix(expected, gate_matrix(gate), gate.qubits)
        # place logical qubits on their physical axes, everything else |0>
        others = len(active) - n_log
        full = psi.reshape(psi.shape + (1,) * others) * _zero_tail(others)
        full = np.moveaxis(full, list(range(n_log)), start_axes) if n_log else full
        branches = enumerate_branches(local, StateVector(full))
        n_branches += len(branches)
        for b in branches:
            if b.zero_probability:
                continue
            data, leak = _final_data_amplitudes(b.state.amplitudes, end_axes)
            deviation = max(1.0 - abs(np.vdot(expected, data)), leak)
            max_dev = max(max_dev, deviation)
            if deviation > tol:
                failures.append({"trial": trial, "outcomes": list(b.outcomes), "deviation": deviation})
    logger.debug(f"Equivalence check: {trials} trials, {n_branches} branches, max deviation {max_dev:.3e}")
    return EquivalenceReport(not failures, max_dev, trials, n_branches, failures)


def _zero_tail(others: int) -> np.ndarray:
    tail = np.zeros((2,) * others, dtype=complex)
    tail[(0,) * others] = 1.0
    return tail
