# src/bench.py
"""Seeded benchmark circuit generators and the RZZ decomposition."""

from typing import Any, Dict, List, Literal, Sequence, Tuple

import networkx as nx
import numpy as np
from pydantic import BaseModel, Field

from src.circuit import Circuit, Gate, GateKind, cx, cz, h, measure, rx, rz, rzz, x
from src.errors import BenchParameterError

Family = Literal["DJ", "GHZ", "GraphState", "QFT", "QFTEntangled", "QAOAMaxCut"]
FAMILIES: Tuple[str, ...] = ("DJ", "GHZ", "GraphState", "QFT", "QFTEntangled", "QAOAMaxCut")


class BenchSpec(BaseModel):
    family: Family
    n: int = Field(ge=2)
    seed: int = 0
    params: Dict[str, Any] = Field(default_factory=dict)


def parse_bench(text: str) -> BenchSpec:
    """Parse `FAMILY:N[:SEED]`; the family name is case-insensitive."""
    parts = text.split(":")
    if len(parts) not in (2, 3):
        raise BenchParameterError(f"Benchmark must look like FAMILY:N[:SEED], got '{text}'")
    lookup = {f.lower(): f for f in FAMILIES}
    family = lookup.get(parts[0].lower())
    if family is None:
        raise BenchParameterError(f"Unknown benchmark family '{parts[0]}'", {"families": list(FAMILIES)})
    try:
        n = int(parts[1])
        seed = int(parts[2]) if len(parts) == 3 else 0
    except ValueError as e:
        raise BenchParameterError(f"Bad size or seed in '{text}'") from e
    if n < 2:
        raise BenchParameterError(f"Benchmarks need at least 2 qubits, got {n}")
    return BenchSpec(family=family, n=n, seed=seed)


def _graph_edges(n: int, seed: int, degree: int = 3, graph: str = "regular") -> List[Tuple[int, int]]:
    if graph == "complete":
        g = nx.complete_graph(n)
    elif graph == "regular":
        if (n * degree) % 2 == 1 or n <= degree:
            raise BenchParameterError(
                f"No {degree}-regular graph on {n} vertices",
                {"n": n, "degree": degree},
            )
        g = nx.random_regular_graph(degree, n, seed=seed)
    else:
        raise BenchParameterError(f"Unknown graph kind '{graph}'")
    return sorted(tuple(sorted(e)) for e in g.edges())


def _with_measurements(gates: List[Gate], n: int, qubits: Sequence[int], enabled: bool) -> Circuit:
    if not enabled:
        return Circuit(n, 0, tuple(gates))
    gates = gates + [measure(q, i) for i, q in enumerate(qubits)]
    return Circuit(n, len(qubits), tuple(gates))


def dj(n: int, seed: int = 0, mask=None, measure_inputs: bool = False) -> Circuit:
    """Deutsch-Jozsa with a balanced parity oracle: n-1 inputs, flag qubit n-1."""
    inputs = n - 1
    if mask is None:
        rng = np.random.default_rng(seed)
        bits = [int(b) for b in rng.integers(0, 2, size=inputs)]
        if not any(bits):
            bits[0] = 1
    elif isinstance(mask, int):
        bits = [(mask >> i) & 1 for i in range(inputs)]
    else:
        bits = [int(b) for b in mask]
    if len(bits) != inputs or not any(bits):
        raise BenchParameterError("DJ mask must be a nonzero pattern over the input qubits", {"mask": bits})
    flag = n - 1
    gates: List[Gate] = [x(flag)]
    gates.extend(h(q) for q in range(n))
    gates.extend(cx(q, flag) for q in range(inputs) if bits[q])
    gates.extend(h(q) for q in range(inputs))
    return _with_measurements(gates, n, range(inputs), measure_inputs)


def ghz_gates(n: int) -> List[Gate]:
    return [h(0)] + [cx(i, i + 1) for i in range(n - 1)]


def ghz(n: int, measure_all: bool = False) -> Circuit:
    return _with_measurements(ghz_gates(n), n, range(n), measure_all)


def graph_state(n: int, seed: int = 0, degree: int = 3, graph: str = "regular",
                measure_all: bool = False) -> Circuit:
    gates: List[Gate] = [h(q) for q in range(n)]
    gates.extend(cz(a, b) for a, b in _graph_edges(n, seed, degree, graph))
    return _with_measurements(gates, n, range(n), measure_all)


def controlled_phase(control: int, target: int, theta: float) -> List[Gate]:
    """diag(1, 1, 1, e^{i theta}) up to global phase."""
    return [
        rz(control, theta / 2),
        rz(target, theta / 2),
        cx(control, target),
        rz(target, -theta / 2),
        cx(control, target),
    ]


def qft_gates(n: int) -> List[Gate]:
    # no terminal bit-reversal swaps
    gates: List[Gate] = []
    for j in range(n):
        gates.append(h(j))
        for k in range(j + 1, n):
            gates.extend(controlled_phase(k, j, np.pi / 2 ** (k - j)))
    return gates


def qft(n: int, measure_all: bool = False) -> Circuit:
    return _with_measurements(qft_gates(n), n, range(n), measure_all)


def qft_entangled(n: int, measure_all: bool = False) -> Circuit:
    return _with_measurements(ghz_gates(n) + qft_gates(n), n, range(n), measure_all)


def qaoa_maxcut(n: int, seed: int = 0, p: int = 2, degree: int = 3, graph: str = "regular",
                gammas=None, betas=None, measure_all: bool = False) -> Circuit:
    if p < 1:
        raise BenchParameterError(f"QAOA needs at least one round, got p={p}")
    rng = np.random.default_rng(seed)
    gammas = list(rng.uniform(0, np.pi, size=p)) if gammas is None else list(gammas)
    betas = list(rng.uniform(0, np.pi, size=p)) if betas is None else list(betas)
    if len(gammas) != p or len(betas) != p:
        raise BenchParameterError("QAOA needs one gamma and one beta per round", {"p": p})
    edges = _graph_edges(n, seed, degree, graph)
    gates: List[Gate] = [h(q) for q in range(n)]
    for gamma, beta in zip(gammas, betas):
        gates.extend(rzz(a, b, float(gamma)) for a, b in edges)
        gates.extend(rx(q, float(beta)) for q in range(n))
    return _with_measurements(gates, n, range(n), measure_all)


def generate(spec: BenchSpec) -> Circuit:
    params = dict(spec.params)
    measure_all = bool(params.pop("measure", False))
    n, seed = spec.n, spec.seed
    try:
        if spec.family == "DJ":
            return dj(n, seed, mask=params.get("mask"), measure_inputs=measure_all)
        if spec.family == "GHZ":
            return ghz(n, measure_all)
        if spec.family == "GraphState":
            return graph_state(n, seed, params.get("degree", 3), params.get("graph", "regular"), measure_all)
        if spec.family == "QFT":
            return qft(n, measure_all)
        if spec.family == "QFTEntangled":
            return qft_entangled(n, measure_all)
        return qaoa_maxcut(
            n,
            seed,
            p=params.get("p", 2),
            degree=params.get("degree", 3),
            graph=params.get("graph", "regular"),
            gammas=params.get("gammas"),
            betas=params.get("betas"),
            measure_all=measure_all,
        )
    except nx.NetworkXError as e:
        raise BenchParameterError(f"Graph generation failed for {spec.family}({n})", {"reason": str(e)}) from e


def lower_rzz(circuit: Circuit) -> Circuit:
    """RZZ(theta)(a, b) -> CX(a, b), RZ(theta)(b), CX(a, b)."""
    gates: List[Gate] = []
    for gate in circuit.gates:
        if gate.kind == GateKind.TWO_QUBIT and gate.name == "rzz":
            a, b = gate.qubits
            gates.extend((cx(a, b), rz(b, gate.params[0]), cx(a, b)))
        else:
            gates.append(gate)
    return circuit.with_gates(gates)
