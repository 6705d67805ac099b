# src/rtg.py
"""Routing with teleported gates: search for the best set of virtual edges.

Steps: baseline routing, auxiliary identification, candidate virtual
edges, filtering against the required pairs, disjoint-subset
enumeration, seeded evaluation of every subset, and selection. The
winning routed circuit is then expanded into physical teleportations.
"""

import itertools
import math
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Dict, Iterator, List, Literal, Optional, Sequence, Tuple

from loguru import logger
from pydantic import BaseModel, Field

from src.circuit import Circuit
from src.metrics import (
    CircuitMetrics,
    GateCounts,
    TimingErrorModel,
    circuit_metrics,
    error_cost,
    gate_counts,
    temporal_depth,
)
from src.router import RoutedCircuit, RouterParams, lower_swaps, route
from src.teleport import expand_teleportations
from src.topology import (
    CouplingMap,
    Edge,
    Layout,
    VirtualEdge,
    auxiliary_qubits,
    enumerate_virtual_edges,
    extend_with_virtual,
    native_distances,
    normalize_edge,
)


class RtgConfig(BaseModel):
    mode: Literal["plain", "noise_aware"] = "plain"
    max_subset_size: int = Field(3, ge=0)
    reuse_limit: int = Field(2, ge=1)
    closeness_radius: int = Field(1, ge=0)
    # also keep candidates that shorten the native route of a required pair
    shortcut_filter: bool = True
    # close a virtual edge inside the router once it reaches reuse_limit
    reuse_in_router: bool = True
    max_path_len: int = Field(8, ge=1)
    trials_per_subset: int = Field(5, ge=1)
    base_seed: int = 0
    weight_depth: float = Field(1.0, ge=0)
    weight_error: float = Field(1.0, ge=0)
    workers: int = Field(1, ge=1)
    router: RouterParams = Field(default_factory=RouterParams)


@dataclass(frozen=True)
class SubsetEvaluation:
    subset: Tuple[VirtualEdge, ...]
    d_t: float
    c_2q: float
    best_seed: Optional[int]
    routed: Optional[RoutedCircuit] = field(default=None, compare=False)
    counts: Optional[GateCounts] = None

    @property
    def feasible(self) -> bool:
        return self.routed is not None

    @property
    def endpoints(self) -> Tuple[Edge, ...]:
        return tuple(ve.endpoints for ve in self.subset)


@dataclass
class RtgResult:
    baseline: SubsetEvaluation
    best: SubsetEvaluation
    expanded: Circuit
    candidates: List[VirtualEdge]
    subsets_evaluated: int
    metrics: Dict[str, CircuitMetrics]
    depth_reduction: Dict[str, float]
    wall_time: float = 0.0


def required_pairs(circuit: Circuit, layout: Layout, cmap: CouplingMap) -> Counter:
    """Physical pairs of two-qubit gates that are not natively adjacent under `layout`."""
    required: Counter = Counter()
    for gate in circuit.gates:
        if not gate.is_two_qubit:
            continue
        a, b = (layout.physical(q) for q in gate.qubits)
        if not cmap.is_native(a, b):
            required[normalize_edge(a, b)] += 1
    return required


def filter_candidates(candidates: Sequence[VirtualEdge], required: Counter, config: RtgConfig,
                      cmap: CouplingMap) -> List[VirtualEdge]:
    """Keep candidates on or near a required pair, or on a shortcut between one.

    A shortcut candidate (u, v) makes hop(p, u) + 1 + hop(v, q) shorter than
    hop(p, q) for some required pair (p, q), so a gate on that pair can meet it
    with fewer SWAPs than the native route needs.
    """
    if not required:
        return []
    dist = native_distances(cmap)
    radius = config.closeness_radius

    def hops(x: int, y: int) -> float:
        return dist.get(x, {}).get(y, math.inf)

    def close(x: int, y: int) -> bool:
        return hops(x, y) <= radius

    def shortcut(u: int, v: int, p: int, q: int) -> bool:
        return min(hops(p, u) + 1 + hops(v, q), hops(p, v) + 1 + hops(u, q)) < hops(p, q)

    kept: List[VirtualEdge] = []
    for ve in candidates:
        u, v = ve.key
        near = ve.key in required or any(
            (close(u, p) and close(v, q)) or (close(u, q) and close(v, p)) for p, q in required
        )
        if not near and config.shortcut_filter:
            near = any(shortcut(u, v, p, q) for p, q in required)
        if not near:
            continue
        if required.get(ve.key, 0) > config.reuse_limit:
            logger.debug(f"Dropping candidate {ve.key}: required {required[ve.key]} times")
            continue
        kept.append(ve)
    return kept


def _disjoint(subset: Sequence[VirtualEdge]) -> bool:
    seen = set()
    for ve in subset:
        if seen & ve.qubits:
            return False
        seen |= ve.qubits
    return True


def enumerate_subsets(filtered: Sequence[VirtualEdge], max_size: int) -> Iterator[Tuple[VirtualEdge, ...]]:
    """Empty subset first, then qubit-disjoint subsets by increasing size."""
    yield ()
    for size in range(1, max_size + 1):
        for combo in itertools.combinations(filtered, size):
            if _disjoint(combo):
                yield combo


def evaluate_subset(circuit: Circuit, cmap: CouplingMap, layout: Layout, subset: Sequence[VirtualEdge],
                    model: TimingErrorModel, config: RtgConfig) -> SubsetEvaluation:
    """Route with `trials_per_subset` seeds and keep the trial of least temporal depth.

    Trials using a virtual edge more than `reuse_limit` times are rejected.
    """
    extended = extend_with_virtual(cmap, subset)
    data = layout.data_set
    router_limit = config.reuse_limit if config.reuse_in_router else config.router.reuse_limit
    best = None
    for i in range(config.trials_per_subset):
        seed = config.base_seed + i
        params = config.router.model_copy(update={"seed": seed, "reuse_limit": router_limit})
        routed = route(circuit, extended, layout, params)
        overused = {edge: n for edge, n in routed.virtual_uses.items() if n > config.reuse_limit}
        if overused:
            logger.warning(f"Rejecting seed {seed} for subset {[ve.key for ve in subset]}: reuse {overused}")
            continue
        priced = lower_swaps(routed.circuit)
        counts = gate_counts(priced, data)
        candidate = (temporal_depth(priced, model), error_cost(counts, model), seed, routed, counts)
        if best is None or candidate[:3] < best[:3]:
            best = candidate
    subset = tuple(subset)
    if best is None:
        return SubsetEvaluation(subset, math.inf, math.inf, None)
    d_t, c_2q, seed, routed, counts = best
    logger.debug(f"Subset {[ve.key for ve in subset]}: d_t={d_t:.3f} c_2q={c_2q:.5f} (seed {seed})")
    return SubsetEvaluation(subset, d_t, c_2q, seed, routed, counts)


def _plain_key(ev: SubsetEvaluation):
    return (ev.d_t, ev.c_2q, len(ev.subset), ev.endpoints)


def _select(evaluations: List[SubsetEvaluation], baseline: SubsetEvaluation, config: RtgConfig) -> SubsetEvaluation:
    feasible = [ev for ev in evaluations if ev.feasible]
    if config.mode == "plain":
        return min(feasible, key=_plain_key)

    d_i, c_i = baseline.d_t, baseline.c_2q
    dominating = [ev for ev in feasible if ev.d_t <= d_i and ev.c_2q <= c_i]

    def score(ev: SubsetEvaluation):
        depth_term = ev.d_t / d_i if d_i > 0 else 0.0
        error_term = ev.c_2q / c_i if c_i > 0 else 0.0
        return (config.weight_depth * depth_term + config.weight_error * error_term,) + _plain_key(ev)

    return min(dominating, key=score)


def _reduction(old: float, new: float) -> float:
    return 100.0 * (1.0 - new / old) if old else 0.0


def rtg_search(circuit: Circuit, cmap: CouplingMap, layout: Layout, model: TimingErrorModel,
               config: Optional[RtgConfig] = None) -> RtgResult:
    config = config or RtgConfig()
    started = time.perf_counter()
    baseline = evaluate_subset(circuit, cmap, layout, (), model, config)
    logger.info(f"Baseline routing: d_t={baseline.d_t:.3f}, c_2q={baseline.c_2q:.5f}, "
                f"{baseline.routed.swap_count} SWAPs")

    aux = auxiliary_qubits(cmap, layout)
    candidates = enumerate_virtual_edges(cmap, layout, config.max_path_len)
    required = required_pairs(circuit, layout, cmap)
    filtered = filter_candidates(candidates, required, config, cmap)
    logger.info(f"{len(aux)} auxiliary qubits, {len(candidates)} virtual edges, "
                f"{len(required)} required pairs, {len(filtered)} candidates kept")

    subsets = list(enumerate_subsets(filtered, config.max_subset_size))[1:]
    evaluate = partial(evaluate_subset, circuit, cmap, layout, model=model, config=config)
    if config.workers > 1 and len(subsets) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            evaluations = list(pool.map(evaluate, subsets))
    else:
        evaluations = [evaluate(s) for s in subsets]

    best = _select([baseline] + evaluations, baseline, config)
    logger.info(f"Best subset {[ve.key for ve in best.subset]} out of {len(subsets) + 1}: "
                f"d_t={best.d_t:.3f}, c_2q={best.c_2q:.5f}")

    best_map = extend_with_virtual(cmap, best.subset)
    expanded = lower_swaps(expand_teleportations(best.routed, best_map, reuse_limit=config.reuse_limit))

    data = layout.data_set
    metrics = {
        "baseline": circuit_metrics(lower_swaps(baseline.routed.circuit), data, model, baseline.routed.swap_count),
        "best": circuit_metrics(lower_swaps(best.routed.circuit), data, model, best.routed.swap_count),
        "expanded": circuit_metrics(expanded, data, model, best.routed.swap_count),
    }
    depth_reduction = {
        "expected": _reduction(metrics["baseline"].depth, metrics["best"].depth),
        "impl": _reduction(metrics["baseline"].depth, metrics["expanded"].depth),
        "temporal": _reduction(baseline.d_t, best.d_t),
    }
    return RtgResult(
        baseline=baseline,
        best=best,
        expanded=expanded,
        candidates=filtered,
        subsets_evaluated=len(subsets) + 1,
        metrics=metrics,
        depth_reduction=depth_reduction,
        wall_time=time.perf_counter() - started,
    )


def baseline_only(circuit: Circuit, cmap: CouplingMap, layout: Layout, model: TimingErrorModel,
                  config: Optional[RtgConfig] = None) -> RtgResult:
    """Plain SABRE routing with the same trials and reporting as the search."""
    config = config or RtgConfig()
    started = time.perf_counter()
    baseline = evaluate_subset(circuit, cmap, layout, (), model, config)
    routed = lower_swaps(baseline.routed.circuit)
    data = layout.data_set
    m = circuit_metrics(routed, data, model, baseline.routed.swap_count)
    return RtgResult(
        baseline=baseline,
        best=baseline,
        expanded=routed,
        candidates=[],
        subsets_evaluated=1,
        metrics={"baseline": m, "best": m, "expanded": m},
        depth_reduction={"expected": 0.0, "impl": 0.0, "temporal": 0.0},
        wall_time=time.perf_counter() - started,
    )
