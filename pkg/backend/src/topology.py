# src/topology.py
"""Coupling maps, layouts, auxiliary qubits and teleportation-backed virtual edges."""

import json
import os
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
from loguru import logger
from pydantic import BaseModel, ValidationError

from src.errors import SubsetConflictError, TopologyError

FORMAT_VERSION = 1
DEFAULT_MAX_PATH_LEN = 8
EAGLE_PATH = os.path.join(os.path.dirname(__file__), "../data/eagle127.json")

Edge = Tuple[int, int]


def normalize_edge(a: int, b: int) -> Edge:
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class VirtualEdge:
    """A non-native data pair joined through auxiliary qubits.

    `aux_path` runs from endpoints[0] to endpoints[1].
    """

    endpoints: Edge
    aux_path: Tuple[int, ...]

    @property
    def n_aux(self) -> int:
        return len(self.aux_path)

    @property
    def key(self) -> Edge:
        return normalize_edge(*self.endpoints)

    @property
    def qubits(self) -> FrozenSet[int]:
        return frozenset(self.endpoints) | frozenset(self.aux_path)

    def path_from(self, control: int) -> Tuple[int, ...]:
        """Auxiliary path ordered from `control` towards the other endpoint."""
        if control == self.endpoints[0]:
            return self.aux_path
        if control == self.endpoints[1]:
            return tuple(reversed(self.aux_path))
        raise TopologyError(f"Qubit {control} is not an endpoint of {self.endpoints}")

    def to_record(self) -> Dict:
        return {"endpoints": list(self.endpoints), "aux_path": list(self.aux_path)}


@dataclass(frozen=True)
class CouplingMap:
    num_physical: int
    native_edges: FrozenSet[Edge]
    virtual_edges: Tuple[VirtualEdge, ...] = ()
    name: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        for a, b in self.native_edges:
            if a == b:
                raise TopologyError(f"Self-loop on qubit {a}")
            if not (0 <= a < self.num_physical and 0 <= b < self.num_physical):
                raise TopologyError(f"Edge ({a}, {b}) outside {self.num_physical} qubits")
        for ve in self.virtual_edges:
            if ve.key in self.native_edges:
                raise TopologyError(f"Virtual edge {ve.endpoints} duplicates a native edge")

    @classmethod
    def from_edges(cls, num_physical: int, edges: Iterable[Sequence[int]], name: Optional[str] = None) -> "CouplingMap":
        return cls(num_physical, frozenset(normalize_edge(int(a), int(b)) for a, b in edges), name=name)

    @cached_property
    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.num_physical))
        g.add_edges_from(sorted(self.native_edges))
        return g

    @cached_property
    def virtual_lookup(self) -> Dict[Edge, VirtualEdge]:
        return {ve.key: ve for ve in self.virtual_edges}

    def is_native(self, a: int, b: int) -> bool:
        return normalize_edge(a, b) in self.native_edges

    def virtual_edge(self, a: int, b: int) -> Optional[VirtualEdge]:
        return self.virtual_lookup.get(normalize_edge(a, b))

    def neighbors(self, q: int) -> List[int]:
        return sorted(self.graph.neighbors(q))


@dataclass(frozen=True)
class Layout:
    """Logical qubit i sits on physical qubit mapping[i]."""

    mapping: Tuple[int, ...]

    def __post_init__(self):
        if len(set(self.mapping)) != len(self.mapping):
            raise TopologyError("Layout is not injective", {"mapping": list(self.mapping)})

    def __len__(self) -> int:
        return len(self.mapping)

    @property
    def data_set(self) -> FrozenSet[int]:
        return frozenset(self.mapping)

    def physical(self, logical: int) -> int:
        return self.mapping[logical]

    def inverse(self) -> Dict[int, int]:
        return {p: l for l, p in enumerate(self.mapping)}

    def check_against(self, cmap: CouplingMap) -> None:
        for p in self.mapping:
            if not 0 <= p < cmap.num_physical:
                raise TopologyError(f"Layout places a qubit on {p}, outside {cmap.num_physical} physical qubits")


# --- Builders and file format ---

class TopologyDocument(BaseModel):
    version: int = FORMAT_VERSION
    name: Optional[str] = None
    num_qubits: int
    edges: List[Tuple[int, int]]


class LayoutDocument(BaseModel):
    version: int = FORMAT_VERSION
    mapping: List[int]


def line_map(n: int) -> CouplingMap:
    if n < 2:
        raise TopologyError(f"A line map needs at least 2 qubits, got {n}")
    return CouplingMap.from_edges(n, [(i, i + 1) for i in range(n - 1)], name=f"line:{n}")


def _map_from_document(doc: TopologyDocument, source: str) -> CouplingMap:
    if doc.version != FORMAT_VERSION:
        raise TopologyError(f"Unsupported topology format version {doc.version}", {"source": source})
    return CouplingMap.from_edges(doc.num_qubits, doc.edges, name=doc.name)


def load_topology(path: str) -> CouplingMap:
    try:
        with open(path, "r") as f:
            doc = TopologyDocument.model_validate_json(f.read())
    except (OSError, ValidationError) as e:
        raise TopologyError(f"Could not load topology from {path}", {"path": path, "reason": str(e)}) from e
    return _map_from_document(doc, path)


def save_topology(cmap: CouplingMap, path: str) -> None:
    doc = TopologyDocument(name=cmap.name, num_qubits=cmap.num_physical, edges=sorted(cmap.native_edges))
    with open(path, "w") as f:
        f.write(json.dumps(doc.model_dump(mode="json", exclude_none=True), indent=2))


@lru_cache(maxsize=1)
def heavy_hex_eagle() -> CouplingMap:
    """127-qubit heavy-hexagon map with the standard Eagle numbering."""
    cmap = load_topology(EAGLE_PATH)
    if cmap.num_physical != 127:
        raise TopologyError("Embedded Eagle topology is corrupt", {"num_qubits": cmap.num_physical})
    return CouplingMap(cmap.num_physical, cmap.native_edges, name="eagle127")


def topology_from_spec(spec: str) -> CouplingMap:
    """Resolve `eagle127`, `line:N` or `file:PATH`."""
    if spec == "eagle127":
        return heavy_hex_eagle()
    if spec.startswith("line:"):
        try:
            n = int(spec[len("line:"):])
        except ValueError as e:
            raise TopologyError(f"Bad line topology '{spec}'") from e
        return line_map(n)
    if spec.startswith("file:"):
        return load_topology(spec[len("file:"):])
    raise TopologyError(f"Unknown topology '{spec}'", {"topology": spec})


def layout_from_spec(spec: str, num_logical: int, cmap: CouplingMap) -> Layout:
    """Resolve `line:A-B`, `identity` or `file:PATH` into a layout for `num_logical` qubits."""
    if spec == "identity":
        mapping = list(range(num_logical))
    elif spec.startswith("line:"):
        try:
            start, stop = (int(x) for x in spec[len("line:"):].split("-"))
        except ValueError as e:
            raise TopologyError(f"Bad line layout '{spec}'") from e
        step = 1 if stop >= start else -1
        mapping = list(range(start, stop + step, step))
    elif spec.startswith("file:"):
        path = spec[len("file:"):]
        try:
            with open(path, "r") as f:
                mapping = LayoutDocument.model_validate_json(f.read()).mapping
        except (OSError, ValidationError) as e:
            raise TopologyError(f"Could not load layout from {path}", {"path": path, "reason": str(e)}) from e
    else:
        raise TopologyError(f"Unknown layout '{spec}'", {"layout": spec})

    if len(mapping) < num_logical:
        raise TopologyError(
            f"Layout '{spec}' has {len(mapping)} qubits, circuit needs {num_logical}",
            {"layout": spec, "num_logical": num_logical},
        )
    layout = Layout(tuple(mapping[:num_logical]))
    layout.check_against(cmap)
    return layout


# --- Queries ---

def auxiliary_qubits(cmap: CouplingMap, layout: Layout) -> FrozenSet[int]:
    return frozenset(range(cmap.num_physical)) - layout.data_set


def native_distances(cmap: CouplingMap, nodes: Optional[Iterable[int]] = None) -> Dict[int, Dict[int, int]]:
    """All-pairs hop distances over native edges, optionally within an induced subgraph."""
    graph = cmap.graph if nodes is None else cmap.graph.subgraph(nodes)
    return {src: dict(lengths) for src, lengths in nx.all_pairs_shortest_path_length(graph)}


def enumerate_virtual_edges(cmap: CouplingMap, layout: Layout,
                            max_len: int = DEFAULT_MAX_PATH_LEN) -> List[VirtualEdge]:
    """One shortest all-auxiliary path per non-adjacent data pair.

    Among shortest paths the lexicographically smallest vertex sequence wins.
    """
    if max_len < 1:
        raise TopologyError(f"max_len must be at least 1, got {max_len}")
    aux = auxiliary_qubits(cmap, layout)
    data = sorted(layout.data_set)
    graph = cmap.graph
    found: List[VirtualEdge] = []
    for v in data:
        # hop distance from each auxiliary to v, moving through auxiliaries only
        dist_to_v = nx.single_source_shortest_path_length(graph.subgraph(aux | {v}), v)
        for u in data:
            if u >= v or cmap.is_native(u, v):
                continue
            starts = [a for a in cmap.neighbors(u) if a in aux and a in dist_to_v]
            if not starts:
                continue
            n_aux = min(dist_to_v[a] for a in starts)
            if n_aux > max_len:
                continue
            path = [min(a for a in starts if dist_to_v[a] == n_aux)]
            while dist_to_v[path[-1]] > 1:
                want = dist_to_v[path[-1]] - 1
                path.append(min(a for a in cmap.neighbors(path[-1]) if a in aux and dist_to_v.get(a) == want))
            found.append(VirtualEdge((u, v), tuple(path)))
    found.sort(key=lambda ve: ve.endpoints)
    logger.debug(f"Enumerated {len(found)} virtual edges (max_len={max_len})")
    return found


def check_disjoint(subset: Sequence[VirtualEdge]) -> None:
    owner: Dict[int, VirtualEdge] = {}
    for ve in subset:
        for q in sorted(ve.qubits):
            if q in owner:
                raise SubsetConflictError(q, owner[q].endpoints, ve.endpoints)
            owner[q] = ve


def extend_with_virtual(cmap: CouplingMap, subset: Sequence[VirtualEdge]) -> CouplingMap:
    check_disjoint(subset)
    for ve in subset:
        hops = [ve.endpoints[0], *ve.aux_path, ve.endpoints[1]]
        for a, b in zip(hops, hops[1:]):
            if not cmap.is_native(a, b):
                raise TopologyError(
                    f"Virtual edge {ve.endpoints} path hop ({a}, {b}) is not a native edge",
                    {"edge": list(ve.endpoints), "hop": [a, b]},
                )
    return CouplingMap(cmap.num_physical, cmap.native_edges, tuple(subset), name=cmap.name)
