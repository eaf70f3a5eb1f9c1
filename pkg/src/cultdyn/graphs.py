"""Structural predicates on the influence graph and its active subgraphs."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable

import networkx as nx
import numpy as np

from .model import Edge, TypeGraph, ValidationError, Variant

LOCAL_BALANCE_CAP = 12
UNIFORM_TOL = 1e-9


def influence_nx(g: TypeGraph, nodes: Iterable[int] | None = None) -> nx.Graph:
    """The influence graph (or its induced subgraph on ``nodes``) as networkx."""
    h = nx.Graph()
    h.add_nodes_from(range(g.n))
    h.add_edges_from(g.influence_edges)
    if nodes is not None:
        h = h.subgraph(nodes).copy()
    return h


def active_set(x, activity_eps: float = 0.0) -> frozenset[int]:
    return frozenset(int(u) for u in np.flatnonzero(np.asarray(x) > activity_eps))


@dataclass(frozen=True)
class ActiveSubgraph:
    nodes: frozenset[int]
    edges: frozenset[Edge]
    components: tuple[frozenset[int], ...]

    @property
    def nontrivial_components(self) -> tuple[frozenset[int], ...]:
        return tuple(c for c in self.components if len(c) > 1)


def active_subgraph(x, g: TypeGraph, activity_eps: float = 0.0) -> ActiveSubgraph:
    nodes = active_set(x, activity_eps)
    h = influence_nx(g, nodes)
    comps = sorted((frozenset(c) for c in nx.connected_components(h)), key=min)
    edges = frozenset((min(u, v), max(u, v)) for u, v in h.edges)
    return ActiveSubgraph(nodes, edges, tuple(comps))


def is_independent(s: Iterable[int], g: TypeGraph) -> bool:
    s = set(s)
    return not any(u in s and v in s for u, v in g.influence_edges)


def min_pairwise_distance(s: Iterable[int], g: TypeGraph) -> float:
    """Smallest influence-graph distance between two distinct nodes of ``s``.

    ``math.inf`` when ``s`` has fewer than two nodes or no pair is connected.
    """
    s = sorted(set(s))
    if len(s) < 2:
        return math.inf
    h = influence_nx(g)
    best = math.inf
    targets = set(s)
    for u in s:
        for v, d in nx.single_source_shortest_path_length(h, u).items():
            if v != u and v in targets and d < best:
                best = d
    return best if best == math.inf else int(best)


def is_bipartite(g: TypeGraph, nodes: Iterable[int] | None = None) -> bool:
    return nx.is_bipartite(influence_nx(g, nodes))


def is_regular(g: TypeGraph, nodes: Iterable[int]) -> bool:
    h = influence_nx(g, nodes)
    return len({d for _, d in h.degree}) <= 1


def is_regular_uniform(x, g: TypeGraph, component: Iterable[int], tol: float = UNIFORM_TOL) -> bool:
    """Regular as an induced subgraph, with equal mass on every node."""
    component = sorted(component)
    x = np.asarray(x, dtype=float)
    masses = x[component]
    return is_regular(g, component) and float(masses.max() - masses.min()) <= tol


def _balanced_partition(h: nx.Graph, k: int) -> list[list[int]] | None:
    """Backtracking search for a k-part local-balance witness on ``h``."""
    nodes = sorted(h.nodes)
    m = len(nodes)
    d = h.degree(nodes[0])
    per_part, size = d // (k - 1), m // k
    adj = {u: set(h.neighbors(u)) for u in nodes}
    # neighbors placed so far, per vertex and part
    counts = {u: [0] * k for u in nodes}
    where: dict[int, int] = {}
    parts: list[list[int]] = [[] for _ in range(k)]

    def fits(u: int, i: int) -> bool:
        if len(parts[i]) >= size or counts[u][i]:
            return False
        if max(counts[u]) > per_part:
            return False
        # u joining part i gives each placed neighbour one more edge into i
        return all(counts[w][i] < per_part for w in adj[u] if w in where)

    def place(u: int, i: int, sign: int):
        for w in adj[u]:
            counts[w][i] += sign

    def search(idx: int, used: int) -> bool:
        if idx == m:
            return True
        u = nodes[idx]
        # parts are interchangeable: only open one new part at a time
        for i in range(min(used + 1, k)):
            if fits(u, i):
                where[u] = i
                parts[i].append(u)
                place(u, i, +1)
                if search(idx + 1, max(used, i + 1)):
                    return True
                place(u, i, -1)
                parts[i].pop()
                del where[u]
        return False

    return parts if search(0, 0) else None


def partition_is_balanced(g: TypeGraph, component: Iterable[int], partition) -> bool:
    """Recount: every vertex has exactly d/(k-1) neighbours in each other part."""
    h = influence_nx(g, component)
    parts = [set(p) for p in partition]
    k = len(parts)
    if k < 2 or set().union(*parts) != set(h.nodes) or sum(map(len, parts)) != h.number_of_nodes():
        return False
    degrees = {d for _, d in h.degree}
    if len(degrees) != 1:
        return False
    d = degrees.pop()
    if d % (k - 1):
        return False
    want = d // (k - 1)
    for i, part in enumerate(parts):
        for u in part:
            nbrs = set(h.neighbors(u))
            for j, other in enumerate(parts):
                if len(nbrs & other) != (0 if i == j else want):
                    return False
    return True


def is_locally_balanced(
    g: TypeGraph, component: Iterable[int] | None = None, max_size: int = LOCAL_BALANCE_CAP
) -> tuple[bool, tuple[frozenset[int], ...] | None]:
    """Decide local balance of a connected induced subgraph by exhaustive search.

    A d-regular graph is locally balanced if its vertices split into k >= 2
    parts with every vertex having exactly d/(k-1) neighbours in each other
    part. Returns the witnessing partition (smallest k found) or ``None``.
    """
    nodes = sorted(range(g.n) if component is None else set(component))
    h = influence_nx(g, nodes)
    if len(nodes) < 2 or not nx.is_connected(h):
        raise ValidationError("local balance is defined for connected graphs with >= 2 nodes")
    degrees = {d for _, d in h.degree}
    if len(degrees) != 1:
        return False, None
    d = degrees.pop()
    m = len(nodes)
    if nx.is_bipartite(h):
        left, right = nx.bipartite.sets(h)
        return True, (frozenset(left), frozenset(right))
    if m > max_size:
        raise ValidationError(f"component of size {m} exceeds exhaustive-search cap {max_size}")
    for k in range(2, min(d + 1, m) + 1):
        if d % (k - 1) or m % k:
            continue
        parts = _balanced_partition(h, k)
        if parts is not None:
            return True, tuple(frozenset(p) for p in parts)
    return False, None


# Named topologies used by the CLI and tests.

def path_edges(n: int) -> list[Edge]:
    return [(i, i + 1) for i in range(n - 1)]


def cycle_edges(n: int) -> list[Edge]:
    return path_edges(n) + [(0, n - 1)] if n > 2 else path_edges(n)


def star_edges(leaves: int) -> list[Edge]:
    """Centre 0, leaves ``1..leaves``."""
    return [(0, i) for i in range(1, leaves + 1)]


def clique_edges(n: int) -> list[Edge]:
    return [(u, v) for u in range(n) for v in range(u + 1, n)]


def build(n: int, edges, variant: Variant) -> TypeGraph:
    if variant == "global":
        return TypeGraph.global_model(n, edges)
    if variant == "local":
        return TypeGraph.local_model(n, edges)
    raise ValidationError("named graphs support only the global and local variants")


_NAMED = {
    "path": lambda k: (k, path_edges(k)),
    "cycle": lambda k: (k, cycle_edges(k)),
    "star": lambda k: (k + 1, star_edges(k)),
    "k": lambda k: (k, clique_edges(k)),
    "complete": lambda k: (k, clique_edges(k)),
}


def named_graph(name: str, variant: Variant = "local") -> TypeGraph:
    """Parse ``4path``, ``path4``, ``6cycle``, ``star4`` (4 leaves), ``k3``."""
    m = re.fullmatch(r"(?:(\d+)([a-z]+)|([a-z]+)(\d+))", name.strip().lower())
    if not m:
        raise ValidationError(f"unknown graph name {name!r}")
    kind = m.group(2) or m.group(3)
    size = int(m.group(1) or m.group(4))
    if kind not in _NAMED or size < 1:
        raise ValidationError(f"unknown graph name {name!r}")
    n, edges = _NAMED[kind](size)
    return build(n, edges, variant)


def star_center(g: TypeGraph) -> int:
    """Unique node of degree >= 2; node 0 for K2. Raises if ``g`` is not a star."""
    deg = [len(nb) for nb in g.influence_neighbors]
    m = len(g.influence_edges)
    if g.n < 2 or m != g.n - 1:
        raise ValidationError("not a star graph")
    hubs = [u for u, d in enumerate(deg) if d >= 2]
    if not hubs:
        if g.n == 2:
            return 0
        raise ValidationError("not a star graph")
    if len(hubs) != 1 or deg[hubs[0]] != g.n - 1:
        raise ValidationError("not a star graph")
    return hubs[0]
