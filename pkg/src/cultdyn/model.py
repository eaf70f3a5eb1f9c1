"""Mass-vector dynamics on influence/interaction graphs.

A population is split over ``n`` types. Each step, a person of type ``u``
picks an interaction partner among ``u``'s interaction neighbours (or
``u`` itself, weighted by ``alpha``) and, if the partner's type is an
influence neighbour, switches to it with probability ``p``. The update is
deterministic on the continuum of people.

Two equivalent formulations are provided: :func:`step_direct` evaluates
the per-type stay/arrive fractions, and :func:`step_flows` sums signed
net flows over influence edges. :func:`simulate` iterates the latter.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Literal, Sequence

import numpy as np

Variant = Literal["global", "local", "general"]
Edge = tuple[int, int]

MASS_SUM_TOL = 1e-9


class ValidationError(ValueError):
    """Raised for malformed graphs, parameters or mass vectors."""


def _canonical_edges(edges: Iterable[Sequence[int]], n: int, kind: str) -> frozenset[Edge]:
    out = set()
    for e in edges:
        if len(e) != 2:
            raise ValidationError(f"{kind} edge {list(e)!r} is not a pair")
        u, v = int(e[0]), int(e[1])
        if not (0 <= u < n and 0 <= v < n):
            raise ValidationError(f"{kind} edge ({u},{v}): node index out of range [0,{n})")
        if u == v:
            raise ValidationError(f"{kind} edge ({u},{v}): self-loop")
        out.add((min(u, v), max(u, v)))
    return frozenset(out)


def complete_edges(n: int) -> frozenset[Edge]:
    return frozenset((u, v) for u in range(n) for v in range(u + 1, n))


@dataclass(frozen=True)
class TypeGraph:
    """Influence graph plus interaction graph over types ``0..n-1``.

    Edges are stored as unordered pairs ``(u, v)`` with ``u < v``.
    Use :meth:`global_model`, :meth:`local_model` or :meth:`general_model`
    rather than the raw constructor.
    """

    n: int
    influence_edges: frozenset[Edge]
    interaction_edges: frozenset[Edge]
    variant: Variant = "general"

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ValidationError(f"n must be a positive integer, got {self.n!r}")
        if self.variant not in ("global", "local", "general"):
            raise ValidationError(f"unknown variant {self.variant!r}")
        inf = _canonical_edges(self.influence_edges, self.n, "influence")
        inter = _canonical_edges(self.interaction_edges, self.n, "interaction")
        missing = sorted(inf - inter)
        if missing:
            u, v = missing[0]
            raise ValidationError(f"influence not subset of interaction: missing ({u},{v})")
        if self.variant == "global" and inter != complete_edges(self.n):
            raise ValidationError("global variant requires a complete interaction graph")
        if self.variant == "local" and inter != inf:
            raise ValidationError("local variant requires interaction edges == influence edges")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "influence_edges", inf)
        object.__setattr__(self, "interaction_edges", inter)

    @classmethod
    def global_model(cls, n: int, influence: Iterable[Sequence[int]]) -> "TypeGraph":
        return cls(n, frozenset(map(tuple, influence)), complete_edges(n), "global")

    @classmethod
    def local_model(cls, n: int, influence: Iterable[Sequence[int]]) -> "TypeGraph":
        inf = frozenset(map(tuple, influence))
        return cls(n, inf, inf, "local")

    @classmethod
    def general_model(
        cls, n: int, influence: Iterable[Sequence[int]], interaction: Iterable[Sequence[int]]
    ) -> "TypeGraph":
        return cls(n, frozenset(map(tuple, influence)), frozenset(map(tuple, interaction)), "general")

    def with_variant(self, variant: Variant) -> "TypeGraph":
        """Same influence graph under another interaction regime."""
        if variant == "global":
            return TypeGraph.global_model(self.n, self.influence_edges)
        if variant == "local":
            return TypeGraph.local_model(self.n, self.influence_edges)
        return TypeGraph.general_model(self.n, self.influence_edges, self.interaction_edges)

    @cached_property
    def edges(self) -> tuple[Edge, ...]:
        """Influence edges in sorted order; fixes the layout of flow arrays."""
        return tuple(sorted(self.influence_edges))

    @cached_property
    def influence_neighbors(self) -> tuple[frozenset[int], ...]:
        return _adjacency(self.n, self.influence_edges)

    @cached_property
    def interaction_neighbors(self) -> tuple[frozenset[int], ...]:
        return _adjacency(self.n, self.interaction_edges)

    @cached_property
    def _edge_index(self) -> tuple[np.ndarray, np.ndarray]:
        a = np.array([e[0] for e in self.edges], dtype=np.intp)
        b = np.array([e[1] for e in self.edges], dtype=np.intp)
        return a, b

    @cached_property
    def _interaction_matrix(self) -> np.ndarray:
        m = np.zeros((self.n, self.n))
        for u, v in self.interaction_edges:
            m[u, v] = m[v, u] = 1.0
        return m


def _adjacency(n: int, edges: Iterable[Edge]) -> tuple[frozenset[int], ...]:
    adj: list[set[int]] = [set() for _ in range(n)]
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    return tuple(frozenset(s) for s in adj)


@dataclass(frozen=True)
class ModelParams:
    alpha: float = 2.0
    p: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.alpha) or self.alpha < 1:
            raise ValidationError(f"alpha must be >= 1, got {self.alpha}")
        if not np.isfinite(self.p) or not (0 < self.p <= 1):
            raise ValidationError(f"p must lie in (0, 1], got {self.p}")


def mass_vector(values, n: int | None = None) -> np.ndarray:
    """Validate and copy a mass vector: finite, non-negative, summing to 1."""
    x = np.array(values, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValidationError("mass vector must be a non-empty 1-d sequence")
    if n is not None and x.size != n:
        raise ValidationError(f"mass vector has {x.size} entries, graph has {n} types")
    if not np.all(np.isfinite(x)):
        raise ValidationError("mass vector contains non-finite entries")
    if np.any(x < 0):
        i = int(np.argmin(x))
        raise ValidationError(f"mass vector entry {i} is negative ({x[i]})")
    total = float(x.sum())
    if abs(total - 1.0) > MASS_SUM_TOL:
        raise ValidationError(f"mass vector sums to {total!r}, expected 1")
    return x


def interaction_masses(x, params: ModelParams, g: TypeGraph) -> np.ndarray:
    """``alpha * x_u + sum of x over u's interaction neighbours``, for all u."""
    x = np.asarray(x, dtype=float)
    return params.alpha * x + g._interaction_matrix @ x


def interaction_mass(x, u: int, params: ModelParams, g: TypeGraph) -> float:
    if not 0 <= u < g.n:
        raise ValidationError(f"node {u} out of range [0,{g.n})")
    x = np.asarray(x, dtype=float)
    return float(params.alpha * x[u] + sum(x[v] for v in g.interaction_neighbors[u]))


def net_flow(x, edge: Sequence[int], params: ModelParams, g: TypeGraph) -> float:
    """Net mass moving from ``v`` to ``u`` in one step, for ``edge = (v, u)``.

    Equal to ``p * x_v * x_u * (1/N_v - 1/N_u)``; evaluated as
    ``p * (x_v/N_v * x_u - x_u/N_u * x_v)`` so that subnormal masses cannot
    overflow. Exactly zero when either endpoint is empty.
    """
    v, u = int(edge[0]), int(edge[1])
    if (min(v, u), max(v, u)) not in g.influence_edges:
        raise ValidationError(f"({v},{u}) is not an influence edge")
    x = np.asarray(x, dtype=float)
    if x[v] * x[u] == 0:
        return 0.0
    nv = interaction_mass(x, v, params, g)
    nu = interaction_mass(x, u, params, g)
    return float(params.p * ((x[v] / nv) * x[u] - (x[u] / nu) * x[v]))


@dataclass(frozen=True)
class FlowField:
    """Net flows on influence edges at one step.

    ``values[i]`` is the flow along ``edges[i] = (a, b)`` from ``a`` to ``b``;
    indexing with an ordered pair returns the signed flow in that direction.
    """

    edges: tuple[Edge, ...]
    values: np.ndarray

    def __getitem__(self, pair: Sequence[int]) -> float:
        v, u = int(pair[0]), int(pair[1])
        i = self._index.get((min(v, u), max(v, u)))
        if i is None:
            raise KeyError((v, u))
        f = float(self.values[i])
        return f if v < u else -f

    @cached_property
    def _index(self) -> dict[Edge, int]:
        return {e: i for i, e in enumerate(self.edges)}

    def as_dict(self) -> dict[Edge, float]:
        """Both orientations of every edge."""
        out = {}
        for (a, b), f in zip(self.edges, self.values):
            out[(a, b)] = float(f)
            out[(b, a)] = -float(f)
        return out


def _edge_flows(x: np.ndarray, params: ModelParams, g: TypeGraph) -> np.ndarray:
    a, b = g._edge_index
    if a.size == 0:
        return np.zeros(0)
    nm = interaction_masses(x, params, g)
    # x_u <= N_u / alpha, so these ratios are bounded even when N_u underflows
    r = np.divide(x, nm, out=np.zeros_like(x), where=nm > 0)
    return params.p * (r[a] * x[b] - r[b] * x[a])


def _apply_flows(x: np.ndarray, flows: np.ndarray, g: TypeGraph) -> np.ndarray:
    if flows.size == 0:
        return x.copy()
    a, b = g._edge_index
    y = x + np.bincount(b, flows, g.n) - np.bincount(a, flows, g.n)
    # outflow from u never exceeds p*x_u; this only absorbs sub-ulp rounding
    return np.maximum(y, 0.0)


def step_flows(x, params: ModelParams, g: TypeGraph) -> tuple[np.ndarray, FlowField]:
    """One update via net flows; returns the new vector and the flows used."""
    x = np.asarray(x, dtype=float)
    flows = _edge_flows(x, params, g)
    return _apply_flows(x, flows, g), FlowField(g.edges, flows)


def step_direct(x, params: ModelParams, g: TypeGraph) -> np.ndarray:
    """One update evaluated term by term from the stay/arrive fractions.

    Independent of :func:`step_flows`; used as its cross-check.
    """
    x = [float(v) for v in x]
    alpha, p = params.alpha, params.p
    nm = [alpha * x[u] + sum(x[w] for w in g.interaction_neighbors[u]) for u in range(g.n)]
    out = []
    for u in range(g.n):
        stay = (1 - p) * x[u]
        if x[u] > 0:
            kept = alpha * x[u] + sum(
                x[w] for w in g.interaction_neighbors[u] - g.influence_neighbors[u]
            )
            stay += p * x[u] * kept / nm[u]
        # v sends mass to u iff u is an influence neighbour of v
        arrive = sum(x[v] * x[u] / nm[v] for v in g.influence_neighbors[u] if x[v] > 0)
        out.append(stay + p * arrive)
    return np.array(out)


@dataclass(frozen=True)
class StopRule:
    tol: float = 1e-12
    window: int = 10
    max_steps: int = 10**6

    def __post_init__(self):
        if self.tol <= 0:
            raise ValidationError("tol must be positive")
        if self.window < 1:
            raise ValidationError("window must be >= 1")
        if self.max_steps < 0:
            raise ValidationError("max_steps must be >= 0")


@dataclass
class Trajectory:
    """States ``x(0), x(1), ...`` of one run, row per step.

    ``flows[t]`` (if recorded) holds the edge flows that took ``states[t]``
    to ``states[t+1]``, laid out as ``edges``.
    """

    states: np.ndarray
    status: Literal["converged", "max_steps_reached"]
    steps_taken: int
    final_residual: float
    edges: tuple[Edge, ...] = ()
    flows: np.ndarray | None = None
    params: ModelParams | None = None
    stop: StopRule = field(default_factory=StopRule)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    def flow_field(self, t: int) -> FlowField:
        if self.flows is None:
            raise ValueError("trajectory was simulated without record_flows")
        return FlowField(self.edges, self.flows[t])


class _Buffer:
    def __init__(self, width: int):
        self.data = np.empty((64, width))
        self.size = 0

    def append(self, row):
        if self.size == len(self.data):
            self.data = np.concatenate([self.data, np.empty_like(self.data)])
        self.data[self.size] = row
        self.size += 1

    def array(self) -> np.ndarray:
        return self.data[: self.size].copy()


def simulate(
    x0,
    params: ModelParams,
    g: TypeGraph,
    stop: StopRule | None = None,
    record_flows: bool = False,
) -> Trajectory:
    """Iterate :func:`step_flows` until the L1 step size stays below
    ``stop.tol`` for ``stop.window`` consecutive steps, or ``max_steps``."""
    stop = stop or StopRule()
    x = mass_vector(x0, g.n)
    states = _Buffer(g.n)
    states.append(x)
    flow_log = _Buffer(len(g.edges)) if record_flows else None

    quiet, residual, steps = 0, 0.0, 0
    status = "max_steps_reached"
    while steps < stop.max_steps:
        flows = _edge_flows(x, params, g)
        y = _apply_flows(x, flows, g)
        steps += 1
        residual = float(np.abs(y - x).sum())
        states.append(y)
        if flow_log is not None:
            flow_log.append(flows)
        x = y
        quiet = quiet + 1 if residual < stop.tol else 0
        if quiet >= stop.window:
            status = "converged"
            break

    return Trajectory(
        states=states.array(),
        status=status,
        steps_taken=steps,
        final_residual=residual,
        edges=g.edges,
        flows=flow_log.array() if flow_log is not None else None,
        params=params,
        stop=stop,
    )
