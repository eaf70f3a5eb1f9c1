"""Equilibrium tests, theorem-based stability verdicts and perturbation witnesses."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import networkx as nx
import numpy as np

from . import graphs
from .model import (
    ModelParams,
    StopRule,
    TypeGraph,
    ValidationError,
    complete_edges,
    interaction_masses,
    simulate,
    step_flows,
)

EQ_TOL = 1e-10
GAP_MARGIN = 1e-12
ALPHA_AGREE_TOL = 1e-9


class NotAnEquilibrium(ValueError):
    pass


class EquilibriumInconsistency(RuntimeError):
    """The structural and fixed-point equilibrium tests disagree."""


class WitnessUnavailable(ValueError):
    pass


@dataclass
class EquilibriumReport:
    is_equilibrium: bool
    per_component_masses: list[tuple[tuple[int, ...], list[float]]]
    fixed_point_residual: float
    max_spread: float
    tol: float

    @property
    def structural(self) -> bool:
        return self.max_spread <= self.tol

    @property
    def fixed_point(self) -> bool:
        return self.fixed_point_residual <= self.tol


def equilibrium_check(
    x,
    params: ModelParams,
    g: TypeGraph,
    tol: float = EQ_TOL,
    activity_eps: float = 0.0,
    strict: bool = True,
) -> EquilibriumReport:
    """Test ``x`` both by equal interaction mass per active component and by
    the one-step residual ``||step(x) - x||_1``.

    With ``strict`` a disagreement between the two raises
    :class:`EquilibriumInconsistency`.
    """
    if tol <= 0:
        raise ValidationError("tol must be positive")
    x = np.asarray(x, dtype=float)
    nm = interaction_masses(x, params, g)
    sub = graphs.active_subgraph(x, g, activity_eps)
    per_comp = []
    spread = 0.0
    for comp in sub.components:
        members = tuple(sorted(comp))
        masses = [float(nm[u]) for u in members]
        per_comp.append((members, masses))
        spread = max(spread, max(masses) - min(masses))
    y, _ = step_flows(x, params, g)
    residual = float(np.abs(y - x).sum())
    report = EquilibriumReport(
        is_equilibrium=spread <= tol,
        per_component_masses=per_comp,
        fixed_point_residual=residual,
        max_spread=spread,
        tol=tol,
    )
    if strict and report.structural != report.fixed_point:
        raise EquilibriumInconsistency(
            f"interaction-mass spread {spread:.3e} and residual {residual:.3e} "
            f"disagree at tol {tol:.1e}"
        )
    return report


@dataclass
class StabilityVerdict:
    verdict: Literal["stable", "unstable", "unknown"]
    rule: str
    details: str
    empirical: "ProbeReport | None" = None


def _is_global(g: TypeGraph) -> bool:
    return g.variant == "global" or g.interaction_edges == complete_edges(g.n)


def _is_local(g: TypeGraph) -> bool:
    return g.variant == "local" or g.interaction_edges == g.influence_edges


def _gap_holds(x, active, params: ModelParams, g: TypeGraph) -> bool:
    nm = interaction_masses(x, params, g)
    return all(
        nm[u] > nm[v] + GAP_MARGIN
        for u in active
        for v in g.influence_neighbors[u]
        if v not in active
    )


def _isolated_4path(active, x, g: TypeGraph) -> bool:
    """Actives are the two equal-mass ends of a 4-node path component."""
    if len(active) != 2:
        return False
    u, w = sorted(active)
    h = graphs.influence_nx(g)
    comp = nx.node_connected_component(h, u)
    if w not in comp or len(comp) != 4:
        return False
    sub = h.subgraph(comp)
    if sub.number_of_edges() != 3 or sorted(d for _, d in sub.degree) != [1, 1, 2, 2]:
        return False
    if sub.degree(u) != 1 or sub.degree(w) != 1:
        return False
    return abs(x[u] - x[w]) <= graphs.UNIFORM_TOL


def classify_stability(
    x,
    params: ModelParams,
    g: TypeGraph,
    tol: float = EQ_TOL,
    activity_eps: float = 0.0,
) -> StabilityVerdict:
    """Lyapunov-stability verdict for an equilibrium at the given ``alpha``.

    Applies, in order: the global independent-set characterisation, the
    interaction-mass-gap sufficient condition, 3-separation (local,
    alpha > 1), distance-4 separation (local, alpha = 1) and the
    symmetric escape on a 4-node path (local, alpha = 1).
    """
    x = np.asarray(x, dtype=float)
    report = equilibrium_check(x, params, g, tol, activity_eps)
    if not report.is_equilibrium:
        raise NotAnEquilibrium(
            f"not an equilibrium (interaction-mass spread {report.max_spread:.3e})"
        )
    active = graphs.active_set(x, activity_eps)
    independent = graphs.is_independent(active, g)
    alpha = params.alpha

    if _is_global(g):
        if alpha == 1:
            return StabilityVerdict(
                "stable", "global-alpha1-identity",
                "every interaction mass equals 1, so the update is the identity map",
            )
        if independent:
            return StabilityVerdict(
                "stable", "global-iff-independent", "active nodes form an independent set"
            )
        return StabilityVerdict(
            "unstable", "global-iff-independent",
            "adjacent active nodes; moving mass along an active edge empties a node",
        )

    if independent and _gap_holds(x, active, params, g):
        return StabilityVerdict(
            "stable", "interaction-mass-gap",
            "independent active set, each active node out-weighs its inactive neighbours",
        )

    if _is_local(g):
        dist = graphs.min_pairwise_distance(active, g)
        if alpha > 1 and dist >= 3:
            return StabilityVerdict("stable", "3-separated", f"active nodes at distance >= {dist}")
        if alpha == 1 and dist >= 4:
            return StabilityVerdict("stable", "distance-4", f"active nodes at distance >= {dist}")
        if alpha == 1 and _isolated_4path(active, x, g):
            return StabilityVerdict(
                "unstable", "alpha1-4path-escape",
                "symmetric ends of a 4-node path: the inner pair keeps the larger "
                "interaction mass and both ends drain to 0",
            )

    return StabilityVerdict("unknown", "none", "no applicable characterisation")


def equilibrium_alphas(x, g: TypeGraph, activity_eps: float = 0.0) -> float | str | None:
    """Values of ``alpha`` for which ``x`` is a local-model equilibrium.

    Returns ``"all"`` if it holds for every alpha, a single float if it
    holds at exactly one alpha > 1, and ``None`` otherwise.
    """
    x = np.asarray(x, dtype=float)
    sub = graphs.active_subgraph(x, g, activity_eps)
    nbr = np.array([sum(x[w] for w in g.influence_neighbors[u]) for u in range(g.n)])
    candidates = []
    for u, v in sub.edges:
        dx, ds = x[u] - x[v], nbr[v] - nbr[u]
        if abs(dx) <= graphs.UNIFORM_TOL:
            if abs(ds) > graphs.UNIFORM_TOL:
                return None
        else:
            candidates.append(ds / dx)
    if not candidates:
        return "all"
    a = candidates[0]
    if any(abs(c - a) > ALPHA_AGREE_TOL * max(1.0, abs(a)) for c in candidates) or a <= 1:
        return None
    return float(a)


def classify_universal_stability(x, g: TypeGraph, activity_eps: float = 0.0) -> StabilityVerdict:
    """Is ``x`` a Lyapunov-stable local-model equilibrium for every alpha > 1?

    ``verdict == "unstable"`` means *not universally stable*.
    """
    if not _is_local(g):
        raise ValidationError("universal stability is defined for the local model")
    x = np.asarray(x, dtype=float)
    alphas = equilibrium_alphas(x, g, activity_eps)
    if alphas is None:
        raise NotAnEquilibrium("not an equilibrium for any alpha > 1")
    active = graphs.active_set(x, activity_eps)
    dist = graphs.min_pairwise_distance(active, g)

    if dist >= 3:
        return StabilityVerdict("stable", "3-separated", "active nodes pairwise at distance >= 3")
    if alphas != "all":
        return StabilityVerdict(
            "unstable", "not-regular-uniform",
            f"equilibrium only at alpha = {alphas:.12g}: some active component is not "
            "regular with uniform mass",
        )

    sub = graphs.active_subgraph(x, g, activity_eps)
    skipped = []
    for comp in sub.nontrivial_components:
        try:
            balanced, parts = graphs.is_locally_balanced(g, comp)
        except ValidationError:
            skipped.append(sorted(comp))
            continue
        if balanced:
            return StabilityVerdict(
                "unstable", "locally-balanced",
                f"active component {sorted(comp)} is locally balanced with parts "
                f"{[sorted(p) for p in parts]}; unstable at alpha = degree + 1",
            )

    if graphs.is_independent(active, g):
        return StabilityVerdict(
            "unstable", "not-3-separated",
            "independent active set with an inactive node adjacent to two actives; "
            "unstable at alpha = 1 + eta^2",
        )
    if graphs.is_bipartite(g) and not skipped:
        return StabilityVerdict(
            "unstable", "bipartite-iff", "bipartite influence graph, actives not 3-separated"
        )
    note = f"; components {skipped} too large for the local-balance search" if skipped else ""
    return StabilityVerdict(
        "unknown", "conjecture",
        "regular, uniform, not locally balanced active component; conjectured "
        "not universally stable (actives not pairwise at distance >= 3)" + note,
    )


@dataclass
class PerturbationWitness:
    alpha: float | None  # None: any alpha > 1
    x: np.ndarray
    construction: str
    predicted_escape: str
    delta: float
    details: dict = field(default_factory=dict)


def _checked(x: np.ndarray) -> np.ndarray:
    if np.any(x < 0):
        raise ValidationError("delta too large: perturbation leaves the simplex")
    return x


def witness_not_3separated(x_star, g: TypeGraph, delta: float | None = None) -> PerturbationWitness:
    """Move mass ``delta`` onto an inactive node ``u`` that touches >= 2 actives.

    The mass is drawn from ``u``'s active neighbours in proportion to their
    mass; ``alpha = 1 + eta^2`` with ``eta`` the smallest of those masses.
    Returns the ``u`` with the widest escape margin ``s - mu - eta^2``.
    """
    x_star = np.asarray(x_star, dtype=float)
    active = graphs.active_set(x_star)
    if not graphs.is_independent(active, g):
        raise WitnessUnavailable("active set is not independent")
    best = None
    for u in range(g.n):
        if u in active:
            continue
        nbrs = sorted(v for v in g.influence_neighbors[u] if v in active)
        if len(nbrs) < 2:
            continue
        m = x_star[nbrs]
        s, eta, mu = float(m.sum()), float(m.min()), float(m.max())
        margin = s - mu - eta**2
        if best is None or margin > best[0]:
            best = (margin, u, nbrs, s, eta, mu)
    if best is None:
        raise WitnessUnavailable("no inactive node has two active influence-neighbours")
    margin, u, nbrs, s, eta, mu = best
    if delta is None:
        delta = min(1e-3, margin / 2)
    if not 0 < delta < margin:
        raise ValidationError(f"delta must lie in (0, {margin:.6g})")
    x = x_star.copy()
    for v in nbrs:
        x[v] -= delta * x_star[v] / s
    x[u] = delta
    return PerturbationWitness(
        alpha=1 + eta**2,
        x=_checked(x),
        construction="not-3-separated",
        predicted_escape=f"x[{u}] grows to at least {margin:.6g}",
        delta=delta,
        details={"u": u, "neighbors": nbrs, "s": s, "eta": eta, "mu": mu, "escape_level": margin},
    )


def witness_locally_balanced(
    x_star, g: TypeGraph, component, partition, delta: float = 1e-3
) -> PerturbationWitness:
    """Shift total mass ``delta`` from the other parts onto ``partition[0]``.

    Each node of the first part gains ``delta/s``; every other node of the
    component loses ``delta/(s(k-1))``, with ``s`` the part size. Unstable
    at ``alpha = d + 1``.
    """
    x_star = np.asarray(x_star, dtype=float)
    comp = sorted(component)
    if not graphs.partition_is_balanced(g, comp, partition):
        raise ValidationError("partition fails the local-balance recount")
    if not graphs.is_regular_uniform(x_star, g, comp):
        raise ValidationError("component is not regular with uniform mass")
    if delta <= 0:
        raise ValidationError("delta must be positive")
    parts = [sorted(p) for p in partition]
    k, s = len(parts), len(parts[0])
    d = len(g.influence_neighbors[comp[0]] & set(comp))
    x = x_star.copy()
    first = set(parts[0])
    for v in comp:
        if v in first:
            x[v] += delta / s
        else:
            x[v] -= delta / (s * (k - 1))
    return PerturbationWitness(
        alpha=float(d + 1),
        x=_checked(x),
        construction="locally-balanced",
        predicted_escape=f"all mass of the component outside {parts[0]} drains to 0",
        delta=delta,
        details={"parts": parts, "degree": d, "k": k, "part_size": s, "component": comp},
    )


def witness_active_edge(x_star, g: TypeGraph, delta: float = 1e-3) -> PerturbationWitness:
    """Move ``delta`` across the first edge between two adjacent actives."""
    x_star = np.asarray(x_star, dtype=float)
    sub = graphs.active_subgraph(x_star, g)
    if not sub.edges:
        raise WitnessUnavailable("active set is independent")
    u, v = min(sub.edges)
    if not 0 < delta <= x_star[v]:
        raise ValidationError(f"delta must lie in (0, {x_star[v]:.6g}]")
    x = x_star.copy()
    x[u] += delta
    x[v] -= delta
    comp = next(sorted(c) for c in sub.components if u in c)
    return PerturbationWitness(
        alpha=None,
        x=x,
        construction="active-edge",
        predicted_escape=f"some node of active component {comp} empties",
        delta=delta,
        details={"edge": (u, v), "component": comp},
    )


def witness_distance3(x_star, g: TypeGraph, delta: float = 1e-3) -> PerturbationWitness:
    """For actives ``u, w`` at distance 3 via ``u-a-b-w``, move ``delta``
    from ``u`` to ``a`` and from ``w`` to ``b``."""
    x_star = np.asarray(x_star, dtype=float)
    active = sorted(graphs.active_set(x_star))
    h = graphs.influence_nx(g)
    for i, u in enumerate(active):
        for w in active[i + 1:]:
            try:
                path = nx.shortest_path(h, u, w)
            except nx.NetworkXNoPath:
                continue
            if len(path) == 4 and not {path[1], path[2]} & set(active):
                if not 0 < delta <= min(x_star[u], x_star[w]):
                    raise ValidationError("delta exceeds the endpoint masses")
                _, a, b, _ = path
                x = x_star.copy()
                x[u] -= delta
                x[a] += delta
                x[w] -= delta
                x[b] += delta
                return PerturbationWitness(
                    alpha=1.0,
                    x=x,
                    construction="distance-3",
                    predicted_escape=f"nodes {u} and {w} drain to 0 (alpha = 1)",
                    delta=delta,
                    details={"path": path},
                )
    raise WitnessUnavailable("no pair of actives at distance exactly 3")


def random_perturbation(x_star, delta: float, rng: np.random.Generator, max_draws: int = 10_000):
    """Random pairwise mass transfers with total L1 displacement at most ``delta``."""
    x = np.array(x_star, dtype=float)
    n = x.size
    remaining = delta / 2  # each unit moved costs 2 in L1
    draws = 0
    while remaining > 0 and n > 1 and draws < max_draws:
        draws += 1
        a, b = rng.choice(n, size=2, replace=False)
        m = min(x[a], remaining, rng.uniform(0.0, delta / 2))
        x[a] -= m
        x[b] += m
        remaining -= m
    return x


@dataclass
class ProbeReport:
    delta: float
    threshold: float
    excursions: np.ndarray
    statuses: list[str]
    witness_excursions: dict[str, float]

    @property
    def max_excursion(self) -> float:
        vals = list(self.excursions) + list(self.witness_excursions.values())
        return float(max(vals, default=0.0))

    @property
    def escape_fraction(self) -> float:
        if len(self.excursions) == 0:
            return 0.0
        return float(np.mean(self.excursions > self.threshold))

    @property
    def escaped_witnesses(self) -> list[str]:
        return [k for k, v in self.witness_excursions.items() if v > self.threshold]


def excursion(x_start, x_star, params: ModelParams, g: TypeGraph, stop: StopRule | None = None):
    """``sup_t ||x(t) - x_star||_1`` along the run from ``x_start``, and its status."""
    traj = simulate(x_start, params, g, stop)
    exc = float(np.abs(traj.states - np.asarray(x_star)).sum(axis=1).max())
    return exc, traj.status


def probe_witnesses(x_star, g: TypeGraph, delta: float) -> dict[str, np.ndarray]:
    """Every applicable witness construction, scaled to L1 size ``delta``."""
    x_star = np.asarray(x_star, dtype=float)
    out: dict[str, np.ndarray] = {}
    builders = [
        ("active-edge", lambda: witness_active_edge(x_star, g, delta / 2)),
        ("not-3-separated", lambda: witness_not_3separated(x_star, g, delta / 2)),
        ("distance-3", lambda: witness_distance3(x_star, g, delta / 4)),
    ]
    for name, build in builders:
        try:
            out[name] = build().x
        except ValueError:
            pass
    for comp in graphs.active_subgraph(x_star, g).nontrivial_components:
        try:
            if not graphs.is_regular_uniform(x_star, g, comp):
                continue
            ok, parts = graphs.is_locally_balanced(g, comp)
            if ok:
                w = witness_locally_balanced(x_star, g, comp, parts, delta / 2)
                out[f"locally-balanced{sorted(comp)}"] = w.x
        except ValueError:
            pass
    return out


def empirical_stability_probe(
    x_star,
    params: ModelParams,
    g: TypeGraph,
    delta: float,
    trials: int = 100,
    seed: int = 0,
    threshold: float | None = None,
    stop: StopRule | None = None,
    witnesses: bool = True,
) -> ProbeReport:
    """Perturb ``x_star`` by L1 size ``delta`` and record how far runs stray.

    Each trial draws its own stream from ``seed``, so results depend only on
    ``(seed, trial index)``. Witness constructions run in addition to the
    random trials when ``witnesses`` is set and they apply.
    """
    if delta < 0:
        raise ValidationError("delta must be >= 0")
    x_star = np.asarray(x_star, dtype=float)
    threshold = 10 * delta if threshold is None else threshold
    streams = np.random.SeedSequence(seed).spawn(trials)
    excursions, statuses = [], []
    for ss in streams:
        rng = np.random.default_rng(ss)
        x0 = random_perturbation(x_star, delta, rng) if delta > 0 else x_star
        exc, status = excursion(x0, x_star, params, g, stop)
        excursions.append(exc)
        statuses.append(status)
    wit = {}
    if witnesses and delta > 0:
        for name, x0 in probe_witnesses(x_star, g, delta).items():
            wit[name], _ = excursion(x0, x_star, params, g, stop)
    return ProbeReport(
        delta=delta,
        threshold=threshold,
        excursions=np.array(excursions),
        statuses=statuses,
        witness_excursions=wit,
    )

