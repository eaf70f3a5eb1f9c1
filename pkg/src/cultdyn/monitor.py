"""Quantities the convergence arguments track along a trajectory:
flow-direction configurations, sink tests, direction changes, and the
sorted partial sums of the mass vector."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .graphs import star_center
from .model import (
    Edge,
    FlowField,
    ModelParams,
    Trajectory,
    TypeGraph,
    ValidationError,
    interaction_masses,
    step_flows,
)

DIRECTION_EPS = 1e-14

Label = Literal["forward", "backward", "zero"]


@dataclass(frozen=True)
class Configuration:
    """Direction label per edge ``(u, v)``, ``u < v``: ``forward`` is u -> v."""

    labels: dict[Edge, Label]


def _label(f: float, eps: float) -> Label:
    if f > eps:
        return "forward"
    if f < -eps:
        return "backward"
    return "zero"


def flow_configuration(ff: FlowField, direction_eps: float = DIRECTION_EPS) -> Configuration:
    return Configuration({e: _label(float(f), direction_eps) for e, f in zip(ff.edges, ff.values)})


def _require_local_3path(g: TypeGraph):
    if g.n != 3 or g.influence_edges != {(0, 1), (1, 2)} or g.interaction_edges != g.influence_edges:
        raise ValidationError("expected the local 3-node path 0-1-2")


def is_sink_3path(x, params: ModelParams, g: TypeGraph) -> bool:
    """Centre interaction mass is a (weak) maximum or a strict minimum.

    Only meaningful for the local 3-path with ``alpha >= 2``: from either
    state the flow directions never change again.
    """
    _require_local_3path(g)
    if params.alpha < 2:
        raise ValidationError("sink analysis on the 3-path needs alpha >= 2")
    n0, n1, n2 = interaction_masses(x, params, g)
    return bool((n1 >= n0 and n1 >= n2) or (n1 < n0 and n1 < n2))


def outward_edges(x, params: ModelParams, g: TypeGraph) -> list[Edge]:
    """Star edges ``(centre, leaf)`` whose flow runs strictly away from the centre."""
    c = star_center(g)
    if g.interaction_edges != g.influence_edges:
        raise ValidationError("expected a local star graph")
    _, ff = step_flows(x, params, g)
    return [(c, leaf) for leaf in sorted(g.influence_neighbors[c]) if ff[(c, leaf)] > 0]


def star_outward_count(x, params: ModelParams, g: TypeGraph) -> int:
    return len(outward_edges(x, params, g))


@dataclass(frozen=True)
class PartialSums:
    """``Y[k-1]`` is the total mass of the ``k`` smallest types."""

    Y: np.ndarray


def partial_sums(x) -> PartialSums:
    # stable sort: ties keep node order, which does not affect the sums
    return PartialSums(np.cumsum(np.sort(np.asarray(x, dtype=float), kind="stable")))


@dataclass(frozen=True)
class DirectionChange:
    step: int
    old: Label
    new: Label


def direction_change_log(
    traj: Trajectory, direction_eps: float = DIRECTION_EPS
) -> dict[Edge, list[DirectionChange]]:
    """Forward/backward reversals per edge, in step order.

    Passing through ``zero`` is not a change; only a nonzero label that
    differs from the edge's previous nonzero label is recorded.
    """
    if traj.flows is None:
        raise ValidationError("trajectory was simulated without record_flows")
    log: dict[Edge, list[DirectionChange]] = {e: [] for e in traj.edges}
    for j, e in enumerate(traj.edges):
        col = traj.flows[:, j]
        sign = np.where(col > direction_eps, 1, np.where(col < -direction_eps, -1, 0))
        nz = np.flatnonzero(sign)
        if nz.size < 2:
            continue
        flips = nz[1:][sign[nz[1:]] != sign[nz[:-1]]]
        for t in flips:
            new = "forward" if sign[t] > 0 else "backward"
            old = "backward" if new == "forward" else "forward"
            log[e].append(DirectionChange(int(t), old, new))
    return log


def total_changes(log: dict[Edge, list[DirectionChange]]) -> int:
    return sum(len(v) for v in log.values())
