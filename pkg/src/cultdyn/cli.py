"""Command-line entry point: ``cultdyn <subcommand> ...``.

Exit codes: 0 success, 1 invalid input, 2 run hit ``--max-steps`` while
``--require-convergence`` was given.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from pathlib import Path

import networkx as nx
import numpy as np

from . import graphs
from .io import (
    atomic_write,
    flows_csv,
    parse_masses,
    read_graph_file,
    read_trajectory,
    trajectory_csv,
)
from .model import ModelParams, StopRule, TypeGraph, ValidationError, mass_vector, simulate
from .plot import render_svg
from .stability import (
    EquilibriumInconsistency,
    NotAnEquilibrium,
    classify_stability,
    classify_universal_stability,
    empirical_stability_probe,
    equilibrium_check,
)

LIMIT_EPS = 1e-9

START = "2/5,1/5,2/5"


def _fmt(v: float) -> str:
    v = round(float(v), 9) + 0.0
    return f"{v:.9g}"


def _vec(x) -> str:
    return "(" + ", ".join(_fmt(v) for v in x) + ")"


def load_graph(source: str, variant: str | None) -> tuple[TypeGraph, tuple[str, ...] | None]:
    """A JSON graph file, or a built-in name such as ``4path`` or ``star4``."""
    if Path(source).is_file() or source.endswith(".json"):
        gf = read_graph_file(source)
        g = gf.graph.with_variant(variant) if variant else gf.graph
        return g, gf.names
    return graphs.named_graph(source, variant or "local"), None


def _params(args) -> ModelParams:
    return ModelParams(alpha=args.alpha, p=args.p)


def _masses(args, g: TypeGraph) -> np.ndarray:
    return mass_vector(parse_masses(args.masses, g.n), g.n)


def _clean_limit(x, eps: float = LIMIT_EPS) -> np.ndarray:
    """Zero entries at or below ``eps`` and renormalise."""
    y = np.where(np.asarray(x) > eps, x, 0.0)
    return y / y.sum()


def cmd_simulate(args) -> int:
    g, names = load_graph(args.graph, args.variant)
    x0 = _masses(args, g)
    stop = StopRule(tol=args.tol, window=args.window, max_steps=args.max_steps)
    traj = simulate(x0, _params(args), g, stop, record_flows=args.record_flows)
    if args.out:
        atomic_write(args.out, trajectory_csv(traj.states, names))
        if args.record_flows:
            out = Path(args.out)
            atomic_write(out.with_name(out.stem + ".flows.csv"), flows_csv(traj))
    print(f"status: {traj.status}")
    print(f"steps: {traj.steps_taken}")
    print(f"final_residual: {traj.final_residual:.3e}")
    print(f"limit: {_vec(traj.final)}")
    print(f"active: {sorted(graphs.active_set(traj.final, LIMIT_EPS))}")
    if args.require_convergence and not traj.converged:
        return 2
    return 0


def cmd_equilibrium(args) -> int:
    g, _ = load_graph(args.graph, args.variant)
    x = _masses(args, g)
    rep = equilibrium_check(x, _params(args), g, args.tol, args.activity_eps, strict=False)
    print(f"equilibrium: {'yes' if rep.is_equilibrium else 'no'}")
    print(f"fixed_point_residual: {rep.fixed_point_residual:.3e}")
    print(f"max_interaction_mass_spread: {rep.max_spread:.3e}")
    for comp, masses in rep.per_component_masses:
        print(f"component {list(comp)}: interaction masses {_vec(masses)}")
    if rep.structural != rep.fixed_point:
        print("warning: structural and fixed-point tests disagree", file=sys.stderr)
    return 0


def cmd_stability(args) -> int:
    g, _ = load_graph(args.graph, args.variant)
    x = _masses(args, g)
    params = _params(args)
    if args.universal:
        v = classify_universal_stability(x, g, args.activity_eps)
        print(f"universal: {'stable' if v.verdict == 'stable' else v.verdict}")
    else:
        v = classify_stability(x, params, g, activity_eps=args.activity_eps)
        print(f"verdict: {v.verdict}")
    print(f"rule: {v.rule}")
    print(f"details: {v.details}")
    if args.empirical:
        stop = StopRule(tol=args.tol, window=args.window, max_steps=args.max_steps)
        rep = empirical_stability_probe(
            x, params, g, args.delta, args.trials, args.seed, stop=stop
        )
        print(f"probe_delta: {rep.delta:g}")
        print(f"probe_trials: {len(rep.excursions)}")
        print(f"probe_max_excursion: {rep.max_excursion:.6g}")
        print(f"probe_escape_fraction: {rep.escape_fraction:.6g} (threshold {rep.threshold:g})")
        for name, exc in rep.witness_excursions.items():
            print(f"witness {name}: excursion {exc:.6g}")
    return 0


def cmd_analyze_graph(args) -> int:
    g, _ = load_graph(args.graph, args.variant)
    h = graphs.influence_nx(g)
    print(f"types: {g.n}")
    print(f"variant: {g.variant}")
    print(f"influence_edges: {len(g.influence_edges)}")
    print(f"interaction_edges: {len(g.interaction_edges)}")
    print(f"all_components_bipartite: {graphs.is_bipartite(g)}")
    for comp in sorted((sorted(c) for c in nx.connected_components(h)), key=min):
        line = f"component {comp}: bipartite={graphs.is_bipartite(g, comp)}"
        line += f" regular={graphs.is_regular(g, comp)}"
        if len(comp) > 1:
            try:
                ok, parts = graphs.is_locally_balanced(g, comp)
                line += f" locally_balanced={ok}"
                if ok:
                    line += f" parts={[sorted(p) for p in parts]}"
            except ValidationError as exc:
                line += f" locally_balanced=? ({exc})"
        print(line)
    if args.masses:
        x = _masses(args, g)
        active = graphs.active_set(x, args.activity_eps)
        dist = graphs.min_pairwise_distance(active, g)
        print(f"active: {sorted(active)}")
        print(f"independent: {graphs.is_independent(active, g)}")
        print(f"min_active_distance: {'inf' if dist == math.inf else dist}")
        print(f"3_separated: {dist >= 3}")
        sub = graphs.active_subgraph(x, g, args.activity_eps)
        print(f"active_components: {[sorted(c) for c in sub.components]}")
    return 0


def _alpha_range(text: str) -> list[float]:
    try:
        lo, hi, step = (float(s) for s in text.split(":"))
    except ValueError as exc:
        raise ValidationError(f"--alpha expects from:to:step, got {text!r}") from exc
    if step <= 0 or hi < lo:
        raise ValidationError("--alpha range needs step > 0 and from <= to")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + i * step, 12) for i in range(count)]


def sweep_rows(g: TypeGraph, x0, alphas, p: float, stop: StopRule) -> list[dict]:
    rows = []
    for alpha in alphas:
        params = ModelParams(alpha, p)
        traj = simulate(x0, params, g, stop)
        limit = _clean_limit(traj.final)
        verdict, rule = "unknown", "not-converged"
        if traj.converged:
            try:
                v = classify_stability(limit, params, g, tol=1e-8)
                verdict, rule = v.verdict, v.rule
            except (NotAnEquilibrium, EquilibriumInconsistency):
                rule = "limit-not-equilibrium"
        rows.append(
            {
                "alpha": _fmt(alpha),
                "converged": int(traj.converged),
                "steps": traj.steps_taken,
                "limit": ";".join(_fmt(v) for v in traj.final),
                "active": ";".join(str(u) for u in sorted(graphs.active_set(traj.final, LIMIT_EPS))),
                "verdict": verdict,
                "rule": rule,
            }
        )
    return rows


def cmd_sweep(args) -> int:
    g, _ = load_graph(args.graph, args.variant)
    x0 = _masses(args, g)
    stop = StopRule(tol=args.tol, window=args.window, max_steps=args.max_steps)
    rows = sweep_rows(g, x0, _alpha_range(args.alpha), args.p, stop)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    text = buf.getvalue()
    if args.out:
        atomic_write(args.out, text)
    sys.stdout.write(text)
    if args.require_convergence and not all(r["converged"] for r in rows):
        return 2
    return 0


def cmd_figure1(args) -> int:
    x0 = parse_masses(START)
    params = ModelParams(2.0, 1.0)
    for variant in ("global", "local"):
        g = graphs.named_graph("3path", variant)
        traj = simulate(x0, params, g)
        print(f"{variant}: limit {_vec(traj.final)} ({traj.status} after {traj.steps_taken} steps)")
        if args.out_dir:
            Path(args.out_dir).mkdir(parents=True, exist_ok=True)
            atomic_write(Path(args.out_dir) / f"figure1_{variant}.csv", trajectory_csv(traj.states))
    return 0


def cmd_plot(args) -> int:
    table = read_trajectory(args.traj)
    atomic_write(args.out, render_svg(table, args.title))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cultdyn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def graph_opts(sp, masses: bool | None = True):
        sp.add_argument("--graph", required=True, help="graph JSON file or name (4path, 6cycle, star4, k3)")
        sp.add_argument("--variant", choices=["global", "local"], help="interaction regime override")
        if masses is not None:
            sp.add_argument("--masses", required=masses, help='e.g. "2/5,1/5,2/5" or a JSON array file')

    def model_opts(sp):
        sp.add_argument("--alpha", type=float, default=2.0)
        sp.add_argument("--p", type=float, default=1.0)

    def stop_opts(sp):
        sp.add_argument("--tol", type=float, default=1e-12)
        sp.add_argument("--window", type=int, default=10)
        sp.add_argument("--max-steps", type=int, default=10**6)

    sp = sub.add_parser("simulate", help="run the dynamics and write the trajectory")
    graph_opts(sp)
    model_opts(sp)
    stop_opts(sp)
    sp.add_argument("--record-flows", action="store_true")
    sp.add_argument("--out", help="trajectory CSV path")
    sp.add_argument("--require-convergence", action="store_true")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("equilibrium", help="test whether a mass vector is a fixed point")
    graph_opts(sp)
    model_opts(sp)
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("--activity-eps", type=float, default=0.0)
    sp.set_defaults(func=cmd_equilibrium)

    sp = sub.add_parser("stability", help="classify an equilibrium")
    graph_opts(sp)
    model_opts(sp)
    stop_opts(sp)
    sp.add_argument("--activity-eps", type=float, default=0.0)
    sp.add_argument("--universal", action="store_true", help="stability for every alpha > 1 (local model)")
    sp.add_argument("--empirical", action="store_true", help="also run the perturbation probe")
    sp.add_argument("--delta", type=float, default=1e-3)
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_stability)

    sp = sub.add_parser("analyze-graph", help="structural report on the influence graph")
    graph_opts(sp, masses=False)
    sp.add_argument("--activity-eps", type=float, default=0.0)
    sp.set_defaults(func=cmd_analyze_graph)

    sp = sub.add_parser("sweep", help="simulate across a range of alpha")
    graph_opts(sp)
    sp.add_argument("--alpha", required=True, help="from:to:step, inclusive")
    sp.add_argument("--p", type=float, default=1.0)
    stop_opts(sp)
    sp.add_argument("--out", help="summary CSV path")
    sp.add_argument("--require-convergence", action="store_true")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("figure1", help="3-path, alpha=2, x0=(2/5,1/5,2/5) under both variants")
    sp.add_argument("--out-dir", help="also write both trajectories as CSV")
    sp.set_defaults(func=cmd_figure1)

    sp = sub.add_parser("plot", help="render a trajectory CSV as SVG")
    sp.add_argument("--traj", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--title")
    sp.set_defaults(func=cmd_plot)
    return parser


def run_cli(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, NotAnEquilibrium) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli())
