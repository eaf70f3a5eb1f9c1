"""Graph JSON files, trajectory CSV files and mass-vector parsing."""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .model import MASS_SUM_TOL, Trajectory, TypeGraph, ValidationError


@dataclass(frozen=True)
class GraphFile:
    graph: TypeGraph
    names: tuple[str, ...] | None = None


def atomic_write(path, text: str) -> None:
    """Write via a temp file in the target directory, then rename over ``path``."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _pairs(doc, key: str) -> list[tuple[int, int]]:
    raw = doc.get(key) if isinstance(doc, dict) else doc
    if not isinstance(raw, list):
        raise ValidationError(f"'{key}' must be a list of [u, v] pairs")
    out = []
    for item in raw:
        if (
            not isinstance(item, list)
            or len(item) != 2
            or not all(isinstance(v, int) and not isinstance(v, bool) for v in item)
        ):
            raise ValidationError(f"'{key}' entry {item!r} is not an integer pair")
        out.append((item[0], item[1]))
    return out


def graph_from_dict(doc) -> GraphFile:
    if not isinstance(doc, dict):
        raise ValidationError("graph document must be a JSON object")
    n = doc.get("n")
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ValidationError(f"'n' must be a positive integer, got {n!r}")
    influence = _pairs(doc, "influence")
    if "interaction" not in doc:
        raise ValidationError("missing key 'interaction'")
    inter = doc["interaction"]
    if inter == "global":
        g = TypeGraph.global_model(n, influence)
    elif inter == "local":
        g = TypeGraph.local_model(n, influence)
    elif isinstance(inter, list):
        g = TypeGraph.general_model(n, influence, _pairs(inter, "interaction"))
    else:
        raise ValidationError("'interaction' must be \"global\", \"local\" or a list of pairs")
    names = doc.get("names")
    if names is not None:
        if not isinstance(names, list) or len(names) != n or not all(isinstance(s, str) for s in names):
            raise ValidationError(f"'names' must be a list of {n} strings")
        if len(set(names)) != n:
            raise ValidationError("'names' must be distinct")
        names = tuple(names)
    return GraphFile(g, names)


def graph_to_dict(g: TypeGraph, names=None) -> dict:
    doc: dict = {"n": g.n, "influence": [list(e) for e in g.edges]}
    if g.variant == "global":
        doc["interaction"] = "global"
    elif g.variant == "local":
        doc["interaction"] = "local"
    else:
        doc["interaction"] = [list(e) for e in sorted(g.interaction_edges)]
    if names is not None:
        doc["names"] = list(names)
    return doc


def read_graph_file(path) -> GraphFile:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read graph file {path}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed JSON in {path}: {exc.msg} (line {exc.lineno})") from exc
    return graph_from_dict(doc)


def parse_graph(path) -> TypeGraph:
    return read_graph_file(path).graph


def write_graph(g: TypeGraph, path, names=None) -> None:
    atomic_write(path, json.dumps(graph_to_dict(g, names), indent=2) + "\n")


def _to_float(token: str) -> float:
    try:
        return float(Fraction(token.strip()))
    except (ValueError, ZeroDivisionError) as exc:
        raise ValidationError(f"cannot parse mass {token.strip()!r}") from exc


def parse_masses(source: str, n: int | None = None) -> np.ndarray:
    """Comma-separated reals or fractions (``"2/5,1/5,2/5"``), or a path to a
    JSON array. Fractions are parsed exactly, then rounded once to float."""
    path = Path(source)
    if source.strip().endswith(".json") or path.is_file():
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read masses from {source}: {exc}") from exc
        if not isinstance(raw, list):
            raise ValidationError("masses file must hold a JSON array")
        values = [_to_float(str(v)) for v in raw]
    else:
        values = [_to_float(tok) for tok in source.split(",") if tok.strip()]
    x = np.array(values, dtype=float)
    if n is not None and x.size != n:
        raise ValidationError(f"got {x.size} masses for {n} types")
    return x


def _fmt(v: float) -> str:
    s = f"{v:.15g}"
    return "0" if s == "-0" else s


def trajectory_csv(states, names=None) -> str:
    states = np.asarray(states, dtype=float)
    cols = list(names) if names is not None else [f"x{i}" for i in range(states.shape[1])]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", *cols])
    for t, row in enumerate(states):
        w.writerow([t, *(_fmt(v) for v in row)])
    return buf.getvalue()


def write_trajectory(traj: Trajectory | np.ndarray, path, names=None) -> None:
    states = traj.states if isinstance(traj, Trajectory) else traj
    atomic_write(path, trajectory_csv(states, names))


def flows_csv(traj: Trajectory) -> str:
    if traj.flows is None:
        raise ValidationError("trajectory has no recorded flows")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", *(f"{a}->{b}" for a, b in traj.edges)])
    for t, row in enumerate(traj.flows):
        w.writerow([t, *(_fmt(v) for v in row)])
    return buf.getvalue()


@dataclass
class TrajectoryTable:
    columns: list[str]
    t: np.ndarray
    states: np.ndarray


def read_trajectory(path) -> TrajectoryTable:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read trajectory {path}: {exc.strerror}") from exc
    return parse_trajectory(text)


def parse_trajectory(text: str) -> TrajectoryTable:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or not rows[0]:
        raise ValidationError("empty trajectory file")
    header = rows[0]
    if header[0] != "t" or len(header) < 2:
        raise ValidationError("trajectory header must be 't,<type columns...>'")
    ts, data = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ValidationError(
                f"line {lineno}: {len(row)} columns, header has {len(header)}"
            )
        try:
            ts.append(int(row[0]))
            data.append([float(v) for v in row[1:]])
        except ValueError as exc:
            raise ValidationError(f"line {lineno}: {exc}") from exc
    if not data:
        raise ValidationError("trajectory has no rows")
    t = np.array(ts)
    states = np.array(data)
    if t[0] != 0 or np.any(np.diff(t) <= 0):
        raise ValidationError("t must start at 0 and increase strictly")
    bad = np.flatnonzero(np.abs(states.sum(axis=1) - 1) > MASS_SUM_TOL)
    if bad.size:
        raise ValidationError(f"row t={t[bad[0]]} does not sum to 1")
    return TrajectoryTable(header[1:], t, states)

