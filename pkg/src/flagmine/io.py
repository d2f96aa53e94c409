"""JSON and CSV formats for clusters, ground truth, labels and trajectories.

Indices in files are 1-based.  Floats are written with 17 significant
digits so a file read back reproduces the exact values.
"""
from __future__ import annotations

import csv
import json
import math

import numpy as np

from .errors import SchemaError
from .matrix import FuzzyLaggedCluster
from .synth import GroundTruth, Trajectories

CLUSTER_KEYS = ("rows", "lags", "cols", "fuzz", "max_fuzz", "error", "anti", "objective")


def _fmt(x) -> str:
    if isinstance(x, bool) or x is None:
        return json.dumps(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return "null"
        s = format(x, ".17g")
        return s if any(c in s for c in ".en") else s + ".0"
    if isinstance(x, str):
        return json.dumps(x, ensure_ascii=False)
    if isinstance(x, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_fmt(v)}" for k, v in x.items()) + "}"
    if isinstance(x, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_fmt(v) for v in x) + "]"
    raise TypeError(f"cannot serialise {type(x).__name__}")


def dumps(obj) -> str:
    """JSON text with 17-significant-digit floats and a trailing newline."""
    return _fmt(obj) + "\n"


def write_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(obj))


def read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as e:
        raise SchemaError(f"{path}: not valid JSON ({e})") from e


def cluster_to_dict(c: FuzzyLaggedCluster, objective: float | None = None) -> dict:
    order = sorted(range(len(c.rows)), key=lambda r: c.rows[r])
    return {
        "rows": [c.rows[r] + 1 for r in order],
        "lags": [c.lags[r] for r in order],
        "cols": [j + 1 for j in c.cols],
        "fuzz": [[i + 1, j + 1, f] for (i, j), f in sorted(c.fuzz.items())],
        "max_fuzz": c.max_fuzz,
        "error": float(c.achieved_error),
        "anti": bool(c.anti_rows),
        "objective": None if objective is None else float(objective),
        "anti_rows": sorted(i + 1 for i in c.anti_rows),
        "anchor": None if c.anchor is None else c.anchor + 1,
    }


def _ints(d, key):
    v = d[key]
    if not isinstance(v, list) or not all(isinstance(x, int) and not isinstance(x, bool) for x in v):
        raise SchemaError(f"{key!r} must be a list of integers")
    return v


def cluster_from_dict(d) -> FuzzyLaggedCluster:
    if not isinstance(d, dict):
        raise SchemaError("cluster entry must be an object")
    missing = [k for k in CLUSTER_KEYS if k not in d]
    if missing:
        raise SchemaError(f"cluster entry lacks {missing}")
    rows, lags, cols = _ints(d, "rows"), _ints(d, "lags"), _ints(d, "cols")
    if min(rows + cols, default=1) < 1:
        raise SchemaError("indices are 1-based")
    fuzz = {}
    for e in d["fuzz"]:
        if not (isinstance(e, list) and len(e) == 3 and all(isinstance(x, int) for x in e)):
            raise SchemaError("fuzz entries must be [row, col, offset]")
        fuzz[e[0] - 1, e[1] - 1] = e[2]
    try:
        return FuzzyLaggedCluster(
            rows=[i - 1 for i in rows], lags=lags, cols=[j - 1 for j in cols], fuzz=fuzz,
            max_fuzz=int(d["max_fuzz"]), achieved_error=float(d["error"] if d["error"] is not None else math.nan),
            anti_rows=[i - 1 for i in d.get("anti_rows", [])],
            anchor=None if d.get("anchor") is None else d["anchor"] - 1,
        )
    except ValueError as e:
        raise SchemaError(str(e)) from e


def write_clusters(clusters, path, scores=None) -> None:
    scores = [None] * len(clusters) if scores is None else scores
    write_json({"clusters": [cluster_to_dict(c, s) for c, s in zip(clusters, scores)]}, path)


def read_clusters(path) -> list:
    d = read_json(path)
    if not isinstance(d, dict) or not isinstance(d.get("clusters"), list):
        raise SchemaError(f"{path}: expected an object with a 'clusters' list")
    return [cluster_from_dict(c) for c in d["clusters"]]


def truth_to_dict(t: GroundTruth) -> dict:
    return {"cluster": cluster_to_dict(t.cluster), "w": float(t.w), "F": t.F, "seed": t.seed,
            "R": [float(x) for x in t.R], "C": [float(x) for x in t.C]}


def write_truth(t: GroundTruth, path) -> None:
    write_json(truth_to_dict(t), path)


def read_truth(path) -> GroundTruth:
    d = read_json(path)
    if not isinstance(d, dict) or "cluster" not in d:
        raise SchemaError(f"{path}: expected a ground-truth object with a 'cluster' entry")
    try:
        return GroundTruth(cluster_from_dict(d["cluster"]), float(d["w"]), int(d["F"]), int(d["seed"]),
                           np.asarray(d["R"], float), np.asarray(d["C"], float))
    except (KeyError, TypeError) as e:
        raise SchemaError(f"{path}: malformed ground truth ({e})") from e


def write_labels(labels, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row", "label"])
        for i, lab in enumerate(labels):
            w.writerow([i + 1, int(lab)])


def read_labels(path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or set(rows[0]) != {"row", "label"}:
        raise SchemaError(f"{path}: expected columns row,label")
    try:
        pairs = sorted((int(r["row"]), int(r["label"])) for r in rows)
    except ValueError as e:
        raise SchemaError(f"{path}: {e}") from e
    if [p[0] for p in pairs] != list(range(1, len(pairs) + 1)):
        raise SchemaError(f"{path}: rows must be 1..m without gaps")
    return np.array([p[1] for p in pairs])


def write_trajectories(tr: Trajectories, path) -> None:
    """One line per object per time step: ``object_id,t,x,y`` (1-based ids and steps)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["object_id", "t", "x", "y"])
        for o in range(tr.x.shape[0]):
            for t in range(tr.x.shape[1]):
                w.writerow([o + 1, t + 1, format(tr.x[o, t], ".17g"), format(tr.y[o, t], ".17g")])


def read_trajectories(path, labels=None) -> Trajectories:
    """Read ``object_id,t,x,y``; objects and steps are sorted, gaps become NaN."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or not {"object_id", "t", "x", "y"} <= set(rows[0]):
        raise SchemaError(f"{path}: expected columns object_id,t,x,y")
    try:
        recs = [(int(r["object_id"]), int(r["t"]), float(r["x"]), float(r["y"])) for r in rows]
    except ValueError as e:
        raise SchemaError(f"{path}: {e}") from e
    objs = sorted({r[0] for r in recs})
    steps = sorted({r[1] for r in recs})
    oi = {o: k for k, o in enumerate(objs)}
    ti = {t: k for k, t in enumerate(steps)}
    x = np.full((len(objs), len(steps)), np.nan)
    y = np.full_like(x, np.nan)
    for o, t, a, b in recs:
        x[oi[o], ti[t]], y[oi[o], ti[t]] = a, b
    lab = np.zeros(len(objs), np.int64) if labels is None else np.asarray(labels)
    return Trajectories(x, y, lab, np.zeros(len(objs), np.int64))
