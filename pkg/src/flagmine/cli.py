"""Command line front end: mine, generate, probe, eval, bench and replay.

Exit codes: 0 success, 2 input/output or schema problems, 3 invalid
configuration.  Errors are also written to stderr as one JSON object.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .errors import ConfigError, FlagmineError, NonPositiveEntry, SchemaError
from .evaluation import (
    EvalReport,
    cell_set,
    cells_of,
    clustering_f1,
    coverage,
    f1_score,
    normalized_entropy,
    rnia_complement,
)
from .io import (
    read_clusters,
    read_json,
    read_labels,
    read_truth,
    write_clusters,
    write_json,
    write_labels,
    write_trajectories,
    write_truth,
)
from .matrix import ADDITIVE, MULTIPLICATIVE, DataMatrix, read_matrix_csv, write_matrix_csv
from .miner import MinerConfig, _values, cluster_score, mine
from .postprocess import max_nonintersecting_columns, merge_clusters, restrict_columns
from .synth import PlantSpec, artifact_probability, gen_random_matrix, gen_trajectories, plant_cluster


class CliError(Exception):
    def __init__(self, code, kind, message):
        super().__init__(message)
        self.code, self.kind = code, kind


def _floats(text):
    return [float(x) for x in str(text).split(",") if x]


def _ints(text):
    return [int(x) for x in str(text).split(",") if x]


def _w_abs(args, V: np.ndarray) -> float:
    """``-w`` is a fraction of the value range unless ``--w-abs`` is set."""
    if args.w_abs:
        return args.w
    lo, hi = np.nanmin(V), np.nanmax(V)
    return args.w * float(hi - lo)


def cmd_mine(args) -> dict:
    timings = {}
    t0 = time.perf_counter()
    domain = ADDITIVE if args.additive else MULTIPLICATIVE
    M = read_matrix_csv(args.matrix, domain=domain)
    timings["load_s"] = time.perf_counter() - t0
    V = _values(M)
    workers = args.workers if args.workers is not None else int(os.environ.get("FLAGMINE_WORKERS", "1"))
    cfg = MinerConfig(
        w=_w_abs(args, V), beta_i=args.min_rows, beta_j=args.min_cols, max_fuzz=args.max_fuzz,
        disc_set_size=args.disc_size, zero_fuzz_size=args.zero_fuzz_size, iterations=args.iterations,
        disc_prob=args.disc_prob, objective=args.objective, psi=args.psi, anti=args.anti,
        min_present_fraction=args.nu, max_lag=args.max_lag, seed=args.seed,
    )
    plan = cfg.resolve(*M.shape)
    t0 = time.perf_counter()
    found = mine(DataMatrix(V), cfg, workers=max(1, workers))
    timings["mine_s"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    if args.bridges:
        found = [restrict_columns(c, max_nonintersecting_columns(c, DataMatrix(V))) for c in found]
    out = {"clusters": found, "scores": [cluster_score(c, plan) for c in found]}
    write_clusters(found, args.output, out["scores"])
    if args.merge:
        groups = merge_clusters(found)
        write_json({"groups": [{"rows": sorted(r + 1 for r in g.rows), "members": [k + 1 for k in g.members]}
                               for g in groups]}, args.groups)
    timings["post_s"] = time.perf_counter() - t0
    return {"config": {**cfg.__dict__, "iterations_resolved": plan.iterations, "disc_set_size_resolved": plan.k,
                       "domain": domain, "workers": workers},
            "outputs": [args.output] + ([args.groups] if args.merge else []),
            "timings": timings, "clusters": len(found)}


def cmd_generate(args) -> dict:
    if args.kind == "matrix":
        M = gen_random_matrix(args.m, args.n, args.lo, args.hi, seed=args.seed)
        write_matrix_csv(M, args.output)
        return {"outputs": [args.output]}
    if args.kind == "plant":
        if args.input:
            M = read_matrix_csv(args.input)
        else:
            M = gen_random_matrix(args.m, args.n, args.lo, args.hi, seed=args.seed)
        span = float(np.nanmax(M.values) - np.nanmin(M.values))
        w = args.w if args.w_abs else args.w * span
        spec = PlantSpec(args.beta_i, args.beta_j, w=w, F=args.max_fuzz, seed=args.seed + 1,
                         max_lag=args.max_lag, fuzzy_col_fraction=args.fuzzy_col_fraction)
        M2, truth = plant_cluster(M, spec)
        write_matrix_csv(M2, args.output)
        write_truth(truth, args.truth)
        return {"outputs": [args.output, args.truth]}
    tr = gen_trajectories(args.groups, args.members, args.timesteps, args.lag_spread, args.fuzz_spread,
                          args.noise, seed=args.seed, separation=args.separation, smoothness=args.smoothness)
    write_trajectories(tr, args.output)
    write_labels(tr.labels, args.labels)
    outs = [args.output, args.labels]
    if args.matrix_out:
        write_matrix_csv(tr.to_matrix(args.encoding), args.matrix_out)
        outs.append(args.matrix_out)
    return {"outputs": outs}


def cmd_probe(args) -> dict:
    rows = []
    for I in _ints(args.I):
        for J in _ints(args.J):
            for w in _floats(args.w):
                for F in _ints(args.F):
                    rows.append((args.m, args.n, I, J, w, F, artifact_probability(args.m, args.n, I, J, w, F)))
    with open(args.output, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["m", "n", "size_i", "size_j", "w", "F", "probability"])
        for r in rows:
            wr.writerow([*r[:4], format(r[4], ".17g"), r[5], format(r[6], ".17g")])
    return {"outputs": [args.output], "rows": len(rows)}


def cmd_eval(args) -> dict:
    clusters = read_clusters(args.clusters)
    rep = EvalReport()
    groups = merge_clusters(clusters)
    rep.groups = len(groups)
    if args.truth:
        truth = read_truth(args.truth)
        planted = cell_set(truth.cluster)
        mined = cells_of(clusters)
        rep.rnia_complement = rnia_complement(mined, planted) if (mined or planted) else None
        rep.f1 = f1_score({r for c in clusters for r in c.rows}, truth.cluster.rows)
        rep.coverage = coverage([g.rows for g in groups], truth.cluster.rows)
    if args.labels:
        labels = read_labels(args.labels)
        top = max((r for g in groups for r in g.rows), default=-1)
        if top >= len(labels):
            raise SchemaError(f"cluster row {top + 1} has no label")
        rows = [sorted(g.rows) for g in groups]
        rep.f1 = clustering_f1(rows, labels)
        rep.entropy = normalized_entropy(rows, labels) if rows and len(np.unique(labels)) > 1 else None
        rep.coverage = coverage(rows, range(len(labels)))
    d = rep.as_dict()
    write_json(d, args.output)
    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            keys = [k for k in d if k != "extra"]
            wr.writerow(keys)
            wr.writerow(["" if d[k] is None else d[k] for k in keys])
    return {"outputs": [args.output] + ([args.csv] if args.csv else []), "report": d}


def cmd_bench(args) -> dict:
    from .bench import bench_rows

    rows = bench_rows(_ints(args.sizes), m=args.m, iterations=args.iterations,
                      mine_iterations=args.mine_iterations, k=args.disc_size, F=args.max_fuzz, seed=args.seed)
    with open(args.output, "w", newline="", encoding="utf-8") as fh:
        wr = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        wr.writeheader()
        wr.writerows(rows)
    return {"outputs": [args.output], "rows": len(rows)}


def cmd_replay(args) -> dict:
    man = read_json(args.manifest)
    if not isinstance(man, dict) or not isinstance(man.get("argv"), list):
        raise SchemaError(f"{args.manifest}: not a run manifest")
    argv = list(man["argv"])
    if args.output:
        argv = _replace_opt(argv, ("-o", "--output"), args.output)
    argv = _replace_opt(argv, ("--manifest",), args.manifest + ".replay.json")
    code = main(argv)
    if code:
        raise CliError(code, "replay", f"replayed command exited with {code}")
    return {"argv": argv}


def _replace_opt(argv, names, value):
    out = list(argv)
    for k, a in enumerate(out[:-1]):
        if a in names:
            out[k + 1] = value
            return out
    return out + [names[-1], value]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="flagmine", description="Mine fuzzy lagged co-clusters.")
    p.add_argument("--version", action="version", version=f"flagmine {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    m = sub.add_parser("mine", help="mine clusters from a matrix CSV")
    m.add_argument("matrix")
    m.add_argument("-w", type=float, required=True, help="error bound as a fraction of the value range")
    m.add_argument("--w-abs", action="store_true", help="read -w in data units instead")
    m.add_argument("-F", "--max-fuzz", type=int, default=0)
    m.add_argument("--min-rows", type=float, required=True, help="beta_I, fraction of rows")
    m.add_argument("--min-cols", type=float, required=True, help="beta_J, fraction of columns")
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--additive", action="store_true", help="skip the log transform")
    m.add_argument("--workers", type=int, default=None)
    m.add_argument("--disc-size", type=int, default=None)
    m.add_argument("--zero-fuzz-size", type=int, default=3)
    m.add_argument("--iterations", type=int, default=None)
    m.add_argument("--disc-prob", type=float, default=None)
    m.add_argument("--objective", choices=["area", "perimeter", "psi"], default="area")
    m.add_argument("--psi", type=float, default=None)
    m.add_argument("--anti", action="store_true")
    m.add_argument("--nu", type=float, default=0.5, help="minimum fraction of non-missing witnesses")
    m.add_argument("--max-lag", type=int, default=None)
    m.add_argument("--bridges", action="store_true", help="keep a maximum non-intersecting column set")
    m.add_argument("--merge", action="store_true", help="also write row groups merged over shared rows")
    m.add_argument("--groups", default="groups.json")
    m.add_argument("-o", "--output", default="clusters.json")
    m.add_argument("--manifest", default="manifest.json")
    m.set_defaults(func=cmd_mine)

    g = sub.add_parser("generate", help="write synthetic data")
    g.add_argument("kind", choices=["matrix", "plant", "trajectories"])
    g.add_argument("m", type=int, nargs="?", default=100)
    g.add_argument("n", type=int, nargs="?", default=100)
    g.add_argument("--lo", type=float, default=100.0)
    g.add_argument("--hi", type=float, default=1100.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--input", help="plant into this matrix CSV instead of a fresh one")
    g.add_argument("--beta-i", type=float, default=0.3)
    g.add_argument("--beta-j", type=float, default=0.3)
    g.add_argument("-w", type=float, default=0.01, help="noise bound as a fraction of the value range")
    g.add_argument("--w-abs", action="store_true")
    g.add_argument("-F", "--max-fuzz", type=int, default=0)
    g.add_argument("--max-lag", type=int, default=5)
    g.add_argument("--fuzzy-col-fraction", type=float, default=0.25)
    g.add_argument("--truth", default="truth.json")
    g.add_argument("--groups", type=int, default=4)
    g.add_argument("--members", type=int, default=8)
    g.add_argument("--timesteps", type=int, default=200)
    g.add_argument("--lag-spread", type=int, default=20)
    g.add_argument("--fuzz-spread", type=int, default=1, help="per-reading time jitter in steps")
    g.add_argument("--noise", type=float, default=0.1)
    g.add_argument("--separation", type=float, default=10.0)
    g.add_argument("--smoothness", type=float, default=0.0)
    g.add_argument("--labels", default="labels.csv")
    g.add_argument("--matrix-out", help="also write the trajectory matrix CSV")
    g.add_argument("--encoding", choices=["x", "y", "interleaved"], default="interleaved")
    g.add_argument("-o", "--output", required=True)
    g.add_argument("--manifest", default=None)
    g.set_defaults(func=cmd_generate)

    pr = sub.add_parser("probe", help="artifact probability grid")
    pr.add_argument("m", type=int)
    pr.add_argument("n", type=int)
    pr.add_argument("-I", required=True, help="comma separated cluster row counts")
    pr.add_argument("-J", required=True, help="comma separated cluster column counts")
    pr.add_argument("-w", required=True, help="comma separated errors, fractions of the value range")
    pr.add_argument("-F", default="0")
    pr.add_argument("-o", "--output", default="probability.csv")
    pr.add_argument("--manifest", default=None)
    pr.set_defaults(func=cmd_probe)

    e = sub.add_parser("eval", help="score clusters against ground truth or labels")
    e.add_argument("clusters")
    e.add_argument("--truth")
    e.add_argument("--labels")
    e.add_argument("-o", "--output", default="report.json")
    e.add_argument("--csv")
    e.add_argument("--manifest", default=None)
    e.set_defaults(func=cmd_eval)

    b = sub.add_parser("bench", help="time the row phase and mining across sizes")
    b.add_argument("--sizes", default="100,200,400")
    b.add_argument("--m", type=int, default=200)
    b.add_argument("--iterations", type=int, default=50)
    b.add_argument("--mine-iterations", type=int, default=100)
    b.add_argument("--disc-size", type=int, default=5)
    b.add_argument("-F", "--max-fuzz", type=int, default=1)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("-o", "--output", default="bench.csv")
    b.add_argument("--manifest", default=None)
    b.set_defaults(func=cmd_bench)

    r = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    r.add_argument("manifest")
    r.add_argument("-o", "--output", default=None, help="write the output here instead")
    r.set_defaults(func=cmd_replay)
    return p


def _fail(code, kind, message) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message, "exit_code": code}) + "\n")
    return code


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    t0 = time.perf_counter()
    try:
        info = args.func(args)
    except CliError as e:
        return _fail(e.code, e.kind, str(e))
    except ConfigError as e:
        return _fail(3, "config", str(e))
    except (OSError, SchemaError) as e:
        return _fail(2, "io", str(e))
    except NonPositiveEntry as e:
        return _fail(2, "input", str(e))
    except FlagmineError as e:
        return _fail(3, type(e).__name__, str(e))
    except ValueError as e:
        return _fail(2, "input", str(e))
    manifest = getattr(args, "manifest", None)
    if manifest and args.command != "replay":
        info = {k: v for k, v in info.items() if k not in ("report",)}
        write_json({
            "command": args.command, "argv": argv, "tool_version": __version__,
            "seed": getattr(args, "seed", None),
            "inputs": [x for x in (getattr(args, "matrix", None), getattr(args, "input", None),
                                   getattr(args, "clusters", None)) if x],
            "wall_clock_s": time.perf_counter() - t0, **info,
        }, manifest)
    return 0


if __name__ == "__main__":
    sys.exit(main())
