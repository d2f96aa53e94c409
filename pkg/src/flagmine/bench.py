"""Timing harness for the row phase and whole mining runs."""
from __future__ import annotations

import time

import numpy as np

from .miner import MinerConfig, draw_seed, mine, row_addition, _width
from .synth import gen_random_matrix


def time_row_phase(m: int, n: int, iterations: int = 50, k: int = 5, k0: int = 3, F: int = 1,
                   w_frac: float = 0.01, seed: int = 0) -> float:
    """Mean seconds per row phase over ``iterations`` random seeds on a uniform matrix.

    No early stop: every row is tested, so the time reflects a full pass.
    """
    V = gen_random_matrix(m, n, seed=seed).values
    w = w_frac * (V.max() - V.min())
    width = _width(V, w)
    rng = np.random.default_rng(seed)
    seeds = [draw_seed(rng, m, n, k, k0) for _ in range(iterations)]
    row_addition(V, seeds[0], w, F, width=width)  # compile outside the timed loop
    t0 = time.perf_counter()
    for sd in seeds:
        row_addition(V, sd, w, F, width=width)
    return (time.perf_counter() - t0) / iterations


def scaling_ratio(m: int, n: int, repeats: int = 5, **kw) -> float:
    """Mean of ``time(2n) / time(n)`` over ``repeats`` paired measurements."""
    ratios = []
    for r in range(repeats):
        a = time_row_phase(m, n, seed=r, **kw)
        b = time_row_phase(m, 2 * n, seed=r, **kw)
        ratios.append(b / a)
    return float(np.mean(ratios))


def bench_rows(sizes, m: int = 200, iterations: int = 50, mine_iterations: int = 100,
               k: int = 5, F: int = 1, w_frac: float = 0.01, seed: int = 0) -> list:
    """One record per ``n``: row-phase time per iteration and a full mining run."""
    out = []
    for n in sizes:
        rp = time_row_phase(m, n, iterations, k=k, F=F, w_frac=w_frac, seed=seed)
        M = gen_random_matrix(m, n, seed=seed)
        cfg = MinerConfig(w=w_frac * 1000.0, beta_i=0.3, beta_j=0.3, max_fuzz=F, disc_set_size=k,
                          iterations=mine_iterations, seed=seed)
        t0 = time.perf_counter()
        found = mine(M, cfg)
        total = time.perf_counter() - t0
        out.append({"m": m, "n": n, "disc_set_size": k, "F": F, "row_phase_s": rp,
                    "mine_iterations": mine_iterations, "mine_s": total, "clusters": len(found)})
    return out
