"""Monte-Carlo miner for fuzzy lagged co-clusters.

One iteration draws an anchor row ``p``, a set ``S`` of anchor columns and
a zero-fuzz subset ``S0``, then

1. admits every row that, at some lag, keeps all its reads of ``S`` within
   a ``4w`` window of the anchor's values (row phase);
2. admits every column whose reads on the admitted rows, measured against
   each row's read of a reference column ``s0``, fit one ``4w`` window
   (column phase).

Clusters below the size thresholds are dropped.  A column admitted in
step 2 fits the additive model with error ``2w`` by construction, which is
asserted on every result.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import _kernels as K
from . import window
from .errors import CapExceeded, ConfigError
from .matrix import ADDITIVE, DataMatrix, FuzzyLaggedCluster, aligned_submatrix, log_transform, objective_score
from .profiles import fit_profiles

# Discriminating probability by |S| at |S0| = 3, measured on 100 x 100 planted matrices.
DISC_PROB = {4: 0.082, 5: 0.408, 6: 0.743, 7: 0.894, 8: 0.941, 9: 0.956}
ITERATION_CAP = 2 ** 48


def default_disc_set_size(m: int, n: int, beta_j_upper: float | None = None, max_fuzz: int = 1) -> dict:
    """Empirical ``|S|`` rule, plus the worst-case bound when ``beta_j_upper`` is known."""
    if m < 2 or n < 2:
        raise ConfigError("matrix must be at least 2x2")
    exact = 0.6197 * math.log2(4 * m * n) - 1.0063
    out = {"exact": exact, "recommended": int(min(max(math.floor(exact + 0.5), 2), n))}
    if beta_j_upper is not None:
        base = 3 * beta_j_upper * (2 * max_fuzz + 1)
        if not 0 < base < 1:
            raise ConfigError("3 * beta_j_upper * (2F + 1) must lie in (0, 1)")
        out["theoretical"] = math.log(4 * m * n) / math.log(1 / base)
    return out


def disc_probability(disc_size: int) -> float:
    """Calibrated discriminating probability; sizes outside the table take the nearest entry."""
    k = min(max(disc_size, min(DISC_PROB)), max(DISC_PROB))
    return DISC_PROB[k]


def default_iterations(beta_i: float, beta_j: float, disc_size: int, disc_prob: float = 1.0) -> int:
    """``ceil(2 ln 2 / (p * beta_i * beta_j**|S|))``."""
    if not (0 < beta_i <= 1 and 0 < beta_j <= 1):
        raise ConfigError("beta_i and beta_j must lie in (0, 1]")
    if not 0 < disc_prob <= 1:
        raise ConfigError("disc_prob must lie in (0, 1]")
    log_rho = math.log(2 * math.log(2)) - math.log(disc_prob) - math.log(beta_i) - disc_size * math.log(beta_j)
    if log_rho > math.log(ITERATION_CAP):
        raise CapExceeded(f"{math.exp(log_rho):.3g} iterations exceed 2**48; use a smaller discriminating set")
    return math.ceil(2 * math.log(2) / (disc_prob * beta_i * beta_j ** disc_size))


def expected_hit_rate(disc_prob: float) -> float:
    if not 0 <= disc_prob <= 1:
        raise ValueError("disc_prob must lie in [0, 1]")
    return 1.0 - 0.25 ** disc_prob


def _threshold(beta: float, size: int) -> int:
    # Guard against 0.3 * 100 = 30.000000000000004.
    return math.ceil(round(beta * size, 9))


@dataclass(frozen=True)
class MinerConfig:
    w: float
    beta_i: float
    beta_j: float
    max_fuzz: int | Sequence[int] = 0
    disc_set_size: int | None = None
    zero_fuzz_size: int = 3
    iterations: int | None = None
    disc_prob: float | None = None
    objective: str = "area"
    psi: float | None = None
    anti: bool = False
    min_present_fraction: float = 0.5
    max_lag: int | None = None
    beta_j_upper: float | None = None
    relative_fuzz: bool = True
    seed: int = 0

    def fuzz_bounds(self, m: int) -> np.ndarray:
        F = np.asarray(self.max_fuzz, dtype=np.int64)
        if F.ndim == 0:
            F = np.full(m, int(F), dtype=np.int64)
        if F.shape != (m,):
            raise ConfigError(f"per-row fuzz bounds need {m} entries, got {F.shape}")
        if (F < 0).any():
            raise ConfigError("fuzz bounds must be non-negative")
        return F

    def resolve(self, m: int, n: int) -> "Plan":
        if self.w < 0 or not math.isfinite(self.w):
            raise ConfigError(f"w must be finite and non-negative, got {self.w}")
        for name in ("beta_i", "beta_j"):
            b = getattr(self, name)
            if not 0 < b <= 1:
                raise ConfigError(f"{name} must lie in (0, 1], got {b}")
        need_rows = _threshold(self.beta_i, m)
        need_cols = _threshold(self.beta_j, n)
        if need_rows < 2 or need_cols < 2:
            raise ConfigError(f"size thresholds {need_rows}x{need_cols} are below 2x2")
        if self.objective not in ("area", "perimeter", "psi"):
            raise ConfigError(f"unknown objective {self.objective!r}")
        if self.objective == "psi" and (self.psi is None or not 0 < self.psi < 1):
            raise ConfigError("psi objective needs 0 < psi < 1")
        if not 0 < self.min_present_fraction <= 1:
            raise ConfigError("min_present_fraction must lie in (0, 1]")
        if self.disc_set_size is not None:
            k = self.disc_set_size
            if self.beta_j_upper is not None:
                raise ConfigError("give either disc_set_size or beta_j_upper, not both")
        elif self.beta_j_upper is not None:
            F = int(self.fuzz_bounds(m).max())
            k = math.ceil(default_disc_set_size(m, n, self.beta_j_upper, F)["theoretical"])
        else:
            k = default_disc_set_size(m, n)["recommended"]
        if not 1 <= k <= n:
            raise ConfigError(f"discriminating set size {k} outside [1, {n}]")
        k0 = min(self.zero_fuzz_size, k)
        if k0 < 0:
            raise ConfigError("zero_fuzz_size must be non-negative")
        p = self.disc_prob if self.disc_prob is not None else disc_probability(k)
        rho = self.iterations if self.iterations is not None else default_iterations(self.beta_i, self.beta_j, k, p)
        if rho < 1:
            raise ConfigError("iterations must be positive")
        max_lag = n if self.max_lag is None else self.max_lag
        if not 0 <= max_lag <= n:
            raise ConfigError(f"max_lag must lie in [0, {n}]")
        return Plan(
            w=float(self.w), F=self.fuzz_bounds(m), k=k, k0=k0, iterations=rho,
            need_rows=need_rows, need_cols=need_cols, nu=self.min_present_fraction,
            max_lag=max_lag, anti=self.anti, seed=self.seed,
            objective=self.objective, psi=self.psi, relative_fuzz=self.relative_fuzz,
        )


class Plan(NamedTuple):
    """A configuration resolved against concrete matrix dimensions."""
    w: float
    F: np.ndarray
    k: int
    k0: int
    iterations: int
    need_rows: int
    need_cols: int
    nu: float
    max_lag: int
    anti: bool
    seed: int
    objective: str
    psi: float | None
    relative_fuzz: bool = True
    width: float | None = None


@dataclass(frozen=True)
class SeedChoice:
    anchor: int
    disc_set: tuple
    zero_fuzz_set: tuple
    anchor_col: int

    def __post_init__(self):
        if len(set(self.disc_set)) != len(self.disc_set):
            raise ValueError("discriminating columns must be distinct")
        if not set(self.zero_fuzz_set) <= set(self.disc_set):
            raise ValueError("zero-fuzz columns must be a subset of the discriminating set")
        if self.anchor_col not in self.disc_set:
            raise ValueError("anchor column must belong to the discriminating set")


def draw_seed(rng: np.random.Generator, m: int, n: int, k: int, k0: int) -> SeedChoice:
    p = int(rng.integers(m))
    S = tuple(rng.permutation(n)[:k].tolist())
    S0 = S[:k0]  # S is in random order, so any prefix is a uniform subset
    pool = S0 if S0 else S
    return SeedChoice(p, S, S0, pool[int(rng.integers(len(pool)))])


def _width(A: np.ndarray, w: float) -> float:
    # Slack for float rounding: R + C is not always exactly reproduced.
    scale = float(np.nanmax(np.abs(A))) if np.isfinite(A).any() else 1.0
    return 4.0 * w + 1e-9 * max(1.0, scale)


class RowPhase(NamedTuple):
    rows: np.ndarray
    lags: np.ndarray
    signs: np.ndarray
    fuzz: np.ndarray      # |I| x |S| offsets on S, -99 where no read exists


class ColumnPhase(NamedTuple):
    cols: np.ndarray
    fuzz: np.ndarray      # |I| x |J|
    present: np.ndarray   # |I| x |J|
    start: np.ndarray     # window start per column


def _values(A) -> np.ndarray:
    if isinstance(A, DataMatrix):
        if A.domain != ADDITIVE:
            A = log_transform(A)
        return A.values
    return np.asarray(A, dtype=float)


def row_addition(A, seed: SeedChoice, w: float, fuzz_bounds, anti: bool = False,
                 nu: float = 0.5, max_lag: int | None = None, method: str = "kernel",
                 need_rows: int = 0, width: float | None = None,
                 relative_fuzz: bool = True) -> RowPhase | None:
    """Row phase for one seed.

    Returns ``None`` when fewer than ``need_rows`` rows can join.  ``method``
    selects the compiled per-lag test or the sorted-event sweep; both admit
    the same rows at the same lags.  ``width`` overrides the window width
    (``4w`` plus rounding slack).

    The anchor's own reads of columns outside ``S0`` may carry fuzz, so
    with ``relative_fuzz`` row ``i`` is compared to them with offsets up to
    ``F_i + F_p``; otherwise up to ``F_i``.  Recorded fuzz on ``S`` is
    relative to the anchor's reads.
    """
    V = _values(A)
    m, n = V.shape
    F = np.broadcast_to(np.asarray(fuzz_bounds, dtype=np.int64), (m,)).copy()
    if relative_fuzz:
        F = F + F[seed.anchor]
    S = np.asarray(seed.disc_set, dtype=np.int64)
    zero = np.array([s in seed.zero_fuzz_set for s in seed.disc_set], dtype=np.bool_)
    width = _width(V, w) if width is None else width
    limit = n if max_lag is None else max_lag
    lag = np.zeros(m, np.int64)
    sign = np.zeros(m, np.int64)
    p = seed.anchor
    if method == "kernel":
        got = K.row_phase(V, p, S, zero, F, width, window.min_present(nu, len(S)), limit, anti, need_rows, lag, sign)
        if got < 0:
            return None
    elif method == "sweep":
        for i in range(m):
            if i == p:
                sign[i] = 1
                continue
            for sg in ((1.0, -1.0) if anti else (1.0,)):
                ok = window.row_lags(V, i, p, S, zero, F[i], width, nu, sg, limit)
                if ok:
                    lag[i], sign[i] = ok[0], int(sg)
                    break
    else:
        raise ValueError(f"unknown method {method!r}")
    rows = np.flatnonzero(sign)
    if len(rows) < need_rows:
        return None
    fz = K.row_assign(V, p, S, zero, F, rows, lag[rows], sign[rows], width)
    return RowPhase(rows, lag[rows], sign[rows], fz)


def column_addition(A, rows, lags, signs, s0: int, w: float, fuzz_bounds, anchor: int,
                    s0_fuzz=None, zero_cols=(), nu: float = 0.5, width: float | None = None,
                    reassign: bool = True) -> ColumnPhase:
    """Column phase: every column fitting all rows relative to their read of ``s0``.

    ``fuzz_bounds`` is indexed by matrix row.  ``s0_fuzz`` gives each row's
    offset on ``s0`` from the row phase (zero by default); reads on
    ``zero_cols`` are taken without fuzz.  The anchor row may take fuzz
    here like any other row, so a cluster column is a position in the
    anchor's unfuzzed coordinates.  With fuzz, a fuzz-free column ``j``
    is usually admitted again as ``j - 1`` and ``j + 1`` reading the same
    cells.  Each column takes its least-fuzzy window; with ``reassign``,
    a column whose window only repeats cells taken by less fuzzy columns
    moves to another window when one exists.  Remaining copies are removed
    by :func:`flagmine.postprocess.max_nonintersecting_columns`.
    """
    V = _values(A)
    m, n = V.shape
    rows = np.asarray(rows, dtype=np.int64)
    lags = np.asarray(lags, dtype=np.int64)
    signs = np.asarray(signs, dtype=np.float64)
    F = np.broadcast_to(np.asarray(fuzz_bounds, dtype=np.int64), (m,))[rows].copy()
    phi = np.zeros(len(rows), np.int64) if s0_fuzz is None else np.asarray(s0_fuzz, dtype=np.int64)
    pos = s0 + lags + phi
    refs = np.full(len(rows), np.nan)
    ok = (pos >= 0) & (pos < n)
    refs[ok] = V[rows[ok], pos[ok]]
    zero = np.zeros(n, np.bool_)
    zero[list(zero_cols)] = True
    width = _width(V, w) if width is None else width
    accepted = np.zeros(n, np.bool_)
    K.column_phase(V, rows, lags, refs, signs, F, zero, width, window.min_present(nu, len(rows)), accepted)
    accepted[s0] = True
    cols = np.flatnonzero(accepted)
    fuzz, present, start = K.column_assign(V, rows, lags, refs, signs, F, zero, width, cols)
    if reassign and F.max() > 0:
        order = np.lexsort((cols, np.abs(fuzz).sum(axis=0)))
        K.column_reassign(V, rows, lags, refs, signs, F, zero, width, cols, order, fuzz, present, start)
    return ColumnPhase(cols, fuzz, present, start)


def run_iteration(V: np.ndarray, plan: Plan, it: int) -> FuzzyLaggedCluster | None:
    """One seed-and-grow iteration; RNG stream depends only on ``(seed, it)``."""
    m, n = V.shape
    rng = np.random.default_rng([plan.seed, it])
    seed = draw_seed(rng, m, n, plan.k, plan.k0)
    rp = row_addition(V, seed, plan.w, plan.F, plan.anti, plan.nu, plan.max_lag,
                      need_rows=plan.need_rows, width=plan.width, relative_fuzz=plan.relative_fuzz)
    if rp is None:
        return None
    s_idx = seed.disc_set.index(seed.anchor_col)
    phi = rp.fuzz[:, s_idx]
    # Rows without a read of s0 cannot be referenced in the column phase.
    keep = phi != -99
    if keep.sum() < plan.need_rows:
        return None
    rows, lags, signs, phi = rp.rows[keep], rp.lags[keep], rp.signs[keep], phi[keep]
    pos = seed.anchor_col + lags + phi
    inside = (pos >= 0) & (pos < n)
    keep = inside.copy()
    keep[inside] = ~np.isnan(V[rows[inside], pos[inside]])
    if keep.sum() < plan.need_rows:
        return None
    rows, lags, signs, phi = rows[keep], lags[keep], signs[keep], phi[keep]
    cp = column_addition(V, rows, lags, signs, seed.anchor_col, plan.w, plan.F, seed.anchor,
                         s0_fuzz=phi, zero_cols=seed.zero_fuzz_set, nu=plan.nu, width=plan.width)
    if len(cp.cols) < plan.need_cols:
        return None
    fuzz = {}
    for r, i in enumerate(rows):
        for q, j in enumerate(cp.cols):
            if cp.fuzz[r, q]:
                fuzz[int(i), int(j)] = int(cp.fuzz[r, q])
    cluster = FuzzyLaggedCluster(
        rows=rows, lags=lags, cols=cp.cols, fuzz=fuzz, max_fuzz=int(plan.F.max()),
        anti_rows=frozenset(int(i) for i, s in zip(rows, signs) if s < 0), anchor=seed.anchor,
    )
    return _certify(V, cluster, cp, plan.w)


def _certify(V, cluster, cp, w):
    """Fit profiles starting from the window witness and assert the ``2w`` bound.

    Each admitted column ``j`` has all its events in ``[start_j, start_j + 4w]``,
    so ``C_j = start_j + 2w`` and ``R_i`` = the row's reference read already
    leave residuals of at most ``2w``; the fit can only improve on that.
    """
    B = aligned_submatrix(DataMatrix(V), cluster)
    B[~cp.present] = np.nan
    width = _width(V, w)
    init = cp.start + width / 2
    keep_r = ~np.isnan(B).all(axis=1)
    keep_c = ~np.isnan(B).all(axis=0)
    fit = fit_profiles(B[np.ix_(keep_r, keep_c)], init_cols=init[keep_c])
    slack = width / 2 - 2 * w + 1e-9
    assert fit.w_star <= 2 * w + slack, f"mined cluster has error {fit.w_star} > 2w = {2 * w}"
    return FuzzyLaggedCluster(
        rows=cluster.rows, lags=cluster.lags, cols=cluster.cols, fuzz=cluster.fuzz,
        max_fuzz=cluster.max_fuzz, achieved_error=fit.w_star, anti_rows=cluster.anti_rows,
        anchor=cluster.anchor,
    )


_WORKER = {}


def _init_worker(V, plan):
    _WORKER["V"], _WORKER["plan"] = V, plan


def _run_chunk(bounds):
    V, plan = _WORKER["V"], _WORKER["plan"]
    return [(it, c) for it in range(*bounds) if (c := run_iteration(V, plan, it)) is not None]


def _chunks(total: int, parts: int):
    step = max(1, math.ceil(total / parts))
    return [(a, min(a + step, total)) for a in range(0, total, step)]


def cluster_score(cluster: FuzzyLaggedCluster, plan_or_cfg) -> float:
    return objective_score(len(cluster.rows), len(cluster.cols), plan_or_cfg.objective, plan_or_cfg.psi)


def dedup_and_sort(found, plan) -> list:
    """Keep the earliest iteration's copy of each cluster, best objective first.

    Two results are the same cluster when they agree after rebasing the lags
    to a smallest lag of 0, so the same cluster grown from different anchors
    is reported once.
    """
    seen = {}
    for it, c in sorted(found, key=lambda x: x[0]):
        seen.setdefault((c.canonical_key(), c.anti_rows), c)
    return sorted(seen.values(), key=lambda c: (-cluster_score(c, plan), tuple(sorted(c.rows)), c.cols))


def mine(A, cfg: MinerConfig, workers: int = 1) -> list:
    """Run all iterations and return the distinct surviving clusters.

    Multiplicative matrices are mined in log space.  Output does not depend
    on ``workers``: iteration ``k`` always draws from the RNG stream
    ``(cfg.seed, k)``.
    """
    V = _values(A)
    m, n = V.shape
    plan = cfg.resolve(m, n)
    plan = plan._replace(width=_width(V, plan.w))
    if workers <= 1:
        found = [(it, c) for it in range(plan.iterations) if (c := run_iteration(V, plan, it)) is not None]
    else:
        found = []
        with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(V, plan)) as ex:
            for part in ex.map(_run_chunk, _chunks(plan.iterations, workers * 4)):
                found.extend(part)
    return dedup_and_sort(found, plan)
