"""Synthetic data: uniform matrices, planted clusters, trajectory groups and
the closed-form bound on the chance of noise-made clusters."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import InfeasiblePlant
from .matrix import DataMatrix, FuzzyLaggedCluster


def gen_random_matrix(m: int, n: int, lo: float = 100.0, hi: float = 1100.0, seed: int = 0) -> DataMatrix:
    """I.i.d. uniform entries in ``[lo, hi)``."""
    if m < 2 or n < 2:
        raise ValueError("matrix must be at least 2x2")
    if not lo < hi:
        raise ValueError("need lo < hi")
    rng = np.random.default_rng(seed)
    return DataMatrix(rng.uniform(lo, hi, size=(m, n)))


@dataclass(frozen=True)
class PlantSpec:
    """Shape and noise of a planted cluster.

    ``w`` and ``value_range`` are in matrix units; ``value_range=None`` uses
    the matrix's own min and max.  Fuzz is drawn only on a random
    ``fuzzy_col_fraction`` of the cluster columns, the rest are read at
    their lagged position exactly.  Lags are drawn from
    ``[-max_lag, max_lag]``, shrunk if the matrix is too narrow.
    """

    beta_i: float
    beta_j: float
    w: float = 0.0
    F: int = 0
    value_range: tuple | None = None
    seed: int = 0
    max_lag: int = 5
    fuzzy_col_fraction: float = 0.25
    row_offset: float = 0.05


@dataclass(frozen=True)
class GroundTruth:
    cluster: FuzzyLaggedCluster
    w: float
    F: int
    seed: int
    R: np.ndarray
    C: np.ndarray


def _row_fuzz(rng, cols, fuzzy, lag, F, tries=100):
    """Offsets for one row such that no two cluster columns share a matrix column."""
    reserved = {j + lag for j, fz in zip(cols, fuzzy) if not fz}
    for _ in range(tries):
        used, out = set(), []
        for j, fz in zip(cols, fuzzy):
            if not fz:
                used.add(j + lag)
                out.append(0)
                continue
            opts = [f for f in range(-F, F + 1) if j + lag + f not in used and (f == 0 or j + lag + f not in reserved)]
            if not opts:
                break
            f = int(rng.choice(opts))
            used.add(j + lag + f)
            out.append(f)
        else:
            return out
    raise InfeasiblePlant("could not place fuzzy entries without collisions")


def plant_cluster(matrix: DataMatrix, spec: PlantSpec):
    """Overwrite a random fuzzy lagged cluster into a copy of ``matrix``.

    Entry ``(i, j)`` of the cluster is written to matrix column
    ``j + T[i] + f[i, j]`` as ``R[i] + C[j] + U(-w, w)``.
    """
    m, n = matrix.shape
    size_i = math.ceil(round(spec.beta_i * m, 9))
    size_j = math.ceil(round(spec.beta_j * n, 9))
    if size_i < 2 or size_j < 2 or size_i > m:
        raise InfeasiblePlant(f"cluster size {size_i}x{size_j} infeasible for {m}x{n}")
    if spec.w < 0 or spec.F < 0:
        raise InfeasiblePlant("w and F must be non-negative")
    lo, hi = spec.value_range if spec.value_range is not None else (np.nanmin(matrix.values), np.nanmax(matrix.values))
    if not lo < hi:
        raise InfeasiblePlant("empty value range")
    max_lag = min(spec.max_lag, (n - size_j) // 2 - spec.F)
    if max_lag < 0:
        raise InfeasiblePlant(f"no room for {size_j} columns with fuzz {spec.F} in {n} columns")
    rng = np.random.default_rng(spec.seed)
    margin = max_lag + spec.F
    rows = np.sort(rng.choice(m, size_i, replace=False))
    cols = np.sort(rng.choice(np.arange(margin, n - margin), size_j, replace=False))
    lags = rng.integers(-max_lag, max_lag + 1, size=size_i)
    fuzzy = np.zeros(size_j, bool)
    if spec.F > 0:
        fuzzy[rng.choice(size_j, int(round(spec.fuzzy_col_fraction * size_j)), replace=False)] = True
    span = hi - lo
    R = rng.uniform(-spec.row_offset * span, spec.row_offset * span, size=size_i)
    C = rng.uniform(lo, hi, size=size_j)
    A = matrix.values.copy()
    fuzz = {}
    for r, (i, t) in enumerate(zip(rows, lags)):
        offs = _row_fuzz(rng, cols, fuzzy, int(t), spec.F)
        noise = rng.uniform(-spec.w, spec.w, size=size_j)
        for q, (j, f) in enumerate(zip(cols, offs)):
            A[i, j + t + f] = R[r] + C[q] + noise[q]
            if f:
                fuzz[int(i), int(j)] = f
    truth = FuzzyLaggedCluster(rows=rows, lags=lags, cols=cols, fuzz=fuzz, max_fuzz=spec.F, achieved_error=spec.w)
    return DataMatrix(A, domain=matrix.domain), GroundTruth(truth, spec.w, spec.F, spec.seed, R, C)


def artifact_probability(m: int, n: int, size_i: int, size_j: int, w: float, F: int) -> float:
    """Upper bound on the chance that uniform noise holds a cluster of the given size.

    ``w`` is a fraction of the value range.  A single cell lands within the
    error band of some fuzzy read with probability
    ``q = 1 - (1 - min(2w, 1))**(2F + 1)``; a fixed cluster appears with
    ``q**(|I||J|)``, and a union bound over ``C(2mn, |I|) C(3n, |J|)``
    candidate cluster shapes gives ``1 - (1 - q**(|I||J|))**N``.
    """
    if not (2 <= size_i <= 2 * m * n and 2 <= size_j <= 3 * n):
        raise ValueError("cluster size outside the admissible range")
    p_cell = min(2.0 * w, 1.0)
    if p_cell <= 0:
        return 0.0
    if p_cell >= 1:
        return 1.0
    log_q = math.log(-math.expm1((2 * F + 1) * math.log1p(-p_cell)))
    log_pc = size_i * size_j * log_q
    log_n = (
        gammaln(2 * m * n + 1) - gammaln(size_i + 1) - gammaln(2 * m * n - size_i + 1)
        + gammaln(3 * n + 1) - gammaln(size_j + 1) - gammaln(3 * n - size_j + 1)
    )
    log_nq = log_n + log_pc
    if log_nq > math.log(50.0):
        return 1.0
    if log_nq < math.log(1e-300):
        return math.exp(log_nq)
    if log_pc == 0.0:
        return 1.0
    # -N * log1p(-q), kept in log space since N alone can overflow.
    # For tiny q, -log1p(-q) is q to double precision and exp(log_pc) may underflow.
    log_mass = log_nq if log_pc < -30 else log_n + math.log(-math.log1p(-math.exp(log_pc)))
    return float(min(max(-math.expm1(-math.exp(log_mass)), 0.0), 1.0))


def has_profile_artifact(A, profile, size_i: int, size_j: int, w: float, F: int) -> bool:
    """Whether ``size_i`` rows of ``A`` each match ``size_j`` common profile columns.

    Row ``i`` matches profile column ``j`` at lag ``t`` when some read
    ``A[i, j + t + f]`` with ``|f| <= F`` lies within ``w`` of ``profile[j]``;
    the lag is shared by the row's columns.  This is the known-profile event
    that :func:`artifact_probability` bounds.
    """
    A = np.asarray(A, dtype=float)
    p = np.asarray(profile, dtype=float)
    m, n = A.shape
    lags = np.arange(-(n - 1), n)
    H = np.zeros((m, len(lags), n), bool)
    for k, t in enumerate(lags):
        for f in range(-F, F + 1):
            pos = np.arange(n) + t + f
            ok = (pos >= 0) & (pos < n)
            H[:, k, ok] |= np.abs(A[:, pos[ok]] - p[ok]) <= w
    for J in itertools.combinations(range(n), size_j):
        rows = H[:, :, list(J)].all(axis=2).any(axis=1)
        if rows.sum() >= size_i:
            return True
    return False


def artifact_frequency(m: int, n: int, size_i: int, size_j: int, w: float, F: int,
                       trials: int = 500, seed: int = 0) -> float:
    """Share of uniform ``[0, 1)`` matrices holding a known-profile artifact.

    Each trial draws a fresh matrix and a fresh uniform profile.
    """
    rng = np.random.default_rng(seed)
    hits = 0
    for _ in range(trials):
        A = rng.uniform(size=(m, n))
        hits += has_profile_artifact(A, rng.uniform(size=n), size_i, size_j, w, F)
    return hits / trials


@dataclass(frozen=True)
class Trajectories:
    """Planar paths of ``g * k`` objects over ``n`` time steps.

    ``x`` and ``y`` are ``objects x n``; ``labels`` gives each object's group;
    ``lags`` each object's delay behind its group leader.
    """

    x: np.ndarray
    y: np.ndarray
    labels: np.ndarray
    lags: np.ndarray

    def to_matrix(self, encoding: str = "x") -> DataMatrix:
        """One row per object: ``"x"``, ``"y"`` or ``"interleaved"`` (x0, y0, x1, y1, ...)."""
        if encoding == "x":
            return DataMatrix(self.x)
        if encoding == "y":
            return DataMatrix(self.y)
        if encoding == "interleaved":
            out = np.empty((self.x.shape[0], 2 * self.x.shape[1]))
            out[:, 0::2], out[:, 1::2] = self.x, self.y
            return DataMatrix(out)
        raise ValueError(f"unknown encoding {encoding!r}")


def _band_shuffle(rng, length, F, sweeps=20):
    """Random offsets ``f`` with ``|f| <= F`` placing ``j + f`` on distinct cells in ``[0, length)``.

    Starts from the identity and applies random moves and swaps; the moves
    are symmetric, so offsets end up close to uniform without the drift of
    a left-to-right greedy pass.
    """
    pos = np.arange(length)
    owner = np.arange(length)
    if F == 0:
        return pos - np.arange(length)
    js = rng.integers(length, size=sweeps * length)
    fs = rng.integers(-F, F + 1, size=sweeps * length)
    for j, f in zip(js, fs):
        c = j + f
        if c < 0 or c >= length or c == pos[j]:
            continue
        k = owner[c]
        if k < 0:
            owner[pos[j]] = -1
        elif abs(pos[j] - k) <= F:
            owner[pos[j]] = k
            pos[k] = pos[j]
        else:
            continue
        owner[c] = j
        pos[j] = c
    return pos - np.arange(length)


def _smooth_walk(rng, length, step):
    # Velocity follows a random walk, so the heading drifts smoothly.
    v = np.cumsum(rng.normal(0.0, step, size=(length, 2)), axis=0)
    return np.cumsum(v, axis=0)


def _ar1(rng, length, phi):
    e = rng.normal(0.0, np.sqrt(1 - phi ** 2), size=(length, 2))
    out = np.empty_like(e)
    out[0] = rng.normal(size=2)
    for t in range(1, length):
        out[t] = phi * out[t - 1] + e[t]
    return out


def gen_trajectories(groups: int, members: int, timesteps: int, lag_spread: int = 5,
                     fuzz_spread: int = 0, noise: float = 0.0, seed: int = 0,
                     separation: float = 10.0, smoothness: float = 0.0,
                     route_step: float = 0.05, offset: float = 5.0) -> Trajectories:
    """Groups of followers trailing a leader over a shared route.

    Every leader is one common smooth route plus its own AR(1) weave of
    scale ``separation`` and coefficient ``smoothness``, so the groups stay
    spatially interleaved.  Member ``r > 0`` of a group follows its leader
    ``lag`` steps late (``1 <= lag <= lag_spread``); each of its x and y
    readings is displaced in time by at most ``fuzz_spread`` steps, no two
    readings of one coordinate on the same step, and it carries a fixed offset of up to ``offset`` (the same on x and y) plus noise
    ``U(-noise, noise)``.
    """
    if groups * members < 2 or timesteps < 4:
        raise ValueError("need at least 2 objects and 4 time steps")
    if lag_spread < 1 or fuzz_spread < 0 or noise < 0:
        raise ValueError("lag_spread must be >= 1, fuzz_spread and noise >= 0")
    if not 0 <= smoothness < 1:
        raise ValueError("smoothness must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    pad = lag_spread + fuzz_spread + 1
    L = timesteps + 2 * pad
    route = _smooth_walk(rng, L, route_step)
    rows = groups * members
    x = np.empty((rows, timesteps))
    y = np.empty((rows, timesteps))
    labels = np.repeat(np.arange(groups), members)
    lags = np.zeros(rows, np.int64)
    cols = np.arange(L)
    for g in range(groups):
        lead = route + separation * _ar1(rng, L, smoothness)
        for r in range(members):
            obj = g * members + r
            if r == 0:
                x[obj], y[obj] = lead[pad:pad + timesteps, 0], lead[pad:pad + timesteps, 1]
                continue
            lag = int(rng.integers(1, lag_spread + 1))
            lags[obj] = lag
            # Cell c of the padded follower row holds leader time src[c, d];
            # x and y readings are jittered independently.
            src = np.empty((L, 2), np.int64)
            for d in range(2):
                src[cols + _band_shuffle(rng, L, fuzz_spread), d] = cols
            src = np.clip(src - lag, 0, L - 1)
            # One offset for both coordinates, so a single row constant fits
            # the interleaved encoding.
            shift = rng.uniform(-offset, offset)
            path = lead[src, [0, 1]] + shift + rng.uniform(-noise, noise, size=(L, 2))
            x[obj], y[obj] = path[pad:pad + timesteps, 0], path[pad:pad + timesteps, 1]
    return Trajectories(x, y, labels, lags)


def gen_trajectory_groups(groups: int, members: int, timesteps: int, lag_spread: int = 5,
                          fuzz_spread: int = 0, noise: float = 0.0, seed: int = 0,
                          encoding: str = "interleaved", **kw):
    """Trajectory groups as a matrix (one row per object) and the group labels.

    ``fuzz_spread`` counts matrix columns.  Interleaved, one time step spans
    two columns, so readings move by at most ``fuzz_spread // 2`` steps.
    """
    steps = fuzz_spread // 2 if encoding == "interleaved" else fuzz_spread
    tr = gen_trajectories(groups, members, timesteps, lag_spread, steps, noise, seed, **kw)
    return tr.to_matrix(encoding), tr.labels
