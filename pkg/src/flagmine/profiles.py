"""Chebyshev (max-residual) fits of the additive model ``B[i, j] ~ R[i] + C[j]``.

Three routes to the same quantity:

* :func:`two_row_error` solves the two-row case exactly from sorted row
  differences;
* :func:`fit_profiles` handles any shape by alternating mid-range updates
  of the row and column profiles;
* :func:`brute_force_error` grid-searches the profile offsets and is only
  meant as a test oracle on tiny inputs.

Missing entries are NaN and are excluded from every max/min.
"""
from __future__ import annotations

import itertools
from typing import NamedTuple

import numpy as np

from .errors import EmptyRowOrColumn, TooFewColumns, TooLarge


class ProfilePair(NamedTuple):
    R: np.ndarray
    C: np.ndarray
    w_star: float


class TwoRowFit(NamedTuple):
    w: float
    h: float
    split: int
    R: tuple
    C: np.ndarray


def max_residual(B, R, C) -> float:
    resid = np.abs(np.asarray(R, float)[:, None] + np.asarray(C, float)[None, :] - B)
    return float(np.nanmax(resid))


def two_row_error(row_a, row_b, missing=None) -> TwoRowFit:
    """Exact minimal max-residual of a ``2 x k`` submatrix.

    With ``d_j = a_j - b_j`` over the jointly present columns the optimum is
    ``(max d - min d) / 4``, reached by ``R = (0, -h)`` where ``h`` is the
    mid-range of ``d`` and ``C_j = a_j - (d_j - h) / 2``.  ``split`` is the
    number of sorted differences not above ``h`` (the smallest valid split
    when several differences tie at ``h``).
    """
    a = np.asarray(row_a, dtype=float)
    b = np.asarray(row_b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("rows must be 1-d and of equal length")
    joint = ~(np.isnan(a) | np.isnan(b))
    if missing is not None:
        miss = np.asarray(missing, dtype=bool)
        if miss.ndim == 1:
            miss = np.vstack([miss, miss])
        joint &= ~(miss[0] | miss[1])
        a = np.where(miss[0], np.nan, a)
        b = np.where(miss[1], np.nan, b)
    if joint.sum() < 2:
        raise TooFewColumns("need at least two columns present in both rows")
    d = a[joint] - b[joint]
    d_sorted = np.sort(d, kind="stable")
    lo, hi = d_sorted[0], d_sorted[-1]
    w = (hi - lo) / 4.0
    h = (hi + lo) / 2.0
    split = max(1, int(np.searchsorted(d_sorted, h, side="left")))
    C = np.full(a.shape, np.nan)
    C[joint] = a[joint] - (d - h) / 2.0
    only_a = ~np.isnan(a) & np.isnan(b)
    only_b = np.isnan(a) & ~np.isnan(b)
    C[only_a] = a[only_a]
    C[only_b] = b[only_b] + h
    return TwoRowFit(float(w), float(h) + 0.0, split, (0.0, -float(h) + 0.0), C)


def _midrange(X, axis):
    return 0.5 * (np.nanmax(X, axis=axis) + np.nanmin(X, axis=axis))


def fit_profiles(B, tol: float = 1e-9, max_iter: int = 500, init_cols=None, history: list | None = None) -> ProfilePair:
    """Alternating Chebyshev fit of ``B ~ R[:, None] + C[None, :]``.

    Each sweep sets every ``R[i]`` to the mid-range of ``B[i] - C`` and then
    every ``C[j]`` to the mid-range of ``B[:, j] - R``; neither step can
    increase the max residual.  Iteration stops once a sweep improves the
    error by less than ``tol`` or after ``max_iter`` sweeps.  ``init_cols``
    seeds the column profile (defaults to zeros).  Pass a list as
    ``history`` to collect the error after every sweep.
    """
    B = np.asarray(B, dtype=float)
    if B.ndim != 2:
        raise ValueError("B must be 2-d")
    present = ~np.isnan(B)
    if not present.any(axis=1).all() or not present.any(axis=0).all():
        raise EmptyRowOrColumn("every row and column needs at least one present entry")
    C = np.zeros(B.shape[1]) if init_cols is None else np.array(init_cols, dtype=float)
    R = _midrange(B - C[None, :], axis=1)
    err = max_residual(B, R, C)
    if history is not None:
        history.append(err)
    for _ in range(max_iter):
        C = _midrange(B - R[:, None], axis=0)
        R = _midrange(B - C[None, :], axis=1)
        new_err = max_residual(B, R, C)
        if history is not None:
            history.append(new_err)
        improved = err - new_err
        err = min(err, new_err)
        if improved < tol:
            break
    return ProfilePair(R, C, err)


def brute_force_error(B, grid_step: float = 1e-3) -> float:
    """Grid search over row offsets ``R[1:]`` (``R[0] = 0``) for tiny ``B``.

    For fixed ``R`` the best column profile is the column-wise mid-range,
    so only the row offsets are gridded.  The result exceeds the true
    optimum by at most ``grid_step``.
    """
    B = np.asarray(B, dtype=float)
    if B.ndim != 2:
        raise ValueError("B must be 2-d")
    m, k = B.shape
    if m > 4 or (m > 2 and k > 6):
        raise TooLarge(f"brute force is limited to 2 rows or to 4x6, got {m}x{k}")
    if m == 1:
        return 0.0
    if np.isnan(B).all(axis=0).any() or np.isnan(B).all(axis=1).any():
        raise EmptyRowOrColumn("every row and column needs at least one present entry")
    # Offsets of row i relative to row 0 are bounded by the spread of B.
    spread = float(np.nanmax(B) - np.nanmin(B))
    axis = np.arange(-spread - grid_step, spread + 2 * grid_step, grid_step)
    best = np.inf
    if m == 2:
        shifted = B[1][None, :] - axis[:, None]
        gap = np.abs(B[0][None, :] - shifted)
        return float(np.min(np.nanmax(gap, axis=1)) / 2.0)
    if m == 3:
        for r2 in axis:
            rest = B[2][None, :] - axis[:, None]
            first = np.broadcast_to(B[0] , rest.shape)
            second = np.broadcast_to(B[1] - r2, rest.shape)
            stack = np.stack([first, second, rest])
            gap = np.nanmax(stack, axis=0) - np.nanmin(stack, axis=0)
            best = min(best, float(np.min(np.nanmax(gap, axis=1))) / 2.0)
        return best
    # Four rows: the objective is convex in the offsets, so refine a coarse
    # grid around its best point instead of enumerating the fine grid.
    centre = np.zeros(m - 1)
    step = max(grid_step, spread / 40.0)
    half = spread + step
    while True:
        ax = np.arange(-half, half + step / 2, step)
        for offs in itertools.product(*[c + ax for c in centre]):
            R = np.concatenate([[0.0], offs])
            shifted = B - R[:, None]
            err = float(np.nanmax(0.5 * (np.nanmax(shifted, axis=0) - np.nanmin(shifted, axis=0))))
            if err < best:
                best, best_offs = err, np.array(offs)
        if step <= grid_step:
            return best
        centre = best_offs
        half = 2 * step
        step = max(grid_step, step / 8.0)
