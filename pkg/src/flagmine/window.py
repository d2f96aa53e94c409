"""Sorted-event sliding-window tests, the direct formulation of both phases.

Every candidate read becomes a :class:`WindowEvent`; the events are sorted
once and a window of fixed width is swept across them with two pointers,
anchored at each event value.  A key (a lag in the row phase, the single
column in the column phase) is feasible once the window holds an event
from every non-empty group under that key.

These routines are slower than the compiled per-lag kernels in
:mod:`flagmine._kernels` and serve as their reference.
"""
from __future__ import annotations

import math
from collections import defaultdict
from typing import NamedTuple

import numpy as np


class WindowEvent(NamedTuple):
    value: float
    key: int      # lag t (row phase) or 0 (column phase)
    group: int    # index into S (row phase) or cluster row (column phase)
    fuzz: int


def min_present(fraction: float, count: int) -> int:
    """Groups that must carry events: ``ceil(fraction * count)``, at least 1."""
    return max(1, math.ceil(fraction * count - 1e-12))


def sweep(events, width: float, need: int) -> set:
    """Keys whose non-empty groups all fit in one window of ``width``.

    A key qualifies only if it has at least ``need`` non-empty groups.
    """
    groups_of = defaultdict(set)
    for e in events:
        groups_of[e.key].add(e.group)
    events = sorted(events, key=lambda e: e.value)
    counts = defaultdict(int)
    covered = defaultdict(int)
    feasible = set()

    def add(e):
        counts[e.key, e.group] += 1
        if counts[e.key, e.group] == 1:
            covered[e.key] += 1
            total = len(groups_of[e.key])
            if covered[e.key] == total and total >= need:
                feasible.add(e.key)

    def drop(e):
        counts[e.key, e.group] -= 1
        if counts[e.key, e.group] == 0:
            covered[e.key] -= 1

    hi = 0
    for lo, e in enumerate(events):
        while hi < len(events) and events[hi].value <= e.value + width:
            add(events[hi])
            hi += 1
        drop(e)
    return feasible


def row_events(A, i, p, S, zero, F, sign=1.0, max_lag=None):
    """Row-phase events of row ``i`` against anchor ``p``.

    Each present read ``A[i, pos]`` yields, for every anchor column ``s``
    and offset ``f``, the event ``sign * A[i, pos] - A[p, s]`` under lag
    ``pos - s - f``.
    """
    n = A.shape[1]
    limit = n if max_lag is None else max_lag
    out = []
    for g, s in enumerate(S):
        a = A[p, s]
        if np.isnan(a):
            continue
        Fs = 0 if zero[g] else F
        for pos in range(n):
            v = A[i, pos]
            if np.isnan(v):
                continue
            for f in range(-Fs, Fs + 1):
                t = pos - s - f
                if abs(t) <= limit:
                    out.append(WindowEvent(sign * v - a, t, g, f))
    assert len(out) <= n * len(S) * (2 * F + 1)
    return out


def _reachable(pos_lo, pos_hi, n):
    return pos_hi >= 0 and pos_lo < n


def row_lags(A, i, p, S, zero, F, width, nu=0.5, sign=1.0, max_lag=None) -> list:
    """Feasible lags of row ``i``, in preference order (small ``|t|``, negative first).

    A lag that sends every read of some anchor column outside the matrix is
    infeasible whatever the window says.
    """
    n = A.shape[1]
    ev = row_events(A, i, p, S, zero, F, sign, max_lag)
    ok = sweep(ev, width, min_present(nu, len(S)))
    spans = [(s, 0 if zero[g] else F) for g, s in enumerate(S) if not np.isnan(A[p, s])]
    ok = [t for t in ok if all(_reachable(s + t - f, s + t + f, n) for s, f in spans)]
    return sorted(ok, key=lambda t: (abs(t), t))


def column_events(A, j, rows, lags, refs, signs, F, zero_col=False):
    n = A.shape[1]
    out = []
    for g, (i, t, ref, sg) in enumerate(zip(rows, lags, refs, signs)):
        if np.isnan(ref):
            continue
        Fi = 0 if zero_col else F[g]
        for f in range(-Fi, Fi + 1):
            pos = j + t + f
            if 0 <= pos < n and not np.isnan(A[i, pos]):
                out.append(WindowEvent(sg * (A[i, pos] - ref), 0, g, f))
    assert len(out) <= len(rows) * (2 * max(F, default=0) + 1)
    return out


def column_fits(A, j, rows, lags, refs, signs, F, width, nu=0.5, zero_col=False) -> bool:
    n = A.shape[1]
    for t, ref, Fi in zip(lags, refs, F):
        f = 0 if zero_col else Fi
        if not np.isnan(ref) and not _reachable(j + t - f, j + t + f, n):
            return False
    ev = column_events(A, j, rows, lags, refs, signs, F, zero_col)
    return 0 in sweep(ev, width, min_present(nu, len(rows)))
