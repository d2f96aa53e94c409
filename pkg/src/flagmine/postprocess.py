"""Column selection for fuzzy clusters and merging of overlapping clusters.

The reads of one cluster column across the cluster rows form a monotone
path through the matrix, a *bridge*.  Two bridges intersect when their
paths cross or touch at some row.  A set of pairwise non-intersecting
bridges is a set of columns that can be used together without two columns
claiming the same cell or swapping order.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import RowSetMismatch
from .matrix import DataMatrix, FuzzyLaggedCluster

GREEDY_ABOVE = 5000


@dataclass(frozen=True)
class Bridge:
    """Positions of cluster column ``col`` on each cluster row (``None`` = absent)."""

    col: int
    rows: tuple
    path: tuple

    def __post_init__(self):
        if len(self.rows) != len(self.path):
            raise ValueError("one position per row is required")


def bridges(cluster: FuzzyLaggedCluster, matrix: DataMatrix | None = None) -> list:
    """One bridge per cluster column.

    With ``matrix`` given, positions outside the matrix or on missing cells
    are marked absent.
    """
    pos = cluster.positions()
    absent = np.zeros(pos.shape, bool)
    if matrix is not None:
        n = matrix.shape[1]
        absent = (pos < 0) | (pos >= n)
        rows = np.asarray(cluster.rows)[:, None]
        inside = ~absent
        absent[inside] = np.isnan(matrix.values[np.broadcast_to(rows, pos.shape)[inside], pos[inside]])
    out = []
    for q, j in enumerate(cluster.cols):
        path = tuple(None if absent[r, q] else int(pos[r, q]) for r in range(len(cluster.rows)))
        out.append(Bridge(j, cluster.rows, path))
    return out


def bridges_intersect(b1: Bridge, b2: Bridge) -> bool:
    """True when the two paths cross or touch on the rows where both exist."""
    if b1.rows != b2.rows:
        raise RowSetMismatch("bridges are defined over different rows")
    signs = set()
    for x, y in zip(b1.path, b2.path):
        if x is None or y is None:
            continue
        if x == y:
            return True
        signs.add(x < y)
    return len(signs) > 1


def _paths(brs) -> np.ndarray:
    return np.array([[np.nan if x is None else x for x in b.path] for b in brs], dtype=float).reshape(len(brs), -1)


def _left_of(P: np.ndarray) -> np.ndarray:
    """``L[a, b]``: bridge ``a`` lies strictly left of ``b`` on every shared row."""
    with np.errstate(invalid="ignore"):
        d = P[:, None, :] - P[None, :, :]
    both = ~np.isnan(d)
    lt = np.where(both, d < 0, True).all(axis=2)
    shared = both.any(axis=2)
    # Bridges with no shared row never meet.
    L = lt & shared
    return L | (~shared & (np.arange(len(P))[:, None] < np.arange(len(P))[None, :]))


def _longest_chain(L: np.ndarray, order: np.ndarray, allowed: np.ndarray) -> int:
    dp = np.zeros(len(L), np.int64)
    for v in order:
        if not allowed[v]:
            continue
        prev = allowed & L[:, v]
        dp[v] = 1 + (dp[prev].max() if prev.any() else 0)
    return int(dp.max()) if allowed.any() else 0


def _chain_select(L: np.ndarray) -> list:
    """Lexicographically smallest maximum chain of a strict partial order."""
    k = len(L)
    order = np.argsort(L.sum(axis=0), kind="stable")  # fewer predecessors first
    allowed = np.ones(k, bool)
    best = _longest_chain(L, order, allowed)
    chosen = []
    compat = L | L.T
    for v in range(k):
        if not allowed[v]:
            continue
        pool = allowed & compat[v]
        if 1 + len(chosen) + _longest_chain(L, order, pool) == best:
            chosen.append(v)
            allowed = pool
    return chosen


def _bits(compat: np.ndarray) -> list:
    return [sum(1 << int(u) for u in np.flatnonzero(row)) for row in compat]


def _clique_size(adj: list, cand: int, need: int = 0) -> int:
    """Maximum clique size inside ``cand``, stopping once ``need`` is reached.

    Branch and bound with a greedy colouring bound: vertices of one colour
    class are pairwise non-adjacent, so a clique takes at most one of each.
    """
    best = 0

    def expand(size, P):
        nonlocal best
        order, colour = [], []
        rest, c = P, 0
        while rest:
            c += 1
            Q = rest
            while Q:
                v = (Q & -Q).bit_length() - 1
                Q &= ~(1 << v) & ~adj[v]
                rest &= ~(1 << v)
                order.append(v)
                colour.append(c)
        for v, c in zip(reversed(order), reversed(colour)):
            if size + c <= best or (need and best >= need):
                return
            sub = P & adj[v]
            if sub:
                expand(size + 1, sub)
            elif size + 1 > best:
                best = size + 1
            P &= ~(1 << v)

    if cand:
        expand(0, cand)
    return best


def _exact_independent(compat: np.ndarray) -> list:
    """Lexicographically smallest maximum clique of the compatibility graph.

    Columns are fixed in index order whenever the remaining pool still
    admits a clique of the maximum size.
    """
    k = len(compat)
    adj = _bits(compat)
    pool = (1 << k) - 1
    best = _clique_size(adj, pool)
    chosen: list = []
    for v in range(k):
        if not pool >> v & 1:
            continue
        need = best - len(chosen) - 1
        sub = pool & adj[v]
        if need == 0 or _clique_size(adj, sub, need) >= need:
            chosen.append(v)
            pool = sub
            if len(chosen) == best:
                break
    return chosen


def _greedy(P: np.ndarray, compat: np.ndarray) -> list:
    key = np.nanmean(P, axis=1) if P.size else np.zeros(len(P))
    chosen: list = []
    for v in np.argsort(key, kind="stable"):
        if all(compat[v, u] for u in chosen):
            chosen.append(int(v))
    return sorted(chosen)


def max_nonintersecting_columns(cluster: FuzzyLaggedCluster | Sequence[Bridge],
                                matrix: DataMatrix | None = None) -> tuple:
    """Largest set of cluster columns whose bridges pairwise do not intersect.

    Ties go to the lexicographically smallest column set.  When no bridge
    has an absent position, non-intersection is "strictly left on every
    row", a partial order, and the answer is a longest chain.  Otherwise
    an exact branch-and-bound clique search is used.  Above 5000 columns a greedy
    left-to-right pass is returned with a warning.
    """
    brs = bridges(cluster, matrix) if isinstance(cluster, FuzzyLaggedCluster) else list(cluster)
    if not brs:
        return ()
    for b in brs[1:]:
        if b.rows != brs[0].rows:
            raise RowSetMismatch("bridges are defined over different rows")
    brs = sorted(brs, key=lambda b: b.col)
    cols = [b.col for b in brs]
    P = _paths(brs)
    L = _left_of(P)
    compat = L | L.T
    if len(brs) > GREEDY_ABOVE:
        warnings.warn(f"{len(brs)} columns: using greedy selection, result may not be maximum")
        pick = _greedy(P, compat)
    elif not np.isnan(P).any():
        pick = _chain_select(L)
    else:
        pick = _exact_independent(compat)
    return tuple(cols[v] for v in sorted(pick))


def greedy_nonintersecting_columns(cluster, matrix=None) -> tuple:
    """Left-to-right selection by mean position; a lower bound on the maximum."""
    brs = bridges(cluster, matrix) if isinstance(cluster, FuzzyLaggedCluster) else list(cluster)
    brs = sorted(brs, key=lambda b: b.col)
    P = _paths(brs)
    L = _left_of(P)
    return tuple(brs[v].col for v in _greedy(P, L | L.T))


def brute_force_nonintersecting(brs: Sequence[Bridge]) -> tuple:
    """Exhaustive search, for checking small instances."""
    brs = sorted(brs, key=lambda b: b.col)
    for size in range(len(brs), 0, -1):
        for combo in itertools.combinations(brs, size):
            if not any(bridges_intersect(a, b) for a, b in itertools.combinations(combo, 2)):
                return tuple(b.col for b in combo)
    return ()


def restrict_columns(cluster: FuzzyLaggedCluster, cols: Iterable[int]) -> FuzzyLaggedCluster:
    keep = set(cols)
    return FuzzyLaggedCluster(
        rows=cluster.rows, lags=cluster.lags, cols=[j for j in cluster.cols if j in keep],
        fuzz={k: f for k, f in cluster.fuzz.items() if k[1] in keep}, max_fuzz=cluster.max_fuzz,
        achieved_error=cluster.achieved_error, anti_rows=cluster.anti_rows, anchor=cluster.anchor,
    )


@dataclass(frozen=True)
class MergedGroup:
    rows: frozenset
    members: tuple   # indices into the input list


def _row_set(c) -> frozenset:
    return frozenset(int(r) for r in (c.rows if hasattr(c, "rows") else c))


def merge_clusters(clusters: Sequence) -> list:
    """Union clusters that share a row, transitively.

    Accepts clusters, merged groups or plain row collections.  Groups are
    returned ordered by their smallest row.
    """
    sets = [_row_set(c) for c in clusters]
    parent = list(range(len(sets)))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    owner = {}
    for k, s in enumerate(sets):
        for r in s:
            if r in owner:
                a, b = find(owner[r]), find(k)
                if a != b:
                    parent[max(a, b)] = min(a, b)
            else:
                owner[r] = k
    groups: dict = {}
    for k in range(len(sets)):
        groups.setdefault(find(k), []).append(k)
    out = [MergedGroup(frozenset().union(*(sets[k] for k in ks)), tuple(ks)) for ks in groups.values()]
    return sorted(out, key=lambda g: (min(g.rows) if g.rows else -1, g.members))
