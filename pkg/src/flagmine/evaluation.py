"""Cluster quality metrics, planted-cluster recovery and a DBSCAN baseline."""
from __future__ import annotations

import math
from collections import Counter, deque
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching
from scipy.spatial.distance import cdist

from .errors import BothEmpty
from .matrix import FuzzyLaggedCluster

NOISE = -1


def cell_set(cluster: FuzzyLaggedCluster, n: int | None = None) -> frozenset:
    """Matrix cells ``(i, j + T_i + f_ij)`` covered by a cluster.

    With ``n`` given, cells outside the matrix are dropped.
    """
    pos = cluster.positions()
    out = set()
    for r, i in enumerate(cluster.rows):
        for c in pos[r]:
            if n is None or 0 <= c < n:
                out.add((i, int(c)))
    return frozenset(out)


def cells_of(clusters: Iterable, n: int | None = None) -> frozenset:
    out: set = set()
    for c in clusters:
        out |= cell_set(c, n) if isinstance(c, FuzzyLaggedCluster) else set(c)
    return frozenset(out)


def rnia_complement(c1, c2) -> float:
    """``|c1 & c2| / |c1 | c2|`` over cell sets."""
    c1, c2 = set(c1), set(c2)
    union = c1 | c2
    if not union:
        raise BothEmpty("both cell sets are empty")
    return len(c1 & c2) / len(union)


def f1_score(predicted: Iterable, truth: Iterable) -> float:
    """Row-membership F1; each row counts once however often it is predicted."""
    p, t = set(predicted), set(truth)
    tp = len(p & t)
    denom = 2 * tp + len(p - t) + len(t - p)
    return 2 * tp / denom if denom else 0.0


def clustering_f1(groups: Sequence, labels: Sequence) -> float:
    """Class-size weighted best-match F1 of a clustering against a labelling.

    ``groups`` is a list of row collections.  Each true class is scored by
    the group that matches it best; unassigned rows count as misses.  One
    group holding two equal classes scores 2/3 on each.
    """
    labels = np.asarray(labels)
    total = len(labels)
    score = 0.0
    for k in np.unique(labels):
        members = set(np.flatnonzero(labels == k).tolist())
        best = max((f1_score(g, members) for g in groups), default=0.0)
        score += len(members) / total * best
    return score


def labels_to_groups(assign: Sequence[int]) -> list:
    """Group row indices by cluster id, dropping noise (-1)."""
    out: dict = {}
    for i, a in enumerate(assign):
        if a != NOISE:
            out.setdefault(int(a), []).append(i)
    return [out[k] for k in sorted(out)]


def normalized_entropy(groups: Sequence, labels: Sequence, k: int | None = None) -> float:
    """Size-weighted mean class entropy of the groups, divided by ``ln k``."""
    labels = np.asarray(labels)
    k = len(np.unique(labels)) if k is None else k
    if k < 2:
        raise ValueError("entropy needs at least two classes")
    total = sum(len(g) for g in groups)
    if total == 0:
        return 0.0
    h = 0.0
    for g in groups:
        counts = np.array(list(Counter(labels[list(g)].tolist()).values()), dtype=float)
        p = counts / counts.sum()
        h += len(g) / total * float(-(p * np.log(p)).sum())
    return h / math.log(k)


def coverage(groups: Sequence, truth_members: Iterable) -> float:
    """Fraction of the truth members that appear in some group."""
    t = set(truth_members)
    if not t:
        return 0.0
    seen = set().union(*(set(g) for g in groups)) if groups else set()
    return len(t & seen) / len(t)


@dataclass(frozen=True)
class DbscanConfig:
    eps: float
    min_pts: int

    def __post_init__(self):
        if not self.eps >= 0:
            raise ValueError("eps must be non-negative")
        if self.min_pts < 1:
            raise ValueError("min_pts must be at least 1")


def dbscan(points, cfg: DbscanConfig) -> np.ndarray:
    """Density clustering with L2 distance; returns cluster ids, -1 for noise.

    Points are visited in input order.  A border point reachable from
    several clusters joins the first one that reaches it.
    """
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if not np.isfinite(X).all():
        raise ValueError("points must be finite")
    n = len(X)
    D = cdist(X, X)
    nbrs = [np.flatnonzero(D[i] <= cfg.eps) for i in range(n)]
    core = np.array([len(nb) >= cfg.min_pts for nb in nbrs], dtype=bool)
    out = np.full(n, NOISE, np.int64)
    cid = 0
    for i in range(n):
        if out[i] != NOISE or not core[i]:
            continue
        out[i] = cid
        queue = deque([i])
        while queue:
            q = queue.popleft()
            if not core[q]:
                continue
            for u in nbrs[q]:
                if out[u] == NOISE:
                    out[u] = cid
                    queue.append(u)
        cid += 1
    return out


def recovers_planted(found: FuzzyLaggedCluster, truth: FuzzyLaggedCluster, max_ratio: float = 2.0) -> bool:
    """Planted rows and lags recovered exactly, every planted column matched.

    Rows must agree and the lag difference must be one constant ``d``.
    Planted column ``j`` matches a mined column ``j + d + k`` for any shift
    ``k`` that keeps all of that column's fuzz within the planted bound;
    for ``F = 0`` this is plain containment.  Matching is one-to-one and
    the mined column count may not exceed ``max_ratio`` times the planted
    count.
    """
    if sorted(found.rows) != sorted(truth.rows):
        return False
    if len(found.cols) > max_ratio * len(truth.cols):
        return False
    d = {truth.lag_of(i) - found.lag_of(i) for i in truth.rows}
    if len(d) != 1:
        return False
    delta = d.pop()
    idx = {j: q for q, j in enumerate(found.cols)}
    F = truth.max_fuzz
    G = np.zeros((len(truth.cols), len(found.cols)))
    for a, j in enumerate(truth.cols):
        f = [truth.fuzz_of(i, j) for i in truth.rows]
        for k in range(-2 * F, 2 * F + 1):
            if max(abs(x - k) for x in f) <= F and j + k + delta in idx:
                G[a, idx[j + k + delta]] = 1
    match = maximum_bipartite_matching(csr_matrix(G), perm_type="column")
    return bool((match >= 0).all())


@dataclass
class EvalReport:
    rnia_complement: float | None = None
    f1: float | None = None
    entropy: float | None = None
    coverage: float | None = None
    groups: int | None = None
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return asdict(self)
