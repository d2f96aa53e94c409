"""Matrices, clusters and cluster verification.

Lag convention used everywhere in the package: for a cluster row ``i`` with
lag ``T[i]`` and per-entry fuzz ``f[i, j]``, cluster column ``j`` is read from
matrix column ``j + T[i] + f[i, j]``.  Column indices of a cluster are
expressed in the anchor row's coordinates (the anchor has lag 0 and no fuzz).
Indices are 0-based in the library; the file formats in :mod:`flagmine.io`
shift them to 1-based.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .errors import (
    EmptyAlignment,
    IndexOutOfRange,
    InvalidPsi,
    NonPositiveEntry,
)
from .profiles import ProfilePair, fit_profiles

MULTIPLICATIVE = "multiplicative"
ADDITIVE = "additive"


class DataMatrix:
    """An ``m x n`` real matrix with a missing-value mask.

    Missing entries are stored as NaN in :attr:`values`; the array is
    read-only so one instance can be shared between workers.
    """

    def __init__(self, values, missing=None, domain=ADDITIVE, col_names=None):
        arr = np.array(values, dtype=float, copy=True)
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-d array, got shape {arr.shape}")
        if missing is not None:
            mask = np.asarray(missing, dtype=bool)
            if mask.shape != arr.shape:
                raise ValueError("missing mask shape does not match values")
            arr[mask] = np.nan
        arr[~np.isfinite(arr)] = np.nan
        m, n = arr.shape
        if m < 2 or n < 2:
            raise ValueError(f"matrix must be at least 2x2, got {m}x{n}")
        if domain not in (MULTIPLICATIVE, ADDITIVE):
            raise ValueError(f"unknown domain {domain!r}")
        if domain == MULTIPLICATIVE:
            bad = np.argwhere(arr <= 0)
            if len(bad):
                i, j = bad[0]
                raise NonPositiveEntry(int(i), int(j), float(arr[i, j]))
        arr.setflags(write=False)
        self._values = arr
        self.domain = domain
        self.col_names = list(col_names) if col_names is not None else None

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def missing(self) -> np.ndarray:
        return np.isnan(self._values)

    @property
    def shape(self):
        return self._values.shape

    @property
    def m(self) -> int:
        return self._values.shape[0]

    @property
    def n(self) -> int:
        return self._values.shape[1]

    def __repr__(self):
        return f"DataMatrix({self.m}x{self.n}, domain={self.domain!r}, missing={int(self.missing.sum())})"

    def __eq__(self, other):
        if not isinstance(other, DataMatrix):
            return NotImplemented
        return self.domain == other.domain and np.array_equal(self._values, other._values, equal_nan=True)

    __hash__ = None


def log_transform(matrix: DataMatrix) -> DataMatrix:
    """Natural log of every non-missing entry; the result is additive."""
    if matrix.domain != MULTIPLICATIVE:
        raise ValueError("log_transform expects a multiplicative matrix")
    vals = matrix.values
    bad = np.argwhere(vals <= 0)
    if len(bad):
        i, j = bad[0]
        raise NonPositiveEntry(int(i), int(j), float(vals[i, j]))
    with np.errstate(invalid="ignore"):
        logged = np.log(vals)
    return DataMatrix(logged, domain=ADDITIVE, col_names=matrix.col_names)


def objective_score(size_i: int, size_j: int, kind: str = "area", psi: float | None = None) -> float:
    """Monotone cluster objective: ``area``, ``perimeter`` or ``psi``.

    ``psi`` scores ``|I| / psi**|J|`` and requires ``0 < psi < 1``.
    """
    if size_i < 2 or size_j < 2:
        raise ValueError("cluster must have at least 2 rows and 2 columns")
    if kind == "area":
        return float(size_i * size_j)
    if kind == "perimeter":
        return float(size_i + size_j)
    if kind == "psi":
        if psi is None or not 0.0 < psi < 1.0:
            raise InvalidPsi(f"psi must lie in (0, 1), got {psi!r}")
        return size_i / psi ** size_j
    raise ValueError(f"unknown objective {kind!r}")


@dataclass(frozen=True)
class FuzzyLaggedCluster:
    """A mined or planted fuzzy lagged co-cluster.

    ``fuzz`` maps ``(row, col)`` to a non-zero integer offset; absent pairs
    have zero fuzz.  ``anti_rows`` lists rows that follow the
    anti-correlated model ``A ~ R - C``.
    """

    rows: tuple
    lags: tuple
    cols: tuple
    fuzz: Mapping = field(default_factory=dict)
    max_fuzz: int = 0
    achieved_error: float = 0.0
    anti_rows: frozenset = frozenset()
    anchor: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(int(r) for r in self.rows))
        object.__setattr__(self, "lags", tuple(int(t) for t in self.lags))
        object.__setattr__(self, "cols", tuple(int(c) for c in self.cols))
        object.__setattr__(self, "fuzz", {(int(i), int(j)): int(f) for (i, j), f in dict(self.fuzz).items() if f != 0})
        object.__setattr__(self, "anti_rows", frozenset(int(r) for r in self.anti_rows))
        if len(self.rows) != len(self.lags):
            raise ValueError("rows and lags must have equal length")
        if len(set(self.rows)) != len(self.rows) or len(set(self.cols)) != len(self.cols):
            raise ValueError("duplicate row or column index")
        for (i, j), f in self.fuzz.items():
            if abs(f) > self.max_fuzz:
                raise ValueError(f"fuzz {f} at ({i}, {j}) exceeds max_fuzz {self.max_fuzz}")
        if self.anchor is not None:
            if self.anchor not in self.rows:
                raise ValueError("anchor must be one of the cluster rows")
            if self.lag_of(self.anchor) != 0:
                raise ValueError("anchor row must have lag 0")

    def lag_of(self, row: int) -> int:
        return self.lags[self.rows.index(row)]

    def fuzz_of(self, row: int, col: int) -> int:
        return self.fuzz.get((row, col), 0)

    def position(self, row: int, col: int) -> int:
        """Matrix column holding cluster entry ``(row, col)``."""
        return col + self.lag_of(row) + self.fuzz_of(row, col)

    def positions(self) -> np.ndarray:
        """``|I| x |J|`` array of aligned matrix columns."""
        lags = np.asarray(self.lags)[:, None]
        pos = np.asarray(self.cols)[None, :] + lags
        for (i, j), f in self.fuzz.items():
            pos[self.rows.index(i), self.cols.index(j)] += f
        return pos

    @property
    def shape(self):
        return len(self.rows), len(self.cols)

    def canonical_key(self):
        """Identity up to the choice of anchor: lags rebased so the smallest is 0."""
        shift = min(self.lags) if self.lags else 0
        order = np.argsort(self.rows)
        rows = tuple(self.rows[k] for k in order)
        lags = tuple(self.lags[k] - shift for k in order)
        cols = tuple(sorted(c + shift for c in self.cols))
        return rows, lags, cols


class Verification(NamedTuple):
    valid: bool
    achieved_error: float
    profiles: ProfilePair | None
    aligned: np.ndarray


def aligned_submatrix(matrix: DataMatrix, cluster: FuzzyLaggedCluster) -> np.ndarray:
    """``B[i, j] = A[row_i, col_j + T_i + F_ij]``; NaN when out of range or missing.

    Anti-correlated rows are negated so that one additive fit covers them.
    """
    m, n = matrix.shape
    for r in cluster.rows:
        if not 0 <= r < m:
            raise IndexOutOfRange(f"row {r} outside [0, {m})")
    for c in cluster.cols:
        if not -n <= c < 2 * n:
            raise IndexOutOfRange(f"column {c} outside the lag-reachable range")
    pos = cluster.positions()
    valid = (pos >= 0) & (pos < n)
    rows = np.asarray(cluster.rows)[:, None]
    out = np.full(pos.shape, np.nan)
    out[valid] = matrix.values[np.broadcast_to(rows, pos.shape)[valid], pos[valid]]
    for k, r in enumerate(cluster.rows):
        if r in cluster.anti_rows:
            out[k] = -out[k]
    return out


def verify_cluster(
    matrix: DataMatrix,
    cluster: FuzzyLaggedCluster,
    w: float,
    profiles: ProfilePair | None = None,
    tol: float = 1e-9,
) -> Verification:
    """Check that ``cluster`` fits the additive model within error ``w``.

    When ``profiles`` is given the residuals are evaluated against it
    directly instead of fitting; for anti rows the residual is
    ``R_i - C_j - A_ij``.  Rows or columns whose aligned entries are all
    missing impose no constraint and are skipped.
    """
    B = aligned_submatrix(matrix, cluster)
    present = ~np.isnan(B)
    if not present.any():
        raise EmptyAlignment("every aligned entry of the cluster is missing")
    if profiles is not None:
        R = np.asarray(profiles.R, dtype=float)
        C = np.asarray(profiles.C, dtype=float)
        sign = np.array([-1.0 if r in cluster.anti_rows else 1.0 for r in cluster.rows])
        # B already holds -A on anti rows, so -(R_i - C_j - A_ij) = (-R_i) + C_j - B_ij.
        resid = np.abs(sign[:, None] * R[:, None] + C[None, :] - B)
        err = float(np.nanmax(resid))
        return Verification(err <= w + tol, err, profiles, B)
    keep_r = present.any(axis=1)
    keep_c = present.any(axis=0)
    fit = fit_profiles(B[np.ix_(keep_r, keep_c)])
    R = np.full(B.shape[0], np.nan)
    C = np.full(B.shape[1], np.nan)
    R[keep_r] = fit.R
    C[keep_c] = fit.C
    for k, r in enumerate(cluster.rows):
        if r in cluster.anti_rows:
            R[k] = -R[k]
    pp = ProfilePair(R, C, fit.w_star)
    return Verification(fit.w_star <= w + tol, fit.w_star, pp, B)


def plain_cocluster_error(matrix: DataMatrix, rows: Sequence[int], cols: Sequence[int]) -> float:
    """Error of the un-lagged, non-fuzzy submatrix ``A[rows][:, cols]``."""
    B = matrix.values[np.ix_(list(rows), list(cols))]
    return fit_profiles(B).w_star


def _parse_cell(cell: str) -> float:
    cell = cell.strip()
    if cell == "" or cell.lower() == "nan":
        return math.nan
    return float(cell)


def read_matrix_csv(path, domain: str = ADDITIVE) -> DataMatrix:
    """Read a matrix CSV: one row per object, blank or ``NaN`` for missing.

    A first row that contains a non-numeric cell is taken as the header.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = None
    try:
        [_parse_cell(c) for c in rows[0]]
    except ValueError:
        header, rows = rows[0], rows[1:]
    width = max(len(r) for r in rows)
    data = np.full((len(rows), width), np.nan)
    for i, r in enumerate(rows):
        data[i, : len(r)] = [_parse_cell(c) for c in r]
    return DataMatrix(data, domain=domain, col_names=header)


def write_matrix_csv(matrix: DataMatrix, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if matrix.col_names:
            writer.writerow(matrix.col_names)
        for row in matrix.values:
            writer.writerow(["" if math.isnan(v) else format(v, ".17g") for v in row])
