"""Compiled inner loops of the miner.

A row (or column) is accepted when a window of width ``width`` can hold at
least one candidate value from every non-empty candidate list.  The
kernels decide this per lag with an early-exit bound (largest list minimum
minus smallest list maximum must not exceed the width) and fall back to an
exact cover test only when some list has several candidates.

Candidate lists:

* row phase, row ``i``, lag ``t``: for every anchor column ``s`` the values
  ``sign * A[i, s + t + f] - A[p, s]`` with ``|f| <= F_i`` (``f = 0`` on the
  zero-fuzz columns);
* column phase, column ``j``: for every cluster row the values
  ``sign * (A[i, j + T_i + f] - ref_i)`` with ``|f| <= F_i``.

A list whose reads all fall outside the matrix rejects the lag or column
outright.  A list that is empty only because of missing entries is skipped,
as long as at least ``min_present`` lists are non-empty.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def lag_sequence(limit):
    """0, -1, 1, -2, 2, ... up to ``limit``: preferred lag order."""
    out = np.empty(2 * limit + 1, np.int64)
    out[0] = 0
    k = 1
    for d in range(1, limit + 1):
        out[k] = -d
        out[k + 1] = d
        k += 2
    return out


@njit(cache=True)
def _cover_exists(buf, cnt, width, xmin, xmax):
    L = cnt.shape[0]
    for l0 in range(L):
        for c0 in range(cnt[l0]):
            x = buf[l0, c0]
            if x < xmin or x > xmax:
                continue
            ok = True
            for l in range(L):
                if cnt[l] == 0:
                    continue
                hit = False
                for c in range(cnt[l]):
                    v = buf[l, c]
                    if v >= x and v <= x + width:
                        hit = True
                        break
                if not hit:
                    ok = False
                    break
            if ok:
                return True
    return False


@njit(cache=True)
def _better(f, g):
    af = abs(f)
    ag = abs(g)
    return af < ag or (af == ag and f < g)


@njit(cache=True)
def best_cover(buf, fz, cnt, width):
    """Window start and per-list choice minimising total ``|fuzz|``.

    Inside a window each list takes its least-fuzzy candidate (ties to the
    negative offset); among windows the smallest total wins, ties to the
    lowest start.  Returns ``(x, choice)`` with ``choice[l] = -1`` for empty
    lists, or ``(nan, choice)`` when no window exists.
    """
    L = cnt.shape[0]
    best_cost = np.inf
    best_x = np.nan
    for l0 in range(L):
        for c0 in range(cnt[l0]):
            x = buf[l0, c0]
            cost = 0
            ok = True
            for l in range(L):
                if cnt[l] == 0:
                    continue
                bi = -1
                for c in range(cnt[l]):
                    v = buf[l, c]
                    if v >= x and v <= x + width:
                        if bi < 0 or _better(fz[l, c], fz[l, bi]):
                            bi = c
                if bi < 0:
                    ok = False
                    break
                cost += abs(fz[l, bi])
            if ok and (cost < best_cost or (cost == best_cost and x < best_x)):
                best_cost = cost
                best_x = x
    choice = np.full(L, -1, np.int64)
    if np.isnan(best_x):
        return best_x, choice
    for l in range(L):
        bi = -1
        for c in range(cnt[l]):
            v = buf[l, c]
            if v >= best_x and v <= best_x + width:
                if bi < 0 or _better(fz[l, c], fz[l, bi]):
                    bi = c
        choice[l] = bi
    return best_x, choice


@njit(cache=True)
def _gather_row(A, i, p, S, zero, Fi, t, sign, buf, fz, cnt):
    n = A.shape[1]
    for idx in range(S.shape[0]):
        s = S[idx]
        a = A[p, s]
        c = 0
        if not np.isnan(a):
            F = 0 if zero[idx] else Fi
            for f in range(-F, F + 1):
                pos = s + t + f
                if pos < 0 or pos >= n:
                    continue
                v = A[i, pos]
                if np.isnan(v):
                    continue
                buf[idx, c] = sign * v - a
                fz[idx, c] = f
                c += 1
        cnt[idx] = c


@njit(cache=True)
def _row_lag_feasible(A, i, p, S, zero, Fi, t, sign, width, min_present, buf, cnt):
    n = A.shape[1]
    lo = -np.inf
    hi = np.inf
    present = 0
    multi = False
    for idx in range(S.shape[0]):
        s = S[idx]
        a = A[p, s]
        cnt[idx] = 0
        if np.isnan(a):
            continue
        F = 0 if zero[idx] else Fi
        if s + t + F < 0 or s + t - F >= n:
            return False
        mn = np.inf
        mx = -np.inf
        c = 0
        for f in range(-F, F + 1):
            pos = s + t + f
            if pos < 0 or pos >= n:
                continue
            v = A[i, pos]
            if np.isnan(v):
                continue
            v = sign * v - a
            buf[idx, c] = v
            c += 1
            if v < mn:
                mn = v
            if v > mx:
                mx = v
        cnt[idx] = c
        if c == 0:
            continue
        present += 1
        if c > 1:
            multi = True
        if mn > lo:
            lo = mn
        if mx < hi:
            hi = mx
        if lo - hi > width:
            return False
    if present < min_present:
        return False
    if not multi:
        return True
    return _cover_exists(buf, cnt, width, lo - width, hi)


@njit(cache=True)
def row_phase(A, p, S, zero, Frow, width, min_present, max_lag, anti, need_rows, out_lag, out_sign):
    """Accept rows against anchor ``p`` over anchor columns ``S``.

    Fills ``out_lag``/``out_sign`` (sign 0 = rejected, -1 = anti) and
    returns the number of accepted rows, or -1 as soon as ``need_rows`` can
    no longer be reached.
    """
    m, n = A.shape
    k = S.shape[0]
    W = 2 * max(Frow.max(), 0) + 1
    buf = np.empty((k, W))
    cnt = np.zeros(k, np.int64)
    lags = lag_sequence(max_lag)
    n_pass = 2 if anti else 1
    accepted = 0
    # Two fuzz-free anchor columns give a one-subtraction necessary test
    # per lag: their events must differ by at most the width.
    z0 = -1
    z1 = -1
    for idx in range(k):
        if zero[idx] and not np.isnan(A[p, S[idx]]):
            if z0 < 0:
                z0 = idx
            elif z1 < 0:
                z1 = idx
    quick = z1 >= 0
    sa = S[z0] if quick else 0
    sb = S[z1] if quick else 0
    gap = A[p, sa] - A[p, sb] if quick else 0.0
    for i in range(m):
        out_sign[i] = 0
        out_lag[i] = 0
    for i in range(m):
        if accepted + (m - i) < need_rows:
            return -1
        if i == p:
            out_sign[i] = 1
            accepted += 1
            continue
        for pss in range(n_pass):
            sign = 1.0 if pss == 0 else -1.0
            for t in lags:
                if quick:
                    pa = sa + t
                    pb = sb + t
                    if pa < 0 or pa >= n or pb < 0 or pb >= n:
                        continue
                    d = sign * (A[i, pa] - A[i, pb]) - gap
                    if d > width or d < -width:
                        continue
                if _row_lag_feasible(A, i, p, S, zero, Frow[i], t, sign, width, min_present, buf, cnt):
                    out_lag[i] = t
                    out_sign[i] = 1 if pss == 0 else -1
                    break
            if out_sign[i] != 0:
                break
        if out_sign[i] != 0:
            accepted += 1
    return accepted


@njit(cache=True)
def row_assign(A, p, S, zero, Frow, rows, lags, signs, width):
    """Least-fuzzy offsets on ``S`` for already accepted rows (``-99`` = absent)."""
    k = S.shape[0]
    W = 2 * max(Frow.max(), 0) + 1
    buf = np.empty((k, W))
    fz = np.zeros((k, W), np.int64)
    cnt = np.zeros(k, np.int64)
    out = np.full((rows.shape[0], k), -99, np.int64)
    for r in range(rows.shape[0]):
        i = rows[r]
        _gather_row(A, i, p, S, zero, Frow[i], lags[r], float(signs[r]), buf, fz, cnt)
        x, choice = best_cover(buf, fz, cnt, width)
        if np.isnan(x):
            continue
        for idx in range(k):
            if choice[idx] >= 0:
                out[r, idx] = fz[idx, choice[idx]]
    return out


@njit(cache=True)
def _gather_col(A, j, rows, lags, refs, signs, Fcol, zero_col, buf, fz, cnt):
    n = A.shape[1]
    for r in range(rows.shape[0]):
        c = 0
        ref = refs[r]
        if not np.isnan(ref):
            F = 0 if zero_col else Fcol[r]
            for f in range(-F, F + 1):
                pos = j + lags[r] + f
                if pos < 0 or pos >= n:
                    continue
                v = A[rows[r], pos]
                if np.isnan(v):
                    continue
                buf[r, c] = signs[r] * (v - ref)
                fz[r, c] = f
                c += 1
        cnt[r] = c


@njit(cache=True)
def _col_in_range(j, rows, lags, refs, Fcol, zero_col, n):
    for r in range(rows.shape[0]):
        if np.isnan(refs[r]):
            continue
        F = 0 if zero_col else Fcol[r]
        if j + lags[r] + F < 0 or j + lags[r] - F >= n:
            return False
    return True


@njit(cache=True)
def column_phase(A, rows, lags, refs, signs, Fcol, zero_cols, width, min_present, out_ok):
    """Mark every anchor-coordinate column that fits all cluster rows."""
    n = A.shape[1]
    L = rows.shape[0]
    W = 2 * max(Fcol.max(), 0) + 1
    buf = np.empty((L, W))
    fz = np.zeros((L, W), np.int64)
    cnt = np.zeros(L, np.int64)
    for j in range(n):
        out_ok[j] = False
        if not _col_in_range(j, rows, lags, refs, Fcol, zero_cols[j], n):
            continue
        _gather_col(A, j, rows, lags, refs, signs, Fcol, zero_cols[j], buf, fz, cnt)
        lo = -np.inf
        hi = np.inf
        present = 0
        multi = False
        for r in range(L):
            c = cnt[r]
            if c == 0:
                continue
            present += 1
            if c > 1:
                multi = True
            mn = np.inf
            mx = -np.inf
            for q in range(c):
                v = buf[r, q]
                if v < mn:
                    mn = v
                if v > mx:
                    mx = v
            if mn > lo:
                lo = mn
            if mx < hi:
                hi = mx
        if present < min_present or lo - hi > width:
            continue
        if not multi or _cover_exists(buf, cnt, width, lo - width, hi):
            out_ok[j] = True


@njit(cache=True)
def column_assign(A, rows, lags, refs, signs, Fcol, zero_cols, width, cols):
    """Least-fuzzy offsets for accepted columns.

    Returns ``(fuzz, present, start)`` where ``fuzz``/``present`` are
    ``|I| x |J|`` and ``start[j]`` is the chosen window start.
    """
    L = rows.shape[0]
    W = 2 * max(Fcol.max(), 0) + 1
    buf = np.empty((L, W))
    fz = np.zeros((L, W), np.int64)
    cnt = np.zeros(L, np.int64)
    fuzz = np.zeros((L, cols.shape[0]), np.int64)
    present = np.zeros((L, cols.shape[0]), np.bool_)
    start = np.full(cols.shape[0], np.nan)
    for q in range(cols.shape[0]):
        _gather_col(A, cols[q], rows, lags, refs, signs, Fcol, zero_cols[cols[q]], buf, fz, cnt)
        x, choice = best_cover(buf, fz, cnt, width)
        start[q] = x
        for r in range(L):
            if choice[r] >= 0:
                fuzz[r, q] = fz[r, choice[r]]
                present[r, q] = True
    return fuzz, present, start



@njit(cache=True)
def column_reassign(A, rows, lags, refs, signs, Fcol, zero_cols, width, cols, order, fuzz, present, start):
    """Move exact copies onto unclaimed cells where another window exists.

    Columns are visited in ``order``.  A column whose chosen cells were all
    chosen already by earlier columns is refitted with those cells
    excluded; it keeps its copy only if no such window exists.  Updates
    ``fuzz``, ``present`` and ``start`` in place.
    """
    n = A.shape[1]
    L = rows.shape[0]
    W = 2 * max(Fcol.max(), 0) + 1
    buf = np.empty((L, W))
    fz = np.zeros((L, W), np.int64)
    cnt = np.zeros(L, np.int64)
    claimed = np.zeros((L, n), np.bool_)
    for q in order:
        j = cols[q]
        dup = False
        for r in range(L):
            if present[r, q]:
                dup = True
                break
        for r in range(L):
            if present[r, q] and not claimed[r, j + lags[r] + fuzz[r, q]]:
                dup = False
                break
        if dup:
            _gather_col(A, j, rows, lags, refs, signs, Fcol, zero_cols[j], buf, fz, cnt)
            ok = True
            for r in range(L):
                c = 0
                for k in range(cnt[r]):
                    if not claimed[r, j + lags[r] + fz[r, k]]:
                        buf[r, c] = buf[r, k]
                        fz[r, c] = fz[r, k]
                        c += 1
                if cnt[r] > 0 and c == 0:
                    ok = False
                cnt[r] = c
            if ok:
                x, choice = best_cover(buf, fz, cnt, width)
                if not np.isnan(x):
                    start[q] = x
                    for r in range(L):
                        if choice[r] >= 0:
                            fuzz[r, q] = fz[r, choice[r]]
        for r in range(L):
            if present[r, q]:
                claimed[r, j + lags[r] + fuzz[r, q]] = True
