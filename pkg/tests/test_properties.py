"""Invariants of the miner on small matrices."""
import numpy as np
from hypothesis import given, settings, strategies as st

from flagmine import DataMatrix, MinerConfig, mine, verify_cluster
from flagmine.miner import SeedChoice, row_addition
from flagmine.synth import PlantSpec, gen_random_matrix, plant_cluster

seeds = st.integers(0, 10_000)
SETTINGS = settings(max_examples=25, deadline=None)


def planted(seed, m=16, n=24, F=0, w=0.0, beta=0.5):
    M = gen_random_matrix(m, n, seed=seed)
    return plant_cluster(M, PlantSpec(beta, beta, w=w, F=F, seed=seed, max_lag=2))


def summary(clusters):
    return [(c.canonical_key(), sorted(c.fuzz.items()), sorted(c.anti_rows)) for c in clusters]


@SETTINGS
@given(seeds, st.integers(0, 2), st.sampled_from([0.0, 5.0, 40.0]))
def test_every_cluster_verifies_at_2w(seed, F, w):
    M2, _ = planted(seed, F=F, w=w)
    cfg = MinerConfig(w=max(w, 1.0), beta_i=0.3, beta_j=0.3, max_fuzz=F, disc_set_size=3,
                      iterations=40, seed=seed)
    plan = cfg.resolve(*M2.shape)
    for c in mine(M2, cfg):
        assert len(c.rows) >= plan.need_rows and len(c.cols) >= plan.need_cols
        assert verify_cluster(M2, c, 2 * cfg.w).valid
        assert c.achieved_error <= 2 * cfg.w + 1e-6
        assert all(abs(f) <= F for f in c.fuzz.values())


@SETTINGS
@given(seeds, st.lists(st.integers(-500, 500), min_size=12, max_size=12))
def test_row_offsets_do_not_change_output(seed, offsets):
    rng = np.random.default_rng(seed)
    A = rng.integers(0, 60, size=(12, 20)).astype(float)
    A[2:9, 3:15] = rng.integers(0, 60, 12)[None, :] + rng.integers(0, 30, 7)[:, None]
    shifted = A + np.asarray(offsets, float)[:, None]
    cfg = MinerConfig(w=0.5, beta_i=0.4, beta_j=0.4, max_fuzz=1, disc_set_size=3, iterations=40, seed=seed)
    assert summary(mine(A, cfg)) == summary(mine(shifted, cfg))


@SETTINGS
@given(seeds, st.integers(1, 3))
def test_shifted_duplicate_row_joins_with_shifted_lag(seed, s):
    M2, gt = planted(seed, m=14, n=30, F=0, w=0.0)
    rng = np.random.default_rng(seed)
    r = gt.cluster.rows[0]
    dup = np.concatenate([rng.uniform(100, 1100, s), M2.values[r, :-s]])
    A = np.vstack([M2.values, dup])
    d = A.shape[0] - 1
    cfg = MinerConfig(w=1e-6, beta_i=0.45, beta_j=0.45, disc_set_size=3, iterations=400, seed=seed)
    found = [c for c in mine(A, cfg) if r in c.rows]
    assert found
    n = A.shape[1]
    for c in found:
        # A read pushed past the last column rejects the lag, so only
        # clusters whose shifted reads stay inside the matrix must take d.
        if max(c.cols) + c.lag_of(r) + s < n:
            assert d in c.rows
        if d in c.rows:
            assert c.lag_of(d) - c.lag_of(r) == s


@SETTINGS
@given(seeds)
def test_negated_rows_readmitted_as_anti(seed):
    M2, gt = planted(seed, m=14, n=24, F=0, w=0.0)
    A = M2.values.copy()
    neg = gt.cluster.rows[:2]
    A[list(neg)] = -A[list(neg)]
    base = dict(w=1e-6, beta_i=0.45, beta_j=0.45, disc_set_size=3, iterations=400, seed=seed)
    with_anti = mine(A, MinerConfig(anti=True, **base))
    top = [c for c in with_anti if set(gt.cluster.rows) <= set(c.rows)]
    assert top
    for c in top:
        # Signs are relative to the anchor: either side of the split may be the anti one.
        anti = set(c.anti_rows) & set(gt.cluster.rows)
        assert anti in (set(neg), set(gt.cluster.rows) - set(neg))
        for i in gt.cluster.rows:
            assert c.lag_of(i) - c.lag_of(gt.cluster.rows[-1]) == gt.cluster.lag_of(i) - gt.cluster.lag_of(gt.cluster.rows[-1])
    for c in mine(A, MinerConfig(anti=False, **base)):
        assert not c.anti_rows and not set(neg) <= set(c.rows)


@SETTINGS
@given(seeds, st.integers(1, 2))
def test_zero_fuzz_columns_take_no_fuzz(seed, F):
    rng = np.random.default_rng(seed)
    A = rng.integers(0, 4, size=(10, 16)).astype(float)
    S = tuple(rng.permutation(16)[:5].tolist())
    k0 = int(rng.integers(1, 4))
    rp = row_addition(A, SeedChoice(0, S, S[:k0], S[0]), 0.5, F)
    assert (rp.fuzz[:, :k0][rp.fuzz[:, :k0] != -99] == 0).all()


@SETTINGS
@given(seeds)
def test_output_is_seed_deterministic(seed):
    M2, _ = planted(seed, F=1, w=5.0)
    cfg = MinerConfig(w=5.0, beta_i=0.4, beta_j=0.4, max_fuzz=1, disc_set_size=3, iterations=30, seed=seed)
    assert mine(M2, cfg) == mine(DataMatrix(M2.values), cfg)
