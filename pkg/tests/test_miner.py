import math

import numpy as np
import pytest

from flagmine import DataMatrix, FuzzyLaggedCluster, MinerConfig, mine, verify_cluster
from flagmine.errors import CapExceeded, ConfigError
from flagmine.evaluation import recovers_planted
from flagmine.miner import (
    SeedChoice, column_addition, default_disc_set_size, default_iterations, disc_probability,
    draw_seed, expected_hit_rate, row_addition,
)
from flagmine.synth import PlantSpec, gen_random_matrix, plant_cluster


def test_disc_set_size_rule():
    assert default_disc_set_size(100, 100)["exact"] == pytest.approx(8.47, abs=0.01)
    small = default_disc_set_size(2, 2)
    assert small["exact"] == pytest.approx(0.6197 * 4 - 1.0063)
    assert small["recommended"] == 2


def test_disc_set_size_theoretical():
    d = default_disc_set_size(100, 100, beta_j_upper=0.05, max_fuzz=1)
    assert d["theoretical"] == pytest.approx(math.log(40000) / math.log(1 / 0.45))
    with pytest.raises(ConfigError):
        default_disc_set_size(100, 100, beta_j_upper=0.2, max_fuzz=1)


def test_default_iterations_examples():
    assert default_iterations(0.5, 0.5, 5, 1.0) == 89
    assert default_iterations(1.0, 1.0, 7, 1.0) == 2
    rho = default_iterations(0.3, 0.3, 8, 0.5)
    # Independent evaluation with exact rationals for the powers.
    from fractions import Fraction
    denom = Fraction(1, 2) * Fraction(3, 10) ** 9
    assert rho == math.ceil(2 * math.log(2) / float(denom))
    assert rho == 140863


def test_iteration_cap():
    with pytest.raises(CapExceeded):
        default_iterations(0.01, 0.01, 9, 0.01)


def test_expected_hit_rate():
    assert expected_hit_rate(0.408) == pytest.approx(0.432, abs=1e-3)
    assert expected_hit_rate(0.0) == 0.0
    assert expected_hit_rate(1.0) == 0.75


def test_disc_probability_clamps():
    assert disc_probability(5) == 0.408
    assert disc_probability(2) == disc_probability(4)
    assert disc_probability(20) == disc_probability(9)


def test_config_errors():
    for cfg in (MinerConfig(w=0.1, beta_i=0.5, beta_j=1.5),
                MinerConfig(w=0.1, beta_i=0.5, beta_j=0.01),
                MinerConfig(w=-1.0, beta_i=0.5, beta_j=0.5),
                MinerConfig(w=0.1, beta_i=0.5, beta_j=0.5, objective="psi"),
                MinerConfig(w=0.1, beta_i=0.5, beta_j=0.5, max_fuzz=[1, 2])):
        with pytest.raises(ConfigError):
            cfg.resolve(10, 10)


def test_threshold_rounding():
    plan = MinerConfig(w=0.1, beta_i=0.3, beta_j=0.3, iterations=1).resolve(100, 100)
    assert plan.need_rows == 30 and plan.need_cols == 30


def test_draw_seed():
    rng = np.random.default_rng(0)
    sd = draw_seed(rng, 10, 20, 5, 3)
    assert len(sd.disc_set) == 5 and set(sd.zero_fuzz_set) <= set(sd.disc_set)
    assert sd.anchor_col in sd.zero_fuzz_set


def _shifted_pair():
    base = np.array([3.0, 9.0, 1.0, 6.0, 4.0, 8.0, 2.0, 7.0])
    second = np.full(8, np.nan)
    second[1:] = base[:-1]  # A[1, j] = A[0, j - 1]
    second[0] = 5.0
    return np.vstack([base, second])


def test_row_addition_shifted_row_joins_with_lag_plus_one():
    A = _shifted_pair()
    seed = SeedChoice(0, (2, 3), (2, 3), 2)
    rp = row_addition(A, seed, 0.0, 0)
    assert rp.rows.tolist() == [0, 1]
    assert rp.lags.tolist() == [0, 1]
    assert (rp.fuzz == 0).all()


def test_row_addition_shifted_row_lag_is_unique():
    A = _shifted_pair()
    seed = SeedChoice(0, (2, 3), (2, 3), 2)
    # Enumerate every (t, f) pair: only t = 1 reproduces both anchor values.
    hits = [t for t in range(-7, 8)
            if all(0 <= s + t < 8 and A[1, s + t] - A[0, s] == A[1, 2 + t] - A[0, 2] for s in (2, 3))]
    assert hits == [1]
    assert row_addition(A, seed, 0.0, 0).lags[1] == 1


def test_anchor_always_accepted():
    rng = np.random.default_rng(4)
    A = rng.uniform(size=(5, 12))
    rp = row_addition(A, SeedChoice(2, (1, 5, 7), (1,), 1), 0.0, 0)
    assert rp.rows.tolist() == [2] and rp.lags.tolist() == [0]


def test_random_rows_rejected_at_rate_below_bound():
    # Free row offset: some group's event starts the 4w window and every
    # other group needs an event within 4w of it.
    rng = np.random.default_rng(5)
    n, rows, k, w, F = 60, 1000, 4, 0.02, 1
    A = rng.uniform(size=(rows + 1, n))
    A[0] = np.linspace(0.0, 1.0, n)
    S = (5, 20, 35, 50)
    rp = row_addition(A, SeedChoice(0, S, (), 5), w, F, max_lag=0, relative_fuzz=False)
    freq = (len(rp.rows) - 1) / rows
    cell = 1 - (1 - min(4 * w, 1)) ** (2 * F + 1)
    bound = k * (2 * F + 1) * cell ** (k - 1)
    se = math.sqrt(bound * (1 - bound) / rows)
    assert freq <= bound + 3 * se


def test_known_profile_cell_rate_matches_formula():
    # The cell formula assumes the profile (value and offset) is known.
    rng = np.random.default_rng(6)
    w, F, trials = 0.05, 2, 20000
    reads = rng.uniform(size=(trials, 2 * F + 1))
    p = rng.uniform(size=(trials, 1))
    hit = (np.abs(reads - p) <= w).any(axis=1).mean()
    formula = 1 - (1 - min(2 * w, 1)) ** (2 * F + 1)
    assert hit <= formula + 3 * math.sqrt(formula * (1 - formula) / trials)


def test_row_addition_kernel_matches_sweep():
    rng = np.random.default_rng(7)
    for _ in range(20):
        A = rng.integers(0, 6, size=(8, 15)).astype(float)
        A[rng.uniform(size=A.shape) < 0.1] = np.nan
        S = tuple(rng.permutation(15)[:4].tolist())
        seed = SeedChoice(int(rng.integers(8)), S, S[:1], S[0])
        for F in (0, 1, 2):
            a = row_addition(A, seed, 0.5, F, anti=True, method="kernel")
            b = row_addition(A, seed, 0.5, F, anti=True, method="sweep")
            assert a.rows.tolist() == b.rows.tolist()
            assert a.lags.tolist() == b.lags.tolist()
            assert a.signs.tolist() == b.signs.tolist()


def test_column_s0_always_accepted():
    rng = np.random.default_rng(8)
    A = rng.uniform(size=(4, 10))
    cp = column_addition(A, [0, 1, 2, 3], [0, 0, 0, 0], [1, 1, 1, 1], 4, 0.0, 0, 0)
    assert 4 in cp.cols.tolist()


def test_column_fuzz_on_one_row():
    # Row 1 reads column 2 one step late; rows agree elsewhere.
    A = np.array([[0.0, 5.0, 1.0, 9.0, 3.0, 7.0],
                  [0.0, 5.0, 4.0, 1.0, 3.0, 7.0]])
    at0 = column_addition(A, [0, 1], [0, 0], [1, 1], 0, 0.0, 0, 0)
    at1 = column_addition(A, [0, 1], [0, 0], [1, 1], 0, 0.0, 1, 0, zero_cols=(0,))
    assert 2 not in at0.cols.tolist()
    q = at1.cols.tolist().index(2)
    assert at1.fuzz[:, q].tolist() == [0, 1]


def test_column_scan_on_noise_free_plant():
    M = gen_random_matrix(40, 40, seed=1)
    M2, gt = plant_cluster(M, PlantSpec(0.5, 0.5, w=0.0, F=0, seed=2))
    c = gt.cluster
    V = M2.values
    anchor = c.rows[c.lags.index(0)] if 0 in c.lags else c.rows[0]
    lags = np.array(c.lags) - c.lag_of(anchor)
    cols = np.array(c.cols) + c.lag_of(anchor)
    cp = column_addition(V, c.rows, lags, np.ones(len(c.rows)), int(cols[0]), 1e-9, 0, anchor)
    got = set(cp.cols.tolist())
    assert set(cols.tolist()) <= got
    assert len(got) <= 2 * len(cols)


def test_mine_certifies_and_respects_thresholds():
    M = gen_random_matrix(30, 30, seed=3)
    M2, gt = plant_cluster(M, PlantSpec(0.5, 0.5, w=2.0, F=1, seed=4))
    cfg = MinerConfig(w=2.0, beta_i=0.5, beta_j=0.5, max_fuzz=1, disc_set_size=5, seed=0)
    out = mine(M2, cfg)
    assert out
    for c in out:
        assert len(c.rows) >= 15 and len(c.cols) >= 15
        assert verify_cluster(M2, c, 2 * cfg.w).valid
    scores = [len(c.rows) * len(c.cols) for c in out]
    assert scores == sorted(scores, reverse=True)


def test_mine_workers_equivalent():
    M = gen_random_matrix(30, 30, seed=5)
    M2, _ = plant_cluster(M, PlantSpec(0.4, 0.4, w=5.0, F=1, seed=6))
    cfg = MinerConfig(w=5.0, beta_i=0.4, beta_j=0.4, max_fuzz=1, disc_set_size=5, iterations=80, seed=9)
    assert mine(M2, cfg, workers=1) == mine(M2, cfg, workers=3)


def test_mine_multiplicative_in_log_space():
    rng = np.random.default_rng(10)
    u = rng.uniform(1, 2, 6)
    v = rng.uniform(1, 3, 8)
    M = DataMatrix(u[:, None] * v[None, :], domain="multiplicative")
    out = mine(M, MinerConfig(w=1e-6, beta_i=1.0, beta_j=1.0, iterations=5))
    assert len(out) == 1 and out[0].shape == (6, 8)


def test_mine_recovers_planted_50x50():
    hits = 0
    runs = 200
    for r in range(runs):
        M = gen_random_matrix(50, 50, seed=1000 + r)
        M2, gt = plant_cluster(M, PlantSpec(0.5, 0.5, w=0.01, F=0, seed=2000 + r))
        cfg = MinerConfig(w=0.01, beta_i=0.5, beta_j=0.5, disc_set_size=5, seed=r)
        hits += any(recovers_planted(c, gt.cluster) for c in mine(M2, cfg))
    assert hits / runs >= 0.35


def test_dedup_across_anchors():
    # A pure additive block mined from every anchor is reported once.
    rng = np.random.default_rng(11)
    M = DataMatrix(rng.normal(size=8)[:, None] + rng.normal(size=10)[None, :])
    out = mine(M, MinerConfig(w=1e-9, beta_i=1.0, beta_j=1.0, disc_set_size=3, iterations=30))
    assert len(out) == 1


def test_cluster_type():
    M = gen_random_matrix(20, 20, seed=0)
    for c in mine(M, MinerConfig(w=200.0, beta_i=0.2, beta_j=0.2, disc_set_size=2, iterations=5)):
        assert isinstance(c, FuzzyLaggedCluster)
