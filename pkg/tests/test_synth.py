import numpy as np
import pytest

from flagmine import fit_profiles, verify_cluster
from flagmine.errors import InfeasiblePlant
from flagmine.matrix import aligned_submatrix
from flagmine.synth import (
    PlantSpec, artifact_frequency, artifact_probability, gen_random_matrix, gen_trajectories,
    gen_trajectory_groups, has_profile_artifact, plant_cluster,
)


def test_random_matrix_range_and_mean():
    M = gen_random_matrix(100, 100, seed=1)
    V = M.values
    assert V.min() >= 100 and V.max() < 1100
    sigma = 1000 / np.sqrt(12)
    assert abs(V.mean() - 600) <= 3 * sigma / 100


def test_random_matrix_determinism_and_tiny_range():
    assert gen_random_matrix(5, 6, seed=3) == gen_random_matrix(5, 6, seed=3)
    V = gen_random_matrix(4, 4, lo=1.0, hi=1.0 + 1e-9).values
    assert np.ptp(V) < 1e-9


def test_exact_plant_is_additive():
    M2, gt = plant_cluster(gen_random_matrix(30, 30, seed=0), PlantSpec(0.4, 0.4, w=0.0, F=0, max_lag=0))
    assert set(gt.cluster.lags) == {0}
    B = aligned_submatrix(M2, gt.cluster)
    assert fit_profiles(B).w_star < 1e-9


def test_plant_verifies_at_w():
    for seed in range(5):
        M2, gt = plant_cluster(gen_random_matrix(50, 50, seed=seed), PlantSpec(0.5, 0.5, w=0.01, F=1, seed=seed))
        assert verify_cluster(M2, gt.cluster, 0.01).valid
        # Fuzzy reads never collide within a row.
        pos = gt.cluster.positions()
        assert all(len(set(r)) == len(r) for r in pos)


def test_plant_infeasible():
    with pytest.raises(InfeasiblePlant):
        plant_cluster(gen_random_matrix(10, 10), PlantSpec(0.1, 0.5))
    with pytest.raises(InfeasiblePlant):
        plant_cluster(gen_random_matrix(10, 10), PlantSpec(0.5, 1.0, F=2))


def test_artifact_endpoints():
    assert artifact_probability(100, 100, 5, 5, 0.0, 2) == 0.0
    assert artifact_probability(100, 100, 5, 5, 0.5, 0) == 1.0
    assert artifact_probability(100, 100, 5, 5, 0.7, 1) == 1.0


def test_artifact_monotone():
    ws = [artifact_probability(50, 50, 4, 4, w, 1) for w in (0.01, 0.05, 0.1, 0.2)]
    assert ws == sorted(ws)
    fs = [artifact_probability(50, 50, 4, 4, 0.05, F) for F in range(4)]
    assert fs == sorted(fs)
    sizes = [artifact_probability(50, 50, k, k, 0.1, 1) for k in (3, 5, 8, 12)]
    assert sizes == sorted(sizes, reverse=True)


def test_artifact_large_sizes_stay_finite():
    p = artifact_probability(1000, 1000, 50, 50, 0.1, 2)
    assert 0.0 <= p <= 1.0


def test_profile_artifact_check():
    A = np.array([[0.5, 0.2, 0.9], [0.1, 0.5, 0.2], [0.7, 0.7, 0.7]])
    p = np.array([0.5, 0.2, 0.0])
    # Row 0 matches columns 0, 1 at lag 0; row 1 at lag 1.
    assert has_profile_artifact(A, p, 2, 2, 0.0, 0)
    assert not has_profile_artifact(A, p, 3, 2, 0.0, 0)
    assert artifact_frequency(6, 6, 2, 2, 0.0, 0, trials=20) == 0.0


def test_trajectories_exact_translates():
    tr = gen_trajectories(2, 4, 60, lag_spread=5, fuzz_spread=0, noise=0.0, seed=1)
    for obj in range(8):
        lead = (obj // 4) * 4
        t = tr.lags[obj]
        dx = tr.x[obj, t:] - tr.x[lead, :60 - t]
        dy = tr.y[obj, t:] - tr.y[lead, :60 - t]
        assert np.ptp(dx) < 1e-9 and np.ptp(dy) < 1e-9
        assert dx[0] == pytest.approx(dy[0])


def test_trajectory_fuzz_is_bounded_and_collision_free():
    tr = gen_trajectories(1, 3, 80, lag_spread=3, fuzz_spread=2, noise=0.0, seed=2, offset=0.0)
    lead = tr.x[0]
    for obj in (1, 2):
        t = tr.lags[obj]
        src = []
        for c in range(10, 70):
            near = [s for s in range(c - t - 2, c - t + 3) if np.isclose(tr.x[obj, c], lead[s])]
            assert near
            src.append(near[0])
        assert len(set(src)) == len(src)


def test_trajectory_matrix_encodings():
    M, labels = gen_trajectory_groups(3, 4, 30, seed=0)
    assert M.shape == (12, 60)
    assert labels.tolist() == [0] * 4 + [1] * 4 + [2] * 4
    Mx, _ = gen_trajectory_groups(3, 4, 30, seed=0, encoding="x")
    assert Mx.shape == (12, 30)
    with pytest.raises(ValueError):
        gen_trajectory_groups(3, 4, 30, encoding="z")
