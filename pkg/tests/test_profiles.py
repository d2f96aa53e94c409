import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from flagmine.errors import EmptyRowOrColumn, TooFewColumns, TooLarge
from flagmine.profiles import brute_force_error, fit_profiles, max_residual, two_row_error


def test_identical_rows():
    fit = two_row_error([1.0, 4.0, 2.0], [1.0, 4.0, 2.0])
    assert fit.w == 0.0 and fit.R == (0.0, 0.0)
    assert np.allclose(fit.C, [1.0, 4.0, 2.0])


def test_two_row_example():
    a, b = [1.0, 2.0, 3.0], [2.0, 3.0, 5.0]
    fit = two_row_error(a, b)
    # d = (-1, -1, -2): optimum is a quarter of the spread of the differences.
    assert fit.w == pytest.approx(0.25)
    assert fit.h == pytest.approx(-1.5)
    assert fit.R == pytest.approx((0.0, 1.5))
    assert max_residual(np.array([a, b]), fit.R, fit.C) == pytest.approx(0.25)
    assert brute_force_error(np.array([a, b])) == pytest.approx(0.25, abs=1e-3)


def test_two_row_missing_columns():
    fit = two_row_error([1.0, np.nan, 3.0, 7.0], [1.0, 2.0, 3.0, 7.5])
    assert fit.w == pytest.approx(0.125)
    assert not np.isnan(fit.C).any()


def test_two_row_too_few_columns():
    with pytest.raises(TooFewColumns):
        two_row_error([1.0, np.nan], [1.0, 2.0])


def test_fit_additive_rank():
    rng = np.random.default_rng(0)
    B = rng.normal(size=5)[:, None] + rng.normal(size=7)[None, :]
    assert fit_profiles(B).w_star < 1e-9


def test_fit_history_non_increasing():
    rng = np.random.default_rng(1)
    hist = []
    fit_profiles(rng.normal(size=(6, 8)), history=hist)
    assert all(b <= a + 1e-12 for a, b in zip(hist, hist[1:]))


def test_fit_matches_brute_force_on_3x3():
    rng = np.random.default_rng(2)
    for _ in range(50):
        B = rng.uniform(0, 1, size=(3, 3))
        assert fit_profiles(B).w_star <= brute_force_error(B, 1e-3) + 1e-3


def test_brute_force_zero_and_noisy():
    assert brute_force_error(np.zeros((3, 4))) == 0.0
    rng = np.random.default_rng(3)
    B = rng.normal(size=3)[:, None] + rng.normal(size=4)[None, :] + rng.uniform(-0.1, 0.1, (3, 4))
    assert brute_force_error(B, 1e-2) <= 0.1 + 1e-2


def test_brute_force_limits():
    with pytest.raises(TooLarge):
        brute_force_error(np.zeros((5, 3)))
    with pytest.raises(EmptyRowOrColumn):
        fit_profiles(np.array([[np.nan, 1.0], [np.nan, 2.0]]))


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, st.tuples(st.just(2), st.integers(2, 10)),
              elements=st.floats(-100, 100, allow_nan=False)))
def test_fit_profiles_equals_two_row_error(B):
    assert fit_profiles(B).w_star == pytest.approx(two_row_error(B[0], B[1]).w, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(2, 5), st.integers(2, 6)),
              elements=st.floats(-10, 10, allow_nan=False)),
       st.floats(-50, 50), st.floats(-50, 50))
def test_fit_invariant_to_row_and_column_offsets(B, a, b):
    shifted = B.copy()
    shifted[0] += a
    shifted[:, -1] += b
    assert fit_profiles(shifted).w_star == pytest.approx(fit_profiles(B).w_star, abs=1e-6)
