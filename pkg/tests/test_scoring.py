import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pandora import scoring
from pandora.errors import DomainError, UnsupportedError
from pandora.scoring import Limit

from .oracles import brute_beta_score, brute_pairwise_loss, forecasts


@pytest.mark.parametrize(
    "alpha, r, expected",
    [
        (1.0, 1.0, 1.0),
        (1.0, 2.0, 0.25),
        (1.0, 0.5, 2.0),
        (Limit.ZERO, math.exp(-1), 2.0),
        (Limit.INFINITY, 0.7, 2.0),
        (Limit.INFINITY, 1.0, 1.0),
        (Limit.INFINITY, 1.3, 0.0),
        (Limit.ZERO, 2.0, 0.5),
    ],
)
def test_pairwise_loss_examples(alpha, r, expected):
    assert scoring.pairwise_loss(alpha, r) == pytest.approx(expected, rel=1e-14, abs=1e-15)


@pytest.mark.parametrize("text, expected", [("zero", Limit.ZERO), ("0+", Limit.ZERO), ("inf", Limit.INFINITY),
                                            (math.inf, Limit.INFINITY), ("2.5", 2.5), (3, 3.0)])
def test_parse_alpha(text, expected):
    assert scoring.parse_alpha(text) == expected


@pytest.mark.parametrize("bad", [0, -1, "nan", "abc", float("nan")])
def test_parse_alpha_rejects(bad):
    with pytest.raises(DomainError):
        scoring.parse_alpha(bad)


def test_pairwise_loss_rejects_nonpositive_ratio():
    with pytest.raises(DomainError):
        scoring.pairwise_loss(1.0, 0.0)


@settings(max_examples=200, deadline=None)
@given(alpha=st.floats(0.05, 50.0), r=st.floats(1e-6, 1e6))
def test_pairwise_loss_matches_direct_formula(alpha, r):
    assert scoring.pairwise_loss(alpha, r) == pytest.approx(brute_pairwise_loss(alpha, r), rel=1e-9, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(alpha=st.floats(0.05, 50.0), r1=st.floats(1e-4, 1e4), r2=st.floats(1e-4, 1e4))
def test_pairwise_loss_nonincreasing_and_continuous(alpha, r1, r2):
    lo, hi = sorted((r1, r2))
    assert scoring.pairwise_loss(alpha, lo) >= scoring.pairwise_loss(alpha, hi) - 1e-12
    assert scoring.pairwise_loss(alpha, 1.0) == pytest.approx(1.0, abs=1e-15)


def test_pairwise_loss_limits_approached():
    r = np.array([0.3, 0.9, 1.1, 4.0])
    zero = scoring.pairwise_loss(Limit.ZERO, r)
    assert np.allclose(scoring.pairwise_loss(1e-7, r), zero, rtol=1e-5)
    big = scoring.pairwise_loss(2000.0, r)
    assert np.allclose(big, [2.0, 2.0, 0.0, 0.0], atol=0.01)


def test_pairwise_loss_huge_alpha_is_finite():
    vals = scoring.pairwise_loss(1e5, np.array([1e-3, 0.5, 2.0, 1e3]))
    assert np.all(np.isfinite(vals))


@pytest.mark.parametrize("alpha, expected", [(1, 1 / 6), (2, 4 / 15), (10, 100 / 231)])
def test_b_alpha(alpha, expected):
    assert scoring.b_alpha(alpha) == pytest.approx(expected, rel=1e-15)


def test_pandora_regret_examples():
    for K in (2, 3, 7):
        p = np.full(K, 1.0 / K)
        for i in range(K):
            assert scoring.pandora_regret(p, i) == pytest.approx(1 / 3, rel=1e-14)
    assert scoring.pandora_regret([0.8, 0.2], 0) == pytest.approx(1 / 48, rel=1e-14)


def test_beta_score_examples():
    assert scoring.beta_score(np.full(4, 0.25), 2, 1.0) == pytest.approx(3.0, rel=1e-14)
    assert scoring.beta_score([0.8, 0.2], 0, 1.0) == pytest.approx(1 / 16, rel=1e-14)
    assert scoring.beta_score([0.5, 0.5], 0, 1.0, costs=[2.0, 1.0]) == pytest.approx(2.0, rel=1e-14)


def test_raw_expected_cost_examples():
    assert scoring.raw_expected_cost([0.5, 0.5], 0) == pytest.approx(2 / 3, rel=1e-14)
    assert scoring.raw_expected_cost([0.8, 0.2], 0) == pytest.approx(49 / 96, rel=1e-14)
    for K in (2, 3, 6):
        expect = (1 + (K - 1) / 3) / 2
        assert scoring.raw_expected_cost(np.full(K, 1.0 / K), 0) == pytest.approx(expect, rel=1e-14)


def test_raw_expected_cost_zero_limit_unsupported():
    with pytest.raises(UnsupportedError):
        scoring.raw_expected_cost([0.5, 0.5], 0, Limit.ZERO)


def test_raw_expected_cost_infinity_limit_is_deterministic_search():
    # all costs equal to C: the ratio rule follows p, cost = C * (position of truth + 1)
    p = np.array([0.5, 0.3, 0.2])
    c = np.array([2.0, 3.0, 5.0])
    # q = p/c = (0.25, 0.1, 0.04): order 0,1,2
    assert scoring.raw_expected_cost(p, 2, Limit.INFINITY, c) == pytest.approx(10.0)
    assert scoring.raw_expected_cost(p, 0, Limit.INFINITY, c) == pytest.approx(2.0)


@settings(max_examples=150, deadline=None)
@given(data=forecasts(max_k=6), alpha=st.sampled_from([0.5, 1.0, 2.0, 5.0]))
def test_beta_score_matches_brute_force(data, alpha):
    p, i, c = data
    got = scoring.beta_score(p, i, alpha, c)
    assert got == pytest.approx(brute_beta_score(p, i, alpha, c), rel=1e-9)


@settings(max_examples=100, deadline=None)
@given(data=forecasts(max_k=6))
def test_rescaled_alpha_one_is_pandora(data):
    p, i, _ = data
    assert scoring.rescaled_beta_score(p, i, 1.0) == pytest.approx(scoring.pandora_regret(p, i), rel=1e-12)


def test_uniform_cost_affine_identity_is_exact():
    rng = np.random.default_rng(5)
    for K in (2, 3, 5, 8):
        p = rng.dirichlet(np.ones(K), size=50)
        y = rng.integers(0, K, size=50)
        lhs = scoring.raw_expected_cost(p, y)
        rhs = (1 + (K - 1) * scoring.pandora_regret(p, y)) / 2
        np.testing.assert_allclose(lhs, rhs, rtol=1e-13)


def test_vectorised_matches_rowwise():
    rng = np.random.default_rng(1)
    p = rng.dirichlet(np.ones(4), size=30)
    y = rng.integers(0, 4, size=30)
    batch = scoring.beta_score(p, y, 2.0)
    for n in range(30):
        assert batch[n] == scoring.beta_score(p[n], int(y[n]), 2.0)


def test_one_hot_truth_is_clamped_not_infinite():
    assert scoring.pandora_regret([1.0, 0.0], 0) == pytest.approx(0.0, abs=1e-9)
    # the left branch is bounded by 1 + (1 + 1/alpha): the worst regret is 1
    assert scoring.pandora_regret([0.0, 1.0], 0) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("bad", [[0.5, 0.6], [1.2, -0.2], [np.nan, 1.0], [1.0]])
def test_invalid_forecasts_rejected(bad):
    with pytest.raises(DomainError):
        scoring.pandora_regret(bad, 0)


def test_label_out_of_range():
    with pytest.raises(DomainError):
        scoring.pandora_regret([0.5, 0.5], 2)


@pytest.mark.parametrize("alpha, delta, expected", [(1, 0.0, 2.0), (1, math.log(2), 0.5),
                                                    (3, -0.1, 4 * math.exp(-0.3))])
def test_pairwise_gradient_examples(alpha, delta, expected):
    assert scoring.pairwise_gradient(alpha, delta) == pytest.approx(expected, rel=1e-14)


@settings(max_examples=100, deadline=None)
@given(alpha=st.floats(0.2, 10.0), delta=st.floats(-3, 3).filter(lambda d: abs(d) > 1e-3))
def test_gradient_is_minus_derivative_in_log_ratio(alpha, delta):
    h = 1e-6
    fd = -(scoring.pairwise_loss(alpha, math.exp(delta + h)) - scoring.pairwise_loss(alpha, math.exp(delta - h))) / (2 * h)
    # central differences of an O(1) loss lose ~1e-10 absolute to cancellation
    assert scoring.pairwise_gradient(alpha, delta) == pytest.approx(fd, rel=1e-5, abs=1e-8)
