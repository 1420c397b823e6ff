import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from pandora import baselines
from pandora.baselines import ConfusionCounts
from pandora.errors import DomainError

from .oracles import f1_lookahead_values, forecasts, macro_f1_from_counts


@pytest.mark.parametrize("pi, expected", [(1.0, 0.0), (math.exp(-2), 2.0), (0.2, math.log(5))])
def test_log_loss_examples(pi, expected):
    p = [pi, 1 - pi] if pi < 1 else [1.0, 0.0]
    assert baselines.log_loss(p, 0) == pytest.approx(expected, abs=1e-15)


def test_parallel_cost_examples():
    assert baselines.parallel_decision_cost([1.0, 0.0], 0) == pytest.approx(1.0, abs=1e-15)
    assert baselines.parallel_decision_cost([0.2, 0.8], 0) == pytest.approx(1 + math.log(5), rel=1e-15)


def test_parallel_risks_by_quadrature():
    # risk of class k: threshold c ~ density 1/c on (0, 1]; false classes pay c while c < p_k,
    # the true class pays 1 once c >= p_i (missed treatment) and c below it (test cost)
    risks = baselines.parallel_risks([0.2, 0.8], 0)
    r0 = integrate.quad(lambda c: c * (1 / c), 0, 0.2)[0] + integrate.quad(lambda c: 1 / c, 0.2, 1)[0]
    r1 = integrate.quad(lambda c: c * (1 / c), 0, 0.8)[0]
    np.testing.assert_allclose(risks, [r0, r1], atol=1e-8)
    np.testing.assert_allclose(risks, [0.2 + math.log(5), 0.8], rtol=1e-14)


def test_parallel_identity_on_random_forecasts():
    rng = np.random.default_rng(11)
    for K in (2, 4, 9):
        p = rng.dirichlet(np.ones(K) * 0.5, size=500)
        y = rng.integers(0, K, size=500)
        gap = baselines.parallel_decision_cost(p, y) - baselines.log_loss(p, y)
        np.testing.assert_allclose(gap, 1.0, rtol=0, atol=1e-12)


def test_fixed_order_examples():
    p = [0.5, 0.3, 0.2]
    assert baselines.fixed_order_regret(p, 2, (0, 1, 2)) == pytest.approx(math.log(5), rel=1e-14)
    assert baselines.fixed_order_regret(p, 2, (1, 0, 2)) == pytest.approx(math.log(5), rel=1e-14)
    assert baselines.fixed_order_regret([0.5, 0.5], 1, (0, 1), a=2.0, b=1.0) == pytest.approx(
        0.5 + math.log(2), rel=1e-14)


def _quadrature_regret(p, label, order, a, b):
    """Stepwise regret integrals against w(c) = a/c + b/(1-c), by adaptive quadrature."""
    # integrands c*w(c) and (1-c)*w(c), written without the removable endpoint poles
    def false_part(c):
        return a + b * c / (1 - c)

    def true_part(c):
        return a * (1 - c) / c + b

    remaining = 1.0
    total = 0.0
    for k in order:
        h = p[k] / remaining
        if k == label:
            return total + integrate.quad(true_part, h, 1, epsabs=1e-12)[0]
        total += integrate.quad(false_part, 0, h, epsabs=1e-12)[0]
        remaining -= p[k]
    raise AssertionError("label not in order")


def test_fixed_order_knife_edge_by_quadrature():
    assert _quadrature_regret([0.5, 0.5], 1, (0, 1), 2.0, 1.0) == pytest.approx(0.5 + math.log(2), abs=1e-6)
    rng = np.random.default_rng(4)
    for _ in range(20):
        K = int(rng.integers(2, 5))
        p = rng.dirichlet(np.ones(K))
        i = int(rng.integers(K))
        order = tuple(rng.permutation(K))
        for a, b in ((1.0, 1.0), (2.0, 1.0), (0.5, 3.0)):
            got = baselines.fixed_order_regret(p, i, order, a, b)
            assert got == pytest.approx(_quadrature_regret(p, i, order, a, b), abs=1e-6)


def test_fixed_order_zero_true_mass_is_clamped_like_log_loss():
    # the probability floor keeps the untested true class alive, so no false step exhausts the mass
    p = [0.5, 0.5, 0.0]
    got = baselines.fixed_order_regret(p, 2, (0, 1, 2))
    assert got == pytest.approx(baselines.log_loss(p, 2), rel=1e-9)
    assert math.isfinite(baselines.fixed_order_regret(p, 2, (0, 1, 2), a=2.0, b=1.0))


@settings(max_examples=80, deadline=None)
@given(data=forecasts(max_k=4, with_costs=False))
def test_fixed_order_amnesia(data):
    p, i, _ = data
    for order in itertools.permutations(range(len(p))):
        assert baselines.fixed_order_regret(p, i, order) == pytest.approx(-math.log(p[i]), rel=1e-12, abs=1e-13)


def test_fixed_order_depends_on_order_off_haldane():
    p = [0.6, 0.3, 0.1]
    vals = {baselines.fixed_order_regret(p, 2, o, a=2.0, b=1.0) for o in itertools.permutations(range(3))}
    assert max(vals) - min(vals) > 1e-3


def test_fixed_order_rejects_non_permutation():
    with pytest.raises(DomainError):
        baselines.fixed_order_regret([0.5, 0.5], 0, (0, 0))


def test_accuracy_examples():
    assert baselines.accuracy(np.eye(3), [0, 1, 2]) == 1.0
    assert baselines.accuracy([[0.0, 1.0], [0.0, 1.0]], [0, 0]) == 0.0
    assert baselines.accuracy([[0.5, 0.5]], [0]) == 1.0


def test_empty_dataset_rejected():
    with pytest.raises(DomainError):
        baselines.accuracy(np.empty((0, 2)), np.empty(0, dtype=int))
    with pytest.raises(DomainError):
        baselines.macro_f1(np.empty((0, 2)), np.empty(0, dtype=int))


def test_macro_f1_examples():
    assert baselines.macro_f1(np.eye(3), [0, 1, 2]) == 1.0
    assert baselines.macro_f1([[0.9, 0.1], [0.8, 0.2]], [0, 1]) == pytest.approx(1 / 3, rel=1e-15)
    # class 2 absent and never predicted: contributes 0
    assert baselines.macro_f1([[1, 0, 0], [0, 1, 0]], [0, 1]) == pytest.approx(2 / 3, rel=1e-15)


@pytest.mark.parametrize("tp, fp, fn, expected", [(1, 1, 1, (1 / 6, 0.1)), (5, 0, 0, (0.0, 1 / 11)),
                                                  (0, 2, 1, (0.4, 0.0))])
def test_f1_marginals_examples(tp, fp, fn, expected):
    got = baselines.f1_marginals(ConfusionCounts([tp], [fp], [fn]), 0)
    assert got == pytest.approx(expected, rel=1e-15)


def test_f1_marginals_zero_denominator():
    with pytest.raises(DomainError):
        baselines.f1_marginals(ConfusionCounts([0], [0], [0]), 0)


def test_f1_marginals_are_exact_differences():
    rng = np.random.default_rng(2)
    for _ in range(200):
        tp, fp, fn = (int(x) for x in rng.integers(0, 30, size=3))
        if 2 * tp + fp + fn == 0:
            continue
        d_tp, d_fp = baselines.f1_marginals(ConfusionCounts([tp], [fp], [fn]), 0)
        f = macro_f1_from_counts([tp], [fp], [fn])
        assert d_tp == pytest.approx(float(macro_f1_from_counts([tp + 1], [fp], [fn]) - f), abs=1e-15)
        assert d_fp == pytest.approx(float(f - macro_f1_from_counts([tp], [fp + 1], [fn])), abs=1e-15)


def test_f1_greedy_symmetric_counts_is_argmax():
    counts = ConfusionCounts([3] * 4, [1] * 4, [2] * 4)
    p = np.array([0.1, 0.4, 0.3, 0.2])
    assert baselines.f1_greedy_decision(p, counts) == 1


@settings(max_examples=200, deadline=None)
@given(data=forecasts(min_k=3, max_k=5, with_costs=False), seed=st.integers(0, 2**32 - 1))
def test_f1_greedy_matches_lookahead(data, seed):
    p, _, _ = data
    rng = np.random.default_rng(seed)
    K = len(p)
    tp, fp, fn = (rng.integers(0, 20, size=K) for _ in range(3))
    tp = tp + 1  # every D_k > 0
    values = f1_lookahead_values(p, tp.tolist(), fp.tolist(), fn.tolist())
    choice = baselines.f1_greedy_decision(p, ConfusionCounts(tp, fp, fn))
    assert float(max(values) - values[choice]) <= 1e-14


def test_f1_asymptotic_objective_agrees_at_large_counts():
    counts = ConfusionCounts(np.array([4000, 2500, 900]), np.array([800, 400, 300]), np.array([500, 600, 200]))
    p = np.array([0.5, 0.3, 0.2])
    exact = baselines.f1_objective(p, counts)
    asym = baselines.f1_asymptotic_objective(p, counts)
    d = counts.denominators.astype(float)
    # exact objective = 2 * asymptotic form + O(1/D^2)
    assert np.all(np.abs(exact - 2 * asym) <= 5 / d**2)
