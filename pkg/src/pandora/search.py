"""Ratio-rule sequential search simulator.

Classes are tested in descending order of ``p_k / c_k``; equal ratios go to
the lower class index. Ratios are compared by cross-multiplication. Forecasts
are clamped exactly as in :mod:`pandora.scoring`.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ConfigError, DomainError
from .scoring import _batch, clamp_probs, validate_probs


@dataclass(frozen=True)
class SearchTrace:
    """One simulated search, truncated at the step that tests the true class."""

    order: tuple[int, ...]
    step_costs: np.ndarray
    stop_step: int
    total_cost: float


@dataclass(frozen=True)
class TestCharacteristics:
    """Per-class sensitivity, false-positive rate and confirmatory workup cost."""

    __test__ = False  # keep pytest from collecting this class

    sensitivity: np.ndarray
    false_positive_rate: np.ndarray
    confirm_cost: np.ndarray

    def __post_init__(self):
        s, f, cc = (np.asarray(v, dtype=np.float64) for v in
                    (self.sensitivity, self.false_positive_rate, self.confirm_cost))
        if not (s.ndim == 1 and s.shape == f.shape == cc.shape):
            raise ConfigError("test characteristic vectors must be 1-D with equal length")
        if np.any((s < 0) | (s > 1)):
            raise DomainError("sensitivity must lie in [0, 1]")
        if np.any((f < 0) | (f >= 1)):
            raise DomainError("false-positive rate must lie in [0, 1)")
        if np.any(cc < 0):
            raise DomainError("confirmatory cost must be >= 0")
        object.__setattr__(self, "sensitivity", s)
        object.__setattr__(self, "false_positive_rate", f)
        object.__setattr__(self, "confirm_cost", cc)

    @classmethod
    def perfect(cls, K: int) -> "TestCharacteristics":
        return cls(np.ones(K), np.zeros(K), np.zeros(K))


@dataclass(frozen=True)
class TreatmentPayoffs:
    benefit: np.ndarray
    harm: np.ndarray
    untreated_cost: np.ndarray

    def __post_init__(self):
        vals = [np.asarray(v, dtype=np.float64) for v in (self.benefit, self.harm, self.untreated_cost)]
        if not (vals[0].ndim == 1 and vals[0].shape == vals[1].shape == vals[2].shape):
            raise ConfigError("payoff vectors must be 1-D with equal length")
        for name, v in zip(("benefit", "harm", "untreated_cost"), vals):
            object.__setattr__(self, name, v)


def check_costs(costs, K: int) -> np.ndarray:
    c = np.asarray(costs, dtype=np.float64)
    if c.shape != (K,):
        raise ConfigError(f"expected {K} costs, got shape {c.shape}")
    if not np.all(np.isfinite(c)) or np.any(c <= 0):
        raise DomainError("realised costs must be positive and finite")
    return c


def _cmp_ratio(p, c, a, b):
    lhs, rhs = p[a] * c[b], p[b] * c[a]
    if lhs != rhs:
        return -1 if lhs > rhs else 1
    return -1 if a < b else (1 if a > b else 0)


def search_order(probs, costs) -> list[int]:
    """Class indices sorted by ``p_k / c_k`` descending, ties by ascending index."""
    p = validate_probs(probs)
    if p.ndim != 1:
        raise DomainError("search_order takes a single forecast")
    p = clamp_probs(p)
    c = check_costs(costs, p.shape[0])
    key = functools.cmp_to_key(lambda a, b: _cmp_ratio(p, c, a, b))
    return sorted(range(p.shape[0]), key=key)


def simulate_search(probs, label: int, costs) -> SearchTrace:
    """Walk the ratio-rule order until the true class is tested."""
    order = search_order(probs, costs)
    K = len(order)
    if not 0 <= label < K:
        raise DomainError(f"label must lie in [0, {K})")
    c = np.asarray(costs, dtype=np.float64)
    stop = order.index(label)
    prefix = tuple(order[: stop + 1])
    step_costs = np.cumsum(c[list(prefix)])
    return SearchTrace(prefix, step_costs, stop, float(step_costs[-1]))


def search_costs(probs, labels, costs) -> np.ndarray:
    """Per-instance total search cost for a batch, through the compiled kernel.

    ``costs`` is one ``(K,)`` vector shared by all instances or an ``(n, K)``
    array with one realised cost vector per instance.
    """
    p, lab, _ = _batch(probs, labels)
    K = p.shape[1]
    c = np.asarray(costs, dtype=np.float64)
    c2 = np.atleast_2d(c)
    if c2.ndim != 2 or c2.shape[1] != K:
        raise ConfigError(f"cost vectors must have {K} entries, got shape {c.shape}")
    if p.shape[0] > 1 and c2.shape[0] not in (1, p.shape[0]):
        raise ConfigError("per-instance costs must match the number of forecasts")
    if not np.all(np.isfinite(c2)) or np.any(c2 <= 0):
        raise DomainError("realised costs must be positive and finite")
    totals, _ = _kernels.search_costs(
        np.ascontiguousarray(clamp_probs(p)), np.ascontiguousarray(lab), np.ascontiguousarray(c2)
    )
    return totals


def aggregate_cost(probs, labels, costs) -> float:
    """Mean simulated search cost over a labelled dataset.

    The sum is exactly rounded (``math.fsum``), so the result does not depend
    on how instances are partitioned or ordered.
    """
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 2 or p.shape[0] == 0:
        raise DomainError("aggregate_cost needs a non-empty (n, K) batch")
    totals = search_costs(p, labels, check_costs(costs, p.shape[1]))
    return math.fsum(totals) / totals.shape[0]


def effective_costs(base, tc: TestCharacteristics) -> np.ndarray:
    """Costs ``(c_k + f_k C_k) / s_k`` that fold imperfect tests into the ratio rule."""
    c = np.asarray(base, dtype=np.float64)
    if c.shape != tc.sensitivity.shape:
        raise ConfigError("test characteristics do not match the cost vector")
    if np.any(tc.sensitivity <= 0):
        raise DomainError("effective costs need strictly positive sensitivity")
    return (c + tc.false_positive_rate * tc.confirm_cost) / tc.sensitivity


def treatment_payoff(tc: TestCharacteristics, tp: TreatmentPayoffs, class_index: int) -> float:
    """Payoff ``s_j (B_j - r_j) - (1 - s_j) D_j`` of resolving true class ``j``.

    It depends only on the true class, so it is an order-invariant constant and
    is never added to simulated search totals.
    """
    K = tc.sensitivity.shape[0]
    if tp.benefit.shape[0] != K:
        raise ConfigError("payoffs do not match the test characteristics")
    if not 0 <= class_index < K:
        raise DomainError(f"class index must lie in [0, {K})")
    s = tc.sensitivity[class_index]
    j = class_index
    return float(s * (tp.benefit[j] - tp.harm[j]) - (1.0 - s) * tp.untreated_cost[j])
