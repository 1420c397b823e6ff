"""Standard comparison metrics and their implicit decision models.

Covers log loss with its parallel-decision and fixed-order search readings,
accuracy, and macro-F1 together with its greedy marginal-gain decision rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError
from .scoring import _batch, clamp_probs, validate_probs


def log_loss(probs, labels):
    """Negative log probability of the true class (clamped)."""
    p, lab, single = _batch(probs, labels)
    values = -np.log(clamp_probs(p[np.arange(p.shape[0]), lab]))
    return float(values[0]) if single else values


def _parallel_risk_matrix(p, lab):
    rows = np.arange(p.shape[0])
    risks = p.copy()
    risks[rows, lab] = p[rows, lab] - np.log(clamp_probs(p[rows, lab]))
    return risks


def parallel_risks(probs, label: int) -> np.ndarray:
    """Per-class risks of K independent threshold decisions under ``dc/c``.

    The true class carries ``p_i - ln p_i`` (treatment plus miss), every other
    class only its overtreatment risk ``p_k``. Only the logarithm sees the
    clamped probability.
    """
    p, lab, single = _batch(probs, label)
    if not single:
        raise DomainError("parallel_risks takes a single forecast")
    return _parallel_risk_matrix(p, lab)[0]


def parallel_decision_cost(probs, labels):
    """Total parallel-decision cost ``sum_k R_k``; collapses to ``1 - ln p_i`` on the simplex."""
    p, lab, single = _batch(probs, labels)
    values = _parallel_risk_matrix(p, lab).sum(axis=1)
    return float(values[0]) if single else values


def fixed_order_regret(probs, label: int, order, a: float = 1.0, b: float = 1.0) -> float:
    """Threshold regret of a fixed search order integrated against ``w(c) = a/c + b/(1-c)``.

    False step with conditional mass ``h``: ``(a - b) h - b ln(1 - h)``.
    True step: ``a (-ln h - (1 - h)) + b (1 - h)``.
    At ``a = b`` the sum telescopes to ``-a ln p_i`` for every order. Returns
    ``inf`` when a false step carries all remaining mass and ``b > 0``.
    """
    if a < 0 or b < 0 or a + b <= 0:
        raise DomainError("need a, b >= 0 with a + b > 0")
    p, lab, single = _batch(probs, label)
    if not single:
        raise DomainError("fixed_order_regret takes a single forecast")
    p = clamp_probs(p[0])
    K = p.shape[0]
    order = [int(k) for k in order]
    if sorted(order) != list(range(K)):
        raise DomainError(f"order must be a permutation of range({K})")
    true = int(lab[0])
    # remaining[t] = mass of classes not yet tested before step t
    remaining = np.concatenate([np.cumsum(p[order][::-1])[::-1], [0.0]])
    total = 0.0
    for t, k in enumerate(order):
        before, after = remaining[t], remaining[t + 1]
        h = p[k] / before
        if k == true:
            miss = after / before
            total += a * (-math.log(h) - miss) + b * miss
            return total
        if after == 0.0:
            if b > 0:
                return math.inf
            total += a * h
            continue
        total += (a - b) * h - b * (math.log(after) - math.log(before))
    raise AssertionError("unreachable: the true class is in the order")


def predictions(probs) -> np.ndarray:
    """Argmax predictions, lowest index on ties."""
    p = np.atleast_2d(validate_probs(probs))
    return np.argmax(p, axis=1)


def zero_one_loss(probs, labels):
    """``1 - accuracy`` per instance, usable as a (non-strictly proper) scorer."""
    p, lab, single = _batch(probs, labels)
    values = (np.argmax(p, axis=1) != lab).astype(np.float64)
    return float(values[0]) if single else values


def accuracy(probs, labels) -> float:
    p, lab, _ = _batch(probs, labels)
    if p.shape[0] == 0:
        raise DomainError("accuracy of an empty dataset")
    return float(np.mean(np.argmax(p, axis=1) == lab))


@dataclass(frozen=True)
class ConfusionCounts:
    """Per-class single-label confusion counts."""

    tp: np.ndarray
    fp: np.ndarray
    fn: np.ndarray

    def __post_init__(self):
        arrays = [np.asarray(v, dtype=np.int64) for v in (self.tp, self.fp, self.fn)]
        if not (arrays[0].ndim == 1 and arrays[0].shape == arrays[1].shape == arrays[2].shape):
            raise ConfigError("tp, fp and fn must be 1-D with equal length")
        if any(np.any(v < 0) for v in arrays):
            raise DomainError("confusion counts must be non-negative")
        for name, v in zip(("tp", "fp", "fn"), arrays):
            object.__setattr__(self, name, v)

    @classmethod
    def from_predictions(cls, labels, preds, K: int) -> "ConfusionCounts":
        labels = np.asarray(labels, dtype=np.int64)
        preds = np.asarray(preds, dtype=np.int64)
        hit = labels == preds
        tp = np.bincount(labels[hit], minlength=K)
        fp = np.bincount(preds[~hit], minlength=K)
        fn = np.bincount(labels[~hit], minlength=K)
        return cls(tp, fp, fn)

    @property
    def denominators(self) -> np.ndarray:
        return 2 * self.tp + self.fp + self.fn

    def f1(self) -> np.ndarray:
        """Per-class F1, with 0 for a class never present and never predicted."""
        d = self.denominators
        return np.divide(2.0 * self.tp, d, out=np.zeros(d.shape), where=d > 0)

    def macro_f1(self) -> float:
        return float(np.mean(self.f1()))


def macro_f1(probs, labels) -> float:
    p, lab, _ = _batch(probs, labels)
    if p.shape[0] == 0:
        raise DomainError("macro-F1 of an empty dataset")
    counts = ConfusionCounts.from_predictions(lab, np.argmax(p, axis=1), p.shape[1])
    return counts.macro_f1()


def f1_marginals(counts: ConfusionCounts, k: int) -> tuple[float, float]:
    """Exact change in ``F1_k`` from one more TP, and the magnitude from one more FP (or FN)."""
    tp, fp, fn = int(counts.tp[k]), int(counts.fp[k]), int(counts.fn[k])
    d = 2 * tp + fp + fn
    if d == 0:
        raise DomainError(f"F1 marginals undefined for class {k} with no counts")
    return 2.0 * (fp + fn) / (d * (d + 2)), 2.0 * tp / (d * (d + 1))


def f1_objective(probs, counts: ConfusionCounts) -> np.ndarray:
    """Per-class objective ``p_k (dTP_k + 2|dFP_k|) - |dFP_k|`` of the greedy macro-F1 rule."""
    p = validate_probs(probs)
    if p.ndim != 1:
        raise DomainError("f1_objective takes a single forecast")
    K = p.shape[0]
    if counts.tp.shape[0] != K:
        raise ConfigError("confusion counts do not match the forecast")
    out = np.empty(K)
    for k in range(K):
        d_tp, d_fp = f1_marginals(counts, k)
        out[k] = p[k] * (d_tp + 2.0 * d_fp) - d_fp
    return out


def f1_greedy_decision(probs, counts: ConfusionCounts) -> int:
    """Class that maximises the expected one-step gain in macro-F1."""
    return int(np.argmax(f1_objective(probs, counts)))


def f1_asymptotic_objective(probs, counts: ConfusionCounts) -> np.ndarray:
    """Large-count form ``(p_k - F1_k / 2) / D_k`` of the greedy rule, for limit checks."""
    p = validate_probs(probs)
    d = counts.denominators.astype(np.float64)
    if np.any(d == 0):
        raise DomainError("asymptotic objective needs every D_k > 0")
    return (p - counts.f1() / 2.0) / d
