"""Closed-form search-cost scoring rules.

All scorers accept either one forecast (``probs`` of shape ``(K,)`` with an
integer ``label``) or a batch (``probs`` of shape ``(n, K)`` with ``labels``
of shape ``(n,)``) and return a float or an ``(n,)`` array accordingly.

Probabilities are clamped to ``PROB_FLOOR`` before any ratio is formed; the
vector is not renormalised.
"""

from __future__ import annotations

import enum
import math
from typing import Union

import numpy as np

from .errors import ConfigError, DomainError, UnsupportedError

PROB_FLOOR = 1e-12
SUM_TOLERANCE = 1e-9


class Limit(str, enum.Enum):
    """Symbolic endpoints of the Beta(alpha, 1) family."""

    ZERO = "zero_limit"
    INFINITY = "infinity_limit"


Alpha = Union[float, Limit]

_ALPHA_ALIASES = {
    "zero": Limit.ZERO,
    "zero_limit": Limit.ZERO,
    "0+": Limit.ZERO,
    "inf": Limit.INFINITY,
    "infinity": Limit.INFINITY,
    "infinity_limit": Limit.INFINITY,
}


def parse_alpha(alpha) -> Alpha:
    """Normalise ``alpha`` to a positive finite float or a :class:`Limit`.

    Strings ``"zero"``/``"0+"`` and ``"inf"`` name the endpoint limits, and a
    float ``inf`` is read as the upper limit.
    """
    if isinstance(alpha, Limit):
        return alpha
    if isinstance(alpha, str):
        key = alpha.strip().lower()
        if key in _ALPHA_ALIASES:
            return _ALPHA_ALIASES[key]
        try:
            alpha = float(key)
        except ValueError:
            raise DomainError(f"cannot interpret alpha={alpha!r}") from None
    alpha = float(alpha)
    if math.isinf(alpha) and alpha > 0:
        return Limit.INFINITY
    if not alpha > 0 or math.isnan(alpha):
        raise DomainError(f"alpha must be > 0, got {alpha}")
    return alpha


def _finite_alpha(alpha) -> float:
    alpha = parse_alpha(alpha)
    if isinstance(alpha, Limit):
        raise DomainError(f"a finite alpha is required, got {alpha.value}")
    return alpha


def clamp_probs(probs) -> np.ndarray:
    return np.maximum(np.asarray(probs, dtype=np.float64), PROB_FLOOR)


def validate_probs(probs) -> np.ndarray:
    """Check simplex membership row-wise and return a float64 array."""
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim not in (1, 2):
        raise DomainError(f"probabilities must be 1-D or 2-D, got shape {p.shape}")
    if p.shape[-1] < 2:
        raise DomainError(f"need at least 2 classes, got K={p.shape[-1]}")
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise DomainError("probabilities must be finite and non-negative")
    dev = np.abs(p.sum(axis=-1) - 1.0)
    if np.any(dev > SUM_TOLERANCE):
        raise DomainError(f"probabilities must sum to 1 (max deviation {dev.max():.3g})")
    return p


def _batch(probs, labels):
    """Validate and lift to ``(n, K)`` / ``(n,)``; returns a flag for scalar input."""
    p = validate_probs(probs)
    single = p.ndim == 1
    p = np.atleast_2d(p)
    lab = np.atleast_1d(np.asarray(labels))
    if not np.issubdtype(lab.dtype, np.integer):
        if np.any(lab != np.floor(lab)):
            raise DomainError("labels must be integers")
        lab = lab.astype(np.int64)
    if lab.shape[0] == 1 and p.shape[0] > 1:
        lab = np.broadcast_to(lab, (p.shape[0],))
    if lab.shape != (p.shape[0],):
        raise ConfigError(f"{lab.shape[0]} labels for {p.shape[0]} forecasts")
    K = p.shape[1]
    if np.any(lab < 0) or np.any(lab >= K):
        raise DomainError(f"labels must lie in [0, {K})")
    return p, lab.astype(np.int64), single


def _unit_or(costs, K) -> np.ndarray:
    if costs is None:
        return np.ones(K)
    c = np.asarray(costs, dtype=np.float64)
    if c.shape != (K,):
        raise ConfigError(f"expected {K} base costs, got shape {c.shape}")
    if not np.all(np.isfinite(c)) or np.any(c <= 0):
        raise DomainError("base costs must be positive and finite")
    return c


def _out(values, single):
    return float(values[0]) if single else values


def pairwise_loss(alpha, r):
    """Normalised pairwise loss ``L_alpha(r)`` of the true-vs-distractor odds ratio.

    For finite ``alpha``::

        L(r) = 1 + (1 + 1/alpha) (1 - r**alpha)   r <= 1
        L(r) = r ** -(alpha + 1)                  r >  1

    ``Limit.ZERO`` gives ``1 - ln r`` / ``1/r`` and ``Limit.INFINITY`` the
    step ``2, 1, 0`` for ``r <, =, > 1``. Powers are taken in log space
    (``expm1`` on the left branch), so very large ``alpha`` saturates to the
    step limit instead of overflowing.
    """
    alpha = parse_alpha(alpha)
    r_arr = np.asarray(r, dtype=np.float64)
    if np.any(~(r_arr > 0)):
        raise DomainError("odds ratio must be > 0")
    with np.errstate(over="ignore", under="ignore", invalid="ignore"):
        if alpha is Limit.ZERO:
            out = np.where(r_arr <= 1, 1.0 - np.log(r_arr), 1.0 / r_arr)
        elif alpha is Limit.INFINITY:
            out = np.where(r_arr < 1, 2.0, np.where(r_arr == 1, 1.0, 0.0))
        else:
            log_r = np.log(r_arr)
            left = 1.0 - (1.0 + 1.0 / alpha) * np.expm1(alpha * log_r)
            right = np.exp(-(alpha + 1.0) * log_r)
            out = np.where(r_arr <= 1, left, right)
    return float(out) if out.ndim == 0 else out


def b_alpha(alpha) -> float:
    """Scale linking the normalised Beta score to raw search cost, ``alpha^2/((alpha+1)(2 alpha+1))``."""
    a = _finite_alpha(alpha)
    return a * a / ((a + 1.0) * (2.0 * a + 1.0))


def _odds_ratios(p, labels, costs):
    """``(q_i / q_j)`` for every row and class, with ``q = p / C``."""
    q = clamp_probs(p) / costs
    qi = q[np.arange(q.shape[0]), labels]
    return qi[:, None] / q


def _distractors(labels, K):
    mask = np.ones((labels.shape[0], K), dtype=bool)
    mask[np.arange(labels.shape[0]), labels] = False
    return mask


def beta_score(probs, labels, alpha=1.0, costs=None):
    """Weighted Beta score ``sum_{j != i} C_j L_alpha((p_i/C_i) / (p_j/C_j))``.

    ``costs`` defaults to unit costs. With unit costs and ``alpha=1`` this is
    ``3 (K - 1)`` times :func:`pandora_regret`.
    """
    alpha = parse_alpha(alpha)
    p, lab, single = _batch(probs, labels)
    K = p.shape[1]
    c = _unit_or(costs, K)
    loss = pairwise_loss(alpha, _odds_ratios(p, lab, c))
    values = np.where(_distractors(lab, K), c * loss, 0.0).sum(axis=1)
    return _out(values, single)


def pandora_regret(probs, labels):
    """Pandora's Regret: unit-cost, ``alpha=1`` Beta score scaled by ``1/(3(K-1))``.

    Lies in ``[0, 1]``; a uniform forecast scores exactly ``1/3``.
    """
    p, lab, single = _batch(probs, labels)
    K = p.shape[1]
    loss = pairwise_loss(1.0, _odds_ratios(p, lab, np.ones(K)))
    values = np.where(_distractors(lab, K), loss, 0.0).sum(axis=1) / (3.0 * (K - 1))
    return _out(values, single)


def rescaled_beta_score(probs, labels, alpha=1.0):
    """Unit-cost Beta score with the ``1/(3(K-1))`` scaling used for Pandora's Regret.

    Equals :func:`pandora_regret` at ``alpha=1``. For other ``alpha`` the
    constant 3 is a presentation choice; :func:`beta_score` carries the scale
    that makes the affine link to search cost exact.
    """
    p, lab, single = _batch(probs, labels)
    K = p.shape[1]
    values = np.asarray(beta_score(p, lab, alpha)) / (3.0 * (K - 1))
    return _out(values, single)


def raw_expected_cost(probs, labels, alpha=1.0, costs=None):
    """Expected optimal search cost when realised costs are ``C_k u_k``, ``u_k ~ Beta(alpha, 1)`` iid.

    Finite ``alpha``: ``alpha/(alpha+1) C_i + b_alpha * beta_score``.
    ``Limit.INFINITY``: ``C_i + sum_j C_j h(s_j, s_i)`` with ``s = p / C`` and
    ``h`` scoring ties as one half.
    ``Limit.ZERO`` raises :class:`UnsupportedError` since the raw cost
    degenerates there.
    """
    alpha = parse_alpha(alpha)
    if alpha is Limit.ZERO:
        raise UnsupportedError("raw expected cost is degenerate in the alpha -> 0 limit")
    p, lab, single = _batch(probs, labels)
    K = p.shape[1]
    c = _unit_or(costs, K)
    rows = np.arange(p.shape[0])
    if alpha is Limit.INFINITY:
        s = clamp_probs(p) / c
        si = s[rows, lab][:, None]
        h = (s > si) + 0.5 * (s == si)
        extra = np.where(_distractors(lab, K), c * h, 0.0).sum(axis=1)
        values = c[lab] + extra
    else:
        values = alpha / (alpha + 1.0) * c[lab] + b_alpha(alpha) * np.asarray(
            beta_score(p, lab, alpha, c)
        )
    return _out(values, single)


def pairwise_gradient(alpha, delta):
    """Derivative of ``L_alpha(exp(z_i - z_j))`` with respect to the distractor logit ``z_j``.

    Peaks at ``alpha + 1`` when ``delta = z_i - z_j`` is zero and decays at rate
    ``alpha`` (behind) or ``alpha + 1`` (ahead).
    """
    a = _finite_alpha(alpha)
    d = np.asarray(delta, dtype=np.float64)
    with np.errstate(over="ignore", under="ignore"):
        out = (a + 1.0) * np.where(d <= 0, np.exp(a * d), np.exp(-(a + 1.0) * d))
    return float(out) if out.ndim == 0 else out
