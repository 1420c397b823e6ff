"""Numerical verification engines.

Monte Carlo estimates of expected optimal search cost under a cost prior,
a per-draw check of the pairwise cost decomposition, Bayes-risk scans on a
simplex lattice, and a finite-difference check of the pairwise gradient.

Random draws come from numpy's PCG64 bit generator seeded with
``SeedSequence([seed, worker_index])``; see :data:`RNG_ALGORITHM`.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from . import _kernels
from .errors import ConfigError, DomainError, UnsupportedError
from .scoring import _batch, clamp_probs, pairwise_gradient, pairwise_loss, validate_probs

RNG_ALGORITHM = "numpy.random.PCG64/SeedSequence([seed, worker])"
MIN_SAMPLES = 1000
_CHUNK = 1 << 16

Scorer = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class CostPrior:
    """Distribution of realised cost vectors.

    ``kind`` is one of ``uniform01_iid``, ``beta_iid``, ``scaled_beta`` or
    ``empirical``. Beta(alpha, 1) unit costs are drawn by inverse CDF,
    ``u = U ** (1 / alpha)``.
    """

    kind: str
    seed: int
    alpha: Optional[float] = None
    base_costs: Optional[np.ndarray] = None
    samples: Optional[np.ndarray] = None

    KINDS = ("uniform01_iid", "beta_iid", "scaled_beta", "empirical")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ConfigError(f"unknown prior kind {self.kind!r}")
        if not isinstance(self.seed, (int, np.integer)) or not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.kind in ("beta_iid", "scaled_beta"):
            if self.alpha is None or not (self.alpha > 0 and math.isfinite(self.alpha)):
                raise ConfigError("Beta priors need a finite alpha > 0")
        if self.kind == "scaled_beta":
            c = np.asarray(self.base_costs, dtype=np.float64)
            if c.ndim != 1 or np.any(c <= 0) or not np.all(np.isfinite(c)):
                raise ConfigError("scaled_beta needs positive base costs")
            object.__setattr__(self, "base_costs", c)
        if self.kind == "empirical":
            s = np.atleast_2d(np.asarray(self.samples, dtype=np.float64))
            if s.size == 0 or np.any(s <= 0) or not np.all(np.isfinite(s)):
                raise ConfigError("empirical prior needs a non-empty set of positive cost vectors")
            object.__setattr__(self, "samples", s)

    @classmethod
    def uniform(cls, seed: int) -> "CostPrior":
        return cls("uniform01_iid", seed)

    @classmethod
    def beta(cls, alpha: float, seed: int) -> "CostPrior":
        return cls("beta_iid", seed, alpha=alpha)

    @classmethod
    def scaled_beta(cls, alpha: float, base_costs, seed: int) -> "CostPrior":
        return cls("scaled_beta", seed, alpha=alpha, base_costs=base_costs)

    @classmethod
    def empirical(cls, samples, seed: int) -> "CostPrior":
        return cls("empirical", seed, samples=samples)

    @property
    def strictness_note(self) -> str:
        if self.kind == "empirical":
            return "proper but typically not strictly proper (finitely supported prior)"
        return "strictly proper (continuous prior with full-support cost ratios)"

    def check_dimension(self, K: int) -> None:
        width = {"scaled_beta": self.base_costs, "empirical": self.samples}.get(self.kind)
        if width is not None and width.shape[-1] != K:
            raise ConfigError(f"prior has {width.shape[-1]} classes, forecast has {K}")

    def draw(self, rng: np.random.Generator, n: int, K: int) -> np.ndarray:
        if self.kind == "empirical":
            return self.samples[rng.integers(0, self.samples.shape[0], size=n)]
        u = rng.random((n, K))
        if self.kind == "uniform01_iid":
            return u
        u = u ** (1.0 / self.alpha)
        return u * self.base_costs if self.kind == "scaled_beta" else u

    def describe(self) -> dict:
        out = {"kind": self.kind, "seed": int(self.seed), "rng": RNG_ALGORITHM}
        if self.alpha is not None:
            out["alpha"] = self.alpha
        if self.base_costs is not None:
            out["base_costs"] = self.base_costs.tolist()
        if self.samples is not None:
            out["n_support"] = int(self.samples.shape[0])
        return out


class MCEstimate(NamedTuple):
    mean: float
    std_error: float


def _worker_rng(seed: int, worker: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), worker])))


def _partition(n: int, workers: int) -> list[int]:
    base, extra = divmod(n, workers)
    return [base + (w < extra) for w in range(workers)]


def _draw_costs(prior: CostPrior, n_samples: int, K: int, n_workers: int):
    """Yield (worker, cost block) pairs in a fixed order."""
    for w, share in enumerate(_partition(n_samples, n_workers)):
        rng = _worker_rng(prior.seed, w)
        for start in range(0, share, _CHUNK):
            yield w, prior.draw(rng, min(_CHUNK, share - start), K)


def _single(probs, label):
    p, lab, single = _batch(probs, label)
    if not single:
        raise DomainError("expected a single forecast")
    return np.ascontiguousarray(clamp_probs(p)), np.ascontiguousarray(lab)


def _check_samples(n_samples: int, n_workers: int) -> None:
    if n_samples < MIN_SAMPLES:
        raise ConfigError(f"need at least {MIN_SAMPLES} samples, got {n_samples}")
    if n_workers < 1:
        raise ConfigError("n_workers must be >= 1")


def simulated_costs(probs, label: int, prior: CostPrior, n_samples: int, n_workers: int = 1) -> np.ndarray:
    """Realised optimal search cost for each of ``n_samples`` prior draws."""
    _check_samples(n_samples, n_workers)
    p, lab = _single(probs, label)
    K = p.shape[1]
    prior.check_dimension(K)

    def run(w):
        rng = _worker_rng(prior.seed, w)
        share = _partition(n_samples, n_workers)[w]
        out = []
        for start in range(0, share, _CHUNK):
            block = prior.draw(rng, min(_CHUNK, share - start), K)
            out.append(_kernels.search_costs(p, lab, np.ascontiguousarray(block))[0])
        return np.concatenate(out) if out else np.empty(0)

    if n_workers == 1:
        parts = [run(0)]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            parts = list(pool.map(run, range(n_workers)))
    return np.concatenate(parts)


def _mean_and_se(values: np.ndarray) -> MCEstimate:
    # shift by the first value so a degenerate prior returns it exactly with SE 0
    x0 = float(values[0])
    dev = values - x0
    n = values.shape[0]
    mean = x0 + math.fsum(dev) / n
    var = float(np.var(dev, ddof=1))
    return MCEstimate(mean, math.sqrt(var / n))


def mc_expected_cost(probs, label: int, prior: CostPrior, n_samples: int, n_workers: int = 1) -> MCEstimate:
    """Monte Carlo mean and standard error of the optimal search cost under ``prior``.

    Deterministic for a fixed ``(seed, n_samples, n_workers)``.
    """
    return _mean_and_se(simulated_costs(probs, label, prior, n_samples, n_workers))


@dataclass(frozen=True)
class DecompositionReport:
    n_samples: int
    n_tie_draws: int
    max_abs_diff_untied: float
    aggregate_diff: float
    mean_direct: float
    mean_decomposed: float
    tie_mean_direct: float
    tie_mean_decomposed: float
    tie_mean_order_average: float
    prior: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        tie_ok = self.n_tie_draws == 0 or math.isclose(
            self.tie_mean_decomposed, self.tie_mean_order_average, rel_tol=1e-12, abs_tol=1e-12
        )
        return self.max_abs_diff_untied == 0.0 and abs(self.aggregate_diff) <= 1e-12 and tie_ok


def _sequential_row_sum(values: np.ndarray) -> np.ndarray:
    # sort each row, then add left to right: equal multisets give equal sums
    s = np.sort(values, axis=1)
    total = np.zeros(s.shape[0])
    for k in range(s.shape[1]):
        total = total + s[:, k]
    return total


def pairwise_decomposition_check(probs, label: int, prior: CostPrior, n_samples: int) -> DecompositionReport:
    """Compare simulated search cost with ``c_i + sum_j c_j h(c_i/c_j, p_i/p_j)`` draw by draw.

    The direct route reads the set of tested classes off the search order
    returned by the sorting kernel. The decomposed route evaluates the
    pairwise threshold ``h`` on cost ratios (a tie counts one half). Both
    sums are formed from sorted terms, so on tie-free draws they must be
    bitwise equal. On tie draws the decomposition equals the average of the
    two tie orders, which is reported separately.
    """
    _check_samples(n_samples, 1)
    p, lab = _single(probs, label)
    K = p.shape[1]
    i = int(lab[0])
    prior.check_dimension(K)
    direct, decomposed, tie_avg, ties = [], [], [], []
    for _, c in _draw_costs(prior, n_samples, K, 1):
        c = np.ascontiguousarray(c)
        orders = _kernels.search_orders(p, c)
        pos = np.argsort(orders, axis=1)
        tested = pos <= pos[:, [i]]
        direct.append(_sequential_row_sum(np.where(tested, c, 0.0)))
        # h(c_i / c_j, p_i / p_j) via cross-multiplication
        lhs = c[:, [i]] * p[0]
        rhs = p[0, i] * c
        h = (lhs > rhs) + 0.5 * (lhs == rhs)
        h[:, i] = 1.0
        decomposed.append(_sequential_row_sum(c * h))
        tie = ((lhs == rhs).sum(axis=1) - 1) > 0
        ties.append(tie)
        # alternative order on ties: tied distractors tested before i, or after
        before = np.where(lhs > rhs, c, 0.0).sum(axis=1) + c[:, i]
        tied_mass = np.where(lhs == rhs, c, 0.0).sum(axis=1) - c[:, i]
        tie_avg.append(before + 0.5 * tied_mass)
    direct, decomposed = np.concatenate(direct), np.concatenate(decomposed)
    ties, tie_avg = np.concatenate(ties), np.concatenate(tie_avg)
    untied = ~ties
    n_ties = max(int(ties.sum()), 1)
    diff = direct - decomposed
    return DecompositionReport(
        n_samples=n_samples,
        n_tie_draws=int(ties.sum()),
        max_abs_diff_untied=float(np.abs(diff[untied]).max()) if untied.any() else 0.0,
        aggregate_diff=math.fsum(diff[untied]) / n_samples,
        mean_direct=math.fsum(direct) / n_samples,
        mean_decomposed=math.fsum(decomposed) / n_samples,
        tie_mean_direct=math.fsum(direct[ties]) / n_ties,
        tie_mean_decomposed=math.fsum(decomposed[ties]) / n_ties,
        tie_mean_order_average=math.fsum(tie_avg[ties]) / n_ties,
        prior=prior.describe(),
    )


def bayes_risk(candidate, true_dist, scorer: Scorer):
    """Expected score ``sum_k pi_k S(candidate, k)`` under true label distribution ``pi``.

    ``candidate`` may be a batch of shape ``(n, K)``; ``scorer`` must accept
    batched forecasts with an array of labels.
    """
    cand = validate_probs(candidate)
    pi = validate_probs(true_dist)
    if pi.ndim != 1 or cand.shape[-1] != pi.shape[0]:
        raise ConfigError("candidate and true distribution dimensions differ")
    single = cand.ndim == 1
    cand = np.atleast_2d(cand)
    n, K = cand.shape
    risk = np.zeros(n)
    for k in range(K):
        risk = risk + pi[k] * np.asarray(scorer(cand, np.full(n, k)), dtype=np.float64)
    return float(risk[0]) if single else risk


def simplex_grid(K: int, resolution: float) -> np.ndarray:
    """Barycentric lattice on the closed simplex with spacing ``resolution``."""
    m = int(round(1.0 / resolution))
    if m < 1 or not math.isclose(m * resolution, 1.0, rel_tol=1e-9):
        raise ConfigError("resolution must divide 1 evenly")
    if K == 2:
        counts = np.stack([np.arange(m + 1), m - np.arange(m + 1)], axis=1)
    elif K == 3:
        counts = np.array([(a, b, m - a - b) for a in range(m + 1) for b in range(m + 1 - a)])
    else:
        raise UnsupportedError("grid scans are limited to K in {2, 3}")
    return counts / m


@dataclass(frozen=True)
class BayesRiskGrid:
    true_dist: np.ndarray
    resolution: float
    points: np.ndarray
    risks: np.ndarray


@dataclass(frozen=True)
class ProprietyScan:
    """Outcome of a Bayes-risk lattice scan around the true distribution.

    ``verdict`` is ``PASS`` when the truth beats every grid point at L1
    distance ``>= 2 * resolution`` by more than ``10 * eps * |risk|``,
    ``NON-STRICT`` when it is a minimiser but some distant point ties it, and
    ``FAIL`` when some grid point has lower risk.
    """

    grid: BayesRiskGrid
    verdict: str
    risk_at_truth: float
    margin: float
    n_far_points: int
    n_plateau_points: int
    best_point: np.ndarray

    @property
    def strict(self) -> bool:
        return self.verdict == "PASS"


def propriety_scan(true_dist, scorer: Scorer, resolution: float = 0.01) -> ProprietyScan:
    pi = validate_probs(true_dist)
    if pi.ndim != 1:
        raise DomainError("true distribution must be a single forecast")
    K = pi.shape[0]
    if K > 3:
        raise UnsupportedError("grid scans are limited to K in {2, 3}")
    if not 0 < resolution <= 0.02:
        raise ConfigError("resolution must lie in (0, 0.02]")
    points = simplex_grid(K, resolution)
    risks = np.asarray(bayes_risk(points, pi, scorer))
    r_star = float(bayes_risk(pi, pi, scorer))
    tol = 10.0 * np.finfo(float).eps * max(abs(r_star), np.finfo(float).tiny)
    far = np.abs(points - pi).sum(axis=1) >= 2.0 * resolution - 1e-12
    gaps = risks - r_star
    margin = float(gaps[far].min())
    plateau = int((np.abs(gaps[far]) <= tol).sum())
    if np.any(gaps < -tol):
        verdict = "FAIL"
    elif margin > tol:
        verdict = "PASS"
    else:
        verdict = "NON-STRICT"
    return ProprietyScan(
        grid=BayesRiskGrid(pi, resolution, points, risks),
        verdict=verdict,
        risk_at_truth=r_star,
        margin=margin,
        n_far_points=int(far.sum()),
        n_plateau_points=plateau,
        best_point=points[int(np.argmin(risks))],
    )


@dataclass(frozen=True)
class GradientCheck:
    alpha: float
    n_points: int
    max_rel_error: float
    worst_delta: float
    kink_excluded: float
    step: float


def gradient_check(alpha: float, n_points: int, seed: int = 0, *, step: float = 1e-6,
                   delta_range: float = 2.0, kink: float = 1e-4) -> GradientCheck:
    """Worst relative error of the analytic pairwise gradient against central differences.

    Logit gaps are drawn uniformly on ``[-delta_range, delta_range]``; draws
    with ``|delta| < kink`` are redrawn so the kink at zero is never straddled.
    """
    if n_points < 10:
        raise ConfigError("gradient check needs at least 10 points")
    rng = _worker_rng(seed, 0)
    deltas = np.empty(0)
    while deltas.shape[0] < n_points:
        d = rng.uniform(-delta_range, delta_range, size=n_points)
        deltas = np.concatenate([deltas, d[np.abs(d) >= kink]])
    deltas = deltas[:n_points]
    analytic = pairwise_gradient(alpha, deltas)
    upper = pairwise_loss(alpha, np.exp(deltas + step))
    lower = pairwise_loss(alpha, np.exp(deltas - step))
    numeric = -(upper - lower) / (2.0 * step)
    rel = np.abs(analytic - numeric) / np.abs(numeric)
    worst = int(np.argmax(rel))
    return GradientCheck(float(alpha), n_points, float(rel[worst]), float(deltas[worst]), kink, step)
