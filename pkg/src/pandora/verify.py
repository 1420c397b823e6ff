"""Named verification suites that back the ``verify`` command."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import baselines, scoring
from .errors import ConfigError
from .propriety import (
    CostPrior,
    gradient_check,
    mc_expected_cost,
    pairwise_decomposition_check,
    propriety_scan,
)
from .scoring import Limit

SUITES = ("oracle", "propriety", "gradient", "amnesia", "decomposition")


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""

    @property
    def status(self) -> str:
        return "PASS" if self.passed else "FAIL"

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "check": self.name,
            "status": self.status,
            "value": self.value,
            "tolerance": self.tolerance,
            "detail": self.detail,
        }


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), 1000 + stream])))


def _fmt_probs(p) -> str:
    return "(" + ", ".join(f"{x:.4g}" for x in p) + ")"


def oracle_suite(seed: int, n_samples: int, alpha) -> list[Check]:
    """Monte Carlo search cost against the closed-form expected cost, 3 standard errors."""
    alpha = scoring.parse_alpha(alpha)
    if isinstance(alpha, Limit):
        raise ConfigError("the oracle suite needs a finite alpha")
    rng = _rng(seed, 0)
    cases = [(np.array([0.5, 0.5]), 0)]
    for K in (3, 5):
        p = rng.dirichlet(np.ones(K))
        cases.append((p, int(rng.integers(K))))
    checks = []
    for n, (p, i) in enumerate(cases):
        prior = CostPrior.uniform(seed + n) if alpha == 1.0 else CostPrior.beta(alpha, seed + n)
        est = mc_expected_cost(p, i, prior, n_samples)
        closed = scoring.raw_expected_cost(p, i, alpha)
        z = abs(est.mean - closed) / est.std_error
        checks.append(Check(
            "oracle", f"mc_vs_closed_form[alpha={alpha:g},K={p.shape[0]},case={n}]", z <= 3.0, z, 3.0,
            f"p={_fmt_probs(p)} true={i} mc={est.mean:.6g}+-{est.std_error:.2g} closed={closed:.6g}",
        ))
    return checks


def propriety_suite(seed: int, alpha) -> list[Check]:
    """Lattice scans: strict scores must PASS, rank-only scores must be NON-STRICT."""
    alpha = scoring.parse_alpha(alpha)
    rng = _rng(seed, 1)
    pis = [np.array([0.6, 0.4]), rng.dirichlet(np.full(3, 2.0))]
    strict: list[tuple[str, Callable]] = [("pandora_regret", scoring.pandora_regret)]
    if not isinstance(alpha, Limit) or alpha is Limit.ZERO:
        strict.append((f"beta_score[alpha={getattr(alpha, 'value', alpha)}]",
                       lambda p, y: scoring.beta_score(p, y, alpha)))
    flat = [
        ("beta_score[infinity_limit]", lambda p, y: scoring.beta_score(p, y, Limit.INFINITY)),
        ("zero_one_loss", baselines.zero_one_loss),
    ]
    checks = []
    for pi in pis:
        for name, fn in strict:
            scan = propriety_scan(pi, fn, 0.01)
            checks.append(Check("propriety", f"strict[{name},K={pi.shape[0]}]", scan.verdict == "PASS",
                                scan.margin, 0.0, f"pi={_fmt_probs(pi)} verdict={scan.verdict}"))
    for name, fn in flat:
        scan = propriety_scan(pis[0], fn, 0.01)
        checks.append(Check("propriety", f"non_strict[{name}]", scan.verdict == "NON-STRICT",
                            float(scan.n_plateau_points), 0.0,
                            f"pi={_fmt_probs(pis[0])} verdict={scan.verdict}"))
    return checks


def gradient_suite(seed: int, alpha) -> list[Check]:
    alpha = scoring.parse_alpha(alpha)
    if isinstance(alpha, Limit):
        raise ConfigError("the gradient suite needs a finite alpha")
    res = gradient_check(alpha, 200, seed)
    return [Check("gradient", f"finite_difference[alpha={alpha:g}]", res.max_rel_error < 1e-5,
                  res.max_rel_error, 1e-5,
                  f"200 points, step {res.step:g}, |delta| < {res.kink_excluded:g} excluded (kink)")]


def amnesia_suite(seed: int, n_instances: int = 50) -> list[Check]:
    """Order invariance of log-loss regret at a = b, its failure at a != b, and the parallel identity."""
    rng = _rng(seed, 2)
    worst, spread = 0.0, 0.0
    for _ in range(n_instances):
        K = int(rng.integers(2, 5))
        p = rng.dirichlet(np.ones(K))
        i = int(rng.integers(K))
        target = -math.log(max(p[i], scoring.PROB_FLOOR))
        vals = [baselines.fixed_order_regret(p, i, o) for o in itertools.permutations(range(K))]
        worst = max(worst, max(abs(v - target) for v in vals) / max(1.0, abs(target)))
        skew = [baselines.fixed_order_regret(p, i, o, 2.0, 1.0) for o in itertools.permutations(range(K))]
        spread = max(spread, max(skew) - min(skew))
    probs = rng.dirichlet(np.ones(5), size=1000)
    labels = rng.integers(0, 5, size=1000)
    gap = np.abs(baselines.parallel_decision_cost(probs, labels) - baselines.log_loss(probs, labels) - 1.0).max()
    return [
        Check("amnesia", "fixed_order_invariance[a=b=1]", worst <= 1e-10, worst, 1e-10,
              f"{n_instances} instances, all orders, K <= 4"),
        Check("amnesia", "knife_edge_spread[a=2,b=1]", spread > 1e-3, spread, 1e-3,
              "largest spread over orders must exceed the tolerance"),
        Check("amnesia", "parallel_identity", gap <= 1e-12, float(gap), 1e-12,
              "parallel decision cost minus log loss equals 1"),
    ]


def decomposition_suite(seed: int, n_samples: int) -> list[Check]:
    rng = _rng(seed, 3)
    K = 4
    p = rng.dirichlet(np.ones(K))
    i = int(rng.integers(K))
    rep = pairwise_decomposition_check(p, i, CostPrior.uniform(seed), min(n_samples, 100_000))
    tie = pairwise_decomposition_check(
        np.array([0.5, 0.5]), 1, CostPrior.empirical([[1.0, 1.0], [2.0, 1.0]], seed), 10_000
    )
    return [
        Check("decomposition", "per_draw_identity", rep.passed, rep.max_abs_diff_untied, 0.0,
              f"{rep.n_samples} draws, aggregate diff {rep.aggregate_diff:.3g}"),
        Check("decomposition", "tie_half_weight", tie.passed and tie.n_tie_draws > 0,
              abs(tie.tie_mean_decomposed - tie.tie_mean_order_average), 1e-12,
              f"{tie.n_tie_draws} tie draws; {tie.n_samples} total"),
    ]


def run_suites(suites, seed: int, n_samples: int, alpha=1.0) -> list[Check]:
    chosen = SUITES if "all" in suites else tuple(suites)
    unknown = set(chosen) - set(SUITES)
    if unknown:
        raise ConfigError(f"unknown suites: {sorted(unknown)}")
    checks: list[Check] = []
    for suite in chosen:
        if suite == "oracle":
            checks += oracle_suite(seed, n_samples, alpha)
        elif suite == "propriety":
            checks += propriety_suite(seed, alpha)
        elif suite == "gradient":
            checks += gradient_suite(seed, alpha)
        elif suite == "amnesia":
            checks += amnesia_suite(seed)
        elif suite == "decomposition":
            checks += decomposition_suite(seed, n_samples)
    return checks
