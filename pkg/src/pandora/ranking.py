"""Metric meta-evaluation on a synthetic model zoo.

Models are ranked by each metric and by aggregate simulated search cost;
agreement is Kendall's tau-b, reported in absolute value with instance
bootstrap confidence intervals.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .baselines import log_loss
from .errors import ConfigError, DomainError
from .scoring import PROB_FLOOR, pandora_regret
from .search import search_costs

METRICS = ("pandora_regret", "log_loss", "accuracy", "macro_f1")
SELF_METRIC = "simulated_cost"
CONDITION_KINDS = ("clinical", "well_specified", "random_temperature", "distractor_temperature")


def _rng(*key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(k) for k in key])))


def kendall_tau(a: Sequence[float], b: Sequence[float]) -> float:
    """Kendall's tau-b over all pairs, exact O(n^2) count.

    Returns ``nan`` when either ranking is constant.
    """
    x = np.ascontiguousarray(a, dtype=np.float64)
    y = np.ascontiguousarray(b, dtype=np.float64)
    if x.ndim != 1 or x.shape != y.shape:
        raise DomainError("rankings must be 1-D with equal length")
    if x.shape[0] < 2:
        raise DomainError("need at least two items to rank")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise DomainError("rankings must be finite")
    conc, disc, untied_x, untied_y = _kernels.kendall_counts(x, y)
    if untied_x == 0 or untied_y == 0:
        return math.nan
    return (conc - disc) / math.sqrt(float(untied_x) * float(untied_y))


@dataclass(frozen=True)
class ModelZooSpec:
    """Synthetic stand-in for a zoo of trained classifiers.

    Model ``m`` perturbs the true conditional distribution with Gaussian logit
    noise of scale ``noise_max * m / (n_models - 1)`` and a fixed temperature
    whose log lies on an even grid in ``[-log_temp_max, log_temp_max]``,
    shuffled across models. Model 0 reports the ground truth.
    """

    n_models: int = 20
    n_classes: int = 7
    n_instances: int = 2000
    noise_max: float = 1.5
    log_temp_max: float = 0.75
    dirichlet_concentration: float = 1.0
    seed: int = 42

    def __post_init__(self):
        if self.n_models < 10:
            raise ConfigError("a zoo needs at least 10 models")
        if self.n_instances < 100:
            raise ConfigError("a zoo needs at least 100 instances")
        if self.n_classes < 2:
            raise ConfigError("a zoo needs at least 2 classes")
        if self.noise_max < 0 or self.log_temp_max < 0 or self.dirichlet_concentration <= 0:
            raise ConfigError("zoo scale parameters must be non-negative")


@dataclass(frozen=True)
class ModelZoo:
    spec: ModelZooSpec
    truth: np.ndarray
    labels: np.ndarray
    predictions: np.ndarray
    noise_scales: np.ndarray
    temperatures: np.ndarray


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def generate_zoo(spec: ModelZooSpec) -> ModelZoo:
    M, N, K = spec.n_models, spec.n_instances, spec.n_classes
    rng = _rng(spec.seed, 0)
    truth = rng.dirichlet(np.full(K, spec.dirichlet_concentration), size=N)
    u = rng.random(N)
    labels = np.minimum((np.cumsum(truth, axis=1) <= u[:, None]).sum(axis=1), K - 1)
    noise = np.linspace(0.0, spec.noise_max, M)
    log_t = np.zeros(M)
    log_t[1:] = rng.permutation(np.linspace(-spec.log_temp_max, spec.log_temp_max, M - 1))
    temps = np.exp(log_t)
    base = np.log(np.maximum(truth, PROB_FLOOR))
    preds = np.empty((M, N, K))
    for m in range(M):
        eps = rng.standard_normal((N, K))
        if noise[m] == 0.0 and temps[m] == 1.0:
            preds[m] = truth
        else:
            preds[m] = softmax((base + noise[m] * eps) / temps[m])
    return ModelZoo(spec, truth, labels.astype(np.int64), preds, noise, temps)


@dataclass(frozen=True)
class Condition:
    """Perturbation and cost setting for one meta-evaluation run.

    ``costs`` fixes the class cost vector (required for ``clinical``; used by
    the temperature conditions when given). Without it, costs are
    ``n_cost_draws`` iid Unif[0, 1] vectors, each shared by every model.
    Temperatures are ``LogNormal(0, log_sigma)``, one per model.
    """

    kind: str
    seed: int = 0
    costs: Optional[np.ndarray] = None
    log_sigma: float = 0.5
    n_cost_draws: int = 10

    def __post_init__(self):
        if self.kind not in CONDITION_KINDS:
            raise ConfigError(f"unknown condition {self.kind!r}")
        if self.kind == "clinical" and self.costs is None:
            raise ConfigError("the clinical condition needs a base cost vector")
        if self.costs is not None:
            c = np.asarray(self.costs, dtype=np.float64)
            if c.ndim != 1 or np.any(c <= 0) or not np.all(np.isfinite(c)):
                raise ConfigError("condition costs must be positive")
            object.__setattr__(self, "costs", c)
        if self.kind.endswith("temperature") and not self.log_sigma > 0:
            raise ConfigError("log_sigma must be > 0")
        if self.n_cost_draws < 1:
            raise ConfigError("n_cost_draws must be >= 1")

    def describe(self) -> dict:
        out = {"kind": self.kind, "seed": int(self.seed)}
        if self.costs is not None:
            out["costs"] = self.costs.tolist()
        else:
            out["cost_draws"] = self.n_cost_draws
            out["cost_prior"] = "uniform01_iid"
        if self.kind.endswith("temperature"):
            out["log_sigma"] = self.log_sigma
        return out


def temperature_scale(probs, T: float) -> np.ndarray:
    """``softmax(log p / T)``; ``T == 1`` returns the forecasts unchanged."""
    p = np.asarray(probs, dtype=np.float64)
    if T == 1.0:
        return p.copy()
    return softmax(np.log(np.maximum(p, PROB_FLOOR)) / T)


def distractor_temperature(probs, labels, T: float) -> np.ndarray:
    """Raise distractor probabilities to ``1/T`` and renormalise them to ``1 - p_true``.

    The true-class probability is copied through untouched.
    """
    p = np.asarray(probs, dtype=np.float64)
    lab = np.asarray(labels, dtype=np.int64)
    rows = np.arange(p.shape[0])
    p_true = p[rows, lab].copy()
    with np.errstate(divide="ignore"):
        w = np.power(p, 1.0 / T) if math.isfinite(T) else np.ones_like(p)
    w[rows, lab] = 0.0
    total = w.sum(axis=1, keepdims=True)
    out = np.divide(w * (1.0 - p_true)[:, None], total, out=np.zeros_like(w), where=total > 0)
    out[rows, lab] = p_true
    return out


@dataclass(frozen=True)
class ConditionedData:
    predictions: np.ndarray
    costs: np.ndarray
    temperatures: Optional[np.ndarray] = None


def apply_condition(predictions, labels, condition: Condition) -> ConditionedData:
    """Perturb ``(M, N, K)`` forecasts per the condition and fix the cost vectors.

    Returns costs as an ``(R, K)`` array: one row for fixed costs, or one row
    per uniform draw.
    """
    preds = np.asarray(predictions, dtype=np.float64)
    M, _, K = preds.shape
    rng = _rng(condition.seed, 1)
    if condition.costs is not None:
        if condition.costs.shape != (K,):
            raise ConfigError(f"condition has {condition.costs.shape[0]} costs, zoo has {K} classes")
        costs = condition.costs[None, :]
    else:
        costs = rng.random((condition.n_cost_draws, K))
    temps = None
    if condition.kind == "random_temperature":
        temps = rng.lognormal(0.0, condition.log_sigma, size=M)
        preds = np.stack([temperature_scale(preds[m], temps[m]) for m in range(M)])
    elif condition.kind == "distractor_temperature":
        temps = rng.lognormal(0.0, condition.log_sigma, size=M)
        preds = np.stack([distractor_temperature(preds[m], labels, temps[m]) for m in range(M)])
    return ConditionedData(preds, costs, temps)


@dataclass(frozen=True)
class MetricRow:
    metric: str
    tau: float
    abs_tau: float
    abs_tau_ci: tuple[float, float]
    gap: Optional[float]
    gap_ci: Optional[tuple[float, float]]
    per_draw_tau: tuple[float, ...]


@dataclass(frozen=True)
class RankingReport:
    condition: dict
    zoo: dict
    seed: int
    bootstrap_reps: int
    ci_level: float
    rows: tuple[MetricRow, ...]
    per_model: dict = field(default_factory=dict)
    resampling: str = "instances, with replacement"

    def row(self, metric: str) -> MetricRow:
        for r in self.rows:
            if r.metric == metric:
                return r
        raise KeyError(metric)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, allow_nan=True)

    def per_model_csv(self) -> str:
        buf = io.StringIO()
        names = list(self.per_model)
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["model"] + names)
        n = len(next(iter(self.per_model.values()))) if names else 0
        for m in range(n):
            writer.writerow([m] + [format(self.per_model[k][m], ".17g") for k in names])
        return buf.getvalue()


class _Evaluator:
    """Per-instance quantities for one conditioned zoo, resampled cheaply."""

    def __init__(self, preds, labels, costs, metrics):
        M, N, K = preds.shape
        self.M, self.N, self.K = M, N, K
        self.labels = labels
        self.metrics = metrics
        flat = preds.reshape(M * N, K)
        flat_lab = np.tile(labels, M)
        self.per_instance = {}
        if "pandora_regret" in metrics:
            self.per_instance["pandora_regret"] = np.asarray(pandora_regret(flat, flat_lab)).reshape(M, N)
        if "log_loss" in metrics:
            self.per_instance["log_loss"] = np.asarray(log_loss(flat, flat_lab)).reshape(M, N)
        self.argmax = preds.argmax(axis=2)
        self.correct = (self.argmax == labels[None, :]).astype(np.float64)
        self.search = np.stack([search_costs(flat, flat_lab, c).reshape(M, N) for c in costs])

    def _macro_f1(self, idx):
        M, K = self.M, self.K
        lab = self.labels[idx]
        pred = self.argmax[:, idx]
        offs = (np.arange(M) * K)[:, None]
        hit = pred == lab[None, :]
        lab_b = np.broadcast_to(lab, pred.shape)
        tp = np.bincount((offs + lab_b)[hit], minlength=M * K).reshape(M, K)
        fp = np.bincount((offs + pred)[~hit], minlength=M * K).reshape(M, K)
        fn = np.bincount((offs + lab_b)[~hit], minlength=M * K).reshape(M, K)
        d = 2 * tp + fp + fn
        f1 = np.divide(2.0 * tp, d, out=np.zeros(d.shape), where=d > 0)
        return f1.mean(axis=1)

    def values(self, idx):
        out = {}
        for name in self.metrics:
            if name == "accuracy":
                out[name] = self.correct[:, idx].mean(axis=1)
            elif name == "macro_f1":
                out[name] = self._macro_f1(idx)
            else:
                out[name] = self.per_instance[name][:, idx].mean(axis=1)
        return out, self.search[:, :, idx].mean(axis=2)

    def taus(self, idx):
        """Signed tau per metric and per cost draw, shape (n_metrics + 1, R)."""
        vals, jsim = self.values(idx)
        rows = []
        for name in self.metrics:
            rows.append([kendall_tau(vals[name], j) for j in jsim])
        rows.append([kendall_tau(j, j) for j in jsim])
        return np.array(rows)


def _interval(samples, point, level):
    lo, hi = np.nanpercentile(samples, [50 * (1 - level), 50 * (1 + level)])
    # percentile intervals can miss a point estimate at the edge of the bootstrap law
    return (float(min(lo, point)), float(max(hi, point)))


def run_meta_eval(zoo: ModelZoo, conditions: Sequence[Condition], metrics: Sequence[str] = METRICS,
                  bootstrap_reps: int = 200, seed: int = 0, ci_level: float = 0.95) -> list[RankingReport]:
    """Rank the zoo under every condition and compare each metric with simulated cost."""
    metrics = tuple(metrics)
    if not metrics:
        raise ConfigError("at least one metric is required")
    unknown = set(metrics) - set(METRICS)
    if unknown:
        raise ConfigError(f"unknown metrics: {sorted(unknown)}")
    if bootstrap_reps < 200:
        raise ConfigError("bootstrap_reps must be >= 200")
    if not conditions:
        raise ConfigError("at least one condition is required")
    reports = []
    names = metrics + (SELF_METRIC,)
    for cond in conditions:
        data = apply_condition(zoo.predictions, zoo.labels, cond)
        ev = _Evaluator(data.predictions, zoo.labels, data.costs, metrics)
        full = np.arange(ev.N)
        point = ev.taus(full)
        pooled = point.mean(axis=1)
        rng = _rng(seed, cond.seed, 2)
        boot = np.empty((bootstrap_reps, len(names)))
        for b in range(bootstrap_reps):
            idx = rng.integers(0, ev.N, size=ev.N)
            boot[b] = ev.taus(idx).mean(axis=1)
        abs_boot = np.abs(boot)
        ref = names.index("pandora_regret") if "pandora_regret" in names else None
        rows = []
        for k, name in enumerate(names):
            abs_tau = abs(float(pooled[k]))
            gap = gap_ci = None
            if ref is not None:
                gap = abs_tau - abs(float(pooled[ref]))
                gap_ci = _interval(abs_boot[:, k] - abs_boot[:, ref], gap, ci_level)
            rows.append(MetricRow(
                metric=name,
                tau=float(pooled[k]),
                abs_tau=abs_tau,
                abs_tau_ci=_interval(abs_boot[:, k], abs_tau, ci_level),
                gap=gap,
                gap_ci=gap_ci,
                per_draw_tau=tuple(float(t) for t in point[k]),
            ))
        vals, jsim = ev.values(full)
        per_model = {name: vals[name].tolist() for name in metrics}
        for r, j in enumerate(jsim):
            per_model[f"{SELF_METRIC}_{r}"] = j.tolist()
        zoo_desc = asdict(zoo.spec)
        reports.append(RankingReport(
            condition=cond.describe(),
            zoo=zoo_desc,
            seed=int(seed),
            bootstrap_reps=bootstrap_reps,
            ci_level=ci_level,
            rows=tuple(rows),
            per_model=per_model,
        ))
    return reports
