"""Command-line interface: ``pandora score|simulate|rank|verify``.

Exit codes: 0 success, 1 verification failure, 2 input or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import _accel, baselines, scoring
from .errors import PandoraError
from .io import load_cost_config, read_predictions, shipped_configs
from .propriety import RNG_ALGORITHM
from .ranking import (
    CONDITION_KINDS,
    METRICS,
    Condition,
    ModelZoo,
    ModelZooSpec,
    generate_zoo,
    run_meta_eval,
)
from .search import effective_costs, simulate_search
from .verify import SUITES, run_suites

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2

SCORE_METRICS = ("pandora_regret", "beta_score", "raw_expected_cost", "log_loss", "accuracy", "macro_f1")
_ALIASES = {"pandora": "pandora_regret", "beta": "beta_score", "raw": "raw_expected_cost",
            "logloss": "log_loss", "f1": "macro_f1"}


def _sig(x) -> str:
    if x is None:
        return "-"
    return format(float(x), ".6g")


def _emit_table(out, header, rows):
    widths = [max(len(str(h)), *(len(str(r[k])) for r in rows)) for k, h in enumerate(header)]
    out.write("  ".join(str(h).ljust(w) for h, w in zip(header, widths)).rstrip() + "\n")
    for r in rows:
        out.write("  ".join(str(c).ljust(w) for c, w in zip(r, widths)).rstrip() + "\n")


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _metric_list(text: str) -> list[str]:
    names = [_ALIASES.get(t.strip(), t.strip()) for t in text.split(",") if t.strip()]
    bad = [n for n in names if n not in SCORE_METRICS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown metrics {bad}; choose from {', '.join(SCORE_METRICS)}")
    return names


def _costs_for(preds, costs_arg):
    if costs_arg is None:
        return None
    cfg = load_cost_config(costs_arg)
    if cfg.n_classes != preds.n_classes:
        raise PandoraError(f"cost config has {cfg.n_classes} classes, predictions have {preds.n_classes}")
    return cfg


def cmd_score(args, out) -> int:
    preds = read_predictions(args.predictions)
    cfg = _costs_for(preds, args.costs)
    costs = None if cfg is None else cfg.base_costs
    alpha = scoring.parse_alpha(args.alpha)
    p, y = preds.probs, preds.labels
    per_instance = {}
    for name in args.metrics:
        if name == "pandora_regret":
            per_instance[name] = np.asarray(scoring.pandora_regret(p, y))
        elif name == "beta_score":
            per_instance[name] = np.asarray(scoring.beta_score(p, y, alpha, costs))
        elif name == "raw_expected_cost":
            per_instance[name] = np.asarray(scoring.raw_expected_cost(p, y, alpha, costs))
        elif name == "log_loss":
            per_instance[name] = np.asarray(baselines.log_loss(p, y))
        elif name == "accuracy":
            per_instance[name] = (np.argmax(p, axis=1) == y).astype(float)
    means = {k: float(np.mean(v)) for k, v in per_instance.items()}
    if "macro_f1" in args.metrics:
        means["macro_f1"] = baselines.macro_f1(p, y)
    ids = preds.ids or [str(n) for n in range(len(preds))]
    cols = [m for m in args.metrics if m in per_instance]
    if args.format == "json-lines":
        for n in range(len(preds)):
            rec = {"id": ids[n], "label": int(y[n])}
            rec.update({m: float(per_instance[m][n]) for m in cols})
            out.write(json.dumps(rec) + "\n")
        out.write(json.dumps({"summary": True, "n": len(preds), "alpha": _alpha_repr(alpha),
                              "costs": None if cfg is None else cfg.name, "mean": means}) + "\n")
    elif args.format == "csv":
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["id", "label"] + list(args.metrics))
        for n in range(len(preds)):
            writer.writerow([ids[n], int(y[n])] + [repr(float(per_instance[m][n])) if m in per_instance else ""
                                                     for m in args.metrics])
        writer.writerow(["mean", ""] + [repr(means[m]) for m in args.metrics])
    else:
        rows = [[ids[n], int(y[n])] + [_sig(per_instance[m][n]) if m in per_instance else "-"
                                      for m in args.metrics] for n in range(len(preds))]
        rows.append(["mean", ""] + [_sig(means[m]) for m in args.metrics])
        _emit_table(out, ["id", "label"] + list(args.metrics), rows)
    return EXIT_OK


def _alpha_repr(alpha):
    return alpha.value if isinstance(alpha, scoring.Limit) else alpha


def cmd_simulate(args, out) -> int:
    preds = read_predictions(args.predictions)
    cfg = _costs_for(preds, args.costs)
    costs = cfg.base_costs
    if args.mode == "effective":
        if cfg.test_characteristics is None:
            raise PandoraError("effective mode needs test_characteristics in the cost config")
        costs = effective_costs(costs, cfg.test_characteristics)
    ids = preds.ids or [str(n) for n in range(len(preds))]
    traces = [simulate_search(preds.probs[n], int(preds.labels[n]), costs) for n in range(len(preds))]
    totals = [t.total_cost for t in traces]
    import math

    j_sim = math.fsum(totals) / len(totals)
    if args.format == "json-lines":
        for n, t in enumerate(traces):
            out.write(json.dumps({"id": ids[n], "label": int(preds.labels[n]), "order": list(t.order),
                                  "stop_step": t.stop_step, "total_cost": t.total_cost}) + "\n")
        out.write(json.dumps({"summary": True, "n": len(traces), "mode": args.mode, "costs": cfg.name,
                              "realized_costs": [float(c) for c in costs], "j_sim": j_sim}) + "\n")
    elif args.format == "csv":
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["id", "label", "order", "stop_step", "total_cost"])
        for n, t in enumerate(traces):
            writer.writerow([ids[n], int(preds.labels[n]), " ".join(map(str, t.order)), t.stop_step,
                             repr(t.total_cost)])
        writer.writerow(["j_sim", "", "", "", repr(j_sim)])
    else:
        rows = [[ids[n], int(preds.labels[n]), " ".join(map(str, t.order)), t.stop_step, _sig(t.total_cost)]
                for n, t in enumerate(traces)]
        _emit_table(out, ["id", "label", "order", "stop_step", "total_cost"], rows)
        out.write(f"J_sim ({args.mode} costs, {cfg.name}): {_sig(j_sim)} {cfg.currency}\n")
    return EXIT_OK


def _zoo_from_dir(directory: Path) -> ModelZoo:
    files = sorted(p for p in directory.iterdir() if p.suffix.lower() in (".jsonl", ".csv", ".json"))
    if len(files) < 2:
        raise PandoraError(f"{directory}: need prediction files for at least two models")
    sets = [read_predictions(f) for f in files]
    labels = sets[0].labels
    for f, s in zip(files, sets):
        if s.probs.shape != sets[0].probs.shape or not np.array_equal(s.labels, labels):
            raise PandoraError(f"{f}: every model must score the same labelled instances")
    preds = np.stack([s.probs for s in sets])
    M, N, K = preds.shape
    spec = ModelZooSpec.__new__(ModelZooSpec)
    for name, value in dict(n_models=M, n_classes=K, n_instances=N, noise_max=0.0, log_temp_max=0.0,
                            dirichlet_concentration=1.0, seed=0).items():
        object.__setattr__(spec, name, value)
    return ModelZoo(spec, None, labels, preds, np.zeros(M), np.ones(M))


def _load_zoo_spec(path) -> ModelZooSpec:
    if path is None:
        return ModelZooSpec()
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise PandoraError(f"{path}: cannot read zoo config ({exc})") from None
    if not isinstance(doc, dict):
        raise PandoraError(f"{path}: zoo config must be a JSON object")
    try:
        return ModelZooSpec(**doc)
    except TypeError as exc:
        raise PandoraError(f"{path}: {exc}") from None


def _default_clinical(K: int, costs_arg):
    if costs_arg is not None:
        cfg = load_cost_config(costs_arg)
        if cfg.n_classes != K:
            raise PandoraError(f"cost config has {cfg.n_classes} classes, zoo has {K}")
        return cfg
    for name in shipped_configs():
        cfg = load_cost_config(name)
        if cfg.n_classes == K:
            return cfg
    return None


def cmd_rank(args, out) -> int:
    if args.predictions_dir is not None:
        zoo = _zoo_from_dir(Path(args.predictions_dir))
    else:
        zoo = generate_zoo(_load_zoo_spec(args.zoo))
    K = zoo.predictions.shape[2]
    kinds = args.condition or list(CONDITION_KINDS)
    if "all" in kinds:
        kinds = list(CONDITION_KINDS)
    cfg = _default_clinical(K, args.costs)
    conditions = []
    for n, kind in enumerate(kinds):
        cond_seed = int(np.random.SeedSequence([args.seed, n]).generate_state(1, np.uint64)[0])
        costs = None
        if kind == "clinical" or (kind.endswith("temperature") and cfg is not None):
            if cfg is None:
                raise PandoraError(f"no {K}-class cost config for the clinical condition; pass --costs")
            costs = cfg.base_costs
        conditions.append(Condition(kind, cond_seed, costs, args.log_sigma, args.cost_draws))
    reports = run_meta_eval(zoo, conditions, args.metrics, args.bootstrap, args.seed)
    if args.format == "json-lines":
        for r in reports:
            out.write(r.to_json() + "\n")
    elif args.format == "csv":
        for r in reports:
            body = r.per_model_csv().splitlines()
            out.write("condition," + body[0] + "\n")
            for line in body[1:]:
                out.write(f"{r.condition['kind']},{line}\n")
    else:
        for r in reports:
            out.write(f"condition: {r.condition['kind']}  models: {r.zoo['n_models']}  "
                      f"instances: {r.zoo['n_instances']}  bootstrap: {r.bootstrap_reps} "
                      f"({r.resampling})  seed: {r.seed}\n")
            rows = [[row.metric, _sig(row.abs_tau), f"[{_sig(row.abs_tau_ci[0])}, {_sig(row.abs_tau_ci[1])}]",
                     _sig(row.gap), "-" if row.gap_ci is None else f"[{_sig(row.gap_ci[0])}, {_sig(row.gap_ci[1])}]"]
                    for row in r.rows]
            _emit_table(out, ["metric", "|tau|", "ci", "gap_vs_pandora", "gap_ci"], rows)
            out.write("\n")
    return EXIT_OK


def cmd_verify(args, out) -> int:
    checks = run_suites(args.suite, args.seed, args.samples, args.alpha)
    failed = [c for c in checks if not c.passed]
    header = {"seed": args.seed, "samples": args.samples, "alpha": args.alpha, "rng": RNG_ALGORITHM,
              "backend": _accel.BACKEND, "n_workers": 1}
    if args.format == "json-lines":
        out.write(json.dumps({"header": header}) + "\n")
        for c in checks:
            out.write(json.dumps(c.to_dict()) + "\n")
    elif args.format == "csv":
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["suite", "check", "status", "value", "tolerance", "detail"])
        for c in checks:
            writer.writerow([c.suite, c.name, c.status, repr(c.value), repr(c.tolerance), c.detail])
    else:
        out.write(" ".join(f"{k}={v}" for k, v in header.items()) + "\n")
        for c in checks:
            out.write(f"{c.status}  {c.suite}/{c.name}  value={_sig(c.value)} tol={_sig(c.tolerance)}  {c.detail}\n")
        out.write(f"{len(checks) - len(failed)}/{len(checks)} checks passed\n")
    for c in failed:
        print(f"verification failed: {c.suite}/{c.name}", file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pandora", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = dict(choices=("text", "json-lines", "csv"), default="text")

    p = sub.add_parser("score", help="score a prediction file")
    p.add_argument("predictions")
    p.add_argument("--costs", help="cost config path or shipped name (default: unit costs)")
    p.add_argument("--alpha", default="1", help="Beta family parameter, or 'zero' / 'inf'")
    p.add_argument("--metrics", type=_metric_list, default=list(SCORE_METRICS))
    p.add_argument("--format", **fmt)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("simulate", help="simulate ratio-rule search over a prediction file")
    p.add_argument("predictions")
    p.add_argument("--costs", required=True)
    p.add_argument("--mode", choices=("base", "effective"), default="base")
    p.add_argument("--format", **fmt)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("rank", help="meta-evaluate metrics against simulated search cost")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--zoo", help="JSON file with synthetic zoo parameters (default zoo if omitted)")
    src.add_argument("--predictions-dir", help="directory with one prediction file per model")
    p.add_argument("--condition", action="append", choices=CONDITION_KINDS + ("all",))
    p.add_argument("--costs", help="clinical cost config (default: shipped config matching K)")
    p.add_argument("--metrics", type=lambda s: [m.strip() for m in s.split(",") if m.strip()],
                   default=list(METRICS))
    p.add_argument("--seed", type=_u64, required=True)
    p.add_argument("--bootstrap", type=int, default=200)
    p.add_argument("--log-sigma", type=float, default=0.5)
    p.add_argument("--cost-draws", type=int, default=10)
    p.add_argument("--format", **fmt)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("verify", help="run numerical verification suites")
    p.add_argument("--suite", action="append", choices=SUITES + ("all",), default=None)
    p.add_argument("--seed", type=_u64, required=True)
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--alpha", default="1")
    p.add_argument("--format", **fmt)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "verify" and args.suite is None:
        args.suite = ["all"]
    buf = io.StringIO()
    try:
        code = args.func(args, buf)
    except (PandoraError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    out.write(buf.getvalue())
    return code


if __name__ == "__main__":
    sys.exit(main())
