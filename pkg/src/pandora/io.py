"""Prediction files and cost configuration files.

Predictions are line-delimited JSON records ``{"probs": [...], "label": k,
"id": "..."}`` or CSV with columns ``label, p0, p1, ...`` and an optional
``id`` column. Probabilities are written with 17 significant digits so a
write/read round trip is exact.

Cost configs are JSON documents with ``class_names``, ``base_costs``, a
``currency`` tag and optional ``test_characteristics``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError
from .scoring import SUM_TOLERANCE
from .search import TestCharacteristics

CONFIG_DIR = Path(__file__).with_name("configs")


class InputError(ConfigError):
    """A malformed input file; ``line`` is 1-based when known."""

    def __init__(self, message: str, path=None, line: Optional[int] = None):
        where = f"{path}:{line}: " if line is not None else (f"{path}: " if path else "")
        super().__init__(where + message)
        self.path = path
        self.line = line


@dataclass(frozen=True)
class PredictionSet:
    probs: np.ndarray
    labels: np.ndarray
    ids: Optional[list[str]] = None

    @property
    def n_classes(self) -> int:
        return self.probs.shape[1]

    def __len__(self) -> int:
        return self.probs.shape[0]


def _check_record(probs, label, path, line, K):
    if not isinstance(probs, list) or len(probs) < 2:
        raise InputError("'probs' must be a list of at least 2 numbers", path, line)
    try:
        p = [float(x) for x in probs]
    except (TypeError, ValueError):
        raise InputError("'probs' entries must be numbers", path, line) from None
    if K is not None and len(p) != K:
        raise InputError(f"expected {K} probabilities, got {len(p)}", path, line)
    if any(not math.isfinite(x) or x < 0 for x in p):
        raise InputError("probabilities must be finite and non-negative", path, line)
    if abs(math.fsum(p) - 1.0) > SUM_TOLERANCE:
        raise InputError("probabilities must sum to 1", path, line)
    if isinstance(label, bool) or not isinstance(label, (int, str)):
        raise InputError("'label' must be an integer", path, line)
    try:
        lab = int(label)
    except ValueError:
        raise InputError("'label' must be an integer", path, line) from None
    if not 0 <= lab < len(p):
        raise InputError(f"label {lab} out of range for K={len(p)}", path, line)
    return p, lab


def _read_jsonl(path: Path):
    rows, labels, ids = [], [], []
    K = None
    with path.open() as fh:
        for line_no, text in enumerate(fh, start=1):
            if not text.strip():
                continue
            try:
                rec = json.loads(text)
            except json.JSONDecodeError as exc:
                raise InputError(f"invalid JSON ({exc.msg})", path, line_no) from None
            if not isinstance(rec, dict) or "probs" not in rec or "label" not in rec:
                raise InputError("record needs 'probs' and 'label'", path, line_no)
            p, lab = _check_record(rec["probs"], rec["label"], path, line_no, K)
            K = len(p)
            rows.append(p)
            labels.append(lab)
            ids.append(None if rec.get("id") is None else str(rec["id"]))
    return rows, labels, ids


def _read_csv(path: Path):
    rows, labels, ids = [], [], []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise InputError("empty CSV file", path, 1)
        header = [h.strip() for h in header]
        if "label" not in header:
            raise InputError("CSV header needs a 'label' column", path, 1)
        pcols = [h for h in header if h.startswith("p") and h[1:].isdigit()]
        pcols.sort(key=lambda h: int(h[1:]))
        if [int(h[1:]) for h in pcols] != list(range(len(pcols))):
            raise InputError("probability columns must be p0, p1, ... without gaps", path, 1)
        at = {h: i for i, h in enumerate(header)}
        for line_no, row in enumerate(reader, start=2):
            if not any(cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise InputError(f"expected {len(header)} fields, got {len(row)}", path, line_no)
            probs = [row[at[h]] for h in pcols]
            p, lab = _check_record(probs, row[at["label"]].strip(), path, line_no, len(pcols))
            rows.append(p)
            labels.append(lab)
            ids.append(row[at["id"]] if "id" in at else None)
    return rows, labels, ids


def read_predictions(path) -> PredictionSet:
    path = Path(path)
    if not path.is_file():
        raise InputError("no such prediction file", path)
    reader = _read_csv if path.suffix.lower() == ".csv" else _read_jsonl
    rows, labels, ids = reader(path)
    if not rows:
        raise InputError("no prediction records", path)
    has_ids = any(i is not None for i in ids)
    return PredictionSet(
        np.array(rows, dtype=np.float64),
        np.array(labels, dtype=np.int64),
        [i if i is not None else str(n) for n, i in enumerate(ids)] if has_ids else None,
    )


def _num(x: float) -> str:
    return format(float(x), ".17g")


def write_predictions(path, probs, labels, ids: Optional[Sequence[str]] = None) -> None:
    """Write predictions as JSON lines, or CSV when the suffix is ``.csv``."""
    path = Path(path)
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    with path.open("w", newline="") as fh:
        if path.suffix.lower() == ".csv":
            writer = csv.writer(fh, lineterminator="\n")
            head = (["id"] if ids is not None else []) + ["label"] + [f"p{k}" for k in range(probs.shape[1])]
            writer.writerow(head)
            for n, (p, lab) in enumerate(zip(probs, labels)):
                writer.writerow(([ids[n]] if ids is not None else []) + [int(lab)] + [_num(x) for x in p])
        else:
            for n, (p, lab) in enumerate(zip(probs, labels)):
                parts = [f'"probs": [{", ".join(_num(x) for x in p)}]', f'"label": {int(lab)}']
                if ids is not None:
                    parts.append(f'"id": {json.dumps(str(ids[n]))}')
                fh.write("{" + ", ".join(parts) + "}\n")


@dataclass(frozen=True)
class CostConfig:
    class_names: tuple[str, ...]
    base_costs: np.ndarray
    currency: str = "USD"
    name: str = ""
    test_characteristics: Optional[TestCharacteristics] = None

    @property
    def n_classes(self) -> int:
        return len(self.class_names)


def shipped_configs() -> list[str]:
    return sorted(p.stem for p in CONFIG_DIR.glob("*.json"))


def resolve_config(path_or_name) -> Path:
    """Accept a file path or the name of a shipped config (``dermamnist``, ``octmnist``)."""
    p = Path(path_or_name)
    if p.is_file():
        return p
    shipped = CONFIG_DIR / f"{path_or_name}.json"
    if shipped.is_file():
        return shipped
    raise InputError(f"no cost config {path_or_name!r} (shipped: {', '.join(shipped_configs())})")


def load_cost_config(path_or_name) -> CostConfig:
    path = resolve_config(path_or_name)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON ({exc.msg})", path, exc.lineno) from None
    if not isinstance(doc, dict):
        raise InputError("cost config must be a JSON object", path)
    names = doc.get("class_names")
    costs = doc.get("base_costs")
    if not isinstance(names, list) or not isinstance(costs, list):
        raise InputError("cost config needs 'class_names' and 'base_costs' lists", path)
    if len(names) != len(costs) or len(names) < 2:
        raise InputError("'class_names' and 'base_costs' must have the same length >= 2", path)
    if len(set(names)) != len(names):
        raise InputError("class names must be distinct", path)
    try:
        c = np.array([float(x) for x in costs])
    except (TypeError, ValueError):
        raise InputError("base costs must be numbers", path) from None
    if not np.all(np.isfinite(c)) or np.any(c <= 0):
        raise InputError("base costs must be positive", path)
    tc = None
    if doc.get("test_characteristics") is not None:
        spec = doc["test_characteristics"]
        try:
            tc = TestCharacteristics(
                np.asarray(spec["sensitivity"], dtype=np.float64),
                np.asarray(spec["false_positive_rate"], dtype=np.float64),
                np.asarray(spec.get("confirm_cost", [0.0] * len(names)), dtype=np.float64),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"bad test_characteristics: {exc}", path) from None
        if tc.sensitivity.shape[0] != len(names):
            raise InputError("test characteristics must have one entry per class", path)
    return CostConfig(tuple(str(n) for n in names), c, str(doc.get("currency", "USD")),
                      str(doc.get("name", path.stem)), tc)
