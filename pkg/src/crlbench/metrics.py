"""Experiment records, aggregation with confidence intervals, and the
benchmark's headline percentage metrics."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats


@dataclass(frozen=True)
class MetricRecord:
    study: str
    env: str
    algo: str
    seed: int
    step: int
    metric_name: str
    value: float
    wall_time: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise ValueError(f"non-finite metric value for {self.metric_name}")


# wall_time is excluded from the deterministic artifact; it goes to timings.log
_JSON_FIELDS = ("study", "env", "algo", "seed", "step", "metric_name", "value")


def record_to_json(record: MetricRecord) -> str:
    return json.dumps({f: getattr(record, f) for f in _JSON_FIELDS}, sort_keys=True)


def write_metrics_jsonl(records, path):
    path = Path(path)
    with path.open("w") as fh:
        for rec in records:
            fh.write(record_to_json(rec) + "\n")


def read_metrics_jsonl(path) -> list[MetricRecord]:
    out = []
    for line in Path(path).read_text().splitlines():
        if line.strip():
            out.append(MetricRecord(**json.loads(line)))
    return out


def aggregate(values) -> tuple[float, float | None]:
    """(mean, 95% CI half-width) across seeds; the CI needs n >= 2 and uses
    the Student-t quantile."""
    arr = np.asarray(list(values), dtype=np.float64)
    if arr.size == 0:
        raise ValueError("aggregate needs at least one value")
    mean = float(arr.mean())
    if arr.size < 2:
        return mean, None
    half = float(stats.t.ppf(0.975, arr.size - 1) * arr.std(ddof=1) / np.sqrt(arr.size))
    return mean, half


def gap_reduction(id_causal: float, ood_causal: float,
                  id_standard: float, ood_standard: float) -> float:
    """Percent of the baseline's ID-OOD drop that the causal policy avoids,
    on absolute gaps."""
    standard_gap = abs(id_standard - ood_standard)
    if standard_gap == 0:
        raise ValueError("gap_reduction undefined: standard ID-OOD gap is zero")
    return 100.0 * (1.0 - abs(id_causal - ood_causal) / standard_gap)


def gap_closed(standard: float, oracle: float, cae: float) -> float:
    """Percent of the standard-to-oracle gap recovered by the method."""
    denom = oracle - standard
    if denom == 0:
        raise ValueError("gap_closed undefined: oracle equals standard")
    return 100.0 * (cae - standard) / denom
