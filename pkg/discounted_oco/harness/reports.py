"""
Report writers: ledgers, summary and verdict CSVs, per-trial series and the
config snapshot.
"""
import csv
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Sequence, Union

import numpy as np

from ..exceptions import UsageError
from ..learners.base import LearnerKind
from ..ledger import ledger_filename, read_ledger, write_ledger
from ..metrics import coverage_metrics, discounted_regret, local_series, runtime_summary
from ..settings import DISCOUNTED_OCO_FORMAT_VERSION

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = [
    "format_version",
    "learner_id",
    "learner_kind",
    "protocol",
    "trials",
    "horizon",
    "regret_max_mean",
    "regret_max_std",
    "avg_coverage_mean",
    "avg_coverage_std",
    "avg_width_mean",
    "lce_mean",
    "step_time_us_mean",
    "step_time_us_std",
    "runtime_normalized",
]

VERDICT_COLUMNS = [
    "format_version", "learner_id", "trial", "check", "u", "tau", "measured", "bound", "passed",
]

SERIES_COLUMNS = ["format_version", "t", "local_coverage", "local_width", "best_fixed_local_width"]

REFERENCE_LEARNER = LearnerKind.SIMPLE_OGD


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return "" if math.isnan(x) else repr(x)
    return str(x)


def _mean_std(values: Sequence[float]):
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return None, None
    return float(arr.mean()), float(arr.std(ddof=1)) if arr.size > 1 else 0.0


def build_summary(result) -> List[Dict[str, Any]]:
    """
    One row per learner aggregated over trials.

    Regret columns stay empty without a comparator grid; coverage columns stay
    empty for loss streams.
    """
    config = result.config
    reference = next(
        (s.id for s in config.learners if LearnerKind(s.kind) == REFERENCE_LEARNER), None
    )
    timing = runtime_summary(result.step_times, reference=reference)
    rows = []
    for spec in config.learners:
        ledgers = result.ledgers_for(spec.id)
        row: Dict[str, Any] = {
            "format_version": DISCOUNTED_OCO_FORMAT_VERSION,
            "learner_id": spec.id,
            "learner_kind": LearnerKind(spec.kind).value,
            "protocol": config.protocol,
            "trials": len(ledgers),
            "horizon": config.environment.horizon,
        }
        if config.protocol == "oco" and config.comparator_grid:
            worst = [max(discounted_regret(lg, u) for u in config.comparator_grid) for lg in ledgers]
            row["regret_max_mean"], row["regret_max_std"] = _mean_std(worst)
        if config.protocol == "ocp":
            reports = [coverage_metrics(lg, config.lce_window, config.alpha) for lg in ledgers]
            row["avg_coverage_mean"], row["avg_coverage_std"] = _mean_std([r.avg_coverage for r in reports])
            row["avg_width_mean"], _ = _mean_std([r.avg_width for r in reports])
            row["lce_mean"], _ = _mean_std([r.lce for r in reports])
        t = timing.get(spec.id, {})
        row["step_time_us_mean"] = t.get("mean", math.nan) * 1e6
        row["step_time_us_std"] = t.get("std", math.nan) * 1e6
        row["runtime_normalized"] = t.get("normalized", math.nan)
        rows.append(row)
    return rows


def _write_csv(path: Path, columns: List[str], rows: Sequence[Dict[str, Any]]):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row.get(col)) for col in columns])


def write_verdicts(verdicts, path: Union[str, Path]) -> Path:
    path = Path(path)
    rows = []
    for v in verdicts:
        row = v.as_dict()
        row["format_version"] = DISCOUNTED_OCO_FORMAT_VERSION
        row["passed"] = "pass" if v.passed else "fail"
        rows.append(row)
    _write_csv(path, VERDICT_COLUMNS, rows)
    return path


def write_reports(result, out_dir: Union[str, Path]) -> Path:
    """
    Write everything a run produces under ``out_dir``.

    Layout: config.json, summary.csv, verdicts.csv, ledgers/<id>__trial<k>.jsonl
    and, for radius streams, series/<id>__trial<k>.csv.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    config = result.config
    (out / "config.json").write_text(
        json.dumps(config.snapshot(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    _write_csv(out / "summary.csv", SUMMARY_COLUMNS, build_summary(result))
    write_verdicts(result.verdicts, out / "verdicts.csv")
    if config.outputs.write_ledgers:
        for (learner_id, trial), ledger in result.ledgers.items():
            write_ledger(ledger, out / "ledgers" / ledger_filename(learner_id, trial))
    if config.protocol == "ocp" and config.outputs.write_series:
        for (learner_id, trial), ledger in result.ledgers.items():
            series = local_series(ledger, config.lce_window, config.alpha)
            rows = [
                {"format_version": DISCOUNTED_OCO_FORMAT_VERSION, **{k: v[i].item() for k, v in series.items()}}
                for i in range(series["t"].shape[0])
            ]
            _write_csv(out / "series" / f"{learner_id}__trial{trial}.csv", SERIES_COLUMNS, rows)
    logger.info("Wrote reports to %s", out)
    return out


def load_ledgers(out_dir: Union[str, Path], learner_ids: Sequence[str], trials: int):
    """
    Read back the ledgers of a previous run in (learner, trial) order.

    Raises:
        UsageError: if a ledger file is missing
    """
    out = Path(out_dir)
    ledgers = {}
    for learner_id in learner_ids:
        for trial in range(trials):
            path = out / "ledgers" / ledger_filename(learner_id, trial)
            if not path.exists():
                raise UsageError(f"Missing ledger {path}; was the run written with write_ledgers?")
            ledgers[(learner_id, trial)] = read_ledger(path)
    return ledgers
