"""Aggregate run directories into seed-averaged tables and stage curves."""

import json
import logging
import os
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Dict, List, Tuple

import numpy as np

from docs.report_generator import generate_sweep_report
from engine.metrics_collector import avg_accuracy
from models.checkpoint import atomic_write_text
from models.errors import DataError
from .benchmark import format_float, read_metrics, write_csv
from .settings import RunSettings, settings_from_dict

log = logging.getLogger("sedeg.report")

GROUP_HEADER = ["method", "dataset", "num_tasks", "classes_per_task", "memory", "ablation", "config",
                "runs", "avg_mean", "avg_std", "last_mean", "last_std"]


@dataclass
class RunResult:
    """A finished run loaded from disk."""
    name: str
    config: Dict[str, Any]
    rows: List[Dict[str, Any]]
    run_dir: str = ""

    def phase_accuracies(self) -> List[float]:
        accs = {}
        for row in self.rows:
            accs[row["task_index"]] = row["all_seen_acc"]
        return [accs[t] for t in sorted(accs)]

    @property
    def avg(self) -> float:
        return avg_accuracy(self.phase_accuracies())

    @property
    def last(self) -> float:
        return self.rows[-1]["all_seen_acc"]

    @property
    def settings(self) -> RunSettings:
        return settings_from_dict(self.config, os.path.dirname(self.run_dir) or None)

    def group_key(self) -> Tuple:
        """Everything but the seeds; off-default settings enter through the digest."""
        s = self.settings
        return (s.method, s.spec.dataset, s.spec.num_tasks, s.spec.classes_per_task,
                s.spec.memory_capacity, s.train.ablation.label(), s.config_digest or "-")


@dataclass
class GroupStats:
    key: Tuple
    avgs: List[float] = field(default_factory=list)
    lasts: List[float] = field(default_factory=list)

    def row(self) -> List[Any]:
        return [*self.key, len(self.avgs),
                format_float(np.mean(self.avgs)), format_float(np.std(self.avgs)),
                format_float(np.mean(self.lasts)), format_float(np.std(self.lasts))]


def load_runs(in_dir: str) -> List[RunResult]:
    """Every subdirectory of ``in_dir`` holding both ``metrics.csv`` and ``config.json``."""
    if not os.path.isdir(in_dir):
        raise DataError(f"no such results directory: {in_dir}")
    runs = []
    for name in sorted(os.listdir(in_dir)):
        run_dir = os.path.join(in_dir, name)
        metrics = os.path.join(run_dir, "metrics.csv")
        config = os.path.join(run_dir, "config.json")
        if not (os.path.isfile(metrics) and os.path.isfile(config)):
            continue
        with open(config, "r", encoding="utf-8") as f:
            cfg = json.load(f)
        rows = read_metrics(metrics)
        if rows:
            runs.append(RunResult(name, cfg, rows, run_dir))
    if not runs:
        raise DataError(f"no finished runs under {in_dir}")
    return runs


def summarize_runs(runs: List[RunResult]) -> List[GroupStats]:
    """Mean and std of AVG / LAST over seeds and class orders, per configuration."""
    groups: Dict[Tuple, GroupStats] = {}
    for run in runs:
        key = run.group_key()
        stats = groups.setdefault(key, GroupStats(key))
        stats.avgs.append(run.avg)
        stats.lasts.append(run.last)
    return [groups[k] for k in sorted(groups, key=lambda k: tuple(str(x) for x in k))]


def stage_curves(runs: List[RunResult]) -> Dict[str, Dict[int, float]]:
    """Mean running-average accuracy per task index for every (method, stage) pair.

    The first-task row (bootstrap) opens every curve of its method.
    """
    samples: Dict[str, Dict[int, List[float]]] = defaultdict(lambda: defaultdict(list))
    for run in runs:
        method = run.config["method"]
        stages = sorted({r["stage"] for r in run.rows if r["task_index"] > 1}) or ["bootstrap"]
        for row in run.rows:
            targets = stages if row["task_index"] == 1 else [row["stage"]]
            for stage in targets:
                samples[f"{method}:{stage}"][row["task_index"]].append(row["avg_acc"])
    return {
        curve: {t: float(np.mean(v)) for t, v in sorted(points.items())}
        for curve, points in sorted(samples.items())
    }


def curves_table(curves: Dict[str, Dict[int, float]]):
    names = sorted(curves)
    tasks = sorted({t for points in curves.values() for t in points})
    rows = []
    for t in tasks:
        rows.append([t] + [format_float(curves[n][t]) if t in curves[n] else "" for n in names])
    return ["task_index"] + names, rows


def write_report(in_dir: str, out_dir: str = None) -> Dict[str, Any]:
    """Write ``report.md``, ``groups.csv`` and ``curves.csv`` for the runs under ``in_dir``."""
    out_dir = out_dir or in_dir
    runs = load_runs(in_dir)
    groups = summarize_runs(runs)
    curves = stage_curves(runs)
    os.makedirs(out_dir, exist_ok=True)
    write_csv(os.path.join(out_dir, "groups.csv"), GROUP_HEADER, [g.row() for g in groups])
    header, rows = curves_table(curves)
    write_csv(os.path.join(out_dir, "curves.csv"), header, rows)
    atomic_write_text(os.path.join(out_dir, "report.md"),
                      generate_sweep_report(GROUP_HEADER, [g.row() for g in groups], curves))
    log.info("Report over %d run(s) in %d group(s) written to %s", len(runs), len(groups), out_dir)
    return {"runs": runs, "groups": groups, "curves": curves}
