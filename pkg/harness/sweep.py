"""Grid sweeps over memory sizes, task counts, seeds and ablation rows."""

import itertools
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence

from engine.metrics_collector import RunRecord, avg_accuracy
from engine.train_config import ABLATION_PRESETS
from models.errors import ConfigurationError
from .benchmark import format_float, run_settings, write_csv
from .settings import RunSettings, apply_mapping

log = logging.getLogger("sedeg.sweep")

SUMMARY_HEADER = ["name", "method", "dataset", "num_tasks", "classes_per_task", "memory",
                  "seed", "class_order_seed", "ablation", "avg", "last"]


@dataclass
class SweepResult:
    settings: RunSettings
    record: RunRecord

    @property
    def avg(self) -> float:
        return avg_accuracy(self.record)

    @property
    def last(self) -> float:
        return self.record.last_accuracy


def ablation_overlays(presets: Sequence[str]) -> List[Dict[str, str]]:
    """Mappings for each ablation row; named presets also add the dytox reference row."""
    overlays = []
    for preset in presets:
        if preset not in ABLATION_PRESETS:
            raise ConfigurationError(f"unknown ablation preset {preset!r}; choose from {sorted(ABLATION_PRESETS)}")
        if preset == "none":
            overlays.append({})
            continue
        for flags in ABLATION_PRESETS[preset]:
            overlay = {k: str(v).lower() for k, v in flags.to_dict().items()}
            overlay["method"] = "sedeg"
            overlays.append(overlay)
        overlays.append({"method": "dytox"})
    return overlays


def expand_grid(grid: Mapping[str, Sequence[str]], base: RunSettings) -> List[RunSettings]:
    """Cartesian product of the grid values on top of ``base``; duplicate cells are dropped."""
    grid = dict(grid)
    overlays = ablation_overlays(grid.pop("ablation", ["none"]))
    keys = sorted(grid)
    cells: Dict[str, RunSettings] = {}
    for combo in itertools.product(*(grid[k] for k in keys)):
        mapping = dict(zip(keys, combo))
        for overlay in overlays:
            settings = apply_mapping(base, {**mapping, **overlay})
            cells.setdefault(json.dumps(settings.to_dict(), sort_keys=True, default=str), settings)
    names = [c.name for c in cells.values()]
    clashes = sorted({n for n in names if names.count(n) > 1})
    if clashes:
        raise ConfigurationError(f"grid cells share run directories: {clashes}")
    return list(cells.values())


def _run_cell(settings: RunSettings) -> SweepResult:
    return SweepResult(settings, run_settings(settings))


def run_sweep(cells: Sequence[RunSettings], out_dir: str, workers: int = 1) -> List[SweepResult]:
    """Run every cell (in parallel processes when ``workers > 1``) and write ``summary.csv``."""
    cells = [c if c.out_dir == out_dir else _with_out_dir(c, out_dir) for c in cells]
    log.info("Sweep: %d cell(s), %d worker(s)", len(cells), workers)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_cell, cells))
    else:
        results = [_run_cell(c) for c in cells]
    write_summary(os.path.join(out_dir, "summary.csv"), results)
    return results


def _with_out_dir(settings: RunSettings, out_dir: str) -> RunSettings:
    return apply_mapping(settings, {"out_dir": out_dir})


def summary_rows(results: Sequence[SweepResult]) -> List[List[str]]:
    rows = []
    for result in results:
        s = result.settings
        rows.append([s.name, s.method, s.spec.dataset, s.spec.num_tasks, s.spec.classes_per_task,
                     s.spec.memory_capacity, s.train.seed, s.spec.class_order_seed,
                     s.train.ablation.label(), format_float(result.avg), format_float(result.last)])
    return rows


def write_summary(path: str, results: Sequence[SweepResult]) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    write_csv(path, SUMMARY_HEADER, summary_rows(results))


def sweep(grid: Mapping[str, Sequence[str]], out_dir: str, base: Optional[RunSettings] = None,
          workers: int = 1) -> List[SweepResult]:
    """Expand ``grid`` and run one benchmark per cell."""
    base = base or RunSettings(out_dir=out_dir)
    return run_sweep(expand_grid(grid, base), out_dir, workers)
