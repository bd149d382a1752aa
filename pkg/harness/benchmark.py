"""Benchmark execution and per-run result files."""

import csv
import io
import json
import logging
import os
from dataclasses import asdict
from typing import Any, Dict, Iterable, List, Optional, Sequence

import torch
from torch import nn

from engine.activity_logger import ActivityLogger
from engine.base_learner import IncrementalLearner, TrainerState
from engine.baselines import build_learner
from engine.metrics_collector import PhaseRow, RunRecord
from engine.train_config import TrainConfig
from memory.memory_buffer import MemoryBuffer
from models.checkpoint import atomic_write_text, load_checkpoint, save_checkpoint
from models.config import ModelConfig
from models.errors import TaskOrderError
from models.incremental_vit import IncrementalViT
from ui.accuracy_chart import AccuracyChart
from .datasets import BenchmarkSpec, TaskStream, audit_eval_isolation, build_stream
from .settings import RunSettings

log = logging.getLogger("sedeg.harness")

METRICS_HEADER = ["task_index", "stage", "seen_classes", "all_seen_acc", "avg_acc", "per_task_acc_json"]


def format_float(value: float) -> str:
    """Shortest round-tripping decimal form."""
    return repr(float(value))


def csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    atomic_write_text(path, csv_text(header, rows))


def metrics_rows(record: RunRecord) -> List[List[str]]:
    rows = []
    for row in record.rows:
        per_task = {str(k): v for k, v in sorted(row.per_task_acc.items())}
        rows.append([row.task_index, row.stage, row.seen_classes, format_float(row.all_seen_acc),
                     format_float(row.avg_acc), json.dumps(per_task, sort_keys=True)])
    return rows


def loss_trace_table(trace: List[Dict[str, Any]]):
    """Header and rows of the loss trace; components absent from a stage are blank."""
    fixed = ["step", "epoch", "task_index", "stage"]
    components: List[str] = []
    for entry in trace:
        for key in entry:
            if key not in fixed and key != "total" and key not in components:
                components.append(key)
    header = fixed + components + ["total"]
    rows = []
    for entry in trace:
        row = []
        for key in header:
            value = entry.get(key, "")
            row.append(format_float(value) if isinstance(value, float) else value)
        rows.append(row)
    return header, rows


def read_metrics(path: str) -> List[Dict[str, Any]]:
    """Load a ``metrics.csv`` back into typed rows."""
    with open(path, "r", encoding="utf-8", newline="") as f:
        rows = list(csv.DictReader(f))
    return [
        {
            "task_index": int(r["task_index"]),
            "stage": r["stage"],
            "seen_classes": int(r["seen_classes"]),
            "all_seen_acc": float(r["all_seen_acc"]),
            "avg_acc": float(r["avg_acc"]),
            "per_task_acc": {int(k): v for k, v in json.loads(r["per_task_acc_json"]).items()},
        }
        for r in rows
    ]


def write_run_outputs(run_dir: str, settings: RunSettings, record: RunRecord,
                      logger: ActivityLogger) -> None:
    os.makedirs(run_dir, exist_ok=True)
    write_csv(os.path.join(run_dir, "metrics.csv"), METRICS_HEADER, metrics_rows(record))
    header, rows = loss_trace_table(record.loss_trace)
    write_csv(os.path.join(run_dir, "loss_trace.csv"), header, rows)
    atomic_write_text(os.path.join(run_dir, "config.json"),
                      json.dumps(settings.to_dict(), indent=2, sort_keys=True))
    logger.export_to_json(os.path.join(run_dir, "events.json"))
    logger.export_to_file(os.path.join(run_dir, "events.txt"))
    chart = AccuracyChart()
    chart.save_to_file(chart.curves_from_record(record), os.path.join(run_dir, "accuracy_chart.txt"))


def _row_dict(row: PhaseRow) -> Dict[str, Any]:
    data = asdict(row)
    data["per_task_acc"] = {str(k): v for k, v in sorted(row.per_task_acc.items())}
    return data


def checkpoint_hook(run_dir: str, method: str, logger: ActivityLogger):
    """Stage hook writing ``checkpoints/task{t}_{stage}.ckpt`` with the buffer state."""
    ckpt_dir = os.path.join(run_dir, "checkpoints")

    def hook(task_index: int, stage: str, model: nn.Module, state: TrainerState) -> None:
        os.makedirs(ckpt_dir, exist_ok=True)
        path = os.path.join(ckpt_dir, f"task{task_index}_{stage}.ckpt")
        memory = state.buffer.state_dict() if state.buffer is not None else None
        save_checkpoint(path, model, memory, {
            "method": method,
            "task_index": task_index,
            "stage": stage,
            "tasks_done": state.tasks_done,
            "rows": [_row_dict(r) for r in state.record.rows],
        })
        logger.log_checkpoint(path)

    return hook


def resume_state(path: str, stream: TaskStream, learner: IncrementalLearner) -> TrainerState:
    """Rebuild a trainer state from the checkpoint written at the end of a task."""
    model, memory, header = load_checkpoint(path)
    extra = header.get("extra", {})
    task_index = extra.get("task_index")
    if not isinstance(model, IncrementalViT) or extra.get("tasks_done") != task_index:
        raise TaskOrderError(f"{path} was not written at the end of a task; cannot resume from it")
    rows = extra.get("rows") or []
    if not rows or rows[-1]["task_index"] != task_index:
        raise TaskOrderError(f"{path} carries no result rows up to task {task_index}; cannot resume from it")
    state = learner.initial_state()
    state.record = RunRecord.from_rows(learner.name, rows)
    state.model = model
    state.tasks_done = task_index
    state.seen_classes = list(range(model.num_classes))
    if memory is not None and state.buffer is not None:
        state.buffer = MemoryBuffer.from_state(memory, [t.train_set for t in stream.tasks[:task_index]])
    log.info("Resuming %s after task %d from %s", learner.name, task_index, path)
    return state


def run_settings(settings: RunSettings, logger: Optional[ActivityLogger] = None,
                 resume_from: Optional[str] = None, write: bool = True) -> RunRecord:
    """Execute one run described by ``settings`` and write its result files."""
    torch.manual_seed(settings.train.seed)
    torch.use_deterministic_algorithms(True, warn_only=True)
    stream = build_stream(settings.spec)
    logger = logger or ActivityLogger()
    run_dir = os.path.join(settings.out_dir, settings.name)
    hook = checkpoint_hook(run_dir, settings.method, logger) if write and settings.save_checkpoints else None
    learner = build_learner(settings.method, settings.model, settings.train,
                            settings.spec.memory_capacity, logger, hook)
    state = resume_state(resume_from, stream, learner) if resume_from else None
    state = learner.run_stream(stream.tasks, state)

    memory_ids = state.buffer.sample_ids() if state.buffer is not None else ()
    audited = audit_eval_isolation(stream, memory_ids)
    log.debug("Eval isolation holds for %d eval samples", audited)

    record = state.record
    record.loss_trace = logger.loss_trace()
    if write:
        write_run_outputs(run_dir, settings, record, logger)
        log.info("Results written to %s", run_dir)
    return record


def run_benchmark(spec: BenchmarkSpec, train_config: TrainConfig, method: str = "sedeg",
                  model_config: Optional[ModelConfig] = None, out_dir: Optional[str] = None,
                  run_name: Optional[str] = None, save_checkpoints: bool = False,
                  logger: Optional[ActivityLogger] = None) -> RunRecord:
    """Full run of ``method`` on the stream of ``spec``.

    Nothing is written when ``out_dir`` is None.
    """
    settings = RunSettings(
        spec=spec,
        model=model_config or ModelConfig(input_size=spec.image_size),
        train=train_config,
        method=method,
        out_dir=out_dir or ".",
        run_name=run_name,
        save_checkpoints=save_checkpoints,
    )
    return run_settings(settings, logger, write=out_dir is not None)
