"""Accuracy evaluation and per-stage run records."""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Sequence

import numpy as np
import torch
from torch import nn

from models.errors import ConfigurationError
from models.image_set import ImageSet

EVAL_BATCH_SIZE = 256


@dataclass
class EvalResult:
    """Accuracies (in percent) after a stage."""
    per_task_acc: Dict[int, float]
    all_seen_acc: float
    per_task_size: Dict[int, int] = field(default_factory=dict)


@dataclass
class PhaseRow:
    """One recorded stage completion."""
    task_index: int
    stage: str
    seen_classes: int
    all_seen_acc: float
    avg_acc: float
    per_task_acc: Dict[int, float]


@torch.no_grad()
def predict(model: nn.Module, images: np.ndarray) -> np.ndarray:
    """Argmax over the concatenated logits of all seen classes."""
    was_training = model.training
    model.eval()
    preds = []
    for start in range(0, len(images), EVAL_BATCH_SIZE):
        batch = torch.from_numpy(np.ascontiguousarray(images[start:start + EVAL_BATCH_SIZE],
                                                      dtype=np.float32))
        preds.append(model.decoder.full_logits(model.encode(batch)).argmax(dim=1).numpy())
    model.train(was_training)
    return np.concatenate(preds) if preds else np.zeros(0, dtype=np.int64)


def evaluate_sets(model: nn.Module, eval_sets: Sequence[ImageSet]) -> EvalResult:
    per_task, sizes = {}, {}
    correct_total, n_total = 0, 0
    for task_index, eval_set in enumerate(eval_sets, start=1):
        correct = int((predict(model, eval_set.images) == eval_set.labels).sum())
        n = len(eval_set)
        per_task[task_index] = 100.0 * correct / n if n else 0.0
        sizes[task_index] = n
        correct_total += correct
        n_total += n
    all_seen = 100.0 * correct_total / n_total if n_total else 0.0
    return EvalResult(per_task, all_seen, sizes)


def evaluate(model: nn.Module, stream, upto_task: int) -> EvalResult:
    """Accuracy on each eval set of tasks ``1..upto_task`` and pooled over all of them."""
    return evaluate_sets(model, [task.eval_set for task in stream.tasks[:upto_task]])


class RunRecord:
    """Per-stage metrics of a run.

    A phase is a task; the phase accuracy of a task is the all-seen accuracy of
    its last recorded stage. ``avg_acc`` on a row is the mean of the phase
    accuracies of earlier tasks and this row's accuracy.
    """

    def __init__(self, method: str = "sedeg"):
        self.method = method
        self.rows: List[PhaseRow] = []
        self.loss_trace: List[Dict[str, Any]] = []

    @classmethod
    def from_rows(cls, method: str, rows: Sequence[Mapping[str, Any]]) -> "RunRecord":
        """Rebuild a record from rows serialized with ``dataclasses.asdict``."""
        record = cls(method)
        for r in rows:
            per_task = {int(k): float(v) for k, v in r["per_task_acc"].items()}
            record.rows.append(PhaseRow(int(r["task_index"]), r["stage"], int(r["seen_classes"]),
                                        float(r["all_seen_acc"]), float(r["avg_acc"]), per_task))
        return record

    def _phase_accs(self) -> Dict[int, float]:
        accs = {}
        for row in self.rows:
            accs[row.task_index] = row.all_seen_acc
        return accs

    def add_stage(self, task_index: int, stage: str, seen_classes: int,
                  result: EvalResult) -> PhaseRow:
        accs = self._phase_accs()
        accs[task_index] = result.all_seen_acc
        phases = [accs[t] for t in sorted(accs)]
        row = PhaseRow(task_index, stage, seen_classes, result.all_seen_acc,
                       float(np.mean(phases)), dict(result.per_task_acc))
        self.rows.append(row)
        return row

    def phase_accuracies(self) -> List[float]:
        accs = self._phase_accs()
        return [accs[t] for t in sorted(accs)]

    @property
    def last_accuracy(self) -> float:
        if not self.rows:
            raise ConfigurationError("run record is empty")
        return self.rows[-1].all_seen_acc

    def stage_rows(self, stage: str) -> List[PhaseRow]:
        return [r for r in self.rows if r.stage == stage]


def running_means(values: Sequence[float]) -> List[float]:
    """Mean of the first k values for every k."""
    out, total = [], 0.0
    for k, value in enumerate(values, start=1):
        total += value
        out.append(total / k)
    return out


def avg_accuracy(record) -> float:
    """Mean of the all-seen accuracies after each completed phase.

    Accepts a ``RunRecord`` or a plain sequence of phase accuracies.
    """
    values = record.phase_accuracies() if isinstance(record, RunRecord) else list(record)
    if not values:
        raise ConfigurationError("cannot average an empty record")
    return float(sum(values) / len(values))
