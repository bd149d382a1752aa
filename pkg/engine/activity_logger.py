"""Activity Logger for continual-learning runs."""

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

from models.checkpoint import atomic_write_text

log = logging.getLogger("sedeg")


class EventType(Enum):
    """Types of events in a run."""
    RUN_START = "run_start"
    RUN_END = "run_end"
    TASK_START = "task_start"
    STAGE_START = "stage_start"
    STAGE_END = "stage_end"
    EPOCH_END = "epoch_end"
    STEP_LOSS = "step_loss"
    MEMORY_UPDATED = "memory_updated"
    EVALUATION = "evaluation"
    CHECKPOINT_SAVED = "checkpoint_saved"
    FREEZE_AUDIT = "freeze_audit"
    WARNING = "warning"


_LEVELS = {
    EventType.STEP_LOSS: logging.DEBUG,
    EventType.FREEZE_AUDIT: logging.DEBUG,
    EventType.WARNING: logging.WARNING,
}


@dataclass
class LogEvent:
    """A single log event."""
    step: int  # global optimizer step when the event was logged
    event_type: EventType
    description: str
    details: Dict[str, Any] = field(default_factory=dict)

    def to_string(self) -> str:
        return f"[{self.step:07d}] {self.event_type.value:<16} {self.description}"

    def to_dict(self) -> Dict:
        return {
            'step': self.step,
            'event_type': self.event_type.value,
            'description': self.description,
            'details': self.details,
        }


class ActivityLogger:
    """Records every event of a run and mirrors it to the ``sedeg`` logger."""

    def __init__(self, echo: bool = True):
        self.events: List[LogEvent] = []
        self.current_step: int = 0
        self.enabled: bool = True
        self.echo = echo

    def log(self, event_type: EventType, description: str,
            details: Dict[str, Any] = None) -> None:
        if not self.enabled:
            return
        event = LogEvent(self.current_step, event_type, description, details or {})
        self.events.append(event)
        if self.echo:
            log.log(_LEVELS.get(event_type, logging.INFO), description)

    def log_run_start(self, method: str, num_tasks: int) -> None:
        self.log(EventType.RUN_START, f"Run started: {method}, {num_tasks} task(s)",
                 {'method': method, 'num_tasks': num_tasks})

    def log_run_end(self, last_acc: float, avg_acc: float) -> None:
        self.log(EventType.RUN_END, f"Run finished - LAST {last_acc:.2f}, AVG {avg_acc:.2f}",
                 {'last_acc': last_acc, 'avg_acc': avg_acc})

    def log_task_start(self, task_index: int, classes: List[int]) -> None:
        self.log(EventType.TASK_START, f"Task {task_index}: {len(classes)} new class(es)",
                 {'task_index': task_index, 'classes': list(classes)})

    def log_stage_start(self, task_index: int, stage: str, all_params: int,
                        trainable_params: int) -> None:
        self.log(
            EventType.STAGE_START,
            f"Task {task_index} {stage}: {all_params} params, {trainable_params} trainable",
            {'task_index': task_index, 'stage': stage, 'all_params': all_params,
             'trainable_params': trainable_params}
        )

    def log_stage_end(self, task_index: int, stage: str, details: Dict[str, Any] = None) -> None:
        self.log(EventType.STAGE_END, f"Task {task_index} {stage} complete",
                 {'task_index': task_index, 'stage': stage, **(details or {})})

    def log_epoch_end(self, task_index: int, stage: str, epoch: int, mean_loss: float) -> None:
        self.log(EventType.EPOCH_END,
                 f"Task {task_index} {stage} epoch {epoch}: loss {mean_loss:.4f}",
                 {'task_index': task_index, 'stage': stage, 'epoch': epoch,
                  'mean_loss': mean_loss})

    def log_step_loss(self, task_index: int, stage: str, epoch: int,
                      components: Dict[str, float], total: float) -> None:
        self.log(EventType.STEP_LOSS, f"step {self.current_step} {stage} loss {total:.4f}",
                 {'task_index': task_index, 'stage': stage, 'epoch': epoch,
                  'components': dict(components), 'total': total})

    def log_memory_updated(self, size: int, capacity: int, num_classes: int) -> None:
        self.log(EventType.MEMORY_UPDATED,
                 f"Memory holds {size}/{capacity} exemplars over {num_classes} classes",
                 {'size': size, 'capacity': capacity, 'num_classes': num_classes})

    def log_evaluation(self, task_index: int, stage: str, all_seen_acc: float,
                       avg_acc: float) -> None:
        self.log(EventType.EVALUATION,
                 f"Task {task_index} {stage}: acc {all_seen_acc:.2f}, avg {avg_acc:.2f}",
                 {'task_index': task_index, 'stage': stage,
                  'all_seen_acc': all_seen_acc, 'avg_acc': avg_acc})

    def log_checkpoint(self, path: str) -> None:
        self.log(EventType.CHECKPOINT_SAVED, f"Checkpoint written to {path}", {'path': path})

    def log_freeze_audit(self, stage: str, checked: int, violations: List[str]) -> None:
        self.log(EventType.FREEZE_AUDIT,
                 f"{stage}: {checked} frozen tensors audited, {len(violations)} changed",
                 {'stage': stage, 'checked': checked, 'violations': list(violations)})

    def log_warning(self, message: str) -> None:
        self.log(EventType.WARNING, message, {})

    def advance(self, steps: int = 1) -> None:
        self.current_step += steps

    def get_events(self, event_type: EventType = None) -> List[LogEvent]:
        """Get events, optionally filtered by type."""
        if event_type is None:
            return self.events
        return [e for e in self.events if e.event_type == event_type]

    def loss_trace(self) -> List[Dict[str, Any]]:
        """Flattened STEP_LOSS rows: step, epoch, task, stage, components, total."""
        rows = []
        for e in self.get_events(EventType.STEP_LOSS):
            row = {'step': e.step, 'epoch': e.details['epoch'],
                   'task_index': e.details['task_index'], 'stage': e.details['stage']}
            row.update(e.details['components'])
            row['total'] = e.details['total']
            rows.append(row)
        return rows

    def export_to_file(self, filename: str = "events.txt") -> None:
        lines = ["=" * 70, "                    RUN ACTIVITY LOG", "=" * 70, ""]
        lines += [e.to_string() for e in self.events]
        lines += ["", "=" * 70, f"Total events logged: {len(self.events)}", ""]
        atomic_write_text(filename, "\n".join(lines))

    def export_to_json(self, filename: str = "events.json") -> None:
        data = {
            'events': [e.to_dict() for e in self.events],
            'total_events': len(self.events)
        }
        atomic_write_text(filename, json.dumps(data, indent=2))

    def get_summary(self) -> Dict:
        summary = {}
        for event in self.events:
            event_type = event.event_type.value
            summary[event_type] = summary.get(event_type, 0) + 1
        return summary

    def enable(self) -> None:
        self.enabled = True

    def disable(self) -> None:
        self.enabled = False

    def clear(self) -> None:
        self.events.clear()
        self.current_step = 0
