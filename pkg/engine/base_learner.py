"""Base class shared by the SEDEG trainer and the baseline learners."""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import torch
from torch import nn
from torch.optim import SGD, AdamW
from torch.optim.lr_scheduler import CosineAnnealingLR

from losses.classification import sigmoid_bce
from memory.memory_buffer import MemoryBuffer, merged_loader
from models.config import ModelConfig
from models.errors import DataError, FreezeViolationError, TaskOrderError, TrainingError
from models.image_set import ImageSet
from models.incremental_vit import IncrementalViT
from .activity_logger import ActivityLogger
from .freeze_audit import FreezeMask, count_parameters
from .metrics_collector import PhaseRow, RunRecord, evaluate_sets
from .train_config import TrainConfig

STAGE_CODES = {"bootstrap": 0, "stage1": 1, "stage2": 2, "base": 3, "finetune": 4, "naive": 5}

StepFn = Callable[[torch.Tensor, torch.Tensor], Tuple[torch.Tensor, Dict[str, float]]]
StageHook = Callable[[int, str, nn.Module, "TrainerState"], None]


@dataclass
class TrainerState:
    """Everything carried from one task to the next."""
    model: Optional[IncrementalViT] = None
    buffer: Optional[MemoryBuffer] = None
    tasks_done: int = 0
    seen_classes: List[int] = field(default_factory=list)
    eval_sets: List[ImageSet] = field(default_factory=list)
    record: RunRecord = field(default_factory=RunRecord)
    # the last stage of a task is reported after the memory update
    pending_stage: Optional[Tuple[str, nn.Module]] = None

    @property
    def num_seen(self) -> int:
        return len(self.seen_classes)


def random_flip(images: torch.Tensor, generator: torch.Generator) -> torch.Tensor:
    """Horizontally flip a random half of a channels-last batch."""
    mask = torch.rand(images.shape[0], generator=generator) < 0.5
    if not mask.any():
        return images
    images = images.clone()
    images[mask] = images[mask].flip(dims=[2])
    return images


class IncrementalLearner(ABC):
    """Task-by-task learner over a class-incremental stream.

    Subclasses implement ``learn_task`` for tasks ``t >= 2``; task 1 is always
    the DyTox-style bootstrap.
    """

    name = "base"
    uses_memory = True

    def __init__(self, model_config: ModelConfig, config: TrainConfig,
                 memory_capacity: int = 0, logger: Optional[ActivityLogger] = None,
                 on_stage_end: Optional[StageHook] = None):
        self.model_config = model_config
        self.config = config
        self.memory_capacity = memory_capacity
        self.logger = logger or ActivityLogger()
        self.on_stage_end = on_stage_end

    # ------------------------------------------------------------------ state

    def initial_state(self) -> TrainerState:
        buffer = MemoryBuffer(self.memory_capacity, self.config.seed) if self.uses_memory else None
        return TrainerState(buffer=buffer, record=RunRecord(self.name))

    def stage_seed(self, task_index: int, stage: str) -> int:
        return self.config.seed * 10_007 + task_index * 101 + STAGE_CODES[stage]

    @staticmethod
    def check_task_classes(task, num_old: int) -> None:
        expected = list(range(num_old, num_old + len(task.classes)))
        if list(task.classes) != expected:
            raise DataError(
                f"task {task.task_index} classes {list(task.classes)} are not the next "
                f"{len(task.classes)} global ids starting at {num_old}"
            )

    # ------------------------------------------------------------------ protocol

    def run_task(self, task_index: int, task, state: TrainerState) -> TrainerState:
        """Learn task ``task_index``; tasks must arrive in order starting at 1."""
        if task_index != state.tasks_done + 1:
            raise TaskOrderError(
                f"expected task {state.tasks_done + 1}, got task {task_index}"
            )
        self.check_task_classes(task, state.num_seen)
        self.logger.log_task_start(task_index, list(task.classes))
        state.eval_sets.append(task.eval_set)
        if task_index == 1:
            state.model = self.bootstrap_task1(task, state)
        else:
            state.model = self.learn_task(task_index, task, state)
        state.seen_classes.extend(int(c) for c in task.classes)
        state.tasks_done = task_index
        self.update_memory(task, state)
        if state.pending_stage is not None:
            stage, model = state.pending_stage
            state.pending_stage = None
            if self.on_stage_end is not None:
                self.on_stage_end(task_index, stage, model, state)
        return state

    def run_stream(self, tasks: Sequence, state: Optional[TrainerState] = None) -> TrainerState:
        """Run every task not yet done in ``state`` (a fresh state by default)."""
        state = state or self.initial_state()
        self.logger.log_run_start(self.name, len(tasks))
        for task_index, task in enumerate(tasks, start=1):
            if task_index <= state.tasks_done:
                if len(state.eval_sets) < task_index:
                    state.eval_sets.append(task.eval_set)
                continue
            self.run_task(task_index, task, state)
        if not state.record.rows:
            raise TaskOrderError("no task left to run")
        record = state.record
        self.logger.log_run_end(record.last_accuracy, record.rows[-1].avg_acc)
        return state

    @abstractmethod
    def learn_task(self, task_index: int, task, state: TrainerState) -> IncrementalViT:
        """Train on task ``task_index >= 2`` and return the model handed to the next task."""

    def bootstrap_task1(self, task, state: TrainerState) -> IncrementalViT:
        """Single-encoder model trained with sigmoid BCE on the first task's classes."""
        torch.manual_seed(self.stage_seed(1, "bootstrap"))
        model = IncrementalViT(self.model_config)
        model.decoder.add_task(len(task.classes))

        def step(images, labels):
            loss = sigmoid_bce(model(images), labels)
            return loss, {"bce": float(loss.detach())}

        self.optimize(1, "bootstrap", model, list(model.parameters()), [],
                      self.config.bootstrap_epochs, task.train_set, None, step)
        self.finish_stage(1, "bootstrap", model, state, len(task.classes))
        return model

    def update_memory(self, task, state: TrainerState) -> None:
        buffer = state.buffer
        if buffer is None:
            return
        before = len(buffer.warnings)
        buffer.update(task.train_set, state.seen_classes)
        for message in buffer.warnings[before:]:
            self.logger.log_warning(message)
        self.logger.log_memory_updated(len(buffer), buffer.capacity, len(buffer.classes))

    # ------------------------------------------------------------------ helpers

    def make_optimizer(self, params: List[nn.Parameter], lr: float) -> torch.optim.Optimizer:
        if self.config.optimizer == "sgd":
            return SGD(params, lr=lr, momentum=0.9, weight_decay=self.config.weight_decay)
        return AdamW(params, lr=lr, weight_decay=self.config.weight_decay)

    def audit(self, masks: List[Tuple[FreezeMask, nn.Module]], stage: str) -> None:
        for mask, module in masks:
            violations = mask.violations(module)
            self.logger.log_freeze_audit(stage, len(mask.names), violations)
            if violations:
                raise FreezeViolationError(mask.stage, violations)

    def optimize(self, task_index: int, stage: str, model: nn.Module,
                 params: List[nn.Parameter], audited: List[nn.Module], epochs: int,
                 dataset: ImageSet, buffer: Optional[MemoryBuffer], step: StepFn,
                 lr: Optional[float] = None) -> List[float]:
        """Run ``epochs`` of seeded minibatch training and return the per-epoch mean loss.

        Frozen parameters of ``model`` and of every module in ``audited`` are
        hashed before the stage and re-checked after each epoch.
        """
        params = [p for p in params if p.requires_grad]
        self.logger.log_stage_start(task_index, stage, count_parameters(model),
                                    sum(p.numel() for p in params))
        seed = self.stage_seed(task_index, stage)
        optimizer = self.make_optimizer(params, lr or self.config.learning_rate)
        scheduler = CosineAnnealingLR(optimizer, T_max=epochs)
        masks = [(FreezeMask.capture(stage, m), m) for m in [model, *audited]]
        flip_gen = torch.Generator()
        flip_gen.manual_seed(seed)

        epoch_losses = []
        for epoch in range(epochs):
            model.train()
            losses = []
            for images, labels, _ in merged_loader(buffer, dataset, self.config.batch_size,
                                                   seed, epoch):
                if self.config.augment_flip:
                    images = random_flip(images, flip_gen)
                total, components = step(images, labels)
                if not torch.isfinite(total):
                    raise TrainingError(
                        f"non-finite loss at task {task_index} {stage} epoch {epoch}: {components}"
                    )
                optimizer.zero_grad(set_to_none=True)
                total.backward()
                optimizer.step()
                self.logger.advance()
                value = total.item()
                self.logger.log_step_loss(task_index, stage, epoch, components, value)
                losses.append(value)
            scheduler.step()
            mean_loss = sum(losses) / len(losses)
            epoch_losses.append(mean_loss)
            self.logger.log_epoch_end(task_index, stage, epoch, mean_loss)
            self.audit(masks, stage)
        model.eval()
        return epoch_losses

    def finish_stage(self, task_index: int, stage: str, model: nn.Module,
                     state: TrainerState, seen_classes: int, final: bool = True) -> PhaseRow:
        """Evaluate on every seen task, record the row and fire the stage hook.

        The hook of a task's final stage fires from ``run_task`` once memory
        has been updated, so its checkpoint carries the post-task buffer.
        """
        result = evaluate_sets(model, state.eval_sets)
        row = state.record.add_stage(task_index, stage, seen_classes, result)
        self.logger.log_evaluation(task_index, stage, row.all_seen_acc, row.avg_acc)
        self.logger.log_stage_end(task_index, stage, {"all_seen_acc": row.all_seen_acc})
        if final:
            state.pending_stage = (stage, model)
        elif self.on_stage_end is not None:
            self.on_stage_end(task_index, stage, model, state)
        return row
