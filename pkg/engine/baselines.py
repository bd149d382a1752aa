"""Reference learners: DyTox-style rehearsal with balanced fine-tuning, and naive fine-tuning."""

import copy
from typing import Optional

import numpy as np
import torch

from losses.classification import divergence_targets, loss_div, sigmoid_bce
from losses.distillation import loss_kd
from memory.memory_buffer import MemoryBuffer
from models.encoder import clone_trainable
from models.errors import ConfigurationError
from models.image_set import ImageSet
from models.incremental_vit import IncrementalViT
from .base_learner import IncrementalLearner, TrainerState
from .trainer import SedegTrainer, new_div_head, thaw


def balanced_subset(task_set: ImageSet, buffer: Optional[MemoryBuffer], seed: int) -> ImageSet:
    """Downsample every new class to the smallest per-class memory size."""
    sizes = [n for n in buffer.per_class_sizes().values() if n > 0] if buffer is not None else []
    quota = min(sizes) if sizes else 1
    rng = np.random.default_rng([seed, task_set.task_index])
    keep = []
    for class_id in task_set.classes():
        rows = np.nonzero(task_set.labels == class_id)[0]
        keep.extend(sorted(rng.permutation(rows)[:quota].tolist()))
    return task_set.subset(keep)


class DyToxBaseline(IncrementalLearner):
    """Single shared encoder trained with BCE + logits KD + divergence, then balanced fine-tuning."""

    name = "dytox"

    def learn_task(self, task_index: int, task, state: TrainerState) -> IncrementalViT:
        old_model = state.model.snapshot()
        base = self.base_stage(task_index, old_model, task, state)
        return self.finetune_stage(task_index, base, old_model, task, state)

    def base_stage(self, task_index: int, old_model: IncrementalViT, task,
                   state: TrainerState) -> IncrementalViT:
        num_old = old_model.num_classes
        num_new = len(task.classes)
        torch.manual_seed(self.stage_seed(task_index, "base"))
        decoder = thaw(copy.deepcopy(old_model.decoder))
        decoder.add_task(num_new)
        decoder.freeze_old_tasks()
        model = IncrementalViT(self.model_config, clone_trainable(old_model.encoder), decoder)
        div_head = new_div_head(self.model_config.embed_dim, num_new)
        loss_cfg = self.config.effective_loss(num_old, num_old + num_new)
        alpha = loss_cfg.alpha

        def step(images, labels):
            embeddings, logits = model.decoder.forward_all(model.encode(images))
            with torch.no_grad():
                o_old = old_model(images)
            bce = sigmoid_bce(logits, labels)
            kd = loss_kd(o_old, logits[:, :num_old])
            div = loss_div(div_head(embeddings[-1]),
                           divergence_targets(labels, num_old, num_new))
            total = (1.0 - alpha) * bce + alpha * kd + loss_cfg.lam * div
            return total, {"bce": float(bce.detach()), "kd": float(kd.detach()),
                           "div": float(div.detach()), "alpha": alpha}

        params = [p for p in model.parameters() if p.requires_grad] + list(div_head.parameters())
        self.optimize(task_index, "base", model, params, [old_model],
                      self.config.stage1_epochs, task.train_set, state.buffer, step)
        self.finish_stage(task_index, "base", model, state, num_old + num_new, final=False)
        return model

    def finetune_stage(self, task_index: int, model: IncrementalViT, old_model: IncrementalViT,
                       task, state: TrainerState) -> IncrementalViT:
        """Tune the whole model on memory plus a class-balanced sample of the new data."""
        torch.manual_seed(self.stage_seed(task_index, "finetune"))
        balanced = balanced_subset(task.train_set, state.buffer, self.config.seed)
        thaw(model)

        def step(images, labels):
            loss = sigmoid_bce(model(images), labels)
            return loss, {"bce": float(loss.detach())}

        self.optimize(task_index, "finetune", model, list(model.parameters()), [old_model],
                      self.config.finetune_epochs, balanced, state.buffer, step,
                      lr=self.config.learning_rate * self.config.finetune_lr_scale)
        self.finish_stage(task_index, "finetune", model, state, model.num_classes)
        return model


class FinetuneBaseline(IncrementalLearner):
    """No memory and no distillation: every task simply continues training on new data."""

    name = "finetune"
    uses_memory = False

    def learn_task(self, task_index: int, task, state: TrainerState) -> IncrementalViT:
        torch.manual_seed(self.stage_seed(task_index, "naive"))
        model = thaw(copy.deepcopy(state.model))
        model.decoder.add_task(len(task.classes))

        def step(images, labels):
            loss = sigmoid_bce(model(images), labels)
            return loss, {"bce": float(loss.detach())}

        self.optimize(task_index, "naive", model, list(model.parameters()), [],
                      self.config.stage1_epochs, task.train_set, None, step)
        self.finish_stage(task_index, "naive", model, state, model.num_classes)
        return model


LEARNERS = {
    "sedeg": SedegTrainer,
    "dytox": DyToxBaseline,
    "finetune": FinetuneBaseline,
}


def build_learner(method: str, model_config, config, memory_capacity: int,
                  logger=None, on_stage_end=None) -> IncrementalLearner:
    """Construct the learner for ``method`` (``sedeg``, ``dytox`` or ``finetune``)."""
    if method not in LEARNERS:
        raise ConfigurationError(f"unknown method {method!r}; choose from {sorted(LEARNERS)}")
    return LEARNERS[method](model_config, config, memory_capacity, logger, on_stage_end)
