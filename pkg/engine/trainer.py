"""SEDEG: ensembled-encoder training followed by encoder compression."""

import copy
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import torch
from torch import nn

from losses.classification import (
    divergence_targets, loss_aux, loss_bc, loss_div, sigmoid_bce,
)
from losses.composition import (
    LossConfig, Stage1Parts, Stage2Parts, stage1_loss, stage2_loss,
)
from losses.distillation import loss_bld, loss_fd, loss_kd, loss_ted, per_class_weights
from memory.memory_buffer import MemoryBuffer, class_counts
from models.decoder import Decoder
from models.encoder import Encoder, clone_trainable, freeze
from models.ensembled_encoder import EnsembledEncoder, EnsembledModel
from models.errors import TaskOrderError, TrainingError
from models.incremental_vit import IncrementalViT
from .base_learner import IncrementalLearner, TrainerState


def thaw(module: nn.Module) -> nn.Module:
    for param in module.parameters():
        param.requires_grad_(True)
    return module


def new_div_head(embed_dim: int, num_new_classes: int) -> nn.Linear:
    """Stage-local (k+1)-way divergence head; index k collects every old class."""
    return nn.Linear(embed_dim, num_new_classes + 1)


def _scalar(value) -> float:
    return float(value.detach()) if isinstance(value, torch.Tensor) else float(value)


@dataclass
class Stage1Context:
    """Models and loss settings for the ensembled-encoder stage of one task."""
    task_index: int
    old_model: IncrementalViT
    model: EnsembledModel
    div_head: nn.Linear
    loss: LossConfig
    counts: torch.Tensor
    num_old: int
    num_new: int

    def trainable_parameters(self):
        return [p for p in self.model.parameters() if p.requires_grad] + list(self.div_head.parameters())


@dataclass
class Stage2Context:
    """Teacher, student and loss settings for the compression stage of one task."""
    task_index: int
    teacher: EnsembledModel
    model: IncrementalViT
    div_head: nn.Linear
    loss: LossConfig
    weights: torch.Tensor
    num_old: int
    num_new: int

    def trainable_parameters(self):
        return [p for p in self.model.parameters() if p.requires_grad] + list(self.div_head.parameters())


class SedegTrainer(IncrementalLearner):
    """Two-stage learner.

    Stage 1 boosts a frozen copy of the old encoder with a supplementary
    encoder and trains it jointly with the decoder; stage 2 distills the
    ensembled encoder back into a single encoder of the original size.
    """

    name = "sedeg"

    def learn_task(self, task_index: int, task, state: TrainerState) -> IncrementalViT:
        old_model = state.model.snapshot()
        ensembled = self.stage1(old_model, task, state.buffer, state=state)
        return self.stage2(ensembled, old_model, task, state.buffer, state=state)

    # ------------------------------------------------------------------ stage 1

    def prepare_stage1(self, old_model: IncrementalViT, task,
                       buffer: Optional[MemoryBuffer]) -> Stage1Context:
        task_index = old_model.num_tasks + 1
        if task_index < 2:
            raise TaskOrderError("stage 1 needs a trained old model; use the bootstrap for task 1")
        num_old = old_model.num_classes
        num_new = len(task.classes)
        num_total = num_old + num_new
        torch.manual_seed(self.stage_seed(task_index, "stage1"))

        decoder = thaw(copy.deepcopy(old_model.decoder))
        decoder.add_task(num_new)
        decoder.freeze_old_tasks()
        ens = EnsembledEncoder(old_model.encoder, num_total, self.config.sup_init)
        model = EnsembledModel(ens, decoder)
        return Stage1Context(
            task_index=task_index,
            old_model=old_model,
            model=model,
            div_head=new_div_head(self.model_config.embed_dim, num_new),
            loss=self.config.effective_loss(num_old, num_total),
            counts=class_counts(buffer, task.train_set).vector(num_total),
            num_old=num_old,
            num_new=num_new,
        )

    def stage1_step(self, ctx: Stage1Context, images: torch.Tensor,
                    labels: torch.Tensor) -> Tuple[torch.Tensor, Dict[str, float]]:
        """Stage-1 objective on one batch; returns ``(total, logged parts)``."""
        flags = self.config.ablation
        t = ctx.task_index
        ens = ctx.model.ensembled_encoder
        z_ens, z_old, z_sup = ens.branches(images)
        embeddings, logits = ctx.model.decoder.forward_all(z_ens)

        with torch.no_grad():
            old_embeddings, o_old = ctx.old_model.decoder.forward_all(z_old)

        parts = Stage1Parts()
        if flags.balanced_classification:
            parts.bc = loss_bc(logits, labels, ctx.counts, ctx.loss.tau)
        else:
            parts.bc = sigmoid_bce(logits, labels)
        parts.kd = loss_kd(o_old, logits[:, :ctx.num_old])
        targets = divergence_targets(labels, ctx.num_old, ctx.num_new)
        parts.div = loss_div(ctx.div_head(embeddings[-1]), targets)
        if flags.aux_loss:
            parts.aux = loss_aux(ens.aux_from_features(z_sup), labels)
        if flags.embeddings_kd:
            parts.ted = loss_ted(old_embeddings, embeddings[:t - 1], t)

        total = stage1_loss(parts, ctx.loss)
        logged = {name: _scalar(getattr(parts, name)) for name in ("bc", "kd", "div", "aux", "ted")}
        logged["alpha"] = ctx.loss.alpha
        return total, logged

    def stage1(self, old_model: IncrementalViT, task, buffer: Optional[MemoryBuffer],
               state: Optional[TrainerState] = None) -> EnsembledModel:
        """Train the ensembled encoder and the decoder; returns the frozen stage-1 model."""
        ctx = self.prepare_stage1(old_model, task, buffer)
        self.optimize(ctx.task_index, "stage1", ctx.model, ctx.trainable_parameters(),
                      [old_model], self.config.stage1_epochs, task.train_set, buffer,
                      lambda x, y: self.stage1_step(ctx, x, y))
        model = ctx.model
        model.discard_aux_head()
        freeze(model)
        model.eval()
        if state is not None:
            self.finish_stage(ctx.task_index, "stage1", model, state,
                              ctx.num_old + ctx.num_new, final=False)
        return model

    # ------------------------------------------------------------------ stage 2

    def prepare_stage2(self, ensembled: EnsembledModel, old_model: IncrementalViT, task,
                       buffer: Optional[MemoryBuffer]) -> Stage2Context:
        task_index = ensembled.num_tasks
        num_total = ensembled.num_classes
        num_new = len(task.classes)
        flags = self.config.ablation
        torch.manual_seed(self.stage_seed(task_index, "stage2"))

        if self.config.student_init == "copy":
            encoder = clone_trainable(old_model.encoder)
        else:
            encoder = Encoder(self.model_config)
        decoder: Decoder = copy.deepcopy(ensembled.decoder)
        if flags.distill_encoder_only:
            freeze(decoder)
        else:
            thaw(decoder)
        model = IncrementalViT(self.model_config, encoder, decoder)

        counts = class_counts(buffer, task.train_set).vector(num_total)
        if flags.balanced_kd:
            weights = per_class_weights(counts.clamp_min(1.0), self.config.loss.gamma).float()
        else:
            weights = torch.ones(num_total)
        return Stage2Context(
            task_index=task_index,
            teacher=ensembled,
            model=model,
            div_head=new_div_head(self.model_config.embed_dim, num_new),
            loss=self.config.effective_loss(),
            weights=weights,
            num_old=num_total - num_new,
            num_new=num_new,
        )

    def stage2_step(self, ctx: Stage2Context, images: torch.Tensor,
                    labels: torch.Tensor) -> Tuple[torch.Tensor, Dict[str, float]]:
        """Stage-2 objective on one batch; the stage-1 model is a constant teacher."""
        z_new = ctx.model.encode(images)
        embeddings, o_new = ctx.model.decoder.forward_all(z_new)
        with torch.no_grad():
            z_ens = ctx.teacher.encode(images)
            o_ens = ctx.teacher.decoder.full_logits(z_ens)

        parts = Stage2Parts()
        parts.bld = loss_bld(o_new, o_ens, ctx.weights, ctx.loss.tau, ctx.loss.bld_conventional)
        targets = divergence_targets(labels, ctx.num_old, ctx.num_new)
        parts.div = loss_div(ctx.div_head(embeddings[-1]), targets)
        if self.config.ablation.feature_kd:
            parts.fd = loss_fd(z_new, z_ens)

        total = stage2_loss(parts, ctx.loss)
        return total, {name: _scalar(getattr(parts, name)) for name in ("bld", "div", "fd")}

    def stage2(self, ensembled: EnsembledModel, old_model: IncrementalViT, task,
               buffer: Optional[MemoryBuffer],
               state: Optional[TrainerState] = None) -> IncrementalViT:
        """Distill the ensembled encoder into a new single encoder."""
        ctx = self.prepare_stage2(ensembled, old_model, task, buffer)
        self.optimize(ctx.task_index, "stage2", ctx.model, ctx.trainable_parameters(),
                      [ensembled, old_model], self.config.stage2_epochs, task.train_set, buffer,
                      lambda x, y: self.stage2_step(ctx, x, y))
        new_model = ctx.model
        if new_model.encoder.param_count != old_model.encoder.param_count:
            raise TrainingError(
                f"compressed encoder has {new_model.encoder.param_count} parameters, "
                f"expected {old_model.encoder.param_count}"
            )
        if state is not None:
            self.finish_stage(ctx.task_index, "stage2", new_model, state, ensembled.num_classes)
        return new_model
