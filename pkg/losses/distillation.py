"""Distillation losses: logits KD, task-embedding KD, balanced logits KD, feature KD."""

from typing import Sequence

import torch
import torch.nn.functional as F

from models.errors import ConfigurationError, TaskOrderError
from .classification import CountsLike, counts_vector


def _same_shape(a: torch.Tensor, b: torch.Tensor, what: str) -> None:
    if a.shape != b.shape:
        raise ConfigurationError(f"{what}: shape mismatch {list(a.shape)} vs {list(b.shape)}")


def loss_kd(o_old: torch.Tensor, o_ens: torch.Tensor) -> torch.Tensor:
    """Sigmoid BCE of the student's old-class logits against σ(o_old), teacher detached."""
    _same_shape(o_old, o_ens, "logits KD")
    targets = torch.sigmoid(o_old.detach())
    return F.binary_cross_entropy_with_logits(o_ens, targets, reduction="mean")


def loss_ted(old: Sequence[torch.Tensor], ens: Sequence[torch.Tensor], t: int) -> torch.Tensor:
    """Task-embedding distillation: mean over old tasks of the embedding MSE."""
    if t <= 1:
        raise TaskOrderError(f"embedding distillation needs t > 1, got t={t}")
    if len(old) != t - 1 or len(ens) != t - 1:
        raise ConfigurationError(
            f"expected {t - 1} embeddings per set, got {len(old)} old and {len(ens)} ensembled"
        )
    total = 0.0
    for e_old, e_ens in zip(old, ens):
        _same_shape(e_old, e_ens, "task embeddings")
        total = total + F.mse_loss(e_ens, e_old.detach(), reduction="mean")
    return total / (t - 1)


def per_class_weights(counts: CountsLike, gamma: float = 1.0, num_classes: int = None) -> torch.Tensor:
    """Inverse-frequency weights ``w_j = C s_j^-γ / Σ_k s_k^-γ`` (mean 1)."""
    if num_classes is None:
        if isinstance(counts, torch.Tensor):
            num_classes = counts.shape[0]
        else:
            num_classes = max(int(k) for k in counts) + 1
    s = counts_vector(counts, num_classes, torch.float64)
    if bool((s < 1).any()):
        zero = [int(j) for j in torch.nonzero(s < 1).flatten()]
        raise ConfigurationError(f"per-class weights need counts >= 1; zero for classes {zero}")
    inv = s.pow(-gamma)
    return num_classes * inv / inv.sum()


def loss_bld(o_new: torch.Tensor, o_ens: torch.Tensor, w: torch.Tensor, tau: float = 1.0,
             conventional: bool = False) -> torch.Tensor:
    """Balanced logits distillation, literal form:

    ``-Σ_j w_j σ(o_new_j / τ) log σ(o_ens_j / τ)``, summed over classes and
    averaged over the batch. The ensembled teacher is detached. With
    ``conventional`` the roles inside σ(·)·log σ(·) are swapped.
    """
    _same_shape(o_new, o_ens, "balanced logits KD")
    if w.shape != (o_new.shape[1],):
        raise ConfigurationError(f"expected {o_new.shape[1]} class weights, got {list(w.shape)}")
    w = w.to(o_new.dtype)
    teacher = o_ens.detach() / tau
    student = o_new / tau
    if conventional:
        per_class = torch.sigmoid(teacher) * F.logsigmoid(student)
    else:
        per_class = torch.sigmoid(student) * F.logsigmoid(teacher)
    return -(per_class * w.unsqueeze(0)).sum(dim=1).mean()


def loss_fd(z_new: torch.Tensor, z_ens: torch.Tensor) -> torch.Tensor:
    """Frobenius norm of ``z_new - z_ens`` per sample, mean over batch; teacher detached."""
    _same_shape(z_new, z_ens, "feature distillation")
    diff = (z_new - z_ens.detach()).flatten(start_dim=1)
    return torch.linalg.vector_norm(diff, ord=2, dim=1).mean()
