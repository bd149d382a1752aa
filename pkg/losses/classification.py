"""Classification losses: auxiliary BCE, balanced softmax, divergence, plain BCE."""

from typing import Dict, Mapping, Union

import torch
import torch.nn.functional as F

from models.errors import ConfigurationError, DataError

CountsLike = Union[Mapping[int, int], torch.Tensor]


def _check_labels(labels: torch.Tensor, num_classes: int) -> None:
    if labels.numel() and (int(labels.min()) < 0 or int(labels.max()) >= num_classes):
        raise DataError(
            f"labels must lie in [0, {num_classes}), got range "
            f"[{int(labels.min())}, {int(labels.max())}]"
        )


def one_hot_targets(labels: torch.Tensor, num_classes: int, dtype=torch.float32) -> torch.Tensor:
    _check_labels(labels, num_classes)
    return F.one_hot(labels.long(), num_classes).to(dtype)


def sigmoid_bce(logits: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """Per-class sigmoid BCE against one-hot targets, mean over batch and classes."""
    targets = one_hot_targets(labels, logits.shape[1], logits.dtype)
    return F.binary_cross_entropy_with_logits(logits, targets, reduction="mean")


def loss_aux(o_sup: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """Auxiliary loss on the supplementary encoder's head over all seen classes."""
    return sigmoid_bce(o_sup, labels)


def counts_vector(counts: CountsLike, num_classes: int, dtype=torch.float32) -> torch.Tensor:
    """Dense length-C vector of per-class sample counts (missing classes → 0)."""
    if isinstance(counts, torch.Tensor):
        if counts.shape != (num_classes,):
            raise ConfigurationError(f"expected {num_classes} counts, got shape {list(counts.shape)}")
        return counts.to(dtype)
    vector = torch.zeros(num_classes, dtype=dtype)
    for class_id, count in counts.items():
        if 0 <= int(class_id) < num_classes:
            vector[int(class_id)] = float(count)
    return vector


def loss_bc(o_ens: torch.Tensor, labels: torch.Tensor, counts: CountsLike,
            tau: float = 1.0) -> torch.Tensor:
    """Balanced softmax: CE over ``o_j + tau * log s_j``, mean over batch.

    Classes with no training samples get a neutral offset (count treated as 1).
    """
    num_classes = o_ens.shape[1]
    _check_labels(labels, num_classes)
    s = counts_vector(counts, num_classes, o_ens.dtype)
    present = torch.unique(labels.long())
    if bool((s[present] < 1).any()):
        missing = [int(c) for c in present if s[c] < 1]
        raise DataError(f"no sample count for class(es) present in batch: {missing}")
    adjusted = o_ens + tau * torch.log(s.clamp_min(1.0)).unsqueeze(0)
    return F.cross_entropy(adjusted, labels.long(), reduction="mean")


def divergence_targets(labels: torch.Tensor, num_old_classes: int,
                       num_new_classes: int) -> torch.Tensor:
    """Map new-class labels to ``0..k-1`` (task-local order) and old-class labels to ``k``."""
    labels = labels.long()
    _check_labels(labels, num_old_classes + num_new_classes)
    return torch.where(labels >= num_old_classes, labels - num_old_classes,
                       torch.full_like(labels, num_new_classes))


def loss_div(div_logits: torch.Tensor, targets: torch.Tensor) -> torch.Tensor:
    """Cross-entropy over (new classes + "other"), mean over batch."""
    _check_labels(targets, div_logits.shape[1])
    return F.cross_entropy(div_logits, targets.long(), reduction="mean")


def class_count_dict(labels: torch.Tensor) -> Dict[int, int]:
    values, counts = torch.unique(labels.long(), return_counts=True)
    return {int(v): int(c) for v, c in zip(values, counts)}
