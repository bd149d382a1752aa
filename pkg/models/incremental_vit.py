"""Encoder-decoder ViT that grows one task token and head per task."""

import copy
from typing import List, Optional

import torch
from torch import nn

from .config import ModelConfig
from .encoder import Encoder, freeze
from .decoder import Decoder
from .errors import TaskOrderError


class IncrementalViT(nn.Module):
    """Single-encoder model (the old model / the compressed new model)."""

    def __init__(self, config: ModelConfig, encoder: Optional[Encoder] = None,
                 decoder: Optional[Decoder] = None):
        super().__init__()
        self.config = config
        self.encoder = encoder if encoder is not None else Encoder(config)
        self.decoder = decoder if decoder is not None else Decoder(config)

    @property
    def num_tasks(self) -> int:
        return self.decoder.num_tasks

    @property
    def num_classes(self) -> int:
        return self.decoder.num_classes

    @property
    def classes_per_task(self) -> List[int]:
        return self.decoder.classes_per_task

    def encode(self, images: torch.Tensor) -> torch.Tensor:
        return self.encoder(images)

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        return self.full_logits(images)

    def full_logits(self, images: torch.Tensor) -> torch.Tensor:
        return self.decoder.full_logits(self.encode(images))

    def snapshot(self) -> "IncrementalViT":
        """Frozen deep copy used as the old model of the next task."""
        clone = copy.deepcopy(self)
        freeze(clone)
        clone.eval()
        return clone


def full_logits(model: nn.Module, images: torch.Tensor) -> torch.Tensor:
    """Concatenated per-task logits ``[b, |Y_{1:t}|]`` of any encoder-decoder model."""
    if model.decoder.num_tasks < 1:
        raise TaskOrderError("model has no tasks yet")
    return model.decoder.full_logits(model.encode(images))
