"""Stage-1 ensembled encoder: frozen old encoder + trainable supplementary encoder."""

from typing import Optional, Tuple

import torch
from torch import nn
from einops import rearrange

from .config import ModelConfig
from .decoder import Decoder
from .encoder import Encoder, clone_frozen, clone_trainable, init_weights
from .errors import ConfigurationError


def fuse(z_old: torch.Tensor, z_sup: torch.Tensor) -> torch.Tensor:
    """Channel-wise additive fusion of the two encoder outputs."""
    if z_old.shape != z_sup.shape:
        raise ConfigurationError(f"cannot fuse shapes {list(z_old.shape)} and {list(z_sup.shape)}")
    return z_old + z_sup


class EnsembledEncoder(nn.Module):
    """Frozen copy of the old encoder plus a supplementary encoder and auxiliary head."""

    def __init__(self, old_encoder: Encoder, num_classes: int, sup_init: str = "copy"):
        super().__init__()
        config = old_encoder.config
        self.config = config
        self.old_encoder = clone_frozen(old_encoder)
        if sup_init == "copy":
            self.sup_encoder = clone_trainable(old_encoder)
        elif sup_init == "random":
            self.sup_encoder = Encoder(config)
        else:
            raise ConfigurationError(f"unknown sup_init {sup_init!r}; expected 'copy' or 'random'")
        self.aux_head = nn.Linear(config.num_patches * config.embed_dim, num_classes)
        init_weights(self.aux_head, config.init_std)

    def train(self, mode: bool = True) -> "EnsembledEncoder":
        super().train(mode)
        self.old_encoder.eval()
        return self

    @property
    def param_count(self) -> int:
        """Parameters of both encoder branches (the auxiliary head is excluded)."""
        return self.old_encoder.param_count + self.sup_encoder.param_count

    def branches(self, images: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """Return ``(z_ens, z_old, z_sup)``."""
        z_old = self.old_encoder(images)
        z_sup = self.sup_encoder(images)
        return fuse(z_old, z_sup), z_old, z_sup

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        return self.branches(images)[0]

    def aux_from_features(self, z_sup: torch.Tensor) -> torch.Tensor:
        flat = rearrange(z_sup, "b p d -> b (p d)")
        if flat.shape[1] != self.aux_head.in_features:
            raise ConfigurationError(
                f"aux head expects {self.aux_head.in_features} inputs, got {flat.shape[1]}"
            )
        return self.aux_head(flat)


def aux_logits(ens: EnsembledEncoder, images: torch.Tensor) -> torch.Tensor:
    """o_sup = aux_head(vec(z_sup)); depends on the supplementary branch only."""
    return ens.aux_from_features(ens.sup_encoder(images))


class EnsembledModel(nn.Module):
    """Ensembled encoder feeding a decoder (the stage-1 product)."""

    def __init__(self, ensembled_encoder: EnsembledEncoder, decoder: Decoder):
        super().__init__()
        self.config: ModelConfig = ensembled_encoder.config
        self.ensembled_encoder = ensembled_encoder
        self.decoder = decoder

    @property
    def num_tasks(self) -> int:
        return self.decoder.num_tasks

    @property
    def num_classes(self) -> int:
        return self.decoder.num_classes

    def encode(self, images: torch.Tensor) -> torch.Tensor:
        return self.ensembled_encoder(images)

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        return self.decoder.full_logits(self.encode(images))

    def discard_aux_head(self) -> Optional[nn.Linear]:
        """Drop the auxiliary head once stage 1 is over."""
        head = self.ensembled_encoder.aux_head
        self.ensembled_encoder.aux_head = None
        return head
