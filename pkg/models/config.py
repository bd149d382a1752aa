"""Architecture configuration for the miniature encoder-decoder ViT."""

from dataclasses import dataclass, asdict
from typing import Dict, Any

from .errors import ConfigurationError


@dataclass(frozen=True)
class ModelConfig:
    """Hyperparameters of the transformer family.

    Full-scale values are 5 SAB, 1 TAB, 12 heads, embed dim 384 with
    (input, patch) = (32, 4), (64, 8) or (224, 16). Defaults are desk-scale.
    """
    num_sab: int = 2
    num_tab: int = 1
    num_heads: int = 4
    embed_dim: int = 64
    input_size: int = 32
    patch_size: int = 4
    in_channels: int = 3
    mlp_ratio: int = 4
    init_std: float = 0.02

    def __post_init__(self):
        for name in ("num_sab", "num_heads", "embed_dim", "input_size",
                     "patch_size", "in_channels", "mlp_ratio"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.num_tab != 1:
            raise ConfigurationError(f"exactly one task-attention block is supported, got {self.num_tab}")
        if self.input_size % self.patch_size != 0:
            raise ConfigurationError(
                f"input_size={self.input_size} must be divisible by patch_size={self.patch_size}"
            )
        if self.embed_dim % self.num_heads != 0:
            raise ConfigurationError(
                f"embed_dim={self.embed_dim} must be divisible by num_heads={self.num_heads}"
            )

    @property
    def num_patches(self) -> int:
        return (self.input_size // self.patch_size) ** 2

    @property
    def patch_dim(self) -> int:
        return self.patch_size * self.patch_size * self.in_channels

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ModelConfig":
        return cls(**data)


# Full-scale presets, keyed by dataset family.
FULL_SCALE_PRESETS = {
    "cifar": ModelConfig(num_sab=5, num_heads=12, embed_dim=384, input_size=32, patch_size=4),
    "tiny-imagenet": ModelConfig(num_sab=5, num_heads=12, embed_dim=384, input_size=64, patch_size=8),
    "imagenet": ModelConfig(num_sab=5, num_heads=12, embed_dim=384, input_size=224, patch_size=16),
}
