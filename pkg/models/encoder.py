"""Patch embedding and self-attention encoder."""

import copy

import torch
from torch import nn
from einops import rearrange

from .config import ModelConfig
from .errors import ConfigurationError


def init_weights(module: nn.Module, std: float = 0.02) -> None:
    """Truncated-normal projections, zero biases, unit layer norms."""
    if isinstance(module, nn.Linear):
        nn.init.trunc_normal_(module.weight, mean=0.0, std=std)
        if module.bias is not None:
            nn.init.zeros_(module.bias)
    elif isinstance(module, nn.LayerNorm):
        nn.init.ones_(module.weight)
        nn.init.zeros_(module.bias)


class Mlp(nn.Module):
    """Two-layer GELU feed-forward network."""

    def __init__(self, dim: int, hidden_dim: int):
        super().__init__()
        self.fc1 = nn.Linear(dim, hidden_dim)
        self.act = nn.GELU()
        self.fc2 = nn.Linear(hidden_dim, dim)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.fc2(self.act(self.fc1(x)))


class MultiHeadSelfAttention(nn.Module):
    """Scaled dot-product self-attention over all tokens."""

    def __init__(self, dim: int, num_heads: int):
        super().__init__()
        self.num_heads = num_heads
        self.scale = (dim // num_heads) ** -0.5
        self.qkv = nn.Linear(dim, dim * 3)
        self.proj = nn.Linear(dim, dim)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        q, k, v = self.qkv(x).chunk(3, dim=-1)
        q, k, v = (rearrange(t, "b n (h d) -> b h n d", h=self.num_heads) for t in (q, k, v))
        attn = (q @ k.transpose(-2, -1) * self.scale).softmax(dim=-1)
        out = rearrange(attn @ v, "b h n d -> b n (h d)")
        return self.proj(out)


class SelfAttentionBlock(nn.Module):
    """Pre-norm transformer block (SAB)."""

    def __init__(self, dim: int, num_heads: int, mlp_ratio: int):
        super().__init__()
        self.norm1 = nn.LayerNorm(dim)
        self.attn = MultiHeadSelfAttention(dim, num_heads)
        self.norm2 = nn.LayerNorm(dim)
        self.mlp = Mlp(dim, dim * mlp_ratio)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = x + self.attn(self.norm1(x))
        return x + self.mlp(self.norm2(x))


class Encoder(nn.Module):
    """Patch embedding followed by ``num_sab`` self-attention blocks.

    Input images are channels-last ``[batch, H, W, C]``; the output is
    ``[batch, num_patches, embed_dim]``.
    """

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        self.patch_embedding = nn.Linear(config.patch_dim, config.embed_dim)
        self.pos_embedding = nn.Parameter(torch.zeros(1, config.num_patches, config.embed_dim))
        self.sab = nn.ModuleList([
            SelfAttentionBlock(config.embed_dim, config.num_heads, config.mlp_ratio)
            for _ in range(config.num_sab)
        ])
        self.apply(lambda m: init_weights(m, config.init_std))
        nn.init.trunc_normal_(self.pos_embedding, mean=0.0, std=config.init_std)

    @property
    def param_count(self) -> int:
        return sum(p.numel() for p in self.parameters())

    def check_input(self, images: torch.Tensor) -> None:
        cfg = self.config
        expected = (cfg.input_size, cfg.input_size, cfg.in_channels)
        if images.dim() != 4 or tuple(images.shape[1:]) != expected:
            raise ConfigurationError(
                f"expected images of shape [batch, {expected[0]}, {expected[1]}, {expected[2]}], "
                f"got {list(images.shape)}"
            )

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        self.check_input(images)
        p = self.config.patch_size
        patches = rearrange(images, "b (h p1) (w p2) c -> b (h w) (p1 p2 c)", p1=p, p2=p)
        x = self.patch_embedding(patches) + self.pos_embedding
        for block in self.sab:
            x = block(x)
        return x


def encode(encoder: Encoder, images: torch.Tensor) -> torch.Tensor:
    """Run ``encoder`` on channels-last images."""
    return encoder(images)


def freeze(module: nn.Module) -> nn.Module:
    """Disable gradients on every parameter of ``module``."""
    for param in module.parameters():
        param.requires_grad_(False)
    return module


def clone_frozen(encoder: Encoder) -> Encoder:
    """Deep copy of ``encoder`` with gradients disabled; the source is untouched."""
    clone = copy.deepcopy(encoder)
    freeze(clone)
    clone.eval()
    return clone


def clone_trainable(encoder: Encoder) -> Encoder:
    """Deep copy of ``encoder`` with gradients enabled (warm start)."""
    clone = copy.deepcopy(encoder)
    for param in clone.parameters():
        param.requires_grad_(True)
    return clone
