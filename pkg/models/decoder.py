"""Task-attention decoder: one TAB shared by per-task tokens and heads."""

from typing import List, Tuple

import torch
from torch import nn
from einops import rearrange

from .config import ModelConfig
from .encoder import Mlp, init_weights
from .errors import ConfigurationError, TaskOrderError


class TaskAttention(nn.Module):
    """Cross-attention where a single task token queries the patch tokens."""

    def __init__(self, dim: int, num_heads: int):
        super().__init__()
        self.num_heads = num_heads
        self.scale = (dim // num_heads) ** -0.5
        self.q = nn.Linear(dim, dim)
        self.kv = nn.Linear(dim, dim * 2)
        self.proj = nn.Linear(dim, dim)

    def forward(self, token: torch.Tensor, patches: torch.Tensor) -> torch.Tensor:
        # token: [b, 1, d]; patches: [b, P, d]
        q = rearrange(self.q(token), "b n (h d) -> b h n d", h=self.num_heads)
        k, v = self.kv(patches).chunk(2, dim=-1)
        k, v = (rearrange(t, "b n (h d) -> b h n d", h=self.num_heads) for t in (k, v))
        attn = (q @ k.transpose(-2, -1) * self.scale).softmax(dim=-1)
        return self.proj(rearrange(attn @ v, "b h n d -> b n (h d)"))


class TaskAttentionBlock(nn.Module):
    """Pre-norm TAB: ``e = θ + CA(norm(θ), norm(z)); e = e + MLP(norm(e))``."""

    def __init__(self, dim: int, num_heads: int, mlp_ratio: int):
        super().__init__()
        self.norm_token = nn.LayerNorm(dim)
        self.norm_patches = nn.LayerNorm(dim)
        self.attn = TaskAttention(dim, num_heads)
        self.norm2 = nn.LayerNorm(dim)
        self.mlp = Mlp(dim, dim * mlp_ratio)

    def forward(self, token: torch.Tensor, patches: torch.Tensor) -> torch.Tensor:
        x = token + self.attn(self.norm_token(token), self.norm_patches(patches))
        x = x + self.mlp(self.norm2(x))
        return x[:, 0]


class TaskToken(nn.Module):
    """Learnable task token θ_i."""

    def __init__(self, task_index: int, embed_dim: int, std: float = 0.02):
        super().__init__()
        self.task_index = task_index
        self.embedding = nn.Parameter(torch.zeros(embed_dim))
        nn.init.trunc_normal_(self.embedding, mean=0.0, std=std)

    @property
    def frozen(self) -> bool:
        return not self.embedding.requires_grad

    def freeze(self) -> None:
        self.embedding.requires_grad_(False)


class ClassifierHead(nn.Linear):
    """Linear head Clf_i mapping a task embedding to the classes of task i."""

    def __init__(self, task_index: int, embed_dim: int, num_classes: int, std: float = 0.02):
        super().__init__(embed_dim, num_classes)
        self.task_index = task_index
        init_weights(self, std)

    @property
    def frozen(self) -> bool:
        return not any(p.requires_grad for p in self.parameters())

    def freeze(self) -> None:
        for param in self.parameters():
            param.requires_grad_(False)


class Decoder(nn.Module):
    """The TAB plus one (token, head) pair per task seen so far."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        self.tab = TaskAttentionBlock(config.embed_dim, config.num_heads, config.mlp_ratio)
        self.tab.apply(lambda m: init_weights(m, config.init_std))
        self.task_token = nn.ModuleList()
        self.heads = nn.ModuleList()

    @property
    def num_tasks(self) -> int:
        return len(self.task_token)

    @property
    def classes_per_task(self) -> List[int]:
        return [head.out_features for head in self.heads]

    @property
    def num_classes(self) -> int:
        return sum(self.classes_per_task)

    def add_task(self, num_classes: int) -> int:
        """Append a new token and head; returns the new 1-based task index."""
        if num_classes < 1:
            raise ConfigurationError(f"a task needs at least one class, got {num_classes}")
        task_index = self.num_tasks + 1
        cfg = self.config
        self.task_token.append(TaskToken(task_index, cfg.embed_dim, cfg.init_std))
        self.heads.append(ClassifierHead(task_index, cfg.embed_dim, num_classes, cfg.init_std))
        return task_index

    def freeze_old_tasks(self) -> None:
        """Freeze every token and head except the most recent task's."""
        for token, head in zip(self.task_token[:-1], self.heads[:-1]):
            token.freeze()
            head.freeze()

    def _check_task(self, task_index: int) -> None:
        if not 1 <= task_index <= self.num_tasks:
            raise TaskOrderError(
                f"unknown task index {task_index}; decoder has {self.num_tasks} task(s)"
            )

    def task_embedding(self, z: torch.Tensor, task_index: int) -> torch.Tensor:
        """TAB output e_i for token θ_i, shape ``[batch, embed_dim]``."""
        self._check_task(task_index)
        if z.dim() != 3 or z.shape[-1] != self.config.embed_dim:
            raise ConfigurationError(f"expected patch tokens [b, P, {self.config.embed_dim}], got {list(z.shape)}")
        theta = self.task_token[task_index - 1].embedding
        token = theta.view(1, 1, -1).expand(z.shape[0], 1, -1)
        return self.tab(token, z)

    def decode_task(self, z: torch.Tensor, task_index: int) -> Tuple[torch.Tensor, torch.Tensor]:
        """Return ``(e_i, head_i(e_i))``."""
        embedding = self.task_embedding(z, task_index)
        return embedding, self.heads[task_index - 1](embedding)

    def task_embeddings(self, z: torch.Tensor, upto: int) -> List[torch.Tensor]:
        return [self.task_embedding(z, i) for i in range(1, upto + 1)]

    def forward_all(self, z: torch.Tensor) -> Tuple[List[torch.Tensor], torch.Tensor]:
        """All task embeddings ``[e_1..e_t]`` and the concatenated logits."""
        if self.num_tasks == 0:
            raise TaskOrderError("decoder has no tasks yet")
        embeddings = self.task_embeddings(z, self.num_tasks)
        logits = torch.cat([head(e) for head, e in zip(self.heads, embeddings)], dim=1)
        return embeddings, logits

    def full_logits(self, z: torch.Tensor) -> torch.Tensor:
        """Concatenate per-task logits in class-introduction order."""
        return self.forward_all(z)[1]


def decode_task(decoder: Decoder, z: torch.Tensor, task_index: int) -> Tuple[torch.Tensor, torch.Tensor]:
    return decoder.decode_task(z, task_index)
