"""Loss weights and the two stage objectives."""

from dataclasses import dataclass, asdict, replace
from typing import Dict, Optional, Union

import torch

from models.errors import ConfigurationError

Scalar = Union[float, torch.Tensor]


@dataclass(frozen=True)
class LossConfig:
    """Weights of the stage objectives.

    ``alpha=None`` means the logits-KD weight is derived per task as the
    fraction of old classes, ``|Y_1:t-1| / |Y_1:t|``.
    """
    alpha: Optional[float] = None
    lam: float = 0.1
    mu: float = 1.0
    xi: float = 0.1
    beta: float = 1.0
    tau: float = 1.0
    gamma: float = 1.0
    bld_conventional: bool = False

    def __post_init__(self):
        if self.alpha is not None and not 0.0 <= self.alpha <= 1.0:
            raise ConfigurationError(f"alpha must lie in [0, 1], got {self.alpha}")
        for name in ("lam", "mu", "xi", "beta", "gamma"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.tau <= 0:
            raise ConfigurationError(f"tau must be > 0, got {self.tau}")

    def with_alpha(self, num_old_classes: int, num_total_classes: int) -> "LossConfig":
        """Resolve a derived alpha for the current task."""
        if self.alpha is not None:
            return self
        return replace(self, alpha=num_old_classes / num_total_classes)

    def to_dict(self) -> Dict:
        return asdict(self)


@dataclass
class Stage1Parts:
    bc: Scalar = 0.0
    kd: Scalar = 0.0
    div: Scalar = 0.0
    aux: Scalar = 0.0
    ted: Scalar = 0.0


@dataclass
class Stage2Parts:
    bld: Scalar = 0.0
    div: Scalar = 0.0
    fd: Scalar = 0.0


def _alpha(cfg: LossConfig) -> float:
    if cfg.alpha is None:
        raise ConfigurationError("alpha is unresolved; call LossConfig.with_alpha first")
    return cfg.alpha


def stage1_terms(parts: Stage1Parts, cfg: LossConfig) -> Dict[str, Scalar]:
    """Weighted contribution of every stage-1 term."""
    alpha = _alpha(cfg)
    return {
        "bc": (1.0 - alpha) * parts.bc,
        "kd": alpha * parts.kd,
        "div": cfg.lam * parts.div,
        "aux": cfg.mu * parts.aux,
        "ted": cfg.xi * parts.ted,
    }


def stage1_loss(parts: Stage1Parts, cfg: LossConfig) -> Scalar:
    """``(1-α)L_BC + αL_kd + λL_div + μL_aux + ξL_TED``."""
    terms = stage1_terms(parts, cfg)
    return terms["bc"] + terms["kd"] + terms["div"] + terms["aux"] + terms["ted"]


def stage2_terms(parts: Stage2Parts, cfg: LossConfig) -> Dict[str, Scalar]:
    return {
        "bld": parts.bld,
        "div": cfg.lam * parts.div,
        "fd": cfg.beta * parts.fd,
    }


def stage2_loss(parts: Stage2Parts, cfg: LossConfig) -> Scalar:
    """``L_BLD + λL_div + βL_FD``."""
    terms = stage2_terms(parts, cfg)
    return terms["bld"] + terms["div"] + terms["fd"]
