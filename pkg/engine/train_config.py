"""Training configuration and ablation switches."""

from dataclasses import asdict, dataclass, field, replace
from typing import Dict, Optional

from losses.composition import LossConfig
from models.errors import ConfigurationError

OPTIMIZERS = ("adamw", "sgd")
INIT_CHOICES = ("copy", "random")


@dataclass(frozen=True)
class AblationFlags:
    """Independently toggleable SEDEG components (all on by default)."""
    aux_loss: bool = True
    embeddings_kd: bool = True
    balanced_classification: bool = True
    feature_kd: bool = True
    balanced_kd: bool = True
    distill_encoder_only: bool = True

    def to_dict(self) -> Dict[str, bool]:
        return asdict(self)

    def label(self) -> str:
        """Compact ``name=0/1`` label used in sweep summaries."""
        return ",".join(f"{k}={int(v)}" for k, v in self.to_dict().items())


# Ablation presets: (aux, ted, balanced classification) and
# (feature KD, balanced KD, distill encoder only) rows.
COMPONENT_ROWS = [
    AblationFlags(aux_loss=True, embeddings_kd=True, balanced_classification=True),
    AblationFlags(aux_loss=True, embeddings_kd=True, balanced_classification=False),
    AblationFlags(aux_loss=True, embeddings_kd=False, balanced_classification=True),
    AblationFlags(aux_loss=False, embeddings_kd=False, balanced_classification=True),
]
COMPRESSION_ROWS = [
    AblationFlags(feature_kd=True, balanced_kd=True, distill_encoder_only=True),
    AblationFlags(feature_kd=True, balanced_kd=True, distill_encoder_only=False),
    AblationFlags(feature_kd=True, balanced_kd=False, distill_encoder_only=False),
    AblationFlags(feature_kd=False, balanced_kd=False, distill_encoder_only=False),
]
ABLATION_PRESETS = {"components": COMPONENT_ROWS, "compression": COMPRESSION_ROWS, "none": [AblationFlags()]}


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer, schedule and loss settings for one run."""
    bootstrap_epochs: int = 20
    stage1_epochs: int = 20
    stage2_epochs: int = 15
    finetune_epochs: int = 5
    learning_rate: float = 1e-3
    finetune_lr_scale: float = 0.1
    weight_decay: float = 1e-4
    batch_size: int = 64
    optimizer: str = "adamw"
    seed: int = 0
    loss: LossConfig = field(default_factory=LossConfig)
    ablation: AblationFlags = field(default_factory=AblationFlags)
    sup_init: str = "copy"
    student_init: str = "copy"
    augment_flip: bool = False

    def __post_init__(self):
        for name in ("bootstrap_epochs", "stage1_epochs", "stage2_epochs", "finetune_epochs"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.learning_rate <= 0:
            raise ConfigurationError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.weight_decay < 0:
            raise ConfigurationError(f"weight_decay must be >= 0, got {self.weight_decay}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.optimizer not in OPTIMIZERS:
            raise ConfigurationError(f"unknown optimizer {self.optimizer!r}; choose from {OPTIMIZERS}")
        for name in ("sup_init", "student_init"):
            if getattr(self, name) not in INIT_CHOICES:
                raise ConfigurationError(f"{name} must be one of {INIT_CHOICES}")

    def with_updates(self, **changes) -> "TrainConfig":
        return replace(self, **changes)

    def effective_loss(self, num_old: Optional[int] = None,
                       num_total: Optional[int] = None) -> LossConfig:
        """Loss weights after the ablation switches (and alpha, if class counts are given)."""
        cfg = self.loss
        flags = self.ablation
        if not flags.aux_loss:
            cfg = replace(cfg, mu=0.0)
        if not flags.embeddings_kd:
            cfg = replace(cfg, xi=0.0)
        if not flags.feature_kd:
            cfg = replace(cfg, beta=0.0)
        if num_old is not None and num_total is not None:
            cfg = cfg.with_alpha(num_old, num_total)
        return cfg

    def to_dict(self) -> Dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict) -> "TrainConfig":
        data = dict(data)
        if isinstance(data.get("loss"), dict):
            data["loss"] = LossConfig(**data["loss"])
        if isinstance(data.get("ablation"), dict):
            data["ablation"] = AblationFlags(**data["ablation"])
        return cls(**data)
