"""Typed run settings assembled from config files, grids and CLI flags."""

import hashlib
import json
import os
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, Mapping, Optional, Tuple

from engine.train_config import TrainConfig
from models.config import ModelConfig
from models.errors import ConfigurationError
from .config_file import normalize_key
from .datasets import BenchmarkSpec

METHODS = ("sedeg", "dytox", "finetune")
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def parse_bool(value: Any) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in _TRUE:
        return True
    if text in _FALSE:
        return False
    raise ConfigurationError(f"expected a boolean, got {value!r}")


def parse_optional_float(value: Any) -> Optional[float]:
    if value is None or str(value).strip().lower() in ("", "auto", "none"):
        return None
    return float(value)


def parse_optional_int(value: Any) -> Optional[int]:
    if value is None or str(value).strip().lower() in ("", "none"):
        return None
    return int(value)


def parse_optional_str(value: Any) -> Optional[str]:
    if value is None or str(value).strip().lower() in ("", "none"):
        return None
    return str(value)


# key → (section, field, parser)
FIELDS: Dict[str, Tuple[str, str, Callable[[Any], Any]]] = {
    "dataset": ("spec", "dataset", str),
    "num_tasks": ("spec", "num_tasks", int),
    "classes_per_task": ("spec", "classes_per_task", int),
    "class_order_seed": ("spec", "class_order_seed", int),
    "memory": ("spec", "memory_capacity", int),
    "memory_capacity": ("spec", "memory_capacity", int),
    "num_classes": ("spec", "num_classes", parse_optional_int),
    "data_seed": ("spec", "data_seed", int),
    "train_per_class": ("spec", "train_per_class", int),
    "eval_per_class": ("spec", "eval_per_class", int),
    "separation": ("spec", "separation", float),
    "noise": ("spec", "noise", float),
    "data_dir": ("spec", "data_dir", parse_optional_str),
    "max_train_per_class": ("spec", "max_train_per_class", parse_optional_int),
    "num_sab": ("model", "num_sab", int),
    "num_heads": ("model", "num_heads", int),
    "embed_dim": ("model", "embed_dim", int),
    "input_size": ("model", "input_size", int),
    "patch_size": ("model", "patch_size", int),
    "mlp_ratio": ("model", "mlp_ratio", int),
    "init_std": ("model", "init_std", float),
    "bootstrap_epochs": ("train", "bootstrap_epochs", int),
    "stage1_epochs": ("train", "stage1_epochs", int),
    "stage2_epochs": ("train", "stage2_epochs", int),
    "finetune_epochs": ("train", "finetune_epochs", int),
    "lr": ("train", "learning_rate", float),
    "learning_rate": ("train", "learning_rate", float),
    "finetune_lr_scale": ("train", "finetune_lr_scale", float),
    "weight_decay": ("train", "weight_decay", float),
    "batch_size": ("train", "batch_size", int),
    "optimizer": ("train", "optimizer", str),
    "seed": ("train", "seed", int),
    "sup_init": ("train", "sup_init", str),
    "student_init": ("train", "student_init", str),
    "augment_flip": ("train", "augment_flip", parse_bool),
    "alpha": ("loss", "alpha", parse_optional_float),
    "lam": ("loss", "lam", float),
    "mu": ("loss", "mu", float),
    "xi": ("loss", "xi", float),
    "beta": ("loss", "beta", float),
    "tau": ("loss", "tau", float),
    "gamma": ("loss", "gamma", float),
    "bld_conventional": ("loss", "bld_conventional", parse_bool),
    "aux_loss": ("ablation", "aux_loss", parse_bool),
    "embeddings_kd": ("ablation", "embeddings_kd", parse_bool),
    "balanced_classification": ("ablation", "balanced_classification", parse_bool),
    "feature_kd": ("ablation", "feature_kd", parse_bool),
    "balanced_kd": ("ablation", "balanced_kd", parse_bool),
    "distill_encoder_only": ("ablation", "distill_encoder_only", parse_bool),
    "method": ("run", "method", str),
    "out": ("run", "out_dir", str),
    "out_dir": ("run", "out_dir", str),
    "run_name": ("run", "run_name", parse_optional_str),
    "save_checkpoints": ("run", "save_checkpoints", parse_bool),
}

# CLI switches that turn a component off
NEGATIONS = {
    "no_aux": "aux_loss",
    "no_ted": "embeddings_kd",
    "no_balanced_ce": "balanced_classification",
    "no_feature_kd": "feature_kd",
    "no_balanced_kd": "balanced_kd",
    "distill_full": "distill_encoder_only",
}


# spelled out in the base run name
NAMED_FIELDS = ("spec.dataset", "spec.num_tasks", "spec.memory_capacity",
                "spec.class_order_seed", "train.seed")
NAMED_PREFIXES = ("train.ablation.",)
# where data lives, not what is run
LOCATION_FIELDS = ("spec.data_dir",)


def default_output_dir() -> str:
    return os.environ.get("SEDEG_OUTPUT_DIR", "./runs")


def flatten(data: Mapping[str, Any], prefix: str = "") -> Dict[str, Any]:
    """Nested dicts to ``{"a.b.c": value}``."""
    flat: Dict[str, Any] = {}
    for key, value in data.items():
        path = f"{prefix}{key}"
        if isinstance(value, Mapping):
            flat.update(flatten(value, path + "."))
        else:
            flat[path] = value
    return flat


@dataclass(frozen=True)
class RunSettings:
    """Everything needed to execute one benchmark run."""
    spec: BenchmarkSpec = field(default_factory=BenchmarkSpec)
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    method: str = "sedeg"
    out_dir: str = field(default_factory=default_output_dir)
    run_name: Optional[str] = None
    save_checkpoints: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigurationError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.spec.image_size != self.model.input_size:
            raise ConfigurationError(
                f"dataset image size {self.spec.image_size} != model input size {self.model.input_size}"
            )

    def config_fields(self) -> Dict[str, Any]:
        return flatten({"spec": self.spec.to_dict(), "model": self.model.to_dict(),
                        "train": self.train.to_dict()})

    def changed_fields(self) -> Dict[str, Any]:
        """Settings off their defaults that the base run name does not show."""
        defaults = RunSettings(method=self.method, out_dir=self.out_dir).config_fields()
        return {
            key: value for key, value in self.config_fields().items()
            if key not in NAMED_FIELDS and key not in LOCATION_FIELDS
            and not key.startswith(NAMED_PREFIXES) and defaults.get(key) != value
        }

    @property
    def config_digest(self) -> str:
        """Eight hex digits over ``changed_fields``; empty for default settings."""
        changed = self.changed_fields()
        if not changed:
            return ""
        text = json.dumps(changed, sort_keys=True, default=str)
        return hashlib.sha1(text.encode("utf-8")).hexdigest()[:8]

    @property
    def name(self) -> str:
        if self.run_name:
            return self.run_name
        bits = "".join(str(int(v)) for v in self.train.ablation.to_dict().values())
        base = (f"{self.method}_{self.spec.dataset}_t{self.spec.num_tasks}"
                f"_m{self.spec.memory_capacity}_s{self.train.seed}"
                f"_o{self.spec.class_order_seed}_a{bits}")
        digest = self.config_digest
        return f"{base}_h{digest}" if digest else base

    def to_dict(self) -> Dict[str, Any]:
        return {
            "method": self.method,
            "name": self.name,
            "spec": self.spec.to_dict(),
            "model": self.model.to_dict(),
            "train": self.train.to_dict(),
        }


def apply_mapping(settings: RunSettings, mapping: Mapping[str, Any]) -> RunSettings:
    """Overlay ``key=value`` pairs (config-file or CLI names) onto ``settings``."""
    changes: Dict[str, Dict[str, Any]] = {s: {} for s in ("spec", "model", "train", "loss", "ablation", "run")}
    for raw_key, value in mapping.items():
        if value is None:
            continue
        key = normalize_key(raw_key)
        if key in NEGATIONS:
            if parse_bool(value):
                changes["ablation"][NEGATIONS[key]] = False
            continue
        if key not in FIELDS:
            raise ConfigurationError(f"unknown setting {raw_key!r}")
        section, name, parser = FIELDS[key]
        try:
            changes[section][name] = parser(value)
        except ConfigurationError:
            raise
        except (TypeError, ValueError) as e:
            raise ConfigurationError(f"bad value for {key}: {value!r}") from e

    if "input_size" in changes["model"]:
        changes["spec"].setdefault("image_size", changes["model"]["input_size"])
    train = settings.train
    if changes["loss"]:
        train = replace(train, loss=replace(train.loss, **changes["loss"]))
    if changes["ablation"]:
        train = replace(train, ablation=replace(train.ablation, **changes["ablation"]))
    if changes["train"]:
        train = replace(train, **changes["train"])
    return replace(
        settings,
        spec=replace(settings.spec, **changes["spec"]),
        model=replace(settings.model, **changes["model"]),
        train=train,
        **changes["run"],
    )


def settings_from_mapping(mapping: Mapping[str, Any],
                          base: Optional[RunSettings] = None) -> RunSettings:
    return apply_mapping(base or RunSettings(), mapping)


def settings_from_dict(data: Dict[str, Any], out_dir: Optional[str] = None) -> RunSettings:
    """Rebuild settings from a ``config.json`` sidecar."""
    return RunSettings(
        spec=BenchmarkSpec(**data["spec"]),
        model=ModelConfig.from_dict(data["model"]),
        train=TrainConfig.from_dict(data["train"]),
        method=data["method"],
        out_dir=out_dir or default_output_dir(),
        run_name=data.get("name"),
    )
