"""Desk-scale settings shared by the test modules."""

import sys
import os
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from engine.train_config import TrainConfig
from harness.datasets import BenchmarkSpec
from models.config import ModelConfig


def tiny_model_config(**changes) -> ModelConfig:
    values = dict(num_sab=1, num_heads=2, embed_dim=16, input_size=8, patch_size=4, mlp_ratio=2)
    values.update(changes)
    return ModelConfig(**values)


def tiny_spec(**changes) -> BenchmarkSpec:
    values = dict(num_tasks=2, classes_per_task=3, memory_capacity=6, image_size=8,
                  train_per_class=8, eval_per_class=4, separation=1.0, noise=0.5)
    values.update(changes)
    return BenchmarkSpec(**values)


def tiny_train(**changes) -> TrainConfig:
    values = dict(bootstrap_epochs=1, stage1_epochs=1, stage2_epochs=1, finetune_epochs=1,
                  batch_size=8)
    values.update(changes)
    return TrainConfig(**values)
