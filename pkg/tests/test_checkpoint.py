#!/usr/bin/env python3
"""Checkpoint tests: container round trips for both model kinds, memory state, bad input."""

import sys
import os
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import tempfile

import pytest
import torch
from rich.console import Console
from rich.panel import Panel

from models import (
    DataError, Decoder, Encoder, EnsembledEncoder, EnsembledModel, IncrementalViT,
    checkpoint_bytes, load_checkpoint, parse_checkpoint, save_checkpoint,
)
from tests.fixtures import tiny_model_config


def _vit(num_tasks=2):
    torch.manual_seed(0)
    model = IncrementalViT(tiny_model_config())
    for _ in range(num_tasks):
        model.decoder.add_task(3)
    model.decoder.freeze_old_tasks()
    return model


def test_incremental_vit_roundtrip():
    console = Console()
    console.print(Panel(
        "[bold]Checkpoint container[/bold]\n\n"
        "• two-task model with frozen task-1 token and head\n"
        "• memory state stored next to the tensors",
        title="Test Configuration",
        border_style="cyan"
    ))
    model = _vit()
    memory = {"capacity": 6, "seed": 0, "classes": {"0": [1, 2], "1": [5]}}
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "task2_stage2.ckpt")
        save_checkpoint(path, model, memory, {"task_index": 2})
        loaded, loaded_memory, header = load_checkpoint(path)

    assert isinstance(loaded, IncrementalViT)
    assert loaded_memory == memory
    assert header["extra"]["task_index"] == 2
    assert loaded.decoder.classes_per_task == [3, 3]
    original = dict(model.named_parameters())
    for name, param in loaded.named_parameters():
        assert torch.equal(param, original[name]), name
        assert param.requires_grad == original[name].requires_grad, name
    images = torch.randn(2, 8, 8, 3)
    assert torch.allclose(model(images), loaded(images))


def test_ensembled_model_roundtrip():
    config = tiny_model_config()
    torch.manual_seed(1)
    decoder = Decoder(config)
    decoder.add_task(2)
    decoder.add_task(2)
    model = EnsembledModel(EnsembledEncoder(Encoder(config), num_classes=4), decoder)
    model.discard_aux_head()
    header, tensors = parse_checkpoint(checkpoint_bytes(model))
    assert header["kind"] == "ensembled"
    assert not header["has_aux_head"]
    assert set(tensors) == {name for name, _ in model.named_parameters()}

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "task2_stage1.ckpt")
        save_checkpoint(path, model)
        loaded, memory, _ = load_checkpoint(path)
    assert memory is None
    assert isinstance(loaded, EnsembledModel)
    images = torch.randn(2, 8, 8, 3)
    assert torch.allclose(model(images), loaded(images))


def test_header_maps_task_index_to_parameter_slots():
    model = _vit(num_tasks=3)
    header, tensors = parse_checkpoint(checkpoint_bytes(model))
    assert header["task_slots"] == [
        {"task_index": t, "token": f"decoder.task_token.{t - 1}", "head": f"decoder.heads.{t - 1}"}
        for t in (1, 2, 3)
    ]
    for slot in header["task_slots"]:
        assert any(name.startswith(slot["token"] + ".") for name in tensors)
        assert any(name.startswith(slot["head"] + ".") for name in tensors)
    # tasks 1 and 2 are frozen, the newest is not
    frozen = set(header["frozen"])
    assert any(name.startswith("decoder.task_token.1.") for name in frozen)
    assert not any(name.startswith("decoder.task_token.2.") for name in frozen)


def test_bytes_are_deterministic():
    assert checkpoint_bytes(_vit()) == checkpoint_bytes(_vit())


def test_bad_container():
    data = checkpoint_bytes(_vit())
    with pytest.raises(DataError):
        parse_checkpoint(b"NOPE" + data[4:])
    with pytest.raises(DataError):
        parse_checkpoint(data[:4] + (99).to_bytes(4, "little") + data[8:])
