#!/usr/bin/env python3
"""Model tests: encoder shapes, task tokens and heads, ensembled encoder.

Checks the freeze contract of the decoder, channel-wise fusion, the
auxiliary head and the size of the two-branch encoder.
"""

import sys
import os
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import subprocess
import textwrap

import numpy as np
import pytest
import torch
from rich.console import Console
from rich.panel import Panel

from models import (
    ConfigurationError, Decoder, Encoder, EnsembledEncoder, EnsembledModel,
    IncrementalViT, ModelConfig, TaskOrderError, aux_logits, full_logits, fuse,
)
from tests.fixtures import tiny_model_config


def _images(batch=2, config=None, seed=0):
    config = config or tiny_model_config()
    generator = torch.Generator().manual_seed(seed)
    return torch.randn(batch, config.input_size, config.input_size, config.in_channels,
                       generator=generator)


def test_encoder_output_shape():
    console = Console()
    config = tiny_model_config()
    console.print(Panel(
        "[bold]Encoder on channels-last images[/bold]\n\n"
        f"• input {config.input_size}x{config.input_size}, patch {config.patch_size}\n"
        f"• expected output [2, {config.num_patches}, {config.embed_dim}]",
        title="Test Configuration",
        border_style="cyan"
    ))
    torch.manual_seed(0)
    encoder = Encoder(config)
    z = encoder(_images(2, config))
    assert tuple(z.shape) == (2, config.num_patches, config.embed_dim)


def test_encoder_rejects_wrong_image_shape():
    encoder = Encoder(tiny_model_config())
    with pytest.raises(ConfigurationError):
        encoder(torch.zeros(2, 3, 8, 8))


def test_model_config_validation():
    with pytest.raises(ConfigurationError):
        ModelConfig(input_size=10, patch_size=4)
    with pytest.raises(ConfigurationError):
        ModelConfig(num_tab=2)
    with pytest.raises(ConfigurationError):
        ModelConfig(embed_dim=10, num_heads=4)


def _random_config(rng):
    patch = int(rng.choice([1, 2, 4]))
    heads = int(rng.choice([1, 2, 4]))
    return ModelConfig(
        num_sab=int(rng.integers(1, 3)),
        num_heads=heads,
        embed_dim=heads * 2 * int(rng.integers(1, 5)),
        input_size=patch * int(rng.integers(1, 5)),
        patch_size=patch,
        mlp_ratio=int(rng.integers(1, 3)),
    )


def test_shapes_hold_over_random_configs():
    console = Console()
    console.print(Panel(
        "[bold]Shape closure[/bold]\n\n"
        "• 20 seeded random (input, patch, embed, heads, tasks, classes) draws\n"
        "• encoder, per-task decode, full logits, ensembled branches and aux logits",
        title="Test Configuration",
        border_style="cyan"
    ))
    rng = np.random.default_rng(7)
    for draw in range(20):
        config = _random_config(rng)
        classes = [int(c) for c in rng.integers(1, 5, size=int(rng.integers(1, 4)))]
        batch = int(rng.integers(1, 4))
        torch.manual_seed(draw)
        model = IncrementalViT(config)
        for num_classes in classes:
            model.decoder.add_task(num_classes)
        model.decoder.freeze_old_tasks()
        images = _images(batch, config, seed=draw)
        label = f"draw {draw}: {config} classes={classes}"

        z = model.encode(images)
        assert tuple(z.shape) == (batch, config.num_patches, config.embed_dim), label
        for t, num_classes in enumerate(classes, start=1):
            embedding, logits = model.decoder.decode_task(z, t)
            assert tuple(embedding.shape) == (batch, config.embed_dim), label
            assert tuple(logits.shape) == (batch, num_classes), label
        embeddings, logits = model.decoder.forward_all(z)
        assert len(embeddings) == len(classes), label
        assert tuple(full_logits(model, images).shape) == (batch, sum(classes)), label
        assert torch.equal(logits, full_logits(model, images)), label

        ens = EnsembledEncoder(model.encoder, sum(classes))
        z_ens, z_old, z_sup = ens.branches(images)
        for part in (z_ens, z_old, z_sup):
            assert tuple(part.shape) == tuple(z.shape), label
        assert tuple(aux_logits(ens, images).shape) == (batch, sum(classes)), label


_LOGITS_DIGEST = textwrap.dedent("""
    import hashlib, sys
    sys.path.insert(0, {root!r})
    import torch
    from models import IncrementalViT, full_logits
    from tests.fixtures import tiny_model_config
    torch.manual_seed(3)
    config = tiny_model_config()
    model = IncrementalViT(config)
    model.decoder.add_task(3)
    model.decoder.add_task(2)
    model.eval()
    images = torch.randn(4, config.input_size, config.input_size, config.in_channels,
                         generator=torch.Generator().manual_seed(5))
    with torch.no_grad():
        logits = full_logits(model, images)
    print(hashlib.sha256(logits.numpy().astype("<f4").tobytes()).hexdigest())
""")


def test_full_logits_identical_across_processes():
    root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    script = _LOGITS_DIGEST.format(root=root)
    digests = []
    for _ in range(2):
        result = subprocess.run([sys.executable, "-c", script], capture_output=True, text=True,
                                cwd=root, timeout=300)
        assert result.returncode == 0, result.stderr
        digests.append(result.stdout.strip())
    assert len(digests[0]) == 64
    assert digests[0] == digests[1]


def test_decoder_grows_one_token_and_head_per_task():
    config = tiny_model_config()
    torch.manual_seed(0)
    decoder = Decoder(config)
    assert decoder.add_task(3) == 1
    assert decoder.add_task(2) == 2
    z = Encoder(config)(_images(4, config))
    assert decoder.num_tasks == 2
    assert decoder.classes_per_task == [3, 2]
    assert tuple(decoder.full_logits(z).shape) == (4, 5)

    embeddings, logits = decoder.forward_all(z)
    assert len(embeddings) == 2
    assert tuple(embeddings[0].shape) == (4, config.embed_dim)
    embedding, head_logits = decoder.decode_task(z, 2)
    assert torch.allclose(embedding, embeddings[1])
    assert torch.allclose(head_logits, logits[:, 3:])


def test_decoder_unknown_task_index():
    config = tiny_model_config()
    decoder = Decoder(config)
    z = torch.zeros(1, config.num_patches, config.embed_dim)
    with pytest.raises(TaskOrderError):
        decoder.full_logits(z)
    decoder.add_task(2)
    with pytest.raises(TaskOrderError):
        decoder.decode_task(z, 2)
    with pytest.raises(TaskOrderError):
        decoder.decode_task(z, 0)


def test_task_tokens_give_distinct_embeddings():
    config = tiny_model_config()
    torch.manual_seed(1)
    decoder = Decoder(config)
    decoder.add_task(2)
    decoder.add_task(2)
    z = Encoder(config)(_images(3, config))
    e1, e2 = decoder.task_embeddings(z, 2)
    assert not torch.allclose(e1, e2)


def test_freeze_old_tasks_keeps_newest_trainable():
    decoder = Decoder(tiny_model_config())
    for k in (2, 2, 3):
        decoder.add_task(k)
    decoder.freeze_old_tasks()
    assert [token.frozen for token in decoder.task_token] == [True, True, False]
    assert [head.frozen for head in decoder.heads] == [True, True, False]
    assert all(p.requires_grad for p in decoder.tab.parameters())


def test_fuse_adds_channel_wise():
    a = torch.ones(2, 4, 16)
    b = torch.full((2, 4, 16), 2.0)
    assert torch.equal(fuse(a, b), torch.full((2, 4, 16), 3.0))
    with pytest.raises(ConfigurationError):
        fuse(a, torch.ones(2, 4, 8))


def test_ensembled_encoder_branches_and_size():
    console = Console()
    console.print(Panel(
        "[bold]Ensembled encoder[/bold]\n\n"
        "• old branch frozen, supplementary branch trainable\n"
        "• parameter count is twice a single encoder",
        title="Test Configuration",
        border_style="cyan"
    ))
    config = tiny_model_config()
    torch.manual_seed(0)
    old = Encoder(config)
    ens = EnsembledEncoder(old, num_classes=5)
    assert ens.param_count == 2 * old.param_count
    assert not any(p.requires_grad for p in ens.old_encoder.parameters())
    assert all(p.requires_grad for p in ens.sup_encoder.parameters())
    assert all(p.requires_grad for p in old.parameters())

    images = _images(2, config)
    z_ens, z_old, z_sup = ens.branches(images)
    assert torch.allclose(z_ens, z_old + z_sup)
    # warm start: both branches begin as the same function
    assert torch.allclose(z_old, z_sup)

    random_ens = EnsembledEncoder(old, num_classes=5, sup_init="random")
    _, z_old_r, z_sup_r = random_ens.branches(images)
    assert not torch.allclose(z_old_r, z_sup_r)
    with pytest.raises(ConfigurationError):
        EnsembledEncoder(old, num_classes=5, sup_init="zeros")


def test_aux_logits_depend_on_supplementary_branch_only():
    config = tiny_model_config()
    torch.manual_seed(0)
    ens = EnsembledEncoder(Encoder(config), num_classes=6)
    images = _images(3, config)
    before = aux_logits(ens, images)
    assert tuple(before.shape) == (3, 6)
    with torch.no_grad():
        for param in ens.old_encoder.parameters():
            param.add_(1.0)
    assert torch.allclose(before, aux_logits(ens, images))


def test_discard_aux_head():
    config = tiny_model_config()
    decoder = Decoder(config)
    decoder.add_task(2)
    model = EnsembledModel(EnsembledEncoder(Encoder(config), num_classes=2), decoder)
    head = model.discard_aux_head()
    assert head is not None
    assert model.ensembled_encoder.aux_head is None
    assert tuple(model(_images(2, config)).shape) == (2, 2)


def test_snapshot_is_frozen_copy():
    config = tiny_model_config()
    torch.manual_seed(0)
    model = IncrementalViT(config)
    model.decoder.add_task(3)
    snap = model.snapshot()
    assert not any(p.requires_grad for p in snap.parameters())
    assert all(p.requires_grad for p in model.parameters())
    images = _images(2, config)
    assert torch.allclose(full_logits(model, images), full_logits(snap, images))
    with torch.no_grad():
        next(model.parameters()).add_(1.0)
    assert not torch.allclose(full_logits(model, images), full_logits(snap, images))


def test_full_logits_requires_a_task():
    model = IncrementalViT(tiny_model_config())
    with pytest.raises(TaskOrderError):
        full_logits(model, _images(1))
