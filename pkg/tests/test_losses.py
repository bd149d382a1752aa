#!/usr/bin/env python3
"""Loss tests: hand-computed values, reductions and stage compositions.

Covers the auxiliary BCE, balanced softmax, embedding/logits distillation,
divergence, per-class weights, balanced logits distillation, feature
distillation and the two weighted stage objectives.
"""

import sys
import os
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import math

import pytest
import torch
import torch.nn.functional as F
from rich.console import Console
from rich.panel import Panel
from rich.table import Table
from rich import box

from losses import (
    LossConfig, Stage1Parts, Stage2Parts, divergence_targets, loss_aux, loss_bc,
    loss_bld, loss_div, loss_fd, loss_kd, loss_ted, per_class_weights,
    stage1_loss, stage1_terms, stage2_loss,
)
from models.errors import ConfigurationError, DataError, TaskOrderError

TOL = 1e-6


def _t(values, dtype=torch.float64):
    return torch.tensor(values, dtype=dtype)


def _y(values):
    return torch.tensor(values, dtype=torch.long)


def test_hand_values():
    console = Console()
    console.print(Panel(
        "[bold]Loss values against hand evaluation[/bold]\n\n"
        "• single-sample cases with known closed forms\n"
        "• absolute tolerance 1e-6",
        title="Test Configuration",
        border_style="cyan"
    ))
    cases = [
        ("aux [0,0]", loss_aux(_t([[0.0, 0.0]]), _y([0])), math.log(2)),
        ("bc uniform", loss_bc(_t([[0.0, 0.0, 0.0]]), _y([0]), _t([1.0, 1.0, 1.0])), math.log(3)),
        ("bc [1,0]", loss_bc(_t([[1.0, 0.0]]), _y([0]), _t([1.0, 1.0])), -math.log(math.e / (math.e + 1))),
        ("bc s=[1,3]", loss_bc(_t([[0.0, 0.0]]), _y([0]), _t([1.0, 3.0])), math.log(4)),
        ("ted", loss_ted([_t([[1.0, 0.0]])], [_t([[0.0, 0.0]])], 2), 0.5),
        ("kd [0]", loss_kd(_t([[0.0]]), _t([[0.0]])), math.log(2)),
        ("bld unit", loss_bld(_t([[0.0]]), _t([[0.0]]), _t([1.0])), -0.5 * math.log(0.5)),
        ("fd [3,4]", loss_fd(_t([[[3.0, 4.0], [0.0, 0.0]]]), torch.zeros(1, 2, 2, dtype=torch.float64)), 5.0),
    ]
    table = Table(title="Loss Oracles", box=box.ROUNDED)
    table.add_column("Case", style="cyan")
    table.add_column("Value", style="green", justify="right")
    table.add_column("Expected", style="yellow", justify="right")
    for name, value, expected in cases:
        table.add_row(name, f"{float(value):.6f}", f"{expected:.6f}")
    console.print(table)
    for name, value, expected in cases:
        assert abs(float(value) - expected) < TOL, name
    assert abs(math.log(3) - 1.0986) < 1e-4
    assert abs(-0.5 * math.log(0.5) - 0.3466) < 1e-4


def test_saturation_limits():
    assert float(loss_aux(_t([[40.0, -40.0]]), _y([0]))) < 1e-10
    assert float(loss_kd(_t([[40.0]]), _t([[40.0]]))) < 1e-10
    assert float(loss_bld(_t([[0.0, 1.0]]), _t([[60.0, 60.0]]), _t([1.0, 1.0]))) < 1e-10


def test_mean_reduction_over_batch():
    one = loss_aux(_t([[0.3, -1.2]]), _y([1]))
    two = loss_aux(_t([[0.3, -1.2], [0.3, -1.2]]), _y([1, 1]))
    assert abs(float(one) - float(two)) < 1e-12


def test_balanced_softmax_reduces_to_cross_entropy():
    generator = torch.Generator().manual_seed(0)
    for _ in range(20):
        logits = torch.randn(6, 5, generator=generator, dtype=torch.float64)
        labels = torch.randint(0, 5, (6,), generator=generator)
        counts = torch.full((5,), 7.0, dtype=torch.float64)
        expected = F.cross_entropy(logits, labels)
        assert abs(float(loss_bc(logits, labels, counts)) - float(expected)) < 1e-12


def test_balanced_softmax_shift_invariance():
    generator = torch.Generator().manual_seed(1)
    logits = torch.randn(4, 6, generator=generator, dtype=torch.float64)
    labels = _y([0, 1, 2, 5])
    counts = _t([1.0, 4.0, 2.0, 9.0, 3.0, 5.0])
    base = float(loss_bc(logits, labels, counts, tau=1.0))
    shifted = float(loss_bc(logits + 17.25, labels, counts, tau=1.0))
    assert abs(base - shifted) < 1e-9


def test_balanced_softmax_missing_count():
    with pytest.raises(DataError):
        loss_bc(_t([[0.0, 0.0]]), _y([1]), _t([1.0, 0.0]))
    with pytest.raises(DataError):
        loss_bc(_t([[0.0, 0.0]]), _y([2]), _t([1.0, 1.0]))
    # an absent class with zero count is fine
    value = loss_bc(_t([[0.0, 0.0]]), _y([0]), {0: 2})
    assert math.isfinite(float(value))


def test_label_out_of_range():
    with pytest.raises(DataError):
        loss_aux(_t([[0.0, 0.0]]), _y([2]))
    with pytest.raises(DataError):
        loss_div(_t([[0.0, 0.0, 0.0]]), _y([3]))


def test_embedding_distillation():
    e = [_t([[0.2, -0.4, 1.0]]), _t([[1.5, 0.0, -0.3]])]
    assert float(loss_ted(e, e, 3)) == 0.0
    old = [_t([[1.0, 2.0]])]
    ens = [_t([[0.0, 0.5]])]
    assert abs(float(loss_ted([3 * x for x in old], [3 * x for x in ens], 2))
               - 9 * float(loss_ted(old, ens, 2))) < 1e-12
    with pytest.raises(TaskOrderError):
        loss_ted([], [], 1)
    with pytest.raises(ConfigurationError):
        loss_ted(old, ens, 3)


def test_logits_kd_minimum_at_agreement():
    o_old = _t([[0.7, -1.3, 2.0]])
    o_ens = o_old.clone().requires_grad_(True)
    loss_kd(o_old, o_ens).backward()
    assert float(o_ens.grad.abs().max()) < 1e-12
    with pytest.raises(ConfigurationError):
        loss_kd(_t([[0.0, 0.0]]), _t([[0.0]]))


def test_divergence_targets_and_loss():
    labels = _y([0, 1, 2, 3, 4])
    targets = divergence_targets(labels, num_old_classes=3, num_new_classes=2)
    assert targets.tolist() == [2, 2, 2, 0, 1]
    uniform = loss_div(torch.zeros(4, 3, dtype=torch.float64), _y([0, 1, 2, 2]))
    assert abs(float(uniform) - math.log(3)) < TOL
    confident = torch.zeros(2, 3, dtype=torch.float64)
    confident[:, 2] = 50.0
    assert float(loss_div(confident, _y([2, 2]))) < 1e-10


def test_per_class_weights():
    assert torch.allclose(per_class_weights(_t([4.0, 4.0, 4.0])), torch.ones(3, dtype=torch.float64))
    w = per_class_weights(_t([1.0, 3.0]), gamma=1.0)
    assert torch.allclose(w, _t([1.5, 0.5]))
    assert torch.allclose(per_class_weights(_t([1.0, 9.0, 2.0]), gamma=0.0), torch.ones(3, dtype=torch.float64))
    assert torch.allclose(per_class_weights({0: 1, 1: 3}), _t([1.5, 0.5]))
    with pytest.raises(ConfigurationError):
        per_class_weights(_t([1.0, 0.0]))


def test_bld_linear_in_weights():
    generator = torch.Generator().manual_seed(2)
    o_new = torch.randn(3, 4, generator=generator, dtype=torch.float64)
    o_ens = torch.randn(3, 4, generator=generator, dtype=torch.float64)
    w = _t([0.5, 1.0, 1.5, 1.0])
    single = float(loss_bld(o_new, o_ens, w))
    double = float(loss_bld(o_new, o_ens, 2 * w))
    assert abs(double - 2 * single) < 1e-12
    conventional = float(loss_bld(o_new, o_ens, w, conventional=True))
    assert conventional != single
    with pytest.raises(ConfigurationError):
        loss_bld(o_new, o_ens, _t([1.0, 1.0]))


def test_feature_distillation_homogeneity():
    z_ens = torch.zeros(2, 3, 4, dtype=torch.float64)
    assert float(loss_fd(z_ens, z_ens)) == 0.0
    generator = torch.Generator().manual_seed(3)
    diff = torch.randn(2, 3, 4, generator=generator, dtype=torch.float64)
    assert abs(float(loss_fd(-2.5 * diff, z_ens)) - 2.5 * float(loss_fd(diff, z_ens))) < 1e-12
    with pytest.raises(ConfigurationError):
        loss_fd(torch.zeros(2, 3, 4), torch.zeros(2, 4, 3))


def test_non_negativity():
    generator = torch.Generator().manual_seed(4)
    for _ in range(20):
        o = torch.randn(4, 5, generator=generator, dtype=torch.float64) * 3
        o2 = torch.randn(4, 5, generator=generator, dtype=torch.float64) * 3
        labels = torch.randint(0, 5, (4,), generator=generator)
        counts = torch.randint(1, 10, (5,), generator=generator).to(torch.float64)
        w = per_class_weights(counts)
        assert float(loss_aux(o, labels)) >= 0
        assert float(loss_bc(o, labels, counts)) >= 0
        assert float(loss_ted([o], [o2], 2)) >= 0
        assert float(loss_bld(o, o2, w)) >= 0
        assert float(loss_fd(o.unsqueeze(1), o2.unsqueeze(1))) >= 0


def test_teacher_inputs_get_no_gradient():
    o_new = torch.randn(2, 3, dtype=torch.float64, requires_grad=True)
    o_ens = torch.randn(2, 3, dtype=torch.float64, requires_grad=True)
    loss_bld(o_new, o_ens, torch.ones(3, dtype=torch.float64)).backward()
    assert o_ens.grad is None
    assert o_new.grad is not None

    z_new = torch.randn(2, 4, 3, dtype=torch.float64, requires_grad=True)
    z_ens = torch.randn(2, 4, 3, dtype=torch.float64, requires_grad=True)
    loss_fd(z_new, z_ens).backward()
    assert z_ens.grad is None

    o_old = torch.randn(2, 3, dtype=torch.float64, requires_grad=True)
    loss_kd(o_old, o_new).backward()
    assert o_old.grad is None

    e_old = torch.randn(2, 3, dtype=torch.float64, requires_grad=True)
    e_ens = torch.randn(2, 3, dtype=torch.float64, requires_grad=True)
    loss_ted([e_old], [e_ens], 2).backward()
    assert e_old.grad is None


def test_stage_compositions():
    console = Console()
    console.print(Panel(
        "[bold]Weighted stage objectives[/bold]\n\n"
        "• stage 1: α=0.5, λ=0.1, μ=1.0, ξ=0.1, all parts 1 → 2.2\n"
        "• stage 2: λ=0.1, β=1.0, all parts 1 → 2.1",
        title="Test Configuration",
        border_style="cyan"
    ))
    cfg = LossConfig(alpha=0.5, lam=0.1, mu=1.0, xi=0.1, beta=1.0)
    assert stage1_loss(Stage1Parts(), cfg) == 0.0
    assert stage2_loss(Stage2Parts(), cfg) == 0.0
    assert abs(stage1_loss(Stage1Parts(1.0, 1.0, 1.0, 1.0, 1.0), cfg) - 2.2) < 1e-12
    assert abs(stage2_loss(Stage2Parts(1.0, 1.0, 1.0), cfg) - 2.1) < 1e-12

    no_ted = LossConfig(alpha=0.5, xi=0.0)
    assert stage1_terms(Stage1Parts(ted=3.0), no_ted)["ted"] == 0.0
    no_fd = LossConfig(beta=0.0)
    assert abs(stage2_loss(Stage2Parts(1.0, 1.0, 5.0), no_fd) - 1.1) < 1e-12


def test_composition_matches_hand_sum():
    generator = torch.Generator().manual_seed(5)
    for _ in range(20):
        p = torch.rand(5, generator=generator, dtype=torch.float64).tolist()
        a, lam, mu, xi, beta = torch.rand(5, generator=generator, dtype=torch.float64).tolist()
        cfg = LossConfig(alpha=a, lam=lam, mu=mu, xi=xi, beta=beta)
        expected1 = (1 - a) * p[0] + a * p[1] + lam * p[2] + mu * p[3] + xi * p[4]
        assert abs(stage1_loss(Stage1Parts(*p), cfg) - expected1) < 1e-12
        expected2 = p[0] + lam * p[1] + beta * p[2]
        assert abs(stage2_loss(Stage2Parts(*p[:3]), cfg) - expected2) < 1e-12


def test_alpha_resolution():
    cfg = LossConfig()
    with pytest.raises(ConfigurationError):
        stage1_loss(Stage1Parts(), cfg)
    assert cfg.with_alpha(10, 20).alpha == 0.5
    assert LossConfig(alpha=0.3).with_alpha(10, 20).alpha == 0.3
    with pytest.raises(ConfigurationError):
        LossConfig(alpha=1.5)
    with pytest.raises(ConfigurationError):
        LossConfig(tau=0.0)
