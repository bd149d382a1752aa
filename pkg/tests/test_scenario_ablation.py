#!/usr/bin/env python3
"""Test Scenario: Ablation Grids

Runs both component-ablation presets end to end on the desk stream.
Expected: one summary row with AVG and LAST per distinct cell, and every
switched-off loss term logs zero in the per-step trace.
"""

import sys
import os
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import csv
import tempfile

from rich.console import Console
from rich.table import Table
from rich.panel import Panel
from rich import box

from harness import RunSettings, expand_grid, run_sweep
from tests.fixtures import tiny_model_config, tiny_spec, tiny_train


def _trace(out_dir, settings):
    with open(os.path.join(out_dir, settings.name, "loss_trace.csv"), newline="") as f:
        return list(csv.DictReader(f))


def _column(rows, stage, name):
    return [float(r[name]) for r in rows if r["stage"] == stage]


def test_ablation_grids():
    """Table-style presets: embedding/aux/balanced-CE rows and compression rows."""
    console = Console()
    console.print(Panel(
        "[bold]Test Scenario: Ablation Grids[/bold]\n\n"
        "• preset 1: aux loss / embeddings KD / balanced classification\n"
        "• preset 2: feature KD / balanced KD / distill encoder only\n"
        "• each preset adds the DyTox-style reference row",
        title="Test Configuration",
        border_style="cyan"
    ))
    with tempfile.TemporaryDirectory() as tmp:
        base = RunSettings(spec=tiny_spec(), model=tiny_model_config(), train=tiny_train(),
                           out_dir=tmp)
        cells = expand_grid({"ablation": ["components", "compression"]}, base)
        assert len(cells) == 8
        results = run_sweep(cells, tmp)

        with open(os.path.join(tmp, "summary.csv"), newline="") as f:
            summary = list(csv.DictReader(f))
        assert len(summary) == len(cells)
        assert {"avg", "last", "ablation"} <= set(summary[0])

        table = Table(title="Ablation Summary", box=box.ROUNDED)
        table.add_column("Method", style="cyan")
        table.add_column("Ablation", style="dim")
        table.add_column("AVG", style="magenta", justify="right")
        table.add_column("LAST", style="green", justify="right")
        for result in results:
            table.add_row(result.settings.method, result.settings.train.ablation.label(),
                          f"{result.avg:.2f}", f"{result.last:.2f}")
        console.print(table)

        for result in results:
            settings = result.settings
            if settings.method != "sedeg":
                continue
            flags = settings.train.ablation
            rows = _trace(tmp, settings)
            if not flags.embeddings_kd:
                assert all(v == 0.0 for v in _column(rows, "stage1", "ted"))
            else:
                assert any(v > 0.0 for v in _column(rows, "stage1", "ted"))
            if not flags.aux_loss:
                assert all(v == 0.0 for v in _column(rows, "stage1", "aux"))
            if not flags.feature_kd:
                assert all(v == 0.0 for v in _column(rows, "stage2", "fd"))
            else:
                assert any(v > 0.0 for v in _column(rows, "stage2", "fd"))
            assert 0.0 <= result.last <= 100.0

    console.print("[bold green]✓ Ablation scenario passed[/bold green]")


if __name__ == "__main__":
    test_ablation_grids()
