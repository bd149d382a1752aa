#!/usr/bin/env python3
"""Test Scenario: Forgetting on a Two-Task Stream

Two tasks of 10 well-separated synthetic classes, memory of 20 exemplars,
three seeds. Expected: the two-stage learner keeps far more of task 1 than
naive fine-tuning, and ends no worse than the DyTox-style rehearsal
baseline (2-point slack).
"""

import sys
import os
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
from rich.console import Console
from rich.table import Table
from rich.panel import Panel
from rich import box

from engine import ActivityLogger
from harness import run_benchmark
from tests.fixtures import tiny_model_config, tiny_spec, tiny_train

SEEDS = (0, 1, 2)
METHODS = ("sedeg", "dytox", "finetune")


def _scenario_run(method, seed):
    spec = tiny_spec(num_tasks=2, classes_per_task=10, memory_capacity=20,
                     train_per_class=30, eval_per_class=10, separation=1.0, noise=0.5)
    train = tiny_train(bootstrap_epochs=8, stage1_epochs=6, stage2_epochs=6, finetune_epochs=3,
                       batch_size=32, seed=seed)
    model = tiny_model_config(embed_dim=32, num_heads=4)
    return run_benchmark(spec, train, method, model, logger=ActivityLogger(echo=False))


def test_forgetting_two_tasks():
    """Run every method over three seeds and compare task-1 and final accuracy."""
    console = Console()
    console.print(Panel(
        "[bold]Test Scenario: Forgetting on a Two-Task Stream[/bold]\n\n"
        "• 10 + 10 synthetic classes, memory 20\n"
        f"• seeds {', '.join(str(s) for s in SEEDS)}\n"
        "• Expected: task-1 accuracy ≥ finetune + 10, LAST ≥ dytox - 2",
        title="Test Configuration",
        border_style="cyan"
    ))

    task1 = {m: [] for m in METHODS}
    last = {m: [] for m in METHODS}
    for method in METHODS:
        for seed in SEEDS:
            record = _scenario_run(method, seed)
            task1[method].append(record.rows[-1].per_task_acc[1])
            last[method].append(record.last_accuracy)

    table = Table(title="Accuracy after Task 2 (mean over seeds)", box=box.ROUNDED)
    table.add_column("Method", style="cyan")
    table.add_column("Task-1 acc", style="yellow", justify="right")
    table.add_column("LAST", style="green", justify="right")
    for method in METHODS:
        table.add_row(method, f"{np.mean(task1[method]):.2f}", f"{np.mean(last[method]):.2f}")
    console.print(table)

    assert np.mean(task1["sedeg"]) >= np.mean(task1["finetune"]) + 10.0
    assert np.mean(last["sedeg"]) >= np.mean(last["dytox"]) - 2.0
    console.print("[bold green]✓ Forgetting scenario passed[/bold green]")


if __name__ == "__main__":
    test_forgetting_two_tasks()
