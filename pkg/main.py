#!/usr/bin/env python3
"""
SEDEG - Class-Incremental Learning Benchmark - Main Entry Point

Two-stage continual learning of a small encoder-decoder vision transformer:
an ensembled encoder is trained with the decoder, then distilled back into a
single encoder of the original size.

Usage:
    python3 main.py run [options]        - Run one benchmark
    python3 main.py sweep --grid FILE    - Run a grid of benchmarks
    python3 main.py report --in DIR      - Aggregate finished runs
    python3 main.py --test [N]           - Run the test modules
    python3 main.py --help               - Show help message
"""

import argparse
import importlib
import logging
import os
import sys

# Add project root to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

TEST_MODULES = [
    ("Model", "tests.test_model"),
    ("Losses", "tests.test_losses"),
    ("Loss Gradients", "tests.test_loss_gradients"),
    ("Memory", "tests.test_memory"),
    ("Checkpoint", "tests.test_checkpoint"),
    ("Trainer", "tests.test_trainer"),
    ("Harness", "tests.test_harness"),
    ("Forgetting Scenario", "tests.test_scenario_forgetting"),
    ("Ablation Scenario", "tests.test_scenario_ablation"),
]

RUN_FLAGS = ("no_aux", "no_ted", "no_balanced_ce", "no_feature_kd", "no_balanced_kd",
             "distill_full", "save_checkpoints")


def configure_logging(verbose: bool) -> None:
    from rich.logging import RichHandler

    logger = logging.getLogger("sedeg")
    logger.handlers.clear()
    logger.addHandler(RichHandler(rich_tracebacks=True, show_path=False))
    logger.setLevel(logging.DEBUG if verbose else logging.INFO)
    logger.propagate = False


def run_tests(test_num=None):
    """Run every ``test_*`` function of the test modules."""
    from rich.console import Console
    from rich.panel import Panel
    from ui.console_ui import RunConsole

    console = Console()
    modules = TEST_MODULES
    if test_num is not None:
        if 1 <= test_num <= len(TEST_MODULES):
            modules = [TEST_MODULES[test_num - 1]]
        else:
            console.print(f"[red]Invalid test number: {test_num}. Must be 1-{len(TEST_MODULES)}.[/red]")
            return False

    console.print(Panel("[bold cyan]SEDEG Test Suite[/bold cyan]", border_style="cyan"))

    results = []
    for name, module_name in modules:
        console.print(f"\n[bold]Running: {name}[/bold]")
        console.print("=" * 60)
        try:
            module = importlib.import_module(module_name)
        except Exception as e:
            console.print(f"[red]Error: {e}[/red]")
            results.append((name, False))
            continue
        for func_name in sorted(n for n in dir(module) if n.startswith("test_")):
            func = getattr(module, func_name)
            if not callable(func):
                continue
            try:
                func()
                results.append((f"{name}: {func_name}", True))
            except Exception as e:
                console.print(f"[red]{func_name}: {type(e).__name__}: {e}[/red]")
                results.append((f"{name}: {func_name}", False))

    RunConsole(console).show_test_summary(results)
    return all(success for _, success in results)


def build_parser() -> argparse.ArgumentParser:
    from harness.datasets import DATASETS
    from harness.settings import METHODS

    parser = argparse.ArgumentParser(
        prog="main.py",
        description="Two-stage class-incremental learning benchmark.",
        epilog="main.py --test [N] runs the test modules (all, or module N).",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log every training step")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one benchmark")
    run.add_argument("--config", help="key=value config file; flags override its values")
    run.add_argument("--dataset", choices=DATASETS)
    run.add_argument("--num-tasks", type=int)
    run.add_argument("--classes-per-task", type=int)
    run.add_argument("--memory", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--class-order-seed", type=int)
    run.add_argument("--method", choices=METHODS)
    run.add_argument("--out", help="output directory (default $SEDEG_OUTPUT_DIR or ./runs)")
    run.add_argument("--no-aux", action="store_true", default=None, help="drop the auxiliary loss")
    run.add_argument("--no-ted", action="store_true", default=None, help="drop task-embedding KD")
    run.add_argument("--no-balanced-ce", action="store_true", default=None,
                     help="plain sigmoid BCE instead of the balanced classification loss")
    run.add_argument("--no-feature-kd", action="store_true", default=None, help="drop feature KD")
    run.add_argument("--no-balanced-kd", action="store_true", default=None,
                     help="uniform class weights in logits distillation")
    run.add_argument("--distill-full", action="store_true", default=None,
                     help="also train the decoder during compression")
    run.add_argument("--save-checkpoints", action="store_true", default=None)
    run.add_argument("--resume", help="checkpoint written at the end of a task")
    run.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                     help="any other config-file key")

    sweep = sub.add_parser("sweep", help="run a grid of benchmarks")
    sweep.add_argument("--grid", required=True, help="grid file (comma-separated values per key)")
    sweep.add_argument("--config", help="base config file for every cell")
    sweep.add_argument("--out", help="output directory (default $SEDEG_OUTPUT_DIR or ./runs)")
    sweep.add_argument("--workers", type=int, default=1)

    report = sub.add_parser("report", help="aggregate finished runs")
    report.add_argument("--in", dest="in_dir", required=True)
    report.add_argument("--out", help="where to write the report (default: --in)")
    return parser


def cli_mapping(args: argparse.Namespace) -> dict:
    """Settings given on the command line, in config-file key names."""
    from harness.config_file import parse_config_text

    mapping = {}
    for key in ("dataset", "num_tasks", "classes_per_task", "memory", "seed",
                "class_order_seed", "method", "out", *RUN_FLAGS):
        value = getattr(args, key, None)
        if value is not None:
            mapping[key] = value
    mapping.update(parse_config_text("\n".join(args.set), "--set"))
    return mapping


def command_run(args, console) -> int:
    from harness.benchmark import run_settings
    from harness.config_file import load_config_file
    from harness.settings import RunSettings, apply_mapping

    settings = RunSettings()
    if args.config:
        settings = apply_mapping(settings, load_config_file(args.config))
    settings = apply_mapping(settings, cli_mapping(args))
    console.display_banner("SEDEG benchmark run", settings.name)
    console.show_settings(settings.to_dict())
    record = run_settings(settings, resume_from=args.resume)
    console.show_record(record)
    return 0


def command_sweep(args, console) -> int:
    from harness.config_file import load_config_file, load_grid_file
    from harness.settings import RunSettings, apply_mapping, default_output_dir
    from harness.sweep import expand_grid, run_sweep

    out_dir = args.out or default_output_dir()
    base = RunSettings(out_dir=out_dir)
    if args.config:
        base = apply_mapping(base, load_config_file(args.config))
    cells = expand_grid(load_grid_file(args.grid), base)
    console.display_banner("SEDEG sweep", f"{len(cells)} cell(s) -> {out_dir}")
    results = run_sweep(cells, out_dir, args.workers)
    console.show_sweep(results)
    return 0


def command_report(args, console) -> int:
    from harness.report import GROUP_HEADER, write_report

    result = write_report(args.in_dir, args.out)
    console.display_banner("SEDEG report", f"{len(result['runs'])} run(s) from {args.in_dir}")
    console.show_groups(GROUP_HEADER, [g.row() for g in result["groups"]])
    console.chart.generate_rich(result["curves"])
    return 0


def main():
    """Main entry point."""
    args = sys.argv[1:]

    if "--test" in args:
        test_num = None
        test_idx = args.index("--test")
        if test_idx + 1 < len(args):
            try:
                test_num = int(args[test_idx + 1])
            except ValueError:
                pass
        return 0 if run_tests(test_num) else 1

    try:
        from rich.console import Console
        from models.errors import SedegError, exit_code_for
        from ui.console_ui import RunConsole
    except ImportError as e:
        print(f"Error: Missing dependency - {e}")
        print("Please install requirements: pip install -r requirements.txt")
        return 1

    parsed = build_parser().parse_args(args)
    configure_logging(parsed.verbose)
    console = RunConsole(Console())
    commands = {"run": command_run, "sweep": command_sweep, "report": command_report}
    try:
        return commands[parsed.command](parsed, console)
    except SedegError as e:
        console.print_error(e.category, str(e))
        return exit_code_for(e)
    except KeyboardInterrupt:
        console.console.print("\n[yellow]Interrupted.[/yellow]")
        return 130


if __name__ == "__main__":
    sys.exit(main())
