"""Rich console rendering for runs, sweeps and reports."""

from typing import Any, Dict, List, Optional, Sequence

from rich import box
from rich.console import Console
from rich.panel import Panel
from rich.table import Table
from rich.text import Text

from engine.metrics_collector import RunRecord, avg_accuracy
from .accuracy_chart import AccuracyChart


class RunConsole:
    """Console views shared by the ``run``, ``sweep`` and ``report`` commands."""

    def __init__(self, console: Optional[Console] = None):
        self.console = console or Console()
        self.chart = AccuracyChart()
        self.chart.console = self.console

    def display_banner(self, title: str, subtitle: str = "") -> None:
        text = f"[bold cyan]{title}[/bold cyan]"
        if subtitle:
            text += f"\n[dim]{subtitle}[/dim]"
        self.console.print(Panel(text, border_style="cyan", box=box.ROUNDED))

    def show_settings(self, settings: Dict[str, Any]) -> None:
        """Key settings of a run as a two-column table."""
        spec, train = settings["spec"], settings["train"]
        table = Table(title=f"Run {settings['name']}", box=box.SIMPLE)
        table.add_column("Setting", style="cyan")
        table.add_column("Value", style="green")
        table.add_row("Method", settings["method"])
        table.add_row("Dataset", spec["dataset"])
        table.add_row("Tasks", f"{spec['num_tasks']} x {spec['classes_per_task']} classes")
        table.add_row("Memory", str(spec["memory_capacity"]))
        table.add_row("Seed / class order", f"{train['seed']} / {spec['class_order_seed']}")
        flags = ", ".join(k for k, v in train["ablation"].items() if not v) or "none"
        table.add_row("Disabled components", flags)
        self.console.print(table)

    def show_record(self, record: RunRecord) -> None:
        """Per-stage accuracies followed by the stage chart."""
        table = Table(title=f"Stage Accuracies - {record.method}", box=box.ROUNDED)
        table.add_column("Task", style="cyan", justify="center")
        table.add_column("Stage", style="white")
        table.add_column("Seen", style="yellow", justify="right")
        table.add_column("Accuracy", style="green", justify="right")
        table.add_column("AVG", style="magenta", justify="right")
        table.add_column("Per task", style="dim")
        for row in record.rows:
            per_task = " ".join(f"{v:.1f}" for _, v in sorted(row.per_task_acc.items()))
            table.add_row(str(row.task_index), row.stage, str(row.seen_classes),
                          f"{row.all_seen_acc:.2f}", f"{row.avg_acc:.2f}", per_task)
        self.console.print(table)
        self.console.print(Panel(
            f"[bold]LAST[/bold] {record.last_accuracy:.2f}    "
            f"[bold]AVG[/bold] {avg_accuracy(record):.2f}",
            border_style="green",
        ))
        self.chart.generate_rich(self.chart.curves_from_record(record))

    def show_sweep(self, results: Sequence) -> None:
        """One line per sweep cell."""
        table = Table(title=f"Sweep Summary - {len(results)} cell(s)", box=box.ROUNDED)
        for name, style in (("Cell", "cyan"), ("Method", "white"), ("Memory", "yellow"),
                            ("Tasks", "yellow"), ("Ablation", "dim"), ("AVG", "magenta"),
                            ("LAST", "green")):
            table.add_column(name, style=style)
        for result in results:
            s = result.settings
            table.add_row(s.name, s.method, str(s.spec.memory_capacity), str(s.spec.num_tasks),
                          s.train.ablation.label(), f"{result.avg:.2f}", f"{result.last:.2f}")
        self.console.print(table)

    def show_groups(self, header: Sequence[str], rows: List[Sequence[Any]]) -> None:
        table = Table(title="Seed-averaged Results", box=box.ROUNDED)
        for name in header:
            table.add_column(name, justify="right" if name.endswith(("mean", "std")) else "left")
        for row in rows:
            table.add_row(*[f"{float(v):.2f}" if h.endswith(("mean", "std")) else str(v)
                            for h, v in zip(header, row)])
        self.console.print(table)

    def print_error(self, category: str, message: str) -> None:
        self.console.print(Text.assemble((f"error[{category}]:", "bold red"), " ", message))

    def show_test_summary(self, results: List[tuple]) -> None:
        self.console.print("\n" + "=" * 60)
        self.console.print("[bold]Test Summary[/bold]")
        self.console.print("=" * 60)
        for name, success in results:
            status = "[green]✓ PASS[/green]" if success else "[red]✗ FAIL[/red]"
            self.console.print(f"  {name}: {status}")
        passed = sum(1 for _, s in results if s)
        self.console.print(f"\n[bold]Results: {passed}/{len(results)} tests passed[/bold]")
