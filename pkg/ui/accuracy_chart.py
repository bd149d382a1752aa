"""ASCII chart of running-average accuracy per stage across tasks."""

from typing import Dict, List

from rich.console import Console
from rich.table import Table
from rich.text import Text

from engine.metrics_collector import RunRecord
from models.checkpoint import atomic_write_text


class AccuracyChart:
    """Draws stage curves (task index on x, average accuracy on y) as text."""

    MARKERS = "*o+x#@%&"

    def __init__(self, height: int = 12, column_width: int = 4):
        self.console = Console()
        self.height = height
        self.column_width = column_width
        self.colors = ["cyan", "green", "yellow", "magenta", "red", "blue"]

    @staticmethod
    def curves_from_record(record: RunRecord) -> Dict[str, Dict[int, float]]:
        """Split a run record into one curve per stage; task 1 opens every curve."""
        stages = sorted({r.stage for r in record.rows if r.task_index > 1}) or ["bootstrap"]
        curves: Dict[str, Dict[int, float]] = {s: {} for s in stages}
        for row in record.rows:
            for stage in (stages if row.task_index == 1 else [row.stage]):
                curves[stage][row.task_index] = row.avg_acc
        return curves

    def generate_ascii(self, curves: Dict[str, Dict[int, float]]) -> str:
        if not curves or not any(curves.values()):
            return "No accuracy data available."
        names = sorted(curves)
        tasks = sorted({t for points in curves.values() for t in points})
        rows: List[List[str]] = [[" "] * (len(tasks) * self.column_width) for _ in range(self.height)]

        for i, name in enumerate(names):
            marker = self.MARKERS[i % len(self.MARKERS)]
            for col, t in enumerate(tasks):
                if t not in curves[name]:
                    continue
                level = int(round(curves[name][t] / 100.0 * (self.height - 1)))
                level = min(max(level, 0), self.height - 1)
                rows[self.height - 1 - level][col * self.column_width + 1] = marker

        lines = ["=" * 70, "                 AVERAGE ACCURACY PER STAGE", "=" * 70, ""]
        for r, row in enumerate(rows):
            value = 100.0 * (self.height - 1 - r) / (self.height - 1)
            lines.append(f"{value:6.1f} |{''.join(row)}")
        lines.append("       +" + "-" * (len(tasks) * self.column_width))
        lines.append("        " + "".join(f"{t:<{self.column_width}}" for t in tasks))
        lines.append("        task index")
        lines.append("")
        for i, name in enumerate(names):
            lines.append(f"  {self.MARKERS[i % len(self.MARKERS)]}  {name}")
        return "\n".join(lines)

    def generate_rich(self, curves: Dict[str, Dict[int, float]]) -> None:
        """Print the chart followed by a table of the plotted values."""
        self.console.print(self.generate_ascii(curves))
        if not curves:
            return
        names = sorted(curves)
        tasks = sorted({t for points in curves.values() for t in points})
        table = Table(title="Average Accuracy per Stage")
        table.add_column("Task", style="cyan", justify="center")
        for i, name in enumerate(names):
            table.add_column(name, style=self.colors[i % len(self.colors)], justify="right")
        for t in tasks:
            cells = [Text(f"{curves[n][t]:.2f}") if t in curves[n] else Text("-", style="dim")
                     for n in names]
            table.add_row(str(t), *cells)
        self.console.print(table)

    def save_to_file(self, curves: Dict[str, Dict[int, float]], filename: str) -> None:
        atomic_write_text(filename, self.generate_ascii(curves))
