"""Markdown report generator for benchmark sweeps."""

from typing import Any, Dict, List, Sequence


def _table(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    lines = ["| " + " | ".join(str(h) for h in header) + " |",
             "|" + "|".join("---" for _ in header) + "|"]
    for row in rows:
        lines.append("| " + " | ".join(str(v) for v in row) + " |")
    return "\n".join(lines)


def _round(value: Any) -> Any:
    try:
        return f"{float(value):.2f}"
    except (TypeError, ValueError):
        return value


def generate_sweep_report(group_header: Sequence[str], group_rows: List[Sequence[Any]],
                          curves: Dict[str, Dict[int, float]]) -> str:
    """Render seed-averaged AVG / LAST per configuration and the stage curves."""
    numeric = {"avg_mean", "avg_std", "last_mean", "last_std"}
    rows = [[_round(v) if h in numeric else v for h, v in zip(group_header, row)]
            for row in group_rows]

    names = sorted(curves)
    tasks = sorted({t for points in curves.values() for t in points})
    curve_rows = [[t] + [_round(curves[n][t]) if t in curves[n] else "" for n in names]
                  for t in tasks]

    report = f"""# Class-Incremental Benchmark Report

## 1. Accuracy per Configuration

AVG is the mean of the all-seen-class accuracies after every task; LAST is
the all-seen-class accuracy after the final task. Both are averaged over
seeds and class orders (`runs` column); `std` is the population standard
deviation.

{_table(group_header, rows)}

## 2. Average Accuracy per Stage

Each column is one (method, stage) curve: the running average accuracy
after that stage of every task, averaged over runs. Every curve of a
method starts from the shared first-task model.

{_table(["task_index", *names], curve_rows)}

---

*{len(group_rows)} configuration(s), {len(names)} curve(s).*
"""
    return report
