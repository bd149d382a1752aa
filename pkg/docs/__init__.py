"""Documentation package: markdown reports."""

from .report_generator import generate_sweep_report

__all__ = ['generate_sweep_report']
