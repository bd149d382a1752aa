"""Harness package: datasets, benchmark runs, sweeps and reports."""

from .benchmark import read_metrics, resume_state, run_benchmark, run_settings
from .config_file import load_config_file, load_grid_file, parse_config_text
from .datasets import (
    BenchmarkSpec, TaskData, TaskStream, audit_eval_isolation, build_stream, class_order,
)
from .report import load_runs, stage_curves, summarize_runs, write_report
from .settings import (
    RunSettings, apply_mapping, default_output_dir, settings_from_dict, settings_from_mapping,
)
from .sweep import SweepResult, expand_grid, run_sweep, sweep

__all__ = [
    'BenchmarkSpec', 'TaskData', 'TaskStream', 'audit_eval_isolation', 'build_stream',
    'class_order',
    'run_benchmark', 'run_settings', 'resume_state', 'read_metrics',
    'load_config_file', 'load_grid_file', 'parse_config_text',
    'RunSettings', 'apply_mapping', 'default_output_dir', 'settings_from_dict',
    'settings_from_mapping',
    'SweepResult', 'expand_grid', 'run_sweep', 'sweep',
    'load_runs', 'stage_curves', 'summarize_runs', 'write_report',
]
