"""UI package: rich console views and the ASCII accuracy chart."""

from .accuracy_chart import AccuracyChart
from .console_ui import RunConsole

__all__ = [
    'AccuracyChart',
    'RunConsole'
]
