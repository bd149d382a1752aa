"""Rehearsal memory package."""

from .memory_buffer import (
    MemoryBuffer, Exemplar, ClassCounts,
    class_quotas, class_counts, merged_dataset, merged_loader
)

__all__ = [
    'MemoryBuffer', 'Exemplar', 'ClassCounts',
    'class_quotas', 'class_counts', 'merged_dataset', 'merged_loader'
]
