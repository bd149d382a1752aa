"""Rehearsal memory with a fixed exemplar budget."""

import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np
import torch
from torch.utils.data import DataLoader, TensorDataset

from models.errors import ConfigurationError, DataError
from models.image_set import ImageSet

log = logging.getLogger("sedeg.memory")


@dataclass
class Exemplar:
    """A stored old-class sample."""
    image: np.ndarray
    label: int
    task_of_origin: int
    sample_id: int


class ClassCounts(dict):
    """class-id → number of samples s_j in the current training set."""

    @property
    def total(self) -> int:
        return sum(self.values())

    def vector(self, num_classes: int) -> torch.Tensor:
        out = torch.zeros(num_classes, dtype=torch.float32)
        for class_id, count in self.items():
            if class_id < num_classes:
                out[class_id] = float(count)
        return out


def class_quotas(capacity: int, seen_classes: Sequence[int]) -> Dict[int, int]:
    """``floor(capacity / n)`` per class; the remainder goes to the lowest class ids."""
    classes = sorted(int(c) for c in seen_classes)
    if not classes:
        return {}
    base, remainder = divmod(capacity, len(classes))
    return {c: base + (1 if i < remainder else 0) for i, c in enumerate(classes)}


class MemoryBuffer:
    """Bounded exemplar store with balanced per-class allocation.

    New classes are filled by seeded uniform sampling without replacement;
    when quotas shrink, each class keeps the prefix of its earliest-selected
    exemplars so the buffer shrinks deterministically.
    """

    def __init__(self, capacity: int, seed: int = 0):
        if capacity < 0:
            raise ConfigurationError(f"memory capacity must be >= 0, got {capacity}")
        self.capacity = capacity
        self.seed = seed
        self.store: Dict[int, List[Exemplar]] = {}
        self.warnings: List[str] = []

    def __len__(self) -> int:
        return sum(len(v) for v in self.store.values())

    @property
    def classes(self) -> List[int]:
        return sorted(c for c, items in self.store.items() if items)

    def per_class_sizes(self) -> Dict[int, int]:
        return {c: len(items) for c, items in sorted(self.store.items())}

    def _class_rng(self, class_id: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, class_id])

    def update(self, task_dataset: ImageSet, seen_classes: Iterable[int]) -> "MemoryBuffer":
        """Re-balance the buffer after a task completes."""
        seen = sorted(set(int(c) for c in seen_classes))
        if self.capacity < len(seen):
            message = (f"memory capacity {self.capacity} < {len(seen)} seen classes; "
                       f"some classes get no exemplars")
            self.warnings.append(message)
            log.warning(message)
        quotas = class_quotas(self.capacity, seen)

        for class_id in list(self.store):
            quota = quotas.get(class_id, 0)
            self.store[class_id] = self.store[class_id][:quota]

        for class_id in task_dataset.classes():
            if class_id in self.store and self.store[class_id]:
                continue
            quota = quotas.get(class_id, 0)
            candidates = np.nonzero(task_dataset.labels == class_id)[0]
            order = self._class_rng(class_id).permutation(len(candidates))[:quota]
            self.store[class_id] = [
                Exemplar(
                    image=task_dataset.images[candidates[i]],
                    label=class_id,
                    task_of_origin=task_dataset.task_index,
                    sample_id=int(task_dataset.sample_ids[candidates[i]]),
                )
                for i in order
            ]
        return self

    def as_image_set(self) -> Optional[ImageSet]:
        exemplars = [e for c in sorted(self.store) for e in self.store[c]]
        if not exemplars:
            return None
        return ImageSet(
            np.stack([e.image for e in exemplars]).astype(np.float32),
            np.array([e.label for e in exemplars], dtype=np.int64),
            np.array([e.sample_id for e in exemplars], dtype=np.int64),
        )

    def sample_ids(self) -> List[int]:
        return [e.sample_id for c in sorted(self.store) for e in self.store[c]]

    def state_dict(self) -> Dict:
        """Serializable state: class-id → sample ids into the source datasets."""
        return {
            "capacity": self.capacity,
            "seed": self.seed,
            "classes": {str(c): [e.sample_id for e in self.store[c]] for c in sorted(self.store)},
        }

    @classmethod
    def from_state(cls, state: Dict, sources: Sequence[ImageSet]) -> "MemoryBuffer":
        """Rebuild a buffer from ``state_dict()`` output and the datasets it indexes."""
        buffer = cls(state["capacity"], state["seed"])
        lookup = {}
        for source in sources:
            for row, sample_id in enumerate(source.sample_ids):
                lookup[int(sample_id)] = (source, row)
        for class_key, ids in state["classes"].items():
            items = []
            for sample_id in ids:
                if sample_id not in lookup:
                    raise DataError(f"memory references unknown sample id {sample_id}")
                source, row = lookup[sample_id]
                items.append(Exemplar(source.images[row], int(source.labels[row]),
                                      source.task_index, int(sample_id)))
            buffer.store[int(class_key)] = items
        return buffer


def merged_dataset(buffer: Optional[MemoryBuffer], current_task_dataset: ImageSet) -> ImageSet:
    """Union of the current task's training set and the buffer's exemplars."""
    parts = [current_task_dataset]
    if buffer is not None:
        stored = buffer.as_image_set()
        if stored is not None:
            parts.append(stored)
    if sum(len(p) for p in parts) == 0:
        raise DataError("training union is empty")
    return ImageSet.concat(parts, current_task_dataset.task_index)


def class_counts(buffer: Optional[MemoryBuffer], current_task_dataset: ImageSet) -> ClassCounts:
    """Per-class sample counts over the current task set plus the buffer."""
    counts = ClassCounts()
    for label in current_task_dataset.labels:
        counts[int(label)] = counts.get(int(label), 0) + 1
    if buffer is not None:
        for class_id, items in buffer.store.items():
            if items:
                counts[class_id] = counts.get(class_id, 0) + len(items)
    return ClassCounts(sorted(counts.items()))


def merged_loader(buffer: Optional[MemoryBuffer], current_task_dataset: ImageSet,
                  batch_size: int, seed: int, epoch: int = 0) -> DataLoader:
    """Seeded shuffled batches over the union, reshuffled per epoch.

    Batches are ``(images, labels, sample_ids)``.
    """
    if batch_size < 1:
        raise ConfigurationError(f"batch_size must be >= 1, got {batch_size}")
    union = merged_dataset(buffer, current_task_dataset)
    dataset = TensorDataset(
        torch.from_numpy(np.ascontiguousarray(union.images, dtype=np.float32)),
        torch.from_numpy(union.labels.astype(np.int64)),
        torch.from_numpy(union.sample_ids.astype(np.int64)),
    )
    generator = torch.Generator()
    generator.manual_seed(seed * 1_000_003 + epoch)
    return DataLoader(dataset, batch_size=batch_size, shuffle=True, generator=generator)
