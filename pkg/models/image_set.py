"""In-memory labelled image collection."""

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .errors import DataError


@dataclass
class ImageSet:
    """Channels-last images with global labels and stable sample ids."""
    images: np.ndarray      # [N, H, W, C] float32
    labels: np.ndarray      # [N] int64, remapped global class ids
    sample_ids: np.ndarray  # [N] int64, unique across a stream
    task_index: int = 0

    def __post_init__(self):
        if not (len(self.images) == len(self.labels) == len(self.sample_ids)):
            raise DataError(
                f"inconsistent set sizes: {len(self.images)} images, {len(self.labels)} labels, "
                f"{len(self.sample_ids)} ids"
            )

    def __len__(self) -> int:
        return len(self.labels)

    def classes(self) -> List[int]:
        return sorted(int(c) for c in np.unique(self.labels))

    def subset(self, indices: Sequence[int]) -> "ImageSet":
        idx = np.asarray(indices, dtype=np.int64)
        return ImageSet(self.images[idx], self.labels[idx], self.sample_ids[idx], self.task_index)

    def of_class(self, class_id: int) -> "ImageSet":
        return self.subset(np.nonzero(self.labels == class_id)[0])

    def __repr__(self) -> str:
        return f"ImageSet(task={self.task_index}, n={len(self)}, classes={len(self.classes())})"

    @staticmethod
    def concat(sets: Sequence["ImageSet"], task_index: int = 0) -> "ImageSet":
        sets = [s for s in sets if len(s)]
        if not sets:
            raise DataError("cannot concatenate an empty collection of image sets")
        return ImageSet(
            np.concatenate([s.images for s in sets]),
            np.concatenate([s.labels for s in sets]),
            np.concatenate([s.sample_ids for s in sets]),
            task_index,
        )
