"""Class-incremental streams over synthetic or small-image datasets."""

import logging
import os
import pickle
from dataclasses import asdict, dataclass
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from models.errors import ConfigurationError, DataError
from models.image_set import ImageSet

log = logging.getLogger("sedeg.data")

DATASETS = ("synthetic", "small-image-10", "small-image-100")
NATIVE_CLASSES = {"small-image-10": 10, "small-image-100": 100}

# per-channel statistics used to standardize the small-image sets
_CHANNEL_MEAN = np.array([0.5071, 0.4865, 0.4409], dtype=np.float32)
_CHANNEL_STD = np.array([0.2673, 0.2564, 0.2762], dtype=np.float32)


@dataclass(frozen=True)
class BenchmarkSpec:
    """Dataset and split of one class-incremental benchmark."""
    dataset: str = "synthetic"
    num_tasks: int = 2
    classes_per_task: int = 10
    class_order_seed: int = 0
    memory_capacity: int = 20
    num_classes: Optional[int] = None
    image_size: int = 32
    # synthetic generator
    data_seed: int = 0
    train_per_class: int = 50
    eval_per_class: int = 20
    separation: float = 1.0
    noise: float = 1.0
    # small-image sets
    data_dir: Optional[str] = None
    max_train_per_class: Optional[int] = None

    def __post_init__(self):
        if self.dataset not in DATASETS:
            raise ConfigurationError(f"unknown dataset {self.dataset!r}; choose from {DATASETS}")
        if self.num_tasks < 1 or self.classes_per_task < 1:
            raise ConfigurationError("num_tasks and classes_per_task must be >= 1")
        if self.memory_capacity < 0:
            raise ConfigurationError(f"memory capacity must be >= 0, got {self.memory_capacity}")
        if self.train_per_class < 1 or self.eval_per_class < 1:
            raise ConfigurationError("synthetic sets need at least one sample per class")

    @property
    def total_classes(self) -> int:
        if self.dataset in NATIVE_CLASSES:
            return NATIVE_CLASSES[self.dataset]
        return self.num_classes if self.num_classes is not None else self.num_tasks * self.classes_per_task

    def check_partition(self) -> None:
        if self.num_tasks * self.classes_per_task != self.total_classes:
            raise DataError(
                f"{self.num_tasks} tasks x {self.classes_per_task} classes != "
                f"{self.total_classes} classes in {self.dataset}"
            )

    def to_dict(self) -> Dict:
        return asdict(self)


@dataclass
class TaskData:
    """Training and evaluation sets of one task (global labels)."""
    task_index: int
    classes: List[int]
    train_set: ImageSet
    eval_set: ImageSet


@dataclass
class TaskStream:
    """Ordered tasks plus the raw-class → global-id remapping."""
    spec: BenchmarkSpec
    tasks: List[TaskData]
    label_map: Dict[int, int]

    def __len__(self) -> int:
        return len(self.tasks)

    def __iter__(self) -> Iterator[TaskData]:
        return iter(self.tasks)

    @property
    def num_classes(self) -> int:
        return len(self.label_map)

    def class_order(self) -> List[int]:
        """Raw class ids in the order they are introduced."""
        return [raw for raw, _ in sorted(self.label_map.items(), key=lambda kv: kv[1])]


# ---------------------------------------------------------------- raw sources

def synthetic_source(spec: BenchmarkSpec) -> Tuple[Tuple[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray]]:
    """Gaussian class prototypes rendered as small images.

    Each class has a prototype image drawn from N(0, separation²); samples
    add N(0, noise²) pixel noise.
    """
    num_classes = spec.total_classes
    shape = (spec.image_size, spec.image_size, 3)
    rng = np.random.default_rng(spec.data_seed)
    prototypes = rng.normal(0.0, spec.separation, size=(num_classes, *shape)).astype(np.float32)

    def draw(per_class: int):
        labels = np.repeat(np.arange(num_classes, dtype=np.int64), per_class)
        noise = rng.normal(0.0, spec.noise, size=(len(labels), *shape)).astype(np.float32)
        return prototypes[labels] + noise, labels

    return draw(spec.train_per_class), draw(spec.eval_per_class)


def _unpickle(path: str) -> Dict:
    if not os.path.exists(path):
        raise DataError(f"missing dataset file {path}")
    try:
        with open(path, "rb") as f:
            return pickle.load(f, encoding="bytes")
    except (pickle.UnpicklingError, EOFError) as e:
        raise DataError(f"cannot read {path}: {e}") from e


def _to_images(rows: np.ndarray) -> np.ndarray:
    images = rows.reshape(-1, 3, 32, 32).transpose(0, 2, 3, 1).astype(np.float32) / 255.0
    return (images - _CHANNEL_MEAN) / _CHANNEL_STD


def small_image_source(spec: BenchmarkSpec):
    """Read the python-pickle release of the 10- or 100-class small-image sets."""
    data_dir = spec.data_dir or os.environ.get("SEDEG_DATA_DIR", "./data")
    if spec.dataset == "small-image-10":
        root = os.path.join(data_dir, "cifar-10-batches-py")
        train_files = [os.path.join(root, f"data_batch_{i}") for i in range(1, 6)]
        test_files = [os.path.join(root, "test_batch")]
        label_key = b"labels"
    else:
        root = os.path.join(data_dir, "cifar-100-python")
        train_files = [os.path.join(root, "train")]
        test_files = [os.path.join(root, "test")]
        label_key = b"fine_labels"

    def read(files):
        batches = [_unpickle(p) for p in files]
        try:
            rows = np.concatenate([b[b"data"] for b in batches])
            labels = np.concatenate([np.asarray(b[label_key], dtype=np.int64) for b in batches])
        except KeyError as e:
            raise DataError(f"unexpected layout in {root}: missing key {e}") from e
        return _to_images(rows), labels

    if spec.image_size != 32:
        raise ConfigurationError(f"{spec.dataset} images are 32x32, model expects {spec.image_size}")
    train, test = read(train_files), read(test_files)
    if spec.max_train_per_class is not None:
        rng = np.random.default_rng(spec.data_seed)
        keep = []
        for c in np.unique(train[1]):
            rows = np.nonzero(train[1] == c)[0]
            keep.extend(sorted(rng.permutation(rows)[:spec.max_train_per_class].tolist()))
        keep = np.asarray(keep, dtype=np.int64)
        train = (train[0][keep], train[1][keep])
    log.info("Loaded %s: %d train / %d test images", spec.dataset, len(train[1]), len(test[1]))
    return train, test


# ---------------------------------------------------------------- splitting

def class_order(num_classes: int, seed: int) -> List[int]:
    """Native label order permuted by ``seed``."""
    return [int(c) for c in np.random.default_rng(seed).permutation(num_classes)]


def build_stream(spec: BenchmarkSpec) -> TaskStream:
    """Split a dataset into ``num_tasks`` disjoint class groups.

    Classes are remapped to global ids in introduction order, so task t owns
    ids ``[(t-1)k, tk)``. Sample ids are unique across train and eval sets.
    """
    spec.check_partition()
    if spec.dataset == "synthetic":
        (x_train, y_train), (x_eval, y_eval) = synthetic_source(spec)
    else:
        (x_train, y_train), (x_eval, y_eval) = small_image_source(spec)

    order = class_order(spec.total_classes, spec.class_order_seed)
    label_map = {raw: new for new, raw in enumerate(order)}
    remap = np.vectorize(label_map.__getitem__, otypes=[np.int64])
    g_train, g_eval = remap(y_train), remap(y_eval)
    train_ids = np.arange(len(y_train), dtype=np.int64)
    eval_ids = np.arange(len(y_train), len(y_train) + len(y_eval), dtype=np.int64)

    k = spec.classes_per_task
    tasks = []
    for t in range(1, spec.num_tasks + 1):
        classes = list(range((t - 1) * k, t * k))
        train_rows = np.nonzero(np.isin(g_train, classes))[0]
        eval_rows = np.nonzero(np.isin(g_eval, classes))[0]
        if len(train_rows) == 0 or len(eval_rows) == 0:
            raise DataError(f"task {t} has an empty train or eval split")
        tasks.append(TaskData(
            task_index=t,
            classes=classes,
            train_set=ImageSet(x_train[train_rows], g_train[train_rows], train_ids[train_rows], t),
            eval_set=ImageSet(x_eval[eval_rows], g_eval[eval_rows], eval_ids[eval_rows], t),
        ))
    return TaskStream(spec, tasks, label_map)


def audit_eval_isolation(stream: TaskStream, memory_ids: Sequence[int] = ()) -> int:
    """Check that no eval sample id occurs in any training set or in memory.

    Returns the number of eval ids audited.
    """
    eval_ids = set()
    for task in stream.tasks:
        eval_ids.update(int(i) for i in task.eval_set.sample_ids)
    leaked = set()
    for task in stream.tasks:
        leaked.update(eval_ids.intersection(int(i) for i in task.train_set.sample_ids))
    leaked.update(eval_ids.intersection(int(i) for i in memory_ids))
    if leaked:
        raise DataError(f"{len(leaked)} eval sample(s) reached training or memory")
    return len(eval_ids)
