"""Models package: configuration, encoder-decoder ViT and checkpoints."""

from .config import ModelConfig, FULL_SCALE_PRESETS
from .image_set import ImageSet
from .errors import (
    SedegError, ConfigurationError, TaskOrderError, DataError,
    TrainingError, FreezeViolationError, exit_code_for
)
from .encoder import Encoder, encode, clone_frozen, clone_trainable, freeze
from .decoder import Decoder, TaskToken, ClassifierHead, TaskAttentionBlock, decode_task
from .incremental_vit import IncrementalViT, full_logits
from .ensembled_encoder import EnsembledEncoder, EnsembledModel, fuse, aux_logits
from .checkpoint import (
    save_checkpoint, load_checkpoint, checkpoint_bytes, parse_checkpoint,
    atomic_write_bytes, atomic_write_text
)

__all__ = [
    'ModelConfig', 'FULL_SCALE_PRESETS', 'ImageSet',
    'SedegError', 'ConfigurationError', 'TaskOrderError', 'DataError',
    'TrainingError', 'FreezeViolationError', 'exit_code_for',
    'Encoder', 'encode', 'clone_frozen', 'clone_trainable', 'freeze',
    'Decoder', 'TaskToken', 'ClassifierHead', 'TaskAttentionBlock', 'decode_task',
    'IncrementalViT', 'full_logits',
    'EnsembledEncoder', 'EnsembledModel', 'fuse', 'aux_logits',
    'save_checkpoint', 'load_checkpoint', 'checkpoint_bytes', 'parse_checkpoint',
    'atomic_write_bytes', 'atomic_write_text'
]
