"""Versioned checkpoint container.

Layout (all integers little-endian)::

    b"SDGC" | u32 version | u32 header_len | header (UTF-8 JSON) | payload

The header holds the ModelConfig, per-task class counts, the frozen-parameter
names, optional memory-buffer state and an index of tensors
``{name, shape, offset, numel}``. The payload is the concatenation of every
parameter as little-endian float32.

Task tokens and heads live in 0-based module lists, so task t owns
``decoder.task_token.{t-1}`` and ``decoder.heads.{t-1}``; the header spells this
out under ``task_slots``.
"""

import json
import os
import struct
import tempfile
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import torch
from torch import nn

from .config import ModelConfig
from .decoder import Decoder
from .encoder import Encoder
from .ensembled_encoder import EnsembledEncoder, EnsembledModel
from .errors import ConfigurationError, DataError
from .incremental_vit import IncrementalViT

MAGIC = b"SDGC"
FORMAT_VERSION = 1


def atomic_write_bytes(path: str, data: bytes) -> None:
    """Write ``data`` to a temp file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def atomic_write_text(path: str, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def _model_kind(model: nn.Module) -> str:
    if isinstance(model, IncrementalViT):
        return "incremental_vit"
    if isinstance(model, EnsembledModel):
        return "ensembled"
    raise ConfigurationError(f"cannot checkpoint a {type(model).__name__}")


def task_slots(num_tasks: int) -> List[Dict[str, Any]]:
    """1-based task index to the parameter prefixes of its token and head."""
    return [{"task_index": i + 1, "token": f"decoder.task_token.{i}", "head": f"decoder.heads.{i}"}
            for i in range(num_tasks)]


def checkpoint_bytes(model: nn.Module, memory: Optional[Dict[str, Any]] = None,
                     extra: Optional[Dict[str, Any]] = None) -> bytes:
    """Serialize ``model`` (and optional buffer state) to the container format."""
    kind = _model_kind(model)
    index = []
    chunks = []
    offset = 0
    frozen = []
    for name, param in model.named_parameters():
        data = param.detach().cpu().numpy().astype("<f4", copy=False).tobytes(order="C")
        index.append({"name": name, "shape": list(param.shape), "offset": offset,
                      "numel": int(param.numel())})
        chunks.append(data)
        offset += len(data)
        if not param.requires_grad:
            frozen.append(name)
    header = {
        "version": FORMAT_VERSION,
        "kind": kind,
        "model_config": model.config.to_dict(),
        "task_count": model.decoder.num_tasks,
        "classes_per_task": model.decoder.classes_per_task,
        "has_aux_head": kind == "ensembled" and model.ensembled_encoder.aux_head is not None,
        "frozen": frozen,
        "task_slots": task_slots(model.decoder.num_tasks),
        "tensors": index,
        "memory": memory,
        "extra": extra or {},
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    return (MAGIC + struct.pack("<II", FORMAT_VERSION, len(header_bytes))
            + header_bytes + b"".join(chunks))


def save_checkpoint(path: str, model: nn.Module, memory: Optional[Dict[str, Any]] = None,
                    extra: Optional[Dict[str, Any]] = None) -> None:
    atomic_write_bytes(path, checkpoint_bytes(model, memory, extra))


def parse_checkpoint(data: bytes) -> Tuple[Dict[str, Any], Dict[str, torch.Tensor]]:
    """Split a container into its header and a name → tensor map."""
    if data[:4] != MAGIC:
        raise DataError("not a checkpoint container (bad magic)")
    version, header_len = struct.unpack("<II", data[4:12])
    if version != FORMAT_VERSION:
        raise DataError(f"unsupported checkpoint version {version}")
    header = json.loads(data[12:12 + header_len].decode("utf-8"))
    payload = memoryview(data)[12 + header_len:]
    tensors = {}
    for entry in header["tensors"]:
        start = entry["offset"]
        array = np.frombuffer(payload[start:start + 4 * entry["numel"]], dtype="<f4")
        tensors[entry["name"]] = torch.from_numpy(array.astype(np.float32).reshape(entry["shape"]))
    return header, tensors


def _build_model(header: Dict[str, Any]) -> nn.Module:
    config = ModelConfig.from_dict(header["model_config"])
    decoder = Decoder(config)
    for num_classes in header["classes_per_task"]:
        decoder.add_task(num_classes)
    if header["kind"] == "incremental_vit":
        return IncrementalViT(config, Encoder(config), decoder)
    ens = EnsembledEncoder(Encoder(config), max(1, decoder.num_classes), sup_init="random")
    model = EnsembledModel(ens, decoder)
    if not header["has_aux_head"]:
        model.discard_aux_head()
    return model


def load_state(model: nn.Module, tensors: Dict[str, torch.Tensor], frozen=()) -> None:
    """Copy ``tensors`` into ``model`` by canonical name; shapes must match exactly."""
    params = dict(model.named_parameters())
    if set(params) != set(tensors):
        missing = sorted(set(params) ^ set(tensors))
        raise ConfigurationError(f"checkpoint/model parameter mismatch: {missing[:5]}")
    frozen = set(frozen)
    with torch.no_grad():
        for name, param in params.items():
            if tuple(param.shape) != tuple(tensors[name].shape):
                raise ConfigurationError(f"shape mismatch for {name}")
            param.copy_(tensors[name])
            param.requires_grad_(name not in frozen)


def load_checkpoint(path: str) -> Tuple[nn.Module, Optional[Dict[str, Any]], Dict[str, Any]]:
    """Rebuild the model stored at ``path``; returns ``(model, memory_state, header)``."""
    with open(path, "rb") as f:
        data = f.read()
    header, tensors = parse_checkpoint(data)
    model = _build_model(header)
    load_state(model, tensors, header["frozen"])
    return model, header.get("memory"), header
