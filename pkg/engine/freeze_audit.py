"""Freeze masks and hash-based audits of frozen parameters."""

import hashlib
from dataclasses import dataclass, field
from typing import Dict, List, Set

from torch import nn


def parameter_hash(tensor) -> str:
    return hashlib.sha256(tensor.detach().cpu().contiguous().numpy().tobytes()).hexdigest()


def frozen_names(module: nn.Module) -> Set[str]:
    return {name for name, p in module.named_parameters() if not p.requires_grad}


def trainable_names(module: nn.Module) -> Set[str]:
    return {name for name, p in module.named_parameters() if p.requires_grad}


def count_parameters(module: nn.Module, trainable: bool = False) -> int:
    return sum(p.numel() for p in module.parameters() if p.requires_grad or not trainable)


@dataclass
class FreezeMask:
    """Names of frozen parameters for one stage, with their pre-stage hashes."""
    stage: str
    names: Set[str] = field(default_factory=set)
    hashes: Dict[str, str] = field(default_factory=dict)

    @classmethod
    def capture(cls, stage: str, module: nn.Module) -> "FreezeMask":
        params = dict(module.named_parameters())
        names = {n for n, p in params.items() if not p.requires_grad}
        return cls(stage, names, {n: parameter_hash(params[n]) for n in names})

    def violations(self, module: nn.Module) -> List[str]:
        """Frozen parameters whose bytes differ from the captured hash."""
        params = dict(module.named_parameters())
        return sorted(n for n in self.names
                      if n not in params or parameter_hash(params[n]) != self.hashes[n])
