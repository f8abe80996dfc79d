"""Server configuration."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

DEFAULT_MODEL = "facebook/bart-large"
TINY_MODEL = "tiny"  # randomly initialized in-process model, no downloads


@dataclass
class SidecarConfig:
    model: str = DEFAULT_MODEL
    lr: float = 2e-5
    max_length: int = 50
    device: str = field(
        default_factory=lambda: os.environ.get("SIDECAR_DEVICE", "cpu"))
    checkpoint_dir: Path = field(
        default_factory=lambda: Path(
            os.environ.get("SIDECAR_CHECKPOINT_DIR", "checkpoints")))
    seed: int = 0

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError(f"lr must be positive, got {self.lr}")
        if self.max_length < 1:
            raise ValueError(f"max_length must be >= 1, got {self.max_length}")
        self.checkpoint_dir = Path(self.checkpoint_dir)
