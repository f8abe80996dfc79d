"""Wire-protocol generation server for the consistency-training pipeline."""

__version__ = "0.1.0"

from .config import SidecarConfig  # noqa: F401
from .model import SidecarModel  # noqa: F401
