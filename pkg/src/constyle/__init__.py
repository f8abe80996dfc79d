"""Semi-supervised consistency training for formality style transfer."""

__version__ = "0.1.0"
