"""Training pipeline for the bespoke toolkit's reference models."""

__version__ = "0.1.0"

MODEL_FORMAT_VERSION = 1
