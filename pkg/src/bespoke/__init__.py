"""Bespoke-core toolkit.

Static analysis and pruning of a small 32-bit ISA, an instruction-level
simulator with a multi-precision SIMD MAC unit, fixed-point MLP/SVM code
generation, and an evaluation harness reporting accuracy loss, speedup,
code size and modeled ROM/core area and power.
"""

__version__ = "0.1.0"

MODEL_FORMAT_VERSION = 1
