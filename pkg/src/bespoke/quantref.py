"""Simulator-independent fixed-point reference interpreter.

This is the oracle that generated programs are checked against, bit for
bit.  It deliberately shares no arithmetic with the machine model or the
code generator: accumulation happens in unbounded Python/numpy integers and
is wrapped to 32 bits only where the hardware wraps (the lane accumulator
readout), followed by the same shift / clamp-at-zero / saturate sequence
the generated code performs.
"""

from __future__ import annotations

import numpy as np

from .models import QuantModel

_WRAP = 1 << 32
_HALF = 1 << 31


def wrap32(value: int) -> int:
    """Two's-complement wraparound of an unbounded integer."""
    return ((value + _HALF) % _WRAP) - _HALF


def _wrap32_arr(values: np.ndarray) -> np.ndarray:
    return ((values + _HALF) % _WRAP) - _HALF


def _dense(layer, x_codes: np.ndarray) -> np.ndarray:
    """Integer accumulators per output row, wrapped like MACR output."""
    acc = layer.weight_codes @ x_codes.astype(np.int64) + layer.bias_codes
    return _wrap32_arr(acc)


def quant_outputs(qm: QuantModel, x_codes) -> np.ndarray:
    """Raw 32-bit output codes (accumulator scale) for one input vector."""
    x = np.asarray(x_codes, dtype=np.int64)
    if x.shape != (qm.n_features,):
        raise ValueError(f"input codes shaped {x.shape}, expected "
                         f"({qm.n_features},)")
    if qm.kind.startswith("mlp"):
        hidden_layer, out_layer = qm.layers
        acc = _dense(hidden_layer, x)
        shifted = acc >> hidden_layer.out_shift
        act = np.clip(shifted, 0, hidden_layer.out_format.code_max)
        return _dense(out_layer, act)
    return _dense(qm.layers[0], x)


def infer_result_code(qm: QuantModel, x_codes) -> int:
    """The single word the generated program writes to its result slot.

    Classifiers write the winning class index (argmax of outputs, or the
    one-vs-one vote with first-listed tie break); regressors write the raw
    output code at the accumulator scale.
    """
    outs = quant_outputs(qm, x_codes)
    if qm.kind == "mlp_classifier":
        return int(np.argmax(outs))             # first maximum wins
    if qm.kind == "svm_classifier":
        votes = [0] * len(qm.class_labels)
        index_of = {c: i for i, c in enumerate(qm.class_labels)}
        for d, (neg, pos) in zip(outs, qm.pair_classes):
            votes[index_of[pos if d >= 0 else neg]] += 1
        return int(np.argmax(votes))
    return int(outs[0])


def reference_infer_quant(qm: QuantModel, x_codes):
    """Label (classifier) or dequantized value (regressor)."""
    code = infer_result_code(qm, x_codes)
    if qm.is_classifier:
        return qm.class_labels[code]
    return code / (1 << qm.output_scale)
