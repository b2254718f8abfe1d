"""Model interchange format, float reference inference, and quantization.

Models arrive as JSON files (schema in docs/model-format.md) carrying the
trained weights, the class labels, the normalization bounds, the committed
train/test split and the trainer-recorded float accuracy.  Quantization
turns them into integer-code models with power-of-two scales only, chosen
per tensor:

  frac_bits f = largest f <= m-1 with max|value| < 2^(m-1-f)

where m = min(n_bits, 16) caps the format precision (the MAC lanes feed
32-bit accumulators, so finer-than-16-bit operand scales buy nothing and
would wrap the accumulator at n=32), and f is lowered further, if needed,
until the worst-case layer accumulation provably fits 31 bits plus sign.
Biases are quantized at the accumulator scale of their layer.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import MODEL_FORMAT_VERSION

KINDS = ("mlp_classifier", "mlp_regressor", "svm_classifier", "svm_regressor")
INT32_MAX = (1 << 31) - 1


class ModelFormatError(Exception):
    pass


# ---------------------------------------------------------------------------
# float models
# ---------------------------------------------------------------------------

@dataclass
class SvmPair:
    """One-vs-one decision function: d = w.x + b >= 0 votes classes[1]."""
    classes: tuple
    weights: np.ndarray
    bias: float


@dataclass
class FloatModel:
    kind: str
    model_id: str
    dataset: str
    n_features: int
    class_labels: list
    layers: list[tuple[np.ndarray, np.ndarray]]   # MLP: [(W[out,in], b[out])]
    pairs: list[SvmPair]                          # SVM-C
    sv_weights: np.ndarray | None                 # SVM-R
    sv_bias: float
    feature_min: np.ndarray
    feature_max: np.ndarray
    float_accuracy: float
    train_x: np.ndarray
    train_y: np.ndarray
    test_x: np.ndarray
    test_y: np.ndarray
    seed: int = 0

    @property
    def hidden_size(self) -> int:
        return self.layers[0][0].shape[0] if self.layers else 0

    @property
    def is_classifier(self) -> bool:
        return self.kind.endswith("classifier")


def load_model(path) -> FloatModel:
    """Read and validate an interchange file."""
    with open(path) as f:
        doc = json.load(f)
    version = doc.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ModelFormatError(
            f"format_version {version} unsupported "
            f"(expected {MODEL_FORMAT_VERSION})")
    kind = doc.get("kind")
    if kind not in KINDS:
        raise ModelFormatError(f"unknown model kind {kind!r}")

    def arr(x, dtype=np.float64):
        return np.asarray(x, dtype=dtype)

    layers = []
    pairs = []
    sv_weights, sv_bias = None, 0.0
    if kind.startswith("mlp"):
        raw = doc["layers"]
        if len(raw) != 2:
            raise ModelFormatError("MLP needs exactly input->hidden->output")
        for lay in raw:
            layers.append((arr(lay["weights"]), arr(lay["biases"])))
        hidden = layers[0][0].shape[0]
        if not (1 <= hidden <= 5):
            raise ModelFormatError(f"hidden layer size {hidden} outside 1..5")
        if layers[1][0].shape[1] != hidden:
            raise ModelFormatError("layer shape mismatch")
    elif kind == "svm_classifier":
        labels = doc["class_labels"]
        raw = doc["pairs"]
        expected = len(labels) * (len(labels) - 1) // 2
        if len(raw) != expected:
            raise ModelFormatError(
                f"one-vs-one needs {expected} pairs, file has {len(raw)}")
        for p in raw:
            pairs.append(SvmPair(tuple(p["classes"]), arr(p["weights"]),
                                 float(p["bias"])))
    else:
        sv_weights = arr(doc["weights"])
        sv_bias = float(doc["bias"])

    norm = doc["normalization"]
    model = FloatModel(
        kind=kind,
        model_id=doc["model_id"],
        dataset=doc.get("dataset", ""),
        n_features=int(doc["n_features"]),
        class_labels=list(doc.get("class_labels", [])),
        layers=layers,
        pairs=pairs,
        sv_weights=sv_weights,
        sv_bias=sv_bias,
        feature_min=arr(norm["feature_min"]),
        feature_max=arr(norm["feature_max"]),
        float_accuracy=float(doc["float_accuracy"]),
        train_x=arr(doc["train"]["features"]),
        train_y=arr(doc["train"]["labels"]),
        test_x=arr(doc["test"]["features"]),
        test_y=arr(doc["test"]["labels"]),
        seed=int(doc.get("seed", 0)))

    for name, x in (("train", model.train_x), ("test", model.test_x)):
        if x.ndim != 2 or x.shape[1] != model.n_features:
            raise ModelFormatError(f"{name} features shaped {x.shape}, "
                                   f"expected (*, {model.n_features})")
        if not np.isfinite(x).all():
            raise ModelFormatError(f"non-finite value in {name} features")
    return model


# ---------------------------------------------------------------------------
# float reference inference
# ---------------------------------------------------------------------------

def _mlp_forward(model: FloatModel, x: np.ndarray) -> np.ndarray:
    (w1, b1), (w2, b2) = model.layers
    hidden = np.maximum(x @ w1.T + b1, 0.0)
    return hidden @ w2.T + b2


def reference_infer_float(model: FloatModel, x) -> float | object:
    """Exact float64 forward pass: label (classifier) or value (regressor)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.n_features,):
        raise ValueError(f"input shaped {x.shape}, expected "
                         f"({model.n_features},)")
    if model.kind == "mlp_classifier":
        return model.class_labels[int(np.argmax(_mlp_forward(model, x)))]
    if model.kind == "mlp_regressor":
        return float(_mlp_forward(model, x)[0])
    if model.kind == "svm_classifier":
        votes = {c: 0 for c in model.class_labels}
        for pair in model.pairs:
            d = float(pair.weights @ x + pair.bias)
            votes[pair.classes[1] if d >= 0 else pair.classes[0]] += 1
        best = max(votes.values())
        for c in model.class_labels:       # first-listed class wins ties
            if votes[c] == best:
                return c
    return float(model.sv_weights @ x + model.sv_bias)


def regression_label(value: float) -> int:
    """Score convention for the wine regressors: round half up."""
    return int(math.floor(value + 0.5))


def accuracy(model: FloatModel, xs: np.ndarray, ys: np.ndarray,
             infer=reference_infer_float) -> float:
    hits = 0
    for x, y in zip(xs, ys):
        pred = infer(model, x)
        if model.is_classifier:
            hits += pred == y
        else:
            hits += regression_label(pred) == int(y)
    return hits / len(ys)


# ---------------------------------------------------------------------------
# quantization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QFormat:
    n_bits: int
    frac_bits: int

    def __post_init__(self):
        if self.n_bits not in (4, 8, 16, 32):
            raise ValueError(f"n_bits {self.n_bits} not in 4/8/16/32")
        if not (0 <= self.frac_bits <= self.n_bits - 1):
            raise ValueError(f"frac_bits {self.frac_bits} outside "
                             f"0..{self.n_bits - 1}")

    @property
    def code_min(self) -> int:
        return -(1 << (self.n_bits - 1))

    @property
    def code_max(self) -> int:
        return (1 << (self.n_bits - 1)) - 1

    @property
    def real_max(self) -> float:
        return self.code_max / (1 << self.frac_bits)


def quantize_value(value: float, fmt: QFormat) -> tuple[int, bool]:
    """Round half away from zero, saturate; returns (code, saturated)."""
    scaled = abs(value) * (1 << fmt.frac_bits)
    code = math.floor(scaled + 0.5)
    if value < 0:
        code = -code
    if code < fmt.code_min:
        return fmt.code_min, True
    if code > fmt.code_max:
        return fmt.code_max, True
    return code, False


def quantize_array(values: np.ndarray, fmt: QFormat) -> tuple[np.ndarray, int]:
    """Vectorized quantize_value; returns (codes int64, saturation count)."""
    scaled = np.abs(values) * float(1 << fmt.frac_bits)
    codes = np.floor(scaled + 0.5)
    codes = np.where(values < 0, -codes, codes)
    saturated = int(np.sum((codes < fmt.code_min) | (codes > fmt.code_max)))
    return np.clip(codes, fmt.code_min, fmt.code_max).astype(np.int64), \
        saturated


def dequantize(codes, fmt: QFormat):
    return np.asarray(codes, dtype=np.float64) / (1 << fmt.frac_bits)


def _range_frac_bits(max_abs: float, m: int) -> int:
    """Largest f <= m-1 with max_abs < 2^(m-1-f); m-1 when all zero."""
    if max_abs == 0.0:
        return m - 1
    f = m - 1
    while f > 0 and max_abs >= 2.0 ** (m - 1 - f):
        f -= 1
    return f


@dataclass
class QLayer:
    """One quantized dense layer (or the stacked SVM decision matrix)."""
    weight_codes: np.ndarray          # [out, in], int64 codes
    weight_format: QFormat
    bias_codes: np.ndarray            # [out], codes at scale f_w + f_in
    bias_frac_bits: int
    in_frac_bits: int
    out_shift: int                    # hidden layer: acc >> shift -> f_out
    out_format: QFormat | None        # hidden layer activation format
    saturations: int


@dataclass
class QuantModel:
    kind: str
    model_id: str
    n_bits: int
    format_bits: int                   # m = min(n_bits, 16)
    input_format: QFormat
    layers: list[QLayer]               # MLP: [hidden, output]; SVM: [decision]
    class_labels: list
    pair_classes: list[tuple]          # SVM-C: classes per decision row
    output_scale: int                  # frac bits of the raw output codes
    saturation_count: int
    source: FloatModel = field(repr=False, default=None)

    @property
    def is_classifier(self) -> bool:
        return self.kind.endswith("classifier")

    @property
    def n_features(self) -> int:
        return self.layers[0].weight_codes.shape[1]


def quantize_input(qm: QuantModel, x) -> np.ndarray:
    codes, _ = quantize_array(np.asarray(x, dtype=np.float64), qm.input_format)
    return codes


def _quantize_layer(weights: np.ndarray, biases: np.ndarray, f_in: int,
                    m: int, in_max_code: int) -> tuple:
    """Quantize one layer with the accumulator-headroom cap.

    f_w starts at the range rule and drops until the worst-case row
    accumulation (integer codes, all same sign) stays below 2^31.
    """
    f_w = _range_frac_bits(float(np.max(np.abs(weights))) if weights.size
                           else 0.0, m)
    while True:
        wfmt = QFormat(m, f_w)
        codes, sat_w = quantize_array(weights, wfmt)
        bias_scale = f_w + f_in
        bias_codes = np.floor(np.abs(biases) * float(1 << bias_scale) + 0.5)
        bias_codes = np.where(np.asarray(biases) < 0, -bias_codes, bias_codes)
        sat_b = int(np.sum((bias_codes > INT32_MAX)
                           | (bias_codes < -INT32_MAX - 1)))
        bias_codes = np.clip(bias_codes, -INT32_MAX - 1, INT32_MAX)
        bias_codes = bias_codes.astype(np.int64)
        worst = int(np.max(np.sum(np.abs(codes), axis=1) * in_max_code
                           + np.abs(bias_codes)))
        if worst <= INT32_MAX or f_w == 0:
            return codes, wfmt, bias_codes, bias_scale, sat_w + sat_b
        f_w -= 1


def quantize_model(model: FloatModel, n_bits: int) -> QuantModel:
    """Fixed-point model at n_bits with power-of-two scales throughout.

    Activation formats are calibrated on the committed training split
    (float forward pass); every choice is frozen into the QuantModel so
    generated code, the reference interpreter and the simulator agree
    bit for bit.
    """
    if n_bits not in (4, 8, 16, 32):
        raise ValueError(f"n_bits {n_bits} not supported")
    for w in ([lay[0] for lay in model.layers]
              + [p.weights for p in model.pairs]
              + ([model.sv_weights] if model.sv_weights is not None else [])):
        if not np.isfinite(w).all():
            raise ValueError("non-finite weight")

    m = min(n_bits, 16)
    f_x = m - 1                     # inputs live in [0, 1]
    # codes are m-bit even at n=32 (sign-extended into 32-bit words), so
    # input saturation enforces the headroom analysis below
    input_format = QFormat(m, f_x)
    in_max_code = 1 << (m - 1)      # worst-case |input code|
    total_sat = 0
    layers: list[QLayer] = []
    pair_classes: list[tuple] = []

    if model.kind.startswith("mlp"):
        (w1, b1), (w2, b2) = model.layers
        codes1, wfmt1, bias1, bias_scale1, sat1 = _quantize_layer(
            w1, b1, f_x, m, in_max_code)
        total_sat += sat1

        # activation format from float activations over the train split
        acts = np.maximum(model.train_x @ w1.T + b1, 0.0)
        f_act = _range_frac_bits(float(acts.max()) if acts.size else 0.0, m)
        f_act = min(f_act, bias_scale1)          # shift must be >= 0
        act_format = QFormat(m, f_act)
        shift1 = bias_scale1 - f_act

        codes2, wfmt2, bias2, bias_scale2, sat2 = _quantize_layer(
            w2, b2, f_act, m, act_format.code_max)
        total_sat += sat2

        layers = [
            QLayer(codes1, wfmt1, bias1, bias_scale1, f_x, shift1,
                   act_format, sat1),
            QLayer(codes2, wfmt2, bias2, bias_scale2, f_act, 0, None, sat2),
        ]
        out_scale = bias_scale2
    else:
        if model.kind == "svm_classifier":
            weights = np.stack([p.weights for p in model.pairs])
            biases = np.array([p.bias for p in model.pairs])
            pair_classes = [p.classes for p in model.pairs]
        else:
            weights = model.sv_weights.reshape(1, -1)
            biases = np.array([model.sv_bias])
        codes, wfmt, bias_codes, bias_scale, sat = _quantize_layer(
            weights, biases, f_x, m, in_max_code)
        total_sat += sat
        layers = [QLayer(codes, wfmt, bias_codes, bias_scale, f_x, 0,
                         None, sat)]
        out_scale = bias_scale

    return QuantModel(
        kind=model.kind,
        model_id=model.model_id,
        n_bits=n_bits,
        format_bits=m,
        input_format=input_format,
        layers=layers,
        class_labels=list(model.class_labels),
        pair_classes=pair_classes,
        output_scale=out_scale,
        saturation_count=total_sat,
        source=model)
