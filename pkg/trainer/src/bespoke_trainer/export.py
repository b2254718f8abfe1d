"""Interchange-file export (the contract with the bespoke toolkit).

Schema: docs/model-format.md in the toolkit repository.  Exports are byte
deterministic for a fixed TrainSpec: keys are sorted and floats rendered
with repr, so identical training runs serialize identically.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import MODEL_FORMAT_VERSION
from .training import TrainedModel, ovo_pairs

KIND_NAMES = {
    "mlp_c": "mlp_classifier",
    "mlp_r": "mlp_regressor",
    "svm_c": "svm_classifier",
    "svm_r": "svm_regressor",
}


def _listify(a) -> list:
    return np.asarray(a, dtype=float).tolist()


def model_document(trained: TrainedModel) -> dict:
    spec, data, est = trained.spec, trained.data, trained.estimator
    kind = KIND_NAMES[spec.model]
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "model_id": f"{spec.dataset}_{spec.model}",
        "kind": kind,
        "dataset": spec.dataset,
        "n_features": int(data.train_x.shape[1]),
        "seed": spec.seed,
        "float_accuracy": float(trained.accuracy),
        "normalization": {
            "feature_min": _listify(data.feature_min),
            "feature_max": _listify(data.feature_max),
        },
        "train": {
            "features": _listify(data.train_x),
            "labels": _listify(data.train_y),
        },
        "test": {
            "features": _listify(data.test_x),
            "labels": _listify(data.test_y),
        },
    }
    if kind.startswith("mlp"):
        # sklearn stores coefs_ as [in, hidden] and [hidden, out]; the
        # interchange uses row-major [out, in] per layer
        w1 = est.coefs_[0].T
        b1 = est.intercepts_[0]
        w2 = est.coefs_[1].T
        b2 = est.intercepts_[1]
        if kind == "mlp_classifier" and w2.shape[0] == 1:
            raise ValueError("binary logistic output head not supported; "
                             "need one output unit per class")
        doc["layers"] = [
            {"weights": _listify(w1), "biases": _listify(b1)},
            {"weights": _listify(w2), "biases": _listify(b2)},
        ]
        if kind == "mlp_classifier":
            doc["class_labels"] = [int(c) for c in est.classes_]
        else:
            doc["class_labels"] = []
    elif kind == "svm_classifier":
        classes = [int(c) for c in est.classes_]
        doc["class_labels"] = classes
        pairs = []
        for sub, (neg, pos) in zip(est.estimators_, ovo_pairs(classes)):
            pairs.append({
                "classes": [neg, pos],        # d >= 0 votes `pos`
                "weights": _listify(sub.coef_.ravel()),
                "bias": float(sub.intercept_[0]),
            })
        doc["pairs"] = pairs
    else:
        doc["class_labels"] = []
        doc["weights"] = _listify(est.coef_.ravel())
        doc["bias"] = float(est.intercept_[0])
    return doc


def export(trained: TrainedModel, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = json.dumps(model_document(trained), sort_keys=True,
                         separators=(",", ":")) + "\n"
    path.write_text(payload)
    return path
