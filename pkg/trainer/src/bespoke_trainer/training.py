"""Model training: randomized hyperparameter search, 5-fold CV.

MLPs have a single hidden layer searched over 1..5 ReLU neurons; SVMs use
a linear kernel, one-vs-one for classification.  Everything is seeded and
single-process so a given TrainSpec always reproduces the same model.

Regressors are scored the way the deployed models are scored: the predicted
quality is rounded to the nearest integer and compared to the label.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import loguniform, uniform
from sklearn.metrics import make_scorer
from sklearn.model_selection import RandomizedSearchCV
from sklearn.multiclass import OneVsOneClassifier
from sklearn.neural_network import MLPClassifier, MLPRegressor
from sklearn.svm import SVC, SVR

from .datasets import PreparedDataset, prepare_dataset

MODEL_KINDS = ("mlp_c", "mlp_r", "svm_c", "svm_r")


@dataclass
class TrainSpec:
    dataset: str
    model: str                   # mlp_c | mlp_r | svm_c | svm_r
    seed: int = 7
    search_iterations: int = 8
    cv_folds: int = 5
    split_ratio: float = 0.7

    def __post_init__(self):
        if self.model not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.model!r}")
        if not (0.0 < self.split_ratio < 1.0):
            raise ValueError("split_ratio must be in (0, 1)")


@dataclass
class TrainedModel:
    spec: TrainSpec
    data: PreparedDataset
    estimator: object
    accuracy: float              # measured on the test split
    best_params: dict = field(default_factory=dict)


def rounded_match_rate(y_true, y_pred) -> float:
    rounded = np.floor(np.asarray(y_pred) + 0.5).astype(int)
    return float(np.mean(rounded == np.asarray(y_true).astype(int)))


def _search_space(spec: TrainSpec):
    hidden = [(h,) for h in range(1, 6)]
    if spec.model == "mlp_c":
        est = MLPClassifier(activation="relu", solver="lbfgs",
                            max_iter=1200, random_state=spec.seed)
        grid = {"hidden_layer_sizes": hidden,
                "alpha": loguniform(1e-5, 1e-1)}
        scoring = "accuracy"
    elif spec.model == "mlp_r":
        est = MLPRegressor(activation="relu", solver="lbfgs",
                           max_iter=1200, random_state=spec.seed)
        grid = {"hidden_layer_sizes": hidden,
                "alpha": loguniform(1e-5, 1e-1)}
        scoring = make_scorer(rounded_match_rate)
    elif spec.model == "svm_c":
        est = OneVsOneClassifier(SVC(kernel="linear", random_state=spec.seed))
        grid = {"estimator__C": loguniform(0.03, 30.0)}
        scoring = "accuracy"
    else:
        est = SVR(kernel="linear")
        grid = {"C": loguniform(0.03, 30.0),
                "epsilon": uniform(0.02, 0.3)}
        scoring = make_scorer(rounded_match_rate)
    return est, grid, scoring


def ovo_pairs(classes) -> list[tuple]:
    """sklearn's one-vs-one ordering: (0,1), (0,2), ..., (1,2), ...; the
    positive decision side is the second class of the pair."""
    out = []
    classes = list(classes)
    for i in range(len(classes)):
        for j in range(i + 1, len(classes)):
            out.append((classes[i], classes[j]))
    return out


def measured_accuracy(spec: TrainSpec, estimator, xs, ys) -> float:
    """Test accuracy under the deployed inference conventions (vote with
    first-listed tie break for OvO, rounded match for regressors)."""
    if spec.model == "mlp_c":
        return float(np.mean(estimator.predict(xs) == ys))
    if spec.model == "svm_c":
        classes = list(estimator.classes_)
        hits = 0
        decisions = np.column_stack(
            [sub.decision_function(xs) for sub in estimator.estimators_])
        for row, y in zip(decisions, ys):
            votes = {c: 0 for c in classes}
            for d, (neg, pos) in zip(row, ovo_pairs(classes)):
                votes[pos if d >= 0 else neg] += 1
            best = max(votes.values())
            pred = next(c for c in classes if votes[c] == best)
            hits += pred == y
        return hits / len(ys)
    preds = estimator.predict(xs)
    return rounded_match_rate(ys, preds)


def train(spec: TrainSpec) -> TrainedModel:
    """Prepare the dataset, run the randomized search, measure accuracy."""
    data = prepare_dataset(spec.dataset, seed=spec.seed,
                           split_ratio=spec.split_ratio)
    train_y = data.train_y
    test_y = data.test_y
    if spec.model.endswith("_c"):
        train_y = train_y.astype(int)
        test_y = test_y.astype(int)

    est, grid, scoring = _search_space(spec)
    search = RandomizedSearchCV(
        est, grid, n_iter=spec.search_iterations, cv=spec.cv_folds,
        scoring=scoring, random_state=spec.seed, n_jobs=1, refit=True)
    search.fit(data.train_x, train_y)
    best = search.best_estimator_
    acc = measured_accuracy(spec, best, data.test_x, test_y)
    if math.isnan(acc):
        raise RuntimeError(f"accuracy NaN for {spec}")
    return TrainedModel(spec=spec, data=data, estimator=best, accuracy=acc,
                        best_params=dict(search.best_params_))
