import gzip
import json
import warnings
from pathlib import Path

import numpy as np
import pytest

from bespoke_trainer.cli import FIXTURE_PLAN, main
from bespoke_trainer.datasets import (CACHE_ENV_VAR, DATASETS, DatasetError,
                                      UCI_URLS, dataset_path, load_dataset,
                                      prepare_dataset)
from bespoke_trainer.export import export, model_document
from bespoke_trainer.training import TrainSpec, ovo_pairs, train

warnings.filterwarnings("ignore")

REPO_ROOT = Path(__file__).resolve().parents[2]
COMMITTED_MODELS = REPO_ROOT / "tests" / "fixtures" / "models"


@pytest.fixture(scope="module")
def redwine_svm():
    return train(TrainSpec(dataset="redwine", model="svm_r"))


@pytest.fixture(scope="module")
def cardio_mlp():
    return train(TrainSpec(dataset="cardiotocography", model="mlp_c"))


# ---------------------------------------------------------------------------
# datasets
# ---------------------------------------------------------------------------

def test_dataset_files_resolve_and_verify():
    for name in DATASETS:
        x, y, names = load_dataset(name)
        assert x.ndim == 2 and len(x) == len(y)
        assert len(names) == x.shape[1]
    assert set(UCI_URLS) == set(DATASETS)


def test_cardio_shape_and_classes():
    x, y, _ = load_dataset("cardiotocography")
    assert x.shape == (2126, 21)
    assert set(np.unique(y)) == {1.0, 2.0, 3.0}


def test_wine_labels_are_small_integers():
    for name in ("redwine", "whitewine"):
        _, y, _ = load_dataset(name)
        assert np.all(y == np.floor(y))
        assert y.min() >= 3 and y.max() <= 9


def test_split_ratio_within_one_row():
    for name in DATASETS:
        prep = prepare_dataset(name, seed=7)
        total = len(prep.train_y) + len(prep.test_y)
        assert abs(len(prep.train_y) - 0.7 * total) <= 1


def test_train_features_normalized_to_unit_range():
    prep = prepare_dataset("redwine", seed=7)
    assert prep.train_x.min() >= 0.0
    assert prep.train_x.max() <= 1.0
    # normalization is fitted on train only; test rows may poke outside
    assert prep.test_x.min() >= -0.5 and prep.test_x.max() <= 1.5


def test_same_seed_same_split():
    a = prepare_dataset("whitewine", seed=13)
    b = prepare_dataset("whitewine", seed=13)
    assert np.array_equal(a.train_x, b.train_x)
    assert np.array_equal(a.test_y, b.test_y)
    c = prepare_dataset("whitewine", seed=14)
    assert not np.array_equal(a.train_y, c.train_y)


def test_checksum_mismatch_detected(tmp_path, monkeypatch):
    src = dataset_path("redwine")
    corrupted = gzip.compress(b"feature,quality\n0.5,6\n")
    (tmp_path / "redwine.csv.gz").write_bytes(corrupted)
    monkeypatch.setenv(CACHE_ENV_VAR, str(tmp_path))
    with pytest.raises(DatasetError, match="checksum"):
        load_dataset("redwine")
    monkeypatch.delenv(CACHE_ENV_VAR)
    load_dataset("redwine")        # committed fixture still fine


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------

def test_mlp_hidden_size_searched_within_1_to_5(cardio_mlp):
    hidden = cardio_mlp.estimator.hidden_layer_sizes
    assert 1 <= hidden[0] <= 5


def test_cardio_mlp_accuracy_plausibility_band(cardio_mlp):
    assert 0.80 <= cardio_mlp.accuracy <= 1.0


def test_svm_classifier_exports_all_pairs():
    trained = train(TrainSpec(dataset="cardiotocography", model="svm_c",
                              search_iterations=2))
    doc = model_document(trained)
    k = len(doc["class_labels"])
    assert len(doc["pairs"]) == k * (k - 1) // 2
    assert [p["classes"] for p in doc["pairs"]] == \
        [list(t) for t in ovo_pairs(doc["class_labels"])]


def test_rejects_unknown_model_kind():
    with pytest.raises(ValueError, match="model kind"):
        TrainSpec(dataset="redwine", model="cnn")


# ---------------------------------------------------------------------------
# export determinism and schema
# ---------------------------------------------------------------------------

def test_export_byte_deterministic(tmp_path, redwine_svm):
    again = train(TrainSpec(dataset="redwine", model="svm_r"))
    a = export(redwine_svm, tmp_path / "a.json")
    b = export(again, tmp_path / "b.json")
    assert a.read_bytes() == b.read_bytes()


def test_export_schema_fields(tmp_path, redwine_svm):
    doc = model_document(redwine_svm)
    for field in ("format_version", "kind", "n_features", "normalization",
                  "train", "test", "float_accuracy", "weights", "bias"):
        assert field in doc
    assert doc["format_version"] == 1
    assert doc["kind"] == "svm_regressor"


def test_export_row_major_layer_shapes(cardio_mlp, tmp_path):
    doc = model_document(cardio_mlp)
    w1 = doc["layers"][0]["weights"]
    hidden = cardio_mlp.estimator.hidden_layer_sizes[0]
    assert len(w1) == hidden                  # rows = output neurons
    assert len(w1[0]) == doc["n_features"]    # cols = inputs
    w2 = doc["layers"][1]["weights"]
    assert len(w2) == len(doc["class_labels"])
    assert len(w2[0]) == hidden


# ---------------------------------------------------------------------------
# the cross-package contract (consumes the toolkit through the
# interchange file only)
# ---------------------------------------------------------------------------

def test_export_round_trips_through_toolkit_loader(tmp_path, redwine_svm):
    from bespoke.models import load_model
    path = export(redwine_svm, tmp_path / "rt.json")
    model = load_model(path)
    assert model.kind == "svm_regressor"
    assert model.n_features == redwine_svm.data.train_x.shape[1]


def test_acceptance_trainer_reproduction(tmp_path):
    """[SECONDARY] all six models train and export under the default seed,
    the toolkit's float interpreter reproduces each recorded accuracy
    within 0.5 pp, and exports are byte-deterministic per seed."""
    from bespoke.models import accuracy as toolkit_accuracy, load_model
    for dataset, kind in FIXTURE_PLAN:
        trained = train(TrainSpec(dataset=dataset, model=kind))
        path = export(trained, tmp_path / f"{dataset}_{kind}.json")
        model = load_model(path)
        reproduced = toolkit_accuracy(model, model.test_x, model.test_y)
        assert abs(reproduced - model.float_accuracy) <= 0.005, \
            (dataset, kind, reproduced, model.float_accuracy)
        committed = COMMITTED_MODELS / f"{dataset}_{kind}.json"
        assert path.read_bytes() == committed.read_bytes(), \
            f"{committed.name} drifted from a fresh seeded export"
    print("\nACCEPTANCE trainer-reproduction: PASS (6 models, recorded "
          "accuracy reproduced exactly, exports byte-identical to the "
          "committed fixtures)")


def test_cli_train_writes_export(tmp_path, capsys):
    out = tmp_path / "model.json"
    code = main(["train", "--dataset", "redwine", "--model", "svm_r",
                 "--out", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["kind"] == "svm_regressor"
