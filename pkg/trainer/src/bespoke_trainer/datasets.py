"""Dataset acquisition, caching and preparation.

Three tabular datasets are used: cardiotocography (3-class fetal-state
classification, 21 features), and the red/white wine quality scores (11
physico-chemical features, integer quality labels).  A fetch helper pulls
the originals from the UCI repository when the network allows; offline runs
fall back to the compressed fixtures committed under ``data/`` (checksum
verified).  The committed fixtures are deterministic synthetic stand-ins
with the originals' shapes and label semantics, regenerable with
``python -m bespoke_trainer.make_data``.

Preparation: a seeded 70/30 split, then min-max normalization to [0, 1]
fitted on the training split only.
"""

from __future__ import annotations

import csv
import gzip
import hashlib
import io
import json
import os
import urllib.request
from dataclasses import dataclass
from pathlib import Path

import numpy as np

DATASETS = ("cardiotocography", "redwine", "whitewine")

CACHE_ENV_VAR = "BESPOKE_DATASET_CACHE"

UCI_URLS = {
    "cardiotocography":
        "https://archive.ics.uci.edu/static/public/193/cardiotocography.zip",
    "redwine":
        "https://archive.ics.uci.edu/static/public/186/wine+quality.zip",
    "whitewine":
        "https://archive.ics.uci.edu/static/public/186/wine+quality.zip",
}

_DATA_DIR = Path(__file__).parent / "data"


class DatasetError(Exception):
    pass


def _sha256(payload: bytes) -> str:
    return hashlib.sha256(payload).hexdigest()


def _checksums() -> dict:
    manifest = _DATA_DIR / "checksums.json"
    if manifest.exists():
        return json.loads(manifest.read_text())
    return {}


def dataset_path(name: str) -> Path:
    """Resolve the cached CSV for `name`: $BESPOKE_DATASET_CACHE first,
    then the fixtures shipped with the package."""
    if name not in DATASETS:
        raise DatasetError(f"unknown dataset {name!r}")
    fname = f"{name}.csv.gz"
    cache = os.environ.get(CACHE_ENV_VAR)
    if cache and (Path(cache) / fname).exists():
        return Path(cache) / fname
    return _DATA_DIR / fname


def fetch_dataset(name: str, dest_dir: Path, timeout: float = 30.0) -> Path:
    """Download the original from the UCI repository (network required)."""
    url = UCI_URLS[name]
    dest_dir = Path(dest_dir)
    dest_dir.mkdir(parents=True, exist_ok=True)
    out = dest_dir / (name + ".download")
    with urllib.request.urlopen(url, timeout=timeout) as resp:
        out.write_bytes(resp.read())
    return out


def load_dataset(name: str) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """(features, labels, feature_names) from the cached CSV; checksum
    verified against the committed manifest."""
    path = dataset_path(name)
    if not path.exists():
        raise DatasetError(
            f"dataset file {path} missing; fetch it or restore the fixture")
    payload = path.read_bytes()
    expected = _checksums().get(path.name)
    if expected and _sha256(payload) != expected:
        raise DatasetError(f"checksum mismatch for {path.name}")
    with gzip.open(io.BytesIO(payload), "rt") as f:
        rows = list(csv.reader(f))
    header, body = rows[0], rows[1:]
    features = np.array([[float(v) for v in r[:-1]] for r in body])
    labels = np.array([float(r[-1]) for r in body])
    return features, labels, header[:-1]


@dataclass
class PreparedDataset:
    name: str
    train_x: np.ndarray        # normalized to [0,1] on the train split
    train_y: np.ndarray
    test_x: np.ndarray
    test_y: np.ndarray
    feature_min: np.ndarray
    feature_max: np.ndarray
    feature_names: list[str]
    seed: int


def prepare_dataset(name: str, seed: int = 0,
                    split_ratio: float = 0.7) -> PreparedDataset:
    if not (0.0 < split_ratio < 1.0):
        raise ValueError("split_ratio must be in (0, 1)")
    features, labels, names = load_dataset(name)
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(labels))
    n_train = int(round(split_ratio * len(labels)))
    train_idx, test_idx = order[:n_train], order[n_train:]

    fmin = features[train_idx].min(axis=0)
    fmax = features[train_idx].max(axis=0)
    span = np.where(fmax > fmin, fmax - fmin, 1.0)

    def norm(x):
        return (x - fmin) / span

    return PreparedDataset(
        name=name,
        train_x=norm(features[train_idx]),
        train_y=labels[train_idx],
        test_x=norm(features[test_idx]),
        test_y=labels[test_idx],
        feature_min=fmin,
        feature_max=fmax,
        feature_names=names,
        seed=seed)
