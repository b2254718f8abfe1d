"""Regenerate the committed dataset fixtures.

The sandbox this project is developed in has no route to the UCI archive,
so the repository ships deterministic synthetic stand-ins that mirror the
originals' shapes and label semantics: cardiotocography as an imbalanced
3-class problem over 21 features, the wines as integer quality scores
driven by a steep quasi-linear response over 11 features (steep enough
that 4-bit operand grids visibly wreck the regression, as the real data
does).  Regenerating with the same seed reproduces the files byte for
byte (gzip mtime pinned to zero).

Usage: python -m bespoke_trainer.make_data [--out DIR]
"""

from __future__ import annotations

import argparse
import gzip
import hashlib
import io
import json
from pathlib import Path

import numpy as np

from .datasets import _DATA_DIR

CARDIO_ROWS = 2126
REDWINE_ROWS = 1599
WHITEWINE_ROWS = 2000      # original has 4898; trimmed for desk-scale runs


def _write_csv_gz(path: Path, header: list[str], features: np.ndarray,
                  labels: np.ndarray) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row, label in zip(features, labels):
        cells = [f"{v:.5f}" for v in row]
        cells.append(f"{label:g}")
        buf.write(",".join(cells) + "\n")
    raw = buf.getvalue().encode()
    out = io.BytesIO()
    with gzip.GzipFile(filename="", mode="wb", fileobj=out, mtime=0) as gz:
        gz.write(raw)
    payload = out.getvalue()
    path.write_bytes(payload)
    return hashlib.sha256(payload).hexdigest()


def make_cardiotocography(seed: int = 2024) -> tuple:
    """Imbalanced 3-class problem: class-conditional feature shifts over a
    shared baseline, plus uninformative noise columns."""
    rng = np.random.default_rng(seed)
    n, d = CARDIO_ROWS, 21
    class_sizes = {1: 1655, 2: 295, 3: 176}
    scales = np.concatenate([
        rng.uniform(0.5, 4.0, 8),       # informative group A
        rng.uniform(10, 160, 7),        # informative group B (wide units)
        rng.uniform(0.5, 2.0, 6),       # noise columns
    ])
    shift_a = rng.normal(0.0, 1.0, (3, 8))
    shift_b = rng.normal(0.0, 0.9, (3, 7))
    xs, ys = [], []
    for cls, count in class_sizes.items():
        base = rng.normal(0.0, 1.0, (count, d))
        base[:, :8] = base[:, :8] * 0.85 + shift_a[cls - 1]
        base[:, 8:15] = base[:, 8:15] * 0.95 + shift_b[cls - 1]
        xs.append(base * scales)
        ys.append(np.full(count, cls, dtype=float))
    x = np.vstack(xs)
    y = np.concatenate(ys)
    order = rng.permutation(n)
    header = [f"f{i:02d}" for i in range(d)] + ["nsp"]
    return header, x[order], y[order]


def _wine(seed: int, rows: int, lo: int, hi: int, noise: float) -> tuple:
    """Quality = clipped rounded steep linear response + measurement noise.

    Steepness is the point: the response sweeps several quality steps
    across the feature range, so coarse operand grids shift predictions
    past rounding boundaries.
    """
    rng = np.random.default_rng(seed)
    d = 11
    x = np.column_stack([
        rng.beta(rng.uniform(1.5, 4), rng.uniform(1.5, 4), rows)
        for _ in range(d)
    ])
    x[:, 3] = 0.6 * x[:, 0] + 0.4 * x[:, 3]          # correlated columns
    x[:, 7] = 0.5 * x[:, 2] + 0.5 * x[:, 7]
    coef = rng.uniform(0.8, 1.9, d) * rng.choice([-1.0, 1.0], d)
    center = (lo + hi) / 2.0
    t = center + (x - 0.5) @ coef
    quality = np.clip(np.floor(t + rng.normal(0.0, noise, rows) + 0.5),
                      lo, hi)
    scales = rng.uniform(0.5, 30.0, d)
    offsets = rng.uniform(0.0, 8.0, d)
    header = [f"chem{i:02d}" for i in range(d)] + ["quality"]
    return header, x * scales + offsets, quality


def make_redwine(seed: int = 186):
    return _wine(seed, REDWINE_ROWS, lo=3, hi=8, noise=0.33)


def make_whitewine(seed: int = 4898):
    return _wine(seed, WHITEWINE_ROWS, lo=3, hi=9, noise=0.30)


GENERATORS = {
    "cardiotocography": make_cardiotocography,
    "redwine": make_redwine,
    "whitewine": make_whitewine,
}


def regenerate(out_dir: Path | None = None) -> dict:
    out_dir = Path(out_dir) if out_dir else _DATA_DIR
    out_dir.mkdir(parents=True, exist_ok=True)
    checksums = {}
    for name, gen in GENERATORS.items():
        header, x, y = gen()
        digest = _write_csv_gz(out_dir / f"{name}.csv.gz", header, x, y)
        checksums[f"{name}.csv.gz"] = digest
    (out_dir / "checksums.json").write_text(
        json.dumps(checksums, indent=2, sort_keys=True) + "\n")
    return checksums


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=None, help="output directory "
                    "(default: the package data directory)")
    args = ap.parse_args(argv)
    checksums = regenerate(args.out)
    for name, digest in sorted(checksums.items()):
        print(f"{digest}  {name}")


if __name__ == "__main__":
    main()
