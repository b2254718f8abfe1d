"""Command line interface: bespoke-train."""

from __future__ import annotations

import argparse
import sys

from .datasets import DATASETS
from .export import export
from .training import MODEL_KINDS, TrainSpec, train

# dataset -> model kinds frozen as repository fixtures
FIXTURE_PLAN = [
    ("cardiotocography", "mlp_c"),
    ("cardiotocography", "svm_c"),
    ("redwine", "mlp_r"),
    ("redwine", "svm_r"),
    ("whitewine", "mlp_r"),
    ("whitewine", "svm_r"),
]

DEFAULT_SEED = 7


def main(argv=None):
    ap = argparse.ArgumentParser(
        prog="bespoke-train",
        description="Train MLP/SVM reference models and export them in the "
                    "bespoke toolkit interchange format.")
    sub = ap.add_subparsers(dest="command", required=True)

    tr = sub.add_parser("train", help="train one model and export it")
    tr.add_argument("--dataset", required=True, choices=DATASETS)
    tr.add_argument("--model", required=True, choices=MODEL_KINDS)
    tr.add_argument("--seed", type=int, default=DEFAULT_SEED)
    tr.add_argument("--iterations", type=int, default=8,
                    help="randomized search iterations")
    tr.add_argument("--out", required=True, help="output JSON path")

    fx = sub.add_parser("make-fixtures",
                        help="train and export the six committed models")
    fx.add_argument("--out-dir", required=True)
    fx.add_argument("--seed", type=int, default=DEFAULT_SEED)

    args = ap.parse_args(argv)
    if args.command == "train":
        spec = TrainSpec(dataset=args.dataset, model=args.model,
                         seed=args.seed, search_iterations=args.iterations)
        trained = train(spec)
        path = export(trained, args.out)
        print(f"{spec.dataset}/{spec.model}: accuracy "
              f"{trained.accuracy:.4f} -> {path}", file=sys.stderr)
        return 0

    for dataset, model in FIXTURE_PLAN:
        spec = TrainSpec(dataset=dataset, model=model, seed=args.seed)
        trained = train(spec)
        path = export(trained,
                      f"{args.out_dir}/{dataset}_{model}.json")
        print(f"{dataset}/{model}: accuracy {trained.accuracy:.4f} "
              f"-> {path}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
