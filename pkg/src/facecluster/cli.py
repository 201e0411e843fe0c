"""Command-line front end.

Subcommands: train-cascade, detect, cluster, train-mlp, predict, report.
Exit codes: 0 success, 1 validation/config error, 2 runtime/data error,
3 no face detected (predict only).
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .errors import ConfigError, FaceClusterError
from .pipeline import (
    EXIT_CONFIG,
    EXIT_OK,
    EXIT_RUNTIME,
    PipelineConfig,
    cmd_cluster,
    cmd_detect,
    cmd_predict,
    cmd_report,
    cmd_train_cascade,
    cmd_train_mlp,
    load_config,
)

_DEFAULTS = PipelineConfig()

_HELP = {
    "input_dir": "directory of photographs to scan",
    "work_dir": "directory for all pipeline artifacts",
    "positives_dir": "directory of face windows for cascade training",
    "negatives_dir": "directory of non-face windows for cascade training",
    "cascade_path": "cascade model file (default: <work_dir>/cascade.json)",
    "base_window": "cascade base window side in pixels",
    "feature_position_stride": "origin stride of the training feature lattice",
    "feature_size_stride": "size stride of the training feature lattice",
    "stage_detection_rate": "minimum per-stage detection rate on positives",
    "stage_max_false_positive": "maximum per-stage false-positive rate",
    "max_stages": "maximum cascade stages",
    "max_rounds_per_stage": "boosting round budget per stage",
    "variance_normalization": "normalize windows by their standard deviation",
    "scale_factor": "scan window growth factor per scale",
    "step_fraction": "scan step as a fraction of the window size",
    "min_neighbors": "minimum merged raw hits per detection",
    "iou_merge_threshold": "IoU at or above which raw hits merge",
    "emit_all_boxes": "also write every merged box to detections_all.csv",
    "pca_retention": "components to keep: a count or a variance fraction",
    "k_min": "smallest k to consider",
    "k_max": "largest k to consider",
    "restarts": "k-means restarts per fit",
    "seed": "master random seed",
    "mlp_hidden": "hidden layer width",
    "mlp_learning_rate": "gradient-descent step size",
    "mlp_epochs": "training epochs",
    "mlp_batch_size": "mini-batch size",
    "mlp_validation_fraction": "held-out fraction for evaluation",
    "jobs": "parallel workers for per-image work",
    "verbose": "progress notes on stderr",
}

_COMMAND_KEYS = {
    "train-cascade": [
        "positives_dir", "negatives_dir", "work_dir", "cascade_path", "base_window",
        "feature_position_stride", "feature_size_stride", "stage_detection_rate",
        "stage_max_false_positive", "max_stages", "max_rounds_per_stage",
        "variance_normalization",
    ],
    "detect": [
        "input_dir", "work_dir", "cascade_path", "scale_factor", "step_fraction",
        "min_neighbors", "iou_merge_threshold", "emit_all_boxes",
    ],
    "cluster": ["work_dir", "pca_retention", "k_min", "k_max", "restarts"],
    "train-mlp": [
        "work_dir", "mlp_hidden", "mlp_learning_rate", "mlp_epochs",
        "mlp_batch_size", "mlp_validation_fraction",
    ],
    "predict": [
        "work_dir", "cascade_path", "scale_factor", "step_fraction",
        "min_neighbors", "iou_merge_threshold",
    ],
    "report": ["work_dir"],
}


def _add_config_options(parser: argparse.ArgumentParser, keys) -> None:
    for key in keys:
        default = getattr(_DEFAULTS, key)
        flag = "--" + key.replace("_", "-")
        parser.add_argument(
            flag,
            dest=key,
            default=None,
            metavar="V",
            help=f"{_HELP[key]} (default: {default})",
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="facecluster",
        description="Face detection, PCA, k-means clustering, and cluster assignment.",
    )
    parser.add_argument("--version", action="version", version=f"facecluster {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    descriptions = {
        "train-cascade": "Train the Haar cascade from labeled window directories.",
        "detect": "Detect faces and save one 224x224 crop per image.",
        "cluster": "Reduce crops with PCA, choose k, cluster, and report.",
        "train-mlp": "Train the cluster-assignment MLP on PCA scores.",
        "predict": "Assign a single image to a discovered cluster.",
        "report": "Summarize the artifacts in a work directory.",
    }
    for command, keys in _COMMAND_KEYS.items():
        p = sub.add_parser(command, help=descriptions[command],
                           description=descriptions[command])
        p.add_argument("--config", metavar="FILE", default=None,
                       help="flat key = value config file; flags override it")
        p.add_argument("--seed", dest="seed", default=None, metavar="N",
                       help=f"{_HELP['seed']} (default: {_DEFAULTS.seed})")
        p.add_argument("--jobs", dest="jobs", default=None, metavar="N",
                       help=f"{_HELP['jobs']} (default: {_DEFAULTS.jobs})")
        p.add_argument("--verbose", dest="verbose", action="store_const", const="true",
                       default=None, help=_HELP["verbose"])
        _add_config_options(p, keys)
        if command == "predict":
            p.add_argument("image", help="path of the image to classify")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    overrides = {
        key: value
        for key, value in vars(args).items()
        if key in _HELP and value is not None
    }
    try:
        config = load_config(args.config, overrides)
        if args.command == "train-cascade":
            result = cmd_train_cascade(config)
            print(json.dumps(result["stage_reports"], indent=2))
        elif args.command == "detect":
            result = cmd_detect(config)
            print(json.dumps(result))
        elif args.command == "cluster":
            result = cmd_cluster(config)
            print(json.dumps(result))
        elif args.command == "train-mlp":
            result = cmd_train_mlp(config)
            print(json.dumps(result))
        elif args.command == "predict":
            result, code = cmd_predict(config, args.image)
            print(json.dumps(result))
            return code
        elif args.command == "report":
            print(cmd_report(config), end="")
        return EXIT_OK
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FaceClusterError, ValueError, ArithmeticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
