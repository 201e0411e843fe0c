"""Pipeline commands: train the detector, detect faces, cluster, train the
assigner, predict.

Every command validates its configuration before touching the filesystem,
writes artifacts atomically, and emits a manifest with content hashes of its
inputs so a rerun with identical inputs can be byte-compared. Wall-clock
timings go to stderr (verbose mode) rather than into manifests, which must
be identical across reruns.
"""

from __future__ import annotations

import dataclasses
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from . import __version__
from .errors import ConfigError, DecodeError
from .haar import (
    ScanParams,
    detect,
    enumerate_features,
    extract_face,
    load_cascade,
    save_cascade,
    train_cascade,
)
from .imaging import FACE_SIZE, GrayImage, flatten, list_images, load_gray, resize_bilinear
from .ioutil import atomic_write_text, read_json, sha256_file, write_json
from .kmeans import assign_all, kmeans_fit, load_kmeans, save_kmeans
from .mlp import TrainConfig, forward, load_mlp, mlp_init, save_mlp
from .mlp import train as mlp_train
from .model_select import (
    elbow_csv,
    elbow_curve,
    select_k,
    silhouette_csv,
    silhouette_report,
    suggest_knee,
)
from .pca import explained_variance, fit_pca, load_pca, project, save_pca
from .svgplot import elbow_svg, silhouette_svg

MANIFEST_SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_NO_FACE = 3


@dataclass
class PipelineConfig:
    """Flat pipeline configuration; every field has a documented default."""

    input_dir: str = ""
    work_dir: str = ""
    positives_dir: str = ""
    negatives_dir: str = ""
    cascade_path: str = ""  # defaults to <work_dir>/cascade.json
    base_window: int = 24
    feature_position_stride: int = 2
    feature_size_stride: int = 2
    stage_detection_rate: float = 0.99
    stage_max_false_positive: float = 0.5
    max_stages: int = 8
    max_rounds_per_stage: int = 40
    variance_normalization: bool = False
    scale_factor: float = 1.25
    step_fraction: float = 1.0 / 12.0
    min_neighbors: int = 3
    iou_merge_threshold: float = 0.3
    emit_all_boxes: bool = False
    pca_retention: float = 0.9999  # int keeps a count, float a variance fraction
    k_min: int = 2
    k_max: int = 8
    restarts: int = 10
    seed: int = 0
    mlp_hidden: int = 64
    mlp_learning_rate: float = 0.01
    mlp_epochs: int = 200
    mlp_batch_size: int = 16
    mlp_validation_fraction: float = 0.2
    jobs: int = 1
    verbose: bool = False

    def resolved_cascade_path(self) -> Path:
        if self.cascade_path:
            return Path(self.cascade_path)
        return Path(self.work_dir) / "cascade.json"

    def scan_params(self) -> ScanParams:
        return ScanParams(
            scale_factor=self.scale_factor,
            step_fraction=self.step_fraction,
            min_neighbors=self.min_neighbors,
            iou_merge_threshold=self.iou_merge_threshold,
        )


_CONFIG_FIELDS = {f.name: f for f in dataclasses.fields(PipelineConfig)}


def _parse_value(name: str, raw: str):
    f = _CONFIG_FIELDS.get(name)
    if f is None:
        raise ConfigError(f"unknown config key {name!r}")
    raw = raw.strip()
    if name == "pca_retention":
        try:
            return int(raw) if _looks_int(raw) else float(raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {name}: {raw!r}") from exc
    if f.type in ("int", int):
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"bad integer for {name}: {raw!r}") from exc
    if f.type in ("float", float):
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"bad number for {name}: {raw!r}") from exc
    if f.type in ("bool", bool):
        lowered = raw.lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"bad boolean for {name}: {raw!r}")
    return raw


def _looks_int(raw: str) -> bool:
    try:
        int(raw)
        return True
    except ValueError:
        return False


def load_config(path=None, overrides=None) -> PipelineConfig:
    """Config file of `key = value` lines plus override pairs."""
    values = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        for lineno, line in enumerate(path.read_text().splitlines(), start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, _, raw = stripped.partition("=")
            key = key.strip()
            values[key] = _parse_value(key, raw)
    for key, raw in (overrides or {}).items():
        if raw is None:
            continue
        values[key] = _parse_value(key, raw) if isinstance(raw, str) else raw
    return PipelineConfig(**values)


def _require_dir(path: str, what: str) -> Path:
    if not path:
        raise ConfigError(f"{what} is required")
    p = Path(path)
    if not p.is_dir():
        raise ConfigError(f"{what} does not exist: {p}")
    return p


def _require_file(path: Path, what: str) -> Path:
    if not path.is_file():
        raise ConfigError(f"{what} not found: {path}")
    return path


def _work_dir(config: PipelineConfig) -> Path:
    if not config.work_dir:
        raise ConfigError("work_dir is required")
    return Path(config.work_dir)


def _note(config: PipelineConfig, message: str) -> None:
    if config.verbose:
        print(message, file=sys.stderr)


def _hash_inputs(base: Path, paths) -> dict:
    hashes = {}
    for p in paths:
        try:
            key = p.relative_to(base).as_posix()
        except ValueError:
            key = str(p)
        hashes[key] = sha256_file(p)
    return dict(sorted(hashes.items()))


def _write_manifest(config: PipelineConfig, command: str, inputs: dict, outputs: list) -> Path:
    work = _work_dir(config)
    manifest = {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "tool_version": __version__,
        "command": command,
        "config": dataclasses.asdict(config),
        "seed": config.seed,
        "inputs": inputs,
        "outputs": sorted(outputs),
    }
    path = work / f"manifest-{command}.json"
    write_json(path, manifest)
    return path


def _face_name(rel_posix: str) -> str:
    stem = rel_posix.replace("/", "__")
    for suffix in (".png", ".jpg", ".jpeg", ".PNG", ".JPG", ".JPEG"):
        if stem.endswith(suffix):
            stem = stem[: -len(suffix)]
            break
    return stem + ".png"


def _save_gray_png(img: GrayImage, path: Path) -> None:
    arr = np.clip(np.floor(img.pixels + 0.5), 0, 255).astype(np.uint8)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    Image.fromarray(arr, mode="L").save(tmp, format="PNG")
    tmp.replace(path)


def _load_window_dir(directory: Path, base_window: int) -> list[GrayImage]:
    windows = []
    for p in list_images(directory):
        img = load_gray(p)
        if img.width != base_window or img.height != base_window:
            img = resize_bilinear(img, base_window, base_window)
        windows.append(img)
    return windows


def cmd_train_cascade(config: PipelineConfig) -> dict:
    """Train the face cascade from labeled window directories."""
    pos_dir = _require_dir(config.positives_dir, "positives_dir")
    neg_dir = _require_dir(config.negatives_dir, "negatives_dir")
    work = _work_dir(config)
    pos_paths = list_images(pos_dir)
    neg_paths = list_images(neg_dir)
    if not pos_paths:
        raise ConfigError(f"positives_dir has no images: {pos_dir}")
    if not neg_paths:
        raise ConfigError(f"negatives_dir has no images: {neg_dir}")

    started = time.perf_counter()
    positives = _load_window_dir(pos_dir, config.base_window)
    negatives = _load_window_dir(neg_dir, config.base_window)
    features = enumerate_features(
        config.base_window,
        position_stride=config.feature_position_stride,
        size_stride=config.feature_size_stride,
    )
    cascade = train_cascade(
        positives,
        negatives,
        detection_rate=config.stage_detection_rate,
        max_false_positive=config.stage_max_false_positive,
        max_stages=config.max_stages,
        max_rounds_per_stage=config.max_rounds_per_stage,
        feature_set=features,
        base_window=config.base_window,
        variance_normalization=config.variance_normalization,
        seed=config.seed,
    )
    cascade_path = config.resolved_cascade_path()
    save_cascade(cascade, cascade_path)
    report_path = work / "cascade_training_report.json"
    write_json(report_path, cascade.training_metadata)

    inputs = _hash_inputs(pos_dir, pos_paths)
    inputs.update(_hash_inputs(neg_dir, neg_paths))
    outputs = [cascade_path.name, report_path.name]
    _write_manifest(config, "train-cascade", dict(sorted(inputs.items())), outputs)
    _note(config, f"train-cascade: {len(cascade.stages)} stages "
                  f"in {time.perf_counter() - started:.1f}s")
    return {
        "cascade_path": str(cascade_path),
        "stages": len(cascade.stages),
        "stage_reports": cascade.training_metadata["stages"],
    }


def _detect_one(cascade, params, path: Path):
    img = load_gray(path)
    detections = detect(cascade, img, params)
    face = extract_face(img, detections)
    return img, detections, face


def cmd_detect(config: PipelineConfig) -> dict:
    """Detect faces in every input image and save one 224x224 crop per hit."""
    input_dir = _require_dir(config.input_dir, "input_dir")
    work = _work_dir(config)
    cascade_path = _require_file(config.resolved_cascade_path(), "cascade file")
    params = config.scan_params()  # validates scan fields
    paths = list_images(input_dir)
    if not paths:
        raise ConfigError(f"input_dir has no images: {input_dir}")

    cascade = load_cascade(cascade_path)
    started = time.perf_counter()

    def worker(path: Path):
        try:
            return _detect_one(cascade, params, path)
        except DecodeError as exc:
            return exc

    if config.jobs > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(worker, paths))
    else:
        results = [worker(p) for p in paths]

    faces_dir = work / "faces"
    rows = ["path,x,y,w,h,score,neighbors"]
    all_rows = ["path,x,y,w,h,score,neighbors"]
    outputs = ["detections.csv"]
    warnings = 0
    detected = 0
    for path, result in zip(paths, results):
        rel = path.relative_to(input_dir).as_posix()
        if isinstance(result, DecodeError):
            warnings += 1
            print(f"warning: {result}", file=sys.stderr)
            rows.append(f"{rel},,,,,,")
            continue
        img, detections, face = result
        if face is None or not detections:
            rows.append(f"{rel},,,,,,")
            continue
        best = max(detections, key=lambda d: (d.box.area, d.score, -d.box.x, -d.box.y))
        b = best.box
        rows.append(f"{rel},{b.x},{b.y},{b.w},{b.h},{best.score!r},{best.neighbors}")
        if config.emit_all_boxes:
            for d in detections:
                all_rows.append(
                    f"{rel},{d.box.x},{d.box.y},{d.box.w},{d.box.h},"
                    f"{d.score!r},{d.neighbors}"
                )
        face_path = faces_dir / _face_name(rel)
        _save_gray_png(face, face_path)
        outputs.append(f"faces/{face_path.name}")
        detected += 1

    atomic_write_text(work / "detections.csv", "\n".join(rows) + "\n")
    if config.emit_all_boxes:
        atomic_write_text(work / "detections_all.csv", "\n".join(all_rows) + "\n")
        outputs.append("detections_all.csv")

    inputs = _hash_inputs(input_dir, paths)
    inputs["cascade.json"] = sha256_file(cascade_path)
    _write_manifest(config, "detect", dict(sorted(inputs.items())), outputs)
    _note(config, f"detect: {detected}/{len(paths)} faces "
                  f"in {time.perf_counter() - started:.1f}s")
    return {"images": len(paths), "detected": detected, "warnings": warnings}


def _load_faces(work: Path) -> tuple[list[str], np.ndarray]:
    faces_dir = work / "faces"
    if not faces_dir.is_dir():
        raise ConfigError(f"faces directory not found (run detect first): {faces_dir}")
    paths = list_images(faces_dir)
    if not paths:
        raise ConfigError(f"faces directory is empty: {faces_dir}")
    vectors = []
    names = []
    for p in paths:
        img = load_gray(p)
        if img.width != FACE_SIZE or img.height != FACE_SIZE:
            img = resize_bilinear(img, FACE_SIZE, FACE_SIZE)
        names.append(f"faces/{p.name}")
        vectors.append(flatten(img, provenance=p.name).values)
    return names, np.array(vectors)


def cmd_cluster(config: PipelineConfig) -> dict:
    """PCA, k selection, final clustering, and all cluster reports."""
    work = _work_dir(config)
    if config.k_min < 2:
        raise ConfigError(f"k_min must be >= 2, got {config.k_min}")
    if config.k_max < config.k_min:
        raise ConfigError(f"k_max must be >= k_min, got {config.k_max}")
    names, X = _load_faces(work)
    n = len(names)
    if n < config.k_min:
        raise ConfigError(f"{n} faces but k_min={config.k_min}")
    k_max = min(config.k_max, n)

    started = time.perf_counter()
    pca_model = fit_pca(X, config.pca_retention)
    scores = project(pca_model, X)

    selection = select_k(scores, config.k_min, k_max, seed=config.seed,
                         restarts=config.restarts)
    model = kmeans_fit(scores, selection.chosen_k, seed=config.seed + selection.chosen_k,
                       restarts=config.restarts)
    assignment = assign_all(model, scores)
    report = silhouette_report(scores, assignment.labels)
    curve = elbow_curve(scores, 1, k_max, seed=config.seed, restarts=config.restarts)
    knee = suggest_knee(curve) if len(curve.points) >= 3 else None

    save_pca(pca_model, work / "pca_model.json")
    save_kmeans(model, work / "kmeans_model.json")
    write_json(
        work / "selection.json",
        {
            "chosen_k": selection.chosen_k,
            "knee_suggestion": knee,
            "candidates": [dataclasses.asdict(c) for c in selection.candidates],
            "rationale": list(selection.rationale),
        },
    )
    assign_rows = ["path,cluster,silhouette"]
    for name, label, s in zip(names, assignment.labels, report.per_sample):
        assign_rows.append(f"{name},{int(label)},{float(s)!r}")
    atomic_write_text(work / "assignments.csv", "\n".join(assign_rows) + "\n")
    ev_rows = ["component,fraction,cumulative"]
    for idx, frac, cum in explained_variance(pca_model):
        ev_rows.append(f"{idx},{frac!r},{cum!r}")
    atomic_write_text(work / "pca_explained.csv", "\n".join(ev_rows) + "\n")
    atomic_write_text(work / "elbow.csv", elbow_csv(curve))
    atomic_write_text(work / "elbow.svg", elbow_svg(curve, knee))
    atomic_write_text(
        work / "silhouette.csv", silhouette_csv(report, assignment.labels, names)
    )
    atomic_write_text(work / "silhouette.svg", silhouette_svg(report, assignment.labels))

    montage_paths = _write_montages(work, names, assignment.labels, model.k)

    outputs = [
        "pca_model.json",
        "kmeans_model.json",
        "selection.json",
        "assignments.csv",
        "pca_explained.csv",
        "elbow.csv",
        "elbow.svg",
        "silhouette.csv",
        "silhouette.svg",
    ] + montage_paths
    inputs = _hash_inputs(work, [work / n for n in names])
    _write_manifest(config, "cluster", inputs, outputs)
    _note(config, f"cluster: k={selection.chosen_k} over {n} faces "
                  f"in {time.perf_counter() - started:.1f}s")
    return {
        "faces": n,
        "chosen_k": selection.chosen_k,
        "knee_suggestion": knee,
        "retained_components": pca_model.retained,
        "overall_silhouette": report.overall_mean,
    }


def _write_montages(work: Path, names, labels, k: int, thumb: int = 112) -> list[str]:
    montage_dir = work / "montages"
    produced = []
    for c in range(k):
        members = [n for n, lab in zip(names, labels) if lab == c]
        cols = max(1, math.ceil(math.sqrt(len(members))))
        rows = max(1, math.ceil(len(members) / cols))
        gap = 2
        sheet = np.full(
            (rows * thumb + (rows + 1) * gap, cols * thumb + (cols + 1) * gap),
            255,
            dtype=np.uint8,
        )
        for i, name in enumerate(members):
            img = load_gray(work / name)
            small = resize_bilinear(img, thumb, thumb)
            arr = np.clip(np.floor(small.pixels + 0.5), 0, 255).astype(np.uint8)
            r, ccol = divmod(i, cols)
            y = gap + r * (thumb + gap)
            x = gap + ccol * (thumb + gap)
            sheet[y : y + thumb, x : x + thumb] = arr
        path = montage_dir / f"cluster_{c}.png"
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + ".tmp")
        Image.fromarray(sheet, mode="L").save(tmp, format="PNG")
        tmp.replace(path)
        produced.append(f"montages/{path.name}")
    return produced


def cmd_train_mlp(config: PipelineConfig) -> dict:
    """Train the cluster assigner on PCA scores labeled by k-means."""
    work = _work_dir(config)
    pca_path = _require_file(work / "pca_model.json", "pca model")
    kmeans_path = _require_file(work / "kmeans_model.json", "kmeans model")
    assignments_path = _require_file(work / "assignments.csv", "assignments")

    pca_model = load_pca(pca_path)
    kmeans_model = load_kmeans(kmeans_path)
    lines = assignments_path.read_text().splitlines()[1:]
    names = []
    labels = []
    for line in lines:
        name, label, _ = line.split(",")
        names.append(name)
        labels.append(int(label))
    labels = np.array(labels, dtype=np.int64)

    started = time.perf_counter()
    vectors = []
    for name in names:
        img = load_gray(work / name)
        vectors.append(flatten(img).values)
    scores = project(pca_model, np.array(vectors))

    model = mlp_init(
        [pca_model.retained, config.mlp_hidden, kmeans_model.k], seed=config.seed
    )
    trained, metrics = mlp_train(
        model,
        scores,
        labels,
        TrainConfig(
            learning_rate=config.mlp_learning_rate,
            epochs=config.mlp_epochs,
            batch_size=config.mlp_batch_size,
            validation_fraction=config.mlp_validation_fraction,
            seed=config.seed,
        ),
    )
    save_mlp(trained, work / "mlp_model.json")
    write_json(
        work / "mlp_metrics.json",
        {
            "accuracy": metrics.accuracy,
            "confusion": metrics.confusion,
            "classes": kmeans_model.k,
            "held_out_samples": int(metrics.confusion.sum()),
        },
    )
    loss_rows = ["epoch,loss"] + [
        f"{i + 1},{v!r}" for i, v in enumerate(metrics.loss_history)
    ]
    atomic_write_text(work / "mlp_loss.csv", "\n".join(loss_rows) + "\n")

    inputs = {
        "pca_model.json": sha256_file(pca_path),
        "kmeans_model.json": sha256_file(kmeans_path),
        "assignments.csv": sha256_file(assignments_path),
    }
    outputs = ["mlp_model.json", "mlp_metrics.json", "mlp_loss.csv"]
    _write_manifest(config, "train-mlp", inputs, outputs)
    _note(config, f"train-mlp: accuracy {metrics.accuracy:.3f} "
                  f"in {time.perf_counter() - started:.1f}s")
    return {"accuracy": metrics.accuracy, "epochs": config.mlp_epochs}


def cmd_predict(config: PipelineConfig, image_path) -> tuple[dict, int]:
    """Assign one image to a cluster; returns (result json dict, exit code)."""
    work = _work_dir(config)
    cascade_path = _require_file(config.resolved_cascade_path(), "cascade file")
    pca_path = _require_file(work / "pca_model.json", "pca model")
    mlp_path = _require_file(work / "mlp_model.json", "mlp model")
    image_path = Path(image_path)
    if not image_path.is_file():
        raise ConfigError(f"image not found: {image_path}")

    cascade = load_cascade(cascade_path)
    pca_model = load_pca(pca_path)
    mlp_model = load_mlp(mlp_path)
    params = config.scan_params()

    img = load_gray(image_path)
    detections = detect(cascade, img, params)
    face = extract_face(img, detections)
    if face is None:
        return {"face": False, "reason": "no face detected"}, EXIT_NO_FACE

    vec = flatten(face).values
    score = project(pca_model, vec)
    probs = forward(mlp_model, score)
    cluster = int(np.argmax(probs))
    best = max(detections, key=lambda d: (d.box.area, d.score, -d.box.x, -d.box.y))
    result = {
        "face": True,
        "cluster": cluster,
        "probabilities": [float(p) for p in probs],
        "box": {"x": best.box.x, "y": best.box.y, "w": best.box.w, "h": best.box.h},
    }
    return result, EXIT_OK


def cmd_report(config: PipelineConfig) -> str:
    """Human-readable summary of everything the pipeline produced so far."""
    work = _work_dir(config)
    if not work.is_dir():
        raise ConfigError(f"work_dir does not exist: {work}")
    lines = [f"facecluster {__version__} report for {work}", ""]
    for name in sorted(p.name for p in work.glob("manifest-*.json")):
        doc = read_json(work / name)
        lines.append(f"[{doc['command']}]")
        lines.append(f"  inputs: {len(doc['inputs'])} hashed files")
        lines.append(f"  outputs: {', '.join(doc['outputs'])}")
    selection = work / "selection.json"
    if selection.is_file():
        doc = read_json(selection)
        lines.append("")
        lines.append(f"chosen k: {doc['chosen_k']} (knee suggestion: {doc['knee_suggestion']})")
        for line in doc["rationale"]:
            lines.append(f"  {line}")
    metrics = work / "mlp_metrics.json"
    if metrics.is_file():
        doc = read_json(metrics)
        lines.append("")
        lines.append(f"mlp held-out accuracy: {doc['accuracy']}")
    if len(lines) == 2:
        lines.append("(no artifacts found)")
    return "\n".join(lines) + "\n"
