"""Acceptance suite: one test per criterion, one printed line per criterion.

Run with `pytest tests/test_acceptance.py -v -s` to see the PASS lines as
they happen. Every tolerance is pinned here; nothing is deferred to later
calibration.
"""

import hashlib
import shutil
import time

import numpy as np
import pytest

import facecluster as fc
from facecluster.haar import classify_windows
from facecluster.haar.boosting import BoostingState, feature_value_matrix
from facecluster.imaging import integral_image
from facecluster.pipeline import (
    PipelineConfig,
    cmd_cluster,
    cmd_detect,
    cmd_train_cascade,
    cmd_train_mlp,
)
from facecluster.synth import (
    band_corpus,
    band_face_window,
    gaussian_blobs,
    separated_blob_centers,
)

from conftest import TRAIN_SEED


def report(criterion: int, ok: bool, detail: str) -> None:
    status = "PASS" if ok else "FAIL"
    print(f"\nACCEPTANCE {criterion:02d} {status}: {detail}")
    assert ok, f"criterion {criterion}: {detail}"


def test_criterion_01_integral_image_oracle():
    rng = np.random.default_rng(101)
    started = time.perf_counter()
    checked = 0
    exact = True
    while checked < 1000:
        h, w = rng.integers(4, 48, size=2)
        px = rng.integers(0, 256, size=(h, w)).astype(float)
        ii = fc.integral_image(fc.GrayImage(px))
        for _ in range(10):
            rw = int(rng.integers(1, w + 1))
            rh = int(rng.integers(1, h + 1))
            rx = int(rng.integers(0, w - rw + 1))
            ry = int(rng.integers(0, h - rh + 1))
            naive = 0.0
            for yy in range(ry, ry + rh):
                for xx in range(rx, rx + rw):
                    naive += px[yy, xx]
            exact &= fc.rect_sum(ii, fc.Rect(rx, ry, rw, rh)) == naive
            checked += 1
    elapsed = time.perf_counter() - started
    report(
        1,
        exact and elapsed < 5.0,
        f"{checked} random rects exact vs naive double loop in {elapsed:.2f}s (< 5s)",
    )


def test_criterion_02_haar_value_oracle():
    from facecluster.haar.features import scaled_regions

    rng = np.random.default_rng(102)
    feats = fc.enumerate_features(12, 1, 1)
    worst = 0.0
    for _ in range(1000):
        px = rng.integers(0, 256, size=(12, 12)).astype(float)
        ii = fc.integral_image(fc.GrayImage(px))
        f = feats[int(rng.integers(len(feats)))]
        window = fc.Rect(0, 0, 12, 12)
        fast = fc.haar_value(ii, f, window)
        dark, light = scaled_regions(f, window, 1.0)
        dark_sum = light_sum = 0.0
        dark_n = light_n = 0
        for x, y, w, h in dark:
            for yy in range(y, y + h):
                for xx in range(x, x + w):
                    dark_sum += px[yy, xx]
                    dark_n += 1
        for x, y, w, h in light:
            for yy in range(y, y + h):
                for xx in range(x, x + w):
                    light_sum += px[yy, xx]
                    light_n += 1
        slow = dark_sum / dark_n - light_sum / light_n
        worst = max(worst, abs(fast - slow))
    report(2, worst <= 1e-9, f"1000 feature responses, max |fast - naive| = {worst:.2e} (<= 1e-9)")


def test_criterion_03_adaboost_invariants():
    pos, neg = band_corpus(100, 100, seed=4)
    labels = np.array([1] * 100 + [0] * 100)
    feats = fc.enumerate_features(24, 3, 3)
    values = feature_value_matrix([integral_image(w) for w in pos + neg], feats)
    state = BoostingState(values, labels)
    weights_ok = True
    errors = []
    for _ in range(10):
        state.run_round()
        weights_ok &= abs(state.weights.sum() - 1.0) <= 1e-9
        half = 0.5 * sum(wc.alpha for _, wc in state.stumps)
        errors.append(float(np.mean((state.scores >= half).astype(int) != labels)))
    monotone = bool(np.all(np.diff(errors) <= 1e-12))
    report(
        3,
        weights_ok and monotone,
        f"weights summed to 1 every round; training error {errors[0]:.3f} -> "
        f"{errors[-1]:.3f} nonincreasing over 10 rounds",
    )


def test_criterion_04_cascade_training(feature_set, train_corpus, holdout_corpus):
    positives, negatives = train_corpus
    started = time.perf_counter()
    cascade = fc.train_cascade(
        positives, negatives, feature_set=feature_set, seed=TRAIN_SEED
    )
    elapsed = time.perf_counter() - started
    pos_h, neg_h = holdout_corpus
    det = float(classify_windows(cascade, pos_h).mean())
    fp = float(classify_windows(cascade, neg_h).mean())
    report(
        4,
        det >= 0.95 and fp <= 0.25 and elapsed < 600.0 and len(cascade.stages) >= 2,
        f"{len(cascade.stages)}-stage cascade in {elapsed:.1f}s (< 600s); held-out "
        f"detection {det:.3f} (>= 0.95), false-positive {fp:.3f} (<= 0.25)",
    )


def test_criterion_05_gram_trick_equivalence():
    from facecluster.pca import standardize

    rng = np.random.default_rng(105)
    eig_ok = resid_ok = 0
    for _ in range(20):
        n = int(rng.integers(5, 21))
        d = int(rng.integers(50, 201))
        X = rng.normal(0, 1, size=(n, d)) * rng.uniform(0.5, 2.0, size=d)
        gram = fc.fit_pca(X, 1.0, method="gram")
        direct = fc.fit_pca(X, 1.0, method="direct")
        r = min(gram.retained, direct.retained)
        eig_ok += bool(
            np.allclose(gram.eigenvalues[:r], direct.eigenvalues[:r], atol=1e-8, rtol=1e-8)
        )
        Z = standardize(X, direct.standardization)
        Zc = Z - Z.mean(axis=0)
        C = (Zc.T @ Zc) / n
        lam1 = max(1.0, float(direct.eigenvalues[0]))
        residual = max(
            float(np.linalg.norm(C @ gram.components[i] - gram.eigenvalues[i] * gram.components[i]))
            for i in range(gram.retained)
        )
        resid_ok += residual <= 1e-8 * lam1
    report(
        5,
        eig_ok == 20 and resid_ok == 20,
        f"gram vs direct eigenvalues agreed {eig_ok}/20; residuals within bound {resid_ok}/20",
    )


def test_criterion_06_pca_at_pipeline_scale():
    rng = np.random.default_rng(106)
    X = np.array(
        [fc.flatten(band_face_window(rng, template=i % 4, size=224)).values for i in range(112)]
    )
    started = time.perf_counter()
    model = fc.fit_pca(X, 0.9999)  # auto path must pick the Gram route
    elapsed = time.perf_counter() - started
    report(
        6,
        elapsed < 60.0 and model.n_features == 50176 and model.retained <= 111,
        f"112x50176 fit in {elapsed:.1f}s (< 60s) via the Gram path, "
        f"retained {model.retained} components",
    )


def partitions_into_k(n, k):
    def rec(i, labels, used):
        if i == n:
            if used == k:
                yield tuple(labels)
            return
        for c in range(min(used + 1, k)):
            labels.append(c)
            yield from rec(i + 1, labels, max(used, c + 1))
            labels.pop()

    yield from rec(0, [], 0)


def test_criterion_07_kmeans_small_instance_oracle():
    rng = np.random.default_rng(77)
    optimum_hits = 0
    monotone = 0
    for trial in range(30):
        n = int(rng.integers(6, 13))
        k = int(rng.integers(2, 4))
        X = rng.uniform(-5, 5, size=(n, 2))
        model = fc.kmeans_fit(X, k, seed=trial, restarts=16)
        best = np.inf
        for labels in partitions_into_k(n, k):
            lab = np.array(labels)
            sse = 0.0
            for c in range(k):
                members = X[lab == c]
                sse += float(((members - members.mean(axis=0)) ** 2).sum())
            best = min(best, sse)
        optimum_hits += abs(model.inertia - best) <= 1e-9 * max(1.0, best)
        monotone += bool(np.all(np.diff(model.sse_trace) <= 1e-9))
    report(
        7,
        optimum_hits >= 28 and monotone == 30,
        f"exhaustive-partition optimum matched {optimum_hits}/30 (>= 28); "
        f"SSE trace nonincreasing {monotone}/30",
    )


def test_criterion_08_silhouette_oracle():
    rng = np.random.default_rng(108)
    X = rng.normal(0, 1, size=(200, 3))
    labels = rng.integers(0, 5, size=200)
    reportd = fc.silhouette_report(X, labels)
    dist = np.sqrt(((X[:, None, :] - X[None, :, :]) ** 2).sum(axis=-1))
    worst = 0.0
    for i in range(200):
        own = labels[i]
        same = [dist[i, j] for j in range(200) if labels[j] == own and j != i]
        a = sum(same) / len(same) if same else 0.0
        b = min(
            sum(dist[i, j] for j in range(200) if labels[j] == c)
            / max(1, sum(1 for j in range(200) if labels[j] == c))
            for c in set(labels.tolist())
            if c != own
        )
        if not same:
            s = 0.0
        else:
            top = max(a, b)
            s = 0.0 if top == 0 else (b - a) / top
        worst = max(worst, abs(reportd.per_sample[i] - s))

    hand = fc.silhouette_sample(
        np.array([[0.0], [1.0], [10.0], [11.0]]), np.array([0, 0, 1, 1]), 0
    )
    hand_exact = hand == 9.5 / 10.5
    report(
        8,
        worst <= 1e-9 and hand_exact,
        f"200-sample brute-force match within {worst:.2e} (<= 1e-9); "
        f"hand case 9.5/10.5 reproduced exactly",
    )


def test_criterion_09_model_selection_logic():
    chose_four = 0
    criterion_held = 0
    for seed in range(100):
        centers = separated_blob_centers(4, 3, separation=20.0)
        X, _ = gaussian_blobs(20, centers, spread=1.0, seed=seed)
        selection = fc.select_k(X, 2, 8, seed=seed, restarts=10)
        chose_four += selection.chosen_k == 4
        chosen = next(c for c in selection.candidates if c.k == selection.chosen_k)
        criterion_held += chosen.all_above_overall
    report(
        9,
        chose_four >= 95 and criterion_held == 100,
        f"k=4 chosen in {chose_four}/100 (>= 95); cluster-above-average rule held on "
        f"the chosen k in {criterion_held}/100 runs",
    )


def test_criterion_10_elbow_monotonicity():
    all_monotone = True
    for seed in range(5):
        centers = separated_blob_centers(3, 2, separation=15.0)
        X, _ = gaussian_blobs(12, centers, spread=1.5, seed=seed)
        curve = fc.elbow_curve(X, 1, 10, seed=seed, restarts=5)
        sses = [s for _, s in curve.points]
        all_monotone &= bool(np.all(np.diff(sses) <= 1e-9))
        rng = np.random.default_rng(1000 + seed)
        Xr = rng.uniform(-3, 3, size=(30, 4))
        curve_r = fc.elbow_curve(Xr, 1, 10, seed=seed, restarts=5)
        sses_r = [s for _, s in curve_r.points]
        all_monotone &= bool(np.all(np.diff(sses_r) <= 1e-9))
    report(10, all_monotone, "SSE nonincreasing over k=1..10 for 10 datasets (warm start)")


def test_criterion_11_mlp_and_end_to_end(cascade, scene_dir, tmp_path):
    from facecluster.mlp import _forward_pass

    worst = 0.0
    rng = np.random.default_rng(111)
    for shape in ([5, 4, 3], [10, 8, 4]):
        for seed in range(20):
            model = fc.mlp_init(shape, seed=seed)
            x = rng.normal(0, 1, size=shape[0])
            _, pre = _forward_pass(model, x[None, :])
            z = pre[0][0]
            b0 = model.biases[0].copy()
            for j in range(len(z)):
                if abs(z[j]) < 1e-3:
                    b0[j] += 1e-3 * (1.0 if z[j] >= 0 else -1.0)
            model = fc.MlpModel(model.layer_sizes, model.weights, (b0,) + model.biases[1:], seed)
            worst = max(worst, fc.grad_check(model, x, int(rng.integers(shape[-1]))))

    scene_root, _ = scene_dir
    work = tmp_path / "e2e"
    work.mkdir()
    started = time.perf_counter()
    fc.save_cascade(cascade, work / "cascade.json")
    config = PipelineConfig(
        input_dir=str(scene_root), work_dir=str(work), pca_retention=8, seed=0
    )
    cmd_detect(config)
    cmd_cluster(config)
    summary = cmd_train_mlp(config)
    elapsed = time.perf_counter() - started
    report(
        11,
        worst < 1e-4 and summary["accuracy"] >= 0.95 and elapsed < 300.0,
        f"grad check worst {worst:.2e} (< 1e-4) over 40 runs; end-to-end held-out "
        f"accuracy {summary['accuracy']:.3f} (>= 0.95) in {elapsed:.0f}s (< 300s)",
    )


def _hash_artifacts(work):
    digests = {}
    for path in sorted(work.rglob("*")):
        if path.is_file():
            digests[path.relative_to(work).as_posix()] = hashlib.sha256(
                path.read_bytes()
            ).hexdigest()
    return digests


def test_criterion_12_full_pipeline_determinism(window_dirs, scene_dir, tmp_path):
    pos_dir, neg_dir = window_dirs
    scene_root, _ = scene_dir
    work = tmp_path / "run"

    def run_once():
        work.mkdir()
        config = PipelineConfig(
            input_dir=str(scene_root),
            work_dir=str(work),
            positives_dir=str(pos_dir),
            negatives_dir=str(neg_dir),
            pca_retention=8,
            seed=0,
        )
        cmd_train_cascade(config)
        cmd_detect(config)
        cmd_cluster(config)
        cmd_train_mlp(config)
        digests = _hash_artifacts(work)
        shutil.rmtree(work)
        return digests

    first = run_once()
    second = run_once()
    same = first == second
    kinds = {p.rsplit(".", 1)[-1] for p in first}
    report(
        12,
        same and len(first) > 100 and {"json", "csv", "svg", "png"} <= kinds,
        f"two identical-config runs produced byte-identical artifacts "
        f"({len(first)} files: manifests, CSVs, SVGs, models, montages)",
    )
