#!/usr/bin/env python3
"""Choosing the cluster count: elbow curve, silhouettes, and the selection rule.

The elbow curve always decreases (each k warm-starts from the previous best
centroids plus the farthest point), so the knee is suggested by the point
farthest from the endpoint chord. The decision, though, follows silhouettes:
keep k where every cluster's blade reaches past the dataset average, then
prefer the higher overall mean and the more balanced sizes.
"""

from pathlib import Path

import numpy as np

import facecluster as fc
from facecluster.model_select import elbow_csv, silhouette_csv
from facecluster.svgplot import elbow_svg, silhouette_svg
from facecluster.synth import gaussian_blobs, separated_blob_centers

OUT = Path(__file__).parent / "output" / "model_select"
OUT.mkdir(parents=True, exist_ok=True)

centers = separated_blob_centers(4, 3, separation=20.0)
X, truth = gaussian_blobs(25, centers, spread=1.0, seed=42)
print(f"dataset: {X.shape[0]} points in {X.shape[1]}-d, 4 well-separated blobs")

curve = fc.elbow_curve(X, 1, 9, seed=42, restarts=10)
print("\nelbow curve (k, SSE):")
for k, sse in curve.points:
    print(f"  k={k}: {sse:10.1f}")
knee = fc.suggest_knee(curve)
print(f"knee suggestion (max chord distance): k={knee}")

selection = fc.select_k(X, 2, 9, seed=42, restarts=10)
print(f"\nsilhouette selection: k={selection.chosen_k}")
for line in selection.rationale:
    print(f"  {line}")
print("\nper-k candidates:")
for c in selection.candidates:
    flag = "yes" if c.all_above_overall else "no "
    print(
        f"  k={c.k}: overall {c.overall_mean:.3f}, all clusters reach average: {flag}, "
        f"size imbalance {c.size_imbalance:.2f}"
    )

model = fc.kmeans_fit(X, selection.chosen_k, seed=42 + selection.chosen_k, restarts=10)
assignment = fc.assign_all(model, X)
report = fc.silhouette_report(X, assignment.labels)
agreement = np.mean([
    np.bincount(truth[assignment.labels == c]).max()
    for c in range(model.k)
]) * model.k / len(X)
print(f"\nfinal clustering: SSE {model.inertia:.1f}, purity vs ground truth {agreement:.2f}")

(OUT / "elbow.csv").write_text(elbow_csv(curve))
(OUT / "elbow.svg").write_text(elbow_svg(curve, knee))
(OUT / "silhouette.csv").write_text(silhouette_csv(report, assignment.labels))
(OUT / "silhouette.svg").write_text(silhouette_svg(report, assignment.labels))
print(f"plots and tables written to {OUT}")
