#!/usr/bin/env python3
"""The whole pipeline, end to end, on a synthetic corpus.

Builds PNG corpora on disk, then runs the same command functions the CLI
exposes: train-cascade, detect, cluster, train-mlp, predict, report. Rerun
it and every artifact comes out byte-identical.

The equivalent shell session:

    facecluster train-cascade --positives-dir pos/ --negatives-dir neg/ --work-dir work/
    facecluster detect        --input-dir scenes/ --work-dir work/
    facecluster cluster       --work-dir work/ --pca-retention 8
    facecluster train-mlp     --work-dir work/
    facecluster predict       --work-dir work/ scenes/t0_scene000.png
    facecluster report        --work-dir work/
"""

import json
import shutil
from pathlib import Path

import numpy as np
from PIL import Image

from facecluster.pipeline import (
    PipelineConfig,
    cmd_cluster,
    cmd_detect,
    cmd_predict,
    cmd_report,
    cmd_train_cascade,
    cmd_train_mlp,
)
from facecluster.synth import band_corpus, scene_corpus

ROOT = Path(__file__).parent / "output" / "pipeline"
if ROOT.exists():
    shutil.rmtree(ROOT)


def save_png(img, path):
    path.parent.mkdir(parents=True, exist_ok=True)
    arr = np.clip(np.floor(img.pixels + 0.5), 0, 255).astype(np.uint8)
    Image.fromarray(arr, mode="L").save(path, format="PNG")


print("writing corpora...")
positives, negatives = band_corpus(100, 100, seed=11)
for i, w in enumerate(positives):
    save_png(w, ROOT / "pos" / f"p{i:03d}.png")
for i, w in enumerate(negatives):
    save_png(w, ROOT / "neg" / f"n{i:03d}.png")
scenes = scene_corpus(120, seed=21)
for i, (img, truth, template) in enumerate(scenes):
    save_png(img, ROOT / "scenes" / f"t{template}_scene{i:03d}.png")

config = PipelineConfig(
    input_dir=str(ROOT / "scenes"),
    work_dir=str(ROOT / "work"),
    positives_dir=str(ROOT / "pos"),
    negatives_dir=str(ROOT / "neg"),
    pca_retention=8,
    seed=0,
    verbose=True,
)

print("\n[1/4] train-cascade")
summary = cmd_train_cascade(config)
print(f"      {summary['stages']} stages -> {summary['cascade_path']}")

print("[2/4] detect")
summary = cmd_detect(config)
print(f"      {summary['detected']}/{summary['images']} faces extracted")

print("[3/4] cluster")
summary = cmd_cluster(config)
print(f"      chose k={summary['chosen_k']} "
      f"(knee suggestion {summary['knee_suggestion']}, "
      f"{summary['retained_components']} components retained)")

print("[4/4] train-mlp")
summary = cmd_train_mlp(config)
print(f"      held-out accuracy {summary['accuracy']:.3f}")

scene_path = sorted((ROOT / "scenes").iterdir())[0]
result, code = cmd_predict(config, scene_path)
print(f"\npredict {scene_path.name}: exit {code}")
print(f"  {json.dumps(result)}")

print("\nreport:")
print(cmd_report(config))
print(f"all artifacts live under {ROOT / 'work'}")
