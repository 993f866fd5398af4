"""Generate the seeded phantom, run the full pipeline and summarise the result.

    python3 scripts/run_phantom_experiment.py --out runs/phantom

Writes the phantom under <out>/data and the pipeline outputs under
<out>/results, then prints AUC, timings and heart-subtraction statistics.
"""

import argparse
import time
from pathlib import Path

import numpy as np

from eitmap.cli import main as eitmap
from eitmap.dataio import read_pixel_map
from eitmap.evaluation import read_roc_csv
from eitmap.segmentation import SegmentationConfig


def summarise(data: Path, results: Path) -> None:
    roc = read_roc_csv(results / "roc.csv")
    print(f"AUC {roc.auc:.4f}")
    print("threshold  sensitivity  specificity")
    for t, se, sp in roc.points:
        print(f"{t:9.2f}  {se:11.3f}  {sp:11.3f}")

    heart = read_pixel_map(results / "median_heart_possibility.csv", "possibility").values
    truth = read_pixel_map(data / "truth_heart.csv", "binary").as_bool()
    perf = read_pixel_map(results / "median_perfusion_possibility.csv", "possibility").values
    vent = read_pixel_map(results / "median_ventilation_possibility.csv", "possibility").values
    top = heart >= np.quantile(heart, 0.9)
    seg = SegmentationConfig()
    print(f"top-decile heart pixels: {top.sum()}, inside heart mask: {(top & truth).sum()}")
    print(f"max perfusion possibility there: {perf[top].max():.3f} (threshold {seg.perfusion_threshold})")
    print(f"max ventilation possibility there: {vent[top].max():.3f} (threshold {seg.ventilation_threshold})")

    labels = read_pixel_map(results / "segmented.csv", "region_label").values
    names = ["background", "matched", "predominantly perfused", "predominantly ventilated"]
    print("segmented regions: " + ", ".join(f"{n} {int((labels == k).sum())}" for k, n in enumerate(names)))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/phantom")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--noise-sigma", type=float, default=None, help="default: phantom config value")
    ap.add_argument("--acquisitions", type=int, default=7)
    args = ap.parse_args()

    out = Path(args.out)
    data, results = out / "data", out / "results"
    cmd = ["phantom", "--out", str(data), "--seed", str(args.seed), "--acquisitions", str(args.acquisitions)]
    if args.noise_sigma is not None:
        cmd += ["--noise-sigma", str(args.noise_sigma)]

    t0 = time.perf_counter()
    if eitmap(cmd) != 0:
        raise SystemExit("phantom generation failed")
    t1 = time.perf_counter()
    if eitmap(["pipeline", "--config", str(data / "pipeline.json"), "--out", str(results)]) != 0:
        raise SystemExit("pipeline failed")
    t2 = time.perf_counter()
    print(f"phantom {t1 - t0:.1f}s, pipeline {t2 - t1:.1f}s")
    summarise(data, results)


if __name__ == "__main__":
    main()
