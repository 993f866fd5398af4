"""Threshold segmentation of possibility maps."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .dataio import BACKGROUND, MATCHED, PERFUSED, VENTILATED, PixelMap
from .errors import KindMismatch, ThresholdOutOfRange


@dataclass(frozen=True)
class SegmentationConfig:
    ventilation_threshold: float = 0.31
    perfusion_threshold: float = 0.28
    reference_threshold: float = 0.1

    def __post_init__(self):
        for name, t in asdict(self).items():
            _check_threshold(t, name)


def _check_threshold(t: float, name: str = "threshold") -> None:
    if not 0.0 <= t <= 1.0:
        raise ThresholdOutOfRange(f"{name}={t} outside [0, 1]")


def threshold_map(pm: PixelMap, t: float) -> PixelMap:
    """1 where value >= t, else 0."""
    _check_threshold(t)
    return PixelMap((pm.values >= t).astype(np.float64), "binary")


def union_mask(a: PixelMap, b: PixelMap) -> PixelMap:
    if a.kind != "binary" or b.kind != "binary":
        raise KindMismatch(f"union needs binary maps, got {a.kind} and {b.kind}")
    if a.shape != b.shape:
        raise KindMismatch(f"mask shapes differ: {a.shape} vs {b.shape}")
    return PixelMap((a.as_bool() | b.as_bool()).astype(np.float64), "binary")


def three_region_segment(vent: PixelMap, perf: PixelMap, cfg: SegmentationConfig = SegmentationConfig()) -> PixelMap:
    """Label each pixel matched / predominantly perfused / predominantly ventilated / background."""
    v = vent.values >= cfg.ventilation_threshold
    p = perf.values >= cfg.perfusion_threshold
    labels = np.full(v.shape, BACKGROUND, dtype=np.float64)
    labels[v & p] = MATCHED
    labels[p & ~v] = PERFUSED
    labels[v & ~p] = VENTILATED
    return PixelMap(labels, "region_label")
