"""Per-pixel antecedent variables for the fuzzy models."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataio import GRID, PixelMap
from .errors import KindMismatch, NegativeInput
from .gating import MeanCycle


@dataclass(frozen=True)
class FeatureBundle:
    perfusion_amplitude: PixelMap
    ventilation_amplitude: PixelMap
    time_delay: PixelMap
    position: PixelMap

    def as_inputs(self) -> dict[str, np.ndarray]:
        return {
            "perfusion_amplitude": self.perfusion_amplitude.values,
            "ventilation_amplitude": self.ventilation_amplitude.values,
            "time_delay": self.time_delay.values,
            "position": self.position.values,
        }


def amplitude_map(cycle: MeanCycle) -> PixelMap:
    """Peak-to-peak impedance change of each pixel over the cycle."""
    if len(cycle) < 2:
        raise ValueError("amplitude needs a cycle of at least 2 frames")
    f = cycle.frames
    return PixelMap(f.max(axis=0) - f.min(axis=0), "amplitude")


def normalize_map(pm: PixelMap) -> PixelMap:
    """Divide by the maximum. An all-zero map stays all zero."""
    v = pm.values
    if v.min() < 0:
        raise NegativeInput("normalize_map expects non-negative values")
    peak = v.max()
    if peak == 0:
        return PixelMap(np.zeros_like(v), "normalized")
    return PixelMap(v / peak, "normalized")


def time_delay_map(cycle: MeanCycle) -> PixelMap:
    """Phase of each pixel's maximum within the cardiac cycle, in ``[0, 1)``.

    Phase 0 is the R-wave trigger. Ties go to the earliest frame, so a flat
    pixel gets delay 0.
    """
    if cycle.source_kind != "cardiac":
        raise KindMismatch(f"time delay needs a cardiac mean cycle, got {cycle.source_kind}")
    if len(cycle) < 2:
        raise ValueError("time delay needs a cycle of at least 2 frames")
    peak = np.argmax(cycle.frames, axis=0)
    return PixelMap(peak / len(cycle), "time_delay")


def position_map(size: int = GRID) -> PixelMap:
    """0 for the anterior (upper) half of the rows, 1 for the posterior half."""
    v = np.zeros((size, size))
    v[size // 2:, :] = 1.0
    return PixelMap(v, "binary")


def build_features(cardiac: MeanCycle, respiratory: MeanCycle) -> FeatureBundle:
    if respiratory.source_kind != "respiratory":
        raise KindMismatch(f"ventilation amplitude needs a respiratory cycle, got {respiratory.source_kind}")
    return FeatureBundle(
        perfusion_amplitude=normalize_map(amplitude_map(cardiac)),
        ventilation_amplitude=normalize_map(amplitude_map(respiratory)),
        time_delay=time_delay_map(cardiac),
        position=position_map(cardiac.frames.shape[-1]),
    )
