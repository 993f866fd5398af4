"""Synthetic EIT acquisitions with known anatomy.

Pixel ``p`` at frame ``k``::

    baseline
      + [p in heart]          * heart_gain          * c(k)
      + [p in lung]           * ventilation_gain    * r(k)
      + [p in perfused lung]  * lung_perfusion_gain * c(k - lag)
      + noise

``c`` is a raised-cosine pulse filling the first 40% of each cardiac cycle
(peak at 20% of the cycle), ``r`` a raised cosine over the whole
respiratory cycle (0 at inspiration start, 1 half-way). The perfused lung
is the lung shrunk about each lung's centre; the rim is ventilated but not
perfused. Heart pixels are removed from the lungs.

Noise is white Gaussian. Frames ``[NOISE_CHUNK*i, NOISE_CHUNK*(i+1))`` draw
``standard_normal`` from ``numpy.random.Generator(PCG64(SeedSequence([seed, i])))``
in frame-major, row-major order, so chunks can be synthesised independently.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction

import numpy as np

from .dataio import GRID, FrameSequence, PixelMap, TriggerTrain
from .errors import ConfigError, RegionOutOfGrid

NOISE_CHUNK = 1000
PULSE_WIDTH = 0.4


@dataclass(frozen=True)
class Ellipse:
    center_row: float
    center_col: float
    semi_rows: float
    semi_cols: float

    def mask(self, size: int = GRID, scale: float = 1.0) -> np.ndarray:
        rows, cols = np.mgrid[0:size, 0:size]
        dr = (rows - self.center_row) / (self.semi_rows * scale)
        dc = (cols - self.center_col) / (self.semi_cols * scale)
        return dr * dr + dc * dc <= 1.0

    def check(self, name: str, size: int = GRID) -> None:
        if self.semi_rows <= 0 or self.semi_cols <= 0:
            raise RegionOutOfGrid(f"{name}: semi-axes must be positive")
        r0, r1 = self.center_row - self.semi_rows, self.center_row + self.semi_rows
        c0, c1 = self.center_col - self.semi_cols, self.center_col + self.semi_cols
        if r0 < 0 or c0 < 0 or r1 > size - 1 or c1 > size - 1:
            raise RegionOutOfGrid(f"{name}: ellipse extends outside the {size}x{size} grid")


@dataclass(frozen=True)
class PhantomConfig:
    sample_rate: float = 50.0
    duration_frames: int = 20_000
    respiratory_rate: float = 20.0
    cardiac_rate: float = 100.0
    heart_region: Ellipse = field(default_factory=lambda: Ellipse(8.0, 15.5, 6.0, 7.0))
    left_lung_region: Ellipse = field(default_factory=lambda: Ellipse(17.0, 7.5, 12.0, 6.5))
    right_lung_region: Ellipse = field(default_factory=lambda: Ellipse(17.0, 24.5, 12.0, 6.5))
    perfused_scale: float = 0.85
    baseline: float = 1.0
    ventilation_gain: float = 1.0
    lung_perfusion_gain: float = 0.15
    heart_gain: float = 0.25
    lung_perfusion_phase_lag: float = 0.3
    noise_sigma: float = 0.1
    seed: int = 0

    def validate(self) -> None:
        if self.sample_rate <= 0 or self.respiratory_rate <= 0 or self.cardiac_rate <= 0:
            raise ConfigError("rates must be positive")
        if self.duration_frames < 1:
            raise ConfigError("duration_frames must be >= 1")
        if min(self.ventilation_gain, self.lung_perfusion_gain, self.heart_gain) < 0:
            raise ConfigError("gains must be non-negative")
        if self.noise_sigma < 0:
            raise ConfigError("noise_sigma must be non-negative")
        if not 0 < self.perfused_scale <= 1:
            raise ConfigError("perfused_scale must lie in (0, 1]")
        self.heart_region.check("heart_region")
        self.left_lung_region.check("left_lung_region")
        self.right_lung_region.check("right_lung_region")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "PhantomConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"phantom config: unknown field(s) {sorted(unknown)}")
        kw = dict(d)
        for key in ("heart_region", "left_lung_region", "right_lung_region"):
            if key in kw:
                try:
                    kw[key] = Ellipse(**kw[key])
                except TypeError as exc:
                    raise ConfigError(f"phantom config: {key}: {exc}") from exc
        return replace(cls(), **kw)


@dataclass(frozen=True)
class PhantomDataset:
    frames: FrameSequence
    cardiac_triggers: TriggerTrain
    respiratory_triggers: TriggerTrain
    truth_heart: PixelMap
    truth_lung: PixelMap
    truth_perfused_lung: PixelMap
    truth_ventilated_lung: PixelMap
    saline_reference: PixelMap


def _cycle_fraction(rate_per_min: float, sample_rate: float) -> Fraction:
    """Cycles per frame as an exact fraction."""
    f = Fraction(str(rate_per_min)) / 60 / Fraction(str(sample_rate))
    if f >= 1:
        raise ConfigError("cycle shorter than one frame")
    return f


def _phase(n: int, f: Fraction) -> tuple[np.ndarray, np.ndarray]:
    """Phase in [0, 1) of frames 0..n-1 and the frames that open a cycle."""
    k = np.arange(n, dtype=np.int64)
    rem = (k * f.numerator) % f.denominator
    starts = np.flatnonzero(rem < f.numerator)
    return rem / f.denominator, starts


def cardiac_pulse(phase: np.ndarray) -> np.ndarray:
    phase = np.asarray(phase, dtype=np.float64)
    out = 0.5 * (1.0 - np.cos(2.0 * np.pi * phase / PULSE_WIDTH))
    return np.where(phase < PULSE_WIDTH, out, 0.0)


def respiratory_wave(phase: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * np.asarray(phase, dtype=np.float64)))


def region_masks(cfg: PhantomConfig) -> dict[str, np.ndarray]:
    heart = cfg.heart_region.mask()
    lung = (cfg.left_lung_region.mask() | cfg.right_lung_region.mask()) & ~heart
    perfused = (
        cfg.left_lung_region.mask(scale=cfg.perfused_scale)
        | cfg.right_lung_region.mask(scale=cfg.perfused_scale)
    ) & lung
    return {"heart": heart, "lung": lung, "perfused": perfused, "ventilated": lung}


def noise_chunk(seed: int, chunk: int, n_frames: int, size: int = GRID) -> np.ndarray:
    gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, chunk])))
    return gen.standard_normal((n_frames, size, size))


def generate_phantom(cfg: PhantomConfig = PhantomConfig()) -> PhantomDataset:
    cfg.validate()
    n = cfg.duration_frames
    c_phase, c_starts = _phase(n, _cycle_fraction(cfg.cardiac_rate, cfg.sample_rate))
    r_phase, r_starts = _phase(n, _cycle_fraction(cfg.respiratory_rate, cfg.sample_rate))
    c = cardiac_pulse(c_phase)
    c_lag = cardiac_pulse((c_phase - cfg.lung_perfusion_phase_lag) % 1.0)
    r = respiratory_wave(r_phase)

    m = region_masks(cfg)
    heart_w = m["heart"] * cfg.heart_gain
    vent_w = m["lung"] * cfg.ventilation_gain
    perf_w = m["perfused"] * cfg.lung_perfusion_gain

    frames = np.empty((n, GRID, GRID), dtype=np.float32)
    for chunk, lo in enumerate(range(0, n, NOISE_CHUNK)):
        hi = min(lo + NOISE_CHUNK, n)
        block = (
            cfg.baseline
            + c[lo:hi, None, None] * heart_w
            + r[lo:hi, None, None] * vent_w
            + c_lag[lo:hi, None, None] * perf_w
        )
        if cfg.noise_sigma > 0:
            block = block + cfg.noise_sigma * noise_chunk(cfg.seed, chunk, hi - lo)
        frames[lo:hi] = block

    def binary(mask):
        return PixelMap(mask.astype(np.float64), "binary")

    return PhantomDataset(
        frames=FrameSequence(frames, cfg.sample_rate),
        cardiac_triggers=TriggerTrain("cardiac", tuple(c_starts.tolist())),
        respiratory_triggers=TriggerTrain("respiratory", tuple(r_starts.tolist())),
        truth_heart=binary(m["heart"]),
        truth_lung=binary(m["lung"]),
        truth_perfused_lung=binary(m["perfused"]),
        truth_ventilated_lung=binary(m["ventilated"]),
        saline_reference=PixelMap(m["perfused"].astype(np.float64), "normalized"),
    )
