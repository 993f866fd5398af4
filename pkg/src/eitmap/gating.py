"""Trigger-gated cycle averaging.

Frames between consecutive triggers form one cycle. Cycles of unequal
length are put on a common phase axis by per-pixel linear resampling and
averaged, which attenuates everything not locked to the trigger.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dataio import FrameSequence, TriggerTrain
from .errors import EmptyInput, NoCompleteCycle

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Cycle:
    frames: np.ndarray  # (length, h, w), a view into the source sequence
    start_index: int

    def __len__(self):
        return self.frames.shape[0]


@dataclass(frozen=True)
class MeanCycle:
    frames: np.ndarray  # (target_length, h, w) float64
    source_kind: str
    cycle_count: int

    def __post_init__(self):
        if self.cycle_count < 1:
            raise EmptyInput("MeanCycle needs at least one source cycle")
        self.frames.setflags(write=False)

    def __len__(self):
        return self.frames.shape[0]


def extract_cycles(seq: FrameSequence, triggers: TriggerTrain) -> list[Cycle]:
    """Slice ``seq`` into ``[t_i, t_{i+1})`` blocks.

    Frames before the first and after the last trigger are discarded.
    Blocks shorter than two frames are dropped (logged).
    """
    triggers.check_against(seq)
    idx = triggers.indices
    if len(idx) < 2:
        raise NoCompleteCycle(f"need at least 2 triggers, got {len(idx)}")
    cycles, dropped = [], 0
    for a, b in zip(idx, idx[1:]):
        if b - a < 2:
            dropped += 1
            continue
        cycles.append(Cycle(seq.frames[a:b], a))
    if dropped:
        log.warning("dropped %d cycle(s) shorter than 2 frames", dropped)
    if not cycles:
        raise NoCompleteCycle("no cycle of at least 2 frames between triggers")
    return cycles


def resample_cycle(frames: np.ndarray, target_length: int) -> np.ndarray:
    """Linear resampling over normalized phase ``[0, 1)``.

    Source frame ``j`` sits at phase ``j/n``, output frame ``k`` at ``k/L``.
    Phases past the last source frame hold its value.
    """
    n = frames.shape[0]
    src = np.asarray(frames, dtype=np.float64)
    if n == target_length:
        return src.copy()
    pos = np.arange(target_length) * (n / target_length)
    lo = np.minimum(np.floor(pos).astype(int), n - 1)
    hi = np.minimum(lo + 1, n - 1)
    w = (pos - lo)[:, None, None]
    return src[lo] * (1.0 - w) + src[hi] * w


def default_target_length(cycles: Sequence[Cycle]) -> int:
    return max(2, int(round(float(np.median([len(c) for c in cycles])))))


def mean_cycle(cycles: Sequence[Cycle], target_length: int, source_kind: str = "cardiac") -> MeanCycle:
    if not cycles:
        raise EmptyInput("mean_cycle needs at least one cycle")
    if target_length < 2:
        raise ValueError("target_length must be >= 2")
    acc = np.zeros((target_length,) + cycles[0].frames.shape[1:], dtype=np.float64)
    # fixed summation order so grouped results never depend on scheduling
    for c in cycles:
        acc += resample_cycle(c.frames, target_length)
    return MeanCycle(acc / len(cycles), source_kind, len(cycles))


def gated_series(
    seq: FrameSequence,
    triggers: TriggerTrain,
    group_size: int,
    target_length: int | None = None,
) -> list[MeanCycle]:
    """One MeanCycle per consecutive group of ``group_size`` cycles.

    A trailing partial group is kept; its ``cycle_count`` is smaller than
    ``group_size``.
    """
    if group_size < 1:
        raise ValueError("group_size must be >= 1")
    cycles = extract_cycles(seq, triggers)
    if target_length is None:
        target_length = default_target_length(cycles)
    return [
        mean_cycle(cycles[i:i + group_size], target_length, triggers.kind)
        for i in range(0, len(cycles), group_size)
    ]


def pool_series(series: Sequence[MeanCycle], group_size: int | None = None) -> MeanCycle:
    """Cycle-count weighted mean of a gated series.

    With ``group_size`` given, only full groups take part unless none exist.
    """
    if not series:
        raise EmptyInput("empty gated series")
    chosen = list(series)
    if group_size is not None:
        full = [m for m in series if m.cycle_count >= group_size]
        chosen = full or chosen
    lengths = {len(m) for m in chosen}
    if len(lengths) != 1:
        raise ValueError("mean cycles of different lengths cannot be pooled")
    total = sum(m.cycle_count for m in chosen)
    acc = np.zeros_like(chosen[0].frames)
    for m in chosen:
        acc += m.frames * m.cycle_count
    return MeanCycle(acc / total, chosen[0].source_kind, total)


def mean_cycle_to_sequence(mc: MeanCycle, sample_rate: float) -> FrameSequence:
    return FrameSequence(mc.frames, sample_rate)
