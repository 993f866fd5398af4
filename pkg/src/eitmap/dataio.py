"""File formats and core containers.

EITF binary frame sequence::

    b"EITF" | u32 width | u32 height | u32 frame_count | f64 sample_rate |
    frame_count * height * width f32 values

All little-endian, frame-major then row-major. Pixel order 1 is the
upper-left corner of the image, order ``width*height`` the lower-right.

Trigger file: UTF-8 text, first line ``cardiac`` or ``respiratory``,
then one 0-based frame index per line.

Pixel maps are written as CSV (authoritative, full precision) plus a P5
PGM preview.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    InvalidPixelMap,
    IoFailure,
    MalformedHeader,
    NonMonotonicTriggers,
    TruncatedPayload,
    UnknownKindTag,
)

GRID = 32
MAGIC = b"EITF"
_HEADER = struct.Struct("<4sIIId")

TRIGGER_KINDS = ("cardiac", "respiratory")
MAP_KINDS = ("amplitude", "normalized", "time_delay", "possibility", "binary", "region_label")

# region labels
BACKGROUND, MATCHED, PERFUSED, VENTILATED = 0, 1, 2, 3
# gray level per label: matched dark gray, predominantly perfused light gray,
# predominantly ventilated white
REGION_GRAY = {BACKGROUND: 0, MATCHED: 85, PERFUSED: 170, VENTILATED: 255}


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class FrameSequence:
    """Time series of impedance images, shape ``(n_frames, height, width)``."""

    frames: np.ndarray
    sample_rate: float

    def __post_init__(self):
        frames = np.array(self.frames, dtype=np.float32)
        if frames.ndim != 3 or frames.shape[0] < 1 or frames.shape[1] < 1 or frames.shape[2] < 1:
            raise MalformedHeader(f"frames must have shape (n>=1, h, w), got {frames.shape}")
        if not (self.sample_rate > 0):
            raise MalformedHeader(f"sample_rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "frames", _frozen(frames))
        object.__setattr__(self, "sample_rate", float(self.sample_rate))

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def height(self) -> int:
        return self.frames.shape[1]

    @property
    def width(self) -> int:
        return self.frames.shape[2]

    def __len__(self):
        return self.n_frames


@dataclass(frozen=True)
class TriggerTrain:
    kind: str
    indices: tuple[int, ...]

    def __post_init__(self):
        if self.kind not in TRIGGER_KINDS:
            raise UnknownKindTag(f"unknown trigger kind {self.kind!r}")
        idx = tuple(int(i) for i in self.indices)
        if any(i < 0 for i in idx):
            raise NonMonotonicTriggers("trigger indices must be non-negative")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise NonMonotonicTriggers("trigger indices must be strictly increasing")
        object.__setattr__(self, "indices", idx)

    def __len__(self):
        return len(self.indices)

    def check_against(self, seq: FrameSequence) -> None:
        if self.indices and self.indices[-1] >= seq.n_frames:
            raise NonMonotonicTriggers(
                f"trigger index {self.indices[-1]} outside sequence of {seq.n_frames} frames"
            )


@dataclass(frozen=True)
class PixelMap:
    """A 2-D scalar field tagged with what it represents."""

    values: np.ndarray
    kind: str = field(default="amplitude")

    def __post_init__(self):
        if self.kind not in MAP_KINDS:
            raise InvalidPixelMap(f"unknown map kind {self.kind!r}")
        v = np.array(self.values, dtype=np.float64)
        if v.ndim == 1 and v.size == GRID * GRID:
            v = v.reshape(GRID, GRID)
        if v.ndim != 2:
            raise InvalidPixelMap(f"pixel map must be 2-D, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InvalidPixelMap("pixel map contains non-finite values")
        if self.kind in ("normalized", "possibility") and (v.min() < 0 or v.max() > 1):
            raise InvalidPixelMap(f"{self.kind} map values must lie in [0, 1]")
        if self.kind == "time_delay" and (v.min() < 0 or v.max() >= 1):
            raise InvalidPixelMap("time_delay values must lie in [0, 1)")
        if self.kind == "binary" and not np.all((v == 0) | (v == 1)):
            raise InvalidPixelMap("binary map values must be 0 or 1")
        if self.kind == "region_label" and not np.all(np.isin(v, list(REGION_GRAY))):
            raise InvalidPixelMap("region labels must be in {0, 1, 2, 3}")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def as_bool(self) -> np.ndarray:
        return self.values.astype(bool)

    def __eq__(self, other):
        if not isinstance(other, PixelMap):
            return NotImplemented
        return self.kind == other.kind and np.array_equal(self.values, other.values)

    __hash__ = None


# --- frame sequences -------------------------------------------------------

def write_frame_sequence(seq: FrameSequence, path) -> None:
    header = _HEADER.pack(MAGIC, seq.width, seq.height, seq.n_frames, seq.sample_rate)
    payload = np.ascontiguousarray(seq.frames, dtype="<f4").tobytes()
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(payload)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_frame_sequence(path) -> FrameSequence:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise MalformedHeader(f"{path}: file shorter than EITF header")
    magic, width, height, count, rate = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise MalformedHeader(f"{path}: bad magic {magic!r}")
    if width == 0 or height == 0 or count == 0:
        raise MalformedHeader(f"{path}: zero dimension in header ({width}x{height}x{count})")
    if not (rate > 0):
        raise MalformedHeader(f"{path}: non-positive sample rate {rate}")
    expected = count * width * height * 4
    got = len(raw) - _HEADER.size
    if got != expected:
        raise TruncatedPayload(f"{path}: header promises {expected} payload bytes, found {got}")
    frames = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).reshape(count, height, width)
    return FrameSequence(frames, rate)


# --- triggers ----------------------------------------------------------------

def write_trigger_train(train: TriggerTrain, path) -> None:
    text = "\n".join([train.kind, *map(str, train.indices)]) + "\n"
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_trigger_train(path) -> TriggerTrain:
    lines = [ln.strip() for ln in Path(path).read_text(encoding="utf-8").splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise UnknownKindTag(f"{path}: empty trigger file")
    kind, body = lines[0], lines[1:]
    if kind not in TRIGGER_KINDS:
        raise UnknownKindTag(f"{path}: unknown kind tag {kind!r}")
    try:
        indices = [int(ln) for ln in body]
    except ValueError as exc:
        raise NonMonotonicTriggers(f"{path}: non-integer trigger line ({exc})") from exc
    return TriggerTrain(kind, tuple(indices))


# --- pixel maps ----------------------------------------------------------------

def pgm_bytes(pm: PixelMap) -> bytes:
    """8-bit P5 rendering: min -> 0, max -> 255; region labels use fixed grays."""
    v = pm.values
    if pm.kind == "region_label":
        gray = np.zeros(v.shape, dtype=np.uint8)
        for label, level in REGION_GRAY.items():
            gray[v == label] = level
    else:
        lo, hi = float(v.min()), float(v.max())
        if hi > lo:
            gray = np.rint((v - lo) / (hi - lo) * 255.0).astype(np.uint8)
        else:
            gray = np.zeros(v.shape, dtype=np.uint8)
    h, w = v.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + gray.tobytes()


def read_pgm(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    tokens, pos = [], 0
    while len(tokens) < 4:
        while raw[pos:pos + 1].isspace():
            pos += 1
        start = pos
        while not raw[pos:pos + 1].isspace():
            pos += 1
        tokens.append(raw[start:pos].decode("ascii"))
    if tokens[0] != "P5":
        raise MalformedHeader(f"{path}: not a P5 PGM")
    w, h = int(tokens[1]), int(tokens[2])
    data = raw[pos + 1:]
    return np.frombuffer(data, dtype=np.uint8, count=w * h).reshape(h, w)


def write_pixel_map(pm: PixelMap, path) -> tuple[Path, Path]:
    """Write ``<stem>.csv`` and ``<stem>.pgm``; returns both paths."""
    base = Path(path)
    if base.suffix in (".csv", ".pgm"):
        base = base.with_suffix("")
    csv_path, pgm_path = base.with_suffix(".csv"), base.with_suffix(".pgm")
    rows = "\n".join(",".join(repr(float(x)) for x in row) for row in pm.values) + "\n"
    try:
        csv_path.write_text(rows, encoding="utf-8")
        pgm_path.write_bytes(pgm_bytes(pm))
    except OSError as exc:
        raise IoFailure(f"cannot write {base}: {exc}") from exc
    return csv_path, pgm_path


def read_pixel_map(path, kind: str = "amplitude") -> PixelMap:
    text = Path(path).read_text(encoding="utf-8")
    rows = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    try:
        values = [[float(x) for x in ln.split(",")] for ln in rows]
    except ValueError as exc:
        raise InvalidPixelMap(f"{path}: {exc}") from exc
    if not values or len({len(r) for r in values}) != 1:
        raise InvalidPixelMap(f"{path}: ragged or empty CSV")
    return PixelMap(np.array(values), kind)


def require_grid(shape: Sequence[int], what: str = "input") -> None:
    if tuple(shape[-2:]) != (GRID, GRID):
        raise MalformedHeader(f"{what}: pipeline requires {GRID}x{GRID} images, got {tuple(shape[-2:])}")
