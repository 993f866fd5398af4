"""End-to-end run: gating -> features -> fuzzy models -> medians -> segmentation -> ROC."""

from __future__ import annotations

import hashlib
import json
import logging
import platform
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .dataio import (
    PixelMap,
    load_frame_sequence,
    load_trigger_train,
    read_pixel_map,
    require_grid,
    write_pixel_map,
)
from .errors import ConfigError, EitmapError
from .evaluation import RocCurve, roc_curve, write_roc_csv
from .features import FeatureBundle, build_features
from .gating import gated_series, pool_series
from .models import ModelSuite, heart_image, lung_image, median_image, normalize_heart
from .segmentation import SegmentationConfig, threshold_map, three_region_segment, union_mask

log = logging.getLogger(__name__)


class StageError(EitmapError):
    """Wraps a module error with the pipeline stage and file it came from."""

    def __init__(self, stage: str, cause: Exception, path=None):
        self.stage, self.cause, self.path = stage, cause, path
        self.exit_code = getattr(cause, "exit_code", 2)
        where = f" ({path})" if path else ""
        super().__init__(f"stage '{stage}' failed{where}: {cause}")


@dataclass(frozen=True)
class Acquisition:
    frames: str
    cardiac_triggers: str
    respiratory_triggers: str


@dataclass(frozen=True)
class GatingConfig:
    cardiac_group_size: int = 100
    respiratory_group_size: int = 12
    cardiac_target_length: int | None = None
    respiratory_target_length: int | None = None


@dataclass(frozen=True)
class RocConfig:
    t_start: float = 0.1
    t_end: float = 1.0
    t_step: float = 0.05


@dataclass(frozen=True)
class RuleBasePaths:
    heart: str | None = None
    perfusion: str | None = None
    ventilation: str | None = None


@dataclass(frozen=True)
class PipelineConfig:
    acquisitions: tuple[Acquisition, ...] = ()
    acquisition_count: int = 7
    reference: str | None = None
    rule_bases: RuleBasePaths = field(default_factory=RuleBasePaths)
    gating: GatingConfig = field(default_factory=GatingConfig)
    segmentation: SegmentationConfig = field(default_factory=SegmentationConfig)
    roc: RocConfig = field(default_factory=RocConfig)
    output_dir: str = "eitmap_out"
    base_dir: Path = field(default=Path("."), compare=False)

    def resolve(self, p: str | None) -> Path | None:
        if p is None:
            return None
        path = Path(p)
        return path if path.is_absolute() else self.base_dir / path

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("base_dir")
        d["acquisitions"] = [asdict(a) for a in self.acquisitions]
        return d

    def input_files(self) -> list[tuple[str, str]]:
        """(stage, path) for every file the run reads."""
        out = []
        for a in self.acquisitions:
            out += [("gate", a.frames), ("gate", a.cardiac_triggers), ("gate", a.respiratory_triggers)]
        for name in ("heart", "perfusion", "ventilation"):
            p = getattr(self.rule_bases, name)
            if p:
                out.append(("infer", p))
        if self.reference:
            out.append(("evaluate", self.reference))
        return out


def _build(cls, d, where: str):
    if d is None:
        return cls()
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected an object")
    names = {f.name for f in fields(cls)}
    unknown = set(d) - names
    if unknown:
        raise ConfigError(f"{where}: unknown field(s) {sorted(unknown)}")
    try:
        return cls(**d)
    except (TypeError, ValueError, EitmapError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def config_from_dict(d: dict, base_dir: Path = Path(".")) -> PipelineConfig:
    if not isinstance(d, dict):
        raise ConfigError("config: expected a JSON object")
    allowed = {f.name for f in fields(PipelineConfig)} - {"base_dir"}
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"config: unknown field(s) {sorted(unknown)}")
    acqs = d.get("acquisitions", [])
    if not isinstance(acqs, list):
        raise ConfigError("acquisitions: expected a list")
    cfg = PipelineConfig(
        acquisitions=tuple(_build(Acquisition, a, f"acquisitions[{i}]") for i, a in enumerate(acqs)),
        acquisition_count=d.get("acquisition_count", 7),
        reference=d.get("reference"),
        rule_bases=_build(RuleBasePaths, d.get("rule_bases"), "rule_bases"),
        gating=_build(GatingConfig, d.get("gating"), "gating"),
        segmentation=_build(SegmentationConfig, d.get("segmentation"), "segmentation"),
        roc=_build(RocConfig, d.get("roc"), "roc"),
        output_dir=d.get("output_dir", "eitmap_out"),
        base_dir=base_dir,
    )
    if not isinstance(cfg.acquisition_count, int) or cfg.acquisition_count < 1:
        raise ConfigError("acquisition_count: expected a positive integer")
    if cfg.gating.cardiac_group_size < 1 or cfg.gating.respiratory_group_size < 1:
        raise ConfigError("gating: group sizes must be >= 1")
    return cfg


def load_config(path) -> PipelineConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return config_from_dict(doc, path.parent)


def default_config_dict() -> dict:
    return PipelineConfig().to_dict()


# --- per-acquisition stages ------------------------------------------------------

def gate_acquisition(cfg: PipelineConfig, acq: Acquisition):
    g = cfg.gating
    seq = load_frame_sequence(cfg.resolve(acq.frames))
    require_grid(seq.frames.shape, str(acq.frames))
    ctrig = load_trigger_train(cfg.resolve(acq.cardiac_triggers))
    rtrig = load_trigger_train(cfg.resolve(acq.respiratory_triggers))
    if ctrig.kind != "cardiac" or rtrig.kind != "respiratory":
        raise ConfigError(f"trigger kinds swapped or wrong: {ctrig.kind}, {rtrig.kind}")
    cardiac = pool_series(
        gated_series(seq, ctrig, g.cardiac_group_size, g.cardiac_target_length), g.cardiac_group_size
    )
    respiratory = pool_series(
        gated_series(seq, rtrig, g.respiratory_group_size, g.respiratory_target_length), g.respiratory_group_size
    )
    return cardiac, respiratory


@dataclass
class AcquisitionMaps:
    features: FeatureBundle
    heart: PixelMap
    heart_norm: PixelMap
    perfusion: PixelMap
    ventilation: PixelMap

    def named(self) -> dict[str, PixelMap]:
        return {
            "perfusion_amplitude": self.features.perfusion_amplitude,
            "ventilation_amplitude": self.features.ventilation_amplitude,
            "time_delay": self.features.time_delay,
            "position": self.features.position,
            "heart_possibility": self.heart,
            "heart_possibility_norm": self.heart_norm,
            "perfusion_possibility": self.perfusion,
            "ventilation_possibility": self.ventilation,
        }


def model_acquisition(features: FeatureBundle, suite: ModelSuite) -> AcquisitionMaps:
    heart = heart_image(features, suite.heart_rb)
    heart_norm = normalize_heart(heart)
    perf = lung_image(features.perfusion_amplitude, heart_norm, suite.perfusion_rb)
    vent = lung_image(features.ventilation_amplitude, heart_norm, suite.ventilation_rb)
    return AcquisitionMaps(features, heart, heart_norm, perf, vent)


@dataclass
class PipelineResult:
    acquisitions: list[AcquisitionMaps]
    median_heart: PixelMap
    median_perfusion: PixelMap
    median_ventilation: PixelMap
    perfusion_mask: PixelMap
    ventilation_mask: PixelMap
    total_lung_mask: PixelMap
    segmented: PixelMap
    reference_mask: PixelMap | None
    roc: RocCurve | None


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run_pipeline(cfg: PipelineConfig, out_dir=None, config_bytes: bytes | None = None) -> PipelineResult:
    """Run every stage and write all maps plus ``manifest.json`` under ``out_dir``.

    Raises ``StageError`` naming the failing stage and file.
    """
    out = Path(out_dir) if out_dir is not None else cfg.resolve(cfg.output_dir)

    for stage, p in cfg.input_files():
        if not cfg.resolve(p).is_file():
            raise StageError(stage, ConfigError("missing input file"), p)
    if len(cfg.acquisitions) != cfg.acquisition_count:
        raise StageError(
            "config",
            ConfigError(f"acquisition_count={cfg.acquisition_count} but {len(cfg.acquisitions)} acquisitions listed"),
        )
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise StageError("config", ConfigError(f"output directory not writable: {exc}"), out) from exc

    rb = cfg.rule_bases
    try:
        suite = ModelSuite.from_paths(cfg.resolve(rb.heart), cfg.resolve(rb.perfusion), cfg.resolve(rb.ventilation))
    except EitmapError as exc:
        raise StageError("infer", exc) from exc

    per_acq = []
    for i, acq in enumerate(cfg.acquisitions, start=1):
        try:
            cardiac, respiratory = gate_acquisition(cfg, acq)
        except (EitmapError, OSError) as exc:
            raise StageError("gate", exc, acq.frames) from exc
        try:
            features = build_features(cardiac, respiratory)
        except EitmapError as exc:
            raise StageError("features", exc, acq.frames) from exc
        try:
            maps = model_acquisition(features, suite)
        except EitmapError as exc:
            raise StageError("infer", exc, acq.frames) from exc
        per_acq.append(maps)
        acq_dir = out / f"acq_{i:02d}"
        acq_dir.mkdir(exist_ok=True)
        for name, pm in maps.named().items():
            write_pixel_map(pm, acq_dir / name)
        log.info("acquisition %d: %d cardiac, %d respiratory cycles", i, cardiac.cycle_count, respiratory.cycle_count)

    med_heart = median_image([m.heart for m in per_acq])
    med_perf = median_image([m.perfusion for m in per_acq])
    med_vent = median_image([m.ventilation for m in per_acq])

    try:
        seg = cfg.segmentation
        perf_mask = threshold_map(med_perf, seg.perfusion_threshold)
        vent_mask = threshold_map(med_vent, seg.ventilation_threshold)
        total = union_mask(perf_mask, vent_mask)
        labels = three_region_segment(med_vent, med_perf, seg)
    except EitmapError as exc:
        raise StageError("segment", exc) from exc

    outputs = {
        "median_heart_possibility": med_heart,
        "median_perfusion_possibility": med_perf,
        "median_ventilation_possibility": med_vent,
        "perfusion_mask": perf_mask,
        "ventilation_mask": vent_mask,
        "total_lung_mask": total,
        "segmented": labels,
    }

    ref_mask, curve = None, None
    if cfg.reference:
        try:
            ref = read_pixel_map(cfg.resolve(cfg.reference), "normalized")
            ref_mask = threshold_map(ref, seg.reference_threshold)
            r = cfg.roc
            curve = roc_curve(med_perf, ref_mask, r.t_start, r.t_end, r.t_step)
        except (EitmapError, OSError) as exc:
            raise StageError("evaluate", exc, cfg.reference) from exc
        outputs["reference_mask"] = ref_mask
        write_roc_csv(curve, out / "roc.csv")

    for name, pm in outputs.items():
        write_pixel_map(pm, out / name)

    manifest = {
        "eitmap_version": __version__,
        "numpy_version": np.__version__,
        "python_version": platform.python_version(),
        "config_sha256": hashlib.sha256(
            config_bytes if config_bytes is not None else json.dumps(cfg.to_dict(), sort_keys=True).encode()
        ).hexdigest(),
        "resolved_config": cfg.to_dict(),
        "inputs": {p: _sha256(cfg.resolve(p)) for _, p in cfg.input_files()},
        "rule_bases": {n: r.name for n, r in (("heart", suite.heart_rb), ("perfusion", suite.perfusion_rb),
                                              ("ventilation", suite.ventilation_rb))},
        "auc": curve.auc if curve else None,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    return PipelineResult(per_acq, med_heart, med_perf, med_vent, perf_mask, vent_mask, total, labels, ref_mask, curve)
