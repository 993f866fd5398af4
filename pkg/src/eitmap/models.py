"""Per-pixel heart and lung fuzzy models and cross-acquisition medians."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from typing import Sequence

import numpy as np

from .dataio import PixelMap
from .errors import EmptyInput, KindMismatch, RuleBaseMismatch
from .features import FeatureBundle
from .fuzzy import RuleBase, infer, load_rule_base

HEART_INPUTS = frozenset({"perfusion_amplitude", "time_delay", "position"})
HEART_NORM = "heart_possibility_norm"
LUNG_RULE_COUNT = 9


def default_rule_base_path(name: str):
    """``name`` is one of ``heart``, ``perfusion``, ``ventilation``."""
    return resources.files("eitmap") / "rulebases" / f"{name}.json"


def default_rule_base(name: str) -> RuleBase:
    with resources.as_file(default_rule_base_path(name)) as p:
        return load_rule_base(p)


@dataclass(frozen=True)
class ModelSuite:
    heart_rb: RuleBase
    perfusion_rb: RuleBase
    ventilation_rb: RuleBase

    def __post_init__(self):
        _check_names(self.heart_rb, HEART_INPUTS)
        _lung_amplitude_name(self.perfusion_rb)
        _lung_amplitude_name(self.ventilation_rb)
        for rb in (self.perfusion_rb, self.ventilation_rb):
            if len(rb.rules) != LUNG_RULE_COUNT:
                raise RuleBaseMismatch(f"{rb.name}: lung models have {LUNG_RULE_COUNT} rules, got {len(rb.rules)}")
        for rb in (self.heart_rb, self.perfusion_rb, self.ventilation_rb):
            if rb.output.domain != (0.0, 1.0):
                raise RuleBaseMismatch(f"{rb.name}: output domain must be [0, 1], got {rb.output.domain}")

    @classmethod
    def default(cls) -> "ModelSuite":
        return cls(default_rule_base("heart"), default_rule_base("perfusion"), default_rule_base("ventilation"))

    @classmethod
    def from_paths(cls, heart=None, perfusion=None, ventilation=None) -> "ModelSuite":
        def pick(path, name):
            return load_rule_base(path) if path else default_rule_base(name)

        return cls(pick(heart, "heart"), pick(perfusion, "perfusion"), pick(ventilation, "ventilation"))


def _check_names(rb: RuleBase, expected) -> None:
    if set(rb.input_names) != set(expected):
        raise RuleBaseMismatch(f"{rb.name}: inputs {sorted(rb.input_names)} != expected {sorted(expected)}")


def _lung_amplitude_name(rb: RuleBase) -> str:
    amps = [n for n in rb.input_names if n.endswith("_amplitude")]
    if len(amps) != 1 or set(rb.input_names) != {amps[0], HEART_NORM}:
        raise RuleBaseMismatch(
            f"{rb.name}: lung model inputs must be one '*_amplitude' and '{HEART_NORM}', got {list(rb.input_names)}"
        )
    return amps[0]


def _run(rb: RuleBase, inputs: dict[str, np.ndarray]) -> PixelMap:
    shape = next(iter(inputs.values())).shape
    for name, values in inputs.items():
        lo, hi = rb.variable(name).domain
        if values.min() < lo or values.max() > hi:
            raise RuleBaseMismatch(f"{rb.name}: feature {name} spans [{values.min()}, {values.max()}], domain is [{lo}, {hi}]")
    crisp, _ = infer(rb, inputs)
    return PixelMap(np.clip(crisp.reshape(shape), 0.0, 1.0), "possibility")


def heart_image(features: FeatureBundle, rb: RuleBase) -> PixelMap:
    _check_names(rb, HEART_INPUTS)
    f = features.as_inputs()
    return _run(rb, {k: f[k] for k in HEART_INPUTS})


def normalize_heart(pm: PixelMap) -> PixelMap:
    """Min-max rescale to [0, 1]; a constant map becomes all zeros."""
    v = pm.values
    lo, hi = v.min(), v.max()
    if hi == lo:
        return PixelMap(np.zeros_like(v), "normalized")
    return PixelMap((v - lo) / (hi - lo), "normalized")


def lung_image(amplitude: PixelMap, heart_norm: PixelMap, rb: RuleBase) -> PixelMap:
    """Perfusion or ventilation possibility, depending on the rule base given."""
    amp_name = _lung_amplitude_name(rb)
    if amplitude.shape != heart_norm.shape:
        raise RuleBaseMismatch(f"map shapes differ: {amplitude.shape} vs {heart_norm.shape}")
    return _run(rb, {amp_name: amplitude.values, HEART_NORM: heart_norm.values})


def median_image(maps: Sequence[PixelMap]) -> PixelMap:
    """Pixel-wise median; even counts average the two middle values."""
    if not maps:
        raise EmptyInput("median_image needs at least one map")
    kinds = {m.kind for m in maps}
    if len(kinds) != 1:
        raise KindMismatch(f"median_image over mixed kinds {sorted(kinds)}")
    stack = np.stack([m.values for m in maps])
    return PixelMap(np.median(stack, axis=0), maps[0].kind)
