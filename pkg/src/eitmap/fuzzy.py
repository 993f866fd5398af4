"""Mamdani inference driven by a declarative rule base.

Operators: min for AND, min (clipping) for implication, max for
aggregation, centre of area over a uniformly sampled output domain.

Rule base JSON layout::

    {
      "name": "lung_perfusion",
      "inputs": [
        {"name": "perfusion_amplitude", "domain": [0, 1],
         "terms": {"low": {"shape": "triangular", "params": [0, 0, 0.5]}, ...}},
        ...
      ],
      "output": {"name": "perfusion_possibility", "domain": [0, 1], "terms": {...}},
      "rules": [{"if": {"perfusion_amplitude": "high", ...}, "then": "high"}, ...],
      "resolution": 101
    }

``shape`` is ``triangular`` (3 params) or ``trapezoidal`` (4 params),
breakpoints non-decreasing. A rule may leave a variable out, which means
the variable does not constrain it.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import EmptyInput, InputOutOfDomain, NoMass, NoRuleFired, RuleBaseError, UnknownVariable

SHAPES = {"triangular": 3, "trapezoidal": 4}
DEFAULT_RESOLUTION = 101


@dataclass(frozen=True)
class MembershipFunction:
    shape: str
    params: tuple[float, ...]

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise RuleBaseError(f"unknown membership shape {self.shape!r}")
        p = tuple(float(x) for x in self.params)
        if len(p) != SHAPES[self.shape]:
            raise RuleBaseError(f"{self.shape} needs {SHAPES[self.shape]} params, got {len(p)}")
        if any(b < a for a, b in zip(p, p[1:])):
            raise RuleBaseError(f"breakpoints must be non-decreasing, got {p}")
        object.__setattr__(self, "params", p)

    @property
    def support(self) -> tuple[float, float]:
        return self.params[0], self.params[-1]

    def degree(self, x):
        """Membership degree; works on scalars and arrays."""
        x = np.asarray(x, dtype=np.float64)
        if self.shape == "triangular":
            a, b, c = self.params
            left, right = (a, b), (b, c)
        else:
            a, b, c, d = self.params
            left, right = (a, b), (c, d)
        mu = np.zeros_like(x)
        top = (x >= left[1]) & (x <= right[0])
        mu[top] = 1.0
        rising = (x > left[0]) & (x < left[1])
        mu[rising] = (x[rising] - left[0]) / (left[1] - left[0])
        falling = (x > right[0]) & (x < right[1])
        mu[falling] = (right[1] - x[falling]) / (right[1] - right[0])
        return mu if mu.ndim else float(mu)


def membership_degree(fn: MembershipFunction, x: float) -> float:
    return float(fn.degree(x))


@dataclass(frozen=True)
class LinguisticVariable:
    name: str
    domain: tuple[float, float]
    terms: Mapping[str, MembershipFunction]

    def __post_init__(self):
        lo, hi = (float(v) for v in self.domain)
        if not lo < hi:
            raise RuleBaseError(f"{self.name}: empty domain {self.domain}")
        if not self.terms:
            raise RuleBaseError(f"{self.name}: needs at least one term")
        for term, mf in self.terms.items():
            a, b = mf.support
            if a < lo - 1e-12 or b > hi + 1e-12:
                raise RuleBaseError(f"{self.name}.{term}: support {mf.support} outside domain {(lo, hi)}")
        object.__setattr__(self, "domain", (lo, hi))
        object.__setattr__(self, "terms", dict(self.terms))


@dataclass(frozen=True)
class Rule:
    antecedents: tuple[tuple[str, str], ...]
    consequent: str

    @classmethod
    def of(cls, antecedents: Mapping[str, str], consequent: str) -> "Rule":
        return cls(tuple(sorted(antecedents.items())), consequent)


@dataclass(frozen=True)
class RuleBase:
    inputs: tuple[LinguisticVariable, ...]
    output: LinguisticVariable
    rules: tuple[Rule, ...]
    resolution: int = DEFAULT_RESOLUTION
    name: str = "rule_base"

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "rules", tuple(self.rules))
        if self.resolution < 2:
            raise RuleBaseError("resolution must be at least 2")
        if not self.rules:
            raise RuleBaseError("rule list is empty")
        by_name = {v.name: v for v in self.inputs}
        if len(by_name) != len(self.inputs):
            raise RuleBaseError("duplicate input variable names")
        seen = set()
        for i, rule in enumerate(self.rules):
            if rule.antecedents in seen:
                raise RuleBaseError(f"rules[{i}]: duplicate antecedent combination")
            seen.add(rule.antecedents)
            if not rule.antecedents:
                raise RuleBaseError(f"rules[{i}]: no antecedents")
            for var, term in rule.antecedents:
                if var not in by_name:
                    raise RuleBaseError(f"rules[{i}].if.{var}: unknown input variable")
                if term not in by_name[var].terms:
                    raise RuleBaseError(f"rules[{i}].if.{var}: unknown term {term!r}")
            if rule.consequent not in self.output.terms:
                raise RuleBaseError(f"rules[{i}].then: unknown output term {rule.consequent!r}")

    @property
    def input_names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.inputs)

    def variable(self, name: str) -> LinguisticVariable:
        for v in self.inputs:
            if v.name == name:
                return v
        raise UnknownVariable(f"{self.name}: no input variable {name!r}")

    def output_grid(self) -> tuple[np.ndarray, float, float, np.ndarray]:
        """Sample points ``x = mid + half*u`` with ``u`` exactly symmetric in [-1, 1]."""
        lo, hi = self.output.domain
        mid, half = (lo + hi) / 2, (hi - lo) / 2
        n = self.resolution
        u = (2.0 * np.arange(n) - (n - 1)) / (n - 1)
        return mid + half * u, mid, half, u


# --- inference -------------------------------------------------------------------

def _centroid_offset(offsets: np.ndarray, mu: np.ndarray) -> tuple[float, float]:
    return math.fsum(offsets * mu), math.fsum(mu)


def defuzz_centroid(samples: Sequence[tuple[float, float]]) -> float:
    """Centre of area of sampled ``(x, mu)`` pairs.

    Zero total mass returns the midpoint of the x-range and warns ``NoMass``.
    """
    if len(samples) == 0:
        raise EmptyInput("defuzz_centroid needs at least one sample")
    arr = np.asarray(samples, dtype=np.float64).reshape(-1, 2)
    x, mu = arr[:, 0], arr[:, 1]
    mid = (x.min() + x.max()) / 2
    num, den = _centroid_offset(x - mid, mu)
    if den == 0:
        warnings.warn(NoMass("all membership degrees are zero"), stacklevel=2)
        return float(mid)
    return float(mid + num / den)


def _check_inputs(rb: RuleBase, inputs: Mapping[str, object]) -> dict[str, np.ndarray]:
    extra = set(inputs) - set(rb.input_names)
    if extra:
        raise UnknownVariable(f"{rb.name}: unknown input variable(s) {sorted(extra)}")
    missing = set(rb.input_names) - set(inputs)
    if missing:
        raise UnknownVariable(f"{rb.name}: missing input variable(s) {sorted(missing)}")
    arrays = {k: np.asarray(v, dtype=np.float64) for k, v in inputs.items()}
    shape = np.broadcast_shapes(*(a.shape for a in arrays.values()))
    out = {}
    for var in rb.inputs:
        a = np.broadcast_to(arrays[var.name], shape).ravel()
        lo, hi = var.domain
        if a.size and (not np.all(np.isfinite(a)) or a.min() < lo or a.max() > hi):
            raise InputOutOfDomain(f"{rb.name}: {var.name} outside domain [{lo}, {hi}]")
        out[var.name] = a
    return out


def infer(rb: RuleBase, inputs: Mapping[str, object]) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised Mamdani evaluation.

    ``inputs`` maps variable name to a scalar or array; arrays broadcast.
    Returns ``(crisp, no_rule_fired)`` with the broadcast shape.
    """
    arrays = _check_inputs(rb, inputs)
    shape = np.broadcast_shapes(*(np.shape(v) for v in inputs.values()))
    n = next(iter(arrays.values())).size if arrays else 1
    xs, mid, half, u = rb.output_grid()

    degrees = {
        var.name: {t: mf.degree(arrays[var.name]) for t, mf in var.terms.items()}
        for var in rb.inputs
    }
    out_mu = {t: mf.degree(xs) for t, mf in rb.output.terms.items()}

    agg = np.zeros((n, xs.size))
    for rule in rb.rules:
        w = np.ones(n)
        for var, term in rule.antecedents:
            np.minimum(w, degrees[var][term], out=w)
        np.maximum(agg, np.minimum(w[:, None], out_mu[rule.consequent][None, :]), out=agg)

    weighted = agg * u
    crisp = np.empty(n)
    empty = np.zeros(n, dtype=bool)
    for i in range(n):
        num, den = math.fsum(weighted[i]), math.fsum(agg[i])
        if den == 0:
            crisp[i], empty[i] = mid, True
        else:
            crisp[i] = mid + half * (num / den)
    return crisp.reshape(shape), empty.reshape(shape)


def mamdani_evaluate(rb: RuleBase, inputs: Mapping[str, float]) -> float:
    """Crisp output for one input point; warns ``NoRuleFired`` on empty aggregates."""
    crisp, empty = infer(rb, inputs)
    if bool(np.any(empty)):
        warnings.warn(NoRuleFired(f"{rb.name}: no rule fired for {dict(inputs)}"), stacklevel=2)
    return float(crisp.reshape(-1)[0])


# --- config files -------------------------------------------------------------------

def _variable_from_dict(d, path: str) -> LinguisticVariable:
    if not isinstance(d, dict):
        raise RuleBaseError(f"{path}: expected an object")
    for key in ("name", "domain", "terms"):
        if key not in d:
            raise RuleBaseError(f"{path}.{key}: missing")
    dom = d["domain"]
    if not (isinstance(dom, list) and len(dom) == 2 and all(isinstance(x, (int, float)) for x in dom)):
        raise RuleBaseError(f"{path}.domain: expected [lo, hi]")
    if not isinstance(d["terms"], dict) or not d["terms"]:
        raise RuleBaseError(f"{path}.terms: expected a non-empty object")
    terms = {}
    for tname, t in d["terms"].items():
        tpath = f"{path}.terms.{tname}"
        if not isinstance(t, dict) or "shape" not in t or "params" not in t:
            raise RuleBaseError(f"{tpath}: expected {{shape, params}}")
        params = t["params"]
        if not (isinstance(params, list) and all(isinstance(x, (int, float)) for x in params)):
            raise RuleBaseError(f"{tpath}.params: expected a list of numbers")
        try:
            terms[tname] = MembershipFunction(t["shape"], tuple(params))
        except RuleBaseError as exc:
            raise RuleBaseError(f"{tpath}: {exc}") from None
    try:
        return LinguisticVariable(str(d["name"]), tuple(dom), terms)
    except RuleBaseError as exc:
        raise RuleBaseError(f"{path}: {exc}") from None


def rule_base_from_dict(d: Mapping) -> RuleBase:
    if not isinstance(d, Mapping):
        raise RuleBaseError("<root>: expected an object")
    for key in ("inputs", "output", "rules"):
        if key not in d:
            raise RuleBaseError(f"{key}: missing")
    if not isinstance(d["inputs"], list) or not d["inputs"]:
        raise RuleBaseError("inputs: expected a non-empty list")
    inputs = [_variable_from_dict(v, f"inputs[{i}]") for i, v in enumerate(d["inputs"])]
    output = _variable_from_dict(d["output"], "output")
    if not isinstance(d["rules"], list):
        raise RuleBaseError("rules: expected a list")
    rules = []
    for i, r in enumerate(d["rules"]):
        if not isinstance(r, dict) or not isinstance(r.get("if"), dict) or not isinstance(r.get("then"), str):
            raise RuleBaseError(f"rules[{i}]: expected {{'if': {{var: term}}, 'then': term}}")
        rules.append(Rule.of(r["if"], r["then"]))
    resolution = d.get("resolution", DEFAULT_RESOLUTION)
    if not isinstance(resolution, int) or isinstance(resolution, bool):
        raise RuleBaseError("resolution: expected an integer")
    return RuleBase(tuple(inputs), output, tuple(rules), resolution, str(d.get("name", "rule_base")))


def rule_base_to_dict(rb: RuleBase) -> dict:
    def var(v: LinguisticVariable) -> dict:
        return {
            "name": v.name,
            "domain": list(v.domain),
            "terms": {t: {"shape": mf.shape, "params": list(mf.params)} for t, mf in v.terms.items()},
        }

    return {
        "name": rb.name,
        "inputs": [var(v) for v in rb.inputs],
        "output": var(rb.output),
        "rules": [{"if": dict(r.antecedents), "then": r.consequent} for r in rb.rules],
        "resolution": rb.resolution,
    }


def load_rule_base(path) -> RuleBase:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise RuleBaseError(f"{path}: invalid JSON ({exc})") from exc
    try:
        return rule_base_from_dict(doc)
    except RuleBaseError as exc:
        raise RuleBaseError(f"{path}: {exc}") from None
