import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eitmap.errors import (
    EmptyInput,
    InputOutOfDomain,
    NoMass,
    NoRuleFired,
    RuleBaseError,
    UnknownVariable,
)
from eitmap.fuzzy import (
    LinguisticVariable,
    MembershipFunction,
    Rule,
    RuleBase,
    defuzz_centroid,
    infer,
    mamdani_evaluate,
    membership_degree,
    rule_base_from_dict,
    rule_base_to_dict,
)
from oracles import oracle_mamdani, oracle_membership, random_inputs, random_rule_base

TRI = MembershipFunction("triangular", (0, 0.5, 1))


def _single(out_term, resolution=101, in_term=("triangular", (0, 0.5, 1))):
    x = LinguisticVariable("x", (0, 1), {"a": MembershipFunction(*in_term)})
    y = LinguisticVariable("y", (0, 1), {"c": out_term})
    return RuleBase((x,), y, (Rule.of({"x": "a"}, "c"),), resolution)


@pytest.mark.parametrize("fn,x,expected", [
    (TRI, 0.5, 1.0),
    (TRI, 0.25, 0.5),
    (MembershipFunction("trapezoidal", (0, 0.2, 0.8, 1)), 0.5, 1.0),
    (MembershipFunction("trapezoidal", (0, 0.2, 0.8, 1)), 0.9, 0.5),
    (TRI, -0.1, 0.0),
    (TRI, 1.0, 0.0),
])
def test_membership_examples(fn, x, expected):
    assert membership_degree(fn, x) == pytest.approx(expected, abs=1e-15)


def test_shoulder_terms():
    left = MembershipFunction("triangular", (0, 0, 0.5))
    right = MembershipFunction("trapezoidal", (0.5, 1, 1, 1))
    assert membership_degree(left, 0.0) == 1.0
    assert membership_degree(left, 0.25) == 0.5
    assert membership_degree(right, 1.0) == 1.0
    assert membership_degree(right, 0.75) == 0.5


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1, 2), min_size=3, max_size=3).map(sorted), st.floats(-1, 2))
def test_membership_matches_oracle(params, x):
    a, b, c = params
    if b - a < 1e-6 or c - b < 1e-6:
        return
    fn = MembershipFunction("triangular", (a, b, c))
    assert fn.degree(x) == pytest.approx(float(oracle_membership("triangular", (a, b, c), x)), abs=1e-12)


def test_bad_membership():
    with pytest.raises(RuleBaseError):
        MembershipFunction("triangular", (0.5, 0.2, 1))
    with pytest.raises(RuleBaseError):
        MembershipFunction("gaussian", (0, 1, 2))
    with pytest.raises(RuleBaseError):
        MembershipFunction("trapezoidal", (0, 1, 2))


def test_centroid_examples():
    xs = np.linspace(0, 1, 101)
    hat = [(x, float(TRI.degree(x))) for x in xs]
    assert abs(defuzz_centroid(hat) - 0.5) <= 1e-12
    assert defuzz_centroid([(0.3, 0.7)]) == 0.3
    assert defuzz_centroid([(x, 1.0) for x in xs]) == 0.5


def test_centroid_no_mass_and_empty():
    with pytest.warns(NoMass):
        assert defuzz_centroid([(0.0, 0.0), (1.0, 0.0)]) == 0.5
    with pytest.raises(EmptyInput):
        defuzz_centroid([])


def test_single_symmetric_rule_centroid():
    assert mamdani_evaluate(_single(TRI), {"x": 0.5}) == 0.5


@settings(max_examples=100, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.01, 0.5), st.sampled_from([101, 100, 33, 2001]))
def test_symmetric_aggregate_centroid(x, width, resolution):
    out = MembershipFunction("triangular", (0.5 - width, 0.5, 0.5 + width))
    rb = _single(out, resolution)
    crisp, empty = infer(rb, {"x": x})
    if not empty:
        assert abs(float(crisp) - 0.5) <= 1e-9


def test_mirrored_rules_centroid():
    x = LinguisticVariable("x", (0, 1), {"a": TRI})
    y = LinguisticVariable("y", (0, 1), {
        "lo": MembershipFunction("triangular", (0, 0.2, 0.4)),
        "hi": MembershipFunction("triangular", (0.6, 0.8, 1)),
    })
    z = LinguisticVariable("z", (0, 1), {"a": TRI})
    rb = RuleBase((x, z), y, (Rule.of({"x": "a"}, "lo"), Rule.of({"z": "a"}, "hi")))
    for v in np.linspace(0.05, 0.95, 19):
        assert abs(mamdani_evaluate(rb, {"x": v, "z": v}) - 0.5) <= 1e-9


def test_no_rule_fired_returns_midpoint():
    rb = _single(TRI, in_term=("triangular", (0.4, 0.5, 0.6)))
    with pytest.warns(NoRuleFired):
        assert mamdani_evaluate(rb, {"x": 0.0}) == 0.5


def test_input_errors():
    rb = _single(TRI)
    with pytest.raises(InputOutOfDomain):
        mamdani_evaluate(rb, {"x": 1.5})
    with pytest.raises(InputOutOfDomain):
        mamdani_evaluate(rb, {"x": float("nan")})
    with pytest.raises(UnknownVariable):
        mamdani_evaluate(rb, {"q": 0.5})
    with pytest.raises(UnknownVariable):
        mamdani_evaluate(rb, {"x": 0.5, "q": 0.5})


def test_rule_base_validation_paths():
    good = rule_base_to_dict(_single(TRI))
    bad = dict(good, rules=[{"if": {"x": "nope"}, "then": "c"}])
    with pytest.raises(RuleBaseError, match=r"rules\[0\]\.if\.x"):
        rule_base_from_dict(bad)
    bad = dict(good, rules=[{"if": {"x": "a"}, "then": "c"}] * 2)
    with pytest.raises(RuleBaseError, match="duplicate"):
        rule_base_from_dict(bad)
    bad = dict(good, rules=[])
    with pytest.raises(RuleBaseError, match="empty"):
        rule_base_from_dict(bad)
    bad = dict(good, output={"name": "y", "domain": [0, 1], "terms": {"c": {"shape": "triangular", "params": [0, 1, 2]}}})
    with pytest.raises(RuleBaseError, match=r"output"):
        rule_base_from_dict(bad)


def test_dict_round_trip():
    rb = rule_base_from_dict(random_rule_base(np.random.default_rng(5)))
    assert rule_base_from_dict(rule_base_to_dict(rb)) == rb


def test_vectorised_matches_scalar():
    rng = np.random.default_rng(9)
    d = random_rule_base(rng)
    rb = rule_base_from_dict(d)
    points = [random_inputs(rng, d) for _ in range(20)]
    batch = {v.name: np.array([p[v.name] for p in points]) for v in rb.inputs}
    crisp, _ = infer(rb, batch)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NoRuleFired)
        single = [mamdani_evaluate(rb, p) for p in points]
    assert np.array_equal(crisp, np.array(single))


def test_oracle_equivalence_1000_cases():
    rng = np.random.default_rng(20240601)
    worst = 0.0
    for _ in range(1000):
        d = random_rule_base(rng)
        rb = rule_base_from_dict(d)
        point = random_inputs(rng, d)
        got, _ = infer(rb, point)
        tol = 2 / rb.resolution
        err = abs(float(got) - oracle_mamdani(d, point))
        worst = max(worst, err / tol)
        assert err <= tol, (d, point)
    assert worst <= 1.0


def test_determinism_bit_identical():
    rng = np.random.default_rng(1)
    d = random_rule_base(rng)
    point = random_inputs(rng, d)
    a, _ = infer(rule_base_from_dict(d), point)
    b, _ = infer(rule_base_from_dict(d), point)
    assert a.tobytes() == b.tobytes()


def test_centroid_within_output_domain():
    rng = np.random.default_rng(2)
    for _ in range(50):
        d = random_rule_base(rng)
        rb = rule_base_from_dict(d)
        y, _ = infer(rb, random_inputs(rng, d))
        lo, hi = rb.output.domain
        assert lo <= float(y) <= hi
