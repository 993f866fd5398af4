import json
from pathlib import Path

import numpy as np
import pytest

from eitmap.dataio import PixelMap
from eitmap.errors import EmptyReference, FullReference
from eitmap.evaluation import (
    auc_trapezoid,
    read_roc_csv,
    roc_curve,
    sensitivity,
    specificity,
    sweep_thresholds,
    write_roc_csv,
)
from oracles import oracle_auc_rank

FIXTURE = json.loads((Path(__file__).parent / "fixtures" / "eval_4x4.json").read_text())


def _ref(rng, p=0.3):
    r = rng.random((32, 32)) < p
    r[0, 0], r[0, 1] = True, False
    return PixelMap(r.astype(float), "binary")


def assert_roc_monotone(curve):
    t, se, sp = curve.thresholds, curve.sensitivities, curve.specificities
    assert np.all(np.diff(t) > 0)
    assert np.all(np.diff(se) <= 0)
    assert np.all(np.diff(sp) >= 0)
    assert 0.0 <= curve.auc <= 1.0


def test_fixture_counts():
    ref = np.array(FIXTURE["reference"], dtype=bool)
    mask = np.array(FIXTURE["mask"], dtype=bool)
    assert ref.sum() == 6 and (~ref).sum() == 10
    assert sensitivity(mask, ref) == FIXTURE["sensitivity"]
    assert specificity(mask, ref) == FIXTURE["specificity"]
    # the same fixture through PixelMaps
    assert sensitivity(PixelMap(mask.astype(float), "binary"), PixelMap(ref.astype(float), "binary")) == 0.5


def test_trivial_cases():
    ref = np.array(FIXTURE["reference"], dtype=bool)
    assert sensitivity(ref, ref) == 1.0 and specificity(ref, ref) == 1.0
    assert sensitivity(~ref, ref) == 0.0
    assert specificity(np.ones_like(ref), ref) == 0.0


def test_degenerate_references():
    with pytest.raises(EmptyReference):
        sensitivity(np.ones((4, 4)), np.zeros((4, 4)))
    with pytest.raises(FullReference):
        specificity(np.ones((4, 4)), np.ones((4, 4)))


def test_default_sweep():
    t = sweep_thresholds()
    assert len(t) == 19
    assert t[0] == 0.1 and t[-1] == 1.0 and t[1] == 0.15


def test_perfect_and_inverted():
    ref = _ref(np.random.default_rng(0))
    perfect = roc_curve(PixelMap(ref.values, "possibility"), ref)
    assert perfect.auc == 1.0
    inverted = roc_curve(PixelMap(1 - ref.values, "possibility"), ref)
    assert inverted.auc == 0.0
    assert_roc_monotone(perfect)
    assert_roc_monotone(inverted)


def test_random_map_auc_near_half():
    rng = np.random.default_rng(42)
    aucs = []
    for _ in range(20):
        ref = _ref(rng)
        curve = roc_curve(PixelMap(rng.random((32, 32)), "possibility"), ref)
        assert_roc_monotone(curve)
        aucs.append(curve.auc)
    assert abs(np.mean(aucs) - 0.5) <= 0.1
    assert all(abs(a - 0.5) <= 0.1 for a in aucs)


def test_dense_sweep_matches_rank_oracle():
    rng = np.random.default_rng(7)
    ref = _ref(rng)
    values = rng.integers(1, 11, size=(32, 32)) / 10
    curve = roc_curve(PixelMap(values, "possibility"), ref, values.min(), values.max(), (values.max() - values.min()) / 200)
    assert curve.auc == pytest.approx(oracle_auc_rank(values, ref.values), abs=1e-12)


@pytest.mark.parametrize("transform", [lambda x: x ** 2, lambda x: 0.2 + 0.5 * x, np.sqrt])
def test_auc_invariant_under_monotone_transform(transform):
    rng = np.random.default_rng(11)
    ref = _ref(rng)
    # informative scores on a coarse lattice so a 200-step sweep sees every cut
    values = np.clip(np.round(ref.values * 0.3 + rng.random((32, 32)) * 0.7, 1), 0.1, 1.0)
    tv = transform(values)

    def dense(v):
        lo, hi = v.min(), v.max()
        return roc_curve(PixelMap(v, "amplitude"), ref, lo, hi, (hi - lo) / 200).auc

    assert dense(tv) == pytest.approx(dense(values), abs=1e-12)


def test_auc_anchor_and_duplicates():
    assert auc_trapezoid([], []) == 0.5
    assert auc_trapezoid([0.0, 0.0], [1.0, 1.0]) == 1.0
    assert auc_trapezoid([0.5, 0.5, 0.5], [0.5, 0.5, 0.5]) == 0.5


def test_roc_csv_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    ref = _ref(rng)
    curve = roc_curve(PixelMap(rng.random((32, 32)), "possibility"), ref)
    write_roc_csv(curve, tmp_path / "roc.csv")
    text = (tmp_path / "roc.csv").read_text()
    assert text.splitlines()[0] == "threshold,sensitivity,specificity"
    assert text.splitlines()[-1].startswith("# auc=")
    assert read_roc_csv(tmp_path / "roc.csv") == curve
