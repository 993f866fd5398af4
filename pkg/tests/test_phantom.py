from dataclasses import replace

import numpy as np
import pytest

from eitmap.errors import ConfigError, RegionOutOfGrid
from eitmap.features import build_features
from eitmap.gating import gated_series, pool_series
from eitmap.phantom import (
    Ellipse,
    PhantomConfig,
    cardiac_pulse,
    generate_phantom,
    noise_chunk,
    region_masks,
    respiratory_wave,
)

SHORT = PhantomConfig(duration_frames=3_000, noise_sigma=0.0)


@pytest.fixture(scope="module")
def clean():
    return generate_phantom(SHORT)


def _features(ds):
    card = pool_series(gated_series(ds.frames, ds.cardiac_triggers, 100))
    resp = pool_series(gated_series(ds.frames, ds.respiratory_triggers, 12))
    return build_features(card, resp)


def test_defaults_match_protocol():
    cfg = PhantomConfig()
    assert (cfg.sample_rate, cfg.duration_frames, cfg.respiratory_rate) == (50.0, 20_000, 20.0)
    assert cfg.cardiac_rate == 100.0 and cfg.lung_perfusion_phase_lag == 0.3
    # noise at 10% of the lung ventilation swing
    assert cfg.noise_sigma == pytest.approx(0.1 * cfg.ventilation_gain)


def test_waveform_extrema():
    phase = np.arange(1000) / 1000
    c = cardiac_pulse(phase)
    r = respiratory_wave(phase)
    assert c.min() == 0.0 and c.max() == 1.0 and phase[np.argmax(c)] == pytest.approx(0.2)
    assert r.min() == 0.0 and r.max() == 1.0 and phase[np.argmax(r)] == 0.5


def test_heart_pixel_period(clean):
    heart = clean.truth_heart.as_bool()
    r, c = np.argwhere(heart)[0]
    series = clean.frames.frames[:, r, c]
    period = int(round(SHORT.sample_rate * 60 / SHORT.cardiac_rate))
    assert np.array_equal(series[:-period], series[period:])
    assert not np.array_equal(series[:-period + 1], series[period - 1:])


def test_triggers_at_cycle_starts(clean):
    assert clean.cardiac_triggers.indices[:3] == (0, 30, 60)
    assert clean.respiratory_triggers.indices[:3] == (0, 150, 300)
    assert len(clean.cardiac_triggers.indices) == 100


def test_non_integer_period_triggers():
    ds = generate_phantom(replace(SHORT, cardiac_rate=70.0, duration_frames=600))
    idx = np.array(ds.cardiac_triggers.indices)
    # 50*60/70 = 42.857... frames per beat
    assert set(np.diff(idx)) <= {42, 43}
    assert len(idx) == 14


def test_pure_lung_amplitude(clean):
    fb = _features(clean)
    resp = pool_series(gated_series(clean.frames, clean.respiratory_triggers, 12))
    rim = clean.truth_lung.as_bool() & ~clean.truth_perfused_lung.as_bool()
    assert rim.any()
    amp = resp.frames.max(axis=0) - resp.frames.min(axis=0)
    assert np.allclose(amp[rim], SHORT.ventilation_gain * 1.0, atol=1e-6)
    # perfused lung peaks at ventilation + lung perfusion gain, which sets the normalisation
    peak = SHORT.ventilation_gain + SHORT.lung_perfusion_gain
    assert np.allclose(fb.ventilation_amplitude.values[rim], SHORT.ventilation_gain / peak, atol=1e-6)


def test_masks_consistent(clean):
    m = region_masks(SHORT)
    heart, lung, perf = (clean.truth_heart.as_bool(), clean.truth_lung.as_bool(),
                         clean.truth_perfused_lung.as_bool())
    assert np.array_equal(heart, m["heart"])
    assert not (heart & lung).any()
    assert not (perf & ~lung).any()
    assert np.array_equal(clean.truth_ventilated_lung.as_bool(), lung)
    assert np.array_equal(clean.saline_reference.values, perf.astype(float))
    # heart sits in the anterior rows only, lungs reach both halves
    assert not heart[16:].any()
    assert lung[:16].any() and lung[16:].any()


def test_noise_free_feature_ordering(clean):
    fb = _features(clean)
    heart = clean.truth_heart.as_bool()
    perf = clean.truth_perfused_lung.as_bool()
    td = fb.time_delay.values
    assert td[heart].max() < td[perf].min()
    amp = fb.perfusion_amplitude.values
    outside = ~(heart | perf)
    assert amp[heart | perf].min() > amp[outside].max()


def test_seed_determinism():
    cfg = replace(SHORT, noise_sigma=0.1, duration_frames=2_500, seed=4)
    a, b = generate_phantom(cfg), generate_phantom(cfg)
    assert a.frames.frames.tobytes() == b.frames.frames.tobytes()
    c = generate_phantom(replace(cfg, seed=5))
    assert a.frames.frames.tobytes() != c.frames.frames.tobytes()


def test_noise_chunks_are_independent_streams():
    full = generate_phantom(replace(SHORT, noise_sigma=1.0, duration_frames=2_000, seed=3))
    base = generate_phantom(replace(SHORT, duration_frames=2_000))
    second = full.frames.frames[1000:2000] - base.frames.frames[1000:2000]
    assert np.allclose(second, noise_chunk(3, 1, 1000).astype(np.float32), atol=1e-5)


def test_region_out_of_grid():
    with pytest.raises(RegionOutOfGrid):
        generate_phantom(replace(SHORT, heart_region=Ellipse(2.0, 15.5, 6.0, 7.0)))


@pytest.mark.parametrize("bad", [{"cardiac_rate": 0}, {"noise_sigma": -1}, {"heart_gain": -0.1}])
def test_invalid_config(bad):
    with pytest.raises(ConfigError):
        generate_phantom(replace(SHORT, **bad))


def test_config_dict_round_trip():
    cfg = replace(PhantomConfig(), seed=9, noise_sigma=0.05)
    assert PhantomConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ConfigError):
        PhantomConfig.from_dict({"bogus": 1})
