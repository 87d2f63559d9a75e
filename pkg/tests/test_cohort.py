import dataclasses

import numpy as np
import pytest
from scipy.signal import detrend

from heartid.cohort import (
    GaussPulse,
    Measurement,
    NuisanceConfig,
    PersonProfile,
    Schedule,
    default_cohort,
    derive_seed,
    displacement,
    generate_cohort,
    hard_cohort,
    render_baseband,
    segment,
    simulate_measurement,
)
from heartid.errors import (
    InvalidDuration,
    InvalidProfile,
    NonDivisibleLength,
    ScheduleEmpty,
)
from heartid.radar import RadarConfig
from heartid.signals import RealSeries, phase_unwrapped

CFG = RadarConfig()


def make_profile(**overrides):
    base = dict(
        id="t1",
        heart_rate_hz=1.25,
        hrv_std=0.02,
        pulse_template=(GaussPulse(1.0, 0.15, 0.04), GaussPulse(-0.4, 0.35, 0.06)),
        resp_rate_hz=0.25,
        resp_amp_m=4e-3,
        heart_amp_m=2e-4,
    )
    base.update(overrides)
    return PersonProfile(**base)


# --- profiles ----------------------------------------------------------------

def test_profile_validation():
    with pytest.raises(InvalidProfile):
        make_profile(heart_rate_hz=2.5)
    with pytest.raises(InvalidProfile):
        make_profile(resp_rate_hz=0.05)
    with pytest.raises(InvalidProfile):
        make_profile(heart_amp_m=1e-3)
    with pytest.raises(InvalidProfile):
        make_profile(resp_amp_m=5e-2)
    with pytest.raises(InvalidProfile):
        make_profile(pulse_template=())
    with pytest.raises(InvalidProfile):
        make_profile(pulse_template=(GaussPulse(np.inf, 0.1, 0.05),))


def test_presets_are_valid_and_distinct():
    for preset in (default_cohort(), hard_cohort()):
        assert len(preset) == 6
        assert len({p.id for p in preset}) == 6
    rates = [p.heart_rate_hz for p in hard_cohort()]
    assert max(rates) - min(rates) <= 0.2  # overlapping band by design


# --- displacement -------------------------------------------------------------

def test_displacement_without_heartbeat_is_pure_sinusoid():
    # zero-amplitude template lobes silence the heartbeat term while staying
    # inside the profile's amplitude invariants
    profile = make_profile(pulse_template=(GaussPulse(0.0, 0.15, 0.04),), hrv_std=0.0)
    d = displacement(profile, duration=20.0, fs=100.0, seed=3)
    t = np.arange(len(d)) / d.fs
    # fit amplitude/phase of the single tone and compare pointwise
    w = 2 * np.pi * profile.resp_rate_hz
    basis = np.stack([np.sin(w * t), np.cos(w * t)], axis=1)
    coef, *_ = np.linalg.lstsq(basis, d.samples, rcond=None)
    amp = np.hypot(*coef)
    assert abs(amp - profile.resp_amp_m) <= 1e-9 * profile.resp_amp_m
    assert np.max(np.abs(basis @ coef - d.samples)) <= 1e-12


def test_displacement_zero_jitter_is_periodic():
    # heart rate 1.25 Hz at fs 100 gives an 80-sample beat period exactly;
    # isolate the heartbeat by differencing against a muted-template twin
    fs, duration = 100.0, 20.0
    kwargs = dict(duration=duration, fs=fs, seed=11)
    loud = displacement(make_profile(hrv_std=0.0), **kwargs)
    mute = displacement(
        make_profile(hrv_std=0.0, pulse_template=(GaussPulse(0.0, 0.15, 0.04), GaussPulse(0.0, 0.35, 0.06))),
        **kwargs,
    )
    heartbeat = loud.samples - mute.samples
    period = int(fs / 1.25)
    interior = heartbeat[period : -2 * period]
    shifted = heartbeat[2 * period : -period]
    scale = np.max(np.abs(heartbeat))
    assert np.max(np.abs(interior - shifted)) <= 1e-9 * scale


@pytest.mark.parametrize("profile", default_cohort(), ids=lambda p: p.id)
@pytest.mark.parametrize("seed", [0, 1])
def test_displacement_spectral_line_at_heart_rate(profile, seed):
    from scipy.signal import butter, filtfilt, get_window

    d = displacement(profile, duration=60.0, fs=100.0, seed=seed)
    b, a = butter(4, [0.7, 2.0], btype="bandpass", fs=d.fs)
    x = filtfilt(b, a, d.samples - d.samples.mean())
    spec = np.abs(np.fft.rfft(x * get_window("hann", x.size), n=1 << 17))
    freqs = np.fft.rfftfreq(1 << 17, d=1.0 / d.fs)
    band = (freqs >= 0.7) & (freqs <= 2.0)
    peak = freqs[band][np.argmax(spec[band])]
    assert abs(peak - profile.heart_rate_hz) <= 0.02


def test_displacement_invalid_duration():
    with pytest.raises(InvalidDuration):
        displacement(make_profile(), duration=0.0)


def test_displacement_deterministic():
    a = displacement(make_profile(), seed=42)
    b = displacement(make_profile(), seed=42)
    assert np.array_equal(a.samples, b.samples)


# --- rendering ----------------------------------------------------------------

def test_render_baseband_zero_displacement():
    d = RealSeries(np.zeros(100) + 0.0, 100.0)
    s = render_baseband(d, CFG, snr_db=None)
    assert np.all(s.samples == 1.0 + 0.0j)


def test_render_baseband_eighth_wavelength_step():
    d = np.zeros(100)
    d[50:] = CFG.wavelength / 8
    s = render_baseband(RealSeries(d, 100.0), CFG, snr_db=None)
    step = np.angle(s.samples[60]) - np.angle(s.samples[10])
    assert abs(step - np.pi / 2) <= 1e-12


def test_render_roundtrip_recovers_displacement():
    profile = make_profile()
    d = displacement(profile, duration=30.0, fs=100.0, seed=5)
    d0 = RealSeries(d.samples - d.samples[0], d.fs)  # start at zero phase
    s = render_baseband(d0, CFG, snr_db=None)
    recovered = phase_unwrapped(s).samples * CFG.wavelength / (4 * np.pi)
    assert np.max(np.abs(recovered - d0.samples)) <= 1e-9


def test_render_noise_scales_with_snr():
    d = RealSeries(np.zeros(20000), 100.0)
    for snr in (0.0, 10.0, 20.0):
        s = render_baseband(d, CFG, snr_db=snr, seed=8)
        noise_power = np.mean(np.abs(s.samples - 1.0) ** 2)
        assert abs(noise_power - 10 ** (-snr / 10)) <= 0.05 * 10 ** (-snr / 10)


# --- cohort generation ---------------------------------------------------------

def test_cohort_has_paper_protocol_shape():
    ms = generate_cohort(default_cohort(), duration=2.0, snr_db=None)
    assert len(ms) == 300  # 6 people x 10 sessions x 5 repetitions
    labels = {m.label for m in ms}
    sessions = {m.session_id for m in ms}
    assert len(labels) == 6 and len(sessions) == 10
    assert {m.repetition for m in ms} == {1, 2, 3, 4, 5}


def test_cohort_deterministic_and_seed_sensitive():
    kwargs = dict(duration=2.0, snr_db=15.0)
    a = generate_cohort(default_cohort(), seed=1, **kwargs)
    b = generate_cohort(default_cohort(), seed=1, **kwargs)
    c = generate_cohort(default_cohort(), seed=2, **kwargs)
    for ma, mb, mc in zip(a, b, c):
        assert np.array_equal(ma.signal.samples, mb.signal.samples)
        assert (ma.label, ma.session_id, ma.repetition) == (
            mc.label,
            mc.session_id,
            mc.repetition,
        )
        assert not np.array_equal(ma.signal.samples, mc.signal.samples)


def test_cohort_session_nuisance_varies():
    ms = generate_cohort(default_cohort()[:2], duration=2.0, snr_db=None, seed=0)
    by_session = {}
    for m in ms:
        if m.label == "p1":
            by_session.setdefault(m.session_id, m)
    amps = [np.abs(m.signal.samples[0]) for m in by_session.values()]
    assert np.std(amps) > 0.01  # amplitude scale differs across sessions


def test_cohort_requires_two_profiles_and_schedule():
    with pytest.raises(InvalidProfile):
        generate_cohort(default_cohort()[:1])
    with pytest.raises(ScheduleEmpty):
        generate_cohort(default_cohort(), Schedule(days=0))


def test_cube_mode_matches_baseband_phase():
    profile = make_profile()
    kwargs = dict(seed=21, snr_db=20.0, duration=15.0)
    m_bb, d = simulate_measurement(profile, "d1am", 1, mode="baseband", **kwargs)
    m_cube, d2 = simulate_measurement(profile, "d1am", 1, mode="cube", **kwargs)
    assert np.array_equal(d.samples, d2.samples)  # same injected displacement
    from heartid.radar import extract_slow_time

    sel = extract_slow_time(m_cube.signal)
    ph_cube = detrend(phase_unwrapped(sel.series).samples)
    ph_bb = detrend(phase_unwrapped(m_bb.signal).samples)
    assert np.corrcoef(ph_cube, ph_bb)[0, 1] >= 0.99


# --- segmentation ---------------------------------------------------------------

def test_segment_counts():
    m, _ = simulate_measurement(make_profile(), "d1am", 1, duration=60.0, snr_db=None)
    parts = segment(m, 5.0)
    assert len(parts) == 12
    assert all(p.duration == 5.0 for p in parts)
    assert all(p.label == m.label and p.session_id == m.session_id for p in parts)
    joined = np.concatenate([p.signal.samples for p in parts])
    assert np.array_equal(joined, m.signal.samples)


def test_segment_full_length_is_identity():
    m, _ = simulate_measurement(make_profile(), "d1am", 1, duration=10.0, snr_db=None)
    parts = segment(m, 10.0)
    assert len(parts) == 1
    assert np.array_equal(parts[0].signal.samples, m.signal.samples)


def test_segment_non_divisible_length():
    m, _ = simulate_measurement(make_profile(), "d1am", 1, duration=60.0, snr_db=None)
    with pytest.raises(NonDivisibleLength):
        segment(m, 7.0)


def test_segment_cube_mode():
    m, _ = simulate_measurement(
        make_profile(), "d1am", 1, duration=4.0, snr_db=None, mode="cube"
    )
    parts = segment(m, 2.0)
    assert len(parts) == 2
    assert parts[0].signal.n_slow == 200


# --- seeds ----------------------------------------------------------------------

def test_derive_seed_stable_and_distinct():
    assert derive_seed(1, "a", 2) == derive_seed(1, "a", 2)
    assert derive_seed(1, "a", 2) != derive_seed(1, "a", 3)
    assert derive_seed(1, "ab") != derive_seed(1, "a", "b")
