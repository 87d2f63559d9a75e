"""Synthetic vital-sign cohort: chest displacement, baseband/cube rendering.

Stands in for a measured multi-session cohort.  Each simulated person has a
mean heart rate, beat-period jitter, a sum-of-Gaussians per-beat displacement
template (the waveform shape that makes people distinguishable), and a
respiration component.  Measurements follow a days x (am/pm) x repetitions
schedule with per-session nuisance variation so cross-validation folds are
non-trivially distinct.  Everything is a pure function of the seed.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InvalidDuration,
    InvalidProfile,
    NonDivisibleLength,
    ScheduleEmpty,
)
from .radar import DataCube, RadarConfig
from .signals import ComplexSeries, RealSeries

DEFAULT_DURATION = 60.0
DEFAULT_FS = 100.0


def derive_seed(*parts) -> int:
    """Stable 64-bit seed from arbitrary labeled parts (hash-seed independent)."""
    text = "\x1f".join(str(p) for p in parts)
    digest = hashlib.blake2b(text.encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


@dataclass(frozen=True)
class GaussPulse:
    """One Gaussian lobe of the per-beat displacement template.

    Amplitude is relative (the profile's ``heart_amp_m`` sets the physical
    scale); center and width are fractions of the beat period.
    """

    amplitude: float
    center: float
    width: float


@dataclass(frozen=True)
class PersonProfile:
    """Physiological parameters of one simulated participant."""

    id: str
    heart_rate_hz: float
    hrv_std: float
    pulse_template: tuple[GaussPulse, ...]
    resp_rate_hz: float
    resp_amp_m: float
    heart_amp_m: float
    drift_amp_m: float = 0.0

    def __post_init__(self):
        if not 0.7 <= self.heart_rate_hz <= 2.0:
            raise InvalidProfile(f"heart rate {self.heart_rate_hz} outside 0.7-2.0 Hz")
        if not 0.1 <= self.resp_rate_hz <= 0.5:
            raise InvalidProfile(f"resp rate {self.resp_rate_hz} outside 0.1-0.5 Hz")
        if not 1e-5 <= self.heart_amp_m <= 5e-4:
            raise InvalidProfile(f"heart amplitude {self.heart_amp_m} outside 1e-5-5e-4 m")
        if not 1e-3 <= self.resp_amp_m <= 1e-2:
            raise InvalidProfile(f"resp amplitude {self.resp_amp_m} outside 1e-3-1e-2 m")
        if self.hrv_std < 0:
            raise InvalidProfile("beat-period jitter must be nonnegative")
        if not self.pulse_template:
            raise InvalidProfile("pulse template must have at least one lobe")
        for lobe in self.pulse_template:
            if not (np.isfinite(lobe.amplitude) and lobe.width > 0):
                raise InvalidProfile("pulse template lobes must be finite with width > 0")


@dataclass(frozen=True)
class Measurement:
    """One recorded sample: the rendered signal plus its bookkeeping labels."""

    signal: ComplexSeries | DataCube
    label: str
    session_id: str
    repetition: int

    @property
    def duration(self) -> float:
        return self.signal.duration

    @property
    def is_cube(self) -> bool:
        return isinstance(self.signal, DataCube)


@dataclass(frozen=True)
class Schedule:
    """Measurement plan: one session per (day, half-day), several repetitions."""

    days: int = 5
    repetitions: int = 5

    @property
    def sessions(self) -> list[str]:
        return [f"d{d}{h}" for d in range(1, self.days + 1) for h in ("am", "pm")]


@dataclass(frozen=True)
class NuisanceConfig:
    """Per-session variability: amplitude scale, phase offset, rate drift."""

    amp_scale_sigma: float = 0.15
    rate_drift_max: float = 0.05
    random_phase: bool = True


def _pink_drift(rng: np.random.Generator, n: int, fs: float, amp: float) -> np.ndarray:
    """Zero-mean 1/f drift with the requested RMS amplitude."""
    white = rng.standard_normal(n)
    spectrum = np.fft.rfft(white)
    f = np.fft.rfftfreq(n, d=1.0 / fs)
    f[0] = f[1] if n > 1 else 1.0
    shaped = np.fft.irfft(spectrum / np.sqrt(f), n)
    rms = np.sqrt(np.mean(shaped**2))
    if rms == 0:
        return np.zeros(n)
    return amp * (shaped - shaped.mean()) / rms


def displacement(
    profile: PersonProfile,
    duration: float = DEFAULT_DURATION,
    fs: float = DEFAULT_FS,
    seed: int = 0,
    rate_scale: float = 1.0,
) -> RealSeries:
    """Chest displacement d(t): respiration sinusoid plus a jittered pulse train.

    Beat onsets are spaced by 1/heart_rate plus Gaussian jitter (hrv_std);
    each beat stamps the profile's Gaussian template, scaled by heart_amp_m.
    Deterministic given the seed.
    """
    if duration <= 0:
        raise InvalidDuration(f"duration must be positive, got {duration}")
    rng = np.random.default_rng(seed)
    n = int(round(duration * fs))
    t = np.arange(n) / fs

    resp_phase = rng.uniform(0.0, 2.0 * np.pi)
    d = profile.resp_amp_m * np.sin(2.0 * np.pi * profile.resp_rate_hz * t + resp_phase)

    rate = profile.heart_rate_hz * rate_scale
    period = 1.0 / rate
    # Start one beat before t=0 so the record begins mid-rhythm.
    onset = rng.uniform(0.0, period) - period
    heartbeat = np.zeros(n)
    while onset < duration:
        for lobe in profile.pulse_template:
            mu = onset + lobe.center * period
            sigma = lobe.width * period
            lo = max(0, int(np.floor((mu - 5 * sigma) * fs)))
            hi = min(n, int(np.ceil((mu + 5 * sigma) * fs)) + 1)
            if lo < hi:
                heartbeat[lo:hi] += lobe.amplitude * np.exp(
                    -0.5 * ((t[lo:hi] - mu) / sigma) ** 2
                )
        # max() guards against pathological jitter producing non-advancing beats
        onset += max(0.25 * period, period + rng.normal(0.0, profile.hrv_std))
    d += profile.heart_amp_m * heartbeat

    if profile.drift_amp_m > 0:
        d += _pink_drift(rng, n, fs, profile.drift_amp_m)
    return RealSeries(d, fs)


def render_baseband(
    d: RealSeries,
    cfg: RadarConfig,
    snr_db: float | None = None,
    seed: int = 0,
    amp_scale: float = 1.0,
    phase_offset: float = 0.0,
) -> ComplexSeries:
    """Displacement to unit-amplitude baseband: s(t) = exp(j 4 pi d(t)/lambda).

    Complex circular Gaussian noise is added with power 10^(-snr_db/10)
    relative to the unit carrier; ``snr_db=None`` renders noiselessly.
    """
    phase = 4.0 * np.pi * d.samples / cfg.wavelength + phase_offset
    s = amp_scale * np.exp(1j * phase)
    if snr_db is not None:
        rng = np.random.default_rng(seed)
        sigma = np.sqrt(10.0 ** (-snr_db / 10.0) / 2.0)
        s = s + sigma * (
            rng.standard_normal(len(d)) + 1j * rng.standard_normal(len(d))
        )
    return ComplexSeries(s, d.fs)


def render_cube(
    d: RealSeries,
    cfg: RadarConfig,
    snr_db: float | None = None,
    seed: int = 0,
    range_m: float = 1.5,
    angle_deg: float = 0.0,
    amp_scale: float = 1.0,
    phase_offset: float = 0.0,
) -> DataCube:
    """Render displacement as a full FMCW data cube (stop-and-go beat model).

    Per chirp, the target at R = range_m + d(t) produces a beat tone at
    2 B R / (c T_chirp) with carrier phase 4 pi R / lambda, replicated across
    the virtual array with half-wavelength steering phases.  Doppler within a
    chirp is neglected (chest velocity is negligible at this timescale).
    """
    from scipy.constants import c as c_light

    n_slow = len(d)
    r = range_m + d.samples  # (slow,)
    if np.any(r >= cfg.max_range):
        raise InvalidDuration(
            f"target range {r.max():g} m exceeds the unambiguous "
            f"span {cfg.max_range:g} m"
        )
    t_fast = np.arange(cfg.n_fast) * (cfg.chirp_duration / cfg.n_fast)
    f_beat = 2.0 * cfg.bandwidth * r / (c_light * cfg.chirp_duration)
    carrier = 4.0 * np.pi * r / cfg.wavelength + phase_offset
    elem = (
        2.0
        * np.pi
        * (cfg.element_spacing / cfg.wavelength)
        * np.sin(np.radians(angle_deg))
        * np.arange(cfg.n_virtual)
    )
    phase = (
        2.0 * np.pi * f_beat[:, None, None] * t_fast[None, None, :]
        + carrier[:, None, None]
        + elem[None, :, None]
    )
    cube = amp_scale * np.exp(1j * phase)
    if snr_db is not None:
        rng = np.random.default_rng(seed)
        sigma = np.sqrt(10.0 ** (-snr_db / 10.0) / 2.0)
        cube = cube + sigma * (
            rng.standard_normal(cube.shape) + 1j * rng.standard_normal(cube.shape)
        )
    return DataCube(cube, cfg)


def session_nuisance(
    profile_id: str, session_id: str, seed: int, nuisance: NuisanceConfig
) -> tuple[float, float, float]:
    """Deterministic (amp_scale, phase_offset, rate_scale) for one session."""
    rng = np.random.default_rng(derive_seed(seed, "session", profile_id, session_id))
    amp_scale = float(np.exp(rng.normal(0.0, nuisance.amp_scale_sigma)))
    phase_offset = float(rng.uniform(0.0, 2.0 * np.pi)) if nuisance.random_phase else 0.0
    rate_scale = float(
        1.0 + rng.uniform(-nuisance.rate_drift_max, nuisance.rate_drift_max)
    )
    return amp_scale, phase_offset, rate_scale


def simulate_measurement(
    profile: PersonProfile,
    session_id: str,
    repetition: int,
    seed: int = 0,
    snr_db: float | None = 20.0,
    duration: float = DEFAULT_DURATION,
    fs: float = DEFAULT_FS,
    mode: str = "baseband",
    radar: RadarConfig | None = None,
    nuisance: NuisanceConfig | None = None,
) -> tuple[Measurement, RealSeries]:
    """Generate one measurement; also returns the injected displacement truth."""
    if mode not in ("baseband", "cube"):
        raise ValueError(f"mode must be baseband or cube, got {mode!r}")
    radar = radar or RadarConfig(fs_slow=fs)
    nuisance = nuisance or NuisanceConfig()
    amp_scale, phase_offset, rate_scale = session_nuisance(
        profile.id, session_id, seed, nuisance
    )
    d_seed = derive_seed(seed, "disp", profile.id, session_id, repetition)
    n_seed = derive_seed(seed, "noise", profile.id, session_id, repetition)
    d = displacement(profile, duration, fs, d_seed, rate_scale)
    if mode == "baseband":
        signal: ComplexSeries | DataCube = render_baseband(
            d, radar, snr_db, n_seed, amp_scale, phase_offset
        )
    else:
        signal = render_cube(
            d, radar, snr_db, n_seed, amp_scale=amp_scale, phase_offset=phase_offset
        )
    return Measurement(signal, profile.id, session_id, repetition), d


def generate_cohort(
    profiles: list[PersonProfile],
    schedule: Schedule | None = None,
    snr_db: float | None = 20.0,
    seed: int = 0,
    mode: str = "baseband",
    duration: float = DEFAULT_DURATION,
    fs: float = DEFAULT_FS,
    radar: RadarConfig | None = None,
    nuisance: NuisanceConfig | None = None,
) -> list[Measurement]:
    """One measurement per (profile, session, repetition), deterministic in seed."""
    if len(profiles) < 2:
        raise InvalidProfile("a cohort needs at least two profiles")
    schedule = schedule or Schedule()
    if schedule.days < 1 or schedule.repetitions < 1:
        raise ScheduleEmpty("schedule must contain at least one session and repetition")
    out = []
    for profile in profiles:
        for session_id in schedule.sessions:
            for rep in range(1, schedule.repetitions + 1):
                m, _ = simulate_measurement(
                    profile,
                    session_id,
                    rep,
                    seed=seed,
                    snr_db=snr_db,
                    duration=duration,
                    fs=fs,
                    mode=mode,
                    radar=radar,
                    nuisance=nuisance,
                )
                out.append(m)
    return out


def segment(m: Measurement, seg_len: float) -> list[Measurement]:
    """Split a measurement into contiguous non-overlapping segments.

    ``seg_len`` must divide the duration exactly; labels and session are
    inherited by every segment.
    """
    if seg_len <= 0:
        raise NonDivisibleLength(f"segment length must be positive, got {seg_len}")
    n_seg = m.duration / seg_len
    if abs(n_seg - round(n_seg)) > 1e-9 or round(n_seg) < 1:
        raise NonDivisibleLength(
            f"segment length {seg_len} s does not divide {m.duration} s"
        )
    n_seg = int(round(n_seg))
    if m.is_cube:
        cube: DataCube = m.signal
        step = cube.n_slow // n_seg
        parts = [
            DataCube(cube.values[i * step : (i + 1) * step], cube.config)
            for i in range(n_seg)
        ]
    else:
        series: ComplexSeries = m.signal
        step = len(series) // n_seg
        parts = [
            ComplexSeries(
                series.samples[i * step : (i + 1) * step],
                series.fs,
                series.t0 + i * step / series.fs,
            )
            for i in range(n_seg)
        ]
    return [Measurement(p, m.label, m.session_id, m.repetition) for p in parts]


def default_cohort() -> list[PersonProfile]:
    """Six well-separated participants: spread heart rates, distinct templates."""
    return [
        PersonProfile(
            "p1", 0.92, 0.020,
            (GaussPulse(1.0, 0.15, 0.060), GaussPulse(0.35, 0.45, 0.090)),
            0.22, 4.5e-3, 2.2e-4,
        ),
        PersonProfile(
            "p2", 1.10, 0.015,
            (GaussPulse(0.90, 0.10, 0.050), GaussPulse(0.55, 0.42, 0.045)),
            0.18, 5.5e-3, 1.6e-4,
        ),
        PersonProfile(
            "p3", 1.28, 0.030,
            (GaussPulse(1.0, 0.15, 0.025), GaussPulse(-0.30, 0.34, 0.040),
             GaussPulse(0.20, 0.50, 0.090)),
            0.30, 3.2e-3, 3.0e-4,
        ),
        PersonProfile(
            "p4", 1.45, 0.025,
            (GaussPulse(0.80, 0.08, 0.060), GaussPulse(0.35, 0.50, 0.030)),
            0.26, 6.0e-3, 1.2e-4,
        ),
        PersonProfile(
            "p5", 1.62, 0.022,
            (GaussPulse(1.0, 0.20, 0.045), GaussPulse(0.50, 0.60, 0.060),
             GaussPulse(-0.25, 0.80, 0.050)),
            0.35, 2.5e-3, 2.6e-4,
        ),
        PersonProfile(
            "p6", 1.80, 0.020,
            (GaussPulse(0.95, 0.10, 0.030), GaussPulse(-0.50, 0.25, 0.050),
             GaussPulse(0.30, 0.45, 0.040)),
            0.15, 5.0e-3, 1.9e-4,
        ),
    ]


def hard_cohort() -> list[PersonProfile]:
    """Stress preset: heart rates packed into 1.05-1.20 Hz (overlapping once
    session drift is applied), so identity rides almost entirely on the pulse
    waveform shape."""
    return [
        PersonProfile(
            "h1", 1.05, 0.030,
            (GaussPulse(1.0, 0.10, 0.030), GaussPulse(-0.50, 0.28, 0.050),
             GaussPulse(0.30, 0.55, 0.070)),
            0.24, 4.2e-3, 3.2e-4,
        ),
        PersonProfile(
            "h2", 1.08, 0.035,
            (GaussPulse(0.95, 0.14, 0.055), GaussPulse(0.45, 0.40, 0.035),
             GaussPulse(-0.25, 0.70, 0.060)),
            0.26, 4.8e-3, 2.8e-4,
        ),
        PersonProfile(
            "h3", 1.11, 0.028,
            (GaussPulse(1.0, 0.08, 0.040), GaussPulse(0.55, 0.30, 0.080),
             GaussPulse(0.20, 0.62, 0.035)),
            0.22, 4.5e-3, 3.6e-4,
        ),
        PersonProfile(
            "h4", 1.14, 0.040,
            (GaussPulse(0.85, 0.12, 0.065), GaussPulse(-0.40, 0.35, 0.030),
             GaussPulse(0.35, 0.58, 0.050)),
            0.28, 4.0e-3, 2.5e-4,
        ),
        PersonProfile(
            "h5", 1.17, 0.032,
            (GaussPulse(1.0, 0.16, 0.035), GaussPulse(0.40, 0.44, 0.060),
             GaussPulse(-0.30, 0.75, 0.045)),
            0.25, 5.0e-3, 3.0e-4,
        ),
        PersonProfile(
            "h6", 1.20, 0.036,
            (GaussPulse(0.90, 0.09, 0.050), GaussPulse(-0.55, 0.32, 0.040),
             GaussPulse(0.45, 0.50, 0.030)),
            0.23, 4.4e-3, 3.4e-4,
        ),
    ]


COHORT_PRESETS = {"default": default_cohort, "hard": hard_cohort}
