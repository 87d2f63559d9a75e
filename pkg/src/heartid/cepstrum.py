"""Warped-filter-bank cepstral features for heartbeat identification.

The chain implemented here is: second derivative of the slow-time signal,
magnitude STFT, a low-frequency mel-style triangular filter bank applied
separately to positive and negative frequencies, incoherent integration over
the whole measurement, DCT-II, and truncation to the lowest-order
coefficients.  Complex input yields the two-sided ``comp`` vector (2K'
coefficients); the amplitude and phase branches are one-sided and yield K'
coefficients each.  Concatenating all three gives the fused ``prop`` vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft
from scipy.integrate import trapezoid

from .errors import (
    AxisMismatch,
    DimensionMismatch,
    EmptyInput,
    IndexOutOfRange,
    KindMismatch,
    KPrimeTooLarge,
    SeriesTooShort,
)
from .signals import (
    ComplexSeries,
    Spectrogram,
    amplitude,
    complex_second_derivative,
    phase_unwrapped,
    second_derivative,
    stft_magnitude,
)

FEATURE_KINDS = ("amp", "ph", "comp", "prop")

#: dimension of a feature vector of each kind, as a multiple of K'
_KIND_MULTIPLIER = {"amp": 1, "ph": 1, "comp": 2, "prop": 4}


@dataclass(frozen=True)
class MelBankConfig:
    """Parameters of the warped filter bank.

    ``f_ref`` is the reference frequency that controls the warping (5 Hz here,
    suited to sub-50-Hz heartbeat spectra rather than audio), ``f_prime`` the
    fixed scale constant of the warping curve, and ``n_filters`` the number of
    triangular filters L.
    """

    n_filters: int = 64
    f_ref: float = 5.0
    f_prime: float = 1000.0
    fs: float = 100.0

    def __post_init__(self):
        if self.n_filters < 1:
            raise ValueError("need at least one filter")
        if self.f_ref <= 0 or self.f_prime <= 0 or self.fs <= 0:
            raise ValueError("frequencies must be positive")


@dataclass(frozen=True)
class MelBank:
    """Edge/center frequencies of the L triangular filters.

    ``centers`` holds f_0 ... f_{L+1}; filter ``ell`` rises on
    [f_ell, f_{ell+1}) and falls on [f_{ell+1}, f_{ell+2}).  By construction
    f_0 = 0 and f_{L+1} = fs/2.
    """

    centers: np.ndarray
    mel_points: np.ndarray
    m_tilde: float

    def __post_init__(self):
        centers = np.asarray(self.centers, dtype=np.float64)
        mel_points = np.asarray(self.mel_points, dtype=np.float64)
        if centers.size != mel_points.size or centers.size < 3:
            raise ValueError("need f_0 ... f_{L+1} with L >= 1")
        if np.any(np.diff(centers) <= 0):
            raise ValueError("center frequencies must be strictly increasing")
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "mel_points", mel_points)

    @property
    def n_filters(self) -> int:
        return self.centers.size - 2

    @property
    def nyquist(self) -> float:
        return float(self.centers[-1])


@dataclass(frozen=True)
class MelEnergies:
    """Incoherently integrated filter-bank outputs.

    ``positive`` holds M_{+0} ... M_{+(L-1)}; ``negative`` the mirrored
    M_{-0} ... M_{-(L-1)} (None for one-sided input).  The zero-indexed
    entries of the two sides are distinct variables, not shared.
    """

    positive: np.ndarray
    negative: np.ndarray | None
    t0_span: float

    def __post_init__(self):
        positive = np.asarray(self.positive, dtype=np.float64)
        object.__setattr__(self, "positive", positive)
        if self.negative is not None:
            negative = np.asarray(self.negative, dtype=np.float64)
            if negative.size != positive.size:
                raise ValueError("positive/negative banks differ in size")
            object.__setattr__(self, "negative", negative)


@dataclass(frozen=True)
class FeatureVector:
    """Cepstral feature vector with its branch label.

    Dimension is K' for ``amp``/``ph``, 2K' for ``comp`` and 4K' for the
    fused ``prop`` vector.
    """

    values: np.ndarray
    kind: str
    k_prime: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if self.kind not in FEATURE_KINDS:
            raise ValueError(f"unknown feature kind {self.kind!r}")
        expected = _KIND_MULTIPLIER[self.kind] * self.k_prime
        if values.size != expected:
            raise DimensionMismatch(
                f"kind {self.kind!r} with K'={self.k_prime} needs "
                f"{expected} values, got {values.size}"
            )
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size


def build_mel_bank(cfg: MelBankConfig) -> MelBank:
    """Construct the warped filter bank edges.

    The warping constant is m~ = f' / log(f'/f_ref + 1); the mel points are
    spaced linearly, m_ell = m~ * (ell/(L+1)) * log(1 + fs/(2 f_ref)) for
    ell = 0 ... L+1, and mapped back through
    f_ell = f_ref * (exp(m_ell/m~) - 1).  The top edge lands exactly on the
    Nyquist frequency fs/2.
    """
    m_tilde = cfg.f_prime / math.log(cfg.f_prime / cfg.f_ref + 1.0)
    ell = np.arange(cfg.n_filters + 2, dtype=np.float64)
    mel_points = m_tilde * (ell / (cfg.n_filters + 1)) * math.log(
        1.0 + cfg.fs / (2.0 * cfg.f_ref)
    )
    centers = cfg.f_ref * np.expm1(mel_points / m_tilde)
    return MelBank(centers, mel_points, m_tilde)


def filter_response(bank: MelBank, ell: int, f):
    """Triangular response H_ell(f); accepts a scalar or an array of Hz.

    Rises linearly on [f_ell, f_{ell+1}), falls on [f_{ell+1}, f_{ell+2}),
    zero elsewhere; the peak value 2/(f_{ell+2} - f_ell) makes every filter
    integrate to 1.
    """
    if not 0 <= ell <= bank.n_filters - 1:
        raise IndexOutOfRange(
            f"filter index {ell} outside 0..{bank.n_filters - 1}"
        )
    f_lo, f_mid, f_hi = bank.centers[ell : ell + 3]
    f_arr = np.asarray(f, dtype=np.float64)
    out = np.zeros_like(f_arr)
    rising = (f_arr >= f_lo) & (f_arr < f_mid)
    falling = (f_arr >= f_mid) & (f_arr < f_hi)
    out[rising] = 2.0 * (f_arr[rising] - f_lo) / ((f_mid - f_lo) * (f_hi - f_lo))
    out[falling] = 2.0 * (f_hi - f_arr[falling]) / ((f_hi - f_mid) * (f_hi - f_lo))
    if np.isscalar(f) or np.ndim(f) == 0:
        return float(out)
    return out


def bank_response_matrix(bank: MelBank, freqs: np.ndarray) -> np.ndarray:
    """All filter responses sampled on a frequency grid, shape (L, len(freqs))."""
    return np.stack(
        [filter_response(bank, ell, freqs) for ell in range(bank.n_filters)]
    )


def mel_energies(spec: Spectrogram, bank: MelBank) -> MelEnergies:
    """Integrate the spectrogram against each filter over time and frequency.

    Both integrals use the trapezoidal rule on the discrete STFT grid.  For a
    two-sided spectrogram the filters are applied separately to the positive
    and negative frequency halves (the negative side through H_ell(-f)).
    """
    freqs = spec.freqs
    nyq = bank.nyquist
    if freqs.max() > nyq * (1 + 1e-9) or freqs.min() < -nyq * (1 + 1e-9):
        raise AxisMismatch(
            f"frequency axis [{freqs.min():g}, {freqs.max():g}] exceeds the "
            f"bank Nyquist {nyq:g} Hz"
        )
    df = float(np.median(np.diff(freqs))) if freqs.size > 1 else nyq
    if nyq - freqs.max() > 1.5 * df:
        raise AxisMismatch(
            f"frequency axis stops at {freqs.max():g} Hz, well short of the "
            f"bank Nyquist {nyq:g} Hz"
        )

    # Time first (trapezoid is linear, so the order is immaterial).
    if spec.n_frames > 1:
        time_integral = trapezoid(spec.values, spec.frame_times, axis=0)
        t0_span = float(spec.frame_times[-1] - spec.frame_times[0])
    else:
        time_integral = np.zeros(freqs.size)
        t0_span = 0.0

    pos_mask = freqs >= 0
    h_pos = bank_response_matrix(bank, freqs[pos_mask])
    positive = trapezoid(h_pos * time_integral[pos_mask], freqs[pos_mask], axis=1)

    negative = None
    if spec.two_sided:
        # an even-length DFT axis carries -fs/2 without a +fs/2 mirror;
        # restrict the negative side to the exact mirror of the positive grid
        # so conjugate-symmetric input yields identical energies on both sides
        neg_mask = (freqs <= 0) & (freqs >= -freqs.max())
        h_neg = bank_response_matrix(bank, -freqs[neg_mask])
        negative = trapezoid(
            h_neg * time_integral[neg_mask], freqs[neg_mask], axis=1
        )
    return MelEnergies(positive, negative, t0_span)


def dct2(m) -> np.ndarray:
    """Unnormalized DCT-II: C_k = sum_n m_n cos(pi k (n + 1/2) / N)."""
    m = np.asarray(m, dtype=np.float64)
    if m.size == 0:
        raise EmptyInput("DCT input must be nonempty")
    # scipy's unnormalized type-II transform is exactly twice this convention.
    return scipy.fft.dct(m, type=2, norm=None) / 2.0


def _compress(energies: np.ndarray, log_energies: bool) -> np.ndarray:
    if log_energies:
        return np.log(energies + 1e-12)
    return energies


def extract_features(
    s: ComplexSeries,
    cfg: MelBankConfig,
    k_prime: int = 24,
    kind: str = "comp",
    window_len: float = 2.0,
    hop: float = 0.1,
    log_energies: bool = False,
) -> FeatureVector:
    """Run one feature branch end to end on a complex slow-time signal.

    ``comp`` differentiates the complex signal and keeps both spectral sides:
    the result is ordered [C_{-(K'-1)}, ..., C_{-0}, C_{+0}, ..., C_{+(K'-1)}].
    ``amp`` and ``ph`` differentiate |s| or the unwrapped phase and keep the
    K' lowest-order one-sided coefficients.

    The DCT is applied to the raw integrated energies by default;
    ``log_energies`` switches to log(M + 1e-12) compression first.
    """
    if kind not in ("amp", "ph", "comp"):
        raise ValueError(f"kind must be amp/ph/comp, got {kind!r}")
    if not 0 < k_prime < cfg.n_filters:
        raise KPrimeTooLarge(
            f"K'={k_prime} must satisfy 0 < K' < L={cfg.n_filters}"
        )
    n_win = int(round(window_len * s.fs))
    if len(s) < n_win + 2:
        raise SeriesTooShort(
            f"{len(s)} samples cannot host a derivative plus one "
            f"{n_win}-sample window"
        )
    bank = build_mel_bank(cfg)

    if kind == "comp":
        deriv = complex_second_derivative(s)
        spec = stft_magnitude(deriv, window_len, hop)
        en = mel_energies(spec, bank)
        c_pos = dct2(_compress(en.positive, log_energies))[:k_prime]
        c_neg = dct2(_compress(en.negative, log_energies))[:k_prime]
        values = np.concatenate([c_neg[::-1], c_pos])
    else:
        base = amplitude(s) if kind == "amp" else phase_unwrapped(s)
        deriv = second_derivative(base)
        spec = stft_magnitude(deriv, window_len, hop)
        en = mel_energies(spec, bank)
        values = dct2(_compress(en.positive, log_energies))[:k_prime]
    return FeatureVector(values, kind, k_prime)


def fuse(amp: FeatureVector, ph: FeatureVector, comp: FeatureVector) -> FeatureVector:
    """Concatenate the three branch vectors (amp, ph, comp) into ``prop``."""
    for vec, expected in ((amp, "amp"), (ph, "ph"), (comp, "comp")):
        if vec.kind != expected:
            raise KindMismatch(f"expected kind {expected!r}, got {vec.kind!r}")
    if not amp.k_prime == ph.k_prime == comp.k_prime:
        raise DimensionMismatch("branches disagree on K'")
    values = np.concatenate([amp.values, ph.values, comp.values])
    return FeatureVector(values, "prop", amp.k_prime)


def extract_all(
    s: ComplexSeries,
    cfg: MelBankConfig,
    k_prime: int = 24,
    window_len: float = 2.0,
    hop: float = 0.1,
    log_energies: bool = False,
) -> dict[str, FeatureVector]:
    """All four feature vectors of one signal, sharing the branch computations."""
    out = {
        kind: extract_features(
            s, cfg, k_prime, kind, window_len, hop, log_energies
        )
        for kind in ("amp", "ph", "comp")
    }
    out["prop"] = fuse(out["amp"], out["ph"], out["comp"])
    return out
