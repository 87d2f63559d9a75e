"""Core signal containers and the operations shared by every feature branch.

Slow-time radar returns are held as :class:`ComplexSeries`; the amplitude and
phase branches work on :class:`RealSeries`.  The only transforms defined here
are pointwise decompositions (modulus, unwrapped phase), the central-difference
second derivative, and a rectangular-window STFT whose magnitude feeds the
filter-bank stage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidHop, SeriesTooShort, WindowTooLong, ZeroSample


@dataclass(frozen=True)
class ComplexSeries:
    """Uniformly sampled complex baseband signal (I/Q)."""

    samples: np.ndarray
    fs: float
    t0: float = 0.0

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.complex128)
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError("samples must be a nonempty 1-D array")
        if not self.fs > 0:
            raise ValueError("sampling rate must be positive")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.fs

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.samples.size) / self.fs


@dataclass(frozen=True)
class RealSeries:
    """Uniformly sampled real-valued signal."""

    samples: np.ndarray
    fs: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1 or samples.size == 0:
            raise ValueError("samples must be a nonempty 1-D array")
        if not self.fs > 0:
            raise ValueError("sampling rate must be positive")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.fs


@dataclass(frozen=True)
class Spectrogram:
    """Magnitude STFT on a rectangular grid.

    ``values`` is indexed (frame, frequency bin).  ``freqs`` is either
    two-sided (centered on 0 Hz, for complex input) or one-sided
    (0 ... fs/2, for real input).
    """

    values: np.ndarray
    freqs: np.ndarray
    frame_times: np.ndarray
    window_len: float
    hop: float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        freqs = np.asarray(self.freqs, dtype=np.float64)
        frame_times = np.asarray(self.frame_times, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError("values must be 2-D (frame, freq)")
        if values.shape != (frame_times.size, freqs.size):
            raise ValueError("values shape inconsistent with axes")
        if np.any(values < 0):
            raise ValueError("magnitudes must be nonnegative")
        if freqs.size > 1 and np.any(np.diff(freqs) <= 0):
            raise ValueError("frequency axis must be strictly increasing")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "frame_times", frame_times)

    @property
    def n_frames(self) -> int:
        return self.values.shape[0]

    @property
    def two_sided(self) -> bool:
        return bool(self.freqs[0] < 0)


def second_derivative(x: RealSeries) -> RealSeries:
    """Central-difference second derivative, endpoints dropped.

    y[n] = (x[n+1] - 2 x[n] + x[n-1]) * fs^2, so the output is two samples
    shorter than the input.
    """
    s = x.samples
    if s.size < 3:
        raise SeriesTooShort(f"need at least 3 samples, got {s.size}")
    y = (s[2:] - 2.0 * s[1:-1] + s[:-2]) * x.fs**2
    return RealSeries(y, x.fs)


def complex_second_derivative(s: ComplexSeries) -> ComplexSeries:
    """Second derivative applied independently to the real and imaginary parts."""
    a = s.samples
    if a.size < 3:
        raise SeriesTooShort(f"need at least 3 samples, got {a.size}")
    y = (a[2:] - 2.0 * a[1:-1] + a[:-2]) * s.fs**2
    return ComplexSeries(y, s.fs, s.t0 + 1.0 / s.fs)


def amplitude(s: ComplexSeries) -> RealSeries:
    """Pointwise modulus |s(t)|."""
    return RealSeries(np.abs(s.samples), s.fs)


def phase_unwrapped(s: ComplexSeries) -> RealSeries:
    """Principal-value phase followed by unwrapping.

    Successive differences are brought into (-pi, pi] by adding multiples of
    2*pi; the first output sample is the principal value, so it always lies in
    (-pi, pi].  Raises :class:`ZeroSample` where the phase is undefined.
    """
    if np.any(s.samples == 0):
        raise ZeroSample("phase undefined: signal contains an exact zero")
    return RealSeries(np.unwrap(np.angle(s.samples)), s.fs)


def stft_magnitude(
    x: RealSeries | ComplexSeries,
    window_len: float,
    hop: float,
    two_sided: bool | None = None,
) -> Spectrogram:
    """Magnitude STFT with a rectangular window and no zero padding.

    Frames start at the beginning of the signal and must lie fully inside it,
    giving floor((duration - window_len)/hop) + 1 frames.  The DFT is scaled
    by 1/sqrt(N) so the summed squared magnitudes of a frame's spectrum equal
    the frame's summed squared samples (energy-preserving convention).

    ``two_sided`` defaults to the natural axis for the input type: two-sided
    (centered on 0 Hz) for complex input, one-sided for real input.  Asking
    for the other pairing is an error.
    """
    complex_input = isinstance(x, ComplexSeries)
    if two_sided is None:
        two_sided = complex_input
    if two_sided != complex_input:
        raise ValueError(
            "two-sided spectra require complex input; real input is one-sided"
        )
    if hop <= 0:
        raise InvalidHop(f"hop must be positive, got {hop}")
    n = x.samples.size
    n_win = int(round(window_len * x.fs))
    n_hop = int(round(hop * x.fs))
    if n_hop < 1:
        raise InvalidHop(f"hop {hop} s is below one sample at fs={x.fs}")
    if n_win < 1 or n_win > n:
        raise WindowTooLong(
            f"window of {n_win} samples does not fit a signal of {n} samples"
        )

    n_frames = (n - n_win) // n_hop + 1
    idx = n_hop * np.arange(n_frames)[:, None] + np.arange(n_win)[None, :]
    frames = x.samples[idx]

    scale = 1.0 / math.sqrt(n_win)
    if two_sided:
        spec = np.abs(np.fft.fftshift(np.fft.fft(frames, axis=1), axes=1)) * scale
        freqs = np.fft.fftshift(np.fft.fftfreq(n_win, d=1.0 / x.fs))
    else:
        spec = np.abs(np.fft.rfft(frames, axis=1)) * scale
        freqs = np.fft.rfftfreq(n_win, d=1.0 / x.fs)

    t0 = getattr(x, "t0", 0.0)
    frame_times = t0 + (n_hop * np.arange(n_frames) + 0.5 * n_win) / x.fs
    return Spectrogram(spec, freqs, frame_times, n_win / x.fs, n_hop / x.fs)
