"""Framing and spectra.

A part is split into a fixed number of equal, non-overlapping frames and
each frame is windowed, zero-padded to a power of two, and transformed.
Downstream features work on the resulting magnitude spectrogram and on a
dyadic sub-band partition of the bins.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_N_FRAMES = 124
DEFAULT_N_SUBBANDS = 10
DEFAULT_FFT_SIZE = 4096

_WINDOWS = ("hann", "rectangular")


def _next_pow2(n: int) -> int:
    p = 1
    while p < n:
        p <<= 1
    return p


def _as_samples(signal) -> np.ndarray:
    """Accept an AudioPart, AudioBuffer, or plain 1-D array."""
    samples = getattr(signal, "samples", signal)
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("expected a one-dimensional signal")
    return x


def _window_frames(frames: np.ndarray, window: str) -> np.ndarray:
    if window == "hann":
        return frames * np.hanning(frames.shape[-1])
    if window == "rectangular":
        return frames
    raise ValueError(f"unknown window {window!r} (expected one of {_WINDOWS})")


@dataclass(frozen=True)
class FramePlan:
    """Equal partition of a signal into a fixed number of frames.

    frame_len is floor(n_samples / n_frames); the trailing remainder of at
    most n_frames - 1 samples is dropped. fft_size is the smallest power
    of two that holds one frame.
    """

    n_frames: int
    frame_len: int
    fft_size: int

    @classmethod
    def for_signal(cls, n_samples: int, n_frames: int = DEFAULT_N_FRAMES) -> "FramePlan":
        if n_frames < 1:
            raise ValueError("n_frames must be positive")
        frame_len = n_samples // n_frames
        if frame_len < 1:
            raise ValueError(
                f"signal of {n_samples} samples is too short for {n_frames} frames"
            )
        return cls(n_frames=n_frames, frame_len=frame_len, fft_size=_next_pow2(frame_len))


def frame_signal(signal, plan: FramePlan) -> np.ndarray:
    """Split a signal into plan.n_frames rows of plan.frame_len samples."""
    x = _as_samples(signal)
    needed = plan.n_frames * plan.frame_len
    if x.size < needed:
        raise ValueError(
            f"signal of {x.size} samples is shorter than the planned {needed}"
        )
    return x[:needed].reshape(plan.n_frames, plan.frame_len)


def magnitude_spectrum(frame, fft_size: int, window: str = "hann") -> np.ndarray:
    """Magnitude spectrum of one frame over bins [0, fft_size/2).

    The frame is windowed, zero-padded to ``fft_size``, and transformed;
    only the non-negative-frequency half below Nyquist is returned.
    """
    x = _as_samples(frame)
    if x.size > fft_size:
        raise ValueError(f"frame of {x.size} samples does not fit a {fft_size}-point FFT")
    x = _window_frames(x, window)
    return np.abs(np.fft.rfft(x, n=fft_size))[: fft_size // 2]


@dataclass(frozen=True)
class Spectrogram:
    """Per-frame magnitude spectra: rows are frames, columns FFT bins."""

    mags: np.ndarray
    sample_rate: int
    plan: FramePlan

    def __post_init__(self) -> None:
        mags = np.array(self.mags, dtype=np.float64)
        if mags.ndim != 2:
            raise ValueError("spectrogram must be two-dimensional")
        if mags.shape != (self.plan.n_frames, self.plan.fft_size // 2):
            raise ValueError(
                f"spectrogram shape {mags.shape} does not match the frame plan "
                f"({self.plan.n_frames} frames, {self.plan.fft_size // 2} bins)"
            )
        if not np.all(np.isfinite(mags)) or np.any(mags < 0):
            raise ValueError("spectrogram magnitudes must be finite and non-negative")
        mags.flags.writeable = False
        object.__setattr__(self, "mags", mags)

    @property
    def n_frames(self) -> int:
        return self.mags.shape[0]

    @property
    def n_bins(self) -> int:
        return self.mags.shape[1]

    def bin_frequencies(self) -> np.ndarray:
        """Centre frequency of every bin in Hz."""
        return np.arange(self.n_bins) * (self.sample_rate / self.plan.fft_size)


def compute_spectrogram(
    signal,
    sample_rate: int | None = None,
    plan: FramePlan | None = None,
    n_frames: int = DEFAULT_N_FRAMES,
    window: str = "hann",
) -> Spectrogram:
    """Frame a signal and compute the magnitude spectrum of every frame.

    ``sample_rate`` may be omitted when the signal carries one (AudioPart
    or AudioBuffer).
    """
    x = _as_samples(signal)
    if sample_rate is None:
        sample_rate = getattr(signal, "sample_rate", None)
        if sample_rate is None:
            raise ValueError("sample_rate is required for plain arrays")
    if plan is None:
        plan = FramePlan.for_signal(x.size, n_frames)
    frames = _window_frames(frame_signal(x, plan), window)
    mags = np.abs(np.fft.rfft(frames, n=plan.fft_size, axis=1))[:, : plan.fft_size // 2]
    return Spectrogram(mags, int(sample_rate), plan)


@dataclass(frozen=True)
class SubBandPlan:
    """Dyadic partition of [0, rate/2) into octave-like sub-bands.

    The top band spans the upper half of the spectrum and every band
    below is half as wide, down to [0, rate/2**n_bands). Each FFT bin is
    assigned to the band whose half-open range [low, high) contains its
    centre frequency.
    """

    edges_hz: np.ndarray
    bin_band: np.ndarray
    sample_rate: int
    fft_size: int

    @property
    def n_bands(self) -> int:
        return self.edges_hz.size - 1

    def band_range(self, i: int) -> tuple[float, float]:
        """(low, high) edge of 0-based band ``i`` in Hz."""
        return float(self.edges_hz[i]), float(self.edges_hz[i + 1])


def make_subband_plan(
    sample_rate: int,
    n_bands: int = DEFAULT_N_SUBBANDS,
    fft_size: int = DEFAULT_FFT_SIZE,
) -> SubBandPlan:
    """Build the dyadic sub-band partition for a given rate and FFT size."""
    if n_bands < 2:
        raise ValueError("n_bands must be at least 2")
    if fft_size < 2 or fft_size & (fft_size - 1):
        raise ValueError("fft_size must be a power of two")
    if 2**n_bands > fft_size:
        raise ValueError(
            f"lowest band [0, {sample_rate / 2**n_bands:g} Hz) is narrower than one "
            f"bin of a {fft_size}-point FFT; fewer bands or a larger FFT is required"
        )
    edges = np.empty(n_bands + 1, dtype=np.float64)
    edges[0] = 0.0
    for i in range(1, n_bands + 1):
        edges[i] = sample_rate / 2 ** (n_bands - i + 1)
    freqs = np.arange(fft_size // 2) * (sample_rate / fft_size)
    bin_band = np.searchsorted(edges[1:], freqs, side="right")
    edges.flags.writeable = False
    bin_band.flags.writeable = False
    return SubBandPlan(edges, bin_band, int(sample_rate), int(fft_size))


def dump_spectrogram_csv(spec: Spectrogram, path) -> None:
    """Write a spectrogram as CSV, one frame per row. Debugging aid."""
    np.savetxt(path, spec.mags, fmt="%.9g", delimiter=",")
