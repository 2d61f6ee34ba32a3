"""Rhythm and harmony features.

Tempo comes from the autocorrelation of a spectral-flux onset envelope,
mode strength from correlating a chromagram against the Krumhansl-Kessler
key profiles, and inharmonicity from how far spectral peaks sit from
integer multiples of the frame's fundamental.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .spectral import FramePlan, Spectrogram, compute_spectrogram, frame_signal

RHYTHM_FRAME = 2048
RHYTHM_HOP = 1024
MIN_BPM = 40.0
MAX_BPM = 200.0

PITCH_MIN_HZ = 55.0
PITCH_MAX_HZ = 2000.0
# A frame is voiced when its strongest autocorrelation peak reaches this
# fraction of the zero-lag energy.
VOICING_THRESHOLD = 0.3
# Peaks within this fraction of the best autocorrelation peak compete for
# the fundamental; taking the smallest such lag avoids subharmonics.
PERIOD_CANDIDATE_RATIO = 0.75
SPECTRAL_PEAK_FLOOR = 0.05
MAX_SPECTRAL_PEAKS = 20

# Krumhansl-Kessler probe-tone profiles, tonic first.
KK_MAJOR = np.array(
    [6.35, 2.23, 3.48, 2.33, 4.38, 4.09, 2.52, 5.19, 2.39, 3.66, 2.29, 2.88]
)
KK_MINOR = np.array(
    [6.33, 2.68, 3.52, 5.38, 2.60, 3.53, 2.54, 4.75, 3.98, 2.69, 3.34, 3.17]
)

MODE_CONVENTIONS = ("major-positive", "minor-positive")


@dataclass(frozen=True)
class OnsetEnvelope:
    """Onset strength over time at a fixed envelope frame rate."""

    values: np.ndarray
    frame_rate: float

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise ValueError("envelope must be one-dimensional")
        if self.frame_rate <= 0:
            raise ValueError("frame_rate must be positive")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)


def _parabolic_offset(y_prev: float, y_mid: float, y_next: float) -> float:
    """Sub-sample offset of a peak from three equally spaced samples."""
    denom = y_prev - 2.0 * y_mid + y_next
    if denom == 0.0:
        return 0.0
    offset = 0.5 * (y_prev - y_next) / denom
    if not -1.0 < offset < 1.0:
        return 0.0
    return float(offset)


def onset_envelope(part, frame_len: int = RHYTHM_FRAME, hop: int = RHYTHM_HOP) -> OnsetEnvelope:
    """Half-wave-rectified spectral flux of overlapping frames.

    Magnitude increases between consecutive frames are summed per frame,
    then the envelope mean is subtracted and negatives clipped so steady
    background energy does not register as onsets.
    """
    samples = np.asarray(getattr(part, "samples", part), dtype=np.float64)
    rate = getattr(part, "sample_rate", None)
    if rate is None:
        raise ValueError("part must carry a sample rate")
    if samples.size < frame_len:
        raise ValueError(
            f"signal of {samples.size} samples is shorter than one {frame_len}-sample frame"
        )
    n_frames = (samples.size - frame_len) // hop + 1
    idx = np.arange(frame_len)[None, :] + hop * np.arange(n_frames)[:, None]
    frames = samples[idx] * np.hanning(frame_len)
    mags = np.abs(np.fft.rfft(frames, axis=1))
    env = np.zeros(n_frames)
    rising = np.maximum(mags[1:] - mags[:-1], 0.0)
    env[1:] = rising.sum(axis=1)
    env = np.maximum(env - env.mean(), 0.0)
    return OnsetEnvelope(env, rate / hop)


def tempo_and_clarity(
    env: OnsetEnvelope, min_bpm: float = MIN_BPM, max_bpm: float = MAX_BPM
) -> tuple[float, float]:
    """Estimate tempo in BPM and a [0, 1] clarity score from an onset envelope.

    The envelope is autocorrelated and candidate lags in the
    min_bpm..max_bpm window are ranked by the mass of their peak (the
    peak bin plus both neighbours, since a fractional period splits its
    mass across two bins). The smallest candidate near the maximum wins,
    which keeps whole multiples of the beat period from stealing the
    tempo. The lag is then re-measured at its highest usable multiple and
    parabolically interpolated for sub-bin precision. Clarity is the
    chosen peak's autocorrelation relative to lag zero; a flat or empty
    envelope reports (0, 0).
    """
    if not 0 < min_bpm < max_bpm:
        raise ValueError("need 0 < min_bpm < max_bpm")
    v = env.values
    if v.size == 0:
        return 0.0, 0.0
    r = np.correlate(v, v, mode="full")[v.size - 1 :]
    if r[0] <= 0.0:
        return 0.0, 0.0
    lag_lo = max(1, int(np.floor(60.0 * env.frame_rate / max_bpm)))
    lag_hi = min(v.size - 2, int(np.ceil(60.0 * env.frame_rate / min_bpm)))
    if lag_hi < lag_lo:
        raise ValueError("envelope is too short for the requested tempo range")
    lags = np.arange(lag_lo, lag_hi + 1)
    peaks = [int(p) for p in _local_maxima(r[: lag_hi + 2]) if lag_lo <= p <= lag_hi]
    if not peaks:
        peaks = [int(lags[np.argmax(r[lags])])]
    masses = {p: r[p - 1] + r[p] + r[p + 1] for p in peaks}
    best_mass = max(masses.values())
    base = min(p for p in peaks if masses[p] >= PERIOD_CANDIDATE_RATIO * best_mass)
    clarity = float(np.clip(r[base] / r[0], 0.0, 1.0))

    base_refined = base + _parabolic_offset(r[base - 1], r[base], r[base + 1])
    k = max(1, min(int(lag_hi // base), 4))
    chosen = base
    while k > 1:
        target = int(round(k * base_refined))
        half = max(2, base // 2)
        lo = max(lag_lo, target - half)
        hi = min(r.size - 2, target + half)
        window = np.arange(lo, hi + 1)
        candidate = int(window[np.argmax(r[window])])
        if r[candidate] >= 0.5 * r[base]:
            chosen = candidate
            break
        k -= 1
    refined = chosen + _parabolic_offset(r[chosen - 1], r[chosen], r[chosen + 1])
    tempo = 60.0 * env.frame_rate * k / refined
    return float(tempo), clarity


@lru_cache(maxsize=None)
def _pitch_class_map(sample_rate: int, fft_size: int) -> np.ndarray:
    """Pitch class (0 = C) of every FFT bin above DC; bin 0 maps to -1."""
    n_bins = fft_size // 2
    freqs = np.arange(1, n_bins) * (sample_rate / fft_size)
    midi = np.round(69.0 + 12.0 * np.log2(freqs / 440.0)).astype(np.int64)
    classes = np.concatenate(([-1], midi % 12))
    classes.flags.writeable = False
    return classes


def chromagram(spec: Spectrogram) -> np.ndarray:
    """Total magnitude per pitch class, summed over all frames and bins."""
    classes = _pitch_class_map(spec.sample_rate, spec.plan.fft_size)
    bin_mags = spec.mags.sum(axis=0)
    chroma = np.zeros(12)
    np.add.at(chroma, classes[1:], bin_mags[1:])
    return chroma


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    a = a - a.mean()
    b = b - b.mean()
    denom = np.sqrt(np.dot(a, a) * np.dot(b, b))
    if denom == 0.0:
        return 0.0
    return float(np.dot(a, b) / denom)


def mode_strength(spec: Spectrogram, convention: str = "major-positive") -> float:
    """Correlation gap between the best major and best minor key fit.

    The part's chromagram is correlated against all 24 rotations of the
    Krumhansl-Kessler profiles. Under the default convention the result
    is positive when some major key fits better than every minor key.
    A featureless (constant) chromagram reports 0.
    """
    if convention not in MODE_CONVENTIONS:
        raise ValueError(f"unknown mode convention {convention!r}")
    chroma = chromagram(spec)
    if np.ptp(chroma) == 0.0:
        return 0.0
    best_major = max(_pearson(chroma, np.roll(KK_MAJOR, t)) for t in range(12))
    best_minor = max(_pearson(chroma, np.roll(KK_MINOR, t)) for t in range(12))
    value = best_major - best_minor
    if convention == "minor-positive":
        value = -value
    return float(value)


def _local_maxima(values: np.ndarray) -> np.ndarray:
    """Indices of strict-left, non-strict-right local maxima, excluding edges."""
    if values.size < 3:
        return np.empty(0, dtype=np.intp)
    interior = (values[1:-1] > values[:-2]) & (values[1:-1] >= values[2:])
    return np.flatnonzero(interior) + 1


def _frame_fundamental(r: np.ndarray, lag_min: int, lag_max: int, rate: int) -> float | None:
    """Fundamental frequency from one frame's autocorrelation, or None if unvoiced."""
    if r[0] <= 0.0:
        return None
    segment = r[: lag_max + 2] / r[0]
    peaks = _local_maxima(segment)
    peaks = peaks[(peaks >= lag_min) & (peaks <= lag_max)]
    if peaks.size == 0:
        return None
    best_value = float(segment[peaks].max())
    if best_value < VOICING_THRESHOLD:
        return None
    candidates = peaks[segment[peaks] >= PERIOD_CANDIDATE_RATIO * best_value]
    lag = int(candidates.min())
    refined = lag + _parabolic_offset(segment[lag - 1], segment[lag], segment[lag + 1])
    return rate / refined


def _frame_spectral_peaks(row: np.ndarray, rate: int, fft_size: int):
    """Interpolated (frequency, amplitude) of the strongest spectral peaks."""
    floor = SPECTRAL_PEAK_FLOOR * row.max()
    idx = _local_maxima(row)
    idx = idx[row[idx] >= floor]
    if idx.size == 0:
        return None
    if idx.size > MAX_SPECTRAL_PEAKS:
        idx = idx[np.argsort(row[idx])[::-1][:MAX_SPECTRAL_PEAKS]]
    offsets = np.array([_parabolic_offset(row[k - 1], row[k], row[k + 1]) for k in idx])
    freqs = (idx + offsets) * (rate / fft_size)
    return freqs, row[idx]


def inharmonicity(part, spectrogram: Spectrogram | None = None) -> float:
    """How far spectral peaks deviate from a harmonic series, in [0, 1].

    Per frame: estimate the fundamental from the frame autocorrelation
    (unvoiced frames are skipped), snap it so the strongest spectral peak
    is an exact harmonic, then score every peak by
    min(1, 2 * |f - m*f0| / f0) for its nearest harmonic m, weighted by
    squared peak amplitude. The part value is the mean over voiced
    frames, or 0 when no frame is voiced. A pure tone scores exactly 0.
    """
    samples = np.asarray(getattr(part, "samples", part), dtype=np.float64)
    rate = getattr(part, "sample_rate", None)
    if rate is None:
        raise ValueError("part must carry a sample rate")
    if spectrogram is None:
        spectrogram = compute_spectrogram(samples, rate)
    plan = spectrogram.plan
    frames = frame_signal(samples, plan)
    frames = frames - frames.mean(axis=1, keepdims=True)

    lag_min = max(2, int(np.ceil(rate / PITCH_MAX_HZ)))
    lag_max = min(plan.frame_len - 2, int(np.floor(rate / PITCH_MIN_HZ)))
    if lag_max <= lag_min:
        raise ValueError("frames are too short for the pitch search range")

    # Autocorrelation of every frame at once via the power spectrum.
    pad = 1
    while pad < 2 * plan.frame_len:
        pad <<= 1
    spectra = np.fft.rfft(frames, n=pad, axis=1)
    autocorr = np.fft.irfft(np.abs(spectra) ** 2, axis=1)[:, : lag_max + 2]

    scores = []
    for n in range(plan.n_frames):
        f0_coarse = _frame_fundamental(autocorr[n], lag_min, lag_max, rate)
        if f0_coarse is None:
            continue
        found = _frame_spectral_peaks(spectrogram.mags[n], rate, plan.fft_size)
        if found is None:
            continue
        freqs, amps = found
        strongest = float(freqs[np.argmax(amps)])
        harmonic = max(1, int(round(strongest / f0_coarse)))
        f0 = strongest / harmonic
        orders = np.maximum(np.round(freqs / f0), 1.0)
        deviations = np.minimum(1.0, 2.0 * np.abs(freqs - orders * f0) / f0)
        weights = amps**2
        scores.append(float(np.dot(weights, deviations) / weights.sum()))
    if not scores:
        return 0.0
    return float(np.mean(scores))
