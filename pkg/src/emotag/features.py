"""Per-part acoustic features.

Six groups make up the 87-value vector extracted from every part:
Intensity (frame intensity and dyadic sub-band ratios), Timbre (spectral
centroid, rolloff, flux), MFCC (20 cepstral coefficients), Rhythm (tempo
and its clarity), Harmony (mode strength and inharmonicity), and Temporal
(zero-crossing rate and short-lag autocorrelation). Per-frame quantities
are summarised over the 124 frames by mean and population standard
deviation; the rhythm and harmony values are computed once per part.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.fft import dct
from sklearn.base import BaseEstimator, TransformerMixin

from . import musical
from .spectral import (
    DEFAULT_N_FRAMES,
    DEFAULT_N_SUBBANDS,
    FramePlan,
    Spectrogram,
    SubBandPlan,
    compute_spectrogram,
    frame_signal,
    make_subband_plan,
)

N_MFCC = 20
N_MEL_FILTERS = 26
MEL_LOG_FLOOR = 1e-10
N_AUTOCORR_LAGS = 13
ROLLOFF_FRACTION = 0.85

FEATURE_GROUP_NAMES = ("Intensity", "Timbre", "MFCC", "Rhythm", "Harmony", "Temporal")


def feature_names(n_subbands: int = DEFAULT_N_SUBBANDS, n_mfcc: int = N_MFCC) -> tuple:
    """Column names of the feature vector, in extraction order."""
    names = ["intensity_mean", "intensity_std"]
    for i in range(1, n_subbands + 1):
        names += [f"subband_ratio_{i:02d}_mean", f"subband_ratio_{i:02d}_std"]
    for base in ("centroid", "rolloff", "flux"):
        names += [f"{base}_mean", f"{base}_std"]
    for i in range(1, n_mfcc + 1):
        names += [f"mfcc_{i:02d}_mean", f"mfcc_{i:02d}_std"]
    names += ["tempo_bpm", "rhythm_clarity", "mode", "inharmonicity"]
    names += ["zero_crossing_mean", "zero_crossing_std"]
    names += [f"autocorr_{k:02d}" for k in range(1, N_AUTOCORR_LAGS + 1)]
    return tuple(names)


def _group_of(name: str) -> str:
    if name.startswith(("intensity", "subband_ratio")):
        return "Intensity"
    if name.startswith(("centroid", "rolloff", "flux")):
        return "Timbre"
    if name.startswith("mfcc"):
        return "MFCC"
    if name in ("tempo_bpm", "rhythm_clarity"):
        return "Rhythm"
    if name in ("mode", "inharmonicity"):
        return "Harmony"
    return "Temporal"


FEATURE_NAMES = feature_names()
FEATURE_GROUPS = {name: _group_of(name) for name in FEATURE_NAMES}
N_FEATURES = len(FEATURE_NAMES)


class FeatureError(RuntimeError):
    """A feature computation failed; the message names the feature group."""


@dataclass(frozen=True)
class FeatureVector:
    """A named, finite feature vector for one part."""

    values: np.ndarray
    names: tuple = FEATURE_NAMES
    part_id: str = ""

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size != len(self.names):
            raise ValueError(
                f"expected {len(self.names)} values, got array of shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            bad = [self.names[i] for i in np.flatnonzero(~np.isfinite(values))]
            raise ValueError(f"non-finite feature values: {', '.join(bad)}")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def __getitem__(self, name: str) -> float:
        return float(self.values[self.names.index(name)])

    def as_dict(self) -> dict:
        return {name: float(v) for name, v in zip(self.names, self.values)}


def _mean_std(values: np.ndarray) -> tuple[float, float]:
    # Population standard deviation: frames are the whole population here.
    return float(np.mean(values)), float(np.std(values))


def frame_intensities(spec: Spectrogram) -> np.ndarray:
    """Sum of magnitudes per frame, one value per frame."""
    return spec.mags.sum(axis=1)


def frame_intensity(spec: Spectrogram, n: int) -> float:
    """Sum of the magnitude spectrum of frame ``n``."""
    return float(spec.mags[n].sum())


def subband_ratio_matrix(spec: Spectrogram, plan: SubBandPlan) -> np.ndarray:
    """Per-frame share of intensity in each sub-band, shape (n_frames, n_bands).

    Rows of silent frames (zero total magnitude) are all zero; every other
    row sums to 1.
    """
    if plan.sample_rate != spec.sample_rate or plan.fft_size != spec.plan.fft_size:
        raise ValueError("sub-band plan was built for a different rate or FFT size")
    indicator = (plan.bin_band[:, None] == np.arange(plan.n_bands)).astype(np.float64)
    band_sums = spec.mags @ indicator
    totals = frame_intensities(spec)
    ratios = np.zeros_like(band_sums)
    live = totals > 0
    ratios[live] = band_sums[live] / totals[live, None]
    return ratios


def subband_ratios(spec: Spectrogram, plan: SubBandPlan, n: int) -> np.ndarray:
    """Sub-band intensity ratios of frame ``n``."""
    return subband_ratio_matrix(spec, plan)[n]


def energy_stats(signal, plan: FramePlan | None = None, n_frames: int = DEFAULT_N_FRAMES):
    """Mean and population std of per-frame average energy (mean squared sample)."""
    x = _signal_array(signal)
    if plan is None:
        plan = FramePlan.for_signal(x.size, n_frames)
    frames = frame_signal(x, plan)
    ae = np.mean(frames**2, axis=1)
    return _mean_std(ae)


def spectral_centroids(spec: Spectrogram) -> np.ndarray:
    """Magnitude-weighted mean bin index per frame; 0 for silent frames."""
    totals = frame_intensities(spec)
    weighted = spec.mags @ np.arange(spec.n_bins, dtype=np.float64)
    out = np.zeros_like(totals)
    live = totals > 0
    out[live] = weighted[live] / totals[live]
    return out


def spectral_centroid(spec: Spectrogram, n: int) -> float:
    return float(spectral_centroids(spec)[n])


def rolloffs(spec: Spectrogram, fraction: float = ROLLOFF_FRACTION) -> np.ndarray:
    """Smallest bin index where cumulative magnitude reaches ``fraction`` of the total.

    Silent frames report bin 0.
    """
    if not 0 < fraction <= 1:
        raise ValueError("fraction must lie in (0, 1]")
    cum = np.cumsum(spec.mags, axis=1)
    thresholds = fraction * cum[:, -1]
    return (cum < thresholds[:, None]).sum(axis=1).astype(np.float64)


def rolloff(spec: Spectrogram, n: int, fraction: float = ROLLOFF_FRACTION) -> int:
    return int(rolloffs(spec, fraction)[n])


def spectral_fluxes(spec: Spectrogram) -> np.ndarray:
    """Squared spectral change between consecutive frames, one value per frame n >= 1."""
    diffs = np.diff(spec.mags, axis=0)
    return np.sum(diffs**2, axis=1)


def spectral_flux(spec: Spectrogram, n: int) -> float:
    """Flux of frame ``n`` against frame ``n - 1``; undefined for the first frame."""
    if n < 1:
        raise ValueError("flux needs a predecessor frame; n must be >= 1")
    return float(spectral_fluxes(spec)[n - 1])


def _hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def _mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


@lru_cache(maxsize=None)
def mel_filterbank(sample_rate: int, fft_size: int, n_filters: int = N_MEL_FILTERS) -> np.ndarray:
    """Triangular filters with unit peaks, equally spaced on the mel scale.

    Filter centres run from 0 Hz to Nyquist; each filter rises linearly in
    Hz from its left neighbour's centre and falls to its right
    neighbour's. Returns shape (n_filters, fft_size // 2).
    """
    nyquist = sample_rate / 2.0
    mel_points = np.linspace(0.0, float(_hz_to_mel(nyquist)), n_filters + 2)
    hz_points = _mel_to_hz(mel_points)
    freqs = np.arange(fft_size // 2) * (sample_rate / fft_size)
    bank = np.zeros((n_filters, fft_size // 2))
    for j in range(n_filters):
        lo, mid, hi = hz_points[j], hz_points[j + 1], hz_points[j + 2]
        rising = (freqs - lo) / (mid - lo)
        falling = (hi - freqs) / (hi - mid)
        bank[j] = np.maximum(0.0, np.minimum(rising, falling))
    bank.flags.writeable = False
    return bank


def mfcc_matrix(
    spec: Spectrogram,
    n_coeffs: int = N_MFCC,
    first_index: int = 0,
    n_filters: int = N_MEL_FILTERS,
) -> np.ndarray:
    """Mel-frequency cepstral coefficients per frame, shape (n_frames, n_coeffs).

    Power spectra are pooled by the mel filterbank, floored at 1e-10
    before the natural log so silence stays finite, and decorrelated with
    an orthonormal DCT-II. Coefficients ``first_index`` through
    ``first_index + n_coeffs - 1`` are kept.
    """
    if first_index < 0 or first_index + n_coeffs > n_filters:
        raise ValueError("requested coefficients exceed the filter count")
    bank = mel_filterbank(spec.sample_rate, spec.plan.fft_size, n_filters)
    mel_energy = (spec.mags**2) @ bank.T
    log_mel = np.log(np.maximum(mel_energy, MEL_LOG_FLOOR))
    coeffs = dct(log_mel, type=2, norm="ortho", axis=1)
    return coeffs[:, first_index : first_index + n_coeffs]


def mfcc(spec: Spectrogram, n: int, n_coeffs: int = N_MFCC, first_index: int = 0) -> np.ndarray:
    """Cepstral coefficients of frame ``n``."""
    return mfcc_matrix(spec, n_coeffs, first_index)[n]


def _signal_array(signal) -> np.ndarray:
    samples = getattr(signal, "samples", signal)
    return np.asarray(samples, dtype=np.float64)


def zero_crossings(signal, plan: FramePlan | None = None, n_frames: int = DEFAULT_N_FRAMES) -> np.ndarray:
    """Sign-change count per frame, treating 0 as positive."""
    x = _signal_array(signal)
    if plan is None:
        plan = FramePlan.for_signal(x.size, n_frames)
    frames = frame_signal(x, plan)
    signs = np.where(frames >= 0, 1.0, -1.0)
    return 0.5 * np.abs(np.diff(signs, axis=1)).sum(axis=1)


def autocorr_features(signal, n_lags: int = N_AUTOCORR_LAGS) -> np.ndarray:
    """Whole-part autocorrelation at lags 1..n_lags, normalized by lag 0.

    An all-zero signal yields all zeros; otherwise every value lies in
    [-1, 1].
    """
    x = _signal_array(signal)
    if x.size <= n_lags:
        raise ValueError(f"signal of {x.size} samples is too short for lag {n_lags}")
    energy = float(np.dot(x, x))
    if energy == 0.0:
        return np.zeros(n_lags)
    return np.array([np.dot(x[:-k], x[k:]) / energy for k in range(1, n_lags + 1)])


def extract_features(
    part,
    *,
    n_frames: int = DEFAULT_N_FRAMES,
    n_subbands: int = DEFAULT_N_SUBBANDS,
    n_mfcc: int = N_MFCC,
    mfcc_first: int = 0,
    mode_convention: str = "major-positive",
) -> FeatureVector:
    """Compute the full named feature vector for one 15-second part.

    Deterministic: the same samples always produce the same vector. Silent
    frames contribute zeros to the per-frame statistics, and a fully
    silent part still yields a well-defined vector.
    """
    names = feature_names(n_subbands, n_mfcc)
    part_id = getattr(part, "source_id", "")
    x = _signal_array(part)
    values: list[float] = []

    def _run(group: str, fn):
        try:
            return fn()
        except Exception as exc:
            raise FeatureError(f"{group} features failed for part {part_id!r}: {exc}") from exc

    def _spectrogram():
        plan = FramePlan.for_signal(x.size, n_frames)
        rate = getattr(part, "sample_rate", None)
        if rate is None:
            raise ValueError("part must carry a sample rate")
        return compute_spectrogram(x, rate, plan)

    spec = _run("spectral", _spectrogram)

    def _intensity():
        out = list(_mean_std(frame_intensities(spec)))
        plan = make_subband_plan(spec.sample_rate, n_subbands, spec.plan.fft_size)
        ratios = subband_ratio_matrix(spec, plan)
        for b in range(n_subbands):
            out.extend(_mean_std(ratios[:, b]))
        return out

    values += _run("Intensity", _intensity)

    def _timbre():
        out = list(_mean_std(spectral_centroids(spec)))
        out += _mean_std(rolloffs(spec))
        out += _mean_std(spectral_fluxes(spec))
        return out

    values += _run("Timbre", _timbre)

    def _mfcc():
        coeffs = mfcc_matrix(spec, n_mfcc, mfcc_first)
        out = []
        for j in range(n_mfcc):
            out.extend(_mean_std(coeffs[:, j]))
        return out

    values += _run("MFCC", _mfcc)

    def _rhythm():
        env = musical.onset_envelope(part)
        tempo, clarity = musical.tempo_and_clarity(env)
        return [tempo, clarity]

    values += _run("Rhythm", _rhythm)

    def _harmony():
        return [
            musical.mode_strength(spec, convention=mode_convention),
            musical.inharmonicity(part, spectrogram=spec),
        ]

    values += _run("Harmony", _harmony)

    def _temporal():
        out = list(_mean_std(zero_crossings(x, plan=spec.plan)))
        out.extend(autocorr_features(x))
        return out

    values += _run("Temporal", _temporal)

    return FeatureVector(np.array(values), names, part_id=part_id)


class FeatureExtractor(BaseEstimator, TransformerMixin):
    """Stateless transformer from 15-second parts to feature rows.

    ``transform`` accepts a sequence of parts and returns an
    (n_parts, n_features) float matrix whose columns follow
    :func:`feature_names` order. There is nothing to learn, so ``fit``
    only returns self; the class exists to slot the extraction step into
    estimator pipelines.

    Parameters
    ----------
    n_frames : frames per part for the per-frame features.
    n_subbands : dyadic sub-band count.
    n_mfcc : number of cepstral coefficients kept.
    mfcc_first : index of the first kept coefficient (0 keeps the
        log-energy-like coefficient, 1 drops it).
    mode_convention : "major-positive" or "minor-positive" sign of the
        mode feature.
    """

    def __init__(
        self,
        n_frames: int = DEFAULT_N_FRAMES,
        n_subbands: int = DEFAULT_N_SUBBANDS,
        n_mfcc: int = N_MFCC,
        mfcc_first: int = 0,
        mode_convention: str = "major-positive",
    ):
        self.n_frames = n_frames
        self.n_subbands = n_subbands
        self.n_mfcc = n_mfcc
        self.mfcc_first = mfcc_first
        self.mode_convention = mode_convention

    def fit(self, X=None, y=None):
        return self

    def transform(self, X) -> np.ndarray:
        rows = [
            extract_features(
                part,
                n_frames=self.n_frames,
                n_subbands=self.n_subbands,
                n_mfcc=self.n_mfcc,
                mfcc_first=self.mfcc_first,
                mode_convention=self.mode_convention,
            ).values
            for part in X
        ]
        if not rows:
            return np.empty((0, len(self.get_feature_names_out())))
        return np.vstack(rows)

    def get_feature_names_out(self, input_features=None) -> np.ndarray:
        return np.asarray(feature_names(self.n_subbands, self.n_mfcc), dtype=object)
