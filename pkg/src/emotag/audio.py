"""Audio decoding and preparation.

Every music part analysed by the toolkit goes through the same
standardization pipeline: decode from WAV, fold to mono, resample to the
canonical rate, cut an exact 15-second window, and scale to a fixed peak
level. :func:`prepare_part` runs the whole pipeline on raw bytes.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.signal import resample_poly

CANONICAL_RATE = 22050
PART_SECONDS = 15
DEFAULT_PEAK = 0.99

# Kaiser-windowed sinc interpolation; beta 8.555 gives ~90 dB stopband.
_KAISER_BETA = 8.555

# (format tag, bits per sample) pairs the decoder accepts.
_SUPPORTED_CODECS = {(1, 8), (1, 16), (1, 24), (3, 32)}


class AudioDecodeError(ValueError):
    """Raised when a byte stream cannot be decoded as RIFF/WAVE audio."""


@dataclass(frozen=True)
class AudioBuffer:
    """Mono audio samples together with their sample rate.

    Samples are float64 amplitudes. After peak normalization they lie in
    [-1, 1]; intermediate buffers (for example right after resampling) may
    overshoot slightly, so the only invariant enforced here is finiteness.
    The array is copied and marked read-only so buffers can be shared.
    """

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self) -> None:
        samples = np.array(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError("AudioBuffer samples must be one-dimensional (mono)")
        if samples.size and not np.all(np.isfinite(samples)):
            raise ValueError("AudioBuffer samples must be finite")
        if not isinstance(self.sample_rate, (int, np.integer)) or self.sample_rate <= 0:
            raise ValueError("sample_rate must be a positive integer")
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    @property
    def duration(self) -> float:
        """Length in seconds."""
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class AudioPart:
    """Exactly 15 seconds of mono audio, the unit all features are computed on."""

    buffer: AudioBuffer
    source_id: str = ""
    start_offset: float = 0.0

    def __post_init__(self) -> None:
        expected = PART_SECONDS * self.buffer.sample_rate
        got = self.buffer.samples.size
        if got != expected:
            raise ValueError(
                f"a part must hold exactly {PART_SECONDS} s of audio "
                f"({expected} samples at {self.buffer.sample_rate} Hz), got {got} samples"
            )
        if self.start_offset < 0:
            raise ValueError("start_offset must be non-negative")

    @property
    def samples(self) -> np.ndarray:
        return self.buffer.samples

    @property
    def sample_rate(self) -> int:
        return self.buffer.sample_rate


def decode_wav(data: bytes) -> AudioBuffer:
    """Decode a RIFF/WAVE byte string into a mono :class:`AudioBuffer`.

    Supports 8/16/24-bit integer PCM and 32-bit float payloads with any
    channel count. Integer samples are scaled onto [-1, 1] by their
    full-scale value, float samples are clipped to [-1, 1], and
    multichannel audio is folded to mono by averaging the channels.

    Args:
        data: complete file contents.

    Returns:
        Decoded mono buffer at the rate declared by the file.

    Raises:
        AudioDecodeError: if the container, fmt chunk, or data chunk is
            missing, malformed, truncated, or uses an unsupported codec.
    """
    if len(data) < 12 or data[:4] != b"RIFF":
        raise AudioDecodeError("not a RIFF container")
    if data[8:12] != b"WAVE":
        raise AudioDecodeError("RIFF container does not hold WAVE audio")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        chunk_id = data[pos : pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8 : pos + 8 + size]
        if chunk_id == b"fmt ":
            if size < 16 or len(body) < 16:
                raise AudioDecodeError("malformed fmt chunk")
            tag, channels, rate, _, _, bits = struct.unpack_from("<HHIIHH", body, 0)
            if tag == 0xFFFE:
                # WAVE_FORMAT_EXTENSIBLE: the real format tag leads the GUID.
                if len(body) < 26:
                    raise AudioDecodeError("malformed fmt chunk (truncated extensible header)")
                (tag,) = struct.unpack_from("<H", body, 24)
            fmt = (tag, channels, rate, bits)
        elif chunk_id == b"data":
            if len(body) < size:
                raise AudioDecodeError("truncated data chunk")
            payload = body
        # Chunks are word-aligned; odd sizes carry one pad byte.
        pos += 8 + size + (size & 1)

    if fmt is None:
        raise AudioDecodeError("missing fmt chunk")
    if payload is None:
        raise AudioDecodeError("missing data chunk")

    tag, channels, rate, bits = fmt
    if channels < 1:
        raise AudioDecodeError("fmt chunk declares zero channels")
    if rate <= 0:
        raise AudioDecodeError("fmt chunk declares a non-positive sample rate")
    if (tag, bits) not in _SUPPORTED_CODECS:
        raise AudioDecodeError(
            f"unsupported codec in fmt chunk (format tag {tag}, {bits}-bit)"
        )

    frame_bytes = channels * (bits // 8)
    if len(payload) % frame_bytes:
        raise AudioDecodeError("truncated data chunk (partial sample frame)")

    if bits == 8:
        # 8-bit WAV is unsigned with midpoint 128.
        x = (np.frombuffer(payload, dtype=np.uint8).astype(np.float64) - 128.0) / 128.0
    elif bits == 16:
        x = np.frombuffer(payload, dtype="<i2").astype(np.float64) / 32768.0
    elif bits == 24:
        raw = np.frombuffer(payload, dtype=np.uint8).reshape(-1, 3).astype(np.int64)
        vals = raw[:, 0] | (raw[:, 1] << 8) | (raw[:, 2] << 16)
        vals = (vals ^ 0x800000) - 0x800000  # sign-extend 24 -> 64 bits
        x = vals.astype(np.float64) / 8388608.0
    else:
        x = np.frombuffer(payload, dtype="<f4").astype(np.float64)
        if x.size and not np.all(np.isfinite(x)):
            raise AudioDecodeError("float data chunk contains non-finite samples")
        x = np.clip(x, -1.0, 1.0)

    if channels > 1:
        x = x.reshape(-1, channels).mean(axis=1)
    return AudioBuffer(x, int(rate))


def resample(buf: AudioBuffer, target_rate: int) -> AudioBuffer:
    """Resample a buffer with a Kaiser-windowed sinc (polyphase) filter.

    The output holds round(n * target_rate / source_rate) samples.
    Downsampling applies the matching anti-alias low-pass, so content
    above the new Nyquist frequency is attenuated rather than folded.

    Args:
        buf: source audio, must be non-empty.
        target_rate: desired rate in Hz.

    Returns:
        A buffer at ``target_rate``. When the rate already matches, the
        input buffer itself is returned with identical samples.
    """
    if buf.samples.size == 0:
        raise ValueError("cannot resample an empty buffer")
    if target_rate <= 0:
        raise ValueError("target_rate must be positive")
    if target_rate == buf.sample_rate:
        return buf
    ratio = Fraction(int(target_rate), buf.sample_rate)
    out = resample_poly(
        buf.samples, ratio.numerator, ratio.denominator, window=("kaiser", _KAISER_BETA)
    )
    n_out = int(np.floor(buf.samples.size * target_rate / buf.sample_rate + 0.5))
    if out.size < n_out:
        out = np.pad(out, (0, n_out - out.size))
    return AudioBuffer(out[:n_out], int(target_rate))


def normalize_peak(buf: AudioBuffer, target_peak: float = DEFAULT_PEAK) -> AudioBuffer:
    """Scale a buffer so its absolute peak equals ``target_peak``.

    Raises:
        ValueError: on silent input (all-zero samples cannot be scaled to
            a positive peak) or a target outside (0, 1].
    """
    if not 0.0 < target_peak <= 1.0:
        raise ValueError("target_peak must lie in (0, 1]")
    peak = float(np.max(np.abs(buf.samples))) if buf.samples.size else 0.0
    if peak == 0.0:
        raise ValueError("silent input: cannot normalize an all-zero buffer")
    if peak == target_peak:
        return buf
    return AudioBuffer(buf.samples * (target_peak / peak), buf.sample_rate)


def extract_part(buf: AudioBuffer, start: float = 0.0, source_id: str = "") -> AudioPart:
    """Cut the 15-second window starting ``start`` seconds into the buffer.

    The start is rounded to the nearest sample. Requesting a window that
    runs past the end of the buffer is an error that reports how much
    audio was available.
    """
    if start < 0:
        raise ValueError("start must be non-negative")
    n_part = PART_SECONDS * buf.sample_rate
    start_idx = int(round(start * buf.sample_rate))
    if start_idx + n_part > buf.samples.size:
        raise ValueError(
            f"part window [{start:g}, {start + PART_SECONDS:g}) s is out of range: "
            f"buffer holds {buf.duration:.3f} s, need {start + PART_SECONDS:g} s"
        )
    window = buf.samples[start_idx : start_idx + n_part]
    return AudioPart(AudioBuffer(window, buf.sample_rate), source_id, float(start))


def prepare_part(
    data: bytes,
    start: float = 0.0,
    *,
    sample_rate: int = CANONICAL_RATE,
    peak_target: float = DEFAULT_PEAK,
    source_id: str = "",
) -> AudioPart:
    """Run the full preparation pipeline on raw WAV bytes.

    Decodes, resamples to ``sample_rate``, cuts the 15-second window at
    ``start`` seconds, and peak-normalizes the result. Peak normalization
    runs last so the analysed window itself, not the whole track, hits
    the target level.
    """
    buf = decode_wav(data)
    buf = resample(buf, sample_rate)
    part = extract_part(buf, start, source_id=source_id)
    normalized = normalize_peak(part.buffer, peak_target)
    return AudioPart(normalized, part.source_id, part.start_offset)
