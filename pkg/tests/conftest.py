"""Shared builders: WAV byte strings, synthetic parts, and slow-path oracles."""

from __future__ import annotations

import struct

import numpy as np
import pytest

from emotag.audio import AudioBuffer, AudioPart

RATE = 22050
PART_SAMPLES = 15 * RATE


def wav_bytes(
    samples: np.ndarray,
    rate: int = RATE,
    bits: int = 16,
    fmt: str = "pcm",
    extra_chunks: list | None = None,
) -> bytes:
    """Build a RIFF/WAVE byte string sample by sample.

    ``samples`` is (n,) mono or (n, channels); values are floats in
    [-1, 1] that get quantized to the requested width. Constructed with
    struct so decoder tests never depend on the code under test.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim == 1:
        samples = samples[:, None]
    channels = samples.shape[1]

    if fmt == "float":
        audio_format, bits = 3, 32
        payload = samples.astype("<f4").tobytes()
    elif bits == 8:
        audio_format = 1
        payload = (np.clip(np.round(samples * 128 + 128), 0, 255).astype(np.uint8)).tobytes()
    elif bits == 16:
        audio_format = 1
        payload = np.clip(np.round(samples * 32768), -32768, 32767).astype("<i2").tobytes()
    elif bits == 24:
        audio_format = 1
        vals = np.clip(np.round(samples * 8388608), -8388608, 8388607).astype(np.int64)
        raw = np.empty((vals.size, 3), dtype=np.uint8)
        flat = vals.reshape(-1)
        raw[:, 0] = flat & 0xFF
        raw[:, 1] = (flat >> 8) & 0xFF
        raw[:, 2] = (flat >> 16) & 0xFF
        payload = raw.tobytes()
    else:
        raise ValueError(f"unsupported bits {bits}")

    block_align = channels * bits // 8
    fmt_chunk = struct.pack(
        "<HHIIHH", audio_format, channels, rate, rate * block_align, block_align, bits
    )
    chunks = [(b"fmt ", fmt_chunk)]
    chunks += extra_chunks or []
    chunks.append((b"data", payload))
    body = b"WAVE"
    for cid, cbody in chunks:
        body += cid + struct.pack("<I", len(cbody)) + cbody
        if len(cbody) & 1:
            body += b"\x00"
    return b"RIFF" + struct.pack("<I", len(body)) + body


def make_part(samples: np.ndarray, rate: int = RATE, source_id: str = "") -> AudioPart:
    return AudioPart(AudioBuffer(samples, rate), source_id=source_id)


def sine_part(freq: float, amp: float = 0.8, rate: int = RATE, phase: float = 0.0) -> AudioPart:
    t = np.arange(15 * rate) / rate
    return make_part(amp * np.sin(2 * np.pi * freq * t + phase), rate)


def silence_part(rate: int = RATE) -> AudioPart:
    return make_part(np.zeros(15 * rate), rate)


def noise_part(seed: int = 0, amp: float = 0.9, rate: int = RATE) -> AudioPart:
    rng = np.random.default_rng(seed)
    return make_part(amp * rng.uniform(-1.0, 1.0, 15 * rate), rate)


def click_train_part(bpm: float, seed: int = 0, rate: int = RATE) -> AudioPart:
    """Short decaying noise bursts repeating at the given tempo."""
    rng = np.random.default_rng(seed)
    n = 15 * rate
    x = np.zeros(n)
    period = 60.0 / bpm * rate
    burst = rng.standard_normal(64) * np.exp(-np.arange(64) / 16.0)
    burst = 0.9 * burst / np.max(np.abs(burst))
    pos = 0.0
    while int(pos) + burst.size < n:
        x[int(pos) : int(pos) + burst.size] += burst
        pos += period
    return make_part(np.clip(x, -1.0, 1.0), rate)


def complex_tone_part(freq_amp_pairs, rate: int = RATE) -> AudioPart:
    """Sum of sines scaled to peak 0.9."""
    t = np.arange(15 * rate) / rate
    x = np.zeros(t.size)
    for f, a in freq_amp_pairs:
        x += a * np.sin(2 * np.pi * f * t)
    x = 0.9 * x / np.max(np.abs(x))
    return make_part(x, rate)


def triad_part(root_hz: float, quality: str, rate: int = RATE) -> AudioPart:
    """Root-doubled triad voicing with 4 harmonics per note.

    The doubled root gives the chromagram the tonic-heavy weighting a
    real tonal excerpt has, which bare single-octave triads lack.
    """
    third = 4 if quality == "major" else 3
    voicing = [
        (root_hz / 2, 1.5),
        (root_hz, 1.0),
        (root_hz * 2 ** (third / 12), 0.8),
        (root_hz * 2 ** (7 / 12), 0.9),
    ]
    t = np.arange(15 * rate) / rate
    x = np.zeros(t.size)
    for f, a in voicing:
        for h in range(1, 5):
            x += (a / h) * np.sin(2 * np.pi * f * h * t + 0.1 * h)
    x = 0.9 * x / np.max(np.abs(x))
    return make_part(x, rate)


def naive_dft_magnitude(frame: np.ndarray, fft_size: int) -> np.ndarray:
    """Direct-summation DFT magnitude over bins [0, fft_size/2).

    O(N*K) matrix evaluation of the transform definition; no FFT
    algorithm involved, so it is an independent check of the fast path.
    """
    x = np.zeros(fft_size)
    x[: frame.size] = frame
    k = np.arange(fft_size // 2)[:, None]
    n = np.arange(fft_size)[None, :]
    basis = np.exp(-2j * np.pi * k * n / fft_size)
    return np.abs(basis @ x)


@pytest.fixture(scope="session")
def sine441():
    return sine_part(441.0)


@pytest.fixture(scope="session")
def noise7():
    return noise_part(seed=7)
