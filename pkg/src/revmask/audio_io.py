"""Mono waveform I/O, polyphase resampling, and group RMS normalization."""
from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass
from functools import lru_cache
from math import gcd
from pathlib import Path

import numpy as np
from scipy.signal import firwin, kaiserord, resample_poly

from .errors import (
    ClippingError,
    MalformedWavError,
    SilentSignalError,
    UnsupportedWavError,
)

_FMT_PCM = 0x0001
_FMT_IEEE_FLOAT = 0x0003
_FMT_EXTENSIBLE = 0xFFFE

# Resampler design: stopband begins at the tighter Nyquist with >= 80 dB
# rejection, transition width 8% of the cutoff.
_STOPBAND_DB = 80.0
_TRANSITION_FRAC = 0.08


@dataclass(frozen=True)
class Waveform:
    """A mono signal: dimensionless samples plus their sample rate in Hz."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError(f"expected 1-D mono samples, got shape {samples.shape}")
        rate = self.sample_rate
        if not isinstance(rate, (int, np.integer)) or rate <= 0:
            raise ValueError(f"sample_rate must be a positive integer, got {rate!r}")
        if samples.size and not np.isfinite(samples).all():
            raise ValueError("samples contain NaN or Inf")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(rate))

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate

    def rms(self) -> float:
        if not self.samples.size:
            return 0.0
        return float(np.sqrt(np.mean(self.samples**2)))

    def peak(self) -> float:
        if not self.samples.size:
            return 0.0
        return float(np.max(np.abs(self.samples)))

    def scaled(self, factor: float) -> "Waveform":
        return Waveform(self.samples * factor, self.sample_rate)


def read_wav(path) -> Waveform:
    """Read a RIFF WAV file and return its first channel scaled to [-1, 1].

    Integer PCM (16/24/32 bit) and IEEE float (32/64 bit) encodings are
    accepted, including the WAVE_FORMAT_EXTENSIBLE wrapper. Multi-channel
    files produce a warning and only channel 0 is kept.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such WAV file: {path}")
    raw = path.read_bytes()
    if len(raw) < 12 or raw[0:4] != b"RIFF" or raw[8:12] != b"WAVE":
        raise MalformedWavError(f"{path}: not a RIFF/WAVE file")

    fmt_chunk = data_chunk = None
    pos = 12
    while pos + 8 <= len(raw):
        cid = raw[pos : pos + 4]
        (size,) = struct.unpack_from("<I", raw, pos + 4)
        body = raw[pos + 8 : pos + 8 + size]
        if len(body) < size:
            raise MalformedWavError(f"{path}: truncated '{cid.decode(errors='replace')}' chunk")
        if cid == b"fmt ":
            fmt_chunk = body
        elif cid == b"data":
            data_chunk = body
        pos += 8 + size + (size & 1)  # chunks are word-aligned
    if fmt_chunk is None or data_chunk is None:
        raise MalformedWavError(f"{path}: missing fmt or data chunk")
    if len(fmt_chunk) < 16:
        raise MalformedWavError(f"{path}: fmt chunk too short")

    fmt_code, n_channels, rate = struct.unpack_from("<HHI", fmt_chunk, 0)
    (bits,) = struct.unpack_from("<H", fmt_chunk, 14)
    if fmt_code == _FMT_EXTENSIBLE:
        if len(fmt_chunk) < 26:
            raise MalformedWavError(f"{path}: extensible fmt chunk too short")
        (fmt_code,) = struct.unpack_from("<H", fmt_chunk, 24)
    if n_channels < 1 or rate < 1:
        raise MalformedWavError(f"{path}: invalid channel count or sample rate")

    samples = _decode_samples(fmt_code, bits, data_chunk, path)
    if n_channels > 1:
        frames = samples.size // n_channels
        samples = samples[: frames * n_channels].reshape(frames, n_channels)[:, 0]
        warnings.warn(f"{path}: {n_channels} channels, keeping channel 0", stacklevel=2)
    return Waveform(samples, int(rate))


def _decode_samples(fmt_code: int, bits: int, data: bytes, path: Path) -> np.ndarray:
    if fmt_code == _FMT_PCM:
        if bits == 16:
            return np.frombuffer(data[: len(data) // 2 * 2], dtype="<i2").astype(np.float64) / 32768.0
        if bits == 24:
            frames = len(data) // 3
            b = np.frombuffer(data[: frames * 3], dtype=np.uint8).reshape(frames, 3).astype(np.int32)
            value = b[:, 0] | (b[:, 1] << 8) | (b[:, 2] << 16)
            value = np.where(value >= 1 << 23, value - (1 << 24), value)
            return value.astype(np.float64) / float(1 << 23)
        if bits == 32:
            return np.frombuffer(data[: len(data) // 4 * 4], dtype="<i4").astype(np.float64) / float(1 << 31)
        raise UnsupportedWavError(f"{path}: {bits}-bit integer PCM not supported")
    if fmt_code == _FMT_IEEE_FLOAT:
        if bits == 32:
            return np.frombuffer(data[: len(data) // 4 * 4], dtype="<f4").astype(np.float64)
        if bits == 64:
            return np.frombuffer(data[: len(data) // 8 * 8], dtype="<f8").astype(np.float64)
        raise UnsupportedWavError(f"{path}: {bits}-bit float not supported")
    raise UnsupportedWavError(f"{path}: WAV format code 0x{fmt_code:04x} not supported")


def write_wav(w: Waveform, path, bit_depth: str = "float32") -> None:
    """Write a mono WAV file as 16-bit PCM ("pcm16") or 32-bit float ("float32").

    At 16-bit depth, samples outside [-1, 1] raise ClippingError instead of
    being clamped silently.
    """
    if bit_depth == "pcm16":
        if w.samples.size and np.max(np.abs(w.samples)) > 1.0:
            raise ClippingError(
                f"peak {np.max(np.abs(w.samples)):.6g} exceeds 1.0; refusing to clip at 16-bit"
            )
        payload = np.round(w.samples * 32767.0).astype("<i2").tobytes()
        fmt_code, bits = _FMT_PCM, 16
    elif bit_depth == "float32":
        payload = w.samples.astype("<f4").tobytes()
        fmt_code, bits = _FMT_IEEE_FLOAT, 32
    else:
        raise ValueError(f"bit_depth must be 'pcm16' or 'float32', got {bit_depth!r}")

    block_align = bits // 8
    byte_rate = w.sample_rate * block_align
    header = struct.pack(
        "<4sI4s4sIHHIIHH",
        b"RIFF",
        0,  # patched below
        b"WAVE",
        b"fmt ",
        16,
        fmt_code,
        1,
        w.sample_rate,
        byte_rate,
        block_align,
        bits,
    )
    fact = b""
    if fmt_code == _FMT_IEEE_FLOAT:
        fact = struct.pack("<4sII", b"fact", 4, len(w))
    data_hdr = struct.pack("<4sI", b"data", len(payload))
    body = header[12:] + fact + data_hdr + payload
    if len(payload) & 1:
        body += b"\x00"
    blob = struct.pack("<4sI4s", b"RIFF", 4 + len(body), b"WAVE") + body
    Path(path).write_bytes(blob)


@lru_cache(maxsize=32)
def _resample_filter(up: int, down: int) -> np.ndarray:
    max_rate = max(up, down)
    cutoff = 1.0 / max_rate  # the tighter Nyquist, relative to the upsampled one
    width = _TRANSITION_FRAC * cutoff
    numtaps, beta = kaiserord(_STOPBAND_DB, width)
    numtaps |= 1
    taps = firwin(numtaps, cutoff - width / 2.0, window=("kaiser", beta))
    taps.flags.writeable = False  # shared across calls
    return taps


def resample(w: Waveform, target_rate: int) -> Waveform:
    """Resample to target_rate with a windowed-sinc polyphase filter."""
    if not isinstance(target_rate, (int, np.integer)) or target_rate <= 0:
        raise ValueError(f"target_rate must be a positive integer, got {target_rate!r}")
    target_rate = int(target_rate)
    if target_rate == w.sample_rate:
        return Waveform(w.samples.copy(), target_rate)
    if not len(w):
        return Waveform(np.zeros(0), target_rate)
    g = gcd(w.sample_rate, target_rate)
    up, down = target_rate // g, w.sample_rate // g
    out = resample_poly(w.samples, up, down, window=_resample_filter(up, down))
    return Waveform(out, target_rate)


def normalize_rms_group(ws: list[Waveform]) -> list[Waveform]:
    """Scale every waveform to one shared RMS, the largest that avoids clipping.

    Each output is a positive multiple of its input; the member with the
    highest crest factor ends up with peak magnitude exactly 1.
    """
    if not ws:
        return []
    rms = np.array([w.rms() for w in ws])
    if np.any(rms == 0.0):
        silent = int(np.argmax(rms == 0.0))
        raise SilentSignalError(f"waveform {silent} in group is silent")
    peak = np.array([w.peak() for w in ws])
    headroom = rms / peak
    limiter = int(np.argmin(headroom))
    target = headroom[limiter]
    out = []
    for i, w in enumerate(ws):
        if i == limiter:
            scaled = w.samples / peak[i]  # x/x == 1, so the peak is exactly 1.0
        else:
            scaled = w.samples * (target / rms[i])
            top = np.max(np.abs(scaled)) if scaled.size else 0.0
            if top > 1.0:
                scaled = scaled / top  # rounding guard, at most one ulp
        out.append(Waveform(scaled, w.sample_rate))
    return out
