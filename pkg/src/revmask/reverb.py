"""Room impulse responses: reverberant/direct-path synthesis, eSNR, RT60.

The direct path is everything from the start of the response through a short
window after the strongest tap; later taps are the reverberant reflections.
Convolution runs in the frequency domain (overlap-add) so corpus sweeps stay
cheap even for multi-second impulse responses.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio_io import Waveform
from .errors import (
    AnechoicSignalError,
    InsufficientDecayError,
    SampleRateMismatchError,
    SilentSignalError,
)

# Energy decays by 60 dB over one RT60, i.e. amplitude by 10**-3.
_AMP_DECAY = 3.0 * np.log(10.0)


def detect_direct_path(taps) -> int:
    """Index of the maximum-magnitude tap (first occurrence on ties)."""
    taps = np.asarray(taps, dtype=np.float64)
    if taps.size == 0 or not np.any(taps):
        raise SilentSignalError("impulse response is empty or all zero")
    return int(np.argmax(np.abs(taps)))


@dataclass(frozen=True)
class RoomImpulseResponse:
    """Impulse-response taps, their sample rate, and the direct-path index."""

    taps: np.ndarray
    sample_rate: int
    direct_index: int = -1  # -1: detect from the taps

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=np.float64)
        if taps.ndim != 1 or taps.size == 0:
            raise ValueError("taps must be a non-empty 1-D sequence")
        if not np.isfinite(taps).all():
            raise ValueError("taps contain NaN or Inf")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        idx = self.direct_index
        if idx == -1:
            idx = detect_direct_path(taps)
        if not 0 <= idx < taps.size:
            raise ValueError(f"direct_index {idx} out of range")
        if abs(taps[idx]) < np.max(np.abs(taps)):
            raise ValueError("direct_index does not point at the strongest tap")
        object.__setattr__(self, "taps", taps)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))
        object.__setattr__(self, "direct_index", int(idx))

    def __len__(self) -> int:
        return self.taps.size

    @classmethod
    def from_waveform(cls, w: Waveform) -> "RoomImpulseResponse":
        return cls(w.samples, w.sample_rate)


def truncate_direct(rir: RoomImpulseResponse, window_ms: float = 5.0) -> RoomImpulseResponse:
    """Zero all taps later than window_ms after the direct-path impulse.

    The output keeps the input's length so direct and reverberant renderings
    stay aligned sample for sample.
    """
    if window_ms < 0:
        raise ValueError("window_ms must be non-negative")
    cut = rir.direct_index + round(window_ms * rir.sample_rate / 1000.0)
    taps = rir.taps.copy()
    taps[cut + 1 :] = 0.0
    return RoomImpulseResponse(taps, rir.sample_rate, rir.direct_index)


def _fft_convolve_full(x: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Full linear convolution via FFT overlap-add."""
    if x.size == 0 or h.size == 0:
        return np.zeros(0)
    if h.size > x.size:
        x, h = h, x
    n, m = x.size, h.size
    out_len = n + m - 1
    nfft_single = 1 << int(np.ceil(np.log2(out_len)))
    nfft_block = 1 << max(int(np.ceil(np.log2(4 * m))), 5)
    if nfft_block >= nfft_single:
        # One block is cheapest at this size.
        spec = np.fft.rfft(x, nfft_single) * np.fft.rfft(h, nfft_single)
        return np.fft.irfft(spec, nfft_single)[:out_len]
    step = nfft_block - m + 1
    kernel = np.fft.rfft(h, nfft_block)
    out = np.zeros(out_len)
    for start in range(0, n, step):
        block = np.fft.irfft(np.fft.rfft(x[start : start + step], nfft_block) * kernel, nfft_block)
        stop = min(start + nfft_block, out_len)
        out[start:stop] += block[: stop - start]
    return out


def convolve(signal: Waveform, rir: RoomImpulseResponse) -> Waveform:
    """Full linear convolution of a waveform with an impulse response."""
    if signal.sample_rate != rir.sample_rate:
        raise SampleRateMismatchError(
            f"signal at {signal.sample_rate} Hz, RIR at {rir.sample_rate} Hz"
        )
    return Waveform(_fft_convolve_full(signal.samples, rir.taps), signal.sample_rate)


def make_reverberant(s: Waveform, h: RoomImpulseResponse) -> Waveform:
    """Render the reverberant signal: the source convolved with the full RIR."""
    return convolve(s, h)


def make_direct(s: Waveform, h: RoomImpulseResponse, window_ms: float = 5.0) -> Waveform:
    """Render the direct-path signal via the truncated RIR.

    Same length as make_reverberant(s, h), so the two subtract cleanly.
    """
    return convolve(s, truncate_direct(h, window_ms))


def esnr(d: Waveform, y: Waveform) -> float:
    """Effective SNR in dB: direct-path energy over reverberant-residual energy."""
    if d.sample_rate != y.sample_rate:
        raise SampleRateMismatchError(f"{d.sample_rate} Hz vs {y.sample_rate} Hz")
    if len(d) != len(y):
        raise ValueError(f"length mismatch: {len(d)} vs {len(y)}")
    direct_energy = float(np.sum(d.samples**2))
    residual_energy = float(np.sum((y.samples - d.samples) ** 2))
    if residual_energy == 0.0:
        raise AnechoicSignalError("reverberant residual is identically zero")
    if direct_energy == 0.0:
        raise SilentSignalError("direct-path signal is silent")
    return 10.0 * np.log10(direct_energy / residual_energy)


def synth_rir(
    rt60_s: float,
    direct_delay_ms: float = 8.0,
    tail_onset_ms: float = 14.0,
    sample_rate: int = 16000,
    seed: int = 0,
) -> RoomImpulseResponse:
    """Deterministic synthetic RIR: unit direct impulse plus a decaying noise tail.

    The tail is Gaussian noise shaped so its energy falls by 60 dB over
    rt60_s. Useful as a reproducible stand-in for measured responses.
    """
    if rt60_s <= 0:
        raise ValueError("rt60_s must be positive")
    if direct_delay_ms < 0 or tail_onset_ms < direct_delay_ms:
        raise ValueError("need 0 <= direct_delay_ms <= tail_onset_ms")
    if sample_rate <= 0:
        raise ValueError("sample_rate must be positive")
    rng = np.random.default_rng(seed)
    direct_idx = round(direct_delay_ms * sample_rate / 1000.0)
    onset_idx = round(tail_onset_ms * sample_rate / 1000.0)
    n = onset_idx + int(np.ceil(1.5 * rt60_s * sample_rate)) + 1
    taps = np.zeros(n)
    t = np.arange(n - onset_idx) / sample_rate
    tail = 0.08 * rng.standard_normal(n - onset_idx) * np.exp(-_AMP_DECAY * t / rt60_s)
    # keep the direct impulse the unique strongest tap
    taps[onset_idx:] = np.clip(tail, -0.99, 0.99)
    taps[direct_idx] = 1.0
    return RoomImpulseResponse(taps, sample_rate, direct_idx)


def estimate_rt60(rir: RoomImpulseResponse) -> float:
    """Reverberation time from Schroeder backward integration.

    A line is fitted to the energy-decay curve between -5 dB and -25 dB and
    extrapolated to 60 dB of decay.
    """
    energy = np.cumsum((rir.taps**2)[::-1])[::-1]
    nonzero = np.flatnonzero(energy > 0)
    if nonzero.size == 0:
        raise InsufficientDecayError("impulse response has no energy")
    energy = energy[: nonzero[-1] + 1]
    decay_db = 10.0 * np.log10(energy / energy[0])
    if decay_db[-1] > -25.0:
        raise InsufficientDecayError(
            f"decay curve only reaches {decay_db[-1]:.1f} dB; need -25 dB"
        )
    sel = (decay_db <= -5.0) & (decay_db >= -25.0)
    if np.count_nonzero(sel) < 2:
        raise InsufficientDecayError("fewer than 2 samples in the -5..-25 dB fit span")
    t = np.flatnonzero(sel) / rir.sample_rate
    slope, _ = np.polyfit(t, decay_db[sel], 1)
    if slope >= 0:
        raise InsufficientDecayError("energy-decay curve is not decreasing")
    return float(-60.0 / slope)
