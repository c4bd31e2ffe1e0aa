"""ACE-like analysis front end: framing, short-time spectra, channel envelopes."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import get_window

from .audio_io import Waveform
from .errors import SampleRateMismatchError


@dataclass(frozen=True)
class AnalysisConfig:
    """Filterbank settings: FFT framing plus the bin-to-channel allocation."""

    sample_rate: int = 16000
    fft_size: int = 128
    hop: int = 16
    window: str = "hann"
    num_channels: int = 22

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if self.fft_size < 8 or self.fft_size % 2:
            raise ValueError("fft_size must be an even integer >= 8")
        if not 1 <= self.hop <= self.fft_size:
            raise ValueError("hop must satisfy 1 <= hop <= fft_size")
        if self.window != "hann":
            raise ValueError(f"unsupported window {self.window!r}")
        usable = self.fft_size // 2 - 1
        if not 1 <= self.num_channels <= usable:
            raise ValueError(
                f"num_channels must be in [1, {usable}] for fft_size {self.fft_size}"
            )

    @property
    def frame_rate(self) -> float:
        return self.sample_rate / self.hop

    def to_dict(self) -> dict:
        return {
            "sample_rate": self.sample_rate,
            "fft_size": self.fft_size,
            "hop": self.hop,
            "window": self.window,
            "num_channels": self.num_channels,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AnalysisConfig":
        return cls(**d)


@dataclass(frozen=True)
class EnvelopeGrid:
    """Frames-by-channels matrix of non-negative channel envelope magnitudes."""

    values: np.ndarray
    frame_rate: float
    center_freqs: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        freqs = np.asarray(self.center_freqs, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError(f"values must be 2-D (frames x channels), got {values.shape}")
        if values.size and (not np.isfinite(values).all() or values.min() < 0):
            raise ValueError("envelope values must be finite and non-negative")
        if freqs.shape != (values.shape[1],):
            raise ValueError("center_freqs length must match the channel count")
        if freqs.size > 1 and not np.all(np.diff(freqs) > 0):
            raise ValueError("center_freqs must be strictly increasing")
        if self.frame_rate <= 0:
            raise ValueError("frame_rate must be positive")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "center_freqs", freqs)

    @property
    def num_frames(self) -> int:
        return self.values.shape[0]

    @property
    def num_channels(self) -> int:
        return self.values.shape[1]


def _geometric_widths(n_bins: int, n_channels: int) -> np.ndarray:
    """Non-decreasing integer widths summing to n_bins, approximately geometric."""
    if n_channels == 1:
        return np.array([n_bins])
    if n_channels == n_bins:
        return np.ones(n_channels, dtype=int)
    # ratio of the series 1 + r + ... + r^(C-1) = n_bins
    lo, hi = 1.0, 2.0
    while (hi**n_channels - 1.0) / (hi - 1.0) < n_bins:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if (mid**n_channels - 1.0) / (mid - 1.0) < n_bins:
            lo = mid
        else:
            hi = mid
    target = (0.5 * (lo + hi)) ** np.arange(n_channels, dtype=np.float64)
    widths = np.floor(target).astype(int)
    remainder = n_bins - int(widths.sum())
    # Largest fractional parts get the leftover bins, ties toward the higher
    # channel, which keeps the widths non-decreasing.
    frac = target - widths
    order = np.lexsort((-np.arange(n_channels), -frac))
    widths[order[:remainder]] += 1
    return widths


def channel_table(cfg: AnalysisConfig) -> tuple[list[np.ndarray], np.ndarray]:
    """Allocate FFT bins to channels and compute channel center frequencies.

    Bins 2 through fft_size/2 are split into contiguous groups whose widths
    grow toward high frequencies; DC and the two lowest bins carry no speech
    and are excluded. The center frequency is the mean frequency of a
    group's bins.
    """
    lo = 2
    hi = cfg.fft_size // 2 + 1  # upper bin is inclusive
    widths = _geometric_widths(hi - lo, cfg.num_channels)
    edges = lo + np.concatenate(([0], np.cumsum(widths)))
    bands = [np.arange(edges[i], edges[i + 1]) for i in range(cfg.num_channels)]
    bin_hz = cfg.sample_rate / cfg.fft_size
    center_freqs = np.array([band.mean() * bin_hz for band in bands])
    return bands, center_freqs


def analyze(w: Waveform, cfg: AnalysisConfig) -> EnvelopeGrid:
    """Channel envelopes of a waveform: Hann-framed FFT, power summed per band.

    Frame k starts at sample k*hop; trailing frames are zero-padded, so the
    frame count is ceil(len(w) / hop).
    """
    if w.sample_rate != cfg.sample_rate:
        raise SampleRateMismatchError(
            f"waveform at {w.sample_rate} Hz, config expects {cfg.sample_rate} Hz"
        )
    if not len(w):
        raise ValueError("cannot analyze an empty waveform")
    hop, nfft = cfg.hop, cfg.fft_size
    n_frames = -(-len(w) // hop)
    padded_len = (n_frames - 1) * hop + nfft
    x = np.pad(w.samples, (0, padded_len - len(w)))
    frames = sliding_window_view(x, nfft)[::hop]
    window = get_window("hann", nfft, fftbins=True)
    power = np.abs(np.fft.rfft(frames * window, axis=1)) ** 2
    bands, center_freqs = channel_table(cfg)
    values = np.empty((n_frames, cfg.num_channels))
    for c, band in enumerate(bands):
        values[:, c] = np.sqrt(power[:, band].sum(axis=1))
    return EnvelopeGrid(values, cfg.frame_rate, center_freqs)
