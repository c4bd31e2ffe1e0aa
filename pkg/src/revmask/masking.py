"""Per-unit speech-to-reverberant ratios and the binary/ratio gain masks.

The SRR of a time-frequency unit is the energy of the direct-path envelope
over the energy of the reverberant residual in that unit. Values saturate at
+/- 75 dB, and the linear ratio carries the matching 10**+/-7.5 saturation so
the ratio-mask gain function sees the same numbers the dB view describes.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeMismatchError
from .tf_analysis import EnvelopeGrid

SRR_CLAMP_DB = 75.0
_LIN_HI = 10.0 ** (SRR_CLAMP_DB / 10.0)
_LIN_LO = 10.0 ** (-SRR_CLAMP_DB / 10.0)


@dataclass(frozen=True)
class SRRGrid:
    """Speech-to-reverberant ratio per unit, in dB and as a linear ratio."""

    db_values: np.ndarray
    linear_values: np.ndarray
    frame_rate: float
    center_freqs: np.ndarray

    def __post_init__(self):
        db = np.asarray(self.db_values, dtype=np.float64)
        lin = np.asarray(self.linear_values, dtype=np.float64)
        if db.ndim != 2 or db.shape != lin.shape:
            raise ValueError("db_values and linear_values must share a 2-D shape")
        if db.size and (db.min() < -SRR_CLAMP_DB - 1e-9 or db.max() > SRR_CLAMP_DB + 1e-9):
            raise ValueError("db_values outside the +/-75 dB clamp")
        if lin.size and (not np.isfinite(lin).all() or lin.min() < 0):
            raise ValueError("linear_values must be finite and non-negative")
        object.__setattr__(self, "db_values", db)
        object.__setattr__(self, "linear_values", lin)

    @property
    def shape(self) -> tuple[int, int]:
        return self.db_values.shape


@dataclass(frozen=True)
class GainMask:
    """Frames-by-channels gains in [0, 1], binary or ratio, plus parameters."""

    gains: np.ndarray
    kind: str  # "binary" | "ratio"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        gains = np.asarray(self.gains, dtype=np.float64)
        if gains.ndim != 2:
            raise ValueError("gains must be 2-D (frames x channels)")
        if self.kind not in ("binary", "ratio"):
            raise ValueError(f"kind must be 'binary' or 'ratio', got {self.kind!r}")
        if gains.size:
            if not np.isfinite(gains).all() or gains.min() < 0 or gains.max() > 1:
                raise ValueError("gains must lie in [0, 1]")
            if self.kind == "binary" and not np.all((gains == 0) | (gains == 1)):
                raise ValueError("binary mask gains must be exactly 0 or 1")
        object.__setattr__(self, "gains", gains)

    @property
    def shape(self) -> tuple[int, int]:
        return self.gains.shape


def _check_aligned(a: EnvelopeGrid, b: EnvelopeGrid) -> None:
    if a.values.shape != b.values.shape:
        raise ShapeMismatchError(f"grid shapes differ: {a.values.shape} vs {b.values.shape}")
    if a.frame_rate != b.frame_rate:
        raise ShapeMismatchError(f"frame rates differ: {a.frame_rate} vs {b.frame_rate}")
    if not np.array_equal(a.center_freqs, b.center_freqs):
        raise ShapeMismatchError("channel center frequencies differ")


def srr_grid(direct: EnvelopeGrid, reverberant: EnvelopeGrid) -> SRRGrid:
    """SRR per unit from the direct-path and reverberant envelope grids.

    Units with a zero residual but direct energy saturate high; units with
    neither saturate low, so silence is deleted rather than retained.
    """
    _check_aligned(direct, reverberant)
    num = direct.values**2
    den = (reverberant.values - direct.values) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        linear = np.where(den > 0.0, num / den, np.where(num > 0.0, _LIN_HI, _LIN_LO))
    linear = np.clip(linear, _LIN_LO, _LIN_HI)
    db = 10.0 * np.log10(linear)
    return SRRGrid(db, linear, direct.frame_rate, direct.center_freqs)


def ibm(srr: SRRGrid, tau_db: float, esnr_db: float = 0.0) -> GainMask:
    """Ideal binary mask: retain units whose SRR strictly exceeds tau + eSNR."""
    if not np.isfinite(tau_db) or not np.isfinite(esnr_db):
        raise ValueError("tau_db and esnr_db must be finite")
    local_threshold = tau_db + esnr_db
    gains = (srr.db_values > local_threshold).astype(np.float64)
    return GainMask(gains, "binary", {"tau_db": float(tau_db), "esnr_db": float(esnr_db)})


def irm(srr: SRRGrid, alpha: float, beta: float) -> GainMask:
    """Ideal ratio mask: gain = (lSRR / (lSRR + alpha)) ** beta per unit.

    alpha shifts the gain curve along the SRR axis; beta steepens it.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha!r}")
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta!r}")
    lin = srr.linear_values
    gains = (lin / (lin + alpha)) ** beta
    return GainMask(gains, "ratio", {"alpha": float(alpha), "beta": float(beta)})


def apply_mask(grid: EnvelopeGrid, mask: GainMask) -> EnvelopeGrid:
    """Elementwise product of envelope values and mask gains."""
    if grid.values.shape != mask.gains.shape:
        raise ShapeMismatchError(f"grid {grid.values.shape} vs mask {mask.gains.shape}")
    return EnvelopeGrid(grid.values * mask.gains, grid.frame_rate, grid.center_freqs)


def mask_density(mask: GainMask) -> float:
    """Fraction of retained signal: fraction of ones (binary) or mean gain (ratio)."""
    if mask.gains.size == 0:
        return 0.0
    return float(mask.gains.mean())


def write_mask_csv(mask: GainMask, path) -> None:
    """Dump mask gains as a frames x channels CSV for inspection."""
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(f"ch{c + 1:02d}" for c in range(mask.gains.shape[1])) + "\n")
        for row in mask.gains:
            fh.write(",".join(f"{v:.12g}" for v in row) + "\n")
