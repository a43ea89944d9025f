"""Preprocessing: resampling, centering, truncated-DCT smoothing, derivatives."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.fft import dct, idct

from .corpus import TrajectoryRecord

DEFAULT_DCT_ORDER = 5


@dataclass(frozen=True, eq=False)
class SmoothedTrajectory:
    base: TrajectoryRecord
    smoothed_positions: np.ndarray
    velocity: np.ndarray
    acceleration: np.ndarray
    dct_order: int

    def __post_init__(self):
        n = self.base.positions.size
        for name in ("smoothed_positions", "velocity", "acceleration"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != (n,):
                raise ValueError(f"{name} must have length {n}")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def sample_rate(self) -> float:
        return self.base.sample_rate

    @property
    def times(self) -> np.ndarray:
        return self.base.times


def downsample(record: TrajectoryRecord, target_rate: float) -> TrajectoryRecord:
    """Linearly interpolate ``record`` onto a coarser uniform grid.

    The new grid starts at the original first sample and keeps every point
    ``t0 + j / target_rate`` that does not run past the original last sample.
    """
    if not target_rate > 0:
        raise ValueError("target_rate must be positive")
    if target_rate > record.sample_rate:
        raise ValueError(
            f"refusing to upsample from {record.sample_rate:g} Hz to {target_rate:g} Hz"
        )
    if target_rate == record.sample_rate:
        return record
    n = record.positions.size
    span = (n - 1) / record.sample_rate
    m = int(math.floor(span * target_rate + 1e-9)) + 1
    # interpolate in sample-index units so the first sample is reproduced exactly
    src_index = np.arange(m) * (record.sample_rate / target_rate)
    values = np.interp(src_index, np.arange(n), record.positions)
    return record.replace_positions(values, sample_rate=target_rate)


def center(record: TrajectoryRecord) -> TrajectoryRecord:
    """Subtract the mean position; no rescaling."""
    return record.replace_positions(record.positions - record.positions.mean())


def center_group(records) -> list[TrajectoryRecord]:
    """Shift a group of records by their pooled sample mean.

    This puts every record of one speaker/modality/channel on a shared origin
    while keeping between-token differences.
    """
    records = list(records)
    if not records:
        return []
    pooled = np.concatenate([r.positions for r in records]).mean()
    return [r.replace_positions(r.positions - pooled) for r in records]


def dct_project(values, order: int) -> np.ndarray:
    """Keep the first ``order`` orthonormal DCT-II coefficients and invert."""
    x = np.asarray(values, dtype=float)
    n = x.size
    if order < 1:
        raise ValueError("order must be >= 1")
    if order > n:
        raise ValueError(f"DCT order {order} exceeds the {n} available samples")
    coef = dct(x, type=2, norm="ortho")
    coef[order:] = 0.0
    return idct(coef, type=2, norm="ortho")


def differentiate(values, sample_rate: float) -> np.ndarray:
    """Central differences inside, first-order one-sided at both ends."""
    x = np.asarray(values, dtype=float)
    if x.size < 3:
        raise ValueError("need at least 3 samples to differentiate")
    return np.gradient(x, 1.0 / sample_rate, edge_order=1)


def dct_smooth(record: TrajectoryRecord, order: int = DEFAULT_DCT_ORDER) -> SmoothedTrajectory:
    """Truncated-DCT smoothing followed by velocity and acceleration."""
    smooth = dct_project(record.positions, order)
    vel = differentiate(smooth, record.sample_rate)
    acc = differentiate(vel, record.sample_rate)
    return SmoothedTrajectory(
        base=record, smoothed_positions=smooth, velocity=vel, acceleration=acc, dct_order=order
    )
