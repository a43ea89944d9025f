"""Gesture segmentation at zero-crossings of the velocity signal."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import Modality, PairKey
from .signal import SmoothedTrajectory

DEFAULT_MIN_SAMPLES = 5
DEFAULT_MIN_PEAK_VEL = 1.0  # mm/s


@dataclass(frozen=True, eq=False)
class GestureSegment:
    """Samples ``start_idx..end_idx`` (inclusive) of a smoothed trajectory."""

    key: PairKey
    modality: Modality
    gesture_index: int
    start_idx: int
    end_idx: int
    positions: np.ndarray
    velocity: np.ndarray
    acceleration: np.ndarray
    sample_rate: float
    t0: float = 0.0

    def __post_init__(self):
        if not self.start_idx < self.end_idx:
            raise ValueError("segment needs start_idx < end_idx")
        n = self.end_idx - self.start_idx + 1
        for name in ("positions", "velocity", "acceleration"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != (n,):
                raise ValueError(f"{name} must have {n} samples")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "modality", Modality(self.modality))

    def __len__(self):
        return self.positions.size

    @property
    def times(self) -> np.ndarray:
        """Absolute sample times; ``t0`` is the time of the parent's sample 0."""
        return self.t0 + np.arange(self.start_idx, self.end_idx + 1) / self.sample_rate

    @property
    def t_start(self) -> float:
        return self.t0 + self.start_idx / self.sample_rate

    @property
    def t_end(self) -> float:
        return self.t0 + self.end_idx / self.sample_rate


def find_zero_crossings(velocity) -> list[int]:
    """Boundary indices of single-signed velocity runs.

    An index is reported when the velocity there is exactly zero (only the
    first index of a run of zeros) or when the sign flips between it and the
    next sample. The first and last samples are always boundaries.
    """
    v = np.asarray(velocity, dtype=float)
    n = v.size
    if n < 2:
        raise ValueError("velocity needs at least 2 samples")
    zero = v == 0
    run_start = zero & np.concatenate(([True], ~zero[:-1]))
    # compare signs, not the product, which underflows to zero for tiny velocities
    sign = np.sign(v)
    flip = np.concatenate((sign[:-1] * sign[1:] < 0, [False]))
    idx = np.flatnonzero(run_start | flip)
    return sorted({0, n - 1, *idx.tolist()})


def segment_gestures(
    traj: SmoothedTrajectory,
    min_samples: int = DEFAULT_MIN_SAMPLES,
    min_peak_vel: float = DEFAULT_MIN_PEAK_VEL,
) -> list[GestureSegment]:
    """Split a smoothed trajectory into velocity-bounded gestures.

    Consecutive boundaries delimit candidate segments, which are dropped when
    shorter than ``min_samples`` or when their peak speed is below
    ``min_peak_vel``. Survivors are numbered in time order.
    """
    if min_samples < 3:
        raise ValueError("min_samples must be >= 3")
    base = traj.base
    bounds = find_zero_crossings(traj.velocity)
    out = []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        if hi - lo + 1 < min_samples:
            continue
        if np.max(np.abs(traj.velocity[lo:hi + 1])) < min_peak_vel:
            continue
        out.append(
            GestureSegment(
                key=base.key,
                modality=base.modality,
                gesture_index=len(out),
                start_idx=lo,
                end_idx=hi,
                positions=traj.smoothed_positions[lo:hi + 1],
                velocity=traj.velocity[lo:hi + 1],
                acceleration=traj.acceleration[lo:hi + 1],
                sample_rate=base.sample_rate,
                t0=base.t0,
            )
        )
    return out
