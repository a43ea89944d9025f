"""Linear point-attractor dynamics: x'' + b x' + k (x - T) = 0 with unit mass.

Closed-form solutions for every damping regime, a fixed-step RK4 integrator
on the equivalent first-order system, and a synthetic gesture generator used
as the ground-truth oracle throughout the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .corpus import Modality, TrajectoryRecord

CRITICAL_RTOL = 1e-9


@dataclass(frozen=True)
class OscillatorParams:
    """Damping ``b`` (1/s), stiffness ``k`` (1/s^2) and target ``T`` (mm).

    Mass is fixed at 1, so ``b`` and ``k`` absorb it.
    """

    b: float
    k: float
    T: float

    @property
    def m(self) -> float:
        return 1.0

    @property
    def is_attractor(self) -> bool:
        return self.k > 0

    @property
    def damping_class(self) -> str:
        """One of ``'underdamped'``, ``'critical'`` or ``'overdamped'``."""
        return damping_class(self.b, self.k)


@dataclass(frozen=True)
class SimState:
    x: float
    v: float
    t: float

    def __post_init__(self):
        if not all(math.isfinite(val) for val in (self.x, self.v, self.t)):
            raise ValueError(f"non-finite state {self}")


class IntegrationError(ArithmeticError):
    """Raised when the integrated state stops being finite."""


def damping_class(b: float, k: float) -> str:
    disc = b * b - 4.0 * k
    scale = max(b * b, 4.0 * abs(k))
    if abs(disc) <= CRITICAL_RTOL * scale:
        return "critical"
    return "underdamped" if disc < 0 else "overdamped"


def critical_damping(k: float) -> float:
    """Damping that makes a unit-mass oscillator of stiffness ``k`` critical."""
    if k < 0:
        raise ValueError(f"stiffness must be non-negative, got {k}")
    return 2.0 * math.sqrt(k)


def solve_analytic(p: OscillatorParams, x0: float, v0: float, times):
    """Closed-form position and velocity at ``times`` (seconds since release).

    The initial conditions ``x(0) = x0`` and ``x'(0) = v0`` hold at ``t = 0``.

    Returns
    -------
    positions, velocities : ndarray
    """
    if not p.k > 0:
        raise ValueError(f"closed form needs k > 0 (point attractor), got k={p.k}")
    t = np.asarray(times, dtype=float)
    if t.ndim != 1:
        raise ValueError("times must be one-dimensional")
    if np.any(np.diff(t) < 0):
        raise ValueError("times must be non-decreasing")

    b, k = p.b, p.k
    u0 = x0 - p.T
    a = 0.5 * b
    kind = damping_class(b, k)

    if kind == "critical":
        # exact-critical formula at the nominal b; tolerance keeps it continuous
        c1, c2 = u0, v0 + a * u0
        decay = np.exp(-a * t)
        u = (c1 + c2 * t) * decay
        du = (c2 - a * (c1 + c2 * t)) * decay
    elif kind == "underdamped":
        w = math.sqrt(k - a * a)
        c1, c2 = u0, (v0 + a * u0) / w
        decay = np.exp(-a * t)
        cos, sin = np.cos(w * t), np.sin(w * t)
        u = decay * (c1 * cos + c2 * sin)
        du = decay * ((w * c2 - a * c1) * cos - (a * c2 + w * c1) * sin)
    else:
        s = math.sqrt(a * a - k)
        # r1 computed without cancellation when k << a^2
        r2 = -a - s
        r1 = k / r2
        A = (v0 - r2 * u0) / (r1 - r2)
        B = u0 - A
        e1, e2 = np.exp(r1 * t), np.exp(r2 * t)
        u = A * e1 + B * e2
        du = A * r1 * e1 + B * r2 * e2
    return u + p.T, du


def _rhs(p: OscillatorParams, state: np.ndarray) -> np.ndarray:
    x, v = state
    return np.array([v, -p.b * v - p.k * (x - p.T)])


def integrate_rk4(p: OscillatorParams, x0: float, v0: float, sample_rate: float, n_steps: int):
    """Classic fourth-order Runge-Kutta with step ``1 / sample_rate``.

    Integrates x' = v, v' = -b v - k (x - T) and returns ``n_steps + 1``
    positions and velocities, the first being the initial state.
    """
    if not sample_rate > 0:
        raise ValueError("sample_rate must be positive")
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    h = 1.0 / sample_rate
    out = np.empty((n_steps + 1, 2))
    state = np.array([x0, v0], dtype=float)
    out[0] = state
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(1, n_steps + 1):
            k1 = _rhs(p, state)
            k2 = _rhs(p, state + 0.5 * h * k1)
            k3 = _rhs(p, state + 0.5 * h * k2)
            k4 = _rhs(p, state + h * k3)
            state = state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(state)):
                raise IntegrationError(f"state became non-finite at step {i}")
            out[i] = state
    return out[:, 0], out[:, 1]


def synth_gesture(
    p: OscillatorParams,
    x0: float,
    v0: float,
    sample_rate: float,
    duration: float,
    noise_sd: float = 0.0,
    seed=None,
    *,
    speaker_id: str = "synth",
    word: str = "synth",
    modality: Modality | str = Modality.EMA,
    channel: str = "TDx",
    rep: int = 0,
    t0: float = 0.0,
) -> TrajectoryRecord:
    """Sample the analytic solution on a uniform grid and add Gaussian noise.

    The grid has ``floor(duration * sample_rate) + 1`` points starting at the
    release. Identical ``seed`` values give identical records.
    """
    if noise_sd < 0:
        raise ValueError("noise_sd must be >= 0")
    n = int(math.floor(duration * sample_rate + 1e-9)) + 1
    times = np.arange(n) / sample_rate
    x, _ = solve_analytic(p, x0, v0, times)
    if noise_sd > 0:
        rng = np.random.default_rng(seed)
        x = x + rng.normal(0.0, noise_sd, size=n)
    return TrajectoryRecord(
        speaker_id=speaker_id,
        word=word,
        modality=Modality(modality),
        channel=channel,
        sample_rate=sample_rate,
        t0=t0,
        positions=x,
        rep=rep,
    )
