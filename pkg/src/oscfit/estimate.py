"""Per-gesture identification of (b, k, T) and model-fit scoring.

The oscillator is rewritten as the first-order pair

    x' = y
    y' = -k x - b y + k T

and both derivative series are regressed on the feature library
``[x, y, 1]``. The first row of the 2x3 coefficient matrix is pinned to
``[0, 1, 0]`` by an equality constraint; the second row carries the
oscillator parameters.
"""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .corpus import KNOWN_CHANNELS, Modality, PairKey
from .gesture import (
    DEFAULT_MIN_PEAK_VEL,
    DEFAULT_MIN_SAMPLES,
    GestureSegment,
    segment_gestures,
)
from .oscillator import OscillatorParams, integrate_rk4
from .signal import DEFAULT_DCT_ORDER, center, center_group, dct_smooth, downsample

log = logging.getLogger(__name__)

MAX_ITER = 30
REFINE_RTOL = 1e-10
COND_WARN = 1e10
MIN_ABS_K = 1e-8
CONSTRAINED_ROW = np.array([0.0, 1.0, 0.0])


class SingularSystemError(LinAlgError):
    """The feature library does not have full column rank."""


class IllPosedTargetError(ArithmeticError):
    """Stiffness is too close to zero for the target ``T = c / k`` to exist."""


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """``theta`` is N x 3 (position, velocity, ones); ``targets`` is N x 2."""

    theta: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        if self.theta.ndim != 2 or self.theta.shape[1] != 3:
            raise ValueError("theta must be N x 3")
        if self.targets.shape != (self.theta.shape[0], 2):
            raise ValueError("targets must be N x 2")
        if not (np.all(np.isfinite(self.theta)) and np.all(np.isfinite(self.targets))):
            raise ValueError("feature matrix has non-finite entries")

    @property
    def n_rows(self) -> int:
        return self.theta.shape[0]


@dataclass(frozen=True, eq=False)
class CoefficientMatrix:
    xi: np.ndarray
    converged: bool
    n_iter: int
    condition: float

    @property
    def params(self) -> OscillatorParams:
        k = -self.xi[1, 0]
        b = -self.xi[1, 1]
        if abs(k) < MIN_ABS_K:
            raise IllPosedTargetError(f"|k| = {abs(k):.3g} < {MIN_ABS_K:g}; target undefined")
        return OscillatorParams(b=float(b), k=float(k), T=float(self.xi[1, 2] / k))


@dataclass(frozen=True)
class FitResult:
    """Estimated parameters and fit quality for one gesture.

    ``r2_pos`` / ``r2_vel`` are ``None`` when the empirical series is constant.
    """

    key: PairKey
    modality: Modality
    gesture_index: int
    t_start: float
    t_end: float
    params: OscillatorParams
    r2_pos: float | None
    r2_vel: float | None
    converged: bool
    n_iter: int

    @property
    def sort_key(self):
        return (self.key, Modality(self.modality).value, self.gesture_index)


def build_features(seg: GestureSegment) -> FeatureMatrix:
    n = len(seg)
    if n < 4:
        raise ValueError(f"need at least 4 samples to fit 3 coefficients, got {n}")
    theta = np.column_stack((seg.positions, seg.velocity, np.ones(n)))
    targets = np.column_stack((seg.velocity, seg.acceleration))
    return FeatureMatrix(theta=theta, targets=targets)


def fit_constrained_ls(feat: FeatureMatrix, max_iter: int = MAX_ITER) -> CoefficientMatrix:
    """Minimise ``0.5 * ||targets - theta @ Xi.T||^2`` subject to ``Xi[0] = [0, 1, 0]``.

    The constraint selects whole coordinates of the stacked coefficient
    vector, so the KKT system is solved in its null space: the pinned row is
    assigned exactly and the free row solves the normal equations through a
    Cholesky factor of the column-equilibrated Gram matrix. Semi-normal
    iterative refinement on the least-squares residual then runs until the
    relative update drops below 1e-10 or ``max_iter`` passes are used.
    """
    theta = feat.theta
    rhs = feat.targets[:, 1]
    scale = np.linalg.norm(theta, axis=0)
    if np.any(scale == 0):
        raise SingularSystemError("feature library has an all-zero column")
    a = theta / scale
    if np.linalg.matrix_rank(a) < 3:
        raise SingularSystemError("feature library is rank deficient")
    gram = a.T @ a
    cond = float(np.linalg.cond(gram))
    if cond > COND_WARN:
        log.warning("ill-conditioned normal equations: cond = %.3g", cond)
    try:
        factor = cho_factor(gram)
    except LinAlgError as exc:
        raise SingularSystemError(str(exc)) from exc

    z = cho_solve(factor, a.T @ rhs)
    converged = False
    n_iter = 1
    while n_iter < max_iter:
        step = cho_solve(factor, a.T @ (rhs - a @ z))
        z = z + step
        n_iter += 1
        if np.linalg.norm(step) <= REFINE_RTOL * np.linalg.norm(z):
            converged = True
            break
    xi = np.empty((2, 3))
    xi[0] = CONSTRAINED_ROW
    xi[1] = z / scale
    return CoefficientMatrix(xi=xi, converged=converged, n_iter=n_iter, condition=cond)


def r_squared(empirical, modeled) -> float | None:
    """``1 - SS_res / SS_tot``; ``None`` for a constant empirical series."""
    y = np.asarray(empirical, dtype=float)
    yhat = np.asarray(modeled, dtype=float)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        return None
    return 1.0 - float(np.sum((y - yhat) ** 2)) / ss_tot


def simulate_segment(seg: GestureSegment, params: OscillatorParams):
    """Reintegrate the model from the segment's first sample on its grid."""
    return integrate_rk4(params, seg.positions[0], seg.velocity[0], seg.sample_rate, len(seg) - 1)


def score_fit(seg: GestureSegment, coef: CoefficientMatrix) -> FitResult:
    params = coef.params
    if not params.k > 0:
        raise ValueError(f"estimated k = {params.k:.4g} is not a point attractor")
    x_model, v_model = simulate_segment(seg, params)
    return FitResult(
        key=seg.key,
        modality=seg.modality,
        gesture_index=seg.gesture_index,
        t_start=seg.t_start,
        t_end=seg.t_end,
        params=params,
        r2_pos=r_squared(seg.positions, x_model),
        r2_vel=r_squared(seg.velocity, v_model),
        converged=coef.converged,
        n_iter=coef.n_iter,
    )


def fit_segment(seg: GestureSegment) -> FitResult:
    return score_fit(seg, fit_constrained_ls(build_features(seg)))


# --------------------------------------------------------------------------
# corpus-level pipeline


@dataclass(frozen=True)
class FitConfig:
    dct_order: int = DEFAULT_DCT_ORDER
    target_rate: float = 81.0
    min_samples: int = DEFAULT_MIN_SAMPLES
    min_peak_vel: float = DEFAULT_MIN_PEAK_VEL
    center: str = "group"  # "group" | "token" | "none"
    jobs: int = 1

    def __post_init__(self):
        if self.center not in ("group", "token", "none"):
            raise ValueError(f"center must be group, token or none, got {self.center!r}")
        if self.dct_order < 1 or self.min_samples < 3 or self.target_rate <= 0:
            raise ValueError("invalid fit configuration")


@dataclass(frozen=True)
class Skip:
    key: PairKey
    modality: Modality
    gesture_index: int | None
    reason: str


@dataclass(frozen=True)
class SummaryRow:
    variable: str
    modality: Modality
    n: int
    mean: float
    sd: float | None
    min: float
    max: float


@dataclass
class CorpusFit:
    results: list = field(default_factory=list)
    skipped: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    summary: list = field(default_factory=list)


def prepare_records(records, config: FitConfig):
    """Resample to the common rate and center according to ``config.center``."""
    out = []
    for rec in records:
        if rec.sample_rate > config.target_rate * (1 + 1e-9):
            rec = downsample(rec, config.target_rate)
        out.append(rec)
    if config.center == "token":
        out = [center(r) for r in out]
    elif config.center == "group":
        groups = defaultdict(list)
        for i, r in enumerate(out):
            groups[(r.speaker_id, r.modality.value, r.channel)].append(i)
        for idx in groups.values():
            for i, r in zip(idx, center_group([out[i] for i in idx])):
                out[i] = r
    return out


def segment_record(rec, config: FitConfig):
    """Smooth and segment one prepared record."""
    order = config.dct_order
    if rec.positions.size < max(order, 3):
        raise ValueError(f"{rec.positions.size} samples is too short for DCT order {order}")
    traj = dct_smooth(rec, order)
    return segment_gestures(traj, config.min_samples, config.min_peak_vel)


def _fit_record(args):
    rec, config = args
    results, skipped = [], []
    try:
        segments = segment_record(rec, config)
    except (ValueError, ArithmeticError) as exc:
        return results, [Skip(rec.key, rec.modality, None, str(exc))], 0
    if not segments:
        skipped.append(Skip(rec.key, rec.modality, None, "no gesture passed the segment filters"))
    for seg in segments:
        try:
            results.append(fit_segment(seg))
        except (ValueError, ArithmeticError, LinAlgError) as exc:
            skipped.append(Skip(seg.key, seg.modality, seg.gesture_index, f"{type(exc).__name__}: {exc}"))
    return results, skipped, len(segments)


def _channel_order(channel):
    if channel in KNOWN_CHANNELS:
        return (0, KNOWN_CHANNELS.index(channel), channel)
    return (1, 0, channel)


def summarize(results) -> list[SummaryRow]:
    """R^2 (velocity) summary per channel and modality: N, mean, SD, min, max."""
    groups = defaultdict(list)
    for res in results:
        if res.r2_vel is not None:
            groups[(res.key.channel, Modality(res.modality).value)].append(res.r2_vel)
    rows = []
    for channel, modality in sorted(groups, key=lambda g: (_channel_order(g[0]), g[1])):
        vals = np.array(groups[(channel, modality)])
        rows.append(
            SummaryRow(
                variable=channel,
                modality=Modality(modality),
                n=int(vals.size),
                mean=float(vals.mean()),
                sd=float(vals.std(ddof=1)) if vals.size > 1 else None,
                min=float(vals.min()),
                max=float(vals.max()),
            )
        )
    return rows


def fit_corpus(pairs, config: FitConfig | None = None) -> CorpusFit:
    """Smooth, segment, fit and score every trajectory of every pair.

    ``pairs`` holds ``(key, ema_record, us_record)`` triples as produced by
    :func:`oscfit.corpus.pair_records`. Failures are collected in
    ``skipped``; the batch never aborts. Results are ordered by key,
    modality and gesture index whatever ``config.jobs`` is.
    """
    config = config or FitConfig()
    pairs = list(pairs)
    records = [rec for _, ema, us in pairs for rec in (ema, us)]
    prepared = prepare_records(records, config)
    tasks = [(rec, config) for rec in prepared]
    if config.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            outcomes = list(pool.map(_fit_record, tasks, chunksize=max(1, len(tasks) // (4 * config.jobs))))
    else:
        outcomes = [_fit_record(t) for t in tasks]

    fit = CorpusFit()
    counts = {}
    for rec, (res, skipped, n_seg) in zip(prepared, outcomes):
        fit.results.extend(res)
        fit.skipped.extend(skipped)
        counts[(rec.key, rec.modality)] = n_seg
    for key, _, _ in pairs:
        n_ema, n_us = counts[(key, Modality.EMA)], counts[(key, Modality.US)]
        if n_ema != n_us:
            fit.notes.append(f"{_key_label(key)}: segment count differs (EMA {n_ema}, US {n_us})")
    fit.results.sort(key=lambda r: r.sort_key)
    fit.skipped.sort(key=lambda s: (s.key, s.modality.value, -1 if s.gesture_index is None else s.gesture_index))
    fit.summary = summarize(fit.results)
    return fit


def _key_label(key: PairKey) -> str:
    return f"{key.speaker_id}/{key.word}/{key.channel}/{key.rep}"


def join_modalities(results) -> dict:
    """Map ``(PairKey, gesture_index)`` to ``{Modality: FitResult}``."""
    joined = defaultdict(dict)
    for res in results:
        joined[(res.key, res.gesture_index)][Modality(res.modality)] = res
    return dict(joined)
