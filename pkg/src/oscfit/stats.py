"""Hierarchical comparison of EMA and ultrasound parameter estimates.

Model, with EMA as the baseline (``modality = 0``) and ultrasound as 1::

    y_i ~ Normal(alpha + alpha_s[s_i] + (beta + beta_w[w_i]) * modality_i, sigma)
    alpha_s ~ Normal(0, tau_alpha)      beta_w ~ Normal(0, tau_beta)
    alpha, beta ~ Normal(0, 2)          sigma, tau_alpha, tau_beta ~ HalfNormal(2)

Random effects are sampled non-centred (``alpha_s = tau_alpha * z_s``,
``beta_w = tau_beta * u_w``) and scales on the log scale. The sampler is an
adaptive random-walk Metropolis-within-Gibbs. Besides one-dimensional moves
for every coordinate, each sweep makes four moves along directions the
likelihood cannot see (shifting ``alpha`` against ``z``, ``beta`` against
``u``, and rescaling each tau against its standardized effects), which keeps
the grand means and scales mixing when the data pin the group effects.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .corpus import Modality
from .diagnostics import ess, mcse_mean, rhat

PARAMETERS = ("T", "k", "b")
RHAT_MAX = 1.05


class ConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ComparisonObservation:
    y: float
    speaker: int
    word: int
    modality: int

    def __post_init__(self):
        if not math.isfinite(self.y):
            raise ValueError("observation must be finite")
        if self.modality not in (0, 1):
            raise ValueError("modality indicator must be 0 (EMA) or 1 (US)")


@dataclass(frozen=True)
class MCMCConfig:
    chains: int = 4
    warmup: int = 1000
    draws: int = 2000
    step: float = 0.1
    seed: int = 0
    prior_sd: float = 2.0
    adapt_every: int = 50
    accept_band: tuple = (0.2, 0.5)

    def __post_init__(self):
        if self.chains < 1 or self.warmup < 0 or self.draws < 4 or self.step <= 0:
            raise ValueError("invalid MCMC configuration")


@dataclass(frozen=True)
class PosteriorSummary:
    name: str
    mean: float
    ci_low: float
    ci_high: float
    rhat: float
    ess: float


@dataclass
class HierarchicalFit:
    """Posterior draws, each of shape ``(chains, draws)`` or ``(chains, draws, n)``."""

    draws: dict
    summaries: list
    speakers: list
    words: list
    acceptance: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return all(s.rhat <= RHAT_MAX for s in self.summaries)

    def summary(self, name) -> PosteriorSummary:
        for s in self.summaries:
            if s.name == name:
                return s
        raise KeyError(name)


def summarize_draws(name, draws) -> PosteriorSummary:
    flat = np.asarray(draws).reshape(-1)
    lo, hi = np.quantile(flat, [0.025, 0.975])
    return PosteriorSummary(
        name=name,
        mean=float(flat.mean()),
        ci_low=float(lo),
        ci_high=float(hi),
        rhat=float(rhat(draws)),
        ess=float(ess(draws)),
    )


def _log_halfnormal(log_scale, sd):
    # half-normal density on the scale plus the log-transform Jacobian
    s = np.exp(log_scale)
    return -0.5 * (s / sd) ** 2 + log_scale


class _Sampler:
    """Vectorised over chains; each chain consumes only its own random stream."""

    def __init__(self, y, s_idx, w_idx, mod, n_speakers, n_words, config):
        self.y, self.s_idx, self.w_idx, self.mod = y, s_idx, w_idx, mod
        self.S, self.W = n_speakers, n_words
        self.cfg = config
        self.onehot_s = np.zeros((y.size, n_speakers))
        self.onehot_s[np.arange(y.size), s_idx] = 1.0
        self.onehot_w = np.zeros((y.size, n_words))
        self.onehot_w[np.arange(y.size), w_idx] = 1.0

    # state layout: columns 0..4 = alpha, beta, log_sigma, log_tau_a, log_tau_b;
    # then z (S) and u (W); then four joint moves
    def _loglik_terms(self, st):
        alpha, beta, ls, lta, ltb = (st[:, i:i + 1] for i in range(5))
        z = st[:, 5:5 + self.S]
        u = st[:, 5 + self.S:5 + self.S + self.W]
        mu = (alpha + np.exp(lta) * z[:, self.s_idx]
              + (beta + np.exp(ltb) * u[:, self.w_idx]) * self.mod)
        resid = (self.y - mu) * np.exp(-ls)
        return -0.5 * resid ** 2 - ls

    def _loglik(self, st):
        return self._loglik_terms(st).sum(axis=1)

    def _prior_scalar(self, st, i):
        sd = self.cfg.prior_sd
        if i < 2:
            return -0.5 * (st[:, i] / sd) ** 2
        return _log_halfnormal(st[:, i], sd)

    def run(self, init, normals, uniforms):
        cfg = self.cfg
        C, P = init.shape
        S, W = self.S, self.W
        z_sl = slice(5, 5 + S)
        u_sl = slice(5 + S, 5 + S + W)
        n_moves = P + 4
        steps = np.full((C, n_moves), cfg.step)
        accepted = np.zeros((C, n_moves))
        window = np.zeros((C, n_moves))
        total = cfg.warmup + cfg.draws
        out = np.empty((C, cfg.draws, P))
        st = init.copy()
        ll = self._loglik(st)
        lo_band, hi_band = cfg.accept_band

        for it in range(total):
            eps, logu = normals[:, it], np.log(uniforms[:, it])

            # scalar coordinates
            for i in range(5):
                prop = st.copy()
                prop[:, i] += steps[:, i] * eps[:, i]
                ll_new = self._loglik(prop)
                log_r = ll_new + self._prior_scalar(prop, i) - ll - self._prior_scalar(st, i)
                acc = logu[:, i] < log_r
                st[acc] = prop[acc]
                ll = np.where(acc, ll_new, ll)
                window[:, i] += acc

            # standardized effects: components are conditionally independent
            for sl, onehot in ((z_sl, self.onehot_s), (u_sl, self.onehot_w)):
                cur_terms = self._loglik_terms(st) @ onehot
                prop = st.copy()
                prop[:, sl] += steps[:, sl] * eps[:, sl]
                new_terms = self._loglik_terms(prop) @ onehot
                log_r = (new_terms - 0.5 * prop[:, sl] ** 2) - (cur_terms - 0.5 * st[:, sl] ** 2)
                acc = logu[:, sl] < log_r
                block = st[:, sl]  # view into st
                block[acc] = prop[:, sl][acc]
                window[:, sl] += acc
                ll = np.where(acc, new_terms, cur_terms).sum(axis=1)

            # likelihood-invariant joint moves
            for j, (kind, coord, sl) in enumerate(
                (("shift", 0, z_sl), ("shift", 1, u_sl), ("scale", 3, z_sl), ("scale", 4, u_sl))
            ):
                col = P + j
                d = steps[:, col] * eps[:, col]
                prop = st.copy()
                if kind == "shift":
                    tau = np.exp(st[:, coord + 3])
                    prop[:, coord] += d
                    prop[:, sl] -= (d / tau)[:, None]
                    jac = 0.0
                else:
                    prop[:, coord] += d
                    prop[:, sl] *= np.exp(-d)[:, None]
                    jac = -d * (sl.stop - sl.start)
                log_r = (self._prior_scalar(prop, coord) - 0.5 * np.sum(prop[:, sl] ** 2, axis=1)
                         - self._prior_scalar(st, coord) + 0.5 * np.sum(st[:, sl] ** 2, axis=1) + jac)
                acc = logu[:, col] < log_r
                st[acc] = prop[acc]
                window[:, col] += acc

            if it < cfg.warmup:
                if (it + 1) % cfg.adapt_every == 0:
                    rate = window / cfg.adapt_every
                    outside = (rate < lo_band) | (rate > hi_band)
                    steps = np.where(outside, steps * np.exp(2.0 * (rate - 0.35)), steps)
                    window[:] = 0
            else:
                accepted += window
                window[:] = 0
                out[:, it - cfg.warmup] = st
        return out, accepted / max(cfg.draws, 1), steps


def _dense(labels):
    uniq = sorted(set(labels))
    return uniq, np.array([uniq.index(v) for v in labels], dtype=int)


def fit_hierarchical(observations, config: MCMCConfig | None = None, speakers=None, words=None) -> HierarchicalFit:
    """Sample the modality-comparison model.

    ``observations`` is a sequence of :class:`ComparisonObservation` with
    dense speaker and word indices; ``speakers`` / ``words`` optionally name
    them. Emits :class:`ConvergenceWarning` when any R-hat exceeds 1.05.
    """
    config = config or MCMCConfig()
    obs = list(observations)
    if not obs:
        raise ValueError("no observations")
    y = np.array([o.y for o in obs], dtype=float)
    s_idx = np.array([o.speaker for o in obs], dtype=int)
    w_idx = np.array([o.word for o in obs], dtype=int)
    mod = np.array([o.modality for o in obs], dtype=float)
    S, W = int(s_idx.max()) + 1, int(w_idx.max()) + 1
    if set(s_idx.tolist()) != set(range(S)) or set(w_idx.tolist()) != set(range(W)) or s_idx.min() < 0 or w_idx.min() < 0:
        raise ValueError("speaker and word indices must be dense 0..n-1")
    if S < 2 or W < 2:
        raise ValueError(f"degenerate grouping: {S} speaker(s), {W} word(s); need at least 2 of each")
    if not (np.any(mod == 0) and np.any(mod == 1)):
        raise ValueError("both modalities must be present")
    speakers = list(speakers) if speakers is not None else [str(i) for i in range(S)]
    words = list(words) if words is not None else [str(i) for i in range(W)]
    if len(speakers) != S or len(words) != W:
        raise ValueError("label lists do not match the index ranges")

    C, P = config.chains, 5 + S + W
    total = config.warmup + config.draws
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(config.seed).spawn(C)]
    base = y[mod == 0].mean()
    diff = y[mod == 1].mean() - base
    spread = max(y.std(), 1e-3)
    init = np.zeros((C, P))
    normals = np.empty((C, total, P + 4))
    uniforms = np.empty((C, total, P + 4))
    for c, rng in enumerate(streams):
        init[c, 0] = base + rng.normal(0.0, 0.1 * spread)
        init[c, 1] = diff + rng.normal(0.0, 0.1 * spread)
        init[c, 2] = math.log(spread) + rng.normal(0.0, 0.3)
        init[c, 3:5] = np.log(0.5 * spread) + rng.normal(0.0, 0.3, size=2)
        init[c, 5:] = rng.normal(0.0, 0.5, size=S + W)
        normals[c] = rng.standard_normal((total, P + 4))
        uniforms[c] = rng.random((total, P + 4))

    sampler = _Sampler(y, s_idx, w_idx, mod, S, W, config)
    raw, acc, _ = sampler.run(init, normals, uniforms)

    tau_a = np.exp(raw[:, :, 3])
    tau_b = np.exp(raw[:, :, 4])
    draws = {
        "alpha": raw[:, :, 0],
        "beta": raw[:, :, 1],
        "sigma": np.exp(raw[:, :, 2]),
        "tau_alpha": tau_a,
        "tau_beta": tau_b,
        "alpha_s": tau_a[:, :, None] * raw[:, :, 5:5 + S],
        "beta_w": tau_b[:, :, None] * raw[:, :, 5 + S:],
    }
    summaries = [summarize_draws(n, draws[n]) for n in ("alpha", "beta", "sigma", "tau_alpha", "tau_beta")]
    for i, label in enumerate(speakers):
        summaries.append(summarize_draws(f"alpha_s[{label}]", draws["alpha_s"][:, :, i]))
    for j, label in enumerate(words):
        summaries.append(summarize_draws(f"beta_w[{label}]", draws["beta_w"][:, :, j]))
    fit = HierarchicalFit(
        draws=draws,
        summaries=summaries,
        speakers=speakers,
        words=words,
        acceptance={"mean": float(acc.mean()), "min": float(acc.min()), "max": float(acc.max())},
    )
    if not fit.converged:
        worst = max(summaries, key=lambda s: s.rhat)
        warnings.warn(f"R-hat {worst.rhat:.3f} > {RHAT_MAX} for {worst.name}", ConvergenceWarning, stacklevel=2)
    return fit


def word_effects(fit: HierarchicalFit) -> list[PosteriorSummary]:
    """Posterior of ``beta + beta_w`` for every word, sorted by word label."""
    total = fit.draws["beta"][:, :, None] + fit.draws["beta_w"]
    order = sorted(range(len(fit.words)), key=lambda j: fit.words[j])
    return [summarize_draws(fit.words[j], total[:, :, j]) for j in order]


def observations_from_results(results, parameter: str, channel: str | None = None):
    """Turn fit results into comparison observations for one parameter.

    Returns ``(observations, speakers, words)`` with labels sorted so the
    dense indices are deterministic.
    """
    if parameter not in PARAMETERS:
        raise ValueError(f"parameter must be one of {', '.join(PARAMETERS)}, got {parameter!r}")
    rows = [r for r in results if channel is None or r.key.channel == channel]
    speakers, s_idx = _dense([r.key.speaker_id for r in rows])
    words, w_idx = _dense([r.key.word for r in rows])
    obs = [
        ComparisonObservation(
            y=float(getattr(r.params, parameter)),
            speaker=int(s),
            word=int(w),
            modality=0 if Modality(r.modality) is Modality.EMA else 1,
        )
        for r, s, w in zip(rows, s_idx, w_idx)
    ]
    return obs, speakers, words


def pearson_r(a, b) -> float:
    """Sample Pearson correlation of two equal-length series."""
    x = np.asarray(a, dtype=float)
    y = np.asarray(b, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("inputs must be 1-D and of equal length")
    if x.size < 3:
        raise ValueError("need at least 3 pairs")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise ValueError("zero variance input")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


__all__ = [
    "ComparisonObservation",
    "ConvergenceWarning",
    "HierarchicalFit",
    "MCMCConfig",
    "PosteriorSummary",
    "fit_hierarchical",
    "mcse_mean",
    "observations_from_results",
    "pearson_r",
    "word_effects",
]
