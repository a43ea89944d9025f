"""Simulated multi-speaker EMA/ultrasound corpora with known ground truth.

Every token is a release from rest toward a word-specific target. Both
modalities share the underlying movement; ultrasound differs by its own
coordinate origin, an optional target offset (constant plus per-word
scatter), a lower frame rate and more measurement noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import Modality
from .oscillator import OscillatorParams, critical_damping, synth_gesture


@dataclass(frozen=True)
class SynthConfig:
    speakers: int = 6
    words: int = 29
    reps: int = 4
    channels: tuple = ("TDx",)
    duration: float = 0.5
    ema_rate: float = 1250.0
    us_rate: float = 81.0
    noise_ema: float = 0.05
    noise_us: float = 0.3
    k_range: tuple = (150.0, 800.0)
    damping_ratio: tuple = (0.85, 1.15)
    target_range: tuple = (-8.0, 8.0)
    amplitude: tuple = (4.0, 10.0)
    modality_offset: float = 0.0
    word_offset_sd: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if min(self.speakers, self.words, self.reps) < 1 or not self.channels:
            raise ValueError("need at least one speaker, word, repetition and channel")
        if self.duration <= 0 or self.ema_rate <= 0 or self.us_rate <= 0:
            raise ValueError("duration and rates must be positive")
        if self.noise_ema < 0 or self.noise_us < 0 or self.word_offset_sd < 0:
            raise ValueError("noise levels must be non-negative")
        lo, hi = self.k_range
        if not 0 < lo <= hi:
            raise ValueError("k_range must be positive and ordered")
        lo, hi = self.damping_ratio
        if not 0 < lo <= hi:
            raise ValueError("damping_ratio must be positive and ordered")


@dataclass(frozen=True)
class TokenTruth:
    speaker_id: str
    word: str
    modality: Modality
    channel: str
    rep: int
    params: OscillatorParams
    x0: float
    v0: float


def speaker_label(i: int) -> str:
    return f"S{i + 1}"


def word_label(j: int) -> str:
    return f"w{j + 1:02d}"


def synth_corpus(config: SynthConfig | None = None):
    """Simulate a corpus; returns ``(records, truths)`` in matching order."""
    cfg = config or SynthConfig()
    rng = np.random.default_rng(cfg.seed)
    n_ch = len(cfg.channels)
    # word-level movement plans, shared by all speakers
    T_w = rng.uniform(*cfg.target_range, size=(cfg.words, n_ch))
    k_w = rng.uniform(*cfg.k_range, size=(cfg.words, n_ch))
    zeta_w = rng.uniform(*cfg.damping_ratio, size=(cfg.words, n_ch))
    sign = rng.choice([-1.0, 1.0], size=(cfg.words, n_ch))
    amp_w = rng.uniform(*cfg.amplitude, size=(cfg.words, n_ch))
    word_dev = rng.normal(0.0, cfg.word_offset_sd, size=(cfg.words, n_ch)) if cfg.word_offset_sd > 0 else np.zeros((cfg.words, n_ch))
    spk_shift = rng.normal(0.0, 1.0, size=(cfg.speakers, n_ch))
    origin = rng.normal(0.0, 3.0, size=(cfg.speakers, n_ch, 2))
    token_seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.speakers * cfg.words * cfg.reps * n_ch)

    records, truths = [], []
    t = 0
    for s in range(cfg.speakers):
        for w in range(cfg.words):
            for c, channel in enumerate(cfg.channels):
                for r in range(cfg.reps):
                    tok = np.random.default_rng(token_seeds[t])
                    t += 1
                    k = k_w[w, c] * (1.0 + tok.normal(0.0, 0.05))
                    b = zeta_w[w, c] * critical_damping(k)
                    T = T_w[w, c] + spk_shift[s, c] + tok.normal(0.0, 0.3)
                    x0 = T + sign[w, c] * amp_w[w, c] + tok.normal(0.0, 0.5)
                    noise_seeds = tok.integers(0, 2**63 - 1, size=2)
                    for m, modality in enumerate((Modality.EMA, Modality.US)):
                        shift = origin[s, c, m]
                        target = T + shift
                        if modality is Modality.US:
                            target += cfg.modality_offset + word_dev[w, c]
                        p = OscillatorParams(b=b, k=k, T=target)
                        rate = cfg.ema_rate if modality is Modality.EMA else cfg.us_rate
                        noise = cfg.noise_ema if modality is Modality.EMA else cfg.noise_us
                        rec = synth_gesture(
                            p, x0 + shift, 0.0, rate, cfg.duration, noise, seed=int(noise_seeds[m]),
                            speaker_id=speaker_label(s), word=word_label(w),
                            modality=modality, channel=channel, rep=r,
                        )
                        records.append(rec)
                        truths.append(TokenTruth(rec.speaker_id, rec.word, modality, channel, r, p, x0 + shift, 0.0))
    return records, truths
