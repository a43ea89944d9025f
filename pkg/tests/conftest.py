import numpy as np
import pytest

from oscfit.corpus import Modality, PairKey
from oscfit.gesture import GestureSegment

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def report():
    """Record one pass/fail line per acceptance criterion."""

    def _report(number, passed, detail):
        ACCEPTANCE_LINES.append(f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}")
        return passed

    return _report


def make_segment(x, v, a, rate, key=None, modality=Modality.EMA, index=0):
    return GestureSegment(
        key=key or PairKey("spk", "word", "TDx", 0),
        modality=modality,
        gesture_index=index,
        start_idx=0,
        end_idx=len(x) - 1,
        positions=x,
        velocity=v,
        acceleration=a,
        sample_rate=rate,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def hierarchical_observations(seed, alpha=0.0, beta=2.0, sigma=0.5, tau_alpha=1.0, tau_beta=0.5,
                              speakers=6, words=29, reps=4, word_shift=None):
    """Draw data from the comparison model itself; ``word_shift`` adds to chosen word slopes."""
    from oscfit.stats import ComparisonObservation

    gen = np.random.default_rng(seed)
    a_s = gen.normal(0.0, tau_alpha, speakers)
    b_w = gen.normal(0.0, tau_beta, words)
    for w, extra in (word_shift or {}).items():
        b_w[w] += extra
    obs = []
    for s in range(speakers):
        for w in range(words):
            for m in (0, 1):
                for _ in range(reps):
                    y = alpha + a_s[s] + (beta + b_w[w]) * m + gen.normal(0.0, sigma)
                    obs.append(ComparisonObservation(y, s, w, m))
    return obs
