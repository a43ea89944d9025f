"""Linear harmonic-oscillator parameter estimation from articulator kinematics."""

from .corpus import (
    Modality,
    PairKey,
    TrajectoryRecord,
    pair_records,
    read_results,
    read_trajectories,
    write_results,
    write_trajectories,
)
from .estimate import FitConfig, FitResult, fit_corpus, fit_segment
from .gesture import GestureSegment, find_zero_crossings, segment_gestures
from .oscillator import (
    OscillatorParams,
    critical_damping,
    integrate_rk4,
    solve_analytic,
    synth_gesture,
)
from .signal import center, dct_smooth, differentiate, downsample
from .stats import (
    ComparisonObservation,
    HierarchicalFit,
    MCMCConfig,
    fit_hierarchical,
    observations_from_results,
    pearson_r,
    word_effects,
)
from .synth import SynthConfig, synth_corpus

__version__ = "0.1.0"
