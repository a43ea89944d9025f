import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oscfit.corpus import TrajectoryRecord
from oscfit.gesture import GestureSegment, find_zero_crossings, segment_gestures
from oscfit.oscillator import OscillatorParams, critical_damping, synth_gesture
from oscfit.signal import dct_smooth


def smoothed(x, rate=81.0, order=None):
    r = TrajectoryRecord("S1", "w", "EMA", "TDx", rate, 0.0, x)
    return dct_smooth(r, order or len(x))


def test_sine_velocity_boundaries():
    t = np.arange(151) / 100.0
    b = find_zero_crossings(np.sin(2 * np.pi * t))
    # analytic zeros of sin(2 pi t) on [0, 1.5]
    expected = [round(z * 100) for z in (0.0, 0.5, 1.0, 1.5)]
    assert len(b) == len(expected)
    assert all(abs(i - j) <= 1 for i, j in zip(b, expected))


def test_single_signed_velocity_has_only_virtual_bounds():
    assert find_zero_crossings(np.linspace(1, 5, 20)) == [0, 19]


def test_zero_runs_collapse():
    assert find_zero_crossings([1.0, 0.0, 0.0, 0.0, -1.0, -2.0]) == [0, 1, 5]
    assert find_zero_crossings(np.zeros(6)) == [0, 5]


def test_sign_change_reports_last_index_before():
    assert find_zero_crossings([2.0, 1.0, -1.0, -2.0, 3.0]) == [0, 1, 3, 4]


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-10, 10, allow_nan=False), min_size=2, max_size=60))
def test_no_interior_sign_change(v):
    v = np.array(v)
    b = find_zero_crossings(v)
    assert b == sorted(set(b)) and b[0] == 0 and b[-1] == len(v) - 1
    for lo, hi in zip(b[:-1], b[1:]):
        inner = v[lo + 1:hi]
        assert not (np.any(inner > 0) and np.any(inner < 0))


def test_monotone_release_gives_one_segment():
    k = 300.0
    rec = synth_gesture(OscillatorParams(critical_damping(k), k, 2.0), -6.0, 0.0, 81.0, 0.5)
    traj = dct_smooth(rec, rec.positions.size)
    segs = segment_gestures(traj)
    assert len(segs) == 1
    seg = segs[0]
    peak = int(np.argmax(np.abs(traj.velocity)))
    assert seg.start_idx <= peak <= seg.end_idx
    assert seg.gesture_index == 0


def test_two_velocity_peaks_give_two_segments():
    # diphthong-like: rise, brief hold, rise again
    rise = 1 - np.cos(np.pi * np.arange(21) / 20)
    x = np.concatenate((3 * rise, np.full(6, 6.0), 6 + 4 * rise[1:]))
    traj = smoothed(x, rate=100.0)
    v = np.array(traj.velocity)
    segs = segment_gestures(traj)
    assert len(segs) == 2
    assert [s.gesture_index for s in segs] == [0, 1]
    for s in segs:
        assert np.max(np.abs(v[s.start_idx:s.end_idx + 1])) > 1.0


def test_flat_signal_has_no_segments():
    assert segment_gestures(smoothed(np.full(30, 1.7), order=5)) == []


def test_segments_filtered_by_length_and_speed():
    t = np.arange(0, 1.0, 1 / 81.0)
    x = 5 * np.sin(2 * np.pi * 3 * t)
    traj = smoothed(x)
    all_segs = segment_gestures(traj, min_samples=3, min_peak_vel=0.0)
    assert len(segment_gestures(traj, min_samples=3, min_peak_vel=1e6)) == 0
    long_only = segment_gestures(traj, min_samples=14, min_peak_vel=0.0)
    assert all(len(s) >= 14 for s in long_only)
    assert len(long_only) < len(all_segs)
    with pytest.raises(ValueError):
        segment_gestures(traj, min_samples=2)


def test_segments_ordered_and_abutting():
    t = np.arange(0, 1.5, 1 / 81.0)
    traj = smoothed(8 * np.sin(2 * np.pi * 1.3 * t) + t)
    segs = segment_gestures(traj)
    for a, b in zip(segs, segs[1:]):
        assert a.end_idx <= b.start_idx
    for s in segs:
        assert s.t_start == pytest.approx(s.times[0]) and s.t_end == pytest.approx(s.times[-1])


@settings(max_examples=30, deadline=None)
@given(st.floats(-100, 100))
def test_count_invariant_under_position_offset(c):
    t = np.arange(0, 1.2, 1 / 81.0)
    x = 6 * np.sin(2 * np.pi * 1.7 * t) + 2 * np.cos(2 * np.pi * 0.6 * t)
    assert len(segment_gestures(smoothed(x, order=5))) == len(segment_gestures(smoothed(x + c, order=5)))


def test_segment_validates_slices():
    with pytest.raises(ValueError):
        GestureSegment(None, "EMA", 0, 3, 3, [1.0], [1.0], [1.0], 81.0)
    with pytest.raises(ValueError):
        GestureSegment(None, "EMA", 0, 0, 3, [1.0, 2.0], [1.0, 2.0], [1.0, 2.0], 81.0)


def test_sign_flip_between_tiny_values():
    # the product of these two underflows to -0.0
    assert find_zero_crossings([0.0, 3.9e-261, -8.8e-271, 0.0]) == [0, 1, 3]
