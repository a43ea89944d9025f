"""Fit one simulated gesture and compare the recovered oscillator with the truth.

A tongue-dorsum release toward a target is simulated, smoothed, segmented and
identified, then the fitted model is reintegrated and scored the way the
corpus pipeline does it. Heavy smoothing keeps R^2 high but flattens the sharp
onset of the release, which pulls stiffness and damping down; a finer grid
with light smoothing recovers the generating values.
"""
from oscfit import OscillatorParams, critical_damping, dct_smooth, fit_segment, segment_gestures, synth_gesture

k = 400.0
truth = OscillatorParams(b=0.9 * critical_damping(k), k=k, T=3.0)
print(f"truth            b={truth.b:6.2f}  k={truth.k:6.1f}  T={truth.T:5.2f}")

for rate, noise, order in ((81.0, 0.1, 5), (250.0, 0.1, 12), (2000.0, 0.0, None)):
    rec = synth_gesture(truth, x0=-5.0, v0=0.0, sample_rate=rate, duration=0.5, noise_sd=noise, seed=1)
    # order None keeps every coefficient, i.e. no smoothing at all
    traj = dct_smooth(rec, order=order or rec.positions.size)
    segments = segment_gestures(traj)
    res = fit_segment(segments[0])
    p = res.params
    label = f"{rate:4.0f} Hz, {'raw' if order is None else f'{order} coef'}"
    print(f"{label:16s} b={p.b:6.2f}  k={p.k:6.1f}  T={p.T:5.2f}  "
          f"R^2 vel {res.r2_vel:.3f}  ({len(segments)} segment(s), {p.damping_class})")
