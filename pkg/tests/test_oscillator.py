import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from oscfit.oscillator import (
    IntegrationError,
    OscillatorParams,
    SimState,
    critical_damping,
    damping_class,
    integrate_rk4,
    solve_analytic,
    synth_gesture,
)


@pytest.mark.parametrize("k, b", [(100, 20.0), (0, 0.0), (2, 2 * math.sqrt(2))])
def test_critical_damping(k, b):
    assert critical_damping(k) == pytest.approx(b, rel=1e-15)


def test_critical_damping_rejects_negative():
    with pytest.raises(ValueError):
        critical_damping(-1.0)


@pytest.mark.parametrize(
    "b, k, expected",
    [(20.0, 100.0, "critical"), (20.0 * (1 + 1e-12), 100.0, "critical"),
     (10.0, 100.0, "underdamped"), (30.0, 100.0, "overdamped")],
)
def test_damping_class(b, k, expected):
    assert damping_class(b, k) == expected
    assert OscillatorParams(b, k, 0.0).damping_class == expected


def test_params_mass_and_attractor_flag():
    assert OscillatorParams(1.0, 4.0, 0.0).m == 1.0
    assert not OscillatorParams(1.0, -4.0, 0.0).is_attractor


def test_sim_state_must_be_finite():
    SimState(0.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        SimState(float("nan"), 0.0, 0.0)


def test_critical_closed_form_checked_symbolically():
    t = sp.symbols("t", nonnegative=True)
    x = 1 - (1 + 10 * t) * sp.exp(-10 * t)
    residual = sp.diff(x, t, 2) + 20 * sp.diff(x, t) + 100 * (x - 1)
    assert sp.simplify(residual) == 0
    assert x.subs(t, 0) == 0 and sp.diff(x, t).subs(t, 0) == 0
    frozen = float(x.subs(t, sp.Rational(1, 10)))  # 1 - 2/e
    assert frozen == pytest.approx(0.26424111765711533, abs=1e-15)

    xs, vs = solve_analytic(OscillatorParams(20.0, 100.0, 1.0), 0.0, 0.0, [0.0, 0.1])
    assert xs[0] == 0.0 and vs[0] == 0.0
    assert xs[1] == pytest.approx(frozen, abs=1e-12)


def test_equilibrium_is_fixed_point():
    x, v = solve_analytic(OscillatorParams(7.0, 300.0, 2.5), 2.5, 0.0, np.linspace(0, 2, 50))
    assert np.all(x == 2.5) and np.all(v == 0.0)


def test_undamped_is_cosine():
    t = np.linspace(0, 3, 301)
    x, v = solve_analytic(OscillatorParams(0.0, 4 * math.pi ** 2, 0.0), 1.0, 0.0, t)
    np.testing.assert_allclose(x, np.cos(2 * math.pi * t), atol=1e-12)
    np.testing.assert_allclose(v, -2 * math.pi * np.sin(2 * math.pi * t), atol=1e-11)


@pytest.mark.parametrize("b, k", [(4.0, 400.0), (40.0, 400.0), (40.0, 50.0), (2 * math.sqrt(300), 300.0)])
def test_analytic_solution_satisfies_ode(b, k):
    # second differences of the dense output at 10 kHz plugged back into the ODE
    p = OscillatorParams(b, k, -3.0)
    rate = 10_000
    t = np.arange(0, 0.5, 1 / rate)
    x, v = solve_analytic(p, 5.0, 12.0, t)
    acc = (x[2:] - 2 * x[1:-1] + x[:-2]) * rate ** 2
    residual = acc + b * v[1:-1] + k * (x[1:-1] - p.T)
    scale = np.max(np.abs(k * (x - p.T)))
    assert np.max(np.abs(residual)) / scale < 1e-4
    assert x[0] == pytest.approx(5.0, abs=1e-12) and v[0] == pytest.approx(12.0, abs=1e-12)


def test_analytic_requires_attractor():
    with pytest.raises(ValueError):
        solve_analytic(OscillatorParams(1.0, 0.0, 0.0), 1.0, 0.0, [0.0, 1.0])
    with pytest.raises(ValueError):
        solve_analytic(OscillatorParams(1.0, 5.0, 0.0), 1.0, 0.0, [1.0, 0.0])


def test_critical_release_never_overshoots():
    t = np.linspace(0, 3, 3000)
    for k in (50.0, 300.0, 1000.0):
        x, _ = solve_analytic(OscillatorParams(critical_damping(k), k, 4.0), -6.0, 0.0, t)
        assert np.all(x - 4.0 <= 0)


def test_rk4_equilibrium_constant():
    x, v = integrate_rk4(OscillatorParams(10.0, 100.0, 3.0), 3.0, 0.0, 81.0, 40)
    assert x.size == 41 and np.all(x == 3.0) and np.all(v == 0.0)


def test_rk4_matches_analytic_at_81hz():
    # unit step toward T = 1 from rest; measured global error 2.55e-6 mm
    p = OscillatorParams(20.0, 100.0, 1.0)
    n = 40  # 0.5 s at 81 Hz (last full step)
    xr, _ = integrate_rk4(p, 0.0, 0.0, 81.0, n)
    xa, _ = solve_analytic(p, 0.0, 0.0, np.arange(n + 1) / 81.0)
    err = np.max(np.abs(xr - xa))
    assert err < 3e-6
    # halving the step must shrink it by the fourth-order factor
    x2, _ = integrate_rk4(p, 0.0, 0.0, 162.0, 2 * n)
    assert 12 <= err / np.max(np.abs(x2[::2] - xa)) <= 20


def test_rk4_blow_up_raises():
    with pytest.raises(IntegrationError):
        integrate_rk4(OscillatorParams(-1e6, 1e12, 0.0), 1.0, 0.0, 10.0, 200)


def test_rk4_argument_checks():
    p = OscillatorParams(1.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        integrate_rk4(p, 0, 0, 0.0, 5)
    with pytest.raises(ValueError):
        integrate_rk4(p, 0, 0, 10.0, 0)


def test_energy_conserved_without_damping():
    k = 4 * math.pi ** 2
    x, v = integrate_rk4(OscillatorParams(0.0, k, 1.0), 2.0, 0.0, 100.0, 1000)
    energy = 0.5 * v ** 2 + 0.5 * k * (x - 1.0) ** 2
    assert np.max(np.abs(energy - energy[0])) / energy[0] < 1e-6


@settings(max_examples=30, deadline=None)
@given(
    b=st.floats(0.5, 60), k=st.floats(20, 1500), T=st.floats(-20, 20), off=st.floats(0.5, 15),
)
def test_damped_motion_approaches_target(b, k, T, off):
    p = OscillatorParams(b, k, T)
    t_end = 5.0 / b
    x, _ = solve_analytic(p, T + off, 0.0, [0.0, t_end])
    assert abs(x[-1] - T) < off


def test_synth_noise_free_matches_analytic():
    p = OscillatorParams(18.0, 120.0, -2.0)
    rec = synth_gesture(p, 6.0, 0.0, 81.0, 0.5)
    x, _ = solve_analytic(p, 6.0, 0.0, np.arange(41) / 81.0)
    assert rec.positions.size == 41
    assert np.array_equal(rec.positions, x)


def test_synth_is_deterministic():
    p = OscillatorParams(18.0, 120.0, -2.0)
    a = synth_gesture(p, 6.0, 0.0, 81.0, 0.5, 0.2, seed=5)
    b = synth_gesture(p, 6.0, 0.0, 81.0, 0.5, 0.2, seed=5)
    assert np.array_equal(a.positions, b.positions)


def test_synth_noise_level():
    p = OscillatorParams(18.0, 120.0, -2.0)
    clean = synth_gesture(p, 6.0, 0.0, 1000.0, 9.999)
    noisy = synth_gesture(p, 6.0, 0.0, 1000.0, 9.999, 0.1, seed=11)
    assert clean.positions.size == 10_000
    sd = np.std(noisy.positions - clean.positions, ddof=1)
    assert 0.097 <= sd <= 0.103


def test_synth_rejects_negative_noise():
    with pytest.raises(ValueError):
        synth_gesture(OscillatorParams(1, 1, 0), 0, 0, 10, 1, -0.1)
