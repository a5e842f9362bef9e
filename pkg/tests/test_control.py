import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from photontrain.control import (
    BranchParams,
    ChirpCompensated,
    ConstantWindow,
    ControlPulse,
    ExplicitPhase,
    Gaussian,
    GenerationSequence,
    Measurement,
    MixingPulse,
    RaisedCosineWindow,
    Recycle,
    Schedule,
    Tabulated,
    ZeroPhase,
    accumulated_phases,
    control_table,
    cumulative_integral,
    effective_rate,
    gaussian_sequence,
    off_pulse,
    reference_parameters,
    peak_for_mu,
    schedule_from_json,
    schedule_to_json,
    validate_schedule,
)
from photontrain.exceptions import ConfigError

P = reference_parameters()
K = P.kappa_c


def constant_pulse(r_over_kappa, T, params=P, phase=ChirpCompensated()):
    omega = r_over_kappa * params.kappa_c * 2 * params.delta / params.g
    return ControlPulse(ConstantWindow(omega, 0.0, T), phase)


def test_params_validation():
    with pytest.raises(ConfigError):
        BranchParams(g=-1.0, delta=1.0, kappa_c=1.0)
    with pytest.warns(UserWarning):
        BranchParams(g=1.0, delta=5.0, kappa_c=1.0)
    assert P.g_bar_sq == pytest.approx(P.g**2 / P.delta, rel=1e-15)


def test_effective_rate_zero_field():
    assert effective_rate(off_pulse(), P, 0.3) == 0.0


def test_effective_rate_reference_values():
    pulse = ControlPulse(ConstantWindow(55e6, 0.0, 1e-6))
    r = effective_rate(pulse, P, 5e-7)
    assert r == pytest.approx(55e6 * 55e6 / (2 * 1500e6), rel=1e-14)
    # the Raman coupling is a small fraction of the cavity decay rate
    assert r / K == pytest.approx(0.0201667, rel=1e-5)


def test_effective_rate_linear_in_field():
    a = ControlPulse(Gaussian(1e8, 1e-7, 2e-8))
    b = ControlPulse(Gaussian(2e8, 1e-7, 2e-8))
    for t in (5e-8, 1e-7, 1.3e-7):
        assert effective_rate(b, P, t) == pytest.approx(2 * effective_rate(a, P, t), rel=1e-14)


def test_constant_window_phases_closed_form():
    T = 50 / K
    pulse = constant_pulse(0.1, T)
    t = np.linspace(0, T, 11)
    ph = accumulated_phases(pulse, P, t)
    r = 0.1 * K
    omega = pulse.shape.amplitude
    np.testing.assert_allclose(ph.mu, r**2 * t / K, rtol=1e-8, atol=0)
    np.testing.assert_allclose(ph.theta, omega**2 * t / (4 * P.delta), rtol=1e-8, atol=0)
    assert ph.mu[0] == 0.0


def test_zero_field_phases():
    phase = ExplicitPhase((0.0, 1e-7), (0.0, 2.0))
    pulse = ControlPulse(ConstantWindow(0.0, 0.0, 1e-7), phase)
    t = np.linspace(0, 1e-7, 5)
    ph = accumulated_phases(pulse, P, t)
    assert np.all(ph.theta == 0) and np.all(ph.mu == 0)
    np.testing.assert_allclose(ph.theta_c, phase(t) - P.g_bar_sq * t, rtol=0, atol=1e-15)


def test_chirp_compensation_cancels_theta_c():
    seq = gaussian_sequence(P, 20 / K, 4.0)
    t = np.linspace(0, seq.duration, 101)
    ph = accumulated_phases(seq.pulses[0], P, t)
    scale = max(1.0, float(np.max(np.abs(ph.theta))))
    assert np.max(np.abs(ph.theta_c)) <= 1e-12 * scale


@settings(max_examples=25, deadline=None)
@given(lam=st.floats(0.1, 5.0), width=st.floats(0.05, 0.12), frac=st.floats(0.0, 1.0))
def test_phases_scale_quadratically(lam, width, frac):
    T = 20 / K
    t = frac * T
    a = ControlPulse(Gaussian(1e9, T / 2, width * T))
    b = ControlPulse(Gaussian(lam * 1e9, T / 2, width * T))
    pa, pb = accumulated_phases(a, P, t), accumulated_phases(b, P, t)
    assert float(pb.mu) == pytest.approx(lam**2 * float(pa.mu), rel=1e-9, abs=1e-300)
    assert float(pb.theta) == pytest.approx(lam**2 * float(pa.theta), rel=1e-9, abs=1e-300)


@settings(max_examples=25, deadline=None)
@given(peaks=st.lists(st.floats(0.0, 3e9), min_size=3, max_size=8))
def test_mu_nondecreasing(peaks):
    T = 10 / K
    times = np.linspace(0, T, len(peaks) + 2)
    shape = Tabulated(tuple(times), (0.0, *peaks, 0.0))
    mu = accumulated_phases(ControlPulse(shape), P, np.linspace(0, T, 41)).mu
    assert mu[0] == 0.0
    assert np.all(np.diff(mu) >= -1e-15 * max(1.0, mu[-1]))


@settings(max_examples=20, deadline=None)
@given(r=st.floats(0.01, 2.0), start_frac=st.floats(0.0, 0.4), stop_frac=st.floats(0.6, 1.0))
def test_constant_window_quadrature_matches_analytic(r, start_frac, stop_frac):
    T = 30 / K
    omega = r * K * 2 * P.delta / P.g
    pulse = ControlPulse(ConstantWindow(omega, start_frac * T, stop_frac * T))
    mu_T = float(accumulated_phases(pulse, P, T).mu)
    expected = (r * K) ** 2 * (stop_frac - start_frac) * T / K
    assert mu_T == pytest.approx(expected, rel=1e-8)


def test_control_table_matches_quadrature():
    seq = gaussian_sequence(P, 20 / K, 3.0)
    t = np.linspace(0, seq.duration, 301)
    table = control_table(seq.pulses[0], P, t, duration=seq.duration)
    ref = accumulated_phases(seq.pulses[0], P, t)
    np.testing.assert_allclose(table.mu, ref.mu, rtol=1e-9, atol=1e-14)
    np.testing.assert_allclose(table.theta_c, 0.0, atol=1e-9 * np.max(np.abs(table.theta)))


def test_cumulative_integral_polynomial():
    t = np.linspace(0, 2, 9)
    np.testing.assert_allclose(cumulative_integral(lambda s: 3 * s**2, t), t**3, rtol=1e-13, atol=1e-14)


def test_peak_for_mu():
    T = 20 / K
    make = lambda peak: RaisedCosineWindow(peak, 0.0, T)
    peak = peak_for_mu(make, P, T, 4.0)
    assert float(accumulated_phases(ControlPulse(make(peak)), P, T).mu) == pytest.approx(4.0, rel=1e-10)


# ---------------------------------------------------------------------------
# validate_schedule
# ---------------------------------------------------------------------------


def names_failed(report):
    return {c.name.split("[")[0] for c in report.failures()}


def test_overlapping_windows_flagged():
    s1 = gaussian_sequence(P, 20 / K, 5.0)
    s2 = s1.shifted(10 / K)
    report = validate_schedule(Schedule(events=(s1, Recycle(), s2)), P)
    assert not report.passed
    assert "overlap" in names_failed(report)


def test_constant_mu_five_passes():
    T = 500 / K
    pulse = constant_pulse(0.1, T)
    seq = GenerationSequence(0.0, T, (pulse, pulse))
    report = validate_schedule(Schedule(events=(seq,)), P)
    assert report.passed, str(report)
    assert float(accumulated_phases(pulse, P, T).mu) == pytest.approx(5.0, rel=1e-10)


def test_gaussian_tenth_width_edge_ratio():
    # sigma = T/10 leaves exp(-12.5) ~ 3.7e-6 of the peak at the edges, above the
    # smooth-off bound; mu(T) = 3 itself is fine
    T = 40 / K
    seq = gaussian_sequence(P, T, 3.0, width_fraction=0.1)
    report = validate_schedule(Schedule(events=(seq,)), P)
    assert names_failed(report) == {"smooth_off"}


def test_gaussian_twelfth_width_passes_and_edge_residual_small():
    from photontrain.markov import solve_amplitudes

    T = 40 / K
    seq = gaussian_sequence(P, T, 3.0, branches=(0,))
    report = validate_schedule(Schedule(events=(seq,)), P)
    assert report.passed, str(report)
    traj = solve_amplitudes(seq, P)
    r_T = float(effective_rate(seq.pulses[0], P, T))
    # the overdamped prediction for the residual cavity amplitude
    assert r_T / K * math.exp(-3) < 1e-8
    assert abs(traj.c_f[-1]) < 1e-6


def test_missing_recycle_and_measurement_order():
    s1 = gaussian_sequence(P, 20 / K, 5.0)
    s2 = s1.shifted(20 / K)
    report = validate_schedule(Schedule(events=(s1, s2)), P)
    assert "recycle_between_sequences" in names_failed(report)
    m = Measurement(2**-0.5, 2**-0.5)
    report = validate_schedule(Schedule(events=(s1, m, Recycle(), s2)), P)
    assert "measurement_last" in names_failed(report)


def test_unit_norm_constraints():
    with pytest.raises(ConfigError):
        MixingPulse(1.0, 0.5)
    with pytest.raises(ConfigError):
        Measurement(1.0, 1.0)
    report = validate_schedule(Schedule((1.0, 1.0), ()), P)
    assert "initial_norm" in names_failed(report)


def test_mixing_pulse_matrix_is_unitary():
    p = MixingPulse(0.6, 0.8j)
    U = p.matrix
    np.testing.assert_allclose(U.conj().T @ U, np.eye(2), atol=1e-15)
    np.testing.assert_allclose(p.inverse().matrix @ U, np.eye(2), atol=1e-15)


def test_pulse_shapes_nonnegative_and_validated():
    with pytest.raises(ConfigError):
        Tabulated((0.0, 1.0), (1.0, -1.0))
    with pytest.raises(ConfigError):
        Gaussian(1.0, 0.0, 0.0)
    rc = RaisedCosineWindow(2.0, 0.0, 1.0)
    assert rc(0.0) == 0.0 and rc(1.0) < 1e-30 and rc(0.5) == pytest.approx(2.0)


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------


def test_schedule_json_round_trip():
    s1 = gaussian_sequence(P, 20 / K, 5.0)
    tab = ControlPulse(Tabulated((0.0, 1e-7, 2e-7), (0.0, 1e8, 0.0)),
                       ExplicitPhase((0.0, 2e-7), (0.0, 1.0)))
    s2 = GenerationSequence(20 / K, 2e-7, (tab, ControlPulse(RaisedCosineWindow(1e8, 0, 2e-7), ZeroPhase())))
    sched = Schedule((0.6, 0.8j), (s1, Recycle(), MixingPulse(0.6, 0.8j), s2, Measurement(0.8, 0.6)))
    text = schedule_to_json(sched, P)
    back, params = schedule_from_json(text)
    assert back == sched
    assert params == (P, P)
    assert schedule_to_json(back, params) == text


def test_schedule_json_hz_units():
    s1 = gaussian_sequence(P, 20 / K, 5.0)
    text = schedule_to_json(Schedule(events=(s1,)), P)
    back, params = schedule_from_json(text, units="Hz")
    assert params[0].kappa_c == pytest.approx(2 * math.pi * K)
    assert back.events[0].pulses[0].shape.peak == pytest.approx(2 * math.pi * s1.pulses[0].shape.peak)
    with pytest.raises(ConfigError):
        schedule_from_json(text, units="GHz")
