"""
Markovian atom-cavity amplitudes and the spectral envelope of the emitted photon.

With the cavity decay treated as memoryless, one branch of the driven atom is
described by two slowly varying amplitudes

    dC_i/dt = -r(t) C_f exp(+i theta_c(t))
    dC_f/dt = -kappa_c C_f + r(t) C_i exp(-i theta_c(t))

starting from (C_i, C_f) = (1, 0).  The photon that leaves the cavity during
the window [0, T] has the spectral envelope

    G(w, T) = sqrt(kappa_c/pi) int_0^T dt exp(i w t) C_f(t) exp(-i |g_bar|^2 t)

(w measured from the bare cavity line).  In the overdamped limit
C_f ~ (r/kappa_c) exp(-mu - i theta_c) and C_i = exp(-mu); the "overdamped"
route evaluates G from those closed forms instead of the ODE.

Envelopes are window-local: the translation phase exp(i w t_j) of a window
starting at t_j is applied only when wavepackets are compared
(:func:`envelope_overlap`).
"""

from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .control import (
    BranchParams,
    ChirpCompensated,
    GenerationSequence,
    accumulated_phases,
    control_table,
)
from .exceptions import GridResolutionError, IntegrationError

log = logging.getLogger(__name__)

POINTS_PER_PERIOD = 20
MIN_TIME_POINTS = 2001


@dataclass(frozen=True)
class AmplitudeTrajectory:
    times: np.ndarray
    c_i: np.ndarray
    c_f: np.ndarray
    branch: int = 0

    @property
    def duration(self) -> float:
        return float(self.times[-1])


@dataclass(frozen=True)
class SpectralEnvelope:
    omegas: np.ndarray
    values: np.ndarray
    start: float = 0.0
    duration: float = 0.0
    branch: int = 0
    method: str = ""
    notes: tuple = ()

    @property
    def d_omega(self) -> float:
        return float(self.omegas[1] - self.omegas[0])

    def norm_sq(self) -> float:
        """int |G|^2 dw by the trapezoid rule."""
        return float(np.trapezoid(np.abs(self.values) ** 2, self.omegas))

    def translated(self) -> np.ndarray:
        """exp(i w t_j) G(w): the wavepacket amplitude in the lab timeline."""
        return np.exp(1j * self.omegas * self.start) * self.values


def default_omega_grid(kappa_c: float, n: int = 1024, half_width: float = 20.0) -> np.ndarray:
    """n uniformly spaced mode centres covering [-half_width, half_width] kappa_c."""
    width = 2 * half_width * kappa_c
    return -width / 2 + (np.arange(n) + 0.5) * width / n


# ---------------------------------------------------------------------------
# amplitudes
# ---------------------------------------------------------------------------


def _segments(sequence: GenerationSequence, branch: int) -> list:
    T = sequence.duration
    bps = [b for b in sequence.pulse(branch).shape.breakpoints() if 0 < b < T]
    knots = sorted(set([0.0, T] + bps))
    return list(zip(knots[:-1], knots[1:]))


def solve_amplitudes(sequence: GenerationSequence, params: BranchParams, branch: int = 0,
                     tol: float = 1e-10, times=None) -> AmplitudeTrajectory:
    """Integrate the Markov amplitude equations over one generation window.

    ``times`` are window-local sample times in [0, T] (default: 2001 points).
    """
    if tol <= 0:
        raise ValueError("tol must be > 0")
    T = sequence.duration
    pulse = sequence.pulse(branch)
    if times is None:
        times = np.linspace(0.0, T, MIN_TIME_POINTS)
    times = np.asarray(times, dtype=float)
    if times.size and (times[0] < 0 or times[-1] > T * (1 + 1e-12) or np.any(np.diff(times) < 0)):
        raise ValueError("sample times must be sorted and inside [0, T]")
    kappa = params.kappa_c
    compensated = isinstance(pulse.phase_policy, ChirpCompensated)

    def omega(t):
        return float(pulse.amplitude(t)) if 0 <= t <= T else 0.0

    if compensated:
        def rhs(t, y):
            r = params.rate(omega(t))
            ci, cf = y
            return [-r * cf, -kappa * cf + r * ci]
        y0 = np.array([1.0 + 0j, 0j])
    else:
        # theta rides along as a third (real-valued) component
        def rhs(t, y):
            w = omega(t)
            r = params.rate(w)
            ci, cf, theta = y
            phase = theta.real + float(pulse.phase(t, params, theta=theta.real)) - params.g_bar_sq * t
            e = np.exp(1j * phase)
            return [-r * cf * e, -kappa * cf + r * ci / e, params.stark(w) + 0j]
        y0 = np.array([1.0 + 0j, 0j, 0j])

    y = y0
    ci_out = np.empty(times.shape, complex)
    cf_out = np.empty(times.shape, complex)
    for a, b in _segments(sequence, branch):
        sol = solve_ivp(rhs, (a, b), y, method="DOP853", rtol=tol, atol=tol * 1e-2,
                        dense_output=True, max_step=min(b - a, T / 50))
        if sol.status != 0:
            raise IntegrationError(f"amplitude integration failed on [{a}, {b}]: {sol.message}")
        mask = (times >= a) & (times <= b)
        if mask.any():
            vals = sol.sol(times[mask])
            ci_out[mask] = vals[0]
            cf_out[mask] = vals[1]
        y = sol.y[:, -1]
    if not (np.all(np.isfinite(ci_out)) and np.all(np.isfinite(cf_out))):
        raise IntegrationError("non-finite amplitudes")
    return AmplitudeTrajectory(times, ci_out, cf_out, branch)


def overdamped_amplitudes(sequence: GenerationSequence, params: BranchParams, t, branch: int = 0):
    """Closed forms C_i = exp(-mu), C_f = (r/kappa_c) exp(-mu - i theta_c)."""
    pulse = sequence.pulse(branch)
    t = np.asarray(t, dtype=float)
    r_max = params.rate(pulse.shape.max_amplitude)
    if r_max > params.kappa_c:
        warnings.warn(f"r_max/kappa_c = {r_max / params.kappa_c:.3g} > 1: not overdamped", stacklevel=2)
    ph = accumulated_phases(pulse, params, t)
    r = params.rate(pulse.amplitude(t))
    c_i = np.exp(-ph.mu) + 0j
    c_f = (r / params.kappa_c) * np.exp(-ph.mu - 1j * ph.theta_c)
    return c_i, c_f


def emission_probability(trajectory: AmplitudeTrajectory) -> float:
    """1 - |C_i(T)|^2 - |C_f(T)|^2, clipped to [0, 1]."""
    p = 1.0 - abs(trajectory.c_i[-1]) ** 2 - abs(trajectory.c_f[-1]) ** 2
    return float(min(1.0, max(0.0, p)))


# ---------------------------------------------------------------------------
# envelopes
# ---------------------------------------------------------------------------


def time_points_for(omegas, duration: float) -> int:
    """Time samples needed for >= 20 points per period of the fastest phase."""
    w_max = float(np.max(np.abs(omegas)))
    return max(MIN_TIME_POINTS, int(math.ceil(POINTS_PER_PERIOD * w_max * duration / (2 * math.pi))) + 1)


def grid_problems(omegas, kappa_c: float) -> list:
    omegas = np.asarray(omegas, dtype=float)
    problems = []
    if omegas.ndim != 1 or omegas.size < 2:
        return ["frequency grid needs at least two points"]
    steps = np.diff(omegas)
    if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
        problems.append("frequency grid must be uniform and increasing")
    if steps[0] > kappa_c / 10 * (1 + 1e-12):
        problems.append(f"d_omega = {steps[0] / kappa_c:.4g} kappa_c exceeds kappa_c/10")
    # mode centres sit half a step inside the window edges
    span = omegas[-1] - omegas[0] + steps[0]
    if span < 40 * kappa_c * (1 - 1e-12):
        problems.append(f"span = {span / kappa_c:.4g} kappa_c is below 40 kappa_c")
    return problems


def _fourier(omegas: np.ndarray, times: np.ndarray, f: np.ndarray, chunk: int = 64) -> np.ndarray:
    """Composite-trapezoid int exp(i w t) f(t) dt for each w."""
    dt = np.diff(times)
    w = np.zeros_like(times)
    w[:-1] += dt / 2
    w[1:] += dt / 2
    wf = w * f
    out = np.empty(omegas.shape, complex)
    for s in range(0, omegas.size, chunk):
        block = omegas[s:s + chunk]
        out[s:s + chunk] = np.exp(1j * np.outer(block, times)) @ wf
    return out


def spectral_envelope(sequence: GenerationSequence, params: BranchParams, omegas=None,
                      method: str = "full_ode", branch: int = 0, n_time: int | None = None,
                      strict: bool = True, tol: float = 1e-10) -> SpectralEnvelope:
    """G(w, T) on a frequency grid (rad/s relative to the cavity line).

    ``strict`` turns grid-resolution problems into :class:`GridResolutionError`;
    otherwise they are logged and recorded in ``notes``.
    """
    if omegas is None:
        omegas = default_omega_grid(params.kappa_c)
    omegas = np.asarray(omegas, dtype=float)
    T = sequence.duration
    problems = grid_problems(omegas, params.kappa_c)
    needed = time_points_for(omegas, T)
    if n_time is None:
        n_time = needed
    elif n_time < needed:
        problems.append(f"{n_time} time points < {needed} required by the resolution rule")
    if problems:
        if strict:
            raise GridResolutionError("; ".join(problems))
        for p in problems:
            log.warning("spectral_envelope: %s", p)
    times = np.linspace(0.0, T, n_time)
    if method == "full_ode":
        traj = solve_amplitudes(sequence, params, branch, tol=tol, times=times)
        f = traj.c_f * np.exp(-1j * params.g_bar_sq * times)
    elif method == "overdamped":
        table = control_table(sequence.pulse(branch), params, times, duration=T)
        f = (table.rate / params.kappa_c) * np.exp(-table.mu - 1j * (table.theta + table.phi))
    else:
        raise ValueError(f"unknown method {method!r}")
    values = math.sqrt(params.kappa_c / math.pi) * _fourier(omegas, times, f)
    return SpectralEnvelope(omegas, values, sequence.start, T, branch, method, tuple(problems))


def envelope_overlap(env_a: SpectralEnvelope, env_b: SpectralEnvelope) -> complex:
    """int dw conj(exp(i w t_a) G_a) exp(i w t_b) G_b  (trapezoid rule).

    Envelopes of different branches are orthogonal by construction and give 0.
    """
    if env_a.omegas.shape != env_b.omegas.shape or not np.allclose(env_a.omegas, env_b.omegas, rtol=0,
                                                                     atol=1e-12 * np.max(np.abs(env_a.omegas))):
        raise ValueError("envelopes live on different frequency grids")
    if env_a.branch != env_b.branch:
        return 0j
    lag = env_b.start - env_a.start
    period = 2 * math.pi / env_a.d_omega
    support = max(env_a.duration, env_b.duration)
    if lag != 0 and period - abs(lag) < support:
        raise GridResolutionError(
            f"frequency step aliases lag {lag:.4g} s (period {period:.4g} s, packet length {support:.4g} s)")
    integrand = np.conj(env_a.values) * env_b.values * np.exp(1j * env_a.omegas * lag)
    return complex(np.trapezoid(integrand, env_a.omegas))


def write_envelope_csv(env: SpectralEnvelope, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["omega_rad_per_s", "re_G", "im_G", "abs2_G"])
        for w, g in zip(env.omegas, env.values):
            writer.writerow([repr(float(w)), repr(float(g.real)), repr(float(g.imag)), repr(float(abs(g) ** 2))])


def read_envelope_csv(path) -> SpectralEnvelope:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return SpectralEnvelope(data[:, 0], data[:, 1] + 1j * data[:, 2])
