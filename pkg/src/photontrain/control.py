"""
Physical parameters, control pulses and generation schedules.

Everything here lives in the interaction picture with respect to the cavity
frequency, so the only time dependence left is the slow envelope of the
classical Raman fields.  All rates are angular (rad/s) and all times are in
seconds.  Pulse shapes and phases are written in *window-local* time: t = 0 is
the start of the generation window they belong to.

The derived quantities used by every other module are

    Omega_bar^2(t) = Omega(t)^2 / (4 delta)      (ac-Stark shift of |i>)
    |g_bar|^2      = g^2 / delta                 (ac-Stark shift of |f,1_c>)
    r(t)           = g Omega(t) / (2 delta)      (effective Raman coupling)
    theta(t)       = int_0^t Omega_bar^2
    mu(t)          = int_0^t r^2 / kappa_c
    theta_c(t)     = theta(t) + phi(t) - |g_bar|^2 t
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np
from scipy import integrate

from .exceptions import ConfigError, QuadratureError

SMOOTH_OFF_RATIO = 1e-6
DEFAULT_MU_MIN = 3.0
UNIT_NORM_TOL = 1e-9


# ---------------------------------------------------------------------------
# parameters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BranchParams:
    """Rates for one polarization branch (one effective two-level system)."""

    g: float
    delta: float
    kappa_c: float
    kappa_abs: float = 0.0
    gamma_sp: float = 0.0

    def __post_init__(self):
        for name in ("g", "delta", "kappa_c", "kappa_abs", "gamma_sp"):
            value = getattr(self, name)
            if not np.isfinite(value):
                raise ConfigError(f"{name} must be finite, got {value!r}")
        for name in ("g", "delta", "kappa_c"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)!r}")
        for name in ("kappa_abs", "gamma_sp"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.delta / self.g < 10:
            warnings.warn(
                f"delta/g = {self.delta / self.g:.3g} < 10: adiabatic elimination "
                "of the upper levels is questionable",
                stacklevel=3,
            )

    @property
    def g_bar(self) -> float:
        return self.g / math.sqrt(self.delta)

    @property
    def g_bar_sq(self) -> float:
        return self.g**2 / self.delta

    def stark(self, omega):
        """Omega_bar^2 for a Rabi frequency (array-friendly)."""
        return np.asarray(omega) ** 2 / (4.0 * self.delta)

    def rate(self, omega):
        """r = g Omega / (2 delta)."""
        return self.g * np.asarray(omega) / (2.0 * self.delta)

    def scaled(self, factor: float) -> "BranchParams":
        return BranchParams(*(factor * v for v in (self.g, self.delta, self.kappa_c,
                                                   self.kappa_abs, self.gamma_sp)))


MHZ = 1e6


def reference_parameters(kappa_abs: float = 0.0) -> BranchParams:
    """Parameter set quoted for the atom-cavity source.

    The quoted "MHz" figures are taken as angular rates, i.e. 55 MHz becomes
    55e6 rad/s.  Only ratios enter the dimensionless checks.
    """
    return BranchParams(g=55 * MHZ, delta=1500 * MHZ, kappa_c=50 * MHZ,
                        kappa_abs=kappa_abs, gamma_sp=5 * MHZ)


PAPER_PEAK_RABI = 55 * MHZ


# ---------------------------------------------------------------------------
# pulse shapes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Gaussian:
    peak: float
    center: float
    width: float
    kind = "gaussian"

    def __post_init__(self):
        if self.peak < 0 or self.width <= 0:
            raise ConfigError("Gaussian needs peak >= 0 and width > 0")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return self.peak * np.exp(-0.5 * ((t - self.center) / self.width) ** 2)

    @property
    def max_amplitude(self) -> float:
        return self.peak

    def breakpoints(self) -> tuple:
        return (self.center,)


@dataclass(frozen=True)
class ConstantWindow:
    amplitude: float
    start: float
    stop: float
    kind = "constant"

    def __post_init__(self):
        if self.amplitude < 0 or self.stop <= self.start:
            raise ConfigError("ConstantWindow needs amplitude >= 0 and stop > start")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.where((t >= self.start) & (t <= self.stop), self.amplitude, 0.0)

    @property
    def max_amplitude(self) -> float:
        return self.amplitude

    def breakpoints(self) -> tuple:
        return (self.start, self.stop)


@dataclass(frozen=True)
class RaisedCosineWindow:
    amplitude: float
    start: float
    stop: float
    kind = "raised_cosine"

    def __post_init__(self):
        if self.amplitude < 0 or self.stop <= self.start:
            raise ConfigError("RaisedCosineWindow needs amplitude >= 0 and stop > start")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        x = (t - self.start) / (self.stop - self.start)
        inside = (x >= 0) & (x <= 1)
        return np.where(inside, self.amplitude * np.sin(np.pi * np.clip(x, 0, 1)) ** 2, 0.0)

    @property
    def max_amplitude(self) -> float:
        return self.amplitude

    def breakpoints(self) -> tuple:
        return (self.start, 0.5 * (self.start + self.stop), self.stop)


@dataclass(frozen=True)
class Tabulated:
    """Piecewise-linear amplitude through samples; zero outside the grid."""

    times: tuple
    values: tuple
    kind = "tabulated"

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.ndim != 1 or times.shape != values.shape or times.size < 2:
            raise ConfigError("Tabulated needs matching 1-d time/value arrays (>= 2 samples)")
        if np.any(np.diff(times) <= 0):
            raise ConfigError("Tabulated times must be strictly increasing")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ConfigError("Tabulated amplitudes must be finite and >= 0")
        object.__setattr__(self, "times", tuple(times.tolist()))
        object.__setattr__(self, "values", tuple(values.tolist()))
        # array copies for fast evaluation; not dataclass fields
        object.__setattr__(self, "_t", times)
        object.__setattr__(self, "_v", values)

    def __call__(self, t):
        return np.interp(np.asarray(t, dtype=float), self._t, self._v, left=0.0, right=0.0)

    @property
    def max_amplitude(self) -> float:
        return max(self.values)

    def breakpoints(self) -> tuple:
        return self.times


PulseShape = Union[Gaussian, ConstantWindow, RaisedCosineWindow, Tabulated]


def zero_pulse_shape() -> ConstantWindow:
    return ConstantWindow(0.0, 0.0, 1.0)


# ---------------------------------------------------------------------------
# phase policies
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChirpCompensated:
    """phi(t) = |g_bar|^2 t - theta(t), which keeps theta_c identically zero."""

    kind = "chirp_compensated"


@dataclass(frozen=True)
class ZeroPhase:
    kind = "zero"


@dataclass(frozen=True)
class ExplicitPhase:
    times: tuple
    values: tuple
    kind = "explicit"

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.ndim != 1 or times.shape != values.shape or times.size < 1:
            raise ConfigError("ExplicitPhase needs matching 1-d time/value arrays")
        if np.any(np.diff(times) <= 0):
            raise ConfigError("ExplicitPhase times must be strictly increasing")
        object.__setattr__(self, "times", tuple(times.tolist()))
        object.__setattr__(self, "values", tuple(values.tolist()))

    def __call__(self, t):
        return np.interp(np.asarray(t, dtype=float), self.times, self.values)


PhasePolicy = Union[ChirpCompensated, ZeroPhase, ExplicitPhase]


@dataclass(frozen=True)
class ControlPulse:
    shape: PulseShape
    phase_policy: PhasePolicy = ChirpCompensated()

    def amplitude(self, t):
        return self.shape(t)

    def phase(self, t, params: BranchParams, theta=None):
        """phi(t); ``theta`` may be supplied to avoid recomputing it."""
        t = np.asarray(t, dtype=float)
        policy = self.phase_policy
        if isinstance(policy, ChirpCompensated):
            if theta is None:
                theta = accumulated_phases(self, params, t).theta
            return params.g_bar_sq * t - theta
        if isinstance(policy, ZeroPhase):
            return np.zeros_like(t)
        return policy(t)


def off_pulse() -> ControlPulse:
    return ControlPulse(zero_pulse_shape(), ZeroPhase())


# ---------------------------------------------------------------------------
# schedule events
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GenerationSequence:
    """One photon-generation window [start, start + duration].

    ``pulses[alpha]`` drives polarization branch alpha, in window-local time.
    """

    start: float
    duration: float
    pulses: tuple

    def __post_init__(self):
        if self.duration <= 0 or not np.isfinite(self.start):
            raise ConfigError("GenerationSequence needs a finite start and duration > 0")
        if len(self.pulses) != 2:
            raise ConfigError("GenerationSequence needs one pulse per branch (two)")
        object.__setattr__(self, "pulses", tuple(self.pulses))

    @property
    def stop(self) -> float:
        return self.start + self.duration

    def pulse(self, branch: int) -> ControlPulse:
        return self.pulses[branch]

    def shifted(self, start: float) -> "GenerationSequence":
        return GenerationSequence(start, self.duration, self.pulses)


@dataclass(frozen=True)
class Recycle:
    """Coherent transfer |f_alpha> -> |i_alpha> between generation windows."""

    kind = "recycle"


@dataclass(frozen=True)
class MixingPulse:
    """SU(2) rotation of the atom labels.

    |f0> -> d0|f0> + d1|f1>,   |f1> -> -conj(d1)|f0> + conj(d0)|f1>
    """

    d0: complex
    d1: complex
    kind = "mixing"

    def __post_init__(self):
        norm = abs(self.d0) ** 2 + abs(self.d1) ** 2
        if not abs(norm - 1.0) <= UNIT_NORM_TOL:
            raise ConfigError(f"mixing pulse must satisfy |d0|^2+|d1|^2=1 (got {norm:.12g})")

    @property
    def matrix(self) -> np.ndarray:
        """Columns are the images of |f0>, |f1>."""
        d0, d1 = complex(self.d0), complex(self.d1)
        return np.array([[d0, -d1.conjugate()], [d1, d0.conjugate()]])

    def inverse(self) -> "MixingPulse":
        d0, d1 = complex(self.d0), complex(self.d1)
        return MixingPulse(d0.conjugate(), -d1)


@dataclass(frozen=True)
class Measurement:
    """Projective atom measurement; outcome 0 is m0|f0> + m1|f1>."""

    m0: complex
    m1: complex
    kind = "measurement"

    def __post_init__(self):
        norm = abs(self.m0) ** 2 + abs(self.m1) ** 2
        if not abs(norm - 1.0) <= UNIT_NORM_TOL:
            raise ConfigError(f"measurement basis must be normalized (got {norm:.12g})")


Event = Union[GenerationSequence, Recycle, MixingPulse, Measurement]


@dataclass(frozen=True)
class Schedule:
    initial: tuple = (1 / math.sqrt(2), 1 / math.sqrt(2))
    events: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "initial", tuple(complex(c) for c in self.initial))
        object.__setattr__(self, "events", tuple(self.events))

    @property
    def sequences(self) -> list:
        return [e for e in self.events if isinstance(e, GenerationSequence)]


# ---------------------------------------------------------------------------
# derived scalar functions
# ---------------------------------------------------------------------------


def _check_finite(*values):
    for v in values:
        if not np.all(np.isfinite(v)):
            raise ConfigError("non-finite control or parameter value")


def effective_rate(pulse: ControlPulse, params: BranchParams, t):
    """r(t) = g Omega(t) / (2 delta)."""
    omega = pulse.amplitude(t)
    _check_finite(omega, t)
    return params.rate(omega)


@dataclass(frozen=True)
class Phases:
    theta: np.ndarray
    mu: np.ndarray
    theta_c: np.ndarray


def _squared_area(pulse: ControlPulse, t: np.ndarray, rtol: float) -> np.ndarray:
    """int_0^t Omega^2 for each t by adaptive quadrature, accumulated in order."""
    flat = t.ravel()
    order = np.argsort(flat)
    out = np.empty_like(flat)
    bps = np.asarray(pulse.shape.breakpoints(), dtype=float)

    def f(s):
        return float(pulse.amplitude(s)) ** 2

    total, left = 0.0, 0.0
    for idx in order:
        right = flat[idx]
        if right < 0:
            raise ConfigError("accumulated phases need t >= window start (0)")
        if right > left:
            pts = bps[(bps > left) & (bps < right)]
            val, err, *rest = integrate.quad(
                f, left, right, points=pts if pts.size else None, epsabs=0.0,
                epsrel=rtol, limit=500, full_output=1)
            if len(rest) > 1 and abs(err) > 1e3 * rtol * max(abs(val), 1e-300):
                raise QuadratureError(f"quadrature did not converge on [{left}, {right}]: {rest[1]}")
            total += val
            left = right
        out[idx] = total
    return out.reshape(t.shape)


def accumulated_phases(pulse: ControlPulse, params: BranchParams, t, rtol: float = 1e-12) -> Phases:
    """theta, mu and theta_c at window-local time(s) t (adaptive quadrature)."""
    t = np.asarray(t, dtype=float)
    _check_finite(t)
    area = _squared_area(pulse, t, rtol)
    theta = area / (4.0 * params.delta)
    mu = params.g**2 * area / (4.0 * params.delta**2 * params.kappa_c)
    phi = pulse.phase(t, params, theta=theta)
    theta_c = theta + phi - params.g_bar_sq * t
    return Phases(theta, mu, theta_c)


_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)


def cumulative_integral(f, times: np.ndarray, start: float = 0.0, breakpoints: Iterable = ()) -> np.ndarray:
    """int_start^t f for every t in the sorted array ``times``.

    Composite 10-point Gauss-Legendre on the intervals between consecutive
    times (split at ``breakpoints``).  Intended for dense grids where calling
    adaptive quadrature per point would be too slow.
    """
    times = np.asarray(times, dtype=float)
    if times.size and (np.any(np.diff(times) < 0) or times[0] < start):
        raise ConfigError("cumulative_integral needs sorted times >= start")
    bps = np.asarray([b for b in breakpoints if start < b < (times[-1] if times.size else start)])
    knots = np.unique(np.concatenate([[start], times, bps]))
    a, b = knots[:-1], knots[1:]
    half = 0.5 * (b - a)
    nodes = (0.5 * (a + b))[:, None] + half[:, None] * _GL_X[None, :]
    pieces = (f(nodes) * _GL_W[None, :]).sum(axis=1) * half
    cum = np.concatenate([[0.0], np.cumsum(pieces)])
    return cum[np.searchsorted(knots, times)]


@dataclass(frozen=True)
class ControlTable:
    """Controls sampled on a time grid (window-local times)."""

    times: np.ndarray
    omega: np.ndarray
    stark: np.ndarray
    rate: np.ndarray
    theta: np.ndarray
    mu: np.ndarray
    phi: np.ndarray

    @property
    def theta_c(self) -> np.ndarray:
        return self.theta + self.phi - self._g_bar_sq * self.times

    _g_bar_sq: float = 0.0


def control_table(pulse: ControlPulse, params: BranchParams, times, duration: float | None = None) -> ControlTable:
    """Sample Omega, Omega_bar^2, r, theta, mu and phi on a sorted grid.

    With ``duration`` given, the drive is switched off outside [0, duration].
    """
    times = np.asarray(times, dtype=float)

    def omega_of(s):
        w = pulse.amplitude(s)
        if duration is not None:
            w = np.where((s >= 0) & (s <= duration), w, 0.0)
        return w

    omega = omega_of(times)
    _check_finite(omega)
    bps = list(pulse.shape.breakpoints()) + ([duration] if duration is not None else [])
    area = cumulative_integral(lambda s: omega_of(s) ** 2, times, 0.0, bps)
    theta = area / (4.0 * params.delta)
    mu = params.g**2 * area / (4.0 * params.delta**2 * params.kappa_c)
    phi = pulse.phase(times, params, theta=theta)
    return ControlTable(times, omega, params.stark(omega), params.rate(omega), theta, mu,
                        np.asarray(phi, dtype=float), params.g_bar_sq)


def peak_for_mu(shape_factory, params: BranchParams, duration: float, mu_target: float) -> float:
    """Peak amplitude giving mu(duration) = mu_target for shape_factory(peak).

    mu is quadratic in the field amplitude, so one reference evaluation fixes it.
    """
    ref = ControlPulse(shape_factory(1.0))
    mu_ref = float(accumulated_phases(ref, params, duration).mu)
    if mu_ref <= 0:
        raise ConfigError("reference pulse has zero area")
    return math.sqrt(mu_target / mu_ref)


def gaussian_sequence(params: BranchParams, duration: float, mu_target: float, start: float = 0.0,
                      width_fraction: float = 1 / 12, branches=(0, 1)) -> GenerationSequence:
    """Centred Gaussian window pulse whose peak gives mu(T) = mu_target."""
    width = width_fraction * duration
    make = lambda peak: Gaussian(peak, duration / 2, width)
    peak = peak_for_mu(make, params, duration, mu_target)
    pulses = tuple(ControlPulse(make(peak)) if b in branches else off_pulse() for b in (0, 1))
    return GenerationSequence(start, duration, pulses)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class ScheduleReport:
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list:
        return [c for c in self.checks if not c.passed]

    def add(self, name, passed, detail=""):
        self.checks.append(Check(name, bool(passed), detail))

    def __str__(self):
        lines = [f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.detail}" for c in self.checks]
        return "\n".join(lines)


def _as_pair(params) -> tuple:
    if isinstance(params, BranchParams):
        return (params, params)
    params = tuple(params)
    if len(params) != 2:
        raise ConfigError("expected one BranchParams per branch")
    return params


def validate_schedule(schedule: Schedule, params, mu_min: float = DEFAULT_MU_MIN) -> ScheduleReport:
    """Check a schedule against the generation protocol; never raises on failure."""
    report = ScheduleReport()
    pair = _as_pair(params)

    c = schedule.initial
    norm = sum(abs(x) ** 2 for x in c)
    report.add("initial_norm", abs(norm - 1) <= UNIT_NORM_TOL, f"|c0|^2+|c1|^2 = {norm:.12g}")

    seqs = schedule.sequences
    ordered = sorted(seqs, key=lambda s: s.start)
    overlaps = [(a.start, b.start) for a, b in zip(ordered, ordered[1:]) if b.start < a.stop]
    report.add("overlap", not overlaps,
               "windows disjoint" if not overlaps else f"overlapping windows starting at {overlaps}")
    in_order = all(a.start <= b.start for a, b in zip(seqs, seqs[1:]))
    report.add("temporal_order", in_order, "events in temporal order" if in_order else "sequences out of order")

    last_gen = None
    recycled = True
    recycle_ok = True
    for k, ev in enumerate(schedule.events):
        if isinstance(ev, GenerationSequence):
            if last_gen is not None and not recycled:
                recycle_ok = False
            last_gen, recycled = ev, False
        elif isinstance(ev, Recycle):
            recycled = True
    report.add("recycle_between_sequences", recycle_ok,
               "ok" if recycle_ok else "two generation sequences without a Recycle in between")

    meas = [k for k, ev in enumerate(schedule.events) if isinstance(ev, Measurement)]
    meas_ok = len(meas) <= 1 and (not meas or meas[0] == len(schedule.events) - 1)
    report.add("measurement_last", meas_ok, "ok" if meas_ok else f"measurement events at {meas}")

    for k, seq in enumerate(seqs):
        for b, pulse in enumerate(seq.pulses):
            peak = pulse.shape.max_amplitude
            if peak <= 0:
                continue
            mu_T = float(accumulated_phases(pulse, pair[b], seq.duration).mu)
            report.add(f"mu_min[seq{k},branch{b}]", mu_T >= mu_min, f"mu(T) = {mu_T:.6g} (min {mu_min})")
            if not isinstance(pulse.shape, ConstantWindow):
                edge = max(float(pulse.amplitude(0.0)), float(pulse.amplitude(seq.duration)))
                report.add(f"smooth_off[seq{k},branch{b}]", edge <= SMOOTH_OFF_RATIO * peak,
                           f"edge/peak = {edge / peak:.3g}")
    return report


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------

_RATE_FIELDS = ("g", "delta", "kappa_c", "kappa_abs", "gamma_sp")
TWO_PI = 2 * math.pi


def _cpair(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def _cfrom(v) -> complex:
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ConfigError(f"complex numbers are [re, im] pairs, got {v!r}")
        return complex(float(v[0]), float(v[1]))
    return complex(float(v))


def shape_to_dict(shape: PulseShape) -> dict:
    if isinstance(shape, Gaussian):
        return {"kind": "gaussian", "peak": shape.peak, "center": shape.center, "width": shape.width}
    if isinstance(shape, (ConstantWindow, RaisedCosineWindow)):
        return {"kind": shape.kind, "amplitude": shape.amplitude, "start": shape.start, "stop": shape.stop}
    return {"kind": "tabulated", "times": list(shape.times), "values": list(shape.values)}


def shape_from_dict(d: dict, scale: float = 1.0) -> PulseShape:
    try:
        kind = d["kind"]
        if kind == "gaussian":
            return Gaussian(scale * d["peak"], d["center"], d["width"])
        if kind == "constant":
            return ConstantWindow(scale * d["amplitude"], d["start"], d["stop"])
        if kind == "raised_cosine":
            return RaisedCosineWindow(scale * d["amplitude"], d["start"], d["stop"])
        if kind == "tabulated":
            return Tabulated(tuple(d["times"]), tuple(scale * v for v in d["values"]))
    except KeyError as exc:
        raise ConfigError(f"pulse shape missing field {exc}") from None
    raise ConfigError(f"unknown pulse shape kind {d.get('kind')!r}")


def phase_to_dict(policy: PhasePolicy) -> dict:
    if isinstance(policy, ExplicitPhase):
        return {"kind": "explicit", "times": list(policy.times), "values": list(policy.values)}
    return {"kind": policy.kind}


def phase_from_dict(d: dict) -> PhasePolicy:
    kind = d.get("kind")
    if kind == "chirp_compensated":
        return ChirpCompensated()
    if kind == "zero":
        return ZeroPhase()
    if kind == "explicit":
        return ExplicitPhase(tuple(d["times"]), tuple(d["values"]))
    raise ConfigError(f"unknown phase policy {kind!r}")


def params_to_dict(p: BranchParams) -> dict:
    return {name: getattr(p, name) for name in _RATE_FIELDS}


def params_from_dict(d: dict, scale: float = 1.0) -> BranchParams:
    unknown = set(d) - set(_RATE_FIELDS)
    if unknown:
        raise ConfigError(f"unknown parameter keys {sorted(unknown)}")
    try:
        return BranchParams(**{k: scale * float(v) for k, v in d.items()})
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def event_to_dict(ev: Event) -> dict:
    if isinstance(ev, GenerationSequence):
        return {"type": "generation", "start": ev.start, "duration": ev.duration,
                "pulses": [{"shape": shape_to_dict(p.shape), "phase": phase_to_dict(p.phase_policy)}
                           for p in ev.pulses]}
    if isinstance(ev, Recycle):
        return {"type": "recycle"}
    if isinstance(ev, MixingPulse):
        return {"type": "mixing", "d": [_cpair(ev.d0), _cpair(ev.d1)]}
    return {"type": "measurement", "m": [_cpair(ev.m0), _cpair(ev.m1)]}


def event_from_dict(d: dict, scale: float = 1.0) -> Event:
    kind = d.get("type")
    if kind == "generation":
        pulses = tuple(ControlPulse(shape_from_dict(p["shape"], scale),
                                    phase_from_dict(p.get("phase", {"kind": "chirp_compensated"})))
                       for p in d["pulses"])
        return GenerationSequence(float(d["start"]), float(d["duration"]), pulses)
    if kind == "recycle":
        return Recycle()
    if kind == "mixing":
        return MixingPulse(*(_cfrom(v) for v in d["d"]))
    if kind == "measurement":
        return Measurement(*(_cfrom(v) for v in d["m"]))
    raise ConfigError(f"unknown event type {kind!r}")


def schedule_to_dict(schedule: Schedule, params) -> dict:
    pair = _as_pair(params)
    return {"units": "rad_s",
            "params": [params_to_dict(p) for p in pair],
            "initial": [_cpair(c) for c in schedule.initial],
            "events": [event_to_dict(e) for e in schedule.events]}


def schedule_from_dict(d: dict, units: str | None = None) -> tuple:
    """Returns (Schedule, (BranchParams, BranchParams)).

    ``units`` overrides the document's "units" key; "Hz" multiplies every rate
    and pulse amplitude by 2 pi.
    """
    units = units or d.get("units", "rad_s")
    if units not in ("rad_s", "Hz"):
        raise ConfigError(f"units must be 'rad_s' or 'Hz', got {units!r}")
    scale = TWO_PI if units == "Hz" else 1.0
    params = d.get("params")
    if isinstance(params, dict):
        params = [params, params]
    if not params or len(params) != 2:
        raise ConfigError("schedule needs 'params' for both branches")
    pair = tuple(params_from_dict(p, scale) for p in params)
    initial = tuple(_cfrom(c) for c in d.get("initial", [[2**-0.5, 0], [2**-0.5, 0]]))
    events = tuple(event_from_dict(e, scale) for e in d.get("events", []))
    return Schedule(initial, events), pair


def schedule_to_json(schedule: Schedule, params) -> str:
    return json.dumps(schedule_to_dict(schedule, params), indent=2, sort_keys=True)


def schedule_from_json(text: str, units: str | None = None) -> tuple:
    return schedule_from_dict(json.loads(text), units)
