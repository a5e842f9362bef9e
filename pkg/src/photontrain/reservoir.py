"""
Exact Schroedinger integration of atom + cavity + N discrete reservoir modes.

The continuum outside the cavity is replaced by N modes at

    w_k = -W/2 + (k + 1/2) W/N,   coupling sqrt(kappa_c dw / pi),  dw = W/N,

and the interaction-picture Hamiltonian is kept exactly as it stands, with the
explicit exp(i w_k t) factors on the cavity-reservoir coupling.  Only one
polarization branch is simulated (the branches never mix).

State layout.  Index 0 of every "boson" vector is the cavity mode, indices
1..N the reservoir modes.

* one-excitation sector: ``x`` = amplitude of |i, vac>, ``y[m]`` = amplitude
  of |f, one boson in m>.
* two-excitation sector (after an ideal recycle): ``u[m]`` = |i, one boson in
  m>, and a symmetric matrix ``F`` for |f, two bosons> with
  |psi_f> = 2^{-1/2} sum_{ab} F_ab b_a^dag b_b^dag |vac>, so that the Frobenius
  norm of F is the norm of that component.  This includes |i, 1_c> and
  |f, 2_c>, so re-absorption of an earlier photon is not truncated away.

Time stepping is a Strang splitting exp(-iV dt/2) exp(-iH_res dt) exp(-iV dt/2)
with every factor exponentiated in closed form: V acts as independent 2x2
blocks, and the frozen-time cavity-reservoir coupling is a beam splitter
between the cavity and one collective reservoir mode.  Each factor is unitary,
so the norm drifts only by rounding.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import blas

from .control import BranchParams, GenerationSequence, Recycle, Schedule, control_table
from .exceptions import ConfigError, NormDriftError, ResidualAmplitudeError
from .markov import SpectralEnvelope, spectral_envelope

NORM_DRIFT_LIMIT = 1e-6
RESIDUAL_LIMIT = 1e-3


@dataclass(frozen=True)
class ModeGrid:
    n_modes: int
    width: float
    kappa_c: float

    def __post_init__(self):
        if self.n_modes < 16:
            raise ConfigError("ModeGrid needs at least 16 modes")
        if self.width < 10 * self.kappa_c * (1 - 1e-12):
            raise ConfigError("ModeGrid window must be at least 10 kappa_c wide")

    @classmethod
    def relative(cls, n_modes: int, width_over_kappa: float, kappa_c: float) -> "ModeGrid":
        return cls(n_modes, width_over_kappa * kappa_c, kappa_c)

    @property
    def d_omega(self) -> float:
        return self.width / self.n_modes

    @property
    def omegas(self) -> np.ndarray:
        return -self.width / 2 + (np.arange(self.n_modes) + 0.5) * self.d_omega

    @property
    def coupling(self) -> float:
        return math.sqrt(self.kappa_c * self.d_omega / math.pi)

    @property
    def recurrence_time(self) -> float:
        return 2 * math.pi / self.d_omega

    def default_dt(self) -> float:
        return min(1 / (20 * self.width), 1 / (20 * self.kappa_c))

    def check_duration(self, total: float, allow_recurrence: bool = False) -> bool:
        """True if the run ends before the first discrete-mode revival."""
        ok = self.d_omega * total < 2 * math.pi
        if not ok and not allow_recurrence:
            raise ConfigError(
                f"run of {total:.4g} s exceeds the revival time {self.recurrence_time:.4g} s of the mode grid")
        return ok


@dataclass(frozen=True)
class OneExcState:
    c_i: complex
    c_fc: complex
    c_k: np.ndarray
    time: float
    branch: int = 0

    def norm_sq(self) -> float:
        return abs(self.c_i) ** 2 + abs(self.c_fc) ** 2 + float(np.vdot(self.c_k, self.c_k).real)


@dataclass(frozen=True)
class SingleRun:
    """Samples of a one-excitation run plus its final state."""

    times: np.ndarray
    c_i: np.ndarray
    c_fc: np.ndarray
    reservoir_weight: np.ndarray
    final: OneExcState
    max_norm_drift: float
    dt: float


@dataclass(frozen=True)
class TwoPhotonState:
    grid: ModeGrid
    s1_i_k: np.ndarray
    s1_fc_k: np.ndarray
    s2: np.ndarray
    i_1c: complex
    f_2c: complex
    t0: float
    t1: float
    discarded_weight: float = 0.0
    max_norm_drift: float = 0.0

    def norm_sq(self) -> float:
        parts = (self.s1_i_k, self.s1_fc_k, self.s2)
        return (sum(float(np.vdot(p, p).real) for p in parts)
                + abs(self.i_1c) ** 2 + abs(self.f_2c) ** 2)

    def s2_matrix(self) -> np.ndarray:
        """The symmetric two-photon tensor F_kl (undoing the sqrt 2 weights)."""
        return storage_to_symmetric(self.s2, self.grid.n_modes)


def symmetric_to_storage(F: np.ndarray) -> np.ndarray:
    n = F.shape[0]
    iu = np.triu_indices(n)
    weights = np.where(iu[0] < iu[1], math.sqrt(2), 1.0)
    return F[iu] * weights


def storage_to_symmetric(s: np.ndarray, n: int) -> np.ndarray:
    iu = np.triu_indices(n)
    weights = np.where(iu[0] < iu[1], math.sqrt(2), 1.0)
    F = np.zeros((n, n), complex)
    F[iu] = s / weights
    F[(iu[1], iu[0])] = s / weights
    return F


# ---------------------------------------------------------------------------
# propagators
# ---------------------------------------------------------------------------


def _rotate_pairs(x, y, a, b, beta, tau):
    """Apply exp(-i H tau), H = [[a, conj(beta)], [beta, b]], to pairs (x, y)."""
    m = 0.5 * (a + b)
    d = 0.5 * (a - b)
    w = np.sqrt(d * d + np.abs(beta) ** 2)
    c = np.cos(w * tau)
    s = np.where(w > 0, np.sin(w * tau) / np.where(w > 0, w, 1.0), tau)
    ph = np.exp(-1j * m * tau)
    x_new = ph * ((c - 1j * s * d) * x - 1j * s * np.conj(beta) * y)
    y_new = ph * (-1j * s * beta * x + (c + 1j * s * d) * y)
    return x_new, y_new


@dataclass
class _Drive:
    """Controls at the midpoints of the integration steps."""

    stark: np.ndarray
    beta: np.ndarray
    g_bar_sq: float


def _drive(sequence: GenerationSequence | None, params: BranchParams, branch: int,
           t_start: float, n_steps: int, dt: float) -> _Drive:
    mids = t_start + (np.arange(n_steps) + 0.5) * dt
    stark = np.zeros(n_steps)
    beta = np.zeros(n_steps, complex)
    if sequence is not None:
        local = mids - sequence.start
        inside = (local >= 0) & (local <= sequence.duration)
        if inside.any():
            table = control_table(sequence.pulse(branch), params, local[inside], duration=sequence.duration)
            stark[inside] = table.stark
            beta[inside] = 1j * table.rate * np.exp(-1j * table.phi)
    return _Drive(stark, beta, params.g_bar_sq)


def _steps(t_start: float, t_end: float, dt_max: float):
    n = max(1, int(math.ceil((t_end - t_start) / dt_max - 1e-9)))
    return n, (t_end - t_start) / n


class _BathRotation:
    """exp(-i dt H_res(t)) for the frozen cavity-reservoir coupling."""

    def __init__(self, grid: ModeGrid, dt: float):
        self.omegas = grid.omegas
        strength = grid.coupling * math.sqrt(grid.n_modes)
        self.c = math.cos(strength * dt)
        self.s = math.sin(strength * dt)
        self.norm = math.sqrt(grid.n_modes)

    def direction(self, t: float) -> np.ndarray:
        # unit vector of h_k = i g_k exp(i w_k t)
        return 1j * np.exp(1j * self.omegas * t) / self.norm

    def vector(self, y: np.ndarray, h: np.ndarray) -> None:
        """In-place rotation of a boson vector y (y[0] = cavity)."""
        c, s = self.c, self.s
        proj = np.vdot(h, y[1:])
        y0 = y[0]
        y[0] = c * y0 - 1j * s * proj
        y[1:] += ((c - 1) * proj - 1j * s * y0) * h

    def matrix(self, F: np.ndarray, h: np.ndarray) -> np.ndarray:
        """U F U^T for symmetric, Fortran-ordered F (rank-one BLAS updates in place)."""
        c, s = self.c, self.s
        hf = np.zeros(F.shape[0], complex)
        hf[1:] = h
        hc = np.conj(hf)
        # rows: F <- U F
        hF = hc @ F
        F0 = F[0, :].copy()
        F[0, :] += (c - 1) * F0 - 1j * s * hF
        F = blas.zgeru(1.0, hf, (c - 1) * hF - 1j * s * F0, a=F, overwrite_a=1)
        # columns: F <- F U^T
        Gh = F @ hc
        G0 = F[:, 0].copy()
        F[:, 0] += (c - 1) * G0 - 1j * s * Gh
        F = blas.zgeru(1.0, (c - 1) * Gh - 1j * s * G0, hf, a=F, overwrite_a=1)
        return F


def _one_exc_evolve(x: complex, y: np.ndarray, drive: _Drive, bath: _BathRotation,
                    t_start: float, dt: float, save_every: int, record: list) -> tuple:
    gsq = drive.g_bar_sq
    norm0 = abs(x) ** 2 + float(np.vdot(y, y).real)
    drift = 0.0
    for n in range(drive.stark.size):
        a, beta = drive.stark[n], drive.beta[n]
        if beta != 0 or a != 0:
            x, y0 = _rotate_pairs(x, y[0], a, gsq, beta, dt / 2)
        else:
            x, y0 = x, y[0] * np.exp(-1j * gsq * dt / 2)
        y[0] = y0
        bath.vector(y, bath.direction(t_start + (n + 0.5) * dt))
        if beta != 0 or a != 0:
            x, y0 = _rotate_pairs(x, y[0], a, gsq, beta, dt / 2)
        else:
            y0 = y[0] * np.exp(-1j * gsq * dt / 2)
        y[0] = y0
        x = complex(x)
        err = abs(abs(x) ** 2 + float(np.vdot(y, y).real) - norm0)
        drift = max(drift, err)
        if err > NORM_DRIFT_LIMIT:
            raise NormDriftError(f"norm drift {err:.3g} at t = {t_start + (n + 1) * dt:.6g}")
        if save_every and (n + 1) % save_every == 0:
            record.append((t_start + (n + 1) * dt, x, y[0], float(np.vdot(y[1:], y[1:]).real)))
    return x, y, drift


def integrate_single(sequence: GenerationSequence, params: BranchParams, grid: ModeGrid,
                     branch: int = 0, dt: float | None = None, t_end: float | None = None,
                     n_samples: int = 200, allow_recurrence: bool = False) -> SingleRun:
    """One generation window in the one-excitation sector, starting from |i, vac>."""
    if params.kappa_c != grid.kappa_c:
        raise ConfigError("grid and parameters disagree on kappa_c")
    t_start = sequence.start
    t_end = sequence.stop if t_end is None else t_end
    grid.check_duration(t_end - t_start, allow_recurrence)
    n_steps, dt = _steps(t_start, t_end, dt or grid.default_dt())
    drive = _drive(sequence, params, branch, t_start, n_steps, dt)
    bath = _BathRotation(grid, dt)
    y = np.zeros(grid.n_modes + 1, complex)
    record = [(t_start, 1.0 + 0j, 0j, 0.0)]
    save_every = max(1, n_steps // n_samples)
    x, y, drift = _one_exc_evolve(1.0 + 0j, y, drive, bath, t_start, dt, save_every, record)
    if record[-1][0] != t_start + n_steps * dt:
        record.append((t_start + n_steps * dt, x, y[0], float(np.vdot(y[1:], y[1:]).real)))
    times, ci, cfc, wres = (np.array(col) for col in zip(*record))
    final = OneExcState(complex(x), complex(y[0]), y[1:].copy(), t_end, branch)
    return SingleRun(times, ci, cfc, wres, final, drift, dt)


def extract_exact_envelope(state: OneExcState, grid: ModeGrid, start: float = 0.0,
                           duration: float = 0.0, residual_limit: float = RESIDUAL_LIMIT) -> SpectralEnvelope:
    """G_exact(w_k) = c_k exp(-i w_k t_j) / sqrt(dw), window-local like the Markov envelope."""
    if abs(state.c_fc) > residual_limit:
        raise ResidualAmplitudeError(f"cavity amplitude {abs(state.c_fc):.3g} left at the end of the window")
    w = grid.omegas
    values = state.c_k * np.exp(-1j * w * start) / math.sqrt(grid.d_omega)
    return SpectralEnvelope(w, values, start, duration, state.branch, "exact")


# ---------------------------------------------------------------------------
# Markov validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MarkovComparison:
    n_modes: int
    width: float
    kappa_c: float
    error: float
    emission_exact: float
    emission_markov: float
    max_norm_drift: float
    no_revival: bool


def relative_l2(a: np.ndarray, b: np.ndarray) -> float:
    """||a - b|| / ||b||, with 0 when both vanish."""
    nb = float(np.linalg.norm(b))
    diff = float(np.linalg.norm(a - b))
    if nb == 0.0:
        return 0.0 if diff == 0.0 else math.inf
    return diff / nb


def markov_validation(sequence: GenerationSequence, params: BranchParams, grid: ModeGrid,
                      branch: int = 0, dt: float | None = None, allow_recurrence: bool = False,
                      tol: float = 1e-11) -> MarkovComparison:
    """Relative L2 distance between sqrt(dw) G_markov(w_k) and the exact c_k(T)."""
    ok = grid.check_duration(sequence.duration, allow_recurrence)
    run = integrate_single(sequence.shifted(0.0), params, grid, branch, dt, allow_recurrence=allow_recurrence)
    env = spectral_envelope(sequence.shifted(0.0), params, grid.omegas, "full_ode", branch,
                            strict=False, tol=tol)
    predicted = math.sqrt(grid.d_omega) * env.values
    exact = run.final.c_k
    return MarkovComparison(grid.n_modes, grid.width, grid.kappa_c, relative_l2(exact, predicted),
                            float(np.vdot(exact, exact).real), float(np.vdot(predicted, predicted).real),
                            run.max_norm_drift, ok)


def convergence_sweep(sequence, params, pairs, branch: int = 0, dt: float | None = None,
                      executor=None) -> list:
    """markov_validation over (n_modes, width_over_kappa) pairs, revivals allowed."""
    def one(pair):
        n, w = pair
        grid = ModeGrid.relative(int(n), float(w), params.kappa_c)
        return markov_validation(sequence, params, grid, branch, dt, allow_recurrence=True)

    if executor is None:
        return [one(p) for p in pairs]
    return list(executor.map(one, pairs))


def write_sweep_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["n_modes", "width_over_kappa", "relative_l2_error", "emission_exact",
                         "emission_markov", "max_norm_drift", "no_revival"])
        for r in rows:
            writer.writerow([r.n_modes, repr(r.width / r.kappa_c), repr(r.error), repr(r.emission_exact),
                             repr(r.emission_markov), repr(r.max_norm_drift), int(r.no_revival)])


# ---------------------------------------------------------------------------
# two photons
# ---------------------------------------------------------------------------


def _two_exc_v(u, F, a, gsq, beta, tau):
    """exp(-i V tau) on the two-excitation sector (in place on u, F)."""
    root2 = math.sqrt(2)
    v = root2 * F[0, 1:]
    u_b, v = _rotate_pairs(u[1:], v, a, gsq, beta, tau)
    u0, f00 = _rotate_pairs(u[0], F[0, 0], a, 2 * gsq, root2 * beta, tau)
    u[1:] = u_b
    u[0] = u0
    F[0, 1:] = v / root2
    F[1:, 0] = v / root2
    F[0, 0] = f00


def two_photon_schedule(first: GenerationSequence, second: GenerationSequence) -> Schedule:
    return Schedule((1.0, 0.0), (first, Recycle(), second))


def integrate_two_photon(schedule: Schedule, params: BranchParams, grid: ModeGrid, branch: int = 0,
                         dt: float | None = None, residual_limit: float = RESIDUAL_LIMIT,
                         allow_overlap: bool = False, allow_recurrence: bool = False) -> TwoPhotonState:
    """Two generation windows separated by an ideal, instantaneous recycle.

    The recycle happens at the start t1 of the second window.  Amplitude still
    in |i, vac> at that moment never produced a photon and is dropped (its
    weight is reported); everything else is relabelled f -> i.  Unless
    ``allow_overlap`` is set, the leftover |i>/|f, 1_c> probability must stay
    below ``residual_limit``.
    """
    if params.kappa_c != grid.kappa_c:
        raise ConfigError("grid and parameters disagree on kappa_c")
    seqs = schedule.sequences
    kinds = [type(e) for e in schedule.events]
    if len(seqs) != 2 or kinds != [GenerationSequence, Recycle, GenerationSequence]:
        raise ConfigError("two-photon runs need events [generation, recycle, generation]")
    first, second = seqs
    t0, t1, t_end = first.start, second.start, second.stop
    if t1 < first.stop and not allow_overlap:
        raise ConfigError("generation windows overlap")
    grid.check_duration(t_end - t0, allow_recurrence)
    dt_max = dt or grid.default_dt()

    # phase 1: first window (truncated at t1) plus any idle gap before t1
    n1, dt1 = _steps(t0, t1, dt_max)
    drive = _drive(first, params, branch, t0, n1, dt1)
    y = np.zeros(grid.n_modes + 1, complex)
    x, y, drift1 = _one_exc_evolve(1.0 + 0j, y, drive, _BathRotation(grid, dt1), t0, dt1, 0, [])
    residual = abs(x) ** 2 + abs(y[0]) ** 2
    if residual > residual_limit and not allow_overlap:
        raise ResidualAmplitudeError(
            f"residual atom/cavity probability {residual:.3g} at recycle exceeds {residual_limit}")

    # recycle: |f, boson m> -> |i, boson m>
    u = y.copy()
    M = grid.n_modes + 1
    F = np.zeros((M, M), complex, order="F")
    discarded = abs(x) ** 2
    norm0 = float(np.vdot(u, u).real)

    # phase 2
    n2, dt2 = _steps(t1, t_end, dt_max)
    drive = _drive(second, params, branch, t1, n2, dt2)
    bath = _BathRotation(grid, dt2)
    gsq = drive.g_bar_sq
    drift2 = 0.0
    for n in range(n2):
        a, beta = drive.stark[n], drive.beta[n]
        _two_exc_v(u, F, a, gsq, beta, dt2 / 2)
        h = bath.direction(t1 + (n + 0.5) * dt2)
        bath.vector(u, h)
        F = bath.matrix(F, h)
        _two_exc_v(u, F, a, gsq, beta, dt2 / 2)
        err = abs(float(np.vdot(u, u).real) + float(np.vdot(F, F).real) - norm0)
        drift2 = max(drift2, err)
        if err > NORM_DRIFT_LIMIT:
            raise NormDriftError(f"norm drift {err:.3g} in the two-photon sector")

    return TwoPhotonState(grid, u[1:].copy(), math.sqrt(2) * F[0, 1:].copy(),
                          symmetric_to_storage(np.ascontiguousarray(F[1:, 1:])),
                          complex(u[0]), complex(F[0, 0]), t0, t1, float(discarded),
                          max(drift1, drift2))


def product_prediction(G1: SpectralEnvelope, G2: SpectralEnvelope, t0: float, t1: float) -> np.ndarray:
    """Stored upper-triangle amplitudes of sym[B1 (x) B2] from two envelopes."""
    if G1.omegas.shape != G2.omegas.shape or not np.allclose(G1.omegas, G2.omegas):
        raise ValueError("envelopes live on different frequency grids")
    dw = G1.d_omega
    w = G1.omegas
    b1 = np.exp(1j * w * t0) * G1.values * math.sqrt(dw)
    b2 = np.exp(1j * w * t1) * G2.values * math.sqrt(dw)
    F = (np.outer(b1, b2) + np.outer(b2, b1)) / math.sqrt(2)
    return symmetric_to_storage(F)


def factorization_error(two_photon: TwoPhotonState, G1: SpectralEnvelope, G2: SpectralEnvelope,
                        t0: float, t1: float) -> float:
    """||s2/|s2| - P/|P||| with P the symmetrized product of the two wavepackets."""
    if not np.allclose(G1.omegas, two_photon.grid.omegas):
        raise ValueError("envelope grid does not match the mode grid")
    p = product_prediction(G1, G2, t0, t1)
    s = two_photon.s2
    ns, npred = np.linalg.norm(s), np.linalg.norm(p)
    if ns == 0 or npred == 0:
        raise ValueError("zero-norm two-photon amplitude")
    return float(np.linalg.norm(s / ns - p / npred))


def write_two_photon_csv(state: TwoPhotonState, path) -> None:
    w = state.grid.omegas
    iu = np.triu_indices(state.grid.n_modes)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["omega_k", "omega_l", "abs2_amplitude"])
        for k, l, a in zip(iu[0], iu[1], state.s2):
            writer.writerow([repr(float(w[k])), repr(float(w[l])), repr(float(abs(a) ** 2))])
