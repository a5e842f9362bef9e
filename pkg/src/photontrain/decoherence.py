"""
Imperfect recycling, ensemble fidelities, absorption distortion and
feasibility estimates.

The recycle map between generation sequences is

    |f_alpha> -> A_alpha |i_alpha> + B_alpha |f_alpha>,
    A_alpha = (1 - eps_alpha) exp(i delta_alpha),  B_alpha = sqrt(1 - |A_alpha|^2).

Amplitude left in |f_alpha> does not emit in the following window, which is
recorded with the empty-slot marker "-".  Slot strings therefore run over
{0, 1, -}; only strings without "-" overlap with an n-qubit photon state.

Random errors come from numpy's PCG64 bit generator; sample k of a run with
seed s draws from SeedSequence(s, spawn_key=(k,)), so curves are reproducible
sample by sample whatever the batching or worker count.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import Executor
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, sparse

from .control import BranchParams, ControlPulse, Gaussian
from .exceptions import ConfigError
from .sequence import NQubitState, ghz_state

EMPTY = "-"
RNG_NAME = f"numpy PCG64 via SeedSequence(seed, spawn_key=(index,)); numpy {np.__version__}"
DEFAULT_CHUNK = 2048


# ---------------------------------------------------------------------------
# recycle errors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RecycleError:
    eps0: complex = 0j
    eps1: complex = 0j
    deph0: float = 0.0
    deph1: float = 0.0

    def __post_init__(self):
        for a in self.A:
            if abs(a) > 1 + 1e-12:
                raise ConfigError(f"|A| = {abs(a):.6g} > 1: not a valid recycle map")

    @property
    def A(self) -> tuple:
        return ((1 - self.eps0) * np.exp(1j * self.deph0), (1 - self.eps1) * np.exp(1j * self.deph1))

    @property
    def B(self) -> tuple:
        return tuple(math.sqrt(max(0.0, 1 - abs(a) ** 2)) for a in self.A)


@dataclass(frozen=True)
class ErrorDistribution:
    """|eps| ~ U[0, eps_m], arg eps ~ U[-eps_m, eps_m] pi, delta ~ U[-delta_m, delta_m] pi."""

    eps_m: float = 0.0
    delta_m: float = 0.0

    def __post_init__(self):
        if not 0 <= self.eps_m < 1:
            raise ConfigError("eps_m must lie in [0, 1)")
        if not 0 <= self.delta_m <= 1:
            raise ConfigError("delta_m must lie in [0, 1]")
        # |1 - eps| <= 1 needs |eps| <= 2 cos(arg eps) at the extreme draw
        if self.eps_m > 2 * math.cos(self.eps_m * math.pi):
            raise ConfigError(f"eps_m = {self.eps_m} allows |A| > 1")

    def transform(self, u: np.ndarray) -> tuple:
        """Map uniforms u[..., 3] on [0, 1) to (eps, delta) arrays."""
        mag = u[..., 0] * self.eps_m
        arg = (2 * u[..., 1] - 1) * self.eps_m * math.pi
        deph = (2 * u[..., 2] - 1) * self.delta_m * math.pi
        return mag * np.exp(1j * arg), deph

    def amplitudes(self, u: np.ndarray) -> tuple:
        """(A, B) for uniforms u[..., 3]."""
        eps, deph = self.transform(u)
        A = (1 - eps) * np.exp(1j * deph)
        B = np.sqrt(np.clip(1 - np.abs(A) ** 2, 0, None))
        return A, B

    def sample(self, rng: np.random.Generator) -> RecycleError:
        eps, deph = self.transform(rng.uniform(size=(2, 3)))
        return RecycleError(eps[0], eps[1], float(deph[0]), float(deph[1]))


def sample_stream(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def sample_uniforms(seed: int, index: int, events: int) -> np.ndarray:
    """Event-major uniforms of one sample, shape (events, branch, 3).

    Draws for fewer events are a prefix of those for more events.
    """
    return sample_stream(seed, index).uniform(size=(max(events, 0), 2, 3))


# ---------------------------------------------------------------------------
# single-sample slot states
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SlotState:
    """(slot string, atom label, level 'i' or 'f') -> amplitude."""

    terms: dict
    n_slots: int = 0

    @classmethod
    def initial(cls, c0: complex = 1 / math.sqrt(2), c1: complex = 1 / math.sqrt(2)) -> "SlotState":
        return cls({("", 0, "i"): complex(c0), ("", 1, "i"): complex(c1)}, 0)

    def norm_sq(self) -> float:
        return float(sum(abs(v) ** 2 for v in self.terms.values()))


def slot_generation_step(state: SlotState) -> SlotState:
    """|i_a> emits a photon labelled a; |f_a> leaves an empty slot."""
    out = {}
    for (x, a, level), v in state.terms.items():
        key = (x + (str(a) if level == "i" else EMPTY), a, "f")
        out[key] = out.get(key, 0j) + v
    return SlotState(out, state.n_slots + 1)


def imperfect_recycle(state: SlotState, err: RecycleError) -> SlotState:
    A, B = err.A, err.B
    out = {}
    for (x, a, level), v in state.terms.items():
        if level == "i":
            raise ConfigError("recycle applied to an atom that is still in |i>")
        out[(x, a, "i")] = A[a] * v
        if B[a] != 0:
            out[(x, a, "f")] = B[a] * v
    return SlotState(out, state.n_slots)


def _measured(state: SlotState) -> tuple:
    """Outcome-0 amplitudes of the (|f0> + |f1>)/sqrt(2) measurement and its probability."""
    proj: dict = {}
    for (x, a, level), v in state.terms.items():
        proj[x] = proj.get(x, 0j) + v / math.sqrt(2)
    return proj, sum(abs(v) ** 2 for v in proj.values())


def fidelity_from_slots(state: SlotState, target: NQubitState, mode: str = "raw") -> float:
    proj, p = _measured(state)
    if p == 0:
        return 0.0
    overlap = sum(q.conjugate() * proj.get(x, 0j) for x, q in target.amplitudes.items())
    if mode == "raw":
        norm = p
    elif mode == "postselected":
        norm = sum(abs(v) ** 2 for x, v in proj.items() if EMPTY not in x)
        if norm == 0:
            return 0.0
    else:
        raise ConfigError(f"mode must be 'raw' or 'postselected', got {mode!r}")
    return float(min(1.0, abs(overlap) ** 2 / norm))


def fidelity_sample(n: int, dist: ErrorDistribution, seed: int, target: NQubitState | None = None,
                    mode: str = "raw", index: int = 0) -> float:
    """Fidelity of one protocol run with freshly sampled recycle errors.

    Ideal first window, then n - 1 rounds of [imperfect recycle, generation],
    then the atom is measured in (|f0> + |f1>)/sqrt(2) and the outcome-0 state
    is compared with ``target`` (default GHZ+).
    """
    if n < 1:
        raise ConfigError("n must be >= 1")
    target = ghz_state(n) if target is None else target
    if target.n != n:
        raise ConfigError(f"target has {target.n} qubits, expected {n}")
    u = sample_uniforms(seed, index, n - 1)
    state = slot_generation_step(SlotState.initial())
    for j in range(n - 1):
        eps, deph = dist.transform(u[j])
        err = RecycleError(eps[0], eps[1], float(deph[0]), float(deph[1]))
        state = slot_generation_step(imperfect_recycle(state, err))
    return fidelity_from_slots(state, target, mode)


# ---------------------------------------------------------------------------
# batched Monte Carlo
# ---------------------------------------------------------------------------


class _Batch:
    """Slot states of many samples sharing one key list; amps has shape (batch, keys)."""

    def __init__(self, batch: int):
        self.keys = [("0", 0), ("1", 1)]          # after the ideal first window, all in |f>
        r = 1 / math.sqrt(2)
        self.amps = np.full((batch, 2), r, complex)

    def recycle_and_generate(self, A: np.ndarray, B: np.ndarray):
        """A, B: (batch, 2) per-branch map for this event."""
        labels = np.array([a for _, a in self.keys])
        emitted = self.amps * A[:, labels]
        stayed = self.amps * B[:, labels]
        self.keys = [(x + str(a), a) for x, a in self.keys] + [(x + EMPTY, a) for x, a in self.keys]
        self.amps = np.concatenate([emitted, stayed], axis=1)

    def fidelities(self, target: NQubitState) -> tuple:
        """(raw, postselected) fidelities for every sample in the batch."""
        strings = sorted({x for x, _ in self.keys})
        col = {x: k for k, x in enumerate(strings)}
        rows = np.arange(len(self.keys))
        cols = np.array([col[x] for x, _ in self.keys])
        S = sparse.csr_matrix((np.full(len(rows), 1 / math.sqrt(2)), (rows, cols)),
                              shape=(len(self.keys), len(strings)))
        proj = np.asarray((S.T @ self.amps.T).T)
        p = np.sum(np.abs(proj) ** 2, axis=1)
        photon = np.array([EMPTY not in x for x in strings])
        p_photon = np.sum(np.abs(proj[:, photon]) ** 2, axis=1)
        t = np.zeros(len(strings), complex)
        for x, q in target.amplitudes.items():
            if x in col:
                t[col[x]] = q
        ov = np.abs(proj @ t.conj()) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            raw = np.where(p > 0, ov / p, 0.0)
            post = np.where(p_photon > 0, ov / p_photon, 0.0)
        return np.minimum(raw, 1.0), np.minimum(post, 1.0)


def _chunk_fidelities(args) -> tuple:
    """Fidelities for samples [lo, hi) at every n = 1..n_max; arrays of shape (n_max, hi - lo)."""
    lo, hi, n_max, dist, seed, sign = args
    u = np.stack([sample_uniforms(seed, k, n_max - 1) for k in range(lo, hi)]) if n_max > 1 else None
    batch = _Batch(hi - lo)
    raw = np.empty((n_max, hi - lo))
    post = np.empty((n_max, hi - lo))
    raw[0], post[0] = batch.fidelities(ghz_state(1, sign))
    for j in range(n_max - 1):
        A, B = dist.amplitudes(u[:, j])
        batch.recycle_and_generate(A, B)
        raw[j + 1], post[j + 1] = batch.fidelities(ghz_state(j + 2, sign))
    return raw, post


def fidelity_samples(n_max: int, dist: ErrorDistribution, samples: int, seed: int, sign: int = 1,
                     chunk: int = DEFAULT_CHUNK, executor: Executor | None = None) -> tuple:
    """Per-sample GHZ fidelities, (raw, postselected) arrays of shape (n_max, samples).

    Row n - 1 holds sample k's fidelity at n qubits; it equals
    fidelity_sample(n, dist, seed, index=k) because the draws are prefixes.
    """
    if n_max < 1 or samples < 1:
        raise ConfigError("n_max and samples must be >= 1")
    jobs = [(lo, min(lo + chunk, samples), n_max, dist, seed, sign) for lo in range(0, samples, chunk)]
    parts = list(executor.map(_chunk_fidelities, jobs)) if executor else [_chunk_fidelities(j) for j in jobs]
    raw = np.concatenate([p[0] for p in parts], axis=1)
    post = np.concatenate([p[1] for p in parts], axis=1)
    return raw, post


@dataclass
class FidelityCurve:
    n: np.ndarray
    mean: np.ndarray
    std_error: np.ndarray
    samples: int
    dist: ErrorDistribution
    mode: str = "raw"
    seed: int = 0
    label: str = ""

    def at(self, n: int) -> tuple:
        k = int(np.searchsorted(self.n, n))
        return float(self.mean[k]), float(self.std_error[k])


def fidelity_curve(n_max: int, dist: ErrorDistribution, samples: int, seed: int, mode: str = "raw",
                   chunk: int = DEFAULT_CHUNK, executor: Executor | None = None,
                   label: str = "") -> FidelityCurve:
    """Monte Carlo mean and standard error of the GHZ+ fidelity for n = 1..n_max."""
    if samples < 100:
        raise ConfigError("fidelity curves need at least 100 samples")
    if mode not in ("raw", "postselected"):
        raise ConfigError(f"mode must be 'raw' or 'postselected', got {mode!r}")
    raw, post = fidelity_samples(n_max, dist, samples, seed, chunk=chunk, executor=executor)
    f = raw if mode == "raw" else post
    mean = f.mean(axis=1)
    se = f.std(axis=1, ddof=1) / math.sqrt(samples)
    return FidelityCurve(np.arange(1, n_max + 1), mean, se, samples, dist, mode, seed, label)


def write_curve_csv(curve: FidelityCurve, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["n", "mean_fidelity", "std_error", "samples"])
        for n, m, s in zip(curve.n, curve.mean, curve.std_error):
            writer.writerow([int(n), repr(float(m)), repr(float(s)), curve.samples])


def read_curve_csv(path) -> tuple:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0].astype(int), data[:, 1], data[:, 2]


# ---------------------------------------------------------------------------
# absorption distortion
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DistortionResult:
    state: NQubitState
    fidelity: float


def absorption_distortion(state: NQubitState, kappa0: float, kappa1: float, T: float) -> DistortionResult:
    """q_x -> q_x exp(-(kappa1 - kappa0) T n1(x)), renormalized."""
    if T <= 0:
        raise ConfigError("T must be > 0")
    lam = (kappa1 - kappa0) * T
    src = state.normalized()
    out = {x: q * math.exp(-lam * x.count("1")) for x, q in src.amplitudes.items()}
    distorted = NQubitState(out, state.n).normalized()
    return DistortionResult(distorted, src.fidelity(distorted))


# ---------------------------------------------------------------------------
# feasibility
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FeasibilityReport:
    gamma_eff: float          # Gamma Omega_peak^2 / (4 delta^2), rad/s
    gamma_eff_bound: float    # same with Omega -> max(Omega_peak, g)
    p_sp: float               # int Gamma Omega(t)^2 / (4 delta^2) dt over the window
    p_sp_bound: float         # same with Omega(t) -> max(Omega(t), g)
    n_max: float
    cycle_time: float
    cycle_rate: float         # cycles per second

    def to_dict(self) -> dict:
        return {k: float(getattr(self, k)) for k in self.__dataclass_fields__}


def feasibility(params: BranchParams, pulse: ControlPulse, rel_intensity_fluct: float,
                duration: float, recycle_overhead: float | None = None) -> FeasibilityReport:
    """Spontaneous-emission, qubit-count and repetition-rate estimates.

    ``recycle_overhead`` (default 4 T) covers recycling and reinitialization.
    """
    if rel_intensity_fluct <= 0 or duration <= 0:
        raise ConfigError("relative intensity fluctuation and duration must be > 0")
    overhead = 4 * duration if recycle_overhead is None else recycle_overhead
    if overhead < 0:
        raise ConfigError("recycle overhead must be >= 0")
    gamma, delta, g = params.gamma_sp, params.delta, params.g
    peak = pulse.shape.max_amplitude
    scale = gamma / (4 * delta**2)
    breaks = [b for b in pulse.shape.breakpoints() if 0 < b < duration]
    if isinstance(pulse.shape, Gaussian):
        breaks.append(pulse.shape.center)
    pts = sorted(set(b for b in breaks if 0 < b < duration)) or None

    def area(f):
        val, _ = integrate.quad(f, 0, duration, points=pts, limit=400, epsabs=0, epsrel=1e-10)
        return val

    p_sp = scale * area(lambda t: float(pulse.amplitude(t)) ** 2)
    p_sp_bound = scale * area(lambda t: max(float(pulse.amplitude(t)), g) ** 2)
    cycle = duration + overhead
    return FeasibilityReport(scale * peak**2, scale * max(peak, g) ** 2, p_sp, p_sp_bound,
                             1.0 / rel_intensity_fluct, cycle, 1.0 / cycle)
