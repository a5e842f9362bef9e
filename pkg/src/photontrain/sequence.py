"""
Logical bookkeeping of photon trains emitted by a two-branch atom.

Each generation step maps the atom label alpha onto a new photon slot, so a
term (x, alpha) with slot string x becomes (x + str(alpha), alpha).  Between
steps the two |f_alpha> levels can be rotated by a mixing pulse, and a final
projective measurement of the atom leaves a pure n-qubit photon state.

States are immutable and kept as sparse dictionaries; without mixing pulses
the support never exceeds two terms, and each pulse can at most double it.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import Executor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .control import MixingPulse
from .exceptions import ConfigError

NORM_TOL = 1e-12


def _check_bits(s: str, n: int | None = None):
    if any(ch not in "01" for ch in s):
        raise ConfigError(f"bitstring {s!r} has characters outside {{0,1}}")
    if n is not None and len(s) != n:
        raise ConfigError(f"bitstring {s!r} does not have length {n}")


@dataclass(frozen=True)
class HybridState:
    """Photon slots (x) and atom label (alpha) -> amplitude."""

    terms: dict
    n_slots: int = 0

    def __post_init__(self):
        for (x, a) in self.terms:
            _check_bits(x, self.n_slots)
            if a not in (0, 1):
                raise ConfigError(f"atom label must be 0 or 1, got {a!r}")

    @classmethod
    def initial(cls, c0: complex = 1 / math.sqrt(2), c1: complex = 1 / math.sqrt(2)) -> "HybridState":
        norm = abs(c0) ** 2 + abs(c1) ** 2
        if abs(norm - 1) > 1e-9:
            raise ConfigError(f"|c0|^2+|c1|^2 must be 1 (got {norm:.12g})")
        return cls(_prune({("", 0): complex(c0), ("", 1): complex(c1)}), 0)

    def norm_sq(self) -> float:
        return float(sum(abs(v) ** 2 for v in self.terms.values()))

    def amplitude(self, slots: str, label: int) -> complex:
        return self.terms.get((slots, label), 0j)


@dataclass(frozen=True)
class NQubitState:
    """Bitstring x -> q_x; the first character is the first photon."""

    amplitudes: dict
    n: int

    def __post_init__(self):
        for x in self.amplitudes:
            _check_bits(x, self.n)

    @classmethod
    def from_vector(cls, vec, n: int) -> "NQubitState":
        vec = np.asarray(vec, dtype=complex)
        if vec.shape != (2**n,):
            raise ConfigError(f"state vector must have length 2^{n}")
        return cls(_prune({format(i, f"0{n}b"): complex(v) for i, v in enumerate(vec)}), n)

    def vector(self) -> np.ndarray:
        out = np.zeros(2**self.n, complex)
        for x, q in self.amplitudes.items():
            out[int(x, 2) if x else 0] = q
        return out

    def norm_sq(self) -> float:
        return float(sum(abs(v) ** 2 for v in self.amplitudes.values()))

    def normalized(self) -> "NQubitState":
        norm = math.sqrt(self.norm_sq())
        if norm == 0:
            raise ConfigError("cannot normalize the zero state")
        return NQubitState({x: q / norm for x, q in self.amplitudes.items()}, self.n)

    def overlap(self, other: "NQubitState") -> complex:
        """<self|other>."""
        return complex(sum(q.conjugate() * other.amplitudes.get(x, 0j) for x, q in self.amplitudes.items()))

    def fidelity(self, other: "NQubitState") -> float:
        return abs(self.overlap(other)) ** 2


def _prune(terms: dict) -> dict:
    return {k: v for k, v in terms.items() if v != 0}


def random_state(n: int, rng: np.random.Generator) -> NQubitState:
    """Haar-random n-qubit state."""
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return NQubitState.from_vector(v / np.linalg.norm(v), n)


# ---------------------------------------------------------------------------
# protocol steps
# ---------------------------------------------------------------------------


def generation_step(state: HybridState) -> HybridState:
    """(x, alpha) -> (x + alpha, alpha): the new photon carries the atom label."""
    return HybridState({(x + str(a), a): v for (x, a), v in state.terms.items()}, state.n_slots + 1)


def apply_mixing(state: HybridState, pulse: MixingPulse) -> HybridState:
    U = pulse.matrix
    out: dict = {}
    for (x, a), v in state.terms.items():
        for b in (0, 1):
            out[(x, b)] = out.get((x, b), 0j) + U[b, a] * v
    return HybridState(_prune(out), state.n_slots)


@dataclass(frozen=True)
class Outcome:
    label: int
    probability: float
    state: NQubitState | None   # None marks an outcome that cannot occur


def measure_atom(state: HybridState, basis=(1 / math.sqrt(2), 1 / math.sqrt(2))) -> list:
    """Project the atom onto m = m0|f0> + m1|f1> (outcome 0) and its complement.

    The complement is conj(m1)|f0> - conj(m0)|f1>, so the symmetric basis gives
    c0|0..> + c1|1..> for outcome 0 and c0|0..> - c1|1..> for outcome 1.
    """
    m0, m1 = complex(basis[0]), complex(basis[1])
    norm = abs(m0) ** 2 + abs(m1) ** 2
    if abs(norm - 1) > 1e-9:
        raise ConfigError(f"measurement basis must be normalized (got {norm:.12g})")
    vectors = ((m0, m1), (m1.conjugate(), -m0.conjugate()))
    total = state.norm_sq()
    outcomes = []
    for label, (v0, v1) in enumerate(vectors):
        amp: dict = {}
        for (x, a), c in state.terms.items():
            w = (v0 if a == 0 else v1).conjugate()
            amp[x] = amp.get(x, 0j) + w * c
        amp = _prune(amp)
        p = sum(abs(c) ** 2 for c in amp.values()) / total
        if p <= NORM_TOL:
            outcomes.append(Outcome(label, 0.0, None))
        else:
            outcomes.append(Outcome(label, float(p), NQubitState(amp, state.n_slots).normalized()))
    return outcomes


def mes_state(pattern: str, sign: int = 1) -> NQubitState:
    """(|s> + sign |not s>)/sqrt(2) written down directly."""
    _check_bits(pattern)
    if sign not in (1, -1):
        raise ConfigError("sign must be +1 or -1")
    flipped = "".join("1" if b == "0" else "0" for b in pattern)
    r = 1 / math.sqrt(2)
    return NQubitState({pattern: r, flipped: sign * r}, len(pattern))


def ghz_state(n: int, sign: int = 1) -> NQubitState:
    return mes_state("0" * n, sign)


BIT_FLIP = MixingPulse(0j, 1 + 0j)


def build_mes(n: int, sign: int = 1, pattern: str | None = None) -> NQubitState:
    """Run the protocol that yields (|s> + sign|not s>)/sqrt(2).

    Start from c = (1, 1)/sqrt(2); before every step whose bit differs from the
    previous one a bit-flip pulse (d0, d1) = (0, 1) swaps the atom labels.  The
    atom is then measured in (|f0> +- |f1>)/sqrt(2) and the outcome with the
    requested relative sign is returned.
    """
    if n < 1:
        raise ConfigError("n must be >= 1")
    pattern = "0" * n if pattern is None else pattern
    _check_bits(pattern, n)
    if sign not in (1, -1):
        raise ConfigError("sign must be +1 or -1")
    # |s> + |not s> and |not s> + |s> are the same state
    s = pattern if pattern[0] == "0" else "".join("1" if b == "0" else "0" for b in pattern)
    state = HybridState.initial()
    prev = "0"
    for bit in s:
        if bit != prev:
            state = apply_mixing(state, BIT_FLIP)
        state = generation_step(state)
        prev = bit
    target = mes_state(s, sign)
    for out in measure_atom(state):
        if out.state is not None and abs(target.fidelity(out.state) - 1) < 1e-9:
            # fix the global phase so that |s> carries a positive amplitude
            q = out.state.amplitudes[pattern]
            phase = q.conjugate() / abs(q)
            return NQubitState({x: v * phase for x, v in out.state.amplitudes.items()}, n)
    raise AssertionError("protocol did not produce the requested MES")  # pragma: no cover


@dataclass(frozen=True)
class ParameterBudget:
    free_params: int
    state_dim_params: int

    @property
    def restricted(self) -> bool:
        """True when the pulse parameters cannot cover the state space."""
        return self.free_params < self.state_dim_params


def parameter_budget(n: int) -> ParameterBudget:
    if n < 1:
        raise ConfigError("n must be >= 1")
    return ParameterBudget(2 * n, 2 ** (n + 1) - 2)


# ---------------------------------------------------------------------------
# state engineering
# ---------------------------------------------------------------------------


def pulse_from_angles(a: float, b: float) -> MixingPulse:
    return MixingPulse(complex(math.cos(a)), complex(np.exp(1j * b) * math.sin(a)))


def _program_state(x: np.ndarray, n: int) -> tuple:
    """Dense pre-measurement amplitudes psi[slots, label] and the basis vector.

    Parameter layout: (a0, b0) initial state, (a_j, b_j) pulse after step j for
    j = 1..n, and (a_m, b_m) measurement basis; 2n + 4 reals in total.
    """
    c = np.array([math.cos(x[0]), np.exp(1j * x[1]) * math.sin(x[0])])
    psi = c[None, :]          # rows: slot strings in binary order
    for j in range(n):
        new = np.zeros((psi.shape[0] * 2, 2), complex)
        new[0::2, 0] = psi[:, 0]
        new[1::2, 1] = psi[:, 1]
        a, b = x[2 + 2 * j], x[3 + 2 * j]
        U = pulse_from_angles(a, b).matrix
        psi = new @ U.T
    m = np.array([math.cos(x[-2]), np.exp(1j * x[-1]) * math.sin(x[-2])])
    return psi, m


def _program_fidelities(x: np.ndarray, n: int, target: np.ndarray) -> tuple:
    psi, m = _program_state(x, n)
    comp = np.array([m[1].conjugate(), -m[0].conjugate()])
    fids = []
    for v in (m, comp):
        out = psi @ v.conjugate()
        p = np.vdot(out, out).real
        fids.append(0.0 if p < 1e-300 else min(1.0, abs(np.vdot(target, out)) ** 2 / p))
    return fids


@dataclass
class EngineeringResult:
    pulses: list
    initial: tuple
    basis: tuple
    fidelity: float
    outcome: int
    evaluations: int
    budget_exhausted: bool
    start_fidelities: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "fidelity": self.fidelity,
            "outcome": self.outcome,
            "initial": [[complex(c).real, complex(c).imag] for c in self.initial],
            "basis": [[complex(c).real, complex(c).imag] for c in self.basis],
            "pulses": [{"d0": [p.d0.real, p.d0.imag], "d1": [p.d1.real, p.d1.imag]} for p in self.pulses],
            "evaluations": self.evaluations,
            "budget_exhausted": self.budget_exhausted,
        }


def _one_start(args):
    x0, n, target, maxfev = args

    def cost(x):
        return 1.0 - max(_program_fidelities(x, n, target))

    res = minimize(cost, x0, method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-14, "maxfev": maxfev, "adaptive": True})
    return res.x, 1.0 - res.fun, res.nfev, res.nfev >= maxfev


def engineer_state(target: NQubitState, n: int | None = None, starts: int = 50, seed: int = 0,
                   maxfev: int | None = None, executor: Executor | None = None,
                   stop_fidelity: float = 1 - 1e-12) -> EngineeringResult:
    """Search mixing pulses, initial amplitudes and measurement basis for ``target``.

    Multi-start Nelder-Mead over 2n + 4 angles; each start draws its initial
    point from its own child of SeedSequence(seed).  No reachability guarantee:
    targets outside the protocol's restricted family end below fidelity 1.
    """
    n = target.n if n is None else n
    if n != target.n:
        raise ConfigError(f"target has {target.n} qubits, expected {n}")
    if starts < 1:
        raise ConfigError("starts must be >= 1")
    tvec = target.normalized().vector()
    dim = 2 * n + 4
    maxfev = maxfev or 400 * dim
    children = np.random.SeedSequence(seed).spawn(starts)
    x0s = [np.random.Generator(np.random.PCG64(c)).uniform(-math.pi, math.pi, dim) for c in children]
    # the first start is the plain protocol: symmetric state, no mixing, symmetric basis
    x0s[0] = np.zeros(dim)
    x0s[0][0] = x0s[0][-2] = math.pi / 4
    jobs = [(x0, n, tvec, maxfev) for x0 in x0s]
    if executor is not None:
        results = list(executor.map(_one_start, jobs))
    else:
        results = []
        for job in jobs:
            results.append(_one_start(job))
            if results[-1][1] >= stop_fidelity:
                break
    best = max(range(len(results)), key=lambda k: results[k][1])
    x, _, _, _ = results[best]
    fids = _program_fidelities(x, n, tvec)
    outcome = int(np.argmax(fids))
    pulses = [pulse_from_angles(x[2 + 2 * j], x[3 + 2 * j]) for j in range(n)]
    initial = (complex(math.cos(x[0])), complex(np.exp(1j * x[1]) * math.sin(x[0])))
    basis = (complex(math.cos(x[-2])), complex(np.exp(1j * x[-1]) * math.sin(x[-2])))
    return EngineeringResult(pulses, initial, basis, float(fids[outcome]), outcome,
                             int(sum(r[2] for r in results)), bool(results[best][3]),
                             [float(r[1]) for r in results])


def run_program(result: EngineeringResult, n: int) -> NQubitState:
    """Replay an engineered program through the sparse engine."""
    state = HybridState.initial(*result.initial)
    for p in result.pulses:
        state = apply_mixing(generation_step(state), p)
    out = measure_atom(state, result.basis)[result.outcome]
    if out.state is None:
        raise ConfigError("selected outcome has zero probability")
    return out.state


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def state_to_dict(state: NQubitState) -> dict:
    return {"n": state.n,
            "amplitudes": {x: [q.real, q.imag] for x, q in sorted(state.amplitudes.items())}}


def state_from_dict(d: dict) -> NQubitState:
    try:
        n = int(d["n"])
        amps = {x: complex(float(v[0]), float(v[1])) for x, v in d["amplitudes"].items()}
    except (KeyError, TypeError, IndexError, ValueError) as exc:
        raise ConfigError(f"malformed state document: {exc}") from None
    return NQubitState(_prune(amps), n)


def state_to_json(state: NQubitState) -> str:
    return json.dumps(state_to_dict(state), indent=2, sort_keys=True)


def format_state(state: NQubitState, digits: int = 12) -> str:
    """One line per nonzero amplitude in lexicographic bitstring order."""
    lines = []
    for x in sorted(state.amplitudes):
        q = state.amplitudes[x]
        lines.append(f"|{x}>  {q.real:+.{digits}f} {q.imag:+.{digits}f}j")
    return "\n".join(lines)
