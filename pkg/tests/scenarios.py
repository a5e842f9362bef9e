"""Reference scenarios shared by several test modules, built once per session."""

import functools
import math

import numpy as np

from photontrain.control import (
    ControlPulse,
    GenerationSequence,
    RaisedCosineWindow,
    gaussian_sequence,
    off_pulse,
    reference_parameters,
    peak_for_mu,
)
from photontrain import reservoir

P = reference_parameters()
K = P.kappa_c


def raised_cosine(duration, mu, start=0.0, params=P):
    make = lambda peak: RaisedCosineWindow(peak, 0.0, duration)
    peak = peak_for_mu(make, params, duration, mu)
    return GenerationSequence(start, duration, (ControlPulse(make(peak)), off_pulse()))


# Markov validation on the full grid: Gaussian over 150 lifetimes fits the
# N = 1024 revival time (161 lifetimes at W = 40 kappa_c).
def full_grid_sequence():
    return gaussian_sequence(P, 150 / K, 5.0, branches=(0,))


# desk-scale grid: raised cosine inside the N = 256 revival time (40 lifetimes)
def desk_sequence():
    return raised_cosine(38 / K, 5.0)


@functools.lru_cache(maxsize=None)
def markov_comparison(n_modes: int, width: float, which: str):
    seq = full_grid_sequence() if which == "full" else desk_sequence()
    grid = reservoir.ModeGrid.relative(n_modes, width, K)
    return reservoir.markov_validation(seq, P, grid, allow_recurrence=True)


TWO_PHOTON_T = 19.5 / K


@functools.lru_cache(maxsize=None)
def two_photon(n_modes: int, width: float, lag_fraction: float = 1.0):
    """Two identical raised-cosine windows, the second starting lag_fraction*T later."""
    s1 = raised_cosine(TWO_PHOTON_T, 5.0)
    s2 = s1.shifted(lag_fraction * TWO_PHOTON_T)
    grid = reservoir.ModeGrid.relative(n_modes, width, K)
    tp = reservoir.integrate_two_photon(reservoir.two_photon_schedule(s1, s2), P, grid,
                                        allow_overlap=lag_fraction < 1)
    run = reservoir.integrate_single(s1, P, grid)
    G = reservoir.extract_exact_envelope(run.final, grid, 0.0, s1.duration)
    return tp, G, s2.start, run


# ---------------------------------------------------------------------------
# small scenario documents for the command-line tests
# ---------------------------------------------------------------------------


def _doc(events, initial=(1.0, 0.0), **sections):
    from photontrain.control import Schedule, schedule_to_dict

    d = schedule_to_dict(Schedule(initial, tuple(events)), P)
    d.update(sections)
    return d


def cli_documents() -> dict:
    """command -> small scenario document that runs in a few seconds."""
    from photontrain.control import Recycle

    s1 = raised_cosine(TWO_PHOTON_T, 5.0)
    s2 = s1.shifted(TWO_PHOTON_T)
    short = raised_cosine(TWO_PHOTON_T, 5.0)
    return {
        "envelope": _doc([short], envelope={"n_omega": 512, "half_width": 20.0}),
        "validate-markov": _doc([short], markov={"pairs": [[32, 10.0], [64, 20.0]]}),
        "factorization": _doc([s1, Recycle(), s2], factorization={"n_modes": 64, "width": 10.0}),
        "fidelity-sweep": {"seed": 5, "fidelity": {"n_max": 4, "samples": 300, "curves": [
            {"label": "a", "eps_m": 0.0125, "delta_m": 0.0},
            {"label": "e", "eps_m": 0.1, "delta_m": 0.0}]}},
        "engineer": {"seed": 3, "engineer": {"target": {"n": 2, "amplitudes": {
            "00": [0.6, 0.0], "11": [0.0, 0.8]}}, "starts": 3, "maxfev": 600}},
        "feasibility": _doc([short], feasibility={"rel_intensity_fluct": 1e-4}),
        "ghz": {"ghz": {"n": 4, "sign": -1, "pattern": "0110"}},
    }


@functools.lru_cache(maxsize=None)
def full_two_photon() -> float:
    """Factorization error on the N = 1024, W = 40 kappa_c grid (Gaussian windows of 78 lifetimes)."""
    s1 = gaussian_sequence(P, 78 / K, 5.0, branches=(0,))
    grid = reservoir.ModeGrid.relative(1024, 40.0, K)
    tp = reservoir.integrate_two_photon(reservoir.two_photon_schedule(s1, s1.shifted(s1.duration)), P, grid)
    G = reservoir.extract_exact_envelope(reservoir.integrate_single(s1, P, grid).final, grid, 0.0, s1.duration)
    return reservoir.factorization_error(tp, G, G, 0.0, s1.duration)
