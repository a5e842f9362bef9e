"""Regenerate the scenario documents in this directory.

    python3 configs/generate.py

Peak amplitudes are solved for a target mu(T), so the documents carry plain
numbers and stay readable without running anything.
"""

import json
import math
from pathlib import Path

from photontrain.control import (
    BranchParams,
    ControlPulse,
    GenerationSequence,
    Gaussian,
    RaisedCosineWindow,
    Recycle,
    Schedule,
    ConstantWindow,
    gaussian_sequence,
    off_pulse,
    reference_parameters,
    peak_for_mu,
    schedule_to_dict,
)

HERE = Path(__file__).parent
P = reference_parameters()
K = P.kappa_c


def raised_cosine_sequence(duration, mu, start=0.0):
    make = lambda peak: RaisedCosineWindow(peak, 0.0, duration)
    peak = peak_for_mu(make, P, duration, mu)
    return GenerationSequence(start, duration, (ControlPulse(make(peak)), off_pulse()))


def doc(schedule, **sections):
    d = schedule_to_dict(schedule, P)
    d.update(sections)
    return d


def dump(name, d):
    (HERE / name).write_text(json.dumps(d, indent=2, sort_keys=True) + "\n")


def main():
    # literal peak field of 55e6 rad/s, Gaussian over ten cavity lifetimes
    T = 10 / K
    literal = GenerationSequence(0.0, T, (ControlPulse(Gaussian(55e6, T / 2, T / 12)), off_pulse()))
    dump("literal_field.json", doc(Schedule(events=(literal,)),
                                   feasibility={"rel_intensity_fluct": 1e-4}))

    # same couplings, 40 lifetimes, field raised until mu(T) = 5
    strong = gaussian_sequence(P, 40 / K, 5.0, branches=(0,))
    dump("envelope_gaussian.json", doc(Schedule(events=(strong,)), envelope={"method": "full_ode"}))

    # constant drive r = 0.1 kappa_c over fifty lifetimes
    omega = 0.1 * K * 2 * P.delta / P.g
    const = GenerationSequence(0.0, 50 / K, (ControlPulse(ConstantWindow(omega, 0.0, 50 / K)), off_pulse()))
    dump("envelope_constant.json", doc(Schedule(events=(const,)), envelope={"method": "full_ode"}))

    zero = GenerationSequence(0.0, T, (off_pulse(), off_pulse()))
    dump("envelope_zero.json", doc(Schedule(events=(zero,))))

    # Markov validation: Gaussian over 150 lifetimes on the full grid, and a
    # raised cosine that fits the N = 256 recurrence time
    long_gauss = gaussian_sequence(P, 150 / K, 5.0, branches=(0,))
    dump("markov_1024.json", doc(Schedule(events=(long_gauss,)),
                                 markov={"pairs": [[1024, 40.0], [512, 40.0]]}))
    dump("markov_256.json", doc(Schedule(events=(raised_cosine_sequence(38 / K, 5.0),)),
                                markov={"pairs": [[256, 40.0], [128, 40.0]]}))

    # two photons on the N = 256 grid: two raised-cosine windows of 19.5 lifetimes
    T2 = 19.5 / K
    s1 = raised_cosine_sequence(T2, 5.0)
    dump("factorization_256.json", doc(Schedule((1.0, 0.0), (s1, Recycle(), s1.shifted(T2))),
                                       factorization={"n_modes": 256, "width": 40.0}))
    dump("factorization_overlap.json", doc(Schedule((1.0, 0.0), (s1, Recycle(), s1.shifted(T2 / 4))),
                                           factorization={"n_modes": 256, "width": 40.0,
                                                          "allow_overlap": True}))
    T3 = 78 / K
    g1 = gaussian_sequence(P, T3, 5.0, branches=(0,))
    dump("factorization_1024.json", doc(Schedule((1.0, 0.0), (g1, Recycle(), g1.shifted(T3))),
                                        factorization={"n_modes": 1024, "width": 40.0},
                                        limits={"max_two_photon_modes": 1024}))

    dump("fidelity_curves.json", {"seed": 2024, "fidelity": {"n_max": 10, "samples": 10000, "mode": "raw"}})
    r = 1 / math.sqrt(2)
    dump("engineer_ghz3.json", {"seed": 7, "engineer": {
        "target": {"n": 3, "amplitudes": {"000": [r, 0.0], "111": [r, 0.0]}}, "starts": 8}})
    dump("ghz3.json", {"ghz": {"n": 3, "sign": 1}})


if __name__ == "__main__":
    main()
