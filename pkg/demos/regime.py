"""Why the demos raise the drive field.

With g = 55, delta = 1500, kappa_c = 50 (x 1e6 rad/s) and a peak field of
55e6 rad/s the Raman rate r = g Omega / (2 delta) stays near 0.02 kappa_c, so
almost nothing is emitted in ten cavity lifetimes.  Solving for the peak that
gives mu(T) = 5 shows the price: the field must exceed the detuning and the
spontaneous-emission probability per window becomes large.  Both numbers come
from the same field integral, so p_sp = Gamma kappa_c mu(T) / g^2 regardless
of the pulse shape.
"""

from photontrain.control import ControlPulse, Gaussian, GenerationSequence, accumulated_phases, off_pulse, reference_parameters, peak_for_mu
from photontrain.decoherence import feasibility
from photontrain.markov import emission_probability, solve_amplitudes

P = reference_parameters()
K = P.kappa_c

for T_kappa in (10, 40, 150):
    T = T_kappa / K
    make = lambda peak, T=T: Gaussian(peak, T / 2, T / 12)
    for label, peak in (("literal", 55e6), ("mu(T)=5", peak_for_mu(make, P, T, 5.0))):
        seq = GenerationSequence(0.0, T, (ControlPulse(make(peak)), off_pulse()))
        mu = float(accumulated_phases(seq.pulses[0], P, T).mu)
        emitted = emission_probability(solve_amplitudes(seq, P))
        rep = feasibility(P, seq.pulses[0], 1e-4, T)
        print(f"T = {T_kappa:3d}/kappa_c  {label:8s}  Omega_peak/delta = {peak / P.delta:6.3f}  "
              f"mu(T) = {mu:9.3e}  emitted = {emitted:.4f}  p_sp = {rep.p_sp:.2e}")
