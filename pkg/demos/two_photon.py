"""Two photons from back-to-back windows factorize; overlapping windows do not.

The two-excitation sector keeps every |f, 2 bosons> amplitude on 64 modes over
10 kappa_c.  The second window starts either right after the first (lag T) or
while the first is still emitting (lag T/4, first window cut short).
"""

from photontrain.control import ControlPulse, GenerationSequence, RaisedCosineWindow, off_pulse, reference_parameters, peak_for_mu
from photontrain.reservoir import (ModeGrid, extract_exact_envelope, factorization_error, integrate_single,
                                   integrate_two_photon, two_photon_schedule)

P = reference_parameters()
K = P.kappa_c
T = 19.5 / K
make = lambda peak: RaisedCosineWindow(peak, 0.0, T)
s1 = GenerationSequence(0.0, T, (ControlPulse(make(peak_for_mu(make, P, T, 5.0))), off_pulse()))
grid = ModeGrid.relative(64, 10, K)
G = extract_exact_envelope(integrate_single(s1, P, grid).final, grid, 0.0, T)

for frac in (1.0, 0.5, 0.25):
    s2 = s1.shifted(frac * T)
    tp = integrate_two_photon(two_photon_schedule(s1, s2), P, grid, allow_overlap=frac < 1)
    err = factorization_error(tp, G, G, 0.0, s2.start)
    print(f"lag = {frac:4.2f} T   factorization error = {err:.3e}   "
          f"no photon from window 1 = {tp.discarded_weight:.2e}   norm drift = {tp.max_norm_drift:.1e}")
