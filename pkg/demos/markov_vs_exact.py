"""Markov envelope against the discretized reservoir.

A raised-cosine window of 19.5 cavity lifetimes, mu(T) = 5, compared with the
exact reservoir on grids of fixed mode spacing (revival after 20 lifetimes)
and growing bandwidth W.  The residual difference is the frequency shift left
by the truncated band, and it halves each time W doubles.
"""

import logging
import time

from photontrain.control import ControlPulse, GenerationSequence, RaisedCosineWindow, off_pulse, reference_parameters, peak_for_mu
from photontrain.reservoir import ModeGrid, markov_validation

# the coarse small-N grids are intentional here
logging.getLogger("photontrain").setLevel(logging.ERROR)

P = reference_parameters()
K = P.kappa_c

T = 19.5 / K
make = lambda peak: RaisedCosineWindow(peak, 0.0, T)
seq = GenerationSequence(0.0, T, (ControlPulse(make(peak_for_mu(make, P, T, 5.0))), off_pulse()))

print(" N    W/kappa   rel L2 error   exact emission   seconds")
for n, w in ((32, 10), (64, 20), (128, 40), (256, 80)):
    t = time.time()
    res = markov_validation(seq, P, ModeGrid.relative(n, w, K))
    print(f"{n:4d}  {w:6.0f}     {res.error:.3e}      {res.emission_exact:.6f}     {time.time() - t:5.1f}")
