"""Entangled photon trains from the sequence engine.

GHZ-type states come straight out of the protocol; other targets need the
mixing pulses, found by a multi-start Nelder-Mead search.  A Haar-random
three-qubit target needs 14 real parameters while the protocol has 10, so
the best fidelity stays below one.
"""

import numpy as np

from photontrain.sequence import (build_mes, engineer_state, format_state, mes_state, parameter_budget,
                                  random_state)

print("(|0110> - |1001>)/sqrt 2 from bit flips and a symmetric measurement:")
print(format_state(build_mes(4, -1, "0110"), digits=6))

target = mes_state("010", 1)
res = engineer_state(target, starts=8, seed=7)
print(f"\nsearch for (|010> + |101>)/sqrt 2: fidelity {res.fidelity:.12f} after {res.evaluations} evaluations")

for n in (1, 2, 3):
    b = parameter_budget(n)
    res = engineer_state(random_state(n, np.random.default_rng(1)), starts=10, seed=0)
    print(f"random {n}-qubit target: pulse parameters {b.free_params}, state parameters {b.state_dim_params}, "
          f"best fidelity {res.fidelity:.4f}")
