"""
OTOC sums and Haar moments
==========================

Averaging out-of-time-order correlators over all Pauli operators reproduces
the frame potential exactly.  Haar-random unitaries also give simple closed
forms for second moments of matrix elements.
"""

from designham_sim.propagate import PauliString
from designham_sim.randomness import (
    frame_potential_exact,
    haar_ensemble,
    haar_monomial_check,
    otoc_frame_potential,
)

for n, k in ((1, 1), (2, 1), (1, 2)):
    ens = haar_ensemble(n, 10, 100 + n)
    print(f"n={n} k={k}: OTOC sum {otoc_frame_potential(ens, k):.12f}, "
          f"frame potential {frame_potential_exact(ens, k):.12f}")

value = haar_monomial_check(4, PauliString.parse("Z1", 4), 10_000, 1)
print(f"E|<0|U Z1 U^+|1>|^2 over 10^4 Haar samples: {value:.6f} (1/256 = {1 / 256:.6f})")
