"""
Layered design propagators
==========================

The design Hamiltonian alternates Z-type evolution with Hadamard-conjugated
evolution.  Its propagator is a list of diagonal phase layers and global
Hadamard layers, applied with fast Walsh-Hadamard butterflies, so a 12-qubit
propagator never needs a 4096 x 4096 matrix.
"""

import time

import numpy as np

from designham_sim.designham import design_timeline, sample_lambda
from designham_sim.propagate import design_propagator, propagator_at, trace_overlap
from designham_sim.spinsys import builtin_12spin

system, slots = builtin_12spin()
timeline = design_timeline(sample_lambda(7, 8, 4, 0.030, slots), system)

for t in (0.010, 0.020, 0.030, 0.060):
    ham, basis = timeline.hamiltonian_at(t)
    print(f"t = {t * 1e3:4.0f} ms -> half-period {timeline.halfperiod_index(t)}, basis {basis}")

# %%
U = design_propagator(timeline, 4)
print("layers:", [type(layer).__name__ for layer in U.layers])

rng = np.random.default_rng(0)
v = rng.normal(size=4096) + 1j * rng.normal(size=4096)
start = time.perf_counter()
w = U.apply(v)
print(f"|Uv|/|v| = {np.linalg.norm(w) / np.linalg.norm(v):.15f} "
      f"({(time.perf_counter() - start) * 1e3:.1f} ms)")

# %%
# Hilbert-Schmidt overlaps stream basis columns through both propagators.
V = propagator_at(timeline, 0.045)
start = time.perf_counter()
print(f"|Tr(U V^+)| = {abs(trace_overlap(U, V)):.3f} of d = 4096 "
      f"({time.perf_counter() - start:.1f} s)")
