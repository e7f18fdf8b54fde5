"""
Thermal damping of a cavity mode: the density-matrix reference
===============================================================

The master-equation integrator is the yardstick every stochastic engine is
measured against. Here it relaxes a number state towards the thermal state
and we read off the mean photon number.
"""

import numpy as np

from cavity_unravel import ReservoirParams, evolve_master, from_pure, make_fock, thermal_state
from cavity_unravel.lindblad import density_observables, trace_distance

params = ReservoirParams(gamma=1.0, nbar=2.0)
dim = 60  # steps below keep dt * gamma (2 nbar + 1) * dim under 0.1

# --- Relaxation from |3> ---
rho0 = from_pure(make_fock(3, dim))
out = evolve_master(rho0, params, dt=2.5e-4, steps=20000, sample_every=2000)
n = density_observables(out.rho)["n_mean"]

print(" t     <n>       nbar + (n0 - nbar) e^-t")
for t, value in zip(out.t, n):
    print(f"{t:4.1f}  {value:.8f}  {2 + np.exp(-t):.8f}")

# --- The thermal state does not move ---
thermal = thermal_state(2.0, dim)
still = evolve_master(thermal, params, dt=2.5e-4, steps=8000, sample_every=8000)
print("\ndrift of the thermal state after t = 2:", trace_distance(still[-1], thermal))

# --- Distance to equilibrium along the run ---
print("trace distance to thermal:", [round(trace_distance(r, thermal), 4) for r in out])
