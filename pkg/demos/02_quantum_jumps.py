"""
Quantum jumps: one trajectory localizes, the ensemble does not
==============================================================

A single quantum-jump trajectory started in a coherent state quickly
collapses onto a number state and then hops between neighbouring number
states. Averaging many such trajectories gives back the master-equation
density matrix.
"""

import math

import numpy as np

from cavity_unravel import ReservoirParams, evolve_master, from_pure, make_coherent, run_mc_trajectory
from cavity_unravel.lindblad import trace_distance
from cavity_unravel.mcwf import ensemble_mean_density

params = ReservoirParams(gamma=1.0, nbar=3.0)
dim = 60
psi0 = make_coherent(math.sqrt(3), dim)

# --- One trajectory ---
rec = run_mc_trajectory(psi0, params, horizon=20.0, dt=1e-4, sample_every=1000, seed=1)
obs = rec.observables
print(" t     <n>      Q2 (number variance)")
for t, n, q2 in list(zip(rec.t, obs["n_mean"], obs["q2"]))[::10]:
    print(f"{t:4.1f}  {n:7.4f}  {q2:.2e}")
ups = sum(e.kind == "up" for e in rec.events)
print(f"{len(rec.events)} jumps ({ups} up, {len(rec.events) - ups} down)")

# --- Same seed, same trajectory ---
again = run_mc_trajectory(psi0, params, horizon=20.0, dt=1e-4, sample_every=1000, seed=1)
print("replay identical:", np.array_equal(rec.states, again.states))

# --- Ensemble against the master equation ---
small = ReservoirParams(gamma=1.0, nbar=0.5)
psi0 = make_coherent(math.sqrt(3), 30)
ens = ensemble_mean_density(psi0, small, horizon=2.0, dt=5e-4, M=1000, seed0=0, sample_every=1000)
ref = evolve_master(from_pure(psi0), small, dt=1e-3, steps=2000, sample_every=500)
print("trace distance, 1000 trajectories vs master equation:",
      [round(trace_distance(a, b), 4) for a, b in zip(ens, ref)])
