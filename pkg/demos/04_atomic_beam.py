"""
An atomic beam as the reservoir
===============================

Atoms fly through the cavity one at a time and are measured on the way out.
With two-level atoms the averaged field obeys the same damping equation as a
thermal bath with ``gamma = (r_b - r_a) (lambda tau)^2`` and
``nbar = r_a / (r_b - r_a)``. With driven three-level atoms the number of
detected flips per window carries the quadrature ``<X1>`` of the field.
"""

import math

import numpy as np

from cavity_unravel import beam, evolve_master, from_pure, make_coherent, make_fock
from cavity_unravel.hssde import jump_count_moments
from cavity_unravel.lindblad import trace_distance

# --- Two-level atoms: the effective bath ---
schedule = beam.BeamSchedule(r_a=200.0, r_b=600.0)
lambda_tau = 0.05
params = beam.reservoir_params(schedule, lambda_tau)
print(f"effective gamma = {params.gamma:g}, nbar = {params.nbar:g}")

psi0 = make_fock(2, 30)
ens = beam.ensemble_mean_density(psi0, schedule, lambda_tau, horizon=2.0, M=2000, seed0=0,
                                 sample_dt=0.5)
ref = evolve_master(from_pure(psi0), params, dt=1e-3, steps=2000, sample_every=500)
print("trace distance, 2000 beam trajectories vs master equation:",
      [round(trace_distance(a, b), 4) for a, b in zip(ens, ref)])

# --- One trajectory, atom by atom ---
rec = beam.run_beam_trajectory(psi0, schedule, lambda_tau, horizon=2.0, seed=4, sample_dt=0.25)
flips = int(np.sum(rec.atoms["flipped"]))
print(f"{len(rec.atoms['prep'])} atoms, {flips} flipped; <n> along the run:",
      np.round(rec.observables["n_mean"], 3).tolist())

# --- Three-level atoms: flip counts follow the quadrature ---
schedule = beam.BeamSchedule(r_a=6400.0, r_b=19200.0)
g_tau, eps, window = 0.0125, 8.0, 0.02
params = beam.reservoir_params(schedule, g_tau, "three_level", eps)
rows = []
for alpha in (-1.0, 0.0, 1.0):
    got, want = [], []
    for seed in range(400):
        rec = beam.run_beam_trajectory(make_coherent(alpha, 30), schedule, g_tau, window,
                                       seed=seed, model="three_level", epsilon=eps,
                                       sample_dt=window)
        got.append(beam.flip_counts(rec, window)["ground_flips"][0])
        want.append(jump_count_moments(rec.snapshot(0), params, eps, window).mean1)
    se = np.std(got, ddof=1) / math.sqrt(len(got))
    rows.append((alpha, np.mean(got), se, np.mean(want)))

print("\nalpha   lower-level flips per window   predicted")
for alpha, mean, se, pred in rows:
    print(f"{alpha:+.1f}    {mean:7.2f} +- {se:.2f}                  {pred:7.2f}")
