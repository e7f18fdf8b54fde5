"""
Which states do the trajectories drift towards?
===============================================

The number variance ``Q2`` of a quantum-jump trajectory can only shrink on
average: jumps push each member towards a number state. At zero temperature
the same jumps also shrink ``Q1 = <n> - |<a>|^2`` on average, so a member that
starts as a superposition of number states drifts towards a coherent state.
Each check below compares a finite-difference ensemble drift with the
analytic rate averaged over the same members.
"""

import math

import numpy as np

from cavity_unravel import FieldState, ReservoirParams, make_coherent, mcwf
from cavity_unravel.analysis import coherent_drift_check, localization_drift_check

h = 0.025


def report(label, d):
    print(f"{label:>6}  {d.empirical:+.4f} +- {d.stderr:.4f}   {d.analytic:+.4f}   "
          f"nonpositive {d.nonpositive()}  agrees {d.agrees()}")


# --- Jumps localize in photon number ---
params = ReservoirParams(gamma=1.0, nbar=0.5)
t, states, ok = mcwf.ensemble_states(make_coherent(math.sqrt(3), 40), params, horizon=1.0,
                                     dt=1e-4, M=1000, seed0=0, sample_every=250)
print("quantum jumps, nbar = 0.5: dQ2/dt")
print("     t  ensemble             analytic")
for at in (0.1, 0.25, 0.5, 0.75):
    k = int(round(at / h))
    report(f"{at:.2f}", localization_drift_check(states[ok, k - 1:k + 2], params, h))

# --- At zero temperature jumps also make states coherent ---
cold = ReservoirParams(gamma=1.0, nbar=0.0)
c = np.zeros(30, complex)
c[0] = c[3] = 1 / math.sqrt(2)
t, states, ok = mcwf.ensemble_states(FieldState(c), cold, horizon=1.0, dt=1e-4, M=1000,
                                     seed0=0, sample_every=250)
print("\nquantum jumps, nbar = 0, start (|0> + |3>)/sqrt2: dQ1/dt")
print("     t  ensemble             analytic")
for at in (0.1, 0.25, 0.5, 0.75):
    k = int(round(at / h))
    report(f"{at:.2f}", coherent_drift_check(states[ok, k - 1:k + 2], cold, h))
