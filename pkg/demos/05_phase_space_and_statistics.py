"""
Phase space and photon statistics
=================================

Husimi grids show where a trajectory's state lives in the complex plane.
A coherent state is a single blob that slides towards the origin as the
field decays, while a number state is a ring. Over long times one quantum-jump
trajectory visits the number states with Bose-Einstein weights.
"""

import json
import tempfile
from pathlib import Path

import numpy as np

from cavity_unravel import ReservoirParams, husimi_q, make_coherent, make_fock, run_mc_trajectory
from cavity_unravel.analysis import QGrid, compare_pmf, time_avg_photon_pmf
from cavity_unravel.cli import main
from cavity_unravel.fock import bose_einstein_pmf


def describe(grid):
    i, j = np.unravel_index(np.argmax(grid.values), grid.values.shape)
    peak = complex(grid.re_axis[i], grid.im_axis[j])
    return (f"peak Q = {grid.values.max():.3f} at {peak:.2f} (|alpha| {abs(peak):.2f}), "
            f"integral {grid.integral():.4f}")


# --- Two reference states ---
print("coherent alpha=2:", describe(husimi_q(make_coherent(2.0, 40))))
print("Fock |4>:        ", describe(husimi_q(make_fock(4, 40))))

# --- Long-run photon statistics of one trajectory ---
params = ReservoirParams(gamma=1.0, nbar=1.0)
rec = run_mc_trajectory(make_fock(1, 40), params, horizon=500.0, dt=4e-4, sample_every=25,
                        seed=0)
pmf = time_avg_photon_pmf(rec, burn_in=10.0)
be = bose_einstein_pmf(1.0, np.arange(40))
print("\n n   time average   Bose-Einstein")
for n in range(6):
    print(f"{n:2d}   {pmf[n]:.4f}         {be[n]:.4f}")
print(f"total-variation distance: {compare_pmf(pmf, be):.4f}")

# --- The same grids from the command line ---
config = Path(__file__).parent / "configs" / "fig5_qgrid.json"
with tempfile.TemporaryDirectory() as out:
    assert main(["qgrid", "--config", str(config), "--out", out]) == 0
    manifest = json.loads((Path(out) / "manifest.json").read_text())
    print(f"\nqgrid wrote {len(manifest['files'])} files")
    for f in manifest["files"]:
        if f["path"].endswith(".csv"):
            print(f"{f['path']:>22}  {describe(QGrid.from_csv(Path(out) / f['path']))}")
