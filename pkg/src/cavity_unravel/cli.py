"""Command-line experiment runner.

Subcommands ``run``, ``qgrid`` and ``pmf`` execute a JSON configuration and
write data files plus ``manifest.json``; ``compare`` reads the density
outputs of two runs and reports per-time distances. Exit status is 0 on
success, 2 on invalid input and 3 when a simulation aborts numerically.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import shutil
import sys
import tempfile
import warnings

import numpy as np

from . import beam, hssde, mcwf
from .analysis import compare_pmf, grid_axes, husimi_q, time_avg_photon_pmf, write_pmf, write_qgrid
from .config import ConfigError, ExperimentConfig, apply_overrides, load_config
from .errors import AccuracyWarning, ContractError, DomainError, NumericalAbort
from .fock import bose_einstein_pmf
from .lindblad import DensitySeries, evolve_master, from_pure, thermal_state, trace_distance
from .records import trajectory_seed

EXIT_OK, EXIT_INVALID, EXIT_ABORT = 0, 2, 3


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _single_trajectory(cfg: ExperimentConfig):
    """Member 0 of the configured ensemble, as a full record."""
    psi0 = cfg.initial_field()
    seed = trajectory_seed(cfg.seed0, 0)
    if cfg.engine == "mcwf":
        rec = mcwf.run_mc_trajectory(psi0, cfg.params, cfg.horizon, cfg.dt, cfg.sample_every,
                                     seed, cfg.exact)
    elif cfg.engine == "hssde":
        rec = hssde.run_hssde_trajectory(psi0, cfg.params, cfg.horizon, cfg.dt, cfg.sample_every,
                                         seed, cfg.scheme, cfg.noise)
    else:
        rec = beam.run_beam_trajectory(psi0, _schedule(cfg), cfg.params.coupling_tau, cfg.horizon,
                                       seed, cfg.model, cfg.params.epsilon,
                                       cfg.dt * cfg.sample_every)
    if not rec.ok:
        raise NumericalAbort(f"trajectory aborted at t = {rec.abort_time:g}: {rec.abort_reason}")
    return rec


def _schedule(cfg):
    p = cfg.params
    return beam.BeamSchedule(p.r_a, p.r_b, poisson=cfg.poisson)


def _density(cfg: ExperimentConfig) -> DensitySeries:
    p = cfg.params
    if cfg.engine == "lindblad":
        rho0 = (thermal_state(p.nbar, cfg.dim) if cfg.initial_state["kind"] == "thermal"
                else from_pure(cfg.initial_field()))
        return evolve_master(rho0, p, cfg.dt, round(cfg.horizon / cfg.dt), cfg.sample_every)
    psi0 = cfg.initial_field()
    common = dict(M=cfg.trajectories, seed0=cfg.seed0, workers=cfg.workers)
    if cfg.engine == "mcwf":
        return mcwf.ensemble_mean_density(psi0, p, cfg.horizon, cfg.dt, sample_every=cfg.sample_every,
                                          exact=cfg.exact, **common)
    if cfg.engine == "hssde":
        return hssde.ensemble_mean_density(psi0, p, cfg.horizon, cfg.dt,
                                           sample_every=cfg.sample_every, scheme=cfg.scheme,
                                           noise=cfg.noise, **common)
    return beam.ensemble_mean_density(psi0, _schedule(cfg), p.coupling_tau, cfg.horizon,
                                      model=cfg.model, epsilon=p.epsilon,
                                      sample_dt=cfg.dt * cfg.sample_every, **common)


def _produce_run(cfg, stage):
    if cfg.stochastic and cfg.outputs["trajectory"]:
        rec = _single_trajectory(cfg)
        rec.to_csv(os.path.join(stage, "trajectory.csv"))
        rec.to_json(os.path.join(stage, "trajectory.json"))
    if cfg.outputs["density"] or not cfg.stochastic:
        series = _density(cfg)
        series.to_json(os.path.join(stage, "density.json"))
        series.to_csv(os.path.join(stage, "density.csv"))


def _produce_qgrid(cfg, stage):
    if not cfg.stochastic:
        raise ConfigError("engine", "qgrid needs a pure-state trajectory engine")
    rec = _single_trajectory(cfg)
    axes = grid_axes(cfg.outputs["qgrid_extent"], cfg.outputs["qgrid_points"])
    for k, t in enumerate(cfg.outputs["qgrid_times"]):
        i = int(np.argmin(np.abs(rec.t - t)))
        grid = husimi_q(rec.snapshot(i), *axes)
        base = os.path.join(stage, f"qgrid_{k:03d}")
        write_qgrid(grid, base + ".csv", base + ".json", rec.t[i], rec.engine, rec.seed)


def _produce_pmf(cfg, stage):
    if not cfg.stochastic:
        raise ConfigError("engine", "pmf needs a pure-state trajectory engine")
    burn_in = cfg.outputs["burn_in"]
    if cfg.horizon - burn_in < 100.0 / cfg.params.gamma:
        raise ConfigError("outputs.burn_in", "horizon - burn_in must be at least 100/gamma")
    rec = _single_trajectory(cfg)
    pmf = time_avg_photon_pmf(rec, burn_in)
    write_pmf(pmf, cfg.params.nbar, os.path.join(stage, "pmf.csv"))
    tv = compare_pmf(pmf, bose_einstein_pmf(cfg.params.nbar, np.arange(pmf.shape[0])))
    with open(os.path.join(stage, "pmf.json"), "w") as f:
        json.dump({"engine": rec.engine, "seed": rec.seed, "burn_in": burn_in,
                   "nbar": cfg.params.nbar, "tv_to_bose_einstein": tv}, f, sort_keys=True)


def _write_outputs(produce, cfg, config_bytes, out, no_clobber, command):
    """Build every file in a staging directory, then publish them with a manifest."""
    if no_clobber and os.path.exists(out) and os.listdir(out):
        raise ConfigError("--out", f"{out} is not empty and --no-clobber is set")
    with tempfile.TemporaryDirectory() as stage:
        produce(cfg, stage)
        names = sorted(os.listdir(stage))
        manifest = {
            "command": command,
            "config_sha256": hashlib.sha256(config_bytes).hexdigest(),
            "effective": {"engine": cfg.engine, "seed0": cfg.seed0},
            "files": [{"path": n, "sha256": _sha256(os.path.join(stage, n)),
                       "bytes": os.path.getsize(os.path.join(stage, n))} for n in names],
        }
        with open(os.path.join(stage, "manifest.json"), "w") as f:
            json.dump(manifest, f, indent=1, sort_keys=True)
        os.makedirs(out, exist_ok=True)
        for n in names + ["manifest.json"]:
            shutil.copyfile(os.path.join(stage, n), os.path.join(out, n))
    return manifest


def _load(args) -> tuple[ExperimentConfig, bytes]:
    cfg, data = load_config(args.config)
    return apply_overrides(cfg, args.engine, args.seed, args.workers), data


def _series(path) -> DensitySeries:
    f = os.path.join(path, "density.json") if os.path.isdir(path) else path
    if not os.path.exists(f):
        raise DomainError(f"no density output at {f}")
    return DensitySeries.from_json(f)


def compare(path_a, path_b, metric="trace", tolerance=None) -> dict:
    """Per-time distance between the density outputs of two runs."""
    a, b = _series(path_a), _series(path_b)
    if a.t.shape != b.t.shape or np.max(np.abs(a.t - b.t)) > 1e-9:
        raise DomainError("time grids differ")
    if a.dim != b.dim:
        raise DomainError(f"dimensions differ: {a.dim} vs {b.dim}")
    if metric == "trace":
        values = [trace_distance(x, y) for x, y in zip(a.rho, b.rho)]
        report = {"values": values}
    elif metric == "tv":
        pa = np.real(np.diagonal(a.rho, axis1=1, axis2=2))
        pb = np.real(np.diagonal(b.rho, axis1=1, axis2=2))
        values = [compare_pmf(x, y) for x, y in zip(pa, pb)]
        report = {"values": values}
    elif metric == "moments":
        oa, ob = a.observables(), b.observables()
        gaps = {k: np.abs(oa[k] - ob[k]).tolist() for k in ("n_mean", "var_x1", "var_x2")}
        values = np.max(np.array(list(gaps.values())), axis=0).tolist()
        report = {"values": values, "gaps": gaps}
    else:
        raise DomainError(f"metric must be 'trace', 'tv' or 'moments', got {metric!r}")
    report.update(metric=metric, t=a.t.tolist(), max=float(max(values)), tolerance=tolerance)
    report["pass"] = None if tolerance is None else bool(report["max"] <= tolerance)
    return report


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON experiment file")
    common.add_argument("--seed", type=int, help="override seed0")
    common.add_argument("--out", required=True, help="output directory")
    common.add_argument("--workers", type=int, help="worker processes for ensembles")
    common.add_argument("--engine", help="override the configured engine")
    common.add_argument("--no-clobber", action="store_true",
                        help="refuse to write into a non-empty output directory")

    p = argparse.ArgumentParser(prog="cavity-unravel", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="simulate and write trajectory/density files")
    sub.add_parser("qgrid", parents=[common], help="write Husimi grids of one trajectory")
    sub.add_parser("pmf", parents=[common], help="write the time-averaged photon distribution")
    c = sub.add_parser("compare", help="distance between the density outputs of two runs")
    c.add_argument("a")
    c.add_argument("b")
    c.add_argument("--metric", default="trace", choices=("trace", "tv", "moments"))
    c.add_argument("--tolerance", type=float)
    c.add_argument("--out", help="directory for report.json (default: print)")
    return p


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_INVALID
    try:
        if args.command == "compare":
            report = compare(args.a, args.b, args.metric, args.tolerance)
            text = json.dumps(report, indent=1, sort_keys=True)
            if args.out:
                os.makedirs(args.out, exist_ok=True)
                with open(os.path.join(args.out, "report.json"), "w") as f:
                    f.write(text)
            else:
                print(text)
            return EXIT_OK if report["pass"] in (None, True) else 1
        cfg, data = _load(args)
        produce = {"run": _produce_run, "qgrid": _produce_qgrid, "pmf": _produce_pmf}[args.command]
        with warnings.catch_warnings():
            warnings.simplefilter("always", AccuracyWarning)
            warnings.showwarning = lambda m, *a, **k: print(f"warning: {m}", file=sys.stderr)
            _write_outputs(produce, cfg, data, args.out, args.no_clobber, args.command)
    except (ConfigError, DomainError, ContractError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalAbort as e:
        print(f"numerical abort: {e}", file=sys.stderr)
        return EXIT_ABORT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
