"""Phase-space grids, long-run photon statistics and localization diagnostics."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .fock import FieldState, ReservoirParams, bose_einstein_pmf, moments, observables
from .records import TrajectoryRecord

DEFAULT_EXTENT = 6.0
DEFAULT_POINTS = 97
VACUUM_GUARD = 1e-12


@dataclass(frozen=True)
class QGrid:
    """Husimi function sampled at ``alpha = re_axis[i] + 1j * im_axis[j]``.

    ``values[i, j]`` holds ``|<alpha|psi>|^2 / pi``.
    """

    re_axis: np.ndarray
    im_axis: np.ndarray
    values: np.ndarray

    @property
    def cell_area(self) -> float:
        return float((self.re_axis[1] - self.re_axis[0]) * (self.im_axis[1] - self.im_axis[0]))

    def integral(self) -> float:
        return float(self.values.sum() * self.cell_area)

    def to_csv(self, path):
        """Axis rows first, then one row of values per point of ``re_axis``."""
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["re_axis"] + [repr(float(x)) for x in self.re_axis])
            w.writerow(["im_axis"] + [repr(float(x)) for x in self.im_axis])
            for row in self.values:
                w.writerow([repr(float(x)) for x in row])

    @classmethod
    def from_csv(cls, path) -> "QGrid":
        with open(path, newline="") as f:
            rows = list(csv.reader(f))
        re_axis = np.array(rows[0][1:], dtype=float)
        im_axis = np.array(rows[1][1:], dtype=float)
        return cls(re_axis, im_axis, np.array(rows[2:], dtype=float))


def grid_axes(extent=DEFAULT_EXTENT, points=DEFAULT_POINTS):
    axis = np.linspace(-extent, extent, points)
    return axis, axis.copy()


def husimi_q(state: FieldState, re_axis=None, im_axis=None) -> QGrid:
    """Husimi function of a pure state on a rectangular grid.

    The default grid is 97 x 97 points over ``[-6, 6]^2``. Overlaps use the
    exact coherent amplitudes rather than a renormalized truncation, so every
    value is at most ``1/pi``.
    """
    if re_axis is None or im_axis is None:
        re_axis, im_axis = grid_axes()
    re_axis = np.asarray(re_axis, dtype=float)
    im_axis = np.asarray(im_axis, dtype=float)
    alpha = re_axis[:, None] + 1j * im_axis[None, :]
    d = state.dim
    # <alpha|n> = exp(-|alpha|^2/2) conj(alpha)^n / sqrt(n!), built by recursion
    coef = np.empty(alpha.shape + (d,), dtype=np.complex128)
    coef[..., 0] = np.exp(-np.abs(alpha) ** 2 / 2)
    ac = np.conj(alpha)
    for n in range(1, d):
        coef[..., n] = coef[..., n - 1] * ac / math.sqrt(n)
    amp = coef @ state.amplitudes
    return QGrid(re_axis, im_axis, np.abs(amp) ** 2 / np.pi)


def write_qgrid(grid: QGrid, path_csv, path_json, t, engine, seed):
    grid.to_csv(path_csv)
    with open(path_json, "w") as f:
        json.dump({"t": float(t), "engine": engine, "seed": seed}, f, sort_keys=True)


def time_avg_photon_pmf(record, burn_in: float = 0.0, t=None, gamma=None) -> np.ndarray:
    """Average of ``|c_n|^2`` over the samples with ``t >= burn_in``.

    ``record`` is a :class:`TrajectoryRecord` or an array of amplitudes, in
    which case ``t`` and ``gamma`` must be given. The averaging window must
    span at least ``100 / gamma``.
    """
    if isinstance(record, TrajectoryRecord):
        states, t, gamma = record.states, record.t, record.params.gamma
    else:
        states = np.asarray(record)
        if t is None or gamma is None:
            raise DomainError("t and gamma are required for a bare state sequence")
        t = np.asarray(t, dtype=float)
    if t[-1] - burn_in < 100.0 / gamma:
        raise DomainError(
            f"averaging window {t[-1] - burn_in:g} is shorter than 100/gamma = {100.0 / gamma:g}")
    keep = t >= burn_in
    # samples sit on a uniform grid, so time weighting reduces to a plain mean
    return np.mean(np.abs(states[keep]) ** 2, axis=0)


def compare_pmf(p, q) -> float:
    """Total-variation distance ``sum |p - q| / 2``."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise DomainError(f"support mismatch: {p.shape} vs {q.shape}")
    return float(0.5 * np.sum(np.abs(p - q)))


def write_pmf(pmf, nbar, path):
    ns = np.arange(len(pmf))
    be = bose_einstein_pmf(nbar, ns)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["n", "p_empirical", "p_bose_einstein"])
        for n, a, b in zip(ns, pmf, be):
            w.writerow([int(n), repr(float(a)), repr(float(b))])


def squeezing_track(record) -> np.ndarray:
    """Columns ``varX1, varX2, varX1/varX2`` for every sample of ``record``."""
    states = record.states if isinstance(record, TrajectoryRecord) else np.asarray(record)
    o = observables(states)
    return np.stack([o["var_x1"], o["var_x2"], o["var_x1"] / o["var_x2"]], axis=-1)


def localization_rate(states, params: ReservoirParams) -> np.ndarray:
    """Expected rate of change of the number variance for each state.

    ``-gamma (1+nbar) Q2^2 / <n> - gamma nbar Q2^2 / <n+1>``; never positive
    and zero exactly on Fock states. States with ``<n>`` below 1e-12
    contribute 0 to the first term.
    """
    m = moments(np.asarray(states))
    n = np.asarray(m["n"], dtype=float)
    q2 = m["n2"] - n**2
    safe = np.where(n < VACUUM_GUARD, 1.0, n)
    down = np.where(n < VACUUM_GUARD, 0.0, q2**2 / safe)
    return -params.gamma * (1 + params.nbar) * down - params.gamma * params.nbar * q2**2 / (n + 1)


def coherence_rate(states, params: ReservoirParams) -> np.ndarray:
    """Expected rate of change of ``Q1`` for each state at zero temperature.

    ``-gamma Q1 - gamma |<a^dagger a a> - <n><a>|^2 / <n>``.
    """
    if params.nbar != 0:
        raise DomainError("the coherence drift is sign-definite only at nbar = 0")
    c = np.asarray(states)
    m = moments(c)
    n = np.asarray(m["n"], dtype=float)
    d = c.shape[-1]
    ns = np.arange(d, dtype=float)
    # <a^dagger a a> = sum_n conj(c_n) n sqrt(n+1) c_{n+1}
    naa = np.sum(np.conj(c[..., :-1]) * ns[:-1] * np.sqrt(ns[1:]) * c[..., 1:], axis=-1)
    cov = np.abs(naa - n * m["a"]) ** 2
    q1 = n - np.abs(m["a"]) ** 2
    safe = np.where(n < VACUUM_GUARD, 1.0, n)
    return -params.gamma * q1 - params.gamma * np.where(n < VACUUM_GUARD, 0.0, cov / safe)


@dataclass(frozen=True)
class DriftCheck:
    """Finite-difference ensemble drift against the averaged analytic rate."""

    empirical: float
    analytic: float
    stderr: float
    analytic_stderr: float

    @property
    def combined_stderr(self) -> float:
        return math.hypot(self.stderr, self.analytic_stderr)

    def nonpositive(self, k=3.0) -> bool:
        return self.empirical <= k * self.stderr

    def agrees(self, k=3.0) -> bool:
        return abs(self.empirical - self.analytic) <= k * self.combined_stderr


def _drift(states, spacing, functional, rate):
    s = np.asarray(states)
    if s.ndim != 3 or s.shape[1] not in (2, 3):
        raise DomainError("states must have shape (members, 2 or 3, D)")
    if s.shape[0] < 2:
        raise DomainError("need at least two ensemble members")
    f = functional(s)
    if s.shape[1] == 3:
        diff = (f[:, 2] - f[:, 0]) / (2 * spacing)
        at = s[:, 1]
    else:
        diff = (f[:, 1] - f[:, 0]) / spacing
        at = s[:, 0]
    r = rate(at)
    m = s.shape[0]
    return DriftCheck(float(diff.mean()), float(r.mean()),
                      float(diff.std(ddof=1) / math.sqrt(m)), float(r.std(ddof=1) / math.sqrt(m)))


def localization_drift_check(states, params: ReservoirParams, spacing: float) -> DriftCheck:
    """Compare the ensemble drift of ``Q2`` with :func:`localization_rate`.

    ``states`` has shape ``(members, k, D)``: with ``k = 3`` the samples are
    at ``t - spacing, t, t + spacing`` and a central difference is used; with
    ``k = 2`` they are at ``t, t + spacing``.
    """
    return _drift(states, spacing, lambda s: observables(s)["q2"],
                  lambda s: localization_rate(s, params))


def coherent_drift_check(states, params: ReservoirParams, spacing: float) -> DriftCheck:
    """Same as :func:`localization_drift_check` for ``Q1`` at zero temperature."""
    if params.nbar != 0:
        raise DomainError("the coherence drift is sign-definite only at nbar = 0")
    return _drift(states, spacing, lambda s: observables(s)["q1"],
                  lambda s: coherence_rate(s, params))
