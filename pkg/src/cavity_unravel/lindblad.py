"""Finite-temperature cavity master equation: states, generator and RK4 integrator.

The generator acts elementwise on the number-basis matrix, using the
truncated ladder operators, so one evaluation costs O(D^2).
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import AccuracyWarning, DomainError, NumericalAbort
from .fock import FieldState, ReservoirParams, _require_normalized, bose_einstein_pmf

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
POSITIVITY_TOL = 1e-8


@dataclass(frozen=True)
class DensityMatrix:
    """Ensemble state of the cavity mode; ``entries`` is a ``D x D`` complex matrix."""

    entries: np.ndarray

    def __post_init__(self):
        r = np.array(self.entries, dtype=np.complex128)
        if r.ndim != 2 or r.shape[0] != r.shape[1]:
            raise DomainError(f"density matrix must be square, got shape {r.shape}")
        r.setflags(write=False)
        object.__setattr__(self, "entries", r)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    def purity(self) -> float:
        return float(np.real(np.sum(self.entries * self.entries.T)))

    def populations(self) -> np.ndarray:
        return np.real(np.diag(self.entries)).copy()

    def violations(self) -> list[str]:
        """Describe every broken invariant; empty when the matrix is valid."""
        r = self.entries
        out = []
        herm = float(np.max(np.abs(r - r.conj().T)))
        if herm > HERMITIAN_TOL:
            out.append(f"Hermiticity error {herm:.3e}")
        tr = np.trace(r).real
        if abs(tr - 1) > TRACE_TOL:
            out.append(f"trace {tr!r}")
        lam = float(np.linalg.eigvalsh((r + r.conj().T) / 2)[0])
        if lam < -POSITIVITY_TOL:
            out.append(f"smallest eigenvalue {lam:.3e}")
        return out

    def check(self, where: str = ""):
        bad = self.violations()
        if bad:
            raise NumericalAbort(f"density matrix invariant broken{where}: " + "; ".join(bad))
        return self


def from_pure(state: FieldState) -> DensityMatrix:
    _require_normalized(state)
    c = state.amplitudes
    return DensityMatrix(np.outer(c, c.conj()))


def thermal_state(nbar: float, dim: int) -> DensityMatrix:
    """Bose-Einstein state restricted to ``dim`` levels and renormalized."""
    p = bose_einstein_pmf(nbar, np.arange(dim))
    return DensityMatrix(np.diag(p / p.sum()).astype(np.complex128))


def trace_distance(r1, r2) -> float:
    """Half the trace norm of ``r1 - r2``."""
    a = r1.entries if isinstance(r1, DensityMatrix) else np.asarray(r1)
    b = r2.entries if isinstance(r2, DensityMatrix) else np.asarray(r2)
    if a.shape != b.shape:
        raise DomainError(f"dimension mismatch: {a.shape} vs {b.shape}")
    d = a - b
    lam = np.linalg.eigvalsh((d + d.conj().T) / 2)
    return float(min(1.0, 0.5 * np.sum(np.abs(lam))))


class _Generator:
    """Precomputed elementwise coefficients of the thermal Lindbladian."""

    def __init__(self, dim, params: ReservoirParams):
        n = np.arange(dim, dtype=float)
        h = n + 1
        h[-1] = 0.0  # truncated a a^dagger
        k_dn = params.gamma * (1 + params.nbar)
        k_up = params.gamma * params.nbar
        sq = np.sqrt(n[1:])
        self.decay = -0.5 * (k_dn * (n[:, None] + n[None, :]) + k_up * (h[:, None] + h[None, :]))
        self.feed_dn = k_dn * np.outer(sq, sq)
        self.feed_up = k_up * np.outer(sq, sq)

    def __call__(self, r):
        out = self.decay * r
        out[:-1, :-1] += self.feed_dn * r[1:, 1:]
        out[1:, 1:] += self.feed_up * r[:-1, :-1]
        return out


def lindblad_rhs(rho, params: ReservoirParams) -> np.ndarray:
    """Time derivative of ``rho`` under thermal damping.

    Returns a plain array: the derivative is traceless, so it is not itself a
    density matrix.
    """
    r = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=np.complex128)
    return _Generator(r.shape[0], params)(r)


def stability_number(dt, params: ReservoirParams, dim) -> float:
    return dt * params.gamma * (2 * params.nbar + 1) * dim


@dataclass
class DensitySeries:
    """Density matrices on a time grid, from the integrator or a trajectory ensemble.

    ``aborted`` counts trajectories excluded from an ensemble average.
    """

    t: np.ndarray
    rho: np.ndarray
    aborted: int = 0
    used: int = 0

    def __len__(self):
        return self.t.shape[0]

    def __getitem__(self, i) -> DensityMatrix:
        return DensityMatrix(self.rho[i])

    @property
    def dim(self) -> int:
        return self.rho.shape[-1]

    def at(self, time, tol=1e-9) -> DensityMatrix:
        i = int(np.argmin(np.abs(self.t - time)))
        if abs(self.t[i] - time) > tol:
            raise DomainError(f"no snapshot at t = {time}")
        return self[i]

    def observables(self) -> dict:
        return density_observables(self.rho)

    def to_json(self, path):
        snaps = [
            {"t": float(t), "dim": self.dim, "re": r.real.tolist(), "im": r.imag.tolist()}
            for t, r in zip(self.t, self.rho)
        ]
        with open(path, "w") as f:
            json.dump({"aborted": self.aborted, "used": self.used, "snapshots": snaps}, f)

    @classmethod
    def from_json(cls, path) -> "DensitySeries":
        with open(path) as f:
            data = json.load(f)
        snaps = data["snapshots"]
        t = np.array([s["t"] for s in snaps])
        rho = np.array([np.array(s["re"]) + 1j * np.array(s["im"]) for s in snaps])
        return cls(t, rho, data.get("aborted", 0), data.get("used", 0))

    def to_csv(self, path):
        o = self.observables()
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["t", "n_mean", "var_x1", "var_x2"])
            for i, t in enumerate(self.t):
                w.writerow([repr(float(t))] + [repr(float(o[k][i])) for k in ("n_mean", "var_x1", "var_x2")])


def density_observables(rho: np.ndarray) -> dict:
    """Photon number and quadrature variances of one matrix or a stack."""
    rho = np.asarray(rho)
    d = rho.shape[-1]
    n = np.arange(d, dtype=float)
    diag = np.real(np.diagonal(rho, axis1=-2, axis2=-1))
    nm = diag @ n
    n2 = diag @ n**2
    a = np.sum(np.sqrt(n[1:]) * np.diagonal(rho, offset=-1, axis1=-2, axis2=-1), axis=-1)
    a2 = np.sum(np.sqrt(n[1:-1] * n[2:]) * np.diagonal(rho, offset=-2, axis1=-2, axis2=-1), axis=-1)
    return {
        "n_mean": nm,
        "var_n": n2 - nm**2,
        "mean_a": a,
        "var_x1": (2 * a2.real + 2 * nm + 1) / 4 - a.real**2,
        "var_x2": (2 * nm + 1 - 2 * a2.real) / 4 - a.imag**2,
    }


def evolve_master(rho0, params: ReservoirParams, dt: float, steps: int, sample_every: int = 1,
                  check: bool = True) -> DensitySeries:
    """Integrate the master equation with classical fourth-order Runge-Kutta.

    Snapshots are taken every ``sample_every`` steps, including ``t = 0``.
    With ``check`` on, each snapshot is tested for Hermiticity, unit trace and
    positivity and the run raises :class:`NumericalAbort` on the first breach.
    """
    r = np.array(rho0.entries if isinstance(rho0, DensityMatrix) else rho0, dtype=np.complex128)
    dim = r.shape[0]
    if steps < 0 or sample_every < 1:
        raise DomainError("steps must be >= 0 and sample_every >= 1")
    if stability_number(dt, params, dim) >= 0.1:
        warnings.warn(
            f"dt*gamma*(2nbar+1)*D = {stability_number(dt, params, dim):.3g} >= 0.1",
            AccuracyWarning, stacklevel=2,
        )
    f = _Generator(dim, params)
    ts, snaps = [0.0], [r.copy()]
    for k in range(1, steps + 1):
        k1 = f(r)
        k2 = f(r + 0.5 * dt * k1)
        k3 = f(r + 0.5 * dt * k2)
        k4 = f(r + dt * k3)
        r = r + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        if k % sample_every == 0:
            ts.append(k * dt)
            snaps.append(r.copy())
            if check:
                DensityMatrix(r).check(f" at t = {k * dt:g}")
    return DensitySeries(np.array(ts), np.array(snaps))


def step_halving_error(rho0, params, dt, steps) -> float:
    """Largest trace distance between runs at ``dt`` and ``dt/2`` on the common grid."""
    coarse = evolve_master(rho0, params, dt, steps, check=False)
    fine = evolve_master(rho0, params, dt / 2, 2 * steps, sample_every=2, check=False)
    return max(trace_distance(a, b) for a, b in zip(coarse.rho, fine.rho))
