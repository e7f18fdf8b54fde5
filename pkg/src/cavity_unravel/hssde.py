"""Homodyne stochastic Schroedinger equation for thermal damping.

The unnormalized state is advanced by an Euler-Maruyama step driven by two
independent Wiener processes, one per damping channel, and renormalized::

    d psi = [-(dt/2) G + z1 a + z2 a^dagger] psi
    G  = gamma (1+nbar) a^dagger a + gamma nbar a a^dagger
    z1 = 2 gamma (1+nbar) <X1> dt + sqrt(gamma (1+nbar)) dW1
    z2 = 2 gamma nbar <X1> dt + sqrt(gamma nbar) dW2

with ``<X1>`` taken from the current normalized state at every step.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .ensemble import collect_states, mean_density
from .errors import AccuracyWarning, DomainError, NumericalAbort
from .fock import FieldState, ReservoirParams, _require_normalized, lower, moments, raise_
from .lindblad import DensitySeries
from .mcwf import no_jump_generator
from .records import TrajectoryRecord, make_rng, step_count

LEAK_MAX = 1e-4
#: ``gamma (2 nbar + 1) D dt`` above which the Euler-Maruyama step is not trusted.
EULER_LIMIT = 0.01
SCHEMES = ("euler", "split")
NOISES = ("gaussian", "binary")


@dataclass(frozen=True)
class WienerPair:
    dw1: float
    dw2: float


@dataclass(frozen=True)
class JumpCountMoments:
    """Means and variances of the two homodyne flip counts in one window.

    ``mu1``/``mu2`` are the drive-only mean counts; ``mean1``/``mean2``
    include the linear response to ``<X1>``. The variances equal ``mu1`` and
    ``mu2`` to the order kept.
    """

    mu1: float
    mu2: float
    mean1: float
    mean2: float
    var1: float
    var2: float


def _check(params, dt, dim, scheme="euler", noise="gaussian", stacklevel=3):
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")
    if scheme not in SCHEMES:
        raise DomainError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
    if noise not in NOISES:
        raise DomainError(f"noise must be one of {NOISES}, got {noise!r}")
    s = params.gamma * (2 * params.nbar + 1) * dim * dt
    if s > EULER_LIMIT:
        warnings.warn(f"gamma*(2nbar+1)*D*dt = {s:.3g} exceeds {EULER_LIMIT}", AccuracyWarning,
                      stacklevel=stacklevel)


def hssde_increment(state: FieldState, params: ReservoirParams, dt: float,
                    w: WienerPair) -> np.ndarray:
    """Unnormalized change of the amplitudes over one step (a plain array).

    Uses the truncated ladder operators, like every engine in the package.
    """
    _require_normalized(state)
    c = state.amplitudes
    k_dn = params.gamma * (1 + params.nbar)
    k_up = params.gamma * params.nbar
    x1 = float(moments(c)["a"].real)
    z1 = 2 * k_dn * x1 * dt + np.sqrt(k_dn) * w.dw1
    z2 = 2 * k_up * x1 * dt + np.sqrt(k_up) * w.dw2
    return -0.5 * dt * no_jump_generator(state.dim, params) * c + z1 * lower(c) + z2 * raise_(c)


def wiener_increments(seed, n_steps, dt, noise="gaussian", substeps=1) -> np.ndarray:
    """Increments ``(dW1, dW2)`` for ``n_steps`` steps of size ``dt``.

    The stream is drawn on a grid ``substeps`` times finer and summed in
    consecutive groups, so runs at ``dt`` and ``dt/2`` with ``substeps`` 2
    and 1 follow the same Brownian path.
    """
    rng = make_rng(seed)
    h = dt / substeps
    if noise == "gaussian":
        fine = rng.standard_normal((n_steps * substeps, 2)) * np.sqrt(h)
    elif noise == "binary":
        fine = (2.0 * rng.integers(0, 2, (n_steps * substeps, 2)) - 1.0) * np.sqrt(h)
    else:
        raise DomainError(f"noise must be one of {NOISES}, got {noise!r}")
    if substeps == 1:
        return fine
    return fine.reshape(n_steps, substeps, 2).sum(axis=1)


def _coefficients(dim, params, dt):
    g = no_jump_generator(dim, params)
    return (0.5 * dt * g, np.exp(-0.5 * dt * g),
            params.gamma * (1 + params.nbar), params.gamma * params.nbar)


def hssde_step(state: FieldState, params: ReservoirParams, dt: float, rng: np.random.Generator,
               scheme: str = "euler") -> FieldState:
    """One renormalized step with a fresh Gaussian pair from ``rng``.

    ``scheme="split"`` applies the diagonal drift as the exact exponential
    after the ladder terms instead of its first-order form.
    """
    _require_normalized(state)
    _check(params, dt, state.dim, scheme)
    dw = rng.standard_normal(2) * np.sqrt(dt)
    half_g, efac, k_dn, k_up = _coefficients(state.dim, params, dt)
    c = np.array(state.amplitudes)
    w = np.empty_like(c)
    leak, status = K.hssde_step(c, w, state.leak, half_g, efac, k_dn, k_up, dt, dw[0], dw[1],
                                scheme == "split")
    if status != K.OK:
        raise NumericalAbort(K.STATUS_TEXT[status])
    return FieldState(c, leak)


def _simulate(c0, leak0, params, dt, n_steps, sample_every, dw, scheme):
    half_g, efac, k_dn, k_up = _coefficients(c0.shape[0], params, dt)
    return K.hssde_loop(np.ascontiguousarray(c0, dtype=np.complex128), float(leak0), half_g,
                        efac, k_dn, k_up, float(dt), n_steps, sample_every, dw,
                        scheme == "split", LEAK_MAX)


def trajectory_states(seed, c0, leak0, params, dt, n_steps, sample_every, scheme="euler",
                      noise="gaussian", substeps=1):
    dw = wiener_increments(seed, n_steps, dt, noise, substeps)
    samples, _, status, _ = _simulate(c0, leak0, params, dt, n_steps, sample_every, dw, scheme)
    return samples, status == K.OK


def run_hssde_trajectory(psi0: FieldState, params: ReservoirParams, horizon: float, dt: float,
                         sample_every: int = 1, seed: int = 0, scheme: str = "euler",
                         noise: str = "gaussian", substeps: int = 1) -> TrajectoryRecord:
    """Simulate one diffusive trajectory; the record keeps every Wiener increment.

    Parameters
    ----------
    scheme : {"euler", "split"}
        Plain Euler-Maruyama, or the same step with the diagonal drift
        exponentiated.
    noise : {"gaussian", "binary"}
        Distribution of the increments; binary draws ``+-sqrt(dt)``.
    substeps : int
        Draw the noise on a grid this many times finer and sum it.
    """
    _require_normalized(psi0)
    _check(params, dt, psi0.dim, scheme, noise)
    if sample_every < 1:
        raise DomainError("sample_every must be >= 1")
    n_steps = step_count(horizon, dt)
    dw = wiener_increments(seed, n_steps, dt, noise, substeps)
    samples, leaks, status, step = _simulate(psi0.amplitudes, psi0.leak, params, dt, n_steps,
                                             sample_every, dw, scheme)
    t = np.arange(samples.shape[0]) * (sample_every * dt)
    rec = TrajectoryRecord("hssde", seed, params, t, samples, leaks, wiener=dw)
    if status != K.OK:
        rec.abort_reason = K.STATUS_TEXT[status]
        rec.abort_time = (step + 1) * dt
        rec.wiener = dw[: step + 1]
    return rec


def jump_count_moments(state: FieldState, params: ReservoirParams, epsilon: float,
                       horizon: float) -> JumpCountMoments:
    """Flip-count moments over a window ``horizon`` for drive ``epsilon``.

    ``mu_i`` is ``gamma horizon epsilon^2`` times ``1 + nbar`` or ``nbar``;
    the means are ``mu_i (1 + 2 <X1> / epsilon)`` and the variances ``mu_i``.
    """
    if not epsilon > 0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    _require_normalized(state)
    x1 = float(moments(state.amplitudes)["a"].real)
    base = params.gamma * horizon * epsilon**2
    mu1 = base * (1 + params.nbar)
    mu2 = base * params.nbar
    f = 1 + 2 * x1 / epsilon
    return JumpCountMoments(mu1, mu2, mu1 * f, mu2 * f, mu1, mu2)


def _ensemble_kwargs(psi0, params, horizon, dt, sample_every, scheme, noise, substeps):
    _require_normalized(psi0)
    _check(params, dt, psi0.dim, scheme, noise, stacklevel=4)
    n_steps = step_count(horizon, dt)
    kw = dict(c0=np.array(psi0.amplitudes), leak0=psi0.leak, params=params, dt=dt,
              n_steps=n_steps, sample_every=sample_every, scheme=scheme, noise=noise,
              substeps=substeps)
    return kw, np.arange(n_steps // sample_every + 1) * (sample_every * dt)


def ensemble_mean_density(psi0, params, horizon, dt, M, seed0=0, sample_every=1,
                          scheme="euler", noise="gaussian", substeps=1,
                          workers=1) -> DensitySeries:
    """Average ``|psi_k><psi_k|`` over ``M`` seeded diffusive trajectories."""
    kw, t = _ensemble_kwargs(psi0, params, horizon, dt, sample_every, scheme, noise, substeps)
    return mean_density(trajectory_states, kw, t, M, seed0, workers)


def ensemble_states(psi0, params, horizon, dt, M, seed0=0, sample_every=1, scheme="euler",
                    noise="gaussian", substeps=1, workers=1):
    """Return ``(t, states, ok)`` with ``states`` of shape ``(M, samples, D)``."""
    kw, t = _ensemble_kwargs(psi0, params, horizon, dt, sample_every, scheme, noise, substeps)
    states, ok = collect_states(trajectory_states, kw, M, seed0, workers)
    return t, states, ok
