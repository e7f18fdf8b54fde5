"""Quantum-jump (Monte Carlo wave-function) unraveling of thermal damping.

Two jump channels act on the field: ``down`` applies ``sqrt(gamma (1+nbar)) a``
and ``up`` applies ``sqrt(gamma nbar) a^dagger``. Between jumps the state is
contracted by the non-Hermitian part of the effective Hamiltonian and
renormalized.
"""

from __future__ import annotations

import warnings

import numpy as np

from . import _kernels as K
from .ensemble import collect_states, mean_density
from .errors import AccuracyWarning, ContractError, DomainError, NumericalAbort
from .fock import FieldState, ReservoirParams, _require_normalized, lower, raise_
from .lindblad import DensitySeries
from .records import JumpEvent, TrajectoryRecord, make_rng, step_count

LEAK_MAX = 1e-4
MAX_JUMP_PROB = 0.1
#: ``dt gamma (2 nbar + 1) D`` above which the first-order propagator is not trusted.
FIRST_ORDER_LIMIT = 0.05

_KIND = {K.DOWN: "down", K.UP: "up"}


def _rates(params: ReservoirParams):
    return params.gamma * (1 + params.nbar), params.gamma * params.nbar


def no_jump_generator(dim: int, params: ReservoirParams) -> np.ndarray:
    """Diagonal of ``sum_m C_m^dagger C_m`` with the truncated ``a a^dagger``."""
    n = np.arange(dim, dtype=float)
    h = n + 1
    h[-1] = 0.0
    k_dn, k_up = _rates(params)
    return k_dn * n + k_up * h


def no_jump_factor(dim, params, dt, exact=False) -> np.ndarray:
    g = no_jump_generator(dim, params)
    return np.exp(-0.5 * dt * g) if exact else 1.0 - 0.5 * dt * g


def _check_dt(dt, params, dim, limit=FIRST_ORDER_LIMIT, stacklevel=3):
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")
    s = dt * params.gamma * (2 * params.nbar + 1) * dim
    if s > limit:
        warnings.warn(f"dt*gamma*(2nbar+1)*D = {s:.3g} exceeds {limit}", AccuracyWarning,
                      stacklevel=stacklevel)


def jump_rates(state: FieldState, params: ReservoirParams):
    """Return ``(rate_down, rate_up)`` for a normalized state."""
    _require_normalized(state)
    k_dn, k_up = _rates(params)
    nn, up, _ = K._number_moments(np.ascontiguousarray(state.amplitudes))
    return k_dn * nn, k_up * up


def no_jump_step(state: FieldState, params: ReservoirParams, dt: float,
                 exact: bool = False) -> FieldState:
    """Contract with ``1 - (dt/2) sum C^dagger C`` (or its exponential) and renormalize."""
    _check_dt(dt, params, state.dim)
    w = no_jump_factor(state.dim, params, dt, exact) * state.amplitudes
    nrm = np.linalg.norm(w)
    if nrm < 1e-12:
        raise NumericalAbort("norm collapsed below 1e-12 in the no-jump step; dt too large")
    return FieldState(w / nrm, state.leak)


def apply_jump(state: FieldState, kind: str) -> FieldState:
    """Apply the ``down`` or ``up`` jump operator and renormalize."""
    c = state.amplitudes
    leak = state.leak
    if kind == "down":
        w = lower(c)
    elif kind == "up":
        w = raise_(c)
        lost = state.dim * abs(c[-1]) ** 2
        kept = float(np.sum(np.abs(w) ** 2))
        if lost > 0:
            leak += lost / (kept + lost)
    else:
        raise DomainError(f"jump kind must be 'down' or 'up', got {kind!r}")
    nrm = np.linalg.norm(w)
    if nrm < 1e-12:
        raise ContractError(f"'{kind}' jump has zero probability on this state")
    return FieldState(w / nrm, leak)


def mc_step(state: FieldState, params: ReservoirParams, dt: float, rng: np.random.Generator,
            t: float = 0.0, exact: bool = False):
    """Advance one step; returns ``(new_state, event_or_None)``.

    One uniform variate is drawn from ``rng`` per call, the same stream a full
    trajectory consumes, so stepping by hand reproduces :func:`run_mc_trajectory`.
    """
    _require_normalized(state)
    _check_dt(dt, params, state.dim)
    k_dn, k_up = _rates(params)
    c = np.array(state.amplitudes)
    w = np.empty_like(c)
    kind, leak, status = K.mc_step(c, w, state.leak, k_dn, k_up,
                                   no_jump_factor(state.dim, params, dt, exact), exact, dt,
                                   rng.random(), MAX_JUMP_PROB)
    if status != K.OK:
        raise NumericalAbort(K.STATUS_TEXT[status])
    event = JumpEvent(t + dt, _KIND[kind]) if kind != K.NO_JUMP else None
    return FieldState(c, leak), event


def _simulate(c0, leak0, params, dt, n_steps, sample_every, seed, exact):
    k_dn, k_up = _rates(params)
    u = make_rng(seed).random(n_steps)
    factor = no_jump_factor(c0.shape[0], params, dt, exact)
    return K.mcwf_loop(np.ascontiguousarray(c0, dtype=np.complex128), float(leak0), k_dn, k_up,
                       factor, bool(exact), float(dt), n_steps, sample_every, u, LEAK_MAX,
                       MAX_JUMP_PROB)


def trajectory_states(seed, c0, leak0, params, dt, n_steps, sample_every, exact=False):
    """Sampled amplitudes of one trajectory and whether it finished; used by ensembles."""
    samples, _, _, status, _ = _simulate(c0, leak0, params, dt, n_steps, sample_every, seed, exact)
    return samples, status == K.OK


def run_mc_trajectory(psi0: FieldState, params: ReservoirParams, horizon: float, dt: float,
                      sample_every: int = 1, seed: int = 0, exact: bool = False) -> TrajectoryRecord:
    """Simulate one quantum-jump trajectory.

    Parameters
    ----------
    psi0 : FieldState
        Normalized initial state.
    horizon, dt : float
        ``horizon`` must be an integer multiple of ``dt``.
    sample_every : int
        Store the state every this many steps (plus ``t = 0``).
    seed : int
        Seed of the trajectory's private PCG64 stream.
    exact : bool
        Use ``exp(-dt/2 sum C^dagger C)`` for the no-jump contraction instead
        of the first-order factor.

    Returns
    -------
    TrajectoryRecord
        A run that hits a numerical limit keeps the samples reached so far and
        states the reason in ``abort_reason``.
    """
    _require_normalized(psi0)
    _check_dt(dt, params, psi0.dim)
    n_steps = step_count(horizon, dt)
    if sample_every < 1:
        raise DomainError("sample_every must be >= 1")
    samples, leaks, kinds, status, step = _simulate(
        psi0.amplitudes, psi0.leak, params, dt, n_steps, sample_every, seed, exact)
    idx = np.flatnonzero(kinds)
    events = [JumpEvent((k + 1) * dt, _KIND[int(kinds[k])]) for k in idx]
    t = np.arange(samples.shape[0]) * (sample_every * dt)
    rec = TrajectoryRecord("mcwf", seed, params, t, samples, leaks, events)
    if status != K.OK:
        rec.abort_reason = K.STATUS_TEXT[status]
        rec.abort_time = (step + 1) * dt
    return rec


def _ensemble_kwargs(psi0, params, horizon, dt, sample_every, exact):
    _require_normalized(psi0)
    _check_dt(dt, params, psi0.dim, stacklevel=4)
    n_steps = step_count(horizon, dt)
    kw = dict(c0=np.array(psi0.amplitudes), leak0=psi0.leak, params=params, dt=dt,
              n_steps=n_steps, sample_every=sample_every, exact=exact)
    t = np.arange(n_steps // sample_every + 1) * (sample_every * dt)
    return kw, t


def ensemble_mean_density(psi0, params, horizon, dt, M, seed0=0, sample_every=1, exact=False,
                          workers=1) -> DensitySeries:
    """Average ``|psi_k><psi_k|`` over ``M`` seeded trajectories.

    Trajectory ``k`` uses seed ``trajectory_seed(seed0, k)``. Aborted members
    are dropped and counted; more than 1% aborts raises :class:`NumericalAbort`.
    """
    kw, t = _ensemble_kwargs(psi0, params, horizon, dt, sample_every, exact)
    return mean_density(trajectory_states, kw, t, M, seed0, workers)


def ensemble_states(psi0, params, horizon, dt, M, seed0=0, sample_every=1, exact=False,
                    workers=1):
    """Return ``(t, states, ok)`` with ``states`` of shape ``(M, samples, D)``."""
    kw, t = _ensemble_kwargs(psi0, params, horizon, dt, sample_every, exact)
    states, ok = collect_states(trajectory_states, kw, M, seed0, workers)
    return t, states, ok
