"""Atomic-beam reservoir: atoms cross the cavity one at a time and are detected.

Two-level atoms (levels ``a`` above ``b``) exchange single photons with the
field. Three-level atoms couple the upper level ``a`` to both lower levels
``b`` and ``c`` and see a classical drive ``epsilon``; they enter either in
``a`` or in the lower superposition ``(b + c)/sqrt2``.

Each pass keeps terms up to second order in the rotation angle. Flip
outcomes have probability equal to the squared norm of their branch; the
no-flip outcome takes the remaining probability.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .ensemble import collect_states, mean_density
from .errors import AccuracyWarning, DomainError, NumericalAbort
from .fock import FieldState, ReservoirParams, _require_normalized, beam_gamma, lower, raise_
from .lindblad import DensitySeries
from .records import TrajectoryRecord, make_rng

LEAK_MAX = 1e-4
MODELS = ("two_level", "three_level")
LEVELS = ("excited_a", "ground_b", "ground_superposition_bc")
DETECTED = {K.DET_A: "a", K.DET_B: "b", K.DET_BC_PLUS: "superposition_bc",
            K.DET_BC_MINUS: "antisymmetric_bc"}
_PREP_LEVEL = {"excited_a": "a", "ground_b": "b", "ground_superposition_bc": "superposition_bc"}


@dataclass(frozen=True)
class AtomPrep:
    model: str
    level: str

    def __post_init__(self):
        if self.model not in MODELS:
            raise DomainError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.level not in LEVELS:
            raise DomainError(f"level must be one of {LEVELS}, got {self.level!r}")
        if self.model == "two_level" and self.level == "ground_superposition_bc":
            raise DomainError("the lower superposition exists only for three-level atoms")
        if self.model == "three_level" and self.level == "ground_b":
            raise DomainError("three-level atoms enter in 'excited_a' or 'ground_superposition_bc'")

    @property
    def excited(self) -> bool:
        return self.level == "excited_a"


@dataclass(frozen=True)
class DetectionOutcome:
    detected_level: str
    flipped: bool


@dataclass(frozen=True)
class BeamSchedule:
    """Injection of atoms into the cavity.

    Atoms arrive every ``1/(r_a + r_b)`` (or as a Poisson process when
    ``poisson`` is set) and are independently excited with probability
    ``r_a / (r_a + r_b)``. ``tau`` is the transit time, used only to check
    that at most one atom is inside the cavity.
    """

    r_a: float
    r_b: float
    tau: float | None = None
    poisson: bool = False

    def __post_init__(self):
        if self.r_a < 0 or self.r_b <= 0:
            raise DomainError("atom rates must satisfy r_a >= 0, r_b > 0")
        if self.tau is not None and not (self.r_a + self.r_b) * self.tau < 1:
            raise DomainError("(r_a + r_b) tau must be < 1: more than one atom in the cavity")

    @property
    def rate(self) -> float:
        return self.r_a + self.r_b

    @property
    def nbar(self) -> float:
        if self.r_b <= self.r_a:
            raise DomainError("r_b must exceed r_a (negative temperatures are not modeled)")
        return self.r_a / (self.r_b - self.r_a)

    def arrivals(self, horizon: float, rng: np.random.Generator):
        """Arrival times in ``(0, horizon]`` and whether each atom is excited."""
        if self.poisson:
            n_max = int(self.rate * horizon + 10 * math.sqrt(self.rate * horizon + 1) + 10)
            times = np.cumsum(rng.exponential(1.0 / self.rate, n_max))
            while times[-1] <= horizon:
                more = times[-1] + np.cumsum(rng.exponential(1.0 / self.rate, n_max))
                times = np.concatenate([times, more])
            times = times[times <= horizon]
        else:
            n = int(math.floor(horizon * self.rate * (1 + 1e-12)))
            times = np.arange(1, n + 1) / self.rate
        excited = rng.random(times.shape[0]) < self.r_a / self.rate
        return times, excited


def effective_gamma(schedule: BeamSchedule, coupling: float, model: str = "two_level") -> float:
    """Damping rate the beam imposes on the field."""
    return beam_gamma(schedule.r_a, schedule.r_b, coupling, model)


def reservoir_params(schedule: BeamSchedule, coupling: float, model: str = "two_level",
                     epsilon: float | None = None) -> ReservoirParams:
    return ReservoirParams.from_beam(schedule.r_a, schedule.r_b, coupling, model, epsilon)


def _check_coupling(model, coupling, epsilon, dim, stacklevel=3):
    if model == "two_level":
        size = coupling
    else:
        if epsilon is None or epsilon < 0:
            raise DomainError("three-level atoms need a real epsilon >= 0")
        size = coupling * max(epsilon, math.sqrt(dim))
    if size > 0.1:
        warnings.warn(f"atomic rotation {size:.3g} exceeds 0.1; second-order expansion suspect",
                      AccuracyWarning, stacklevel=stacklevel)


def branch_vectors(state: FieldState, prep: AtomPrep, coupling: float,
                   epsilon: float | None = None) -> dict:
    """Unnormalized conditional field vectors keyed by detected level.

    These are the second-order branch operators applied to the field. Their
    squared norms add up to ``1 + O(coupling^4)``.
    """
    c = state.amplitudes
    d = state.dim
    x2 = coupling**2
    n = np.arange(d, dtype=float)
    h = n + 1
    h[-1] = 0.0
    if prep.model == "two_level":
        if prep.excited:
            return {"b": coupling * raise_(c), "a": (1 - 0.5 * x2 * h) * c}
        return {"a": coupling * lower(c), "b": (1 - 0.5 * x2 * n) * c}
    e = float(epsilon)
    k = coupling / math.sqrt(2)
    if prep.excited:
        return {
            "superposition_bc": k * (e * c + raise_(c)),
            "antisymmetric_bc": k * (-e * c + raise_(c)),
            "a": (1 - 0.5 * x2 * (e * e + h)) * c,
        }
    y = e * c + lower(c)
    return {"a": k * y, "superposition_bc": c - 0.25 * x2 * (e * y + raise_(y))}


def branch_probabilities(state: FieldState, prep: AtomPrep, coupling: float,
                         epsilon: float | None = None) -> dict:
    """Outcome probabilities: flip branches by squared norm, no-flip by complement."""
    _require_normalized(state)
    vec = branch_vectors(state, prep, coupling, epsilon)
    stay = _PREP_LEVEL[prep.level]
    out = {k: float(np.sum(np.abs(v) ** 2)) for k, v in vec.items() if k != stay}
    out[stay] = 1.0 - sum(out.values())
    return out


def completeness_residual(state: FieldState, prep: AtomPrep, coupling: float,
                          epsilon: float | None = None) -> float:
    """``sum of squared branch norms - 1``; of order ``coupling^4``."""
    vec = branch_vectors(state, prep, coupling, epsilon)
    return float(sum(np.sum(np.abs(v) ** 2) for v in vec.values()) - 1.0)


def _pass(state, prep, coupling, epsilon, u):
    c = np.array(state.amplitudes)
    w = np.empty_like(c)
    if prep.model == "two_level":
        det, leak, status = K.two_level_atom(c, w, state.leak, prep.excited, coupling**2, u)
    else:
        y = np.empty_like(c)
        det, leak, status = K.three_level_atom(c, w, y, state.leak, prep.excited, coupling**2,
                                               float(epsilon), u)
    if status != K.OK:
        raise NumericalAbort(K.STATUS_TEXT[status])
    level = DETECTED[int(det)]
    return FieldState(c, leak), DetectionOutcome(level, level != _PREP_LEVEL[prep.level])


def two_level_pass(state: FieldState, prep: AtomPrep, lambda_tau: float, rng):
    """Send one two-level atom through the cavity; returns ``(state, outcome)``."""
    _require_normalized(state)
    if prep.model != "two_level":
        raise DomainError("two_level_pass needs a two-level preparation")
    _check_coupling("two_level", lambda_tau, None, state.dim)
    return _pass(state, prep, lambda_tau, None, rng.random())


def three_level_pass(state: FieldState, prep: AtomPrep, g_tau: float, epsilon: float, rng):
    """Send one driven three-level atom through the cavity; returns ``(state, outcome)``.

    Detection distinguishes ``a``, ``(b+c)/sqrt2`` and ``(b-c)/sqrt2``.
    """
    _require_normalized(state)
    if prep.model != "three_level":
        raise DomainError("three_level_pass needs a three-level preparation")
    _check_coupling("three_level", g_tau, epsilon, state.dim)
    return _pass(state, prep, g_tau, epsilon, rng.random())


def _draw(schedule, horizon, seed):
    rng = make_rng(seed)
    times, excited = schedule.arrivals(horizon, rng)
    return times, excited, rng.random(times.shape[0])


def _sample_grid(horizon, sample_dt):
    n = int(round(horizon / sample_dt))
    if abs(n * sample_dt - horizon) > 1e-9 * max(1.0, horizon):
        raise DomainError(f"horizon {horizon} is not a multiple of sample_dt {sample_dt}")
    return np.arange(n + 1) * sample_dt


def _simulate(c0, leak0, schedule, coupling, model, epsilon, horizon, sample_dt, seed):
    times, excited, u = _draw(schedule, horizon, seed)
    t = _sample_grid(horizon, sample_dt)
    n_before = np.searchsorted(times, t * (1 + 1e-12) + 1e-12, side="right").astype(np.int64)
    out = K.beam_loop(np.ascontiguousarray(c0, dtype=np.complex128), float(leak0),
                      model == "three_level", float(coupling**2),
                      float(epsilon if epsilon is not None else 0.0), excited, u, n_before,
                      LEAK_MAX)
    return t, times, excited, out


def trajectory_states(seed, c0, leak0, schedule, coupling, model, epsilon, horizon, sample_dt):
    _, _, _, (samples, _, _, status, _) = _simulate(c0, leak0, schedule, coupling, model,
                                                    epsilon, horizon, sample_dt, seed)
    return samples, status == K.OK


def run_beam_trajectory(psi0: FieldState, schedule: BeamSchedule, coupling: float,
                        horizon: float, seed: int = 0, model: str = "two_level",
                        epsilon: float | None = None, sample_dt: float | None = None
                        ) -> TrajectoryRecord:
    """Simulate the field under a beam of detected atoms.

    Parameters
    ----------
    coupling : float
        ``lambda tau`` for two-level atoms, ``g tau`` for three-level ones.
    sample_dt : float, optional
        Spacing of the stored states; defaults to ``horizon / 100``. A
        sample at time ``t`` includes every atom that arrived at or before ``t``.

    Returns
    -------
    TrajectoryRecord
        ``engine`` is ``"micro2"`` or ``"micro3"``; ``atoms`` logs the
        preparation, detected level and flip flag of every atom processed.
    """
    _require_normalized(psi0)
    if model not in MODELS:
        raise DomainError(f"model must be one of {MODELS}, got {model!r}")
    _check_coupling(model, coupling, epsilon, psi0.dim)
    params = reservoir_params(schedule, coupling, model, epsilon)
    if sample_dt is None:
        sample_dt = horizon / 100
    t, times, excited, out = _simulate(psi0.amplitudes, psi0.leak, schedule, coupling, model,
                                       epsilon, horizon, sample_dt, seed)
    samples, leaks, detected, status, i = out
    ground = "ground_b" if model == "two_level" else "ground_superposition_bc"
    prep = ["excited_a" if e else ground for e in excited[: detected.shape[0]]]
    det = [DETECTED[int(x)] for x in detected]
    flipped = [d != _PREP_LEVEL[p] for p, d in zip(prep, det)]
    rec = TrajectoryRecord("micro2" if model == "two_level" else "micro3", seed, params,
                           t[: samples.shape[0]], samples, leaks,
                           atoms={"prep": prep, "detected": det, "flipped": flipped,
                                  "time": times[: detected.shape[0]]})
    if status != K.OK:
        rec.abort_reason = K.STATUS_TEXT[status]
        rec.abort_time = float(times[i])
    return rec


def flip_counts(record: TrajectoryRecord, window: float) -> dict:
    """Count detections per window of length ``window`` starting at ``t = 0``.

    Returns arrays keyed by ``"ground_flips"`` (lower-prepared atoms found in
    ``a``), ``"excited_flips"`` (excited atoms found in the prepared lower
    state: ``b`` or ``(b+c)/sqrt2``) and, for three-level atoms,
    ``"excited_flips_minus"`` (excited atoms found in ``(b-c)/sqrt2``).
    """
    atoms = record.atoms
    times = np.asarray(atoms["time"])
    n_win = int(round(record.t[-1] / window))
    idx = np.minimum(((times - 1e-12) // window).astype(int), n_win - 1)
    prep = np.array(atoms["prep"])
    det = np.array(atoms["detected"])
    exc = prep == "excited_a"
    lower_state = "b" if record.engine == "micro2" else "superposition_bc"
    masks = {
        "ground_flips": (~exc) & (det == "a"),
        "excited_flips": exc & (det == lower_state),
    }
    if record.engine == "micro3":
        masks["excited_flips_minus"] = exc & (det == "antisymmetric_bc")
    return {k: np.bincount(idx[m], minlength=n_win) for k, m in masks.items()}


def _ensemble_kwargs(psi0, schedule, coupling, horizon, model, epsilon, sample_dt):
    _require_normalized(psi0)
    _check_coupling(model, coupling, epsilon, psi0.dim, stacklevel=4)
    t = _sample_grid(horizon, sample_dt)
    kw = dict(c0=np.array(psi0.amplitudes), leak0=psi0.leak, schedule=schedule,
              coupling=coupling, model=model, epsilon=epsilon, horizon=horizon,
              sample_dt=sample_dt)
    return kw, t


def ensemble_mean_density(psi0, schedule, coupling, horizon, M, seed0=0, model="two_level",
                          epsilon=None, sample_dt=None, workers=1) -> DensitySeries:
    """Average ``|psi_k><psi_k|`` over ``M`` seeded beam trajectories."""
    sample_dt = horizon / 100 if sample_dt is None else sample_dt
    kw, t = _ensemble_kwargs(psi0, schedule, coupling, horizon, model, epsilon, sample_dt)
    return mean_density(trajectory_states, kw, t, M, seed0, workers)


def ensemble_states(psi0, schedule, coupling, horizon, M, seed0=0, model="two_level",
                    epsilon=None, sample_dt=None, workers=1):
    sample_dt = horizon / 100 if sample_dt is None else sample_dt
    kw, t = _ensemble_kwargs(psi0, schedule, coupling, horizon, model, epsilon, sample_dt)
    states, ok = collect_states(trajectory_states, kw, M, seed0, workers)
    return t, states, ok
