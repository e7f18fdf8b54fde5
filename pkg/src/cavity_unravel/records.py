"""Trajectory records, seeding rules and their file formats."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from .errors import DomainError
from .fock import FieldState, ReservoirParams, observables

CSV_COLUMNS = ("n_mean", "q1", "q2", "var_x1", "var_x2")
CSV_HEADER = ("t", "n_mean", "Q1", "Q2", "varX1", "varX2")


def trajectory_seed(seed0: int, k: int) -> int:
    """Seed of trajectory ``k`` in an ensemble rooted at ``seed0``.

    The pair ``(seed0, k)`` is hashed by :class:`numpy.random.SeedSequence`
    into a 64-bit integer, so members are independent of how the ensemble is
    split across workers.
    """
    if seed0 < 0 or k < 0:
        raise DomainError("seeds and trajectory indices must be nonnegative")
    w = np.random.SeedSequence([int(seed0), int(k)]).generate_state(2, np.uint32)
    return int(w[0]) | (int(w[1]) << 32)


def make_rng(seed: int) -> np.random.Generator:
    """The fixed stream algorithm (PCG64) used by every engine."""
    return np.random.Generator(np.random.PCG64(int(seed)))


def step_count(horizon: float, dt: float) -> int:
    if not dt > 0 or not horizon >= 0:
        raise DomainError("dt must be positive and horizon nonnegative")
    n = int(round(horizon / dt))
    if abs(n * dt - horizon) > 1e-9 * max(1.0, horizon):
        raise DomainError(f"horizon {horizon} is not a multiple of dt {dt}")
    return n


@dataclass(frozen=True)
class JumpEvent:
    time: float
    kind: str  # "down" (action of a) or "up" (action of a^dagger)


@dataclass
class TrajectoryRecord:
    """One stochastic realization sampled on a time grid.

    ``states`` holds the normalized amplitudes at every sample time. Jump
    engines fill ``events``; the diffusive engine keeps its Wiener increments
    in ``wiener`` (shape ``(steps, 2)``); beam runs keep a per-atom log in
    ``atoms``. A run stopped by a numerical abort keeps the samples reached
    and records why in ``abort_reason``.
    """

    engine: str
    seed: int
    params: ReservoirParams
    t: np.ndarray
    states: np.ndarray
    leak: np.ndarray
    events: list = field(default_factory=list)
    wiener: Optional[np.ndarray] = None
    atoms: Optional[dict] = None
    abort_reason: Optional[str] = None
    abort_time: Optional[float] = None

    @property
    def ok(self) -> bool:
        return self.abort_reason is None

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @cached_property
    def observables(self) -> dict:
        return observables(self.states)

    def snapshot(self, i: int) -> FieldState:
        return FieldState(self.states[i], self.leak[i])

    def populations(self) -> np.ndarray:
        return np.abs(self.states) ** 2

    def to_csv(self, path):
        o = self.observables
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(CSV_HEADER)
            for i, t in enumerate(self.t):
                w.writerow([repr(float(t))] + [repr(float(o[k][i])) for k in CSV_COLUMNS])

    def sidecar(self) -> dict:
        out = {
            "engine": self.engine,
            "seed": self.seed,
            "params": asdict(self.params),
            "status": "ok" if self.ok else "aborted",
            "abort_reason": self.abort_reason,
            "abort_time": self.abort_time,
        }
        if self.engine in ("mcwf",):
            out["events"] = [{"time": e.time, "kind": e.kind} for e in self.events]
        if self.atoms is not None:
            out["atoms"] = [
                {"index": i, "prep": p, "detected": d, "flipped": f}
                for i, (p, d, f) in enumerate(zip(self.atoms["prep"], self.atoms["detected"],
                                                  self.atoms["flipped"]))
            ]
        return out

    def to_json(self, path):
        with open(path, "w") as f:
            json.dump(self.sidecar(), f)
