"""Declarative experiment configuration (JSON) and its validation."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

from .errors import DomainError
from .fock import FieldState, ReservoirParams, default_dim, make_coherent, make_fock

ENGINES = ("lindblad", "mcwf", "hssde", "micro2", "micro3")
KNOWN_KEYS = {
    "engine", "initial_state", "dim", "gamma", "nbar", "dt", "horizon", "sample_every",
    "trajectories", "seed0", "r_a", "r_b", "coupling_tau", "epsilon", "exact", "scheme",
    "noise", "poisson", "workers", "outputs",
}
OUTPUT_KEYS = {"trajectory", "density", "qgrid_times", "qgrid_extent", "qgrid_points",
               "burn_in"}


class ConfigError(DomainError):
    """A configuration value is missing, malformed or inconsistent; names the key."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class ExperimentConfig:
    engine: str
    initial_state: dict
    dim: int
    params: ReservoirParams
    dt: float
    horizon: float
    sample_every: int = 1
    trajectories: int = 1
    seed0: int = 0
    exact: bool = False
    scheme: str = "euler"
    noise: str = "gaussian"
    poisson: bool = False
    workers: int = 1
    outputs: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def stochastic(self) -> bool:
        return self.engine != "lindblad"

    @property
    def model(self) -> Optional[str]:
        return {"micro2": "two_level", "micro3": "three_level"}.get(self.engine)

    def initial_field(self) -> FieldState:
        s = self.initial_state
        if s["kind"] == "fock":
            return make_fock(s["n"], self.dim)
        if s["kind"] == "coherent":
            return make_coherent(complex(s["re"], s["im"]), self.dim)
        raise ConfigError("initial_state", "a pure initial state is required by this engine")

    def with_overrides(self, engine=None, seed0=None, workers=None) -> "ExperimentConfig":
        raw = dict(self.raw)
        if engine is not None:
            raw["engine"] = engine
        if seed0 is not None:
            raw["seed0"] = seed0
        if workers is not None:
            raw["workers"] = workers
        return parse_config(raw)


def _number(raw, key, default=None, positive=False, nonneg=False):
    if key not in raw:
        if default is None:
            raise ConfigError(key, "required")
        return default
    v = raw[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(key, f"must be a finite number, got {v!r}")
    if positive and not v > 0:
        raise ConfigError(key, f"must be positive, got {v!r}")
    if nonneg and v < 0:
        raise ConfigError(key, f"must be nonnegative, got {v!r}")
    return float(v)


def _integer(raw, key, default, minimum):
    v = raw.get(key, default)
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(key, f"must be an integer, got {v!r}")
    if v < minimum:
        raise ConfigError(key, f"must be >= {minimum}, got {v!r}")
    return v


def _initial_state(raw):
    s = raw.get("initial_state")
    if not isinstance(s, dict) or "kind" not in s:
        raise ConfigError("initial_state", "must be an object with a 'kind'")
    kind = s["kind"]
    if kind == "fock":
        n = s.get("n")
        if isinstance(n, bool) or not isinstance(n, int) or n < 0:
            raise ConfigError("initial_state.n", f"must be a nonnegative integer, got {n!r}")
        return {"kind": "fock", "n": n}
    if kind == "coherent":
        re = _number(s, "re", 0.0)
        im = _number(s, "im", 0.0)
        return {"kind": "coherent", "re": re, "im": im}
    if kind == "thermal":
        return {"kind": "thermal"}
    raise ConfigError("initial_state.kind", f"must be 'fock', 'coherent' or 'thermal', got {kind!r}")


def parse_config(raw: dict) -> ExperimentConfig:
    """Validate a configuration mapping; every error names the offending key."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "configuration must be a JSON object")
    unknown = sorted(set(raw) - KNOWN_KEYS)
    if unknown:
        raise ConfigError(unknown[0], "unknown key")
    engine = raw.get("engine")
    if engine not in ENGINES:
        raise ConfigError("engine", f"must be one of {ENGINES}, got {engine!r}")
    init = _initial_state(raw)
    if init["kind"] == "thermal" and engine != "lindblad":
        raise ConfigError("initial_state.kind", "'thermal' is a mixed state; only the lindblad engine accepts it")

    micro = engine in ("micro2", "micro3")
    if micro:
        model = "two_level" if engine == "micro2" else "three_level"
        r_a = _number(raw, "r_a", nonneg=True)
        r_b = _number(raw, "r_b", positive=True)
        ct = _number(raw, "coupling_tau", positive=True)
        eps = _number(raw, "epsilon", nonneg=True) if engine == "micro3" else None
        if engine == "micro2" and "epsilon" in raw:
            raise ConfigError("epsilon", "the two-level beam has no drive")
        if r_b <= r_a:
            raise ConfigError("r_b", "must exceed r_a (negative temperatures are not modeled)")
        try:
            params = ReservoirParams.from_beam(r_a, r_b, ct, model, eps)
        except DomainError as e:
            raise ConfigError("coupling_tau", str(e)) from None
        for key in ("gamma", "nbar"):
            if key in raw and abs(_number(raw, key) - getattr(params, key)) > 1e-12 * max(1.0, abs(getattr(params, key))):
                raise ConfigError(key, f"inconsistent with r_a, r_b, coupling_tau ({getattr(params, key)!r})")
    else:
        for key in ("r_a", "r_b", "coupling_tau", "epsilon"):
            if key in raw:
                raise ConfigError(key, f"only used by the micro engines, not {engine!r}")
        gamma = _number(raw, "gamma", positive=True)
        nbar = _number(raw, "nbar", nonneg=True)
        params = ReservoirParams(gamma, nbar)

    dt = _number(raw, "dt", positive=True)
    horizon = _number(raw, "horizon", positive=True)
    sample_every = _integer(raw, "sample_every", 1, 1)
    n_steps = round(horizon / dt)
    if abs(n_steps * dt - horizon) > 1e-9 * max(1.0, horizon):
        raise ConfigError("horizon", f"must be a multiple of dt = {dt!r}")
    if n_steps % sample_every:
        raise ConfigError("sample_every", "must divide the number of steps horizon/dt")
    trajectories = _integer(raw, "trajectories", 1, 1)
    if engine == "lindblad" and trajectories != 1:
        raise ConfigError("trajectories", "the lindblad engine is deterministic; use 1")
    seed0 = _integer(raw, "seed0", 0, 0)
    workers = _integer(raw, "workers", 1, 1)

    n0 = init.get("n", 0) if init["kind"] == "fock" else init.get("re", 0.0) ** 2 + init.get("im", 0.0) ** 2
    dim = _integer(raw, "dim", default_dim(n0, params.nbar), 2)
    if init["kind"] == "fock" and init["n"] >= dim:
        raise ConfigError("initial_state.n", f"must be < dim = {dim}")

    exact = raw.get("exact", False)
    if not isinstance(exact, bool):
        raise ConfigError("exact", "must be true or false")
    scheme = raw.get("scheme", "euler")
    if scheme not in ("euler", "split"):
        raise ConfigError("scheme", f"must be 'euler' or 'split', got {scheme!r}")
    noise = raw.get("noise", "gaussian")
    if noise not in ("gaussian", "binary"):
        raise ConfigError("noise", f"must be 'gaussian' or 'binary', got {noise!r}")
    poisson = raw.get("poisson", False)
    if not isinstance(poisson, bool):
        raise ConfigError("poisson", "must be true or false")

    out = raw.get("outputs", {})
    if not isinstance(out, dict):
        raise ConfigError("outputs", "must be an object")
    bad = sorted(set(out) - OUTPUT_KEYS)
    if bad:
        raise ConfigError(f"outputs.{bad[0]}", "unknown key")
    outputs = {
        "trajectory": bool(out.get("trajectory", True)),
        "density": bool(out.get("density", True)),
        "qgrid_times": out.get("qgrid_times", [0.0, horizon]),
        "qgrid_extent": _number(out, "qgrid_extent", 6.0, positive=True),
        "qgrid_points": _integer(out, "qgrid_points", 97, 2),
        "burn_in": _number(out, "burn_in", 10.0 / params.gamma, nonneg=True),
    }
    times = outputs["qgrid_times"]
    if not isinstance(times, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in times):
        raise ConfigError("outputs.qgrid_times", "must be a list of numbers")
    sample_dt = dt * sample_every
    for x in times:
        k = round(x / sample_dt)
        if x < 0 or x > horizon + 1e-12 or abs(k * sample_dt - x) > 1e-9 * max(1.0, horizon):
            raise ConfigError("outputs.qgrid_times", f"{x!r} is not on the sample grid")

    return ExperimentConfig(engine, init, dim, params, dt, horizon, sample_every, trajectories,
                            seed0, exact, scheme, noise, poisson, workers, outputs, dict(raw))


def load_config(path) -> tuple[ExperimentConfig, bytes]:
    """Read and validate a JSON file; also returns its raw bytes."""
    try:
        with open(path, "rb") as f:
            data = f.read()
    except OSError as e:
        raise ConfigError("--config", f"cannot read {path}: {e.strerror}") from None
    try:
        raw = json.loads(data)
    except json.JSONDecodeError as e:
        raise ConfigError("--config", f"invalid JSON: {e}") from None
    return parse_config(raw), data


def apply_overrides(cfg: ExperimentConfig, engine=None, seed0=None, workers=None):
    if engine is None and seed0 is None and workers is None:
        return cfg
    return cfg.with_overrides(engine, seed0, workers)
