"""Truncated Fock-space states, ladder actions and scalar observables.

States live in the number basis ``|0>, ..., |D-1>``. Ladder operators are the
truncated ``D x D`` matrices, so ``a a^dagger`` has a zero in its last
diagonal entry. Observables are evaluated with the untruncated algebra, which
is exact for any vector supported on the truncated space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ContractError, DomainError

#: Tolerance on the squared norm before a state counts as unnormalized.
NORM_TOL = 1e-9


@dataclass(frozen=True)
class FieldState:
    """Pure state of the cavity mode in a truncated Fock space.

    Attributes
    ----------
    amplitudes : numpy.ndarray
        Complex amplitudes ``c_0 ... c_{D-1}``. Stored as a read-only copy.
    leak : float
        Probability mass lost through the truncation edge so far. Pure
        bookkeeping; it never feeds back into the dynamics.
    """

    amplitudes: np.ndarray
    leak: float = 0.0

    def __post_init__(self):
        c = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        if c.shape[0] < 2:
            raise DomainError(f"truncation dimension must be >= 2, got {c.shape[0]}")
        if not self.leak >= 0.0:
            raise DomainError(f"leak must be nonnegative, got {self.leak}")
        c.setflags(write=False)
        object.__setattr__(self, "amplitudes", c)
        object.__setattr__(self, "leak", float(self.leak))

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def normalize(self) -> "FieldState":
        """Return the unit-norm state.

        A state already normalized to within 1e-14 is returned as is, which
        makes the operation exactly idempotent.
        """
        nrm = self.norm()
        if nrm == 0.0:
            raise ContractError("cannot normalize the zero vector")
        if abs(nrm - 1.0) <= 1e-14:
            return self
        return FieldState(self.amplitudes / nrm, self.leak)

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "re": self.amplitudes.real.tolist(),
            "im": self.amplitudes.imag.tolist(),
            "leak": self.leak,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FieldState":
        re = np.asarray(data["re"], dtype=float)
        im = np.asarray(data["im"], dtype=float)
        if re.shape != im.shape or re.shape[0] != int(data["dim"]):
            raise DomainError("inconsistent state record: dim/re/im lengths differ")
        return cls(re + 1j * im, float(data.get("leak", 0.0)))


@dataclass(frozen=True)
class ReservoirParams:
    """Thermal reservoir parameters, optionally with the atomic-beam microphysics.

    ``gamma`` and ``nbar`` are the only fields the master equation and the
    unravelings need. The beam fields are validated against them when present.
    ``model`` is ``"two_level"`` or ``"three_level"`` and selects the relation
    between ``coupling_tau`` and ``gamma``.
    """

    gamma: float
    nbar: float
    r_a: Optional[float] = None
    r_b: Optional[float] = None
    coupling_tau: Optional[float] = None
    epsilon: Optional[float] = None
    model: Optional[str] = None

    def __post_init__(self):
        if not self.gamma > 0:
            raise DomainError(f"gamma must be positive, got {self.gamma}")
        if not self.nbar >= 0:
            raise DomainError(f"nbar must be nonnegative, got {self.nbar}")
        if (self.r_a is None) != (self.r_b is None):
            raise DomainError("r_a and r_b must be given together")
        if self.r_a is not None:
            if self.r_a < 0 or self.r_b <= 0:
                raise DomainError("atom rates must satisfy r_a >= 0, r_b > 0")
            if abs(self.r_a / self.r_b - self.nbar / (1 + self.nbar)) > 1e-12:
                raise DomainError(
                    f"r_a/r_b = {self.r_a / self.r_b!r} does not match "
                    f"nbar/(1+nbar) = {self.nbar / (1 + self.nbar)!r}"
                )
        if self.coupling_tau is not None:
            if self.r_a is None:
                raise DomainError("coupling_tau requires r_a and r_b")
            if self.model not in ("two_level", "three_level"):
                raise DomainError("coupling_tau requires model 'two_level' or 'three_level'")
            expected = beam_gamma(self.r_a, self.r_b, self.coupling_tau, self.model)
            if abs(expected - self.gamma) > 1e-12 * max(1.0, abs(self.gamma)):
                raise DomainError(
                    f"gamma = {self.gamma!r} inconsistent with beam parameters ({expected!r})"
                )
        if self.epsilon is not None and self.epsilon < 0:
            raise DomainError("epsilon must be nonnegative")

    @classmethod
    def from_beam(cls, r_a, r_b, coupling_tau, model="two_level", epsilon=None):
        """Derive ``gamma`` and ``nbar`` from injection rates and coupling."""
        if r_b <= r_a:
            raise DomainError("r_b must exceed r_a (negative temperatures are not modeled)")
        nbar = r_a / (r_b - r_a)
        gamma = beam_gamma(r_a, r_b, coupling_tau, model)
        return cls(gamma, nbar, r_a, r_b, coupling_tau, epsilon, model)


def beam_gamma(r_a, r_b, coupling_tau, model="two_level"):
    """Damping rate produced by an atomic beam: ``(r_b - r_a) (coupling tau)^2``,
    halved for the three-level configuration."""
    if r_b <= r_a:
        raise DomainError("r_b must exceed r_a (negative temperatures are not modeled)")
    g = (r_b - r_a) * coupling_tau**2
    if model == "three_level":
        return g / 2
    if model != "two_level":
        raise DomainError(f"unknown beam model {model!r}")
    return g


def default_dim(n0: float, nbar: float) -> int:
    """Truncation size that keeps coherent and thermal tails negligible.

    The larger of a width rule for the initial state and the size at which the
    Bose-Einstein tail ``(nbar / (1 + nbar))^D`` drops below 1e-10.
    """
    s = n0 + nbar
    dim = max(30, math.ceil(4 * (s + 3 * math.sqrt(s + 1))))
    if nbar > 0:
        dim = max(dim, math.ceil(math.log(1e-10) / math.log(nbar / (1 + nbar))))
    return dim


def make_fock(n: int, dim: int) -> FieldState:
    if not 0 <= n < dim:
        raise DomainError(f"Fock index {n} outside [0, {dim})")
    c = np.zeros(dim, dtype=np.complex128)
    c[n] = 1.0
    return FieldState(c)


def coherent_coefficients(alpha: complex, dim: int) -> np.ndarray:
    """Exact coherent-state amplitudes ``exp(-|a|^2/2) a^n / sqrt(n!)`` for n < dim."""
    c = np.empty(dim, dtype=np.complex128)
    c[0] = math.exp(-abs(alpha) ** 2 / 2)
    for n in range(1, dim):
        c[n] = c[n - 1] * alpha / math.sqrt(n)
    return c


def make_coherent(alpha: complex, dim: int) -> FieldState:
    """Coherent state truncated to ``dim`` levels and renormalized.

    The probability mass of the discarded tail is stored as ``leak``.
    """
    c = coherent_coefficients(complex(alpha), dim)
    kept = float(np.sum(np.abs(c) ** 2))
    return FieldState(c / math.sqrt(kept), max(0.0, 1.0 - kept))


def lower(c: np.ndarray) -> np.ndarray:
    out = np.zeros_like(c)
    out[..., :-1] = np.sqrt(np.arange(1, c.shape[-1])) * c[..., 1:]
    return out


def raise_(c: np.ndarray) -> np.ndarray:
    out = np.zeros_like(c)
    out[..., 1:] = np.sqrt(np.arange(1, c.shape[-1])) * c[..., :-1]
    return out


def apply_ladder(state: FieldState, which: str) -> FieldState:
    """Apply ``a`` (``"lower"``) or ``a^dagger`` (``"raise"``) without normalizing.

    Raising pushes ``sqrt(D) c_{D-1}`` past the cutoff; its squared modulus is
    added to ``leak``.
    """
    c = state.amplitudes
    if which == "lower":
        return FieldState(lower(c), state.leak)
    if which == "raise":
        lost = state.dim * abs(c[-1]) ** 2
        return FieldState(raise_(c), state.leak + lost)
    raise DomainError(f"which must be 'lower' or 'raise', got {which!r}")


def _require_normalized(state: FieldState):
    n2 = float(np.sum(state.populations()))
    if abs(n2 - 1.0) > NORM_TOL:
        raise ContractError(f"state is not normalized (norm^2 = {n2!r})")


def moments(c: np.ndarray) -> dict:
    """Number-basis moments of normalized rows of ``c`` (shape ``(..., D)``).

    Returns ``n``, ``n2``, ``a`` and ``a2`` (expectations of ``a^dagger a``,
    ``(a^dagger a)^2``, ``a`` and ``a^2``) with the leading shape of ``c``.
    """
    c = np.asarray(c)
    d = c.shape[-1]
    ns = np.arange(d, dtype=float)
    p = np.abs(c) ** 2
    cc = np.conj(c)
    return {
        "n": p @ ns,
        "n2": p @ ns**2,
        "a": np.sum(cc[..., :-1] * np.sqrt(ns[1:]) * c[..., 1:], axis=-1),
        "a2": np.sum(cc[..., :-2] * np.sqrt(ns[1:-1] * ns[2:]) * c[..., 2:], axis=-1),
    }


def observables(c: np.ndarray) -> dict:
    """Photon number, localization measures and quadrature statistics.

    Works on a single amplitude vector or a stack of them. Keys: ``n_mean``,
    ``q1``, ``q2``, ``mean_x1``, ``var_x1``, ``mean_x2``, ``var_x2``.
    """
    m = moments(c)
    n, a, a2 = m["n"], m["a"], m["a2"]
    x1 = a.real
    x2 = a.imag
    return {
        "n_mean": n,
        "q1": n - np.abs(a) ** 2,
        "q2": m["n2"] - n**2,
        "mean_x1": x1,
        "var_x1": (2 * a2.real + 2 * n + 1) / 4 - x1**2,
        "mean_x2": x2,
        "var_x2": (2 * n + 1 - 2 * a2.real) / 4 - x2**2,
    }


def expval_number(state: FieldState) -> float:
    _require_normalized(state)
    return float(moments(state.amplitudes)["n"])


def expval_a(state: FieldState) -> complex:
    _require_normalized(state)
    return complex(moments(state.amplitudes)["a"])


def quad_stats(state: FieldState):
    """Means and variances of ``X1 = (a + a^dagger)/2`` and ``X2 = (a - a^dagger)/2i``."""
    _require_normalized(state)
    o = observables(state.amplitudes)
    return (float(o["mean_x1"]), float(o["var_x1"]), float(o["mean_x2"]), float(o["var_x2"]))


def coherence_and_fock_distance(state: FieldState):
    """Return ``(Q1, Q2)``: the variance of ``a`` and of ``a^dagger a``.

    ``Q1`` vanishes on coherent states and ``Q2`` on Fock states.
    """
    _require_normalized(state)
    o = observables(state.amplitudes)
    return float(o["q1"]), float(o["q2"])


def bose_einstein_pmf(nbar, n):
    """Thermal photon-number distribution ``nbar^n / (1 + nbar)^(n+1)``."""
    if nbar < 0:
        raise DomainError(f"nbar must be nonnegative, got {nbar}")
    n = np.asarray(n)
    if nbar == 0:
        out = (n == 0).astype(float)
    else:
        out = np.exp(n * math.log(nbar / (1 + nbar))) / (1 + nbar)
    return float(out) if out.ndim == 0 else out


def overlap(s1: FieldState, s2: FieldState) -> complex:
    """Inner product ``<s1|s2>``."""
    if s1.dim != s2.dim:
        raise DomainError(f"dimension mismatch: {s1.dim} vs {s2.dim}")
    return complex(np.vdot(s1.amplitudes, s2.amplitudes))
