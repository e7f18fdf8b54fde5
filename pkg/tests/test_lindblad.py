import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cavity_unravel.errors import DomainError, NumericalAbort
from cavity_unravel.fock import FieldState, ReservoirParams, make_coherent, make_fock
from cavity_unravel.lindblad import (
    DensityMatrix,
    DensitySeries,
    density_observables,
    evolve_master,
    from_pure,
    lindblad_rhs,
    step_halving_error,
    thermal_state,
    trace_distance,
)


def dense_rhs(rho, gamma, nbar):
    """Reference generator written with explicit matrix products."""
    d = rho.shape[0]
    a = np.diag(np.sqrt(np.arange(1, d)), 1).astype(complex)
    ad = a.conj().T

    def diss(c):
        cd = c.conj().T
        return c @ rho @ cd - 0.5 * (cd @ c @ rho + rho @ cd @ c)

    return gamma * (1 + nbar) * diss(a) + gamma * nbar * diss(ad)


def random_density(seed, dim, rank=3):
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    r = g @ g.conj().T
    return r / np.trace(r).real


def test_from_pure():
    r = from_pure(make_fock(0, 4)).entries
    assert r[0, 0] == 1 and np.sum(np.abs(r)) == 1
    r = from_pure(FieldState(np.array([1, 1, 0]) / math.sqrt(2))).entries
    assert np.allclose(r[:2, :2], 0.5) and np.allclose(r[2], 0)
    assert abs(from_pure(make_coherent(1, 30)).purity() - 1) < 1e-10


def test_density_matrix_validation():
    with pytest.raises(DomainError):
        DensityMatrix(np.zeros((2, 3)))
    bad = DensityMatrix(np.diag([1.2, -0.2]))
    assert any("eigenvalue" in v for v in bad.violations())
    with pytest.raises(NumericalAbort):
        bad.check()
    assert DensityMatrix(np.diag([0.5, 0.5])).violations() == []
    assert DensityMatrix(np.array([[0.5, 0.1], [0.0, 0.5]])).violations()


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.integers(2, 25), st.floats(0.1, 3), st.floats(0, 4))
def test_rhs_matches_dense_reference(seed, dim, gamma, nbar):
    rho = random_density(seed, dim)
    p = ReservoirParams(gamma, nbar)
    got = lindblad_rhs(DensityMatrix(rho), p)
    assert np.max(np.abs(got - dense_rhs(rho, gamma, nbar))) < 1e-12
    assert abs(np.trace(got)) < 1e-10
    assert np.max(np.abs(got - got.conj().T)) < 1e-12


def test_rhs_examples():
    p = ReservoirParams(1.0, 2.0)
    assert np.max(np.abs(lindblad_rhs(thermal_state(2.0, 40), p)[:-1, :-1])) < 1e-10
    n = np.arange(10)
    d1 = lindblad_rhs(from_pure(make_fock(1, 10)), ReservoirParams(1.0, 0.0))
    assert abs(np.real(np.diag(d1)) @ n + 1) < 1e-12
    d0 = lindblad_rhs(from_pure(make_fock(0, 10)), ReservoirParams(1.0, 2.0))
    assert abs(np.real(np.diag(d0)) @ n - 2) < 1e-12


def test_thermal_state():
    assert thermal_state(0.0, 6).entries[0, 0] == 1
    assert abs(thermal_state(3.0, 200).entries[0, 0] - 0.25) < 1e-15
    assert abs(thermal_state(1.0, 40).trace() - 1) < 1e-10


def test_trace_distance():
    r = from_pure(make_coherent(0.7, 12))
    assert trace_distance(r, r) == 0
    assert abs(trace_distance(from_pure(make_fock(0, 3)), from_pure(make_fock(1, 3))) - 1) < 1e-15
    mix = DensityMatrix(np.diag([0.5, 0.5, 0]))
    assert abs(trace_distance(from_pure(make_fock(0, 3)), mix) - 0.5) < 1e-15
    with pytest.raises(DomainError):
        trace_distance(from_pure(make_fock(0, 3)), from_pure(make_fock(0, 4)))


def test_thermal_fixed_point():
    rho0 = thermal_state(2.0, 40)
    out = evolve_master(rho0, ReservoirParams(1.0, 2.0), 1e-3, 5000, sample_every=1000)
    assert trace_distance(out[-1], rho0) <= 1e-8
    assert np.max(np.abs(out.rho - rho0.entries)) < 1e-8


@pytest.mark.parametrize("n0,nbar,horizon", [(3, 3.0, 10.0), (0, 2.0, 2.0), (2, 0.0, 1.0)])
def test_moment_law(n0, nbar, horizon):
    dim = 40 if nbar < 3 else 60
    psi = make_coherent(math.sqrt(n0), dim) if n0 == 2 else make_fock(n0, dim)
    out = evolve_master(from_pure(psi), ReservoirParams(1.0, nbar), 1e-3, int(round(horizon / 1e-3)),
                        sample_every=100)
    n = density_observables(out.rho)["n_mean"]
    want = nbar + (n0 - nbar) * np.exp(-out.t)
    assert np.max(np.abs(n - want) / np.maximum(want, 1e-300)) < 1e-6


def test_coherent_decay_example():
    out = evolve_master(from_pure(make_coherent(2, 40)), ReservoirParams(1.0, 0.0), 1e-3, 1000)
    assert abs(density_observables(out.rho[-1])["n_mean"] - 4 * math.exp(-1)) < 1e-6


def test_first_moment_finite_difference():
    p = ReservoirParams(1.0, 0.5)
    out = evolve_master(from_pure(make_coherent(math.sqrt(3), 30)), p, 1e-3, 2000, sample_every=10)
    n = density_observables(out.rho)["n_mean"]
    h = out.t[1] - out.t[0]
    deriv = (n[2:] - n[:-2]) / (2 * h)
    law = -p.gamma * n[1:-1] + p.gamma * p.nbar
    # central difference error is O(h^2) with h = 0.01
    assert np.max(np.abs(deriv - law)) < 1e-4


def test_invariants_hold_along_run():
    p = ReservoirParams(1.0, 1.0)
    out = evolve_master(from_pure(make_coherent(1 + 1j, 30)), p, 2e-3, 1000, sample_every=50)
    for r in out:
        assert r.violations() == []
        assert abs(r.trace() - 1) <= 1e-9


def test_unstable_step_aborts_with_diagnostic():
    p = ReservoirParams(1.0, 2.0)
    with pytest.warns(Warning):
        with pytest.raises(NumericalAbort, match="invariant"):
            evolve_master(from_pure(make_fock(3, 40)), p, 0.2, 200)


def test_step_halving_error_is_small():
    p = ReservoirParams(1.0, 0.5)
    assert step_halving_error(from_pure(make_coherent(1.5, 30)), p, 1e-2, 100) < 1e-8


def test_series_exports(tmp_path):
    p = ReservoirParams(1.0, 0.5)
    out = evolve_master(from_pure(make_coherent(1.0, 12)), p, 1e-2, 20, sample_every=10)
    out.to_json(tmp_path / "d.json")
    back = DensitySeries.from_json(tmp_path / "d.json")
    assert np.array_equal(back.t, out.t) and np.array_equal(back.rho, out.rho)
    out.to_csv(tmp_path / "d.csv")
    lines = (tmp_path / "d.csv").read_text().splitlines()
    assert lines[0] == "t,n_mean,var_x1,var_x2" and len(lines) == 4
    assert out.at(0.1).dim == 12
    with pytest.raises(DomainError):
        out.at(0.05)
