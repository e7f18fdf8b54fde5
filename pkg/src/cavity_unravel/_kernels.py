"""Compiled per-step kernels and trajectory loops.

Every kernel updates an amplitude vector ``c`` in place, using ``w`` as
scratch, and returns a status code. The public single-step functions and the
compiled loops call the same kernels, so a trajectory stepped by hand and one
run in a loop agree bit for bit.
"""

import numpy as np
from numba import njit

OK = 0
LEAK = 1
JUMP_PROB = 2
NORM = 3

STATUS_TEXT = {
    OK: "ok",
    LEAK: "truncation leak exceeded the limit",
    JUMP_PROB: "jump (or flip) probability per step too large",
    NORM: "norm collapsed below 1e-12 before renormalization",
}

NO_JUMP, DOWN, UP = 0, 1, 2

# detection outcomes of a beam atom
DET_A, DET_B, DET_BC_PLUS, DET_BC_MINUS = 0, 1, 2, 3


@njit(cache=True)
def _abs2(z):
    return z.real * z.real + z.imag * z.imag


@njit(cache=True)
def _renormalize(c, w):
    s = 0.0
    for n in range(w.shape[0]):
        s += _abs2(w[n])
    nrm = np.sqrt(s)
    if nrm < 1e-12:
        return NORM
    for n in range(w.shape[0]):
        c[n] = w[n] / nrm
    return OK


@njit(cache=True)
def _number_moments(c):
    """<n>, truncated <a a^dagger> and Re<a>."""
    d = c.shape[0]
    nn = 0.0
    up = 0.0
    ar = 0.0
    for n in range(d):
        p = _abs2(c[n])
        nn += n * p
        if n < d - 1:
            up += (n + 1) * p
            ar += np.sqrt(n + 1.0) * (c[n].real * c[n + 1].real + c[n].imag * c[n + 1].imag)
    return nn, up, ar


@njit(cache=True)
def _lower(c, w):
    d = c.shape[0]
    for n in range(d - 1):
        w[n] = np.sqrt(n + 1.0) * c[n + 1]
    w[d - 1] = 0.0


@njit(cache=True)
def _raise(c, w):
    """w = a^dagger c; returns the squared norm pushed past the cutoff."""
    d = c.shape[0]
    w[0] = 0.0
    for n in range(1, d):
        w[n] = np.sqrt(n * 1.0) * c[n - 1]
    return d * _abs2(c[d - 1])


@njit(cache=True)
def _leak_fraction(w, lost):
    kept = 0.0
    for n in range(w.shape[0]):
        kept += _abs2(w[n])
    return lost / (kept + lost) if kept + lost > 0 else 0.0


@njit(cache=True)
def mc_step(c, w, leak, k_dn, k_up, factor, exact, dt, u, max_prob):
    """One quantum-jump step. Returns ``(kind, leak, status)``.

    ``factor`` holds the diagonal no-jump propagator: ``1 - dt g_n / 2`` in the
    first-order scheme, ``exp(-dt g_n / 2)`` in the exact one.
    """
    d = c.shape[0]
    nn, up, _ = _number_moments(c)
    r_dn = k_dn * nn
    r_up = k_up * up
    if exact:
        s = 0.0
        for n in range(d):
            s += factor[n] * factor[n] * _abs2(c[n])
        pj = 1.0 - s
        tot = r_dn + r_up
        if tot > 0.0 and pj > 0.0:
            p_dn = pj * r_dn / tot
            p_up = pj * r_up / tot
        else:
            p_dn = 0.0
            p_up = 0.0
    else:
        p_dn = r_dn * dt
        p_up = r_up * dt
    if p_dn + p_up >= max_prob:
        return NO_JUMP, leak, JUMP_PROB
    for n in range(d):
        w[n] = factor[n] * c[n]
    # a jump lands at the end of the step, after the no-jump contraction
    if u < p_dn:
        c[:] = w
        _lower(c, w)
        kind = DOWN
    elif u < p_dn + p_up:
        c[:] = w
        lost = _raise(c, w)
        leak += _leak_fraction(w, lost)
        kind = UP
    else:
        kind = NO_JUMP
    return kind, leak, _renormalize(c, w)


@njit(cache=True)
def mcwf_loop(c0, leak0, k_dn, k_up, factor, exact, dt, n_steps, sample_every, u,
              leak_max, max_prob):
    d = c0.shape[0]
    n_samples = n_steps // sample_every + 1
    samples = np.zeros((n_samples, d), dtype=np.complex128)
    leaks = np.zeros(n_samples)
    kinds = np.zeros(n_steps, dtype=np.int8)
    c = c0.copy()
    w = np.empty_like(c)
    leak = leak0
    samples[0] = c
    leaks[0] = leak
    j = 1
    for k in range(n_steps):
        kind, leak, status = mc_step(c, w, leak, k_dn, k_up, factor, exact, dt, u[k], max_prob)
        kinds[k] = kind
        if status == OK and leak > leak_max:
            status = LEAK
        if status != OK:
            return samples[:j], leaks[:j], kinds[:k + 1], status, k
        if (k + 1) % sample_every == 0:
            samples[j] = c
            leaks[j] = leak
            j += 1
    return samples, leaks, kinds, OK, n_steps


@njit(cache=True)
def hssde_step(c, w, leak, half_g, efac, k_dn, k_up, dt, dw1, dw2, split):
    """One homodyne step on the unnormalized vector, then renormalization.

    Returns ``(leak, status)``. With ``split`` the diagonal drift is applied
    as the exact exponential ``efac`` after the ladder terms.
    """
    d = c.shape[0]
    _, _, x1 = _number_moments(c)
    z1 = 2.0 * k_dn * x1 * dt + np.sqrt(k_dn) * dw1
    z2 = 2.0 * k_up * x1 * dt + np.sqrt(k_up) * dw2
    for n in range(d):
        v = c[n]
        if not split:
            v -= half_g[n] * c[n]
        if n < d - 1:
            v += z1 * np.sqrt(n + 1.0) * c[n + 1]
        if n >= 1:
            v += z2 * np.sqrt(n * 1.0) * c[n - 1]
        if split:
            v *= efac[n]
        w[n] = v
    leak += z2 * z2 * d * _abs2(c[d - 1])
    return leak, _renormalize(c, w)


@njit(cache=True)
def hssde_loop(c0, leak0, half_g, efac, k_dn, k_up, dt, n_steps, sample_every, dw, split,
               leak_max):
    d = c0.shape[0]
    n_samples = n_steps // sample_every + 1
    samples = np.zeros((n_samples, d), dtype=np.complex128)
    leaks = np.zeros(n_samples)
    c = c0.copy()
    w = np.empty_like(c)
    leak = leak0
    samples[0] = c
    leaks[0] = leak
    j = 1
    for k in range(n_steps):
        leak, status = hssde_step(c, w, leak, half_g, efac, k_dn, k_up, dt,
                                  dw[k, 0], dw[k, 1], split)
        if status == OK and leak > leak_max:
            status = LEAK
        if status != OK:
            return samples[:j], leaks[:j], status, k
        if (k + 1) % sample_every == 0:
            samples[j] = c
            leaks[j] = leak
            j += 1
    return samples, leaks, OK, n_steps


@njit(cache=True)
def two_level_atom(c, w, leak, excited, lt2, u):
    """Pass of one two-level atom at coupling ``(lambda tau)^2 = lt2``.

    Returns ``(detected, leak, status)``. The flip probability is the squared
    norm of the flip branch and the no-flip probability its complement.
    """
    d = c.shape[0]
    x = 0.5 * lt2
    nn, up, _ = _number_moments(c)
    if lt2 * (up if excited else nn) >= 1.0:
        return DET_A, leak, JUMP_PROB
    if excited:
        if u < lt2 * up:
            lost = _raise(c, w)
            leak += _leak_fraction(w, lost)
            det = DET_B
        else:
            for n in range(d):
                h = n + 1.0 if n < d - 1 else 0.0
                w[n] = (1.0 - x * h) * c[n]
            det = DET_A
    else:
        if u < lt2 * nn:
            _lower(c, w)
            det = DET_A
        else:
            for n in range(d):
                w[n] = (1.0 - x * n) * c[n]
            det = DET_B
    return det, leak, _renormalize(c, w)


@njit(cache=True)
def _eps_plus_a(c, y, eps):
    d = c.shape[0]
    for n in range(d):
        y[n] = eps * c[n]
        if n < d - 1:
            y[n] += np.sqrt(n + 1.0) * c[n + 1]


@njit(cache=True)
def _eps_plus_adag(c, y, sign, eps):
    """y = (sign * eps + a^dagger) c."""
    d = c.shape[0]
    for n in range(d):
        y[n] = sign * eps * c[n]
        if n >= 1:
            y[n] += np.sqrt(n * 1.0) * c[n - 1]
    return d * _abs2(c[d - 1])


@njit(cache=True)
def three_level_branch_probs(c, excited, gt2, eps):
    """Flip-branch probabilities of one three-level atom.

    Superposition-prepared: ``(p_to_a, 0)``. Excited-prepared:
    ``(p_to_bc_plus, p_to_bc_minus)``.
    """
    nn, up, ar = _number_moments(c)
    if not excited:
        return 0.5 * gt2 * (eps * eps + 2.0 * eps * ar + nn), 0.0
    return (0.5 * gt2 * (eps * eps + 2.0 * eps * ar + up),
            0.5 * gt2 * (eps * eps - 2.0 * eps * ar + up))


@njit(cache=True)
def three_level_atom(c, w, y, leak, excited, gt2, eps, u):
    """Pass of one three-level atom, ``(g tau)^2 = gt2``, drive ``eps``.

    Detection is in the basis ``{a, (b+c)/sqrt2, (b-c)/sqrt2}``.
    Returns ``(detected, leak, status)``.
    """
    d = c.shape[0]
    p1, p2 = three_level_branch_probs(c, excited, gt2, eps)
    if p1 + p2 >= 1.0:
        return DET_A, leak, JUMP_PROB
    if not excited:
        if u < p1:
            _eps_plus_a(c, w, eps)
            det = DET_A
        else:
            _eps_plus_a(c, y, eps)
            _eps_plus_adag(y, w, 1.0, eps)
            for n in range(d):
                w[n] = c[n] - 0.25 * gt2 * w[n]
            det = DET_BC_PLUS
    else:
        if u < p1:
            lost = _eps_plus_adag(c, w, 1.0, eps)
            leak += _leak_fraction(w, lost)
            det = DET_BC_PLUS
        elif u < p1 + p2:
            lost = _eps_plus_adag(c, w, -1.0, eps)
            leak += _leak_fraction(w, lost)
            det = DET_BC_MINUS
        else:
            for n in range(d):
                h = n + 1.0 if n < d - 1 else 0.0
                w[n] = (1.0 - 0.5 * gt2 * (eps * eps + h)) * c[n]
            det = DET_A
    return det, leak, _renormalize(c, w)


@njit(cache=True)
def beam_loop(c0, leak0, three_level, coupling2, eps, excited, u, n_before, leak_max):
    """Process atoms in arrival order; ``n_before[j]`` atoms precede sample ``j``."""
    d = c0.shape[0]
    n_atoms = excited.shape[0]
    n_samples = n_before.shape[0]
    samples = np.zeros((n_samples, d), dtype=np.complex128)
    leaks = np.zeros(n_samples)
    detected = np.zeros(n_atoms, dtype=np.int8)
    c = c0.copy()
    w = np.empty_like(c)
    y = np.empty_like(c)
    leak = leak0
    j = 0
    for i in range(n_atoms + 1):
        while j < n_samples and n_before[j] <= i:
            samples[j] = c
            leaks[j] = leak
            j += 1
        if i == n_atoms:
            break
        if three_level:
            det, leak, status = three_level_atom(c, w, y, leak, excited[i], coupling2, eps, u[i])
        else:
            det, leak, status = two_level_atom(c, w, leak, excited[i], coupling2, u[i])
        detected[i] = det
        if status == OK and leak > leak_max:
            status = LEAK
        if status != OK:
            return samples[:j], leaks[:j], detected[:i + 1], status, i
    return samples, leaks, detected, OK, n_atoms
