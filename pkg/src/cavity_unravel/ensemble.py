"""Seeded ensembles of independent trajectories.

Members are grouped in fixed-size chunks; each chunk is reduced sequentially
and chunk results are combined in index order. The number of workers decides
only who computes a chunk, never the floating-point result.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .errors import DomainError, NumericalAbort
from .lindblad import DensitySeries
from .records import trajectory_seed

CHUNK = 64
MAX_ABORT_FRACTION = 0.01


def _density_chunk(fn, kwargs, seeds):
    acc = None
    n_ok = 0
    for s in seeds:
        states, ok = fn(seed=s, **kwargs)
        if not ok:
            continue
        term = np.einsum("si,sj->sij", states, states.conj())
        acc = term if acc is None else acc + term
        n_ok += 1
    return acc, n_ok, len(seeds) - n_ok


def _states_chunk(fn, kwargs, seeds):
    out = [fn(seed=s, **kwargs) for s in seeds]
    return [o[0] for o in out], [o[1] for o in out]


def _map_chunks(task, fn, kwargs, m, seed0, workers):
    if m < 1:
        raise DomainError("ensemble size must be >= 1")
    seeds = [trajectory_seed(seed0, k) for k in range(m)]
    chunks = [seeds[i:i + CHUNK] for i in range(0, m, CHUNK)]
    if workers <= 1 or len(chunks) == 1:
        return [task(fn, kwargs, ch) for ch in chunks]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        futures = [ex.submit(task, fn, kwargs, ch) for ch in chunks]
        return [f.result() for f in futures]


def mean_density(fn, kwargs, t, m, seed0, workers=1) -> DensitySeries:
    """Average ``|psi><psi|`` over ``m`` trajectories produced by ``fn``.

    ``fn(seed=..., **kwargs)`` must return ``(states, ok)`` with ``states`` on
    the grid ``t``. Aborted members are excluded; more than 1% aborts raises
    :class:`NumericalAbort`.
    """
    parts = _map_chunks(_density_chunk, fn, kwargs, m, seed0, workers)
    acc = None
    used = aborted = 0
    for part, n_ok, n_bad in parts:
        if part is not None:
            acc = part if acc is None else acc + part
        used += n_ok
        aborted += n_bad
    if aborted > MAX_ABORT_FRACTION * m:
        raise NumericalAbort(f"{aborted} of {m} trajectories aborted")
    return DensitySeries(np.asarray(t), acc / used, aborted, used)


def collect_states(fn, kwargs, m, seed0, workers=1):
    """Stack member states into shape ``(m, samples, D)`` plus an ok mask.

    Aborted members keep only the samples they reached, zero-padded.
    """
    parts = _map_chunks(_states_chunk, fn, kwargs, m, seed0, workers)
    states = [s for p in parts for s in p[0]]
    ok = np.array([o for p in parts for o in p[1]])
    n_samples = max(s.shape[0] for s in states)
    out = np.zeros((m, n_samples, states[0].shape[1]), dtype=np.complex128)
    for k, s in enumerate(states):
        out[k, : s.shape[0]] = s
    return out, ok
