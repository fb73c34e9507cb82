"""Exponential-midpoint stepper for ``H(t) = H0 + t H1``.

Every kernel here is plain numpy that numba can compile; ``_jit.njit`` decides
at import time which of the two is used.
"""

import numpy as np

from ._jit import njit

OK = 0
STEPS_EXHAUSTED = 1

# step controller
SAFETY = 0.9
GROW_MAX = 4.0
SHRINK_MIN = 0.2


@njit(cache=True, nogil=True)
def expm_hermitian(h, dt):
    """``exp(-i dt H)`` for Hermitian ``H`` by eigendecomposition."""
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * dt * w)) @ v.conj().T


@njit(cache=True, nogil=True)
def expm_hermitian_apply(h, dt, psi):
    w, v = np.linalg.eigh(h)
    c = v.conj().T @ psi
    return v @ (np.exp(-1j * dt * w) * c)


@njit(cache=True, nogil=True)
def midpoint_step(h0, h1, t, dt, psi):
    """One second-order Magnus step from ``t`` to ``t + dt``."""
    return expm_hermitian_apply(h0 + (t + 0.5 * dt) * h1, dt, psi)


@njit(cache=True, nogil=True)
def _norm2(v):
    s = 0.0
    for i in range(v.shape[0]):
        s += v[i].real * v[i].real + v[i].imag * v[i].imag
    return np.sqrt(s)


@njit(cache=True, nogil=True)
def evolve_affine(h0, h1, psi0, t0, t1, samples, tol, dt0, dt_max, max_steps, fixed):
    """Propagate ``psi0`` from ``t0`` to ``t1`` and record it at ``samples``.

    Adaptive mode compares one step of size ``dt`` with two of size ``dt / 2``;
    the two-half-step result is kept and the Richardson estimate
    ``|diff| / 3`` of its local error is held below ``tol``. Fixed mode takes
    plain steps of size ``dt0``. States at sample times inside a step come
    from an extra midpoint sub-step out of that step's start.

    Returns ``(states, n_recorded, n_steps, n_rejected, status, t_reached)``.
    """
    n = samples.shape[0]
    dim = psi0.shape[0]
    out = np.zeros((n, dim), dtype=np.complex128)
    psi = psi0.copy()
    t = t0
    span = abs(t1 - t0)
    eps = 1e-13 * max(span, abs(t0), abs(t1), 1.0)
    k = 0
    while k < n and samples[k] <= t + eps:
        out[k] = psi
        k += 1
    dt = min(dt0, dt_max)
    steps = 0
    rejected = 0
    while t1 - t > eps:
        if steps >= max_steps:
            return out, k, steps, rejected, STEPS_EXHAUSTED, t
        last = dt >= t1 - t - eps
        if last:
            dt = t1 - t
        if fixed:
            new = midpoint_step(h0, h1, t, dt, psi)
            err = 0.0
        else:
            full = midpoint_step(h0, h1, t, dt, psi)
            half = midpoint_step(h0, h1, t, 0.5 * dt, psi)
            new = midpoint_step(h0, h1, t + 0.5 * dt, 0.5 * dt, half)
            err = _norm2(full - new) / 3.0
            if err > tol:
                factor = SAFETY * (tol / err) ** (1.0 / 3.0)
                dt *= max(SHRINK_MIN, factor)
                rejected += 1
                continue
        t_next = t1 if last else t + dt
        while k < n and samples[k] <= t_next + eps:
            if samples[k] >= t_next - eps:
                out[k] = new
            else:
                out[k] = midpoint_step(h0, h1, t, samples[k] - t, psi)
            k += 1
        psi = new
        t = t_next
        steps += 1
        if not fixed:
            if err > 0.0:
                factor = min(GROW_MAX, SAFETY * (tol / err) ** (1.0 / 3.0))
            else:
                factor = GROW_MAX
            dt = min(dt * max(factor, SHRINK_MIN), dt_max)
    return out, k, steps, rejected, OK, t
