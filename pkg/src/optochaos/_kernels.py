"""Compiled inner loops for the mean-field equations.

Parameter vector layout (all rad/us)::

    0 delta1   1 delta2   2 gamma1   3 gamma2   4 gamma_f
    5 mech_damping1       6 mech_damping2
    7 omega1   8 omega2   9 g1      10 g2
    11 drive1 real   12 drive2 real   13 drive1 imag   14 drive2 imag
"""
import numpy as np
from numba import njit

N_PARAMS = 15


@njit(cache=True)
def rhs(y, p):
    a1 = y[0]
    a2 = y[1]
    b1 = y[2]
    b2 = y[3]
    sg1 = np.sqrt(p[2])
    sg2 = np.sqrt(p[3])
    sgf = np.sqrt(p[4])
    k1 = 0.5 * (sg1 + sgf) ** 2
    n1 = a1.real * a1.real + a1.imag * a1.imag
    n2 = a2.real * a2.real + a2.imag * a2.imag
    out = np.empty(4, np.complex128)
    out[0] = -1j * p[0] * a1 - k1 * a1 + (p[11] + 1j * p[13]) - sg2 * sgf * a2
    out[1] = (-1j * p[1] * a2 - 0.5 * p[3] * a2 - 1j * p[10] * a2 * (2.0 * b2.real)
              + (p[12] + 1j * p[14]) - sg1 * sg2 * a1)
    out[2] = -1j * p[7] * b1 - 1j * p[9] * n1 * b1 - 0.5 * p[5] * b1
    out[3] = -1j * p[8] * b2 - 1j * p[10] * n2 - 0.5 * p[6] * b2
    return out


@njit(cache=True)
def rk4_step(y, p, dt):
    k1 = rhs(y, p)
    k2 = rhs(y + 0.5 * dt * k1, p)
    k3 = rhs(y + 0.5 * dt * k2, p)
    k4 = rhs(y + dt * k3, p)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@njit(cache=True)
def _finite(y):
    for k in range(y.shape[0]):
        if not (np.isfinite(y[k].real) and np.isfinite(y[k].imag)):
            return False
    return True


@njit(cache=True)
def integrate_fixed(y0, p, dt, n_steps, n_skip, stride):
    """Classical RK4; keeps every ``stride``-th state from step ``n_skip`` on.

    Returns ``(samples, fail_step)``; ``fail_step`` is -1 on success.
    """
    n_out = (n_steps - n_skip) // stride + 1
    out = np.empty((n_out, 4), np.complex128)
    y = y0.copy()
    j = 0
    if n_skip == 0:
        out[0] = y
        j = 1
    for i in range(1, n_steps + 1):
        y = rk4_step(y, p, dt)
        if not _finite(y):
            return out[:j], i
        if i >= n_skip and (i - n_skip) % stride == 0:
            out[j] = y
            j += 1
    return out, -1


@njit(cache=True)
def _distance(x, y):
    s = 0.0
    for k in range(x.shape[0]):
        d = x[k] - y[k]
        s += d.real * d.real + d.imag * d.imag
    return np.sqrt(s)


@njit(cache=True)
def benettin(y0, p, dt, steps_per_renorm, n_transient, n_measure, d0):
    """Two-trajectory largest Lyapunov exponent.

    Returns ``(sum of log growth over measured intervals, fail_interval)``.
    """
    y = y0.copy()
    z = y0.copy()
    # fixed perturbation direction: equal weight on every real coordinate
    step = d0 / np.sqrt(2.0 * y.shape[0])
    for k in range(z.shape[0]):
        z[k] = z[k] + step * (1.0 + 1.0j)
    total = 0.0
    for r in range(n_transient + n_measure):
        for _ in range(steps_per_renorm):
            y = rk4_step(y, p, dt)
            z = rk4_step(z, p, dt)
        if not (_finite(y) and _finite(z)):
            return total, r
        d = _distance(y, z)
        if r >= n_transient:
            total += np.log(d / d0)
        if d == 0.0:
            for k in range(z.shape[0]):
                z[k] = y[k] + step * (1.0 + 1.0j)
        else:
            z = y + (z - y) * (d0 / d)
    return total, -1
