"""Quantum-memory fidelity for Gaussian inputs stored in a damped mechanical mode.

The stored mode obeys ``db = -(nu + gamma1)/2 b dt - sqrt(nu) dA - sqrt(gamma1) dB``
where ``A`` carries the (possibly squeezed) input light and ``B`` the thermal
bath with occupancy ``n``.  Covariances are in quadrature units where the
vacuum is ``I/2``.

Two independent routes to the stored state are provided: closed forms for the
steady state and fidelity, and an RK4 integrator for the Lyapunov equation
``V' = A V + V A^T + gamma1 (n + 1/2) I + nu Lambda``.

Rates only appear as ratios, so any consistent angular unit works; the rest of
the package uses rad/us.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import constants

from .errors import DomainError, StepSizeError
from .units import angular_to_hz

# RK4 steps per unit of (nu + gamma1) * t when the caller does not fix the step
_STEPS_PER_DECAY = 20
# real-axis stability limit of classical RK4 is 2.785; the drift of V is -(nu+gamma1)
_MAX_STABLE = 2.5


@dataclass(frozen=True)
class MemoryParams:
    """Transfer rate ``nu``, mechanical damping ``gamma1`` and bath occupancy ``n``."""

    nu: float
    gamma1: float
    n: float

    def __post_init__(self):
        if self.nu < 0 or self.gamma1 < 0 or self.n < 0:
            raise DomainError("nu, gamma1 and n must be non-negative")
        if not self.nu + self.gamma1 > 0:
            raise DomainError("nu + gamma1 must be positive")

    @property
    def total_rate(self) -> float:
        return self.nu + self.gamma1


@dataclass(frozen=True)
class SqueezingSpec:
    """Minimum-uncertainty squeezing: ``M_sq**2 = N (N + 1)``, ``e**s = 2 M_sq + 2 N + 1``."""

    s: float
    N: float
    M_sq: float

    def __post_init__(self):
        if self.N < 0:
            raise DomainError("N must be non-negative")
        scale = max(1.0, self.N * (self.N + 1))
        if abs(self.M_sq ** 2 - self.N * (self.N + 1)) > 1e-9 * scale:
            raise DomainError("M_sq**2 must equal N (N + 1)")
        arg = 2 * self.M_sq + 2 * self.N + 1
        # tolerance follows the cancellation in arg for negative s
        cond = (4 * self.N + 2) / arg if arg > 0 else math.inf
        if not arg > 0 or abs(math.log(arg) - self.s) > 1e-12 * max(1.0, abs(self.s)) * cond:
            raise DomainError("s inconsistent with (N, M_sq)")


def effective_damping(m_factor: float, gamma1: float) -> float:
    """Damping left after decoupling: ``m_factor * gamma1``."""
    if not 0 <= m_factor <= 1:
        raise DomainError(f"decoupling factor must lie in [0, 1], got {m_factor}")
    return m_factor * gamma1


def nu_from_physical(g_s: float, alpha_d_mag: float, gamma_s: float) -> float:
    """Effective transfer rate ``(g_s |alpha_d|)**2 / gamma_s``."""
    if not gamma_s > 0:
        raise DomainError("gamma_s must be positive")
    return (g_s * alpha_d_mag) ** 2 / gamma_s


def thermal_occupancy(temperature: float, omega1: float) -> float:
    """High-temperature occupancy ``k_B T / (hbar omega1)``; ``omega1`` in rad/s."""
    if temperature < 0 or not omega1 > 0:
        raise DomainError("need temperature >= 0 and omega1 > 0")
    return constants.k * temperature / (constants.hbar * omega1)


def squeezing_from_s(s: float) -> SqueezingSpec:
    r = 0.5 * s
    return SqueezingSpec(s=s, N=math.sinh(r) ** 2, M_sq=math.sinh(r) * math.cosh(r))


def input_covariance(s: float) -> np.ndarray:
    return 0.5 * np.diag([math.exp(s), math.exp(-s)])


def lambda_matrix(spec: SqueezingSpec) -> np.ndarray:
    """Input-noise matrix; diagonal because ``M_sq`` is real."""
    base = 2 * spec.N + 1
    return 0.5 * np.diag([base + 2 * spec.M_sq, base - 2 * spec.M_sq])


def validate_covariance(v, physical: bool = True) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (2, 2):
        raise DomainError("covariance must be 2x2")
    if abs(v[0, 1] - v[1, 0]) > 1e-12 * max(1.0, np.abs(v).max()):
        raise DomainError("covariance must be symmetric")
    if np.linalg.eigvalsh(v).min() <= 0:
        raise DomainError("covariance must be positive definite")
    if physical and np.linalg.det(v) < 0.25 * (1 - 1e-12):
        raise DomainError("covariance violates the uncertainty bound det >= 1/4")
    return v


def steady_state_mean(params: MemoryParams, alpha_d: complex) -> complex:
    return -2 * math.sqrt(params.nu) * alpha_d / params.total_rate


def _drive(params: MemoryParams, lam) -> np.ndarray:
    return params.gamma1 * (params.n + 0.5) * np.eye(2) + params.nu * np.asarray(lam)


def steady_state_covariance(params: MemoryParams, lam) -> np.ndarray:
    """Fixed point of the Lyapunov equation (the drift is scalar)."""
    return _drive(params, lam) / params.total_rate


def evolve_covariance(params: MemoryParams, lam, v0, t: float, step: float | None = None):
    """Integrate the Lyapunov equation with RK4 from ``v0`` for a time ``t``.

    Raises:
        StepSizeError: ``step * (nu + gamma1)`` exceeds the RK4 stability range.
    """
    if t < 0:
        raise DomainError("t must be non-negative")
    v = np.array(v0, dtype=float)
    if t == 0:
        return v
    k = params.total_rate
    if step is None:
        n_steps = max(1, math.ceil(t * k * _STEPS_PER_DECAY))
    else:
        if step <= 0 or step * k > _MAX_STABLE:
            raise StepSizeError(f"step {step} outside (0, {_MAX_STABLE}/(nu+gamma1)]")
        n_steps = max(1, math.ceil(t / step))
    h = t / n_steps
    a = -0.5 * k * np.eye(2)
    d = _drive(params, lam)

    def rate(x):
        return a @ x + x @ a.T + d

    for _ in range(n_steps):
        k1 = rate(v)
        k2 = rate(v + 0.5 * h * k1)
        k3 = rate(v + 0.5 * h * k2)
        k4 = rate(v + h * k3)
        v = v + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        v = 0.5 * (v + v.T)
    return v


def fidelity_squeezed(params: MemoryParams, s: float) -> float:
    """Overlap of a pure squeezed input with the stored steady state (product form)."""
    ratio = params.gamma1 / (2 * params.total_rate)
    two_n1 = 2 * params.n + 1
    prod = 1.0
    for j in (s, -s):
        ej = math.exp(j)
        prod *= ej + ratio * (two_n1 - ej)
    return prod ** -0.5


def fidelity_from_covariances(v_inf, v0) -> float:
    return float(1 / math.sqrt(np.linalg.det(np.asarray(v_inf) + np.asarray(v0))))


def fidelity_squeezed_det(params: MemoryParams, s: float) -> float:
    """Same fidelity via ``1/sqrt(det(V_inf + V_0))``."""
    lam = lambda_matrix(squeezing_from_s(s))
    return fidelity_from_covariances(steady_state_covariance(params, lam), input_covariance(s))


def fidelity_coherent(params: MemoryParams) -> float:
    return 1 / (1 + params.gamma1 * params.n / params.total_rate)


SURFACE_HEADER = ("nu_hz", "n", "s", "fidelity")


def fidelity_surface(nu_grid: Sequence[float], n_grid: Sequence[float],
                     s_grid: Sequence[float], gamma1: float) -> np.ndarray:
    """Rows ``(nu, n, s, F)`` in row-major (nu, n, s) order."""
    if not (len(nu_grid) and len(n_grid) and len(s_grid)):
        raise DomainError("grids must be non-empty")
    rows = []
    for nu in nu_grid:
        for n in n_grid:
            params = MemoryParams(float(nu), gamma1, float(n))
            for s in s_grid:
                rows.append((float(nu), float(n), float(s), fidelity_squeezed(params, float(s))))
    return np.array(rows, dtype=float)


def write_surface_csv(path, table: np.ndarray):
    """CSV with ``nu`` converted from rad/us to ``nu/2pi`` in Hz."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SURFACE_HEADER)
        for nu, n, s, fid in table:
            w.writerow(["%.17g" % angular_to_hz(nu), "%.17g" % n, "%.17g" % s,
                        "%.17g" % fid])
