"""Mean-field dynamics of the two-cavity chaotic feedback loop.

State is ``(alpha1, alpha2, beta1, beta2)``: the classical amplitudes of the
controlled cavity, the controller cavity, the protected membrane mode and
the controller's mechanical mode.  Back-action of ``beta1`` on ``alpha1`` is
neglected, so ``beta1`` is slaved to the control signal
``f(t) = G1 |alpha1(t)|^2``.

Equations (rates in rad/us)::

    a1' = -i D1 a1 - (sqrt(g1) + sqrt(gf))^2 a1 / 2 + e1 - sqrt(g2 gf) a2
    a2' = -i D2 a2 - g2 a2 / 2 - i G2 a2 (b2* + b2) + e2 - sqrt(g1 g2) a1
    b1' = -i W1 b1 - i G1 |a1|^2 b1 - M1 b1 / 2
    b2' = -i W2 b2 - i G2 |a2|^2 - M2 b2 / 2

The drive on ``a1`` enters with ``+e1``.  ``flip_drive1_sign`` reverses it
for sensitivity checks, and the optional ``drive*_phase`` fields rotate
either drive in the complex plane.
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from . import _kernels
from .errors import DivergenceError, DomainError, ResolutionError
from .slh import feedback_network, langevin_linear_drift
from .units import hz_to_angular

# finest admissible step, as a fraction of 1/(fastest rate)
RESOLUTION = 0.05


@dataclass(frozen=True)
class PhysicalParams:
    """Rates of the feedback loop, entered as ``X/2pi`` values in Hz.

    The angular values (rad/us) are computed once at construction and exposed
    as properties without the ``_over_2pi_hz`` suffix, e.g. ``p.delta1``.
    """

    delta1_over_2pi_hz: float
    delta2_over_2pi_hz: float
    gamma1_over_2pi_hz: float
    gamma2_over_2pi_hz: float
    gamma_f_over_2pi_hz: float
    mech_damping1_over_2pi_hz: float
    mech_damping2_over_2pi_hz: float
    omega1_over_2pi_hz: float
    omega2_over_2pi_hz: float
    g1_over_2pi_hz: float
    g2_over_2pi_hz: float
    epsilon1_over_2pi_hz: float
    epsilon2_over_2pi_hz: float
    flip_drive1_sign: bool = False
    drive1_phase: float = 0.0
    drive2_phase: float = 0.0
    _angular: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        values = self.hz_values()
        for name, val in values.items():
            if not math.isfinite(val):
                raise DomainError(f"{name} must be finite")
        for name in ("gamma1", "gamma2", "gamma_f", "mech_damping1", "mech_damping2"):
            if values[f"{name}_over_2pi_hz"] < 0:
                raise DomainError(f"{name} must be non-negative")
        for name in ("omega1", "omega2"):
            if not values[f"{name}_over_2pi_hz"] > 0:
                raise DomainError(f"{name} must be positive")
        for name in ("drive1_phase", "drive2_phase"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        vec = np.array([hz_to_angular(v) for v in values.values()] + [0.0, 0.0], dtype=float)
        e1 = vec[11] * (-1 if self.flip_drive1_sign else 1) * np.exp(1j * self.drive1_phase)
        e2 = vec[12] * np.exp(1j * self.drive2_phase)
        vec[[11, 12, 13, 14]] = e1.real, e2.real, e1.imag, e2.imag
        vec.setflags(write=False)
        object.__setattr__(self, "_angular", vec)

    def hz_values(self) -> dict:
        return {f.name: float(getattr(self, f.name)) for f in dataclasses.fields(self)
                if f.name.endswith("_over_2pi_hz")}

    def replace(self, **changes) -> "PhysicalParams":
        return dataclasses.replace(self, **changes)

    def as_array(self) -> np.ndarray:
        """Parameter vector in the layout of :mod:`optochaos._kernels`."""
        return self._angular

    def fingerprint(self) -> str:
        payload = json.dumps({**self.hz_values(), "flip_drive1_sign": self.flip_drive1_sign,
                              "drive1_phase": self.drive1_phase,
                              "drive2_phase": self.drive2_phase},
                             sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def fastest_rate(self) -> float:
        p = self._angular
        return float(max(abs(p[0]), abs(p[1]), p[3], abs(p[8]), abs(p[7]),
                         0.5 * (math.sqrt(p[2]) + math.sqrt(p[4])) ** 2))

    def max_dt(self) -> float:
        return RESOLUTION / self.fastest_rate()

    def default_dt(self) -> float:
        """Largest ``{1, 2, 5} x 10^k`` step within the resolution limit."""
        limit = self.max_dt()
        exp = math.floor(math.log10(limit))
        for mant in (5, 2, 1):
            if mant * 10.0 ** exp <= limit:
                return mant * 10.0 ** exp
        return 10.0 ** (exp - 1)


def _angular_property(index):
    return property(lambda self: float(self._angular[index]))


for _i, _name in enumerate(("delta1", "delta2", "gamma1", "gamma2", "gamma_f",
                            "mech_damping1", "mech_damping2", "omega1", "omega2",
                            "g1", "g2")):
    setattr(PhysicalParams, _name, _angular_property(_i))
# complex drives, sign flip and phases included
PhysicalParams.epsilon1 = property(lambda self: complex(self._angular[11], self._angular[13]))
PhysicalParams.epsilon2 = property(lambda self: complex(self._angular[12], self._angular[14]))


FIG4_PARAMS = PhysicalParams(
    delta1_over_2pi_hz=0.75e9,
    delta2_over_2pi_hz=0.12e9,
    gamma1_over_2pi_hz=1e6,
    gamma2_over_2pi_hz=0.24e9,
    gamma_f_over_2pi_hz=0.05e6,
    mech_damping1_over_2pi_hz=0.01e6,
    mech_damping2_over_2pi_hz=1.4e6,
    omega1_over_2pi_hz=1e6,
    omega2_over_2pi_hz=0.345e9,
    g1_over_2pi_hz=0.1e6,
    g2_over_2pi_hz=0.1e6,
    epsilon1_over_2pi_hz=6.6e9,
    epsilon2_over_2pi_hz=13.2e9,
)
"""Reference chaotic-feedback operating point (used by ``repro fig4``)."""

FIG4_NO_FEEDBACK = FIG4_PARAMS.replace(gamma_f_over_2pi_hz=0.0)


@dataclass(frozen=True)
class InitialConditions:
    alpha1: complex = 0j
    alpha2: complex = 0j
    beta1: complex = 1 + 0j
    beta2: complex = 0j

    def __post_init__(self):
        for f in dataclasses.fields(self):
            v = complex(getattr(self, f.name))
            if not (math.isfinite(v.real) and math.isfinite(v.imag)):
                raise DomainError(f"initial {f.name} must be finite")
            object.__setattr__(self, f.name, v)

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha1, self.alpha2, self.beta1, self.beta2], dtype=np.complex128)


CSV_HEADER = ["t", "re_a1", "im_a1", "re_a2", "im_a2", "re_b1", "im_b1", "re_b2", "im_b2"]


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Uniformly sampled mean-field solution (times in us)."""

    t0: float
    dt_sample: float
    samples: np.ndarray
    transient_discarded: float
    params_fingerprint: str

    def __post_init__(self):
        if self.samples.ndim != 2 or self.samples.shape[1] != 4:
            raise ValueError("samples must have shape (n, 4)")
        if len(self.samples) < 2:
            raise ValueError("a trajectory needs at least two samples")

    def __len__(self):
        return len(self.samples)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt_sample * np.arange(len(self.samples))

    @property
    def alpha1(self):
        return self.samples[:, 0]

    @property
    def alpha2(self):
        return self.samples[:, 1]

    @property
    def beta1(self):
        return self.samples[:, 2]

    @property
    def beta2(self):
        return self.samples[:, 3]

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_HEADER)
            for t, row in zip(self.times, self.samples):
                writer.writerow(["%.17g" % t] + ["%.17g" % x for z in row
                                                    for x in (z.real, z.imag)])


def read_trajectory_csv(path) -> np.ndarray:
    """Load a trajectory CSV as ``(times, samples)``."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1::2] + 1j * data[:, 2::2]


def mean_field_derivative(state, params: PhysicalParams) -> tuple:
    """Right-hand side of the mean-field equations for one state tuple."""
    y = np.asarray(state, dtype=np.complex128)
    return tuple(complex(v) for v in _kernels.rhs(y, params.as_array()))


def optical_linear_part(params: PhysicalParams):
    """Drift matrix and drive vector of the ``(alpha1, alpha2)`` block at G = 0.

    The drift comes from the composed SLH network, so this is the bridge
    between :mod:`optochaos.slh` and the dynamics.
    """
    net = feedback_network(params.gamma1, params.gamma2, params.gamma_f,
                           params.delta1, params.delta2)
    drift, _ = langevin_linear_drift(net)
    p = params.as_array()
    drive = p[[11, 12]] + 1j * p[[13, 14]]
    return drift, drive


class _NonFinite(Exception):
    pass


def _check_dt(params, dt):
    if not dt > 0:
        raise ResolutionError("dt must be positive")
    if dt > params.max_dt() * (1 + 1e-12):
        raise ResolutionError(
            f"dt = {dt:.3g} us exceeds {RESOLUTION}/fastest rate = {params.max_dt():.3g} us")


def _n_steps(span, dt, what):
    n = round(span / dt)
    if abs(n * dt - span) > 1e-9 * max(span, dt):
        raise DomainError(f"{what} = {span} us is not a multiple of dt = {dt} us")
    return int(n)


def integrate(params: PhysicalParams, init: Optional[InitialConditions] = None,
              t_final: float = 1.0, *, dt: Optional[float] = None, sample_stride: int = 1,
              transient: float = 0.0, rel_tol: float = 1e-9, abs_tol: float = 1e-12,
              sample_dt: Optional[float] = None) -> Trajectory:
    """Integrate the mean-field equations from t = 0 to ``t_final`` (us).

    With ``dt`` set, classical RK4 runs at that fixed step and every
    ``sample_stride``-th state after ``transient`` is kept; this mode is
    bit-reproducible.  Otherwise an adaptive Dormand-Prince 4(5) pair with
    ``rel_tol``/``abs_tol`` is used and the output is sampled every
    ``sample_dt`` (default: the resolution limit).

    Raises:
        ResolutionError: ``dt`` coarser than ``0.05 / fastest rate``.
        DivergenceError: a non-finite state appeared.
    """
    init = init or InitialConditions()
    if not t_final > transient >= 0:
        raise DomainError("need t_final > transient >= 0")
    if sample_stride < 1:
        raise DomainError("sample_stride must be >= 1")
    p = params.as_array()
    y0 = init.as_array()
    if dt is not None:
        _check_dt(params, dt)
        n_steps = _n_steps(t_final, dt, "t_final")
        n_skip = _n_steps(transient, dt, "transient")
        if (n_steps - n_skip) // sample_stride < 1:
            raise DomainError("fewer than two samples after the transient")
        samples, fail = _kernels.integrate_fixed(y0, p, float(dt), n_steps, n_skip, sample_stride)
        if fail >= 0:
            raise DivergenceError(fail * dt)
        t0 = n_skip * dt
        dt_sample = dt * sample_stride
    else:
        dt_sample = sample_dt or params.default_dt()
        n_out = int(math.floor((t_final - transient) / dt_sample + 1e-9)) + 1
        if n_out < 2:
            raise DomainError("fewer than two samples after the transient")
        t_eval = transient + dt_sample * np.arange(n_out)
        def rhs(t, y):
            dy = _kernels.rhs(y, p)
            if not np.all(np.isfinite(dy)):
                raise _NonFinite(t)
            return dy

        try:
            sol = solve_ivp(rhs, (0.0, float(t_eval[-1])), y0, method="RK45",
                            t_eval=t_eval, rtol=rel_tol, atol=abs_tol)
        except _NonFinite as exc:
            raise DivergenceError(exc.args[0]) from None
        if sol.status != 0 or not np.all(np.isfinite(sol.y)):
            bad = sol.t[-1] if sol.t.size else 0.0
            raise DivergenceError(bad, f"adaptive integration failed near t = {bad:.6g} us: "
                                       f"{sol.message}")
        samples = np.ascontiguousarray(sol.y.T)
        t0 = float(t_eval[0])
    return Trajectory(t0=t0, dt_sample=dt_sample, samples=samples,
                      transient_discarded=float(transient),
                      params_fingerprint=params.fingerprint())


def control_signal_f(traj, g1: float) -> np.ndarray:
    """``f_k = g1 |alpha1(t_k)|^2``; accepts a Trajectory or an alpha1 array."""
    a1 = traj.alpha1 if isinstance(traj, Trajectory) else np.asarray(traj)
    return g1 * (a1.real ** 2 + a1.imag ** 2)


def cumulative_trapezoid(f, dt) -> np.ndarray:
    """Running trapezoidal integral starting at 0."""
    f = np.asarray(f, dtype=float)
    out = np.zeros_like(f)
    out[1:] = np.cumsum(0.5 * dt * (f[1:] + f[:-1]))
    return out


def mechanical_amplitude(f, dt: float, omega1: float, damping1: float,
                         beta1_0: complex) -> np.ndarray:
    """Membrane amplitude driven by the frequency-shift signal ``f``.

    Closed-form solution of ``b' = -i (omega1 + f) b - damping1 b / 2`` on the
    sample grid of ``f``, with ``b(0) = beta1_0``.
    """
    t = dt * np.arange(len(f))
    phase = omega1 * t + cumulative_trapezoid(f, dt)
    return beta1_0 * np.exp(-1j * phase - 0.5 * damping1 * t)


def largest_lyapunov(params: PhysicalParams, init: Optional[InitialConditions] = None,
                     horizon: float = 50.0, renorm_interval: float = 0.01,
                     perturbation: float = 1e-8, *, dt: Optional[float] = None,
                     transient: float = 0.0, discard: Optional[int] = None) -> float:
    """Benettin two-trajectory estimate of the largest Lyapunov exponent (1/us).

    The reference is first run for ``transient`` us.  A twin displaced by
    ``perturbation * max(1, |state|)`` is then evolved alongside and pulled
    back every ``renorm_interval``; log growth is averaged over ``horizon``
    after the first ``discard`` intervals (default 10%) are dropped.
    """
    init = init or InitialConditions()
    if not (renorm_interval > 0 and horizon > renorm_interval):
        raise DomainError("need horizon > renorm_interval > 0")
    if not perturbation > 0:
        raise DomainError("perturbation must be positive")
    dt = dt or params.default_dt()
    _check_dt(params, dt)
    p = params.as_array()
    y = init.as_array()
    if transient > 0:
        n_tr = _n_steps(transient, dt, "transient")
        samples, fail = _kernels.integrate_fixed(y, p, float(dt), n_tr, n_tr, 1)
        if fail >= 0:
            raise DivergenceError(fail * dt)
        y = samples[-1].copy()
    steps = _n_steps(renorm_interval, dt, "renorm_interval")
    n_total = int(round(horizon / renorm_interval))
    if discard is None:
        discard = max(1, n_total // 10)
    n_measure = n_total - discard
    if n_measure < 1:
        raise DomainError("horizon too short for the discarded alignment intervals")
    d0 = perturbation * max(1.0, float(np.linalg.norm(y)))
    total, fail = _kernels.benettin(y, p, float(dt), steps, discard, n_measure, d0)
    if fail >= 0:
        raise DivergenceError(transient + (fail + 1) * renorm_interval)
    return total / (n_measure * renorm_interval)
