"""End-to-end runs shared by the CLI and the acceptance tests."""
from dataclasses import dataclass

import numpy as np

from . import dynamics, spectral
from .dynamics import InitialConditions, PhysicalParams
from .units import angular_to_hz, hz_to_angular


@dataclass(frozen=True)
class Fig4Settings:
    t_final: float = 220.0
    transient: float = 20.0
    dt: float = 1e-5
    sample_stride: int = 20
    mode_segment_length: int = 16384
    lyapunov_horizon: float = 50.0
    lyapunov_renorm: float = 0.01
    lyapunov_perturbation: float = 1e-8
    with_lyapunov: bool = True


def tone_signal(amplitude, omega, duration, dt):
    """Synthetic control signal ``amplitude * cos(omega t)`` on ``[0, duration)``."""
    t = dt * np.arange(int(round(duration / dt)))
    return amplitude * np.cos(omega * t)


def analyse_trajectory(traj, params: PhysicalParams, omega_l=None, omega_u=None,
                       segment_length=None, overlap=0.5, mode_segment_length=16384):
    """Control signal, both M estimates and the membrane spectrum of one run.

    Returns ``(result_dict, arrays)``; ``arrays`` holds the f PSD and the
    membrane spectrum in dB for export.
    """
    f = dynamics.control_signal_f(traj, params.g1)
    dt = traj.dt_sample
    res = spectral.decouple_signal(f, dt, omega_l, omega_u, segment_length, overlap)
    psd = spectral.estimate_psd(f, dt, segment_length, overlap)
    seg = min(mode_segment_length, len(traj) // 2)
    omega_b, dens_b = spectral.mode_spectrum(traj.beta1, dt, seg)
    db = 10 * np.log10(np.maximum(dens_b, spectral.FLOOR))
    summary = {
        "m_spectral": res.m_spectral,
        "m_direct": res.m_direct,
        "omega_l": res.omega_l,
        "omega_u": res.omega_u,
        "mean_f": res.mean_f,
        "mean_f_hz": angular_to_hz(res.mean_f),
        "f_flatness": spectral.spectral_flatness(psd) if np.any(psd.density > 0) else 0.0,
        "beta1_flatness": spectral.spectral_flatness(dens_b),
        "beta1_peak_prominence_db": spectral.peak_prominence_db(db),
        "beta1_peak_omega": float(omega_b[np.argmax(db)]),
    }
    return summary, {"result": res, "psd": psd, "mode_omega": omega_b, "mode_db": db}


def run_fig4_case(params: PhysicalParams, settings: Fig4Settings = Fig4Settings(),
                  init: InitialConditions = None):
    init = init or InitialConditions()
    traj = dynamics.integrate(params, init, settings.t_final, dt=settings.dt,
                              sample_stride=settings.sample_stride,
                              transient=settings.transient)
    summary, arrays = analyse_trajectory(traj, params,
                                         mode_segment_length=settings.mode_segment_length)
    if settings.with_lyapunov:
        summary["lambda_max"] = dynamics.largest_lyapunov(
            params, init, settings.lyapunov_horizon, settings.lyapunov_renorm,
            settings.lyapunov_perturbation, dt=settings.dt, transient=settings.transient)
    arrays["trajectory"] = traj
    return summary, arrays


def fig7_grids(points: int = 51):
    nu = [hz_to_angular(v) for v in np.linspace(0.0, 5e4, points)]
    n = list(np.linspace(0.0, 1e5, points))
    return nu, n, [0.0]


def fig8_grids(points_n: int = 51, points_s: int = 41):
    nu = [hz_to_angular(1e4)]
    n = list(np.linspace(0.0, 1e5, points_n))
    s = [float(round(v, 12)) for v in np.linspace(-5.0, 5.0, points_s)]
    return nu, n, s


FIG7_DAMPING_HZ = 5.0
# REFERENCE_M times FIG7_DAMPING_HZ, bit-exact once both are converted to rad/us
FIG7_CONTROLLED_DAMPING_HZ = 0.037
REFERENCE_M = 0.0074

__all__ = ["Fig4Settings", "analyse_trajectory", "run_fig4_case", "tone_signal",
           "fig7_grids", "fig8_grids"]
