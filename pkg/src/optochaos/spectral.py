"""Spectral estimates of the control signal and the decoupling factor M.

Densities are one-sided over angular frequency and normalized so that a tone
``A cos(w0 t)`` integrates to ``A**2 / (2 pi)``.  With that convention the
small-amplitude Bessel expansion of the averaged phase factor becomes

    M = exp(-pi * integral of S(w) / w**2 dw)

exactly for a sum of tones, which is what :func:`decoupling_factor_spectral`
evaluates.  :func:`decoupling_factor_direct` averages ``exp(-i theta)``
instead and does not rely on the expansion.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy import signal as sps

from .dynamics import cumulative_trapezoid
from .errors import DomainError, InsufficientDataError

CONVENTION = "tone-integral A^2/(2pi)"
DEFAULT_SEGMENTS = 8
FLOOR = 1e-300


@dataclass(frozen=True, eq=False)
class PowerSpectrum:
    omega: np.ndarray
    density: np.ndarray
    convention_tag: str = CONVENTION

    def __post_init__(self):
        if self.omega.shape != self.density.shape:
            raise ValueError("omega and density differ in length")
        if np.any(self.omega <= 0) or np.any(np.diff(self.omega) <= 0):
            raise ValueError("omega must be strictly positive and ascending")
        if np.any(self.density < 0):
            raise ValueError("density must be non-negative")

    def integral(self, omega_l=None, omega_u=None) -> float:
        mask = _band(self.omega, omega_l, omega_u)
        return float(np.trapezoid(self.density[mask], self.omega[mask]))

    def write_csv(self, path):
        _write_columns(path, ("omega_rad_per_us", "density"), self.omega, self.density)


@dataclass(frozen=True)
class DecouplingResult:
    m_spectral: float
    m_direct: float
    omega_l: float
    omega_u: float
    mean_f: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def _write_columns(path, header, *cols):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in zip(*cols):
            w.writerow(["%.17g" % v for v in row])


def _band(omega, lo, hi):
    lo = omega[0] if lo is None else lo
    hi = omega[-1] if hi is None else hi
    return (omega >= lo * (1 - 1e-12)) & (omega <= hi * (1 + 1e-12))


def default_segment_length(n: int, segments: int = DEFAULT_SEGMENTS, overlap: float = 0.5) -> int:
    """Segment length giving ``segments`` windows at the given overlap."""
    return int(n / (1 + (segments - 1) * (1 - overlap)))


def _welch(x, dt, segment_length, overlap_fraction, onesided):
    # one global mean: per-segment removal leaks a Hann-shaped offset into the
    # lowest bins, which the 1/w**2 weight of the decoupling integral amplifies
    x = np.asarray(x)
    x = x - x.mean()
    if segment_length is None:
        segment_length = default_segment_length(len(x), overlap=overlap_fraction)
    if not 0 <= overlap_fraction < 1:
        raise DomainError("overlap_fraction must lie in [0, 1)")
    if segment_length < 2 or len(x) < 2 * segment_length:
        raise InsufficientDataError(
            f"need at least 2 x segment_length samples, got {len(x)} for {segment_length}")
    freq, dens = sps.welch(x, fs=1.0 / dt, window="hann", nperseg=segment_length,
                           noverlap=int(segment_length * overlap_fraction),
                           detrend=False, scaling="density",
                           return_onesided=onesided)
    return 2 * math.pi * freq, dens


def estimate_psd(signal, dt: float, segment_length: Optional[int] = None,
                 overlap_fraction: float = 0.5) -> PowerSpectrum:
    """Welch estimate (Hann window, signal mean removed), DC bin dropped."""
    omega, dens = _welch(np.asarray(signal, dtype=float), dt, segment_length,
                         overlap_fraction, onesided=True)
    # per-Hz density -> per rad/us with tone integral A^2/(2 pi)
    dens = dens / (2 * math.pi ** 2)
    return PowerSpectrum(omega[1:], dens[1:])


def decoupling_factor_spectral(psd: PowerSpectrum, omega_l: Optional[float] = None,
                               omega_u: Optional[float] = None) -> float:
    omega_l = psd.omega[0] if omega_l is None else omega_l
    omega_u = psd.omega[-1] if omega_u is None else omega_u
    if not 0 < omega_l < omega_u:
        raise DomainError("need 0 < omega_l < omega_u")
    if omega_u > psd.omega[-1] * (1 + 1e-12):
        raise DomainError("omega_u beyond the highest resolved frequency")
    mask = _band(psd.omega, omega_l, omega_u)
    if mask.sum() < 2:
        raise DomainError("frequency band contains fewer than two bins")
    w = psd.omega[mask]
    integral = np.trapezoid(psd.density[mask] / w ** 2, w)
    return float(math.exp(-math.pi * integral))


def decoupling_factor_direct(f, dt: float) -> float:
    """``|mean exp(-i theta)|**2`` with ``theta`` the integral of ``f - mean(f)``."""
    f = np.asarray(f, dtype=float)
    if len(f) < 2:
        raise InsufficientDataError("need at least two samples")
    theta = cumulative_trapezoid(f - f.mean(), dt)
    root = abs(np.mean(np.exp(-1j * theta)))
    return float(min(root, 1.0) ** 2)


def decouple_signal(f, dt: float, omega_l: Optional[float] = None,
                    omega_u: Optional[float] = None, segment_length: Optional[int] = None,
                    overlap_fraction: float = 0.5) -> DecouplingResult:
    """Both M estimates for one control signal."""
    f = np.asarray(f, dtype=float)
    psd = estimate_psd(f, dt, segment_length, overlap_fraction)
    lo = float(psd.omega[0] if omega_l is None else omega_l)
    hi = float(psd.omega[-1] if omega_u is None else omega_u)
    return DecouplingResult(
        m_spectral=decoupling_factor_spectral(psd, lo, hi),
        m_direct=decoupling_factor_direct(f, dt),
        omega_l=lo, omega_u=hi, mean_f=float(f.mean()))


def mode_spectrum(x, dt: float, segment_length: Optional[int] = None,
                  overlap_fraction: float = 0.5):
    """Two-sided Welch spectrum of a complex amplitude.

    The frequency axis is mirrored so that a rotation ``exp(-i W t)`` shows up
    at ``+W``.  Density is per rad/us and integrates to ``mean |x|^2``.
    """
    x = np.asarray(x, dtype=complex)
    if len(x) < 256:
        raise InsufficientDataError("mode spectrum needs at least 256 samples")
    omega, dens = _welch(x, dt, segment_length, overlap_fraction, onesided=False)
    omega = -omega
    order = np.argsort(omega, kind="stable")
    return omega[order], dens[order] / (2 * math.pi)


def mode_spectrum_db(x, dt: float, reference_power: float = 1.0,
                     segment_length: Optional[int] = None, overlap_fraction: float = 0.5):
    if not reference_power > 0:
        raise DomainError("reference_power must be positive")
    omega, dens = mode_spectrum(x, dt, segment_length, overlap_fraction)
    return omega, 10 * np.log10(np.maximum(dens, FLOOR) / reference_power)


def write_db_csv(path, omega, db):
    _write_columns(path, ("omega_rad_per_us", "db"), omega, db)


def spectral_flatness(psd) -> float:
    """Geometric over arithmetic mean of the density (1 for white, ~0 for a line)."""
    dens = psd.density if isinstance(psd, PowerSpectrum) else np.asarray(psd, dtype=float)
    if np.any(dens < 0):
        raise DomainError("density must be non-negative")
    if not np.any(dens > 0):
        raise DomainError("flatness undefined for an all-zero spectrum")
    d = np.maximum(dens, FLOOR)
    return float(math.exp(np.mean(np.log(d))) / np.mean(d))


def peak_prominence_db(db) -> float:
    """Height of the strongest bin above the median bin, in dB."""
    db = np.asarray(db)
    return float(db.max() - np.median(db))
