"""Chaotic coherent-feedback noise decoupling for optomechanical resonators."""
from .dynamics import (FIG4_NO_FEEDBACK, FIG4_PARAMS, InitialConditions, PhysicalParams,
                       Trajectory, integrate, largest_lyapunov)
from .memory import MemoryParams, fidelity_coherent, fidelity_squeezed
from .spectral import DecouplingResult, PowerSpectrum, decouple_signal

__version__ = "0.1.0"
