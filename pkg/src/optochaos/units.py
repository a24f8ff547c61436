"""Unit conventions.

Time is in microseconds and angular frequency in rad/us.  User-facing
configuration gives frequencies as ``X/2pi`` in Hz, the way experimental
parameters are usually quoted.
"""
import math

TWO_PI = 2.0 * math.pi


def hz_to_angular(value_hz):
    """Convert an ``X/2pi`` value in Hz to rad/us."""
    return TWO_PI * value_hz * 1e-6


def angular_to_hz(value):
    """Inverse of :func:`hz_to_angular`."""
    return value / TWO_PI * 1e6
