"""Physical constants (CODATA, 12 significant digits) and unit helpers."""

import math

HBAR = 1.05457181765e-34  # J s
K_B = 1.38064900000e-23  # J / K

TWO_PI = 2.0 * math.pi


def khz(f_khz):
    """Ordinary frequency in kHz -> angular frequency in rad/s."""
    return TWO_PI * 1e3 * f_khz


def hz(f_hz):
    """Ordinary frequency in Hz -> angular frequency in rad/s."""
    return TWO_PI * f_hz


def to_khz(omega):
    """Angular frequency in rad/s -> ordinary frequency in kHz."""
    return omega / (TWO_PI * 1e3)
