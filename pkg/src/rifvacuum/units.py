"""Unit conventions.

Internally c = 1 and lengths are measured in micrometres, so an angular
frequency of 1 corresponds to c / (1 um) = 2.998e14 rad/s and a vacuum
wavelength of lambda um sits at omega = 2*pi/lambda. Conversion to SI only
happens at the I/O boundary (CSV writers, CLI arguments).
"""

import numpy as np
from scipy.constants import c as C_SI

LENGTH_UNIT_M = 1e-6
OMEGA_UNIT = C_SI / LENGTH_UNIT_M  # rad/s per internal frequency unit
TIME_UNIT_S = LENGTH_UNIT_M / C_SI


def omega_from_wavelength(wavelength_m):
    """Vacuum wavelength in metres -> internal angular frequency."""
    return 2 * np.pi * LENGTH_UNIT_M / np.asarray(wavelength_m, dtype=float)


def wavelength_from_omega(omega):
    """Internal angular frequency -> vacuum wavelength in metres."""
    return 2 * np.pi * LENGTH_UNIT_M / np.abs(np.asarray(omega, dtype=float))


def omega_to_si(omega):
    return np.asarray(omega) * OMEGA_UNIT


def omega_from_si(omega_rad_s):
    return np.asarray(omega_rad_s) / OMEGA_UNIT
