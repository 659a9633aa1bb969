"""Physical constants and unit conversions.

Everything inside the package runs in Hartree atomic units; these helpers are
used only at the boundaries (configuration parsing, file output). Conversions
are exact linear maps through the constants below, so round-trips reproduce
the input to machine precision.
"""

import math

HARTREE_EV = 27.211386245988      # eV per hartree
AU_TIME_FS = 0.02418884254        # femtoseconds per atomic time unit
BOHR_PER_ANGSTROM = 1.8897259886  # bohr per angstrom
AU_INTENSITY_WCM2 = 3.50944758e16  # intensity (W/cm^2) of a 1-au field amplitude
AMU_ME = 1822.888486              # electron masses per unified atomic mass unit
HARTREE_CM1 = 219474.63136320     # cm^-1 per hartree (reporting only)

# unit name -> (dimension, factor to the atomic-unit canonical of that dimension)
_UNITS = {
    "hartree": ("energy", 1.0),
    "ev": ("energy", 1.0 / HARTREE_EV),
    "au_time": ("time", 1.0),
    "fs": ("time", 1.0 / AU_TIME_FS),
    "bohr": ("length", 1.0),
    "angstrom": ("length", BOHR_PER_ANGSTROM),
    "me": ("mass", 1.0),
    "amu": ("mass", AMU_ME),
}


def convert(value, unit_from, unit_to):
    """Linear unit conversion; raises ValueError on unknown or mismatched units."""
    try:
        dim_f, fac_f = _UNITS[unit_from]
        dim_t, fac_t = _UNITS[unit_to]
    except KeyError as exc:
        raise ValueError(f"unknown unit {exc.args[0]!r}") from None
    if dim_f != dim_t:
        raise ValueError(
            f"incompatible dimensions: {unit_from} is {dim_f}, {unit_to} is {dim_t}"
        )
    return value * (fac_f / fac_t)


def ev_to_au(energy_ev):
    return energy_ev / HARTREE_EV


def au_to_ev(energy_au):
    return energy_au * HARTREE_EV


def fs_to_au(time_fs):
    return time_fs / AU_TIME_FS


def au_to_fs(time_au):
    return time_au * AU_TIME_FS


def field_amplitude_from_intensity(intensity_wcm2):
    """Peak field amplitude (au) of a plane wave of the given intensity.

    E0 = sqrt(I / I_ref) with I_ref the intensity of a unit-amplitude field.
    """
    if intensity_wcm2 < 0:
        raise ValueError("intensity must be non-negative")
    return math.sqrt(intensity_wcm2 / AU_INTENSITY_WCM2)


def kappa_from_lifetime(tau_fs):
    """Cavity decay rate (au) from the photon lifetime tau (fs); kappa = 1/tau."""
    if tau_fs <= 0:
        raise ValueError("lifetime must be positive")
    return 1.0 / fs_to_au(tau_fs)


def kappa_from_q(q_factor, omega_c_au):
    """Cavity decay rate (au) from the quality factor, kappa = omega_c / Q."""
    if q_factor <= 0:
        raise ValueError("Q factor must be positive")
    return omega_c_au / q_factor
