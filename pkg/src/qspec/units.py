"""Unit handling and physical constants.

Internally everything is an angular frequency expressed in rad per time
unit, with the time unit fixed by the experiment configuration (microseconds
for the NV-center configs, dimensionless for the spin-boson ones). Config
files state their units explicitly; the converters here map them onto the
internal convention.
"""

import numpy as np

# Nuclear gyromagnetic ratio of 13C in MHz/T (linear frequency per field),
# standard NMR tabulated value.
GAMMA_C13_MHZ_PER_T = 10.705

# Dipolar coupling prefactor: D'[rad/us] = DIPOLAR_PREFACTOR * gamma^2 / r^3
# with gamma in MHz/T and r in nm. Derived from (mu0/4pi) hbar (2pi gamma)^2,
# collapsed to a single number so unit bookkeeping happens exactly once:
# 1e-7 T^2 m^3/J * 1.0545718e-34 J s * (2pi 1e6 /s/T)^2 / (1e-9 m)^3 * 1e-6 us/s.
DIPOLAR_PREFACTOR = 4.1633e-07


def dipolar_coefficient(r_nm: float, gamma_mhz_per_t: float = GAMMA_C13_MHZ_PER_T) -> float:
    """Bare dipolar coupling D' in rad/us for two like spins r_nm apart."""
    return DIPOLAR_PREFACTOR * gamma_mhz_per_t**2 / r_nm**3


def larmor_frequency(field_tesla: float,
                     gamma_mhz_per_t: float = GAMMA_C13_MHZ_PER_T) -> float:
    """Angular Larmor frequency omega0 = 2 pi gamma B in rad/us."""
    return 2.0 * np.pi * gamma_mhz_per_t * field_tesla


# Multiplier tables: value_in_config * multiplier = internal value.
# Frequencies convert linear -> angular (factor 2 pi) except when the config
# declares them already angular or dimensionless.
FREQUENCY_MULTIPLIERS = {
    "dimensionless": 1.0,
    "rad/us": 1.0,
    "Hz": 2.0 * np.pi * 1e-6,
    "kHz": 2.0 * np.pi * 1e-3,
    "MHz": 2.0 * np.pi,
}

TIME_MULTIPLIERS = {
    "dimensionless": 1.0,
    "us": 1.0,
    "ms": 1e3,
    "s": 1e6,
}

FIELD_MULTIPLIERS = {
    "T": 1.0,
    "G": 1e-4,
}


def frequency_multiplier(unit: str) -> float:
    try:
        return FREQUENCY_MULTIPLIERS[unit]
    except KeyError:
        raise ValueError(f"unknown frequency unit {unit!r}") from None


def time_multiplier(unit: str) -> float:
    try:
        return TIME_MULTIPLIERS[unit]
    except KeyError:
        raise ValueError(f"unknown time unit {unit!r}") from None


def field_multiplier(unit: str) -> float:
    try:
        return FIELD_MULTIPLIERS[unit]
    except KeyError:
        raise ValueError(f"unknown field unit {unit!r}") from None
