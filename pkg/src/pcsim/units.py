"""Normalized unit system and physical-unit conversions.

All simulations run in normalized units with the speed of light c = 1 and
the lattice constant a = 1.  Lengths are measured in units of a, times in
units of a/c, frequencies in units of c/a.  Physical (nm, s) values enter
only through an optional anchor wavelength: the design rule a = 0.27 * lambda_cav
fixes the physical lattice constant once lambda_cav is given in nm.
"""

from __future__ import annotations

from dataclasses import dataclass

C_VACUUM_M_PER_S = 299792458.0

# Design rule tying the lattice constant to the cavity wavelength.
DESIGN_A_OVER_LAMBDA = 0.27


@dataclass(frozen=True)
class UnitSystem:
    """Conversion between normalized (c = 1, a = 1) and physical units.

    Args:
        lambda_cav_nm: optional physical anchor, the target cavity resonance
            wavelength in nm.  When set, the physical lattice constant is
            ``a_nm = 0.27 * lambda_cav_nm`` and nm conversions are available.
    """

    lambda_cav_nm: float | None = None

    def __post_init__(self) -> None:
        if self.lambda_cav_nm is not None and self.lambda_cav_nm <= 0:
            raise ValueError("anchor wavelength must be positive")

    @property
    def anchored(self) -> bool:
        return self.lambda_cav_nm is not None

    @property
    def a_nm(self) -> float:
        """Physical lattice constant in nm."""
        if self.lambda_cav_nm is None:
            raise ValueError("unit system has no physical anchor")
        return DESIGN_A_OVER_LAMBDA * self.lambda_cav_nm

    def length_to_nm(self, length_norm: float) -> float:
        """Length in units of a -> nm."""
        return length_norm * self.a_nm

    def nm_to_length(self, length_nm: float) -> float:
        """Length in nm -> units of a."""
        return length_nm / self.a_nm

    def wavelength_to_nm(self, lambda_norm: float) -> float:
        return self.length_to_nm(lambda_norm)

    def nm_to_wavelength(self, lambda_nm: float) -> float:
        return self.nm_to_length(lambda_nm)

    def frequency_to_nm(self, f_norm: float) -> float:
        """Normalized frequency (c/a units) -> free-space wavelength in nm."""
        if f_norm <= 0:
            raise ValueError("frequency must be positive")
        return self.length_to_nm(1.0 / f_norm)

    def rate_to_per_second(self, rate_norm: float) -> float:
        """Rate in c/a units -> 1/s."""
        return rate_norm * C_VACUUM_M_PER_S / (self.a_nm * 1e-9)


def cavity_linewidth(lambda_cav: float, q: float) -> float:
    """FWHM linewidth of a Lorentzian resonance, same units as lambda_cav."""
    if lambda_cav <= 0 or q <= 0:
        raise ValueError("lambda_cav and Q must be positive")
    return lambda_cav / q
