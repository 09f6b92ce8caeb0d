"""Radially symmetric pump beam profiles.

All profiles are dimensionless mode functions Phi(r) evaluated on radii in
the same length unit as the pump waist w_p.  The overall scale is
irrelevant for spiral spectra (they get normalized), so no profile carries
a power normalization.
"""

from dataclasses import dataclass, field

import math

import numpy as np
from scipy.special import j0, j1


@dataclass(frozen=True)
class GaussianPump:
    """Plain Gaussian pump exp(-r^2/w_p^2), no aperture."""

    kind: str = field(default="gaussian", init=False)
    is_nonnegative = True

    def amplitude(self, r, w_p):
        r = np.asarray(r, dtype=float)
        return np.exp(-(r / w_p) ** 2)

    def amplitude_scalar(self, r: float, w_p: float) -> float:
        return math.exp(-((r / w_p) ** 2))

    def support_radius(self, w_p):
        return math.inf


@dataclass(frozen=True)
class TruncatedExponentialPump:
    """Pump exp(a r^2 / w_p^2) inside r <= w_p, identically zero outside.

    The Gaussian pump is the a = -1 member of this family except for the
    hard aperture at w_p; with an aperture the two differ at large radius.
    """

    a: float
    kind: str = field(default="truncated_exponential", init=False)
    is_nonnegative = True

    def amplitude(self, r, w_p):
        r = np.asarray(r, dtype=float)
        with np.errstate(over="ignore"):
            return np.where(r <= w_p, np.exp(self.a * (r / w_p) ** 2), 0.0)

    def amplitude_scalar(self, r: float, w_p: float) -> float:
        return math.exp(self.a * (r / w_p) ** 2) if r <= w_p else 0.0

    def support_radius(self, w_p):
        return w_p


@dataclass(frozen=True)
class AiryPump:
    """Airy-disk pump amplitude J_n(2 pi r/w_p) / (2 pi r/w_p).

    Order 1 is the physical Airy disk; order 0 is available for comparison
    but its amplitude diverges at r = 0 (integrably, so spectra still
    exist).  This profile changes sign, so overlap amplitudes computed from
    it may be negative before the spectrum's phase convention is applied.
    """

    bessel_order: int = 1
    kind: str = field(default="airy", init=False)
    is_nonnegative = False

    def __post_init__(self):
        if self.bessel_order not in (0, 1):
            raise ValueError(f"bessel_order must be 0 or 1, got {self.bessel_order}")

    def amplitude(self, r, w_p):
        r = np.asarray(r, dtype=float)
        x = 2.0 * np.pi * r / w_p
        bess = j0 if self.bessel_order == 0 else j1
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(x > 0, bess(np.where(x > 0, x, 1.0)) / np.where(x > 0, x, 1.0), 0.0)
        if self.bessel_order == 1:
            out = np.where(x == 0, 0.5, out)
        else:
            out = np.where(x == 0, np.inf, out)
        return out

    def amplitude_scalar(self, r: float, w_p: float) -> float:
        x = 2.0 * math.pi * r / w_p
        if x == 0.0:
            return 0.5 if self.bessel_order == 1 else math.inf
        bess = j0 if self.bessel_order == 0 else j1
        return float(bess(x)) / x

    def support_radius(self, w_p):
        return math.inf


@dataclass(frozen=True)
class TabulatedPump:
    """Pump given by (radius, amplitude) samples, linearly interpolated.

    Radii must be strictly increasing and start at 0; amplitudes must be
    non-negative.  The profile is zero beyond the last sample.
    """

    radii: np.ndarray
    values: np.ndarray
    kind: str = field(default="tabulated", init=False)
    is_nonnegative = True

    def __post_init__(self):
        radii = np.asarray(self.radii, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if radii.ndim != 1 or radii.shape != values.shape or radii.size < 2:
            raise ValueError("samples must be two equal-length 1-d arrays with >= 2 points")
        if radii[0] != 0.0 or np.any(np.diff(radii) <= 0):
            raise ValueError("radii must be strictly increasing and start at 0")
        if np.any(values < 0):
            raise ValueError("tabulated amplitudes must be non-negative")
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "values", values)

    def amplitude(self, r, w_p):
        r = np.asarray(r, dtype=float)
        return np.interp(r, self.radii, self.values, left=self.values[0], right=0.0)

    def amplitude_scalar(self, r: float, w_p: float) -> float:
        return float(np.interp(r, self.radii, self.values, left=self.values[0], right=0.0))

    def support_radius(self, w_p):
        return float(self.radii[-1])


PumpProfile = GaussianPump | TruncatedExponentialPump | AiryPump | TabulatedPump
