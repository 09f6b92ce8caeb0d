"""OAM coincidence spectra of SPDC photon pairs for shaped pump beams.

A pump photon with zero OAM down-converts into signal/idler pairs carrying
opposite OAM.  In the thin-crystal approximation the coincidence amplitude
for detecting (-l, +l), with both photons projected onto p = 0
Laguerre-Gaussian modes of waist w_si and coupled into fibers whose
back-projected mode is a Gaussian of waist w_f, reduces to the radial
overlap

    C(l) = 2 pi * int_0^inf Phi(r) R_|l|(r)^2 G(r)^2 r dr,

with Phi the pump profile, G(r) = exp(-r^2/w_f^2) and R_l the LG radial
function.  For a Gaussian pump and for a radially truncated exponential
pump exp(a r^2/w_p^2) H(w_p - r) the integral has closed forms; both are
implemented here next to direct adaptive quadrature of the integral, which
works for any radially symmetric profile.

Conventions: amplitudes C are stored as non-negative reals, probabilities
are C^2, and normalization means sum C^2 = 1 over the window.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .errors import (
    AccuracyError,
    DegenerateInputError,
    DivergenceError,
    NormalizationError,
    WindowError,
)
from .pumps import GaussianPump, PumpProfile, TabulatedPump, TruncatedExponentialPump
from .special import log_regularized_lower_gamma_int

__all__ = [
    "SetupParams",
    "SpiralSpectrum",
    "ScanCell",
    "gaussian_spectrum",
    "exponential_spectrum",
    "overlap_amplitude",
    "numerical_spectrum",
    "schmidt_number",
    "scan_schmidt",
    "crosstalk_visibility",
]

NORMALIZATION_TOL = 1e-12


@dataclass(frozen=True)
class SetupParams:
    """Beam waists of the source: pump w_p, LG analysis modes w_si, fiber mode w_f.

    All three share one arbitrary length unit.  The ratios gamma = w_p/w_si
    and eta = w_p/w_f are the only quantities the spectra depend on.
    """

    w_p: float
    w_si: float
    w_f: float

    def __post_init__(self):
        for name in ("w_p", "w_si", "w_f"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive, got {getattr(self, name)}")

    @property
    def gamma(self) -> float:
        return self.w_p / self.w_si

    @property
    def eta(self) -> float:
        return self.w_p / self.w_f

    @classmethod
    def from_ratios(cls, gamma: float, eta: float, w_p: float = 1.0) -> "SetupParams":
        if gamma <= 0 or eta <= 0:
            raise ValueError(f"gamma and eta must be positive, got gamma={gamma}, eta={eta}")
        return cls(w_p=w_p, w_si=w_p / gamma, w_f=w_p / eta)


@dataclass(frozen=True)
class SpiralSpectrum:
    """Coincidence amplitudes C(-l, l) over an integer OAM window.

    ``amplitudes[i]`` belongs to ``ell_min + i``.  When ``normalized`` is
    true the squared amplitudes sum to one.
    """

    ell_min: int
    ell_max: int
    amplitudes: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        if self.ell_min > 0 or self.ell_max < 0 or self.ell_min > self.ell_max:
            raise WindowError(
                f"window [{self.ell_min}, {self.ell_max}] must satisfy ell_min <= 0 <= ell_max"
            )
        amps = np.asarray(self.amplitudes, dtype=float)
        if amps.shape != (self.ell_max - self.ell_min + 1,):
            raise ValueError("amplitude array does not match the window size")
        if np.any(amps < 0) or not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite and non-negative")
        if self.normalized and abs(np.sum(amps**2) - 1.0) > NORMALIZATION_TOL:
            raise NormalizationError(
                f"spectrum marked normalized but sum C^2 = {np.sum(amps ** 2)!r}"
            )
        object.__setattr__(self, "amplitudes", amps)

    @property
    def ells(self) -> np.ndarray:
        return np.arange(self.ell_min, self.ell_max + 1)

    def amplitude(self, ell: int) -> float:
        if not self.ell_min <= ell <= self.ell_max:
            raise WindowError(f"l={ell} outside window [{self.ell_min}, {self.ell_max}]")
        return float(self.amplitudes[ell - self.ell_min])

    def probabilities(self) -> np.ndarray:
        return self.amplitudes**2

    def normalize(self) -> "SpiralSpectrum":
        norm = math.sqrt(float(np.sum(self.amplitudes**2)))
        if norm == 0.0:
            raise DegenerateInputError("cannot normalize an all-zero spectrum")
        return SpiralSpectrum(self.ell_min, self.ell_max, self.amplitudes / norm, normalized=True)


def _check_window(ell_min: int, ell_max: int):
    if ell_min > ell_max:
        raise WindowError(f"ell_min={ell_min} exceeds ell_max={ell_max}")
    if ell_min > 0 or ell_max < 0:
        raise WindowError(f"window [{ell_min}, {ell_max}] must bracket 0")


def _spectrum_from_log_amplitudes(ell_min, ell_max, log_amp_by_absell):
    """Assemble a normalized spectrum from log-amplitudes indexed by |l|."""
    ells = np.arange(ell_min, ell_max + 1)
    log_amp = log_amp_by_absell[np.abs(ells)]
    log_amp = log_amp - np.max(log_amp)
    amps = np.exp(log_amp)
    return SpiralSpectrum(ell_min, ell_max, amps, normalized=False).normalize()


def gaussian_spectrum(params: SetupParams, ell_min: int, ell_max: int) -> SpiralSpectrum:
    """Closed-form spiral spectrum for an untruncated Gaussian pump.

    The amplitude ratio between neighbouring OAM orders is
    x = 2 gamma^2 / (2 gamma^2 + 2 eta^2 + 1), so C(l) prop. x^|l|: the
    spectrum peaks at l = 0, is even in l, and flattens as gamma grows.
    """
    _check_window(ell_min, ell_max)
    g2, e2 = 2.0 * params.gamma**2, 2.0 * params.eta**2
    x = g2 / (g2 + e2 + 1.0)
    n_abs = max(abs(ell_min), abs(ell_max)) + 1
    log_amp = np.arange(n_abs) * math.log(x)
    return _spectrum_from_log_amplitudes(ell_min, ell_max, log_amp)


def exponential_spectrum(
    a: float, params: SetupParams, ell_min: int, ell_max: int
) -> SpiralSpectrum:
    """Closed-form spiral spectrum for the truncated exponential pump exp(a r^2/w_p^2) H(w_p - r).

    With T = 2 gamma^2 + 2 eta^2 - a the amplitude is

        C(l) prop. (2 gamma^2 / T)^|l| * P(|l| + 1, T),

    where P is the regularized lower incomplete gamma function; the second
    factor is the aperture correction from the hard cutoff at w_p.  At
    a = 2 eta^2 the geometric factor is exactly 1 for every l and the
    spectrum is flat up to the aperture correction.  Requires T > 0.
    """
    _check_window(ell_min, ell_max)
    g2, e2 = 2.0 * params.gamma**2, 2.0 * params.eta**2
    t = g2 + e2 - a
    if t <= 0:
        raise DivergenceError(
            f"2 gamma^2 + 2 eta^2 - a = {t!r} <= 0 "
            f"(gamma={params.gamma!r}, eta={params.eta!r}, a={a!r})"
        )
    log_y = math.log(g2) - math.log(t)
    n_abs = max(abs(ell_min), abs(ell_max)) + 1
    log_amp = np.array(
        [n * log_y + log_regularized_lower_gamma_int(n + 1, t) for n in range(n_abs)]
    )
    return _spectrum_from_log_amplitudes(ell_min, ell_max, log_amp)


def _lg_fiber_log_weight(r, ell, params):
    """log of R_|l|(r)^2 G(r)^2 * r, the pump-independent part of the overlap integrand.

    R is the p = 0 LG radial function at waist w_si,
    R_l(r) = sqrt(2/(pi l!)) (1/w_si) (sqrt(2) r/w_si)^l exp(-r^2/w_si^2),
    and G(r) = exp(-r^2/w_f^2) the fiber mode.  Evaluated in log form since
    r^(2l) alone can overflow long before the Gaussian tail brings the
    product back to zero.
    """
    r = np.asarray(r, dtype=float)
    u = 2.0 * (r / params.w_si) ** 2
    out = np.full(r.shape, -np.inf)
    pos = r > 0
    n = abs(ell)
    out[pos] = (
        n * np.log(u[pos])
        - math.lgamma(n + 1)
        - u[pos]
        - 2.0 * (r[pos] / params.w_f) ** 2
        + np.log(r[pos])
    )
    return out + math.log(2.0 / (math.pi * params.w_si**2))


def overlap_amplitude(pump: PumpProfile, ell: int, params: SetupParams) -> float:
    """Un-normalized coincidence amplitude C(-l, l) by adaptive quadrature.

    Evaluates 2 pi * int Phi(r) R_|l|(r)^2 G(r)^2 r dr on [0, r_max] with
    r_max = 6 max(w_p, w_si, w_f) (the integrand's Gaussian tail is below
    1e-15 there).  A truncated pump is integrated exactly on [0, w_p] so the
    aperture discontinuity never sits inside a quadrature panel.  Raises
    AccuracyError when the integrator cannot reach its tolerance, carrying
    the residual estimate.
    """
    if isinstance(pump, TabulatedPump):
        return _overlap_tabulated(pump, ell, params)

    r_max = 6.0 * max(params.w_p, params.w_si, params.w_f)
    upper = min(pump.support_radius(params.w_p), r_max)

    n = abs(ell)
    c_si = 2.0 / params.w_si**2
    c_f = 2.0 / params.w_f**2
    log_norm = math.log(2.0 / (math.pi * params.w_si**2)) - math.lgamma(n + 1)
    pump_amp = pump.amplitude_scalar
    w_p = params.w_p

    def integrand(r):
        if r <= 0.0:
            return 0.0
        amp = pump_amp(r, w_p)
        if amp == 0.0 or not math.isfinite(amp):
            return 0.0
        u = c_si * r * r
        logw = n * math.log(u) - u - c_f * r * r + math.log(r) + log_norm
        return 2.0 * math.pi * amp * math.exp(logw)

    # guide the subdivision to the peak of the radial weight r^(2l+1) e^(-c r^2)
    c = 2.0 / params.w_si**2 + 2.0 / params.w_f**2
    r_peak = math.sqrt((2 * abs(ell) + 1) / (2.0 * c))
    points = sorted({p for p in (0.5 * r_peak, r_peak, 2.0 * r_peak, 4.0 * r_peak) if 0 < p < upper})
    result = quad(
        integrand, 0.0, upper, points=points or None, limit=400, epsabs=1e-300, epsrel=1e-11,
        full_output=True,
    )
    value, abserr = result[0], result[1]
    if len(result) > 3 or not np.isfinite(value):
        raise AccuracyError(
            f"quadrature for l={ell} did not converge (residual estimate {abserr!r})",
            residual=abserr,
        )
    if pump.is_nonnegative and value < 0:
        if -value <= 10.0 * abserr:
            value = 0.0
        else:
            raise AccuracyError(
                f"negative amplitude {value!r} for a non-negative pump at l={ell} "
                f"exceeds the quadrature error bound {abserr!r}",
                residual=abserr,
            )
    return value


def _overlap_tabulated(pump: TabulatedPump, ell: int, params: SetupParams) -> float:
    """Overlap for a tabulated pump: fixed Gauss-Legendre panels between samples.

    The integrand is the (smooth) LG/fiber weight times a piecewise-linear
    pump, so placing panel boundaries at the sample radii makes an 8-point
    rule per panel effectively exact.
    """
    r_max = 6.0 * max(params.w_p, params.w_si, params.w_f)
    radii = pump.radii[pump.radii <= min(pump.support_radius(params.w_p), r_max)]
    if radii.size < 2:
        return 0.0
    nodes, weights = np.polynomial.legendre.leggauss(8)
    lo, hi = radii[:-1], radii[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    r = mid[:, None] + half[:, None] * nodes[None, :]
    vals = pump.amplitude(r, params.w_p) * np.exp(_lg_fiber_log_weight(r, ell, params))
    return float(2.0 * math.pi * np.sum(half[:, None] * weights[None, :] * vals))


def numerical_spectrum(
    pump: PumpProfile, params: SetupParams, ell_min: int, ell_max: int
) -> SpiralSpectrum:
    """Normalized spiral spectrum by quadrature of the overlap integral.

    Agrees with gaussian_spectrum / exponential_spectrum where those apply.
    Sign-changing pumps (Airy) can produce genuinely negative overlaps; the
    stored amplitude is the magnitude, consistent with the spectrum's
    non-negative amplitude convention (all derived metrics depend on C^2).
    """
    _check_window(ell_min, ell_max)
    by_abs = {}
    for n in range(max(abs(ell_min), abs(ell_max)) + 1):
        value = overlap_amplitude(pump, n, params)
        by_abs[n] = abs(value) if not pump.is_nonnegative else value
    ells = np.arange(ell_min, ell_max + 1)
    amps = np.array([by_abs[abs(ell)] for ell in ells])
    if np.all(amps == 0.0):
        raise DegenerateInputError("pump produced an all-zero spectrum over the window")
    return SpiralSpectrum(ell_min, ell_max, amps, normalized=False).normalize()


def schmidt_number(spectrum: SpiralSpectrum) -> float:
    """Effective number of entangled OAM modes, K = 1 / sum_l C(l)^4."""
    if not spectrum.normalized:
        raise NormalizationError("Schmidt number requires a normalized spectrum")
    return float(1.0 / np.sum(spectrum.amplitudes**4))


@dataclass(frozen=True)
class ScanCell:
    """One (a, gamma) grid point of a Schmidt-number scan."""

    a: float
    gamma: float
    schmidt: float | None
    error: str | None = None


def scan_schmidt(
    a_grid, gamma_set, eta: float, window: tuple[int, int]
) -> list[ScanCell]:
    """Schmidt number over an (a, gamma) grid at fixed eta.

    Rows are ordered a-major, then gamma.  Grid points where the closed
    form diverges are recorded as error cells; the scan continues.
    """
    ell_min, ell_max = window
    _check_window(ell_min, ell_max)
    cells = []
    for a in a_grid:
        for gamma in gamma_set:
            params = SetupParams.from_ratios(gamma, eta)
            try:
                spec = exponential_spectrum(a, params, ell_min, ell_max)
                cells.append(ScanCell(float(a), float(gamma), schmidt_number(spec)))
            except DivergenceError as exc:
                cells.append(ScanCell(float(a), float(gamma), None, error=str(exc)))
    return cells


def crosstalk_visibility(counts) -> float:
    """1 - (squared first-off-diagonal counts) / (squared diagonal counts).

    ``counts`` is the square joint OAM counts matrix C(i, j); only the two
    first off-diagonals enter the numerator, per the usual crosstalk
    figure of merit.
    """
    c = np.asarray(counts, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ValueError(f"counts must be a square matrix, got shape {c.shape}")
    if c.shape[0] < 3:
        raise ValueError("counts matrix must be at least 3x3")
    diag = np.sum(np.diag(c) ** 2)
    if diag == 0.0:
        raise DegenerateInputError("diagonal of the counts matrix is all zero")
    off = np.sum(np.diag(c, 1) ** 2) + np.sum(np.diag(c, -1) ** 2)
    return float(1.0 - off / diag)
