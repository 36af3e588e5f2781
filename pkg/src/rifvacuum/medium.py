"""Homogeneous three-resonance dielectrics, the index step, and frame boosts.

All frequencies and wavenumbers are in internal units (see :mod:`rifvacuum.units`).
The dielectric follows

    k^2 = omega^2 * (1 + sum_i 4*pi*kappa_i / (1 - omega^2 / Omega_i^2)),

with resonance frequencies Omega_i = 2*pi/lambda_i.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .units import LENGTH_UNIT_M

DEFAULT_GUARD_BAND = 1e-3


class DispersionError(ValueError):
    pass


class ResonanceError(DispersionError):
    """Frequency falls inside the guard band of a material resonance."""


class AnomalousBandError(DispersionError):
    """n^2 < 0: the frequency lies in a stop band between two branches."""


@dataclass(frozen=True)
class SellmeierMedium:
    """Three-resonance Sellmeier dielectric.

    ``resonance_wavelengths`` are in metres and must be strictly decreasing;
    ``elastic_constants`` are the dimensionless kappa_i (so B_i = 4*pi*kappa_i
    in the textbook form).
    """

    resonance_wavelengths: tuple[float, float, float]
    elastic_constants: tuple[float, float, float]
    guard_band: float = field(default=DEFAULT_GUARD_BAND, compare=False)

    def __post_init__(self):
        lam = tuple(float(x) for x in self.resonance_wavelengths)
        kap = tuple(float(x) for x in self.elastic_constants)
        if len(lam) != 3 or len(kap) != 3:
            raise ValueError("exactly three resonances are required")
        if not all(x > 0 for x in lam):
            raise ValueError(f"resonance wavelengths must be positive, got {lam}")
        if not (lam[0] > lam[1] > lam[2]):
            raise ValueError(f"resonance wavelengths must be strictly decreasing, got {lam}")
        if not all(x >= 0 for x in kap):
            raise ValueError(f"elastic constants must be non-negative, got {kap}")
        object.__setattr__(self, "resonance_wavelengths", lam)
        object.__setattr__(self, "elastic_constants", kap)

    @property
    def resonance_omegas(self) -> np.ndarray:
        """Resonance angular frequencies in internal units, ascending."""
        lam_int = np.array(self.resonance_wavelengths) / LENGTH_UNIT_M
        return 2 * np.pi / lam_int

    @property
    def strengths(self) -> np.ndarray:
        """Oscillator strengths B_i = 4*pi*kappa_i."""
        return 4 * np.pi * np.array(self.elastic_constants)

    @property
    def is_vacuum(self) -> bool:
        return all(k == 0 for k in self.elastic_constants)

    def static_index(self) -> float:
        return math.sqrt(1.0 + float(self.strengths.sum()))


def fused_silica() -> SellmeierMedium:
    """Bulk fused silica as used throughout the package defaults."""
    return SellmeierMedium(
        resonance_wavelengths=(9904e-9, 116e-9, 68.5e-9),
        elastic_constants=(0.07142, 0.03246, 0.05540),
    )


def vacuum_medium() -> SellmeierMedium:
    return SellmeierMedium(
        resonance_wavelengths=(9904e-9, 116e-9, 68.5e-9),
        elastic_constants=(0.0, 0.0, 0.0),
    )


def _check_guard(medium: SellmeierMedium, omega, guard_band=None):
    gb = medium.guard_band if guard_band is None else guard_band
    w = np.abs(np.asarray(omega, dtype=float))
    for om in medium.resonance_omegas:
        near = np.abs(w - om) < gb * om
        if np.any(near):
            bad = np.atleast_1d(w)[np.atleast_1d(near)][0]
            raise ResonanceError(
                f"omega={bad:.6g} lies within the {gb:g} guard band of resonance {om:.6g}"
            )


def n_squared(medium: SellmeierMedium, omega):
    """n^2(omega) without guard checks; complex-safe."""
    omega = np.asarray(omega)
    x = omega[..., None] ** 2 / medium.resonance_omegas**2
    return 1.0 + np.sum(medium.strengths / (1.0 - x), axis=-1)


def refractive_index(medium: SellmeierMedium, omega, guard_band=None):
    """Real refractive index n(omega) (even in omega)."""
    _check_guard(medium, omega, guard_band)
    n2 = n_squared(medium, np.asarray(omega, dtype=float))
    if np.any(n2 < 0):
        raise AnomalousBandError("n^2 < 0: frequency lies in an anomalous (stop) band")
    n = np.sqrt(n2)
    return float(n) if np.ndim(n) == 0 else n


def branch_intervals(medium: SellmeierMedium, omega_max: float | None = None) -> list[tuple[float, float]]:
    """Positive-frequency intervals with n^2 > 0, trimmed by the guard band.

    n^2 increases monotonically in omega between poles, so each stop band
    runs from a resonance up to the single zero of n^2 above it.
    """
    from scipy.optimize import brentq

    om = medium.resonance_omegas
    gb = medium.guard_band
    if omega_max is None:
        omega_max = 2.0 * om[-1]
    poles = [o for o, b in zip(om, medium.strengths) if b > 0]
    bounds, lo = [], 0.0
    for i, o in enumerate(poles):
        bounds.append((lo, o * (1 - gb)))
        top = poles[i + 1] * (1 - 1e-12) if i + 1 < len(poles) else o * 1e6
        zero = brentq(lambda w: float(n_squared(medium, w)), o * (1 + 1e-12), top, xtol=1e-15 * o)
        lo = max(zero, o * (1 + gb)) * (1 + 1e-12)
    bounds.append((lo, omega_max))
    return [(float(a), float(b)) for a, b in bounds if b > a]


def _cleared_terms(medium: SellmeierMedium, omega):
    """Denominator D = prod(Omega_i^2 - w^2) and numerator N with n^2 = N/D."""
    om2 = medium.resonance_omegas**2
    b = medium.strengths
    w2 = np.asarray(omega) ** 2
    f = [om2[i] - w2 for i in range(3)]
    den = f[0] * f[1] * f[2]
    num = den + (
        b[0] * om2[0] * f[1] * f[2]
        + b[1] * om2[1] * f[0] * f[2]
        + b[2] * om2[2] * f[0] * f[1]
    )
    return den, num


def dispersion_residual(medium: SellmeierMedium, omega, k):
    """Normalized defect of the dispersion relation, computed with cleared denominators.

    Returns (omega^2 N - k^2 D) / max(|omega^2 N|, |k^2 D|), which vanishes on
    a branch and equals 1 for k = 0.
    """
    omega = np.asarray(omega, dtype=complex)
    k = np.asarray(k, dtype=complex)
    den, num = _cleared_terms(medium, omega)
    a = omega**2 * num
    b = k**2 * den
    scale = np.maximum(np.abs(a), np.abs(b))
    scale = np.where(scale == 0, 1.0, scale)
    r = (a - b) / scale
    return complex(r) if r.ndim == 0 else r


def group_index_factor(medium: SellmeierMedium, omega):
    """1 + sum_i B_i / D_i^2, so that dk/domega = omega * factor / k."""
    omega = np.asarray(omega)
    d = 1.0 - omega[..., None] ** 2 / medium.resonance_omegas**2
    b = medium.strengths
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(b > 0, b / d**2, 0.0)
    return 1.0 + np.sum(terms, axis=-1)


def lab_group_velocity(medium: SellmeierMedium, omega, k):
    """domega/dk at an on-branch pair (omega, k); valid for either sign."""
    return k / (omega * group_index_factor(medium, omega))


def group_velocity(medium: SellmeierMedium, omega, guard_band=None):
    """Lab group velocity on the branch k = +n(omega)*omega (units of c)."""
    n = np.asarray(refractive_index(medium, omega, guard_band))
    vg = n / group_index_factor(medium, np.asarray(omega, dtype=float))
    return float(vg) if vg.ndim == 0 else vg


@dataclass(frozen=True)
class IndexStep:
    """Right medium, left medium derived from it, and the step parameters."""

    right: SellmeierMedium
    left: SellmeierMedium
    delta_n: float
    sigma: float
    n_ref_right: float

    def medium(self, side: str) -> SellmeierMedium:
        return self.left if side == "L" else self.right


def scale_factor(delta_n: float, n_ref: float) -> float:
    return 1.0 + 2.0 * n_ref * delta_n / (n_ref**2 - 1.0)


def scale_medium(right: SellmeierMedium, delta_n: float, n_ref: float | None = None) -> IndexStep:
    """Build the index step whose left side is raised by roughly ``delta_n``.

    The left medium has kappa_L = sigma*kappa_R and lambda_L^2 = sigma*lambda_R^2.
    ``n_ref`` defaults to the static index of the right medium.
    """
    if delta_n < 0:
        raise ValueError(f"delta_n must be >= 0, got {delta_n}")
    if n_ref is None:
        n_ref = right.static_index()
    if delta_n == 0:
        return IndexStep(right=right, left=right, delta_n=0.0, sigma=1.0, n_ref_right=n_ref)
    if n_ref <= 1:
        raise ValueError(f"n_ref must exceed 1, got {n_ref}")
    sigma = scale_factor(delta_n, n_ref)
    root = math.sqrt(sigma)
    left = SellmeierMedium(
        resonance_wavelengths=tuple(lam * root for lam in right.resonance_wavelengths),
        elastic_constants=tuple(sigma * k for k in right.elastic_constants),
        guard_band=right.guard_band,
    )
    return IndexStep(right=right, left=left, delta_n=float(delta_n), sigma=sigma, n_ref_right=n_ref)


@dataclass(frozen=True)
class FrontFrame:
    """Rest frame of the front moving at ``u`` (fraction of c)."""

    u: float

    def __post_init__(self):
        if not (0.0 <= self.u < 1.0):
            raise ValueError(f"front velocity must satisfy 0 <= u < 1, got {self.u}")

    @property
    def gamma(self) -> float:
        return 1.0 / math.sqrt(1.0 - self.u**2)


@dataclass(frozen=True)
class LabWave:
    omega: complex
    k: complex


@dataclass(frozen=True)
class ComovingWave:
    omega: complex
    k: complex


def boost_to_comoving(wave: LabWave, frame: FrontFrame) -> ComovingWave:
    g, u = frame.gamma, frame.u
    return ComovingWave(omega=g * (wave.omega - u * wave.k), k=g * (wave.k - u * wave.omega))


def boost_to_lab(wave: ComovingWave, frame: FrontFrame) -> LabWave:
    g, u = frame.gamma, frame.u
    return LabWave(omega=g * (wave.omega + u * wave.k), k=g * (wave.k + u * wave.omega))
