"""Plane-wave eigenvectors, the conserved scalar product and mode normalization.

Components are ordered (A, P1, P2, P3, Pi_A, Pi_P1, Pi_P2, Pi_P3), with the
momenta conjugate to comoving time tau. For a plane wave exp(i(k' zeta - omega' tau))
whose lab pair is (omega, k):

    P_i    = i omega kappa_i A / D_i,         D_i = 1 - omega^2 / Omega_i^2
    Pi_A   = -i omega' A / (4 pi)
    Pi_P_i = gamma (A + m_i d_t P_i) = gamma A / D_i

where m_i = 1/(kappa_i Omega_i^2) is the oscillator inertia. hbar = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .medium import FrontFrame, SellmeierMedium
from .modes import ModeRoot

ETA = np.block([[np.zeros((4, 4)), np.eye(4)], [-np.eye(4), np.zeros((4, 4))]])


class NormalizationError(ValueError):
    pass


@dataclass(frozen=True)
class PolarizedMode:
    root: ModeRoot
    amplitude: np.ndarray  # complex, shape (8,)
    normalized: bool = False

    @property
    def norm_density(self) -> float:
        return scalar_product_density(self, self).real

    @property
    def field(self) -> np.ndarray:
        """(A, P1, P2, P3)."""
        return self.amplitude[:4]

    def matching_vector(self) -> np.ndarray:
        """Fields and their zeta-derivatives, the quantities continuous across the front."""
        f = self.field
        return np.concatenate([f, 1j * self.root.k_prime * f])


def _inertia(medium: SellmeierMedium) -> np.ndarray:
    kap = np.array(medium.elastic_constants)
    om2 = medium.resonance_omegas**2
    with np.errstate(divide="ignore"):
        return np.where(kap > 0, 1.0 / (kap * om2), np.inf)


def polarization_vector(medium: SellmeierMedium, root: ModeRoot, frame: FrontFrame) -> PolarizedMode:
    """Unnormalized eigenvector with A = 1."""
    w = complex(root.omega)
    om2 = medium.resonance_omegas**2
    d = 1.0 - w**2 / om2
    gb = medium.guard_band
    if np.any(np.abs(d) < gb):
        raise NormalizationError(f"omega={w} too close to a resonance")
    kap = np.array(medium.elastic_constants)
    v = np.empty(8, dtype=complex)
    v[0] = 1.0
    v[1:4] = 1j * w * kap / d
    v[4] = -1j * root.omega_prime / (4 * np.pi)
    v[5:8] = frame.gamma / d
    return PolarizedMode(root=root, amplitude=v)


def eigenvector_defect(medium: SellmeierMedium, mode: PolarizedMode, frame: FrontFrame) -> float:
    """Largest relative residual of the comoving equations of motion.

    The equations are written with d_tau -> -i omega', d_zeta -> i k' and
    d_t = gamma (d_tau - u d_zeta):

        d_tau A      = 4 pi Pi_A
        Pi_P_i       = gamma (A + m_i d_t P_i)
        (d_tau^2 - d_zeta^2) A / (4 pi) = sum_i d_t P_i
        m_i d_t^2 P_i + d_t A + P_i / kappa_i = 0
    """
    g, u = frame.gamma, frame.u
    wp = mode.root.omega_prime
    kp = complex(mode.root.k_prime)
    dtau, dzeta = -1j * wp, 1j * kp
    dt = g * (dtau - u * dzeta)
    a, p, pia, pip = mode.amplitude[0], mode.amplitude[1:4], mode.amplitude[4], mode.amplitude[5:8]
    kap = np.array(medium.elastic_constants)
    m = _inertia(medium)
    res = []

    def rel(x, *terms):
        s = max(abs(t) for t in terms)
        return abs(x) / s if s > 0 else abs(x)

    res.append(rel(dtau * a - 4 * np.pi * pia, dtau * a, 4 * np.pi * pia))
    lhs = (dtau**2 - dzeta**2) * a / (4 * np.pi)
    rhs = np.sum(dt * p)
    res.append(rel(lhs - rhs, lhs, rhs, (dtau**2) * a / (4 * np.pi)))
    for i in range(3):
        if kap[i] == 0:
            # decoupled oscillator: P vanishes, Pi_P keeps its kappa -> 0 limit
            q = g * a / (1 + dt**2 / medium.resonance_omegas[i] ** 2)
            res.append(rel(p[i], a))
            res.append(rel(pip[i] - q, pip[i], q))
            continue
        t1 = m[i] * dt**2 * p[i]
        t2 = dt * a
        t3 = p[i] / kap[i]
        res.append(rel(t1 + t2 + t3, t1, t2, t3))
        q = g * (a + m[i] * dt * p[i])
        res.append(rel(pip[i] - q, pip[i], q))
    return float(max(res))


def scalar_product_density(a: PolarizedMode, b: PolarizedMode) -> complex:
    """Density i a^dagger eta b of the conserved scalar product (per unit zeta)."""
    if a.root.omega_prime != b.root.omega_prime:
        raise ValueError("scalar product density requires equal comoving frequencies")
    return complex(1j * np.vdot(a.amplitude, ETA @ b.amplitude))


def current_density(a: PolarizedMode, b: PolarizedMode, frame: FrontFrame) -> complex:
    """zeta-component of the conserved current between two modes of one medium.

    j = (k'_a* + k'_b) A_a* A_b / (4 pi) - i u sum_i (P_a,i* Pi_b,i - Pi_a,i* P_b,i).
    For a = b it equals the comoving group velocity times the norm density, and it
    vanishes between distinct modes of the same omega' (k'_b != k'_a*).
    """
    if a.root.omega_prime != b.root.omega_prime:
        raise ValueError("current density requires equal comoving frequencies")
    ka, kb = complex(a.root.k_prime), complex(b.root.k_prime)
    x, y = a.amplitude, b.amplitude
    j = (ka.conjugate() + kb) * x[0].conjugate() * y[0] / (4 * np.pi)
    j -= 1j * frame.u * np.sum(x[1:4].conjugate() * y[5:8] - x[5:8].conjugate() * y[1:4])
    return complex(j)


def normalize(mode: PolarizedMode) -> PolarizedMode:
    """Delta-normalize in omega': |norm density| * 2 pi * |v'_g| = 1, A real positive."""
    r = mode.root
    if not r.propagating:
        raise NormalizationError("evanescent modes are not normalized")
    vg = abs(r.comoving_group_velocity)
    rho = scalar_product_density(mode, mode).real
    if vg == 0 or not math.isfinite(vg) or rho == 0:
        raise NormalizationError("singular normalization (vanishing group velocity or norm)")
    amp = mode.amplitude / math.sqrt(2 * np.pi * abs(rho) * vg)
    a0 = amp[0]
    if a0 != 0:
        amp = amp * (abs(a0) / a0)
    else:
        nz = amp[np.flatnonzero(np.abs(amp) > 0)[0]]
        amp = amp * (1j * abs(nz) / nz)
    return replace(mode, amplitude=amp, normalized=True)


def mode_vector(medium: SellmeierMedium, root: ModeRoot, frame: FrontFrame) -> PolarizedMode:
    """Normalized for propagating roots, A = 1 for evanescent ones."""
    m = polarization_vector(medium, root, frame)
    return normalize(m) if root.propagating else m
