"""Local modes at fixed comoving frequency.

At a fixed comoving frequency omega' the lab pair obeys omega - u*k = omega'/gamma.
Substituting k into the cleared Sellmeier relation gives a real polynomial
of degree 8 in omega whose roots are the eight local modes of one medium.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import IntEnum

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.optimize import brentq

from .medium import (
    ComovingWave,
    FrontFrame,
    LabWave,
    SellmeierMedium,
    dispersion_residual,
    group_index_factor,
    lab_group_velocity,
    n_squared,
)

EPS_PROP = 1e-8
EPS_AMBIGUOUS = 1e-5
EPS_EDGE = 1e-9
OPTICAL_BRANCH = 2

OPTICAL_KINDS = ("lo", "mo", "uo", "no")


class RootFindingError(RuntimeError):
    pass


class LabelingError(RuntimeError):
    pass


class EdgeDegeneracyError(ValueError):
    """omega' lies within eps_edge of a subluminal-interval edge."""


@dataclass(frozen=True)
class ModeRoot:
    omega: complex
    k: complex
    omega_prime: float
    k_prime: complex
    side: str
    propagating: bool
    norm_sign: int  # 0 for evanescent roots
    branch: int
    comoving_group_velocity: float  # nan for evanescent roots
    label: str = ""
    flagged: bool = False

    @property
    def lab(self) -> LabWave:
        return LabWave(self.omega, self.k)

    @property
    def comoving(self) -> ComovingWave:
        return ComovingWave(self.omega_prime, self.k_prime)

    @property
    def kind(self) -> str:
        return self.label[:-1]

    @property
    def is_decaying(self) -> bool:
        """True if e^{i k' zeta} decays away from the front on this root's side."""
        im = self.k_prime.imag
        return im < 0 if self.side == "L" else im > 0

    @property
    def incoming(self) -> bool:
        """Propagating towards the front (left side moving right, or vice versa)."""
        v = self.comoving_group_velocity
        return v > 0 if self.side == "L" else v < 0


@dataclass(frozen=True)
class SubluminalInterval:
    """Comoving band where the optical branch carries three propagating modes.

    ``lab_low``/``lab_high`` are the lab frequencies of the two edges
    (where the lab group velocity equals u) matching ``omega_min``/``omega_max``.
    """

    omega_min: float
    omega_max: float
    side: str
    lab_at_min: float = math.nan
    lab_at_max: float = math.nan

    @classmethod
    def empty(cls, side: str) -> "SubluminalInterval":
        return cls(math.nan, math.nan, side)

    @property
    def is_empty(self) -> bool:
        return math.isnan(self.omega_min)

    @property
    def width(self) -> float:
        return 0.0 if self.is_empty else self.omega_max - self.omega_min

    def contains(self, omega_prime: float) -> bool:
        return not self.is_empty and self.omega_min < omega_prime < self.omega_max


class HorizonConfiguration(IntEnum):
    NoHorizonLow = 1
    WhiteHole = 2
    HorizonlessOverlap = 3
    BlackHole = 4
    NoHorizonHigh = 5


# ---------------------------------------------------------------- polynomial


def _poly_ascending(medium: SellmeierMedium, omega_prime: float, frame: FrontFrame, scale: float):
    om2 = (medium.resonance_omegas / scale) ** 2
    b = medium.strengths
    w0 = omega_prime / frame.gamma / scale
    f = [np.array([om2[i], 0.0, -1.0]) for i in range(3)]
    den = P.polymul(P.polymul(f[0], f[1]), f[2])
    num = den.copy()
    for i in range(3):
        j, l = [x for x in range(3) if x != i]
        num = P.polyadd(num, b[i] * om2[i] * P.polymul(f[j], f[l]))
    lhs = P.polymul(np.array([w0 * w0, -2 * w0, 1.0]), den)
    rhs = P.polymul(np.array([0.0, 0.0, frame.u**2]), num)
    return P.polysub(lhs, rhs)


def dispersion_polynomial(medium: SellmeierMedium, omega_prime: float, frame: FrontFrame):
    """Coefficients (highest degree first) of the degree-8 polynomial in lab omega.

    Its roots are the lab frequencies of all local modes at ``omega_prime``.
    """
    if frame.u <= 0:
        raise ValueError("the front must move (u > 0)")
    c = _poly_ascending(medium, omega_prime, frame, 1.0)
    if len(c) != 9 or c[-1] == 0:
        raise RootFindingError("degenerate leading coefficient")
    return c[::-1].astype(complex)


def companion_matrix(coeffs) -> np.ndarray:
    """Frobenius companion matrix of a polynomial given highest degree first."""
    c = np.asarray(coeffs)
    c = c / c[0]
    n = len(c) - 1
    m = np.zeros((n, n), dtype=c.dtype)
    m[1:, :-1] = np.eye(n - 1)
    m[:, -1] = -c[:0:-1]
    return m


def _newton(coeffs, x, real: bool, maxiter: int = 60):
    d = np.polyder(coeffs)
    for _ in range(maxiter):
        p = np.polyval(coeffs, x)
        dp = np.polyval(d, x)
        if dp == 0:
            break
        step = p / dp
        if real:
            step = step.real
        x = x - step
        if abs(step) <= 4e-16 * abs(x):
            break
    return x


def _polished_roots(medium: SellmeierMedium, omega_prime: float, frame: FrontFrame) -> np.ndarray:
    scale = float(medium.resonance_omegas[1])
    coeffs = _poly_ascending(medium, omega_prime, frame, scale)[::-1]
    eig = np.linalg.eigvals(companion_matrix(coeffs))
    if len(eig) != 8 or not np.all(np.isfinite(eig)):
        raise RootFindingError(f"expected 8 finite roots, got {eig}")
    out = []
    for z in eig:
        if abs(z.imag) <= EPS_AMBIGUOUS * abs(z.real):
            out.append(complex(_newton(coeffs, float(z.real), real=True)))
        else:
            out.append(complex(_newton(coeffs.astype(complex), complex(z), real=False)))
    # two near-real eigenvalues that collapse onto one real root are a complex pair
    for i in range(len(out)):
        for j in range(i + 1, len(out)):
            if out[i].imag == 0 and out[j].imag == 0 and abs(out[i] - out[j]) <= 1e-10 * abs(out[i]):
                out[i] = complex(_newton(coeffs.astype(complex), complex(eig[i]), real=False))
                out[j] = complex(_newton(coeffs.astype(complex), complex(eig[j]), real=False))
    roots = np.array(out) * scale
    # enforce exact conjugate symmetry of the complex roots
    cplx = [i for i, z in enumerate(roots) if z.imag != 0]
    used = set()
    for i in cplx:
        if i in used:
            continue
        j = min((j for j in cplx if j != i and j not in used), key=lambda j: abs(roots[j] - roots[i].conjugate()), default=None)
        if j is None:
            raise RootFindingError("unpaired complex root")
        z = 0.5 * (roots[i] + roots[j].conjugate())
        roots[i], roots[j] = z, z.conjugate()
        used.update((i, j))
    srt = np.sort_complex(roots)
    gaps = np.abs(np.diff(srt))
    if np.any(gaps <= 1e-12 * np.max(np.abs(srt))):
        raise RootFindingError(f"coincident roots after polishing at omega'={omega_prime}")
    return roots


def branch_index(medium: SellmeierMedium, omega: float) -> int:
    om = medium.resonance_omegas
    a = abs(omega)
    return 1 + int(np.searchsorted(om, a))


def solve_modes(medium: SellmeierMedium, omega_prime: float, frame: FrontFrame, side: str = "R") -> list[ModeRoot]:
    """The eight local modes of ``medium`` at comoving frequency ``omega_prime``.

    Roots are returned unlabelled, ordered by real lab frequency.
    """
    if omega_prime <= 0:
        raise ValueError("only positive comoving frequencies are supported")
    g, u = frame.gamma, frame.u
    w0 = omega_prime / g
    roots = _polished_roots(medium, omega_prime, frame)
    res = []
    for w in sorted(roots, key=lambda z: (z.real, z.imag)):
        ratio = abs(w.imag) / abs(w.real) if w.real != 0 else math.inf
        propagating = ratio <= EPS_PROP
        flagged = EPS_PROP < ratio <= EPS_AMBIGUOUS
        if propagating:
            w = complex(w.real, 0.0)
        k = (w - w0) / u
        kp = g * (k - u * w)
        if propagating:
            vg = float(lab_group_velocity(medium, w.real, k.real))
            vgp = (vg - u) / (1 - u * vg)
            sign = 1 if w.real > 0 else -1
        else:
            vgp = math.nan
            sign = 0
        res.append(
            ModeRoot(
                omega=w,
                k=k,
                omega_prime=float(omega_prime),
                k_prime=complex(kp),
                side=side,
                propagating=propagating,
                norm_sign=sign,
                branch=branch_index(medium, w.real),
                comoving_group_velocity=vgp,
                flagged=flagged,
            )
        )
    return res


def root_residual(medium: SellmeierMedium, root: ModeRoot) -> float:
    return abs(dispersion_residual(medium, root.omega, root.k))


# ---------------------------------------------------------------- intervals


def optical_branch_floor(medium: SellmeierMedium) -> float:
    """Lab frequency where the optical branch starts (n^2 = 0 above the IR resonance)."""
    om = medium.resonance_omegas
    lo, hi = om[0] * (1 + 1e-12), om[1] * (1 - 1e-12)
    return brentq(lambda w: float(n_squared(medium, w)), lo, hi, xtol=1e-15, rtol=1e-15)


def _vg_optical(medium: SellmeierMedium, w):
    n = np.sqrt(n_squared(medium, w))
    return n / group_index_factor(medium, w)


def find_sli(medium: SellmeierMedium, frame: FrontFrame, side: str = "R", samples: int = 4000) -> SubluminalInterval:
    """Edges of the subluminal interval: where the optical-branch lab group velocity equals u."""
    om = medium.resonance_omegas
    lo = optical_branch_floor(medium) * (1 + 1e-9)
    hi = om[1] * (1 - medium.guard_band)
    grid = np.geomspace(lo, hi, samples)
    f = _vg_optical(medium, grid) - frame.u
    idx = np.nonzero(np.sign(f[:-1]) != np.sign(f[1:]))[0]
    if len(idx) == 0:
        return SubluminalInterval.empty(side)
    if len(idx) != 2:
        raise RootFindingError(f"expected two group-velocity crossings, found {len(idx)}")
    edges = [
        brentq(lambda w: float(_vg_optical(medium, w)) - frame.u, grid[i], grid[i + 1], xtol=1e-15, rtol=1e-15)
        for i in idx
    ]
    g, u = frame.gamma, frame.u
    pairs = []
    for w in edges:
        n = math.sqrt(float(n_squared(medium, w)))
        pairs.append((g * w * (1 - u * n), w))
    pairs.sort()
    (wmin, lab_min), (wmax, lab_max) = pairs
    return SubluminalInterval(wmin, wmax, side, lab_at_min=lab_min, lab_at_max=lab_max)


def configuration(omega_prime: float, sli_left: SubluminalInterval, sli_right: SubluminalInterval, eps_edge: float = EPS_EDGE) -> HorizonConfiguration:
    """Horizon configuration of the optical modes at ``omega_prime``.

    Raises :class:`EdgeDegeneracyError` within ``eps_edge * omega'_maxR`` of an edge.
    """
    edges = [e for s in (sli_left, sli_right) if not s.is_empty for e in (s.omega_min, s.omega_max)]
    if edges:
        tol = eps_edge * max(edges)
        for e in edges:
            if abs(omega_prime - e) <= tol:
                raise EdgeDegeneracyError(f"omega'={omega_prime!r} is within {tol:.3g} of edge {e!r}")

    def state(s):
        if s.is_empty:
            return "above"
        if omega_prime < s.omega_min:
            return "below"
        if omega_prime < s.omega_max:
            return "inside"
        return "above"

    key = (state(sli_left), state(sli_right))
    table = {
        ("below", "below"): HorizonConfiguration.NoHorizonLow,
        ("inside", "below"): HorizonConfiguration.WhiteHole,
        ("inside", "inside"): HorizonConfiguration.HorizonlessOverlap,
        ("above", "inside"): HorizonConfiguration.BlackHole,
        ("above", "above"): HorizonConfiguration.NoHorizonHigh,
        # a left side without subluminal interval keeps only loL; below the
        # right interval this is the reduced form of configuration 1
        ("above", "below"): HorizonConfiguration.NoHorizonLow,
    }
    if key not in table:
        raise ValueError(f"unsupported interval ordering {key} at omega'={omega_prime}")
    return table[key]


def near_edge(omega_prime: float, slis, eps_edge: float = EPS_EDGE) -> bool:
    edges = [e for s in slis if not s.is_empty for e in (s.omega_min, s.omega_max)]
    if not edges:
        return False
    tol = eps_edge * max(edges)
    return any(abs(omega_prime - e) <= tol for e in edges)


# ---------------------------------------------------------------- labels


def label_roots(roots: list[ModeRoot], sli: SubluminalInterval) -> list[ModeRoot]:
    """Attach lo/mo/uo/no labels to optical roots and generic labels to the rest.

    Non-optical propagating roots get ``b<branch><p|n>``; evanescent roots get
    ``ed`` (decaying away from the front on their side) or ``eg``.
    """
    side = roots[0].side
    optical_pos = [r for r in roots if r.propagating and r.branch == OPTICAL_BRANCH and r.norm_sign > 0]
    optical_neg = [r for r in roots if r.propagating and r.branch == OPTICAL_BRANCH and r.norm_sign < 0]
    wp = roots[0].omega_prime
    names: dict[int, str] = {}
    if len(optical_neg) != 1:
        raise LabelingError(f"expected one negative-norm optical root, found {len(optical_neg)} at omega'={wp}")
    names[id(optical_neg[0])] = "no"
    if len(optical_pos) == 3:
        if not sli.contains(wp):
            raise LabelingError(f"three optical roots outside the subluminal interval at omega'={wp}")
        for name, r in zip(("lo", "mo", "uo"), sorted(optical_pos, key=lambda r: r.k_prime.real)):
            names[id(r)] = name
    elif len(optical_pos) == 1:
        if sli.contains(wp):
            raise LabelingError(f"one optical root inside the subluminal interval at omega'={wp}")
        below = not sli.is_empty and wp < sli.omega_min
        names[id(optical_pos[0])] = "uo" if below else "lo"
    else:
        raise LabelingError(f"{len(optical_pos)} positive optical roots at omega'={wp}")
    out = []
    for r in roots:
        name = names.get(id(r))
        if name is None:
            if r.propagating:
                name = f"b{r.branch}{'p' if r.norm_sign > 0 else 'n'}"
            else:
                name = "ed" if r.is_decaying else "eg"
        out.append(replace(r, label=name + side))
    return out


def local_modes(medium: SellmeierMedium, omega_prime: float, frame: FrontFrame, side: str, sli: SubluminalInterval | None = None) -> list[ModeRoot]:
    if sli is None:
        sli = find_sli(medium, frame, side)
    return label_roots(solve_modes(medium, omega_prime, frame, side), sli)
