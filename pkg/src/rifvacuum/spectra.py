"""Moving-frame and laboratory spectra, photon numbers and scaling fits."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import brentq

from . import __version__
from .medium import FrontFrame, IndexStep, group_velocity, n_squared
from .modes import (
    EPS_EDGE,
    EdgeDegeneracyError,
    LabelingError,
    RootFindingError,
    SubluminalInterval,
    configuration,
    find_sli,
    near_edge,
    optical_branch_floor,
)
from .scattering import UNITARITY_TOL, MatchingError, UnitarityError, all_fluxes, local_basis, s_matrix

HARD_ERRORS = (UnitarityError, RootFindingError, LabelingError)
LAB_MIN_WAVELENGTH_M = 230e-9
OPTICAL_OUT = ("loL", "moR", "uoL", "noL")
STANDARD_DELTA_N = (1e-3, 2e-3, 4e-3, 1e-2, 2e-2, 3e-2, 4e-2, 5.6e-2)
EDGE_NUDGE = 1e-4
DELTA_TAU_CONVENTION = "delta_tau = L / (u * gamma)"

_KIND_ORDER = {"no": 0, "lo": 1, "mo": 2, "uo": 3, "b1n": 4, "b1p": 5, "b3n": 6, "b3p": 7, "b4n": 8, "b4p": 9}


def column_order(label: str) -> tuple:
    return (0 if label.endswith("L") else 1, _KIND_ORDER.get(label[:-1], 99), label)


@dataclass
class SpectrumTable:
    """Sampled flux densities, one column per out-mode.

    Moving frame: axis is omega' (internal units), columns are photons per unit
    tau per unit omega'. Lab frame: axis is wavelength in metres, columns are
    photons per unit lab time per unit wavelength (internal units; the CSV
    writer converts to s^-1 nm^-1).
    """

    frame: str
    axis: np.ndarray
    columns: dict[str, np.ndarray]
    metadata: dict = field(default_factory=dict)
    quarantine: list[dict] = field(default_factory=list)
    configurations: np.ndarray | None = None
    preimages: dict[str, np.ndarray] = field(default_factory=dict)
    edge_samples: dict[str, list[tuple[float, float]]] = field(default_factory=dict)

    @property
    def total(self) -> np.ndarray:
        out = np.zeros_like(self.axis, dtype=float)
        for lab in sorted(self.columns, key=column_order):
            out = out + self.columns[lab]
        return out

    @property
    def hard_failures(self) -> list[dict]:
        return [q for q in self.quarantine if q.get("hard")]


# ---------------------------------------------------------------- point evaluation


def _slis(step: IndexStep, frame: FrontFrame) -> tuple[SubluminalInterval, SubluminalInterval]:
    return find_sli(step.left, frame, "L"), find_sli(step.right, frame, "R")


def _evaluate(args):
    omega_prime, step, frame, slis, tol = args
    try:
        if near_edge(omega_prime, slis, EPS_EDGE):
            raise EdgeDegeneracyError(f"omega'={omega_prime!r} on a subluminal-interval edge")
        basis = local_basis(omega_prime, step, frame, slis)
        s = s_matrix(omega_prime, step, frame, basis=basis, check=tol)
        return all_fluxes(s), int(configuration(omega_prime, *slis)), None, False
    except (EdgeDegeneracyError, MatchingError, *HARD_ERRORS) as exc:
        return None, 0, f"{type(exc).__name__}: {exc}", isinstance(exc, HARD_ERRORS)


def evaluate_fluxes(omegas, step: IndexStep, frame: FrontFrame, slis=None, jobs: int = 1, tol: float = UNITARITY_TOL):
    """Flux densities of every out-mode at each omega'; results come back in grid order."""
    if slis is None:
        slis = _slis(step, frame)
    tasks = [(float(w), step, frame, slis, tol) for w in omegas]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_evaluate, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    return [_evaluate(t) for t in tasks]


# ---------------------------------------------------------------- grids


def _cheb_nodes(a: float, b: float, n: int) -> np.ndarray:
    j = np.arange(n)
    return a + (b - a) * (1 - np.cos(np.pi * (j + 0.5) / n)) / 2


def sli_edges(slis) -> list[float]:
    return sorted(e for s in slis if not s.is_empty for e in (s.omega_min, s.omega_max))


def default_omega_grid(step: IndexStep, frame: FrontFrame, n_points: int = 400, slis=None) -> np.ndarray:
    """Edge-refined omega' grid over [0.8 * lowest edge, 1.2 * omega'_maxR].

    Each interval between consecutive edges gets Chebyshev nodes (clustered
    towards both ends, never on an edge), with points shared in proportion to
    its length.
    """
    if slis is None:
        slis = _slis(step, frame)
    edges = sli_edges(slis)
    if not edges:
        raise ValueError("no subluminal interval on either side")
    lo, hi = 0.8 * edges[0], 1.2 * edges[-1]
    brk = [lo] + [e for e in edges if lo < e < hi] + [hi]
    brk = sorted(set(brk))
    lengths = np.diff(brk)
    nseg = len(lengths)
    min_pts = min(8, n_points // nseg)
    alloc = np.maximum(min_pts, np.floor(n_points * lengths / lengths.sum()).astype(int))
    while alloc.sum() > n_points:
        alloc[np.argmax(alloc)] -= 1
    while alloc.sum() < n_points:
        alloc[np.argmax(lengths / alloc)] += 1
    pts = np.concatenate([_cheb_nodes(a, b, n) for a, b, n in zip(brk[:-1], brk[1:], alloc)])
    return np.sort(pts)


def default_wavelength_grid(n_points: int = 2000, lo_m: float = LAB_MIN_WAVELENGTH_M, hi_m: float = 4e-6) -> np.ndarray:
    return np.linspace(lo_m, hi_m, n_points)


# ---------------------------------------------------------------- moving frame


def _metadata(step: IndexStep, frame: FrontFrame, slis) -> dict:
    sl, sr = slis
    return {
        "delta_n": step.delta_n,
        "u": frame.u,
        "gamma": frame.gamma,
        "sigma": step.sigma,
        "n_ref": step.n_ref_right,
        "sli_left": [sl.omega_min, sl.omega_max],
        "sli_right": [sr.omega_min, sr.omega_max],
        "tool_version": __version__,
    }


def moving_frame_spectrum(step: IndexStep, frame: FrontFrame, omegas=None, n_points: int = 400, jobs: int = 1, tol: float = UNITARITY_TOL) -> SpectrumTable:
    """Flux density of every out-mode over an omega' grid.

    Points on an interval edge, or whose S-matrix fails, are quarantined and
    carry zero flux.
    """
    slis = _slis(step, frame)
    grid_spec = "explicit"
    if omegas is None:
        omegas = default_omega_grid(step, frame, n_points, slis)
        grid_spec = f"chebyshev-per-configuration, {n_points} points"
    omegas = np.asarray(omegas, dtype=float)
    results = evaluate_fluxes(omegas, step, frame, slis, jobs, tol)
    labels = sorted({lab for r in results if r[0] for lab in r[0]}, key=column_order)
    cols = {lab: np.zeros(len(omegas)) for lab in labels}
    configs = np.zeros(len(omegas), dtype=int)
    quarantine = []
    for i, (fl, conf, err, hard) in enumerate(results):
        if fl is None:
            quarantine.append({"omega_prime": float(omegas[i]), "reason": err, "hard": hard})
            continue
        configs[i] = conf
        for lab, v in fl.items():
            cols[lab][i] = v
    meta = _metadata(step, frame, slis)
    meta.update(grid=grid_spec, configuration_boundaries=sli_edges(slis))
    return SpectrumTable("moving", omegas, cols, meta, quarantine, configs)


# ---------------------------------------------------------------- lab frame


def _lab_map(medium, frame: FrontFrame, omega, negative: bool = False):
    """omega' of the optical-branch point at lab |frequency| omega (negative branch if asked)."""
    n = np.sqrt(n_squared(medium, omega))
    g, u = frame.gamma, frame.u
    return g * omega * (u * n - 1) if negative else g * omega * (1 - u * n)


def _omega_zero(step: IndexStep, frame: FrontFrame, slis) -> float:
    """Lab frequency where the left optical branch has omega' = 0 (n_L = 1/u)."""
    sl = slis[0]
    floor = optical_branch_floor(step.left)
    hi = step.left.resonance_omegas[1] * (1 - step.left.guard_band)
    lo = sl.lab_at_max if not sl.is_empty else floor * (1 + 1e-9)
    return brentq(lambda w: math.sqrt(n_squared(step.left, w)) - 1 / frame.u, lo, hi)


def optical_bands(step: IndexStep, frame: FrontFrame, slis=None) -> dict[str, tuple[float, float]]:
    """Lab-frequency band (omega_lo, omega_hi) over which each optical out-mode emits."""
    if slis is None:
        slis = _slis(step, frame)
    sl, sr = slis
    zero = _omega_zero(step, frame, slis)
    bands = {}
    if not sr.is_empty:
        bands["moR"] = (sr.lab_at_min, sr.lab_at_max)
    if sl.is_empty:
        bands["loL"] = (0.0, zero)
    else:
        bands["loL"] = (0.0, sl.lab_at_min)
        bands["uoL"] = (sl.lab_at_max, zero)
    bands["noL"] = (zero, math.inf)
    return bands


def _optical_candidates(bands, step: IndexStep, frame: FrontFrame, omega: float) -> list[tuple[str, float]]:
    """(out-mode label, omega') pairs that emit at lab frequency ``omega``."""
    out = []
    for lab, (lo, hi) in bands.items():
        if lo < omega < hi:
            med = step.right if lab.endswith("R") else step.left
            out.append((lab, float(_lab_map(med, frame, omega, negative=lab.startswith("no")))))
    return [(lab, wp) for lab, wp in out if wp > 0]


def wavelength_markers(step: IndexStep, frame: FrontFrame, slis=None) -> dict:
    """Lab wavelengths (m) of omega' = 0 on the left and of the horizon intervals.

    ``black_hole``: moR band where omega' is in (omega'_maxL, omega'_maxR).
    ``white_hole``: loL band where omega' is in (omega'_minL, omega'_minR).
    """
    from .units import wavelength_from_omega

    if slis is None:
        slis = _slis(step, frame)
    sl, sr = slis
    floor = optical_branch_floor(step.left)
    zero = _omega_zero(step, frame, slis)
    markers = {"omega_prime_zero": float(wavelength_from_omega(zero))}
    if not sl.is_empty and not sr.is_empty:
        lo_bh = max(sl.omega_max, sr.omega_min)
        w_bh = brentq(lambda w: _lab_map(step.right, frame, w) - lo_bh, sr.lab_at_min, sr.lab_at_max)
        markers["black_hole"] = sorted([float(wavelength_from_omega(sr.lab_at_max)), float(wavelength_from_omega(w_bh))])
        if sl.omega_min < sr.omega_min:
            top = min(sr.omega_min, sl.omega_max)
            w_wh = brentq(lambda w: _lab_map(step.left, frame, w) - top, floor * (1 + 1e-9), sl.lab_at_min)
            markers["white_hole"] = sorted([float(wavelength_from_omega(sl.lab_at_min)), float(wavelength_from_omega(w_wh))])
    return markers


def lab_spectrum(step: IndexStep, frame: FrontFrame, wavelengths=None, n_points: int = 2000, jobs: int = 1, tol: float = UNITARITY_TOL) -> SpectrumTable:
    """Lab-frame emission per unit wavelength for the optical out-modes and their sum.

    Each wavelength is mapped to the omega' preimage of every out-mode that
    emits there; the moving-frame flux is carried over with the Jacobian
    |1 - u/v_g| and converted from frequency to wavelength density by omega^2/(2 pi).
    """
    from .units import LENGTH_UNIT_M, omega_from_wavelength, wavelength_from_omega

    if wavelengths is None:
        wavelengths = default_wavelength_grid(n_points)
    wavelengths = np.asarray(wavelengths, dtype=float)
    if np.any(wavelengths < LAB_MIN_WAVELENGTH_M * (1 - 1e-12)):
        raise ValueError("wavelengths below the 230 nm cut-off are not supported")
    slis = _slis(step, frame)
    bands = optical_bands(step, frame, slis)
    omegas = omega_from_wavelength(wavelengths)
    w_lo, w_hi = float(omegas.min()), float(omegas.max())
    tasks = []
    for i, w in enumerate(omegas):
        for lab, wp in _optical_candidates(bands, step, frame, float(w)):
            tasks.append((i, lab, wp, float(w)))
    # band ends that fall inside the window, sampled just inside the band
    for lab, (lo, hi) in bands.items():
        for edge, nudge in ((lo, 1 + EDGE_NUDGE), (hi, 1 - EDGE_NUDGE)):
            if w_lo < edge < w_hi:
                w = edge * nudge
                for cand, wp in _optical_candidates(bands, step, frame, w):
                    if cand == lab:
                        tasks.append((-1, lab, wp, w))
    results = evaluate_fluxes([t[2] for t in tasks], step, frame, slis, jobs, tol)
    cols = {lab: np.zeros(len(wavelengths)) for lab in OPTICAL_OUT}
    pre = {lab: np.full(len(wavelengths), np.nan) for lab in OPTICAL_OUT}
    edges = {lab: [] for lab in OPTICAL_OUT}
    quarantine = []
    for (i, lab, wp, w), (fl, conf, err, hard) in zip(tasks, results):
        lam = float(wavelengths[i]) if i >= 0 else float(wavelength_from_omega(w))
        if fl is None or lab not in fl:
            reason = err if fl is None else "mode is not outgoing"
            quarantine.append({"wavelength_m": lam, "mode": lab, "omega_prime": wp, "reason": reason, "hard": fl is not None or hard})
            continue
        med = step.right if lab.endswith("R") else step.left
        vg = group_velocity(med, w)
        value = abs(1 - frame.u / vg) * fl[lab] * w**2 / (2 * np.pi)
        if i >= 0:
            pre[lab][i] = wp
            cols[lab][i] = value
        else:
            edges[lab].append((lam, value))
    meta = _metadata(step, frame, slis)
    meta.update(
        grid=f"{len(wavelengths)} wavelengths {wavelengths.min():.6g}-{wavelengths.max():.6g} m",
        markers_m=wavelength_markers(step, frame, slis),
        wavelength_unit_internal_m=LENGTH_UNIT_M,
    )
    meta["bands_omega"] = {k: list(v) for k, v in bands.items()}
    return SpectrumTable("lab", wavelengths, cols, meta, quarantine, preimages=pre, edge_samples=edges)


def lab_band_integral(table: SpectrumTable, label: str) -> float:
    """Integral over wavelength (internal units) of one lab column.

    Simpson on the grid points inside the band, plus a trapezoid for the
    partial cell between each band-end sample and its nearest grid point.
    """
    from .units import LENGTH_UNIT_M

    x = table.axis / LENGTH_UNIT_M
    y = table.columns[label]
    inside = np.flatnonzero(np.isfinite(table.preimages.get(label, y)))
    if len(inside) == 0:
        return 0.0
    total = 0.0
    runs = np.split(inside, np.flatnonzero(np.diff(inside) > 1) + 1)
    for run in runs:
        if len(run) > 1:
            total += simpson(y[run], x=x[run])
    for lam, v in table.edge_samples.get(label, []):
        xe = lam / LENGTH_UNIT_M
        j = inside[np.argmin(np.abs(x[inside] - xe))]
        total += 0.5 * (v + y[j]) * abs(x[j] - xe)
    return float(total)


def frame_bookkeeping(step: IndexStep, frame: FrontFrame, table: SpectrumTable, n_per_segment: int = 48) -> dict[str, tuple[float, float]]:
    """Per optical out-mode: (lab rate integrated over wavelength, moving-frame rate / gamma).

    Both are photons per unit lab time; they agree when the lab table is a
    faithful change of variables of the moving-frame flux.
    """
    from .units import omega_from_wavelength

    slis = _slis(step, frame)
    w_lo, w_hi = (float(x) for x in sorted(omega_from_wavelength(np.array([table.axis.max(), table.axis.min()]))))
    out = {}
    for lab, (lo, hi) in optical_bands(step, frame, slis).items():
        a, b = max(lo, w_lo), min(hi, w_hi)
        if not b > a:
            continue
        med = step.right if lab.endswith("R") else step.left
        neg = lab.startswith("no")
        wa, wb = sorted(max(0.0, float(_lab_map(med, frame, w, neg))) for w in (a, b))
        moving = integrate_flux(step, frame, lab, wa, wb, n_per_segment, slis=slis) / frame.gamma
        out[lab] = (lab_band_integral(table, lab), moving)
    return out


def lab_peak(table: SpectrumTable) -> dict:
    tot = table.total
    i = int(np.argmax(tot))
    contrib = {lab: float(c[i]) for lab, c in table.columns.items()}
    return {"wavelength_m": float(table.axis[i]), "total": float(tot[i]), "dominant_mode": max(contrib, key=contrib.get)}


def mode_onsets(table: SpectrumTable) -> list[str]:
    """Out-modes ordered by the lowest lab frequency (longest wavelength) at which they emit."""
    onset = {}
    for lab, c in table.columns.items():
        nz = np.flatnonzero(c > 0)
        if len(nz):
            onset[lab] = float(table.axis[nz].max())
    return sorted(onset, key=lambda k: -onset[k])


# ---------------------------------------------------------------- integrals and fits


def delta_tau(length_m: float, frame: FrontFrame) -> float:
    """Comoving emission time (internal units) for a front crossing ``length_m``."""
    from .units import LENGTH_UNIT_M

    return (length_m / LENGTH_UNIT_M) / (frame.u * frame.gamma)


def _interval(slis, which: str) -> tuple[float, float]:
    sl, sr = slis
    if sr.is_empty:
        return math.nan, math.nan
    if which == "sli":
        return sr.omega_min, sr.omega_max
    if which == "horizon":
        lo = sr.omega_min if sl.is_empty else max(sl.omega_max, sr.omega_min)
        return min(lo, sr.omega_max), sr.omega_max
    raise ValueError(f"unknown interval {which!r}")


def integrate_flux(step: IndexStep, frame: FrontFrame, label: str, a: float, b: float, n_per_segment: int = 48, jobs: int = 1, slis=None) -> float:
    """Integral of one out-mode's flux density over omega' in [a, b].

    The range is split at every interval edge; each piece is integrated with
    composite Simpson in theta, omega' = lo + (hi-lo)(1-cos theta)/2, which
    refines towards both ends and gives an integrand vanishing at theta = 0, pi.
    Points where ``label`` is not an out-mode contribute zero.
    """
    if slis is None:
        slis = _slis(step, frame)
    if not (b > a):
        return 0.0
    brk = sorted({a, b} | {e for e in sli_edges(slis) if a < e < b})
    total = 0.0
    theta = np.pi * (np.arange(n_per_segment) + 0.5) / n_per_segment
    for lo, hi in zip(brk[:-1], brk[1:]):
        w = lo + (hi - lo) * (1 - np.cos(theta)) / 2
        res = evaluate_fluxes(w, step, frame, slis, jobs)
        bad = [r[2] for r in res if r[0] is None]
        if bad:
            raise RuntimeError(f"flux integral hit failing points: {bad[:3]}")
        f = np.array([r[0].get(label, 0.0) for r in res])
        g = f * (hi - lo) / 2 * np.sin(theta)
        total += simpson(np.r_[0.0, g, 0.0], x=np.r_[0.0, theta, np.pi])
    return float(total)


def emission_integral(step: IndexStep, frame: FrontFrame, label: str = "moR", interval: str = "sli", n_per_segment: int = 48, jobs: int = 1) -> float:
    """Integral of a flux density over the right subluminal interval.

    ``interval='sli'`` spans [omega'_minR, omega'_maxR]; ``'horizon'`` only the
    black-hole part [max(omega'_maxL, omega'_minR), omega'_maxR].
    """
    if step.delta_n == 0:
        return 0.0
    slis = _slis(step, frame)
    a, b = _interval(slis, interval)
    return integrate_flux(step, frame, label, a, b, n_per_segment, jobs, slis)


def photon_number(step: IndexStep, frame: FrontFrame, length_m: float = 1e-3, interval: str = "sli", n_per_segment: int = 48, jobs: int = 1) -> float:
    """Photons emitted into moR while the front crosses ``length_m``.

    N = delta_tau / (2 pi) * integral of I'_moR d omega', delta_tau = L / (u gamma).
    """
    if length_m <= 0:
        raise ValueError("propagation length must be positive")
    integral = emission_integral(step, frame, "moR", interval, n_per_segment, jobs)
    return delta_tau(length_m, frame) / (2 * np.pi) * integral


@dataclass(frozen=True)
class PowerLawFit:
    exponent: float
    prefactor: float
    fit_range: tuple[float, float]
    r_squared: float


def fit_power_law(samples, fit_range: tuple[float, float] = (0.0, math.inf)) -> PowerLawFit:
    """Least-squares line through (log x, log y) for samples with x in ``fit_range``."""
    pts = [(x, y) for x, y in samples if fit_range[0] <= x <= fit_range[1]]
    if len(pts) < 5:
        raise ValueError(f"need at least 5 samples in range, got {len(pts)}")
    x, y = np.array(pts, dtype=float).T
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("power-law fit needs strictly positive samples")
    lx, ly = np.log(x), np.log(y)
    slope, icpt = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + icpt)
    ss_tot = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return PowerLawFit(float(slope), float(np.exp(icpt)), (float(x.min()), float(x.max())), float(min(max(r2, 0.0), 1.0)))


def linear_r_squared(x, y) -> float:
    x, y = np.asarray(x, float), np.asarray(y, float)
    slope, icpt = np.polyfit(x, y, 1)
    resid = y - (slope * x + icpt)
    ss_tot = np.sum((y - y.mean()) ** 2)
    return float(1.0 - np.sum(resid**2) / ss_tot)


@dataclass(frozen=True)
class SliWidth:
    horizon: float  # omega'_maxR - max(omega'_maxL, omega'_minR)
    full: float  # omega'_maxR - omega'_minR
    empty: bool


def sli_width(step: IndexStep, frame: FrontFrame) -> SliWidth:
    slis = _slis(step, frame)
    sr = slis[1]
    if sr.is_empty:
        return SliWidth(0.0, 0.0, True)
    if step.delta_n == 0:
        return SliWidth(0.0, sr.width, False)
    a, b = _interval(slis, "horizon")
    return SliWidth(b - a, sr.width, False)


@dataclass
class SweepRow:
    delta_n: float
    sigma: float
    photons_sli: float
    photons_horizon: float
    horizon_width: float
    sli_width: float


def sweep(right, frame: FrontFrame, delta_ns, length_m: float = 1e-3, n_ref=None, n_per_segment: int = 48, jobs: int = 1) -> list[SweepRow]:
    from .medium import scale_medium

    rows = []
    for dn in delta_ns:
        step = scale_medium(right, dn, n_ref)
        w = sli_width(step, frame)
        rows.append(
            SweepRow(
                delta_n=float(dn),
                sigma=step.sigma,
                photons_sli=photon_number(step, frame, length_m, "sli", n_per_segment, jobs),
                photons_horizon=photon_number(step, frame, length_m, "horizon", n_per_segment, jobs),
                horizon_width=w.horizon,
                sli_width=w.full,
            )
        )
    return rows
