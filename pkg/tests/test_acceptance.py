"""Acceptance checks, one per criterion.

Run with pytest, or directly (``python tests/test_acceptance.py``) for a
PASS/FAIL summary line per criterion.
"""

from __future__ import annotations

import functools
import math
import subprocess
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

from rifvacuum.medium import FrontFrame, fused_silica, refractive_index, scale_medium
from rifvacuum.modes import configuration, find_sli, label_roots, root_residual, solve_modes
from rifvacuum.scattering import all_fluxes, local_basis, s_matrix
from rifvacuum.spectra import (
    default_omega_grid,
    evaluate_fluxes,
    fit_power_law,
    frame_bookkeeping,
    lab_peak,
    lab_spectrum,
    linear_r_squared,
    moving_frame_spectrum,
    photon_number,
    sli_width,
)
from rifvacuum.units import omega_from_wavelength

U = 0.66
FRAME = FrontFrame(U)
SILICA = fused_silica()


@functools.lru_cache(maxsize=None)
def step(dn):
    return scale_medium(SILICA, dn)


@functools.lru_cache(maxsize=None)
def slis(dn):
    s = step(dn)
    return find_sli(s.left, FRAME, "L"), find_sli(s.right, FRAME, "R")


@functools.lru_cache(maxsize=None)
def lab_table(dn):
    return lab_spectrum(step(dn), FRAME)


@functools.lru_cache(maxsize=None)
def moving_table(dn):
    return moving_frame_spectrum(step(dn), FRAME)


def cheb(a, b, n):
    j = np.arange(n)
    return a + (b - a) * (1 - np.cos(np.pi * (j + 0.5) / n)) / 2


# ---------------------------------------------------------------- criteria


def criterion_01():
    lam = 800e-9
    b = [4 * math.pi * k for k in SILICA.elastic_constants]
    c = SILICA.resonance_wavelengths
    textbook = math.sqrt(1 + sum(bi * lam**2 / (lam**2 - ci**2) for bi, ci in zip(b, c)))
    n = refractive_index(SILICA, omega_from_wavelength(lam))
    err = abs(n - textbook)
    return err <= 1e-3, f"n(800 nm) = {n:.6f}, textbook {textbook:.6f}, |diff| = {err:.2e}"


def criterion_02():
    worst, bad = 0.0, []
    for dn in (1e-3, 2e-2, 5.6e-2):
        st, sl = step(dn), slis(dn)
        for wp in default_omega_grid(st, FRAME, 400, sl):
            for side, sli in zip(("L", "R"), sl):
                med = st.medium(side)
                roots = solve_modes(med, wp, FRAME, side)
                worst = max(worst, max(root_residual(med, r) for r in roots))
                prop = [r for r in roots if r.propagating]
                ev = [r for r in roots if not r.propagating]
                if len(roots) != 8:
                    bad.append((dn, wp, side, "count"))
                if sli.contains(wp):
                    ok = len(prop) == 8
                else:
                    ok = len(prop) == 6 and len(ev) == 2 and abs(ev[0].omega - ev[1].omega.conjugate()) <= 1e-12 * abs(ev[0].omega)
                if not ok:
                    bad.append((dn, wp, side))
    return worst <= 1e-9 and not bad, f"max residual {worst:.2e}; {len(bad)} points with wrong mode counts"


def criterion_03():
    t0 = time.perf_counter()
    worst_u, worst_b, n = 0.0, 0.0, 0
    for dn in (1e-3, 2e-2, 5.6e-2):
        st, sl = step(dn), slis(dn)
        for wp in default_omega_grid(st, FRAME, 400, sl):
            s = s_matrix(wp, st, FRAME, basis=local_basis(wp, st, FRAME, sl), check=None)
            worst_u = max(worst_u, s.unitarity_residual())
            fl = all_fluxes(s)
            sign = dict(zip(s.out_labels, s.metric_out))
            worst_b = max(worst_b, abs(sum(v * sign[k] for k, v in fl.items())))
            n += 1
    dt = time.perf_counter() - t0
    ok = worst_u <= 1e-8 and worst_b <= 1e-8 and dt < 10.0
    return ok, f"{n} S-matrices in {dt:.1f} s; unitarity residual {worst_u:.2e}; flux balance {worst_b:.2e}"


def criterion_04():
    st = step(0.0)
    sl = slis(0.0)
    worst_flux, worst_off = 0.0, 0.0
    for wp in default_omega_grid(st, FRAME, 400, sl):
        s = s_matrix(wp, st, FRAME, basis=local_basis(wp, st, FRAME, sl))
        worst_flux = max(worst_flux, max(all_fluxes(s).values()))
        a = np.abs(s.entries)
        for i, lab in enumerate(s.in_labels):
            j = s.out_labels.index(lab[:-1] + ("R" if lab.endswith("L") else "L"))
            worst_off = max(worst_off, abs(a[i, j] - 1))
            a[i, j] = 0
        worst_off = max(worst_off, a.max())
    return worst_flux <= 1e-12 and worst_off <= 1e-12, f"max flux {worst_flux:.2e}; max deviation from identity (up to phases) {worst_off:.2e}"


def criterion_05():
    t = moving_table(0.02)
    sl, sr = slis(0.02)
    outside = (t.axis < sr.omega_min) | (t.axis > sr.omega_max)
    zero_outside = bool(np.all(t.columns["moR"][outside] == 0.0))
    # every grid point of the black-hole interval against its mirror image about omega'_maxL
    bh = t.axis[(t.axis > sl.omega_max) & (t.axis < sr.omega_max)]
    mirror = 2 * sl.omega_max - bh
    keep = mirror > sr.omega_min
    hi = np.array([f[0]["moR"] for f in evaluate_fluxes(bh[keep], step(0.02), FRAME)])
    lo = np.array([f[0]["moR"] for f in evaluate_fluxes(mirror[keep], step(0.02), FRAME)])
    ratio = hi / lo
    ok = zero_outside and bool(np.all(ratio > 1))
    detail = f"moR zero outside right interval: {zero_outside}; black-hole/mirrored ratio > 1 at {int(np.sum(ratio > 1))} of {len(ratio)} points (max {ratio.max():.2f}, min {ratio.min():.2f})"
    if not np.all(ratio > 1):
        detail += f"; first failure at omega' = {bh[keep][ratio <= 1].min():.4f} (omega'_maxR = {sr.omega_max:.4f})"
    return ok, detail


def _moR(dn, w):
    return np.array([r[0]["moR"] for r in evaluate_fluxes(w, step(dn), FRAME)])


def criterion_06():
    errs = {}
    for dn in (4e-5, 1e-3, 1e-2, 2e-2):
        sl, sr = slis(dn)
        w = cheb(sl.omega_max, sr.omega_max, 40)
        r = _moR(dn, w) / _moR(2e-2, w)
        errs[dn] = (r.max() - r.min()) / (r.max() + r.min())
    worst = max(errs.values())
    return worst <= 0.05, "best-constant L-inf relative error " + ", ".join(f"{k:g}: {v:.1e}" for k, v in errs.items())


def criterion_07():
    low = np.geomspace(1e-3, 4e-2, 8)
    high = [0.052, 0.055, 0.058, 0.062, 0.066, 0.07]
    n_low = [photon_number(step(dn), FRAME, 1e-3, "horizon") for dn in low]
    n_high = [photon_number(step(dn), FRAME, 1e-3, "horizon") for dn in high]
    f_low = fit_power_law(list(zip(low, n_low)), (1e-3, 4e-2))
    f_high = fit_power_law(list(zip(high, n_high)), (0.052, 1.0))
    n_full = [photon_number(step(dn), FRAME, 1e-3, "sli") for dn in low]
    f_full = fit_power_law(list(zip(low, n_full)))
    ok = abs(f_low.exponent - 2.5) <= 0.3 and f_low.r_squared >= 0.98 and f_high.exponent < f_low.exponent
    return ok, (
        f"black-hole interval: exponent {f_low.exponent:.3f} (r^2 {f_low.r_squared:.5f}), "
        f"delta_n >= 0.052: {f_high.exponent:.3f}; full-interval exponent {f_full.exponent:.3f}"
    )


def criterion_08():
    dns = np.linspace(1e-3, 0.05, 12)
    w = [sli_width(step(dn), FRAME).horizon for dn in dns]
    r2 = linear_r_squared(dns, w)
    return r2 >= 0.99, f"horizon width vs delta_n: linear r^2 = {r2:.5f}"


def criterion_09():
    t = lab_table(0.02)
    peak = lab_peak(t)
    lam_ok = 220e-9 <= peak["wavelength_m"] <= 280e-9
    m = t.metadata["markers_m"]
    bh, wh = m["black_hole"], m["white_hole"]
    disjoint = bh[1] < wh[0]
    sl, sr = slis(0.02)
    conf_ok = True
    for lab, band, expect in (("moR", bh, 4), ("loL", wh, 2)):
        inside = (t.axis > band[0]) & (t.axis < band[1]) & np.isfinite(t.preimages[lab])
        confs = {int(configuration(wp, sl, sr)) for wp in t.preimages[lab][inside]}
        conf_ok &= confs == {expect}
    ok = lam_ok and peak["dominant_mode"] == "noL" and disjoint and conf_ok
    return ok, (
        f"peak {peak['wavelength_m'] * 1e9:.1f} nm from {peak['dominant_mode']}; "
        f"black hole {bh[0] * 1e9:.0f}-{bh[1] * 1e9:.0f} nm, white hole {wh[0] * 1e9:.0f}-{wh[1] * 1e9:.0f} nm; classifier agrees: {conf_ok}"
    )


def criterion_10():
    t = moving_table(0.02)
    sr = slis(0.02)[1]
    inside = (t.axis > sr.omega_min) & (t.axis < sr.omega_max)
    no = t.columns["noL"][inside]
    worst = {}
    for lab in ("loL", "uoL", "moR"):
        worst[lab] = float(np.max(t.columns[lab][inside] / no))
    ok = all(v < 1 for v in worst.values())
    where = t.axis[inside][t.columns["moR"][inside] > no]
    span = f"; moR > noL on {len(where)} of {int(inside.sum())} points" + (f" (omega' {where.min():.4f}-{where.max():.4f})" if len(where) else "")
    return ok, "max column/noL ratio " + ", ".join(f"{k}: {v:.3f}" for k, v in worst.items()) + span


def criterion_11():
    res = frame_bookkeeping(step(0.02), FRAME, lab_table(0.02))
    rel = {k: abs(a / b - 1) for k, (a, b) in res.items()}
    return max(rel.values()) <= 0.01, "lab/moving relative mismatch " + ", ".join(f"{k}: {v:.1e}" for k, v in rel.items())


def criterion_12():
    with tempfile.TemporaryDirectory() as tmp:
        outs = []
        for name in ("a", "b"):
            out = Path(tmp) / name
            cmd = [sys.executable, "-m", "rifvacuum.cli", "spectrum", "--out", str(out)]
            subprocess.run(cmd, check=True, capture_output=True)
            outs.append(((out / "spectrum.csv").read_bytes(), (out / "spectrum.meta.json").read_bytes()))
    return outs[0] == outs[1], f"two runs byte-identical: {outs[0] == outs[1]} ({len(outs[0][0])} bytes)"


CRITERIA = [
    (1, "dispersion oracle", criterion_01),
    (2, "root integrity", criterion_02),
    (3, "pseudo-unitarity", criterion_03),
    (4, "null test", criterion_04),
    (5, "horizon confinement", criterion_05),
    (6, "shape universality", criterion_06),
    (7, "scaling law", criterion_07),
    (8, "interval linearity", criterion_08),
    (9, "lab-frame structure", criterion_09),
    (10, "dominance ordering", criterion_10),
    (11, "frame bookkeeping", criterion_11),
    (12, "determinism", criterion_12),
]


def _line(num, name, ok, detail):
    return f"{'PASS' if ok else 'FAIL'} criterion {num:2d} {name}: {detail}"


@pytest.mark.parametrize("num, name, check", CRITERIA, ids=[f"criterion_{n:02d}_{s.replace(' ', '_').replace('-', '_')}" for n, s, _ in CRITERIA])
def test_criterion(num, name, check):
    ok, detail = check()
    print(_line(num, name, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    failures = 0
    for num, name, check in CRITERIA:
        ok, detail = check()
        failures += not ok
        print(_line(num, name, ok, detail), flush=True)
    sys.exit(1 if failures else 0)
