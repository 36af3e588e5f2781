import math

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from rifvacuum.medium import FrontFrame, lab_group_velocity, n_squared, scale_medium, vacuum_medium
from rifvacuum.modes import (
    EdgeDegeneracyError,
    HorizonConfiguration,
    SubluminalInterval,
    companion_matrix,
    configuration,
    dispersion_polynomial,
    find_sli,
    label_roots,
    optical_branch_floor,
    root_residual,
    solve_modes,
)

from .conftest import config_points


def sli_oracle(medium, frame):
    """Local extrema of omega'(omega) = gamma*omega*(1 - u n) along the optical branch, by dense scan."""
    lo = optical_branch_floor(medium) * (1 + 1e-7)
    hi = medium.resonance_omegas[1] * 0.999
    w = np.linspace(lo, hi, 200001)
    wp = frame.gamma * w * (1 - frame.u * np.sqrt(n_squared(medium, w)))
    d = np.diff(wp)
    idx = np.nonzero(np.sign(d[:-1]) != np.sign(d[1:]))[0]
    out = []
    for i in idx:
        f = lambda x: frame.gamma * x * (1 - frame.u * math.sqrt(n_squared(medium, x)))
        sgn = -1 if d[i] > 0 else 1  # maximum if rising before the extremum
        r = minimize_scalar(lambda x: sgn * f(x), bounds=(w[i], w[i + 2]), method="bounded", options={"xatol": 1e-14})
        out.append(f(r.x))
    return sorted(out)


def test_companion_matrix_matches_numpy_roots(rng):
    c = rng.normal(size=9) + 1j * rng.normal(size=9)
    eig = np.sort_complex(np.linalg.eigvals(companion_matrix(c)))
    assert np.allclose(eig, np.sort_complex(np.roots(c)), rtol=1e-9, atol=1e-12)


def test_polynomial_vanishes_at_roots(silica, frame):
    for wp in (0.1, 0.3, 0.5, 0.9):
        c = dispersion_polynomial(silica, wp, frame)
        assert np.max(np.abs(c.imag)) <= 1e-14 * np.max(np.abs(c))
        for r in solve_modes(silica, wp, frame):
            powers = np.abs(r.omega) ** np.arange(8, -1, -1)
            assert abs(np.polyval(c, r.omega)) <= 1e-10 * np.sum(np.abs(c) * powers)


def test_vacuum_light_cone_roots(frame):
    wp = 0.3
    roots = [r.omega for r in solve_modes(vacuum_medium(), wp, frame)]
    for target in (wp / (frame.gamma * (1 - frame.u)), wp / (frame.gamma * (1 + frame.u))):
        assert min(abs(r - target) for r in roots) <= 1e-12 * target


def test_rejects_static_front(silica):
    with pytest.raises(ValueError):
        dispersion_polynomial(silica, 0.3, FrontFrame(0.0))
    with pytest.raises(ValueError):
        solve_modes(silica, -0.3, FrontFrame(0.5))


def test_sli_matches_dense_scan(silica, frame):
    sli = find_sli(silica, frame, "R")
    lo, hi = sli_oracle(silica, frame)
    assert sli.omega_min == pytest.approx(lo, rel=1e-9)
    assert sli.omega_max == pytest.approx(hi, rel=1e-9)
    assert 0 < sli.omega_min < sli.omega_max
    # the edges are where the lab group velocity equals u
    for w in (sli.lab_at_min, sli.lab_at_max):
        k = math.sqrt(n_squared(silica, w)) * w
        assert lab_group_velocity(silica, w, k) == pytest.approx(frame.u, rel=1e-10)


def test_left_sli_shifts_down(step_002, slis_002):
    sl, sr = slis_002
    assert sl.omega_min < sr.omega_min
    assert sl.omega_max < sr.omega_max
    assert sr.omega_min < sl.omega_max


def test_zero_step_has_equal_intervals(silica, frame):
    step = scale_medium(silica, 0.0)
    assert find_sli(step.left, frame, "L").omega_min == find_sli(step.right, frame, "R").omega_min
    assert find_sli(step.left, frame, "L").omega_max == find_sli(step.right, frame, "R").omega_max


def test_fast_front_has_no_interval(silica):
    # above the largest optical group velocity the optical branch never slows to u
    assert find_sli(silica, FrontFrame(0.9), "R").is_empty


def test_configuration_table(slis_002):
    pts = config_points(slis_002)
    for conf, wp in pts.items():
        assert configuration(wp, *slis_002) == HorizonConfiguration(conf)
    assert HorizonConfiguration.BlackHole == 4
    assert HorizonConfiguration.WhiteHole == 2


def test_configuration_edge_raises(slis_002):
    sl, sr = slis_002
    for e in (sl.omega_min, sl.omega_max, sr.omega_min, sr.omega_max):
        with pytest.raises(EdgeDegeneracyError):
            configuration(e * (1 + 1e-12), *slis_002)


def test_configuration_without_left_interval(slis_002):
    sr = slis_002[1]
    empty = SubluminalInterval.empty("L")
    assert configuration(0.5 * sr.omega_min, empty, sr) == HorizonConfiguration.NoHorizonLow
    assert configuration(0.5 * (sr.omega_min + sr.omega_max), empty, sr) == HorizonConfiguration.BlackHole


@pytest.mark.parametrize("conf", [1, 2, 3, 4, 5])
def test_root_counts_and_labels(step_002, frame, slis_002, conf):
    wp = config_points(slis_002)[conf]
    for side, sli in zip(("L", "R"), slis_002):
        med = step_002.medium(side)
        roots = label_roots(solve_modes(med, wp, frame, side), sli)
        assert len(roots) == 8
        assert max(root_residual(med, r) for r in roots) <= 1e-9
        prop = [r for r in roots if r.propagating]
        labels = [r.label[:-1] for r in roots]
        assert "no" in labels
        if sli.contains(wp):
            assert len(prop) == 8
            trio = {r.label[:-1]: r for r in roots if r.label[:-1] in ("lo", "mo", "uo")}
            assert trio["lo"].k_prime.real < trio["mo"].k_prime.real < trio["uo"].k_prime.real
            positive = [k for k, r in trio.items() if r.comoving_group_velocity > 0]
            assert positive == ["mo"]
            for r in trio.values():
                assert lab_group_velocity(med, r.omega.real, r.k.real) > 0
        else:
            assert len(prop) == 6
            ev = [r for r in roots if not r.propagating]
            assert len(ev) == 2
            assert ev[0].omega == pytest.approx(ev[1].omega.conjugate(), rel=1e-14)
            assert sorted(labels).count("ed") == 1 and sorted(labels).count("eg") == 1
            assert ("uo" in labels) == (wp < sli.omega_min)
            assert ("lo" in labels) == (wp > sli.omega_max)
        for r in prop:
            assert r.norm_sign == (1 if r.omega.real > 0 else -1)


def test_every_mode_except_mo_moves_left(step_002, frame, slis_002):
    wp = config_points(slis_002)[3]
    for side, sli in zip(("L", "R"), slis_002):
        for r in label_roots(solve_modes(step_002.medium(side), wp, frame, side), sli):
            if r.propagating:
                assert (r.comoving_group_velocity > 0) == r.label.startswith("mo")


def test_decaying_label_follows_side(step_002, frame, slis_002):
    wp = config_points(slis_002)[5]
    for side, sli in zip(("L", "R"), slis_002):
        roots = label_roots(solve_modes(step_002.medium(side), wp, frame, side), sli)
        ed = [r for r in roots if r.label.startswith("ed")][0]
        assert ed.is_decaying
        assert (ed.k_prime.imag < 0) == (side == "L")


def test_labels_stable_under_refinement(silica, frame):
    sli = find_sli(silica, frame, "R")
    w = np.linspace(sli.omega_min, sli.omega_max, 402)[1:-1]
    prev = None
    for wp in w:
        roots = label_roots(solve_modes(silica, wp, frame, "R"), sli)
        cur = {r.label: r.k_prime for r in roots}
        if prev is not None:
            # nearest previous root of every current root carries the same label
            for lab, kp in cur.items():
                nearest = min(prev, key=lambda l: abs(prev[l] - kp))
                assert nearest == lab
        prev = cur


def test_no_mode_at_every_frequency(step_002, frame):
    for wp in np.geomspace(0.01, 2.0, 40):
        for side in ("L", "R"):
            med = step_002.medium(side)
            sli = find_sli(med, frame, side)
            if any(abs(wp - e) < 1e-6 for e in (sli.omega_min, sli.omega_max)):
                continue
            labels = [r.label for r in label_roots(solve_modes(med, wp, frame, side), sli)]
            assert f"no{side}" in labels
