"""Global modes and the scattering matrix at one comoving frequency.

Across zeta = 0 the fields A, P_i and their zeta-derivatives are continuous.
A global *in* mode fixes one incoming local mode at unit amplitude and solves
for all outgoing local modes plus the evanescent modes that decay away from
the front; the S-matrix row is read off from the outgoing coefficients.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .fields import PolarizedMode, mode_vector
from .medium import FrontFrame, IndexStep
from .modes import EPS_EDGE, ModeRoot, SubluminalInterval, configuration, find_sli, label_roots, near_edge, solve_modes

log = logging.getLogger(__name__)

MAX_CONDITION = 1e12
UNITARITY_TOL = 1e-8


class MatchingError(RuntimeError):
    pass


class UnitarityError(RuntimeError):
    pass


@dataclass
class LocalBasis:
    """All labelled local modes at one omega' on both sides of the front."""

    omega_prime: float
    modes: dict[str, PolarizedMode]
    sli_left: SubluminalInterval
    sli_right: SubluminalInterval

    def labels(self, *, direction: str | None = None, propagating: bool | None = None) -> list[str]:
        out = []
        for lab, m in self.modes.items():
            r = m.root
            if propagating is not None and r.propagating != propagating:
                continue
            if direction == "in" and not (r.propagating and r.incoming):
                continue
            if direction == "out" and not (r.propagating and not r.incoming):
                continue
            out.append(lab)
        return out

    def decaying(self) -> list[str]:
        return [lab for lab, m in self.modes.items() if not m.root.propagating and m.root.is_decaying]

    def growing(self) -> list[str]:
        return [lab for lab, m in self.modes.items() if not m.root.propagating and not m.root.is_decaying]

    @property
    def configuration(self):
        return configuration(self.omega_prime, self.sli_left, self.sli_right)


def _label_order(label: str, root: ModeRoot) -> tuple:
    # side-major, then branch, then k'
    return (0 if root.side == "L" else 1, root.branch, root.k_prime.real, root.k_prime.imag)


def local_basis(omega_prime: float, step: IndexStep, frame: FrontFrame, slis: tuple | None = None) -> LocalBasis:
    if slis is None:
        slis = (find_sli(step.left, frame, "L"), find_sli(step.right, frame, "R"))
    sli_l, sli_r = slis
    modes = {}
    for side, med, sli in (("L", step.left, sli_l), ("R", step.right, sli_r)):
        roots = label_roots(solve_modes(med, omega_prime, frame, side), sli)
        for r in sorted(roots, key=lambda r: _label_order(r.label, r)):
            if r.flagged:
                raise MatchingError(f"ambiguous root classification at omega'={omega_prime} ({r.label})")
            modes[r.label] = mode_vector(med, r, frame)
    return LocalBasis(omega_prime, modes, sli_l, sli_r)


@dataclass
class MatchingSystem:
    matrix: np.ndarray
    rhs: np.ndarray
    unknowns: list[str]
    defining: str
    kind: str
    condition: float

    def solve(self) -> np.ndarray:
        if not np.isfinite(self.condition) or self.condition > MAX_CONDITION:
            raise MatchingError(f"matching system for {self.defining} is singular (condition {self.condition:.3g})")
        return scipy.linalg.solve(self.matrix, self.rhs)


def _signed_vector(m: PolarizedMode) -> np.ndarray:
    v = m.matching_vector()
    return v if m.root.side == "L" else -v


def _system(basis: LocalBasis, defining: str, kind: str) -> MatchingSystem:
    if defining not in basis.modes:
        raise KeyError(f"unknown mode {defining!r}")
    fixed_dir = "in" if kind == "in" else "out"
    free_dir = "out" if kind == "in" else "in"
    if defining not in basis.labels(direction=fixed_dir):
        raise ValueError(f"{defining} is not an {fixed_dir}going mode")
    unknowns = basis.labels(direction=free_dir) + basis.decaying()
    mat = np.column_stack([_signed_vector(basis.modes[u]) for u in unknowns])
    rhs = -_signed_vector(basis.modes[defining])
    if mat.shape != (8, 8):
        raise MatchingError(f"matching system has shape {mat.shape} at omega'={basis.omega_prime}")
    scaled = mat / np.linalg.norm(mat, axis=0)
    cond = float(np.linalg.cond(scaled))
    return MatchingSystem(mat, rhs, unknowns, defining, kind, cond)


def assemble_matching_system(omega_prime: float, step: IndexStep, frame: FrontFrame, defining: str, kind: str = "in", basis: LocalBasis | None = None) -> MatchingSystem:
    """Continuity of (A, P_i, d_zeta A, d_zeta P_i) at zeta = 0 for one global mode."""
    if basis is None:
        basis = local_basis(omega_prime, step, frame)
    if near_edge(omega_prime, (basis.sli_left, basis.sli_right), EPS_EDGE):
        raise MatchingError(f"omega'={omega_prime} sits on a subluminal-interval edge")
    return _system(basis, defining, kind)


@dataclass
class GlobalMode:
    kind: str
    defining_label: str
    omega_prime: float
    left_coefficients: dict[str, complex]
    right_coefficients: dict[str, complex]
    condition: float = float("nan")

    def coefficients(self) -> dict[str, complex]:
        return {**self.left_coefficients, **self.right_coefficients}


def _global_from_basis(basis: LocalBasis, kind: str, defining: str) -> GlobalMode:
    system = _system(basis, defining, kind)
    x = system.solve()
    coeffs = {defining: 1.0 + 0j}
    coeffs.update(zip(system.unknowns, x))
    left = {k: complex(v) for k, v in coeffs.items() if k.endswith("L")}
    right = {k: complex(v) for k, v in coeffs.items() if k.endswith("R")}
    return GlobalMode(kind, defining, basis.omega_prime, left, right, system.condition)


def global_mode(kind: str, defining_label: str, omega_prime: float, step: IndexStep, frame: FrontFrame, basis: LocalBasis | None = None) -> GlobalMode:
    if kind not in ("in", "out"):
        raise ValueError("kind must be 'in' or 'out'")
    if basis is None:
        basis = local_basis(omega_prime, step, frame)
    if near_edge(omega_prime, (basis.sli_left, basis.sli_right), EPS_EDGE):
        raise MatchingError(f"omega'={omega_prime} sits on a subluminal-interval edge")
    return _global_from_basis(basis, kind, defining_label)


def continuity_residual(gm: GlobalMode, basis: LocalBasis, full: bool = True) -> float:
    """Relative jump at zeta = 0 of the matching vector (and, if ``full``, of all eight components of V)."""
    jumps = []
    for getter in ([lambda m: m.matching_vector(), lambda m: m.amplitude] if full else [lambda m: m.matching_vector()]):
        left = sum(c * getter(basis.modes[l]) for l, c in gm.left_coefficients.items())
        right = sum(c * getter(basis.modes[l]) for l, c in gm.right_coefficients.items())
        scale = max(np.max(np.abs(c * getter(basis.modes[l]))) for l, c in gm.coefficients().items())
        jumps.append(np.max(np.abs(left - right)) / scale)
    return float(max(jumps))


@dataclass
class ScatteringMatrix:
    """S[alpha, beta]: amplitude of outgoing mode beta in the global in-mode alpha."""

    omega_prime: float
    in_labels: list[str]
    out_labels: list[str]
    entries: np.ndarray
    metric_in: np.ndarray
    metric_out: np.ndarray
    condition: float = float("nan")
    meta: dict = field(default_factory=dict)

    @property
    def metric(self) -> np.ndarray:
        return self.metric_out

    def unitarity_residual(self) -> float:
        s = self.entries
        a = s.conj().T @ np.diag(self.metric_in) @ s - np.diag(self.metric_out)
        b = s @ np.diag(self.metric_out) @ s.conj().T - np.diag(self.metric_in)
        return float(max(np.max(np.abs(a)), np.max(np.abs(b))))

    def entry(self, in_label: str, out_label: str) -> complex:
        return complex(self.entries[self.in_labels.index(in_label), self.out_labels.index(out_label)])

    def flux(self, alpha: str) -> float:
        return flux_density(self, alpha)


def s_matrix(omega_prime: float, step: IndexStep, frame: FrontFrame, basis: LocalBasis | None = None, check: float | None = UNITARITY_TOL) -> ScatteringMatrix:
    if basis is None:
        basis = local_basis(omega_prime, step, frame)
    if near_edge(omega_prime, (basis.sli_left, basis.sli_right), EPS_EDGE):
        raise MatchingError(f"omega'={omega_prime} sits on a subluminal-interval edge")
    ins = basis.labels(direction="in")
    outs = basis.labels(direction="out")
    if len(ins) != len(outs):
        raise MatchingError(f"{len(ins)} in-modes but {len(outs)} out-modes at omega'={omega_prime}")
    unknowns = outs + basis.decaying()
    mat = np.column_stack([_signed_vector(basis.modes[u]) for u in unknowns])
    if mat.shape != (8, 8):
        raise MatchingError(f"matching system has shape {mat.shape} at omega'={omega_prime}")
    rhs = -np.column_stack([_signed_vector(basis.modes[a]) for a in ins])
    cond = float(np.linalg.cond(mat / np.linalg.norm(mat, axis=0)))
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise MatchingError(f"singular matching system at omega'={omega_prime} (condition {cond:.3g})")
    x = scipy.linalg.solve(mat, rhs)
    entries = x[: len(outs), :].T.copy()
    sm = ScatteringMatrix(
        omega_prime=float(omega_prime),
        in_labels=ins,
        out_labels=outs,
        entries=entries,
        metric_in=np.array([basis.modes[a].root.norm_sign for a in ins], dtype=float),
        metric_out=np.array([basis.modes[a].root.norm_sign for a in outs], dtype=float),
        condition=cond,
    )
    if check is not None:
        res = sm.unitarity_residual()
        if res > check:
            raise UnitarityError(f"pseudo-unitarity violated at omega'={omega_prime}: residual {res:.3g}")
    return sm


def flux_density(s: ScatteringMatrix, alpha: str) -> float:
    """Spontaneous photon flux density into out-mode ``alpha``: sum of |S|^2 over opposite-norm in-modes."""
    if alpha not in s.out_labels:
        raise KeyError(f"{alpha!r} is not an out-mode at omega'={s.omega_prime}")
    j = s.out_labels.index(alpha)
    opposite = s.metric_in != s.metric_out[j]
    return float(np.sum(np.abs(s.entries[opposite, j]) ** 2))


def all_fluxes(s: ScatteringMatrix) -> dict[str, float]:
    return {a: flux_density(s, a) for a in s.out_labels}


def out_basis_matrix(omega_prime: float, step: IndexStep, frame: FrontFrame, basis: LocalBasis | None = None) -> ScatteringMatrix:
    """Decomposition of global out-modes over global in-modes (the inverse of S)."""
    if basis is None:
        basis = local_basis(omega_prime, step, frame)
    ins = basis.labels(direction="in")
    outs = basis.labels(direction="out")
    rows = []
    for beta in outs:
        gm = _global_from_basis(basis, "out", beta)
        rows.append([gm.coefficients()[a] for a in ins])
    return ScatteringMatrix(
        omega_prime=float(omega_prime),
        in_labels=outs,
        out_labels=ins,
        entries=np.array(rows),
        metric_in=np.array([basis.modes[a].root.norm_sign for a in outs], dtype=float),
        metric_out=np.array([basis.modes[a].root.norm_sign for a in ins], dtype=float),
    )
