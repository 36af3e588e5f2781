"""Command-line front end.

Every command writes CSV tables plus JSON sidecars under ``--out`` and prints a
short summary. Exit status is 0 on success, 1 if any point failed with a hard
error (unitarity, root finding, labelling), 2 for invalid configuration.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np
import pydantic

from . import __version__
from .config import RunConfig, load_config
from .medium import FrontFrame, branch_intervals, n_squared, scale_medium
from .modes import (
    EdgeDegeneracyError,
    HorizonConfiguration,
    configuration,
    find_sli,
    label_roots,
    root_residual,
    solve_modes,
)
from .output import write_csv
from .spectra import (
    DELTA_TAU_CONVENTION,
    column_order,
    delta_tau,
    fit_power_law,
    lab_peak,
    lab_spectrum,
    linear_r_squared,
    mode_onsets,
    moving_frame_spectrum,
    photon_number,
    sli_width,
    sweep,
)
from .units import LENGTH_UNIT_M, OMEGA_UNIT, TIME_UNIT_S, omega_from_si

log = logging.getLogger("rifvacuum")


class Context:
    def __init__(self, cfg: RunConfig, command: str):
        self.cfg = cfg
        self.command = command
        self.right = cfg.medium.build()
        self.frame = FrontFrame(cfg.u)
        self.out = Path(cfg.out)
        self.hard_failures = 0

    def step(self, delta_n=None):
        dn = self.cfg.delta_n if delta_n is None else delta_n
        return scale_medium(self.right, dn, self.cfg.n_ref)

    def provenance(self, **extra) -> dict:
        meta = {
            "command": self.command,
            "config_hash": self.cfg.digest(),
            "config": self.cfg.model_dump(mode="json", exclude={"out", "jobs"}),
            "tool_version": __version__,
            "omega_unit_rad_per_s": OMEGA_UNIT,
        }
        meta.update(extra)
        return meta

    def write(self, name: str, header, rows, meta) -> Path:
        q = meta.get("quarantine", [])
        self.hard_failures += sum(1 for e in q if e.get("hard"))
        path = write_csv(self.out / name, header, rows, meta)
        print(f"wrote {path}")
        return path


# ---------------------------------------------------------------- commands


def cmd_dispersion(ctx: Context, args) -> None:
    n = ctx.cfg.grid.dispersion_points
    # a vacuum cannot carry an index step; both sides are then the same
    step = ctx.step(0.0 if ctx.right.is_vacuum else None)
    rows = []
    for side in ("L", "R"):
        med = step.medium(side)
        for b, (lo, hi) in enumerate(branch_intervals(med), start=1):
            w = np.linspace(lo, hi, n)
            k = np.sqrt(n_squared(med, w)) * w
            for wi, ki in zip(w, k):
                rows.append((side, b, wi * OMEGA_UNIT, ki / LENGTH_UNIT_M, wi, ki))
    meta = ctx.provenance(delta_n=step.delta_n, units={"omega": "rad/s", "k": "1/m", "internal": "c = 1, length in um"})
    ctx.write("dispersion.csv", ["side", "branch", "omega_rad_s", "k_per_m", "omega_internal", "k_internal"], rows, meta)


def cmd_modes(ctx: Context, args) -> None:
    if args.omega_prime is None:
        raise SystemExit("modes: --omega-prime (rad/s) is required")
    wp = float(omega_from_si(args.omega_prime))
    step = ctx.step()
    slis = {s: find_sli(step.medium(s), ctx.frame, s) for s in ("L", "R")}
    try:
        conf = configuration(wp, slis["L"], slis["R"])
        conf_name = conf.name
    except EdgeDegeneracyError as exc:
        conf, conf_name = None, f"edge ({exc})"
    print(f"omega' = {args.omega_prime:.6g} rad/s: configuration {conf_name}" + (f" ({int(conf)})" if conf else ""))
    header = ["label", "omega_re", "omega_im", "k_re", "k_im", "k_prime_re", "k_prime_im", "propagating", "norm_sign", "branch", "group_velocity_comoving", "residual", "flagged"]
    for side in ("L", "R"):
        med = step.medium(side)
        roots = label_roots(solve_modes(med, wp, ctx.frame, side), slis[side])
        rows = [
            (r.label, r.omega.real, r.omega.imag, r.k.real, r.k.imag, r.k_prime.real, r.k_prime.imag, r.propagating, r.norm_sign, r.branch, r.comoving_group_velocity, root_residual(med, r), r.flagged)
            for r in roots
        ]
        meta = ctx.provenance(
            delta_n=step.delta_n,
            side=side,
            omega_prime_rad_s=args.omega_prime,
            omega_prime_internal=wp,
            configuration=conf_name,
            units="internal (c = 1, length in um; omega unit given by omega_unit_rad_per_s)",
        )
        ctx.write(f"modes_{side}.csv", header, rows, meta)


def cmd_sli(ctx: Context, args) -> None:
    rows = []
    for dn in ctx.cfg.delta_n_list if args.all else [ctx.cfg.delta_n]:
        step = ctx.step(dn)
        w = sli_width(step, ctx.frame)
        for side in ("L", "R"):
            s = find_sli(step.medium(side), ctx.frame, side)
            rows.append((dn, side, s.omega_min * OMEGA_UNIT, s.omega_max * OMEGA_UNIT, s.lab_at_min * OMEGA_UNIT, s.lab_at_max * OMEGA_UNIT, w.horizon * OMEGA_UNIT, w.full * OMEGA_UNIT))
            print(f"delta_n={dn:g} side {side}: omega' in [{s.omega_min * OMEGA_UNIT:.6g}, {s.omega_max * OMEGA_UNIT:.6g}] rad/s")
    meta = ctx.provenance(units="rad/s", horizon_width="omega'_maxR - max(omega'_maxL, omega'_minR)")
    ctx.write("sli.csv", ["delta_n", "side", "omega_prime_min", "omega_prime_max", "omega_lab_at_min", "omega_lab_at_max", "horizon_width", "sli_width"], rows, meta)


def _spectrum_rows(table):
    labels = sorted(table.columns, key=column_order)
    bad = {q["omega_prime"] for q in table.quarantine}
    tot = table.total
    rows = []
    for i, w in enumerate(table.axis):
        vals = [table.columns[lab][i] for lab in labels] + [tot[i]]
        if float(w) in bad:
            vals = [float("nan")] * len(vals)
        rows.append([w * OMEGA_UNIT, w, int(table.configurations[i])] + vals)
    return ["omega_prime_rad_s", "omega_prime_internal", "configuration"] + labels + ["total"], rows


def cmd_spectrum(ctx: Context, args) -> None:
    step = ctx.step()
    table = moving_frame_spectrum(step, ctx.frame, n_points=ctx.cfg.grid.points, jobs=ctx.cfg.jobs, tol=ctx.cfg.tolerance.unitarity)
    header, rows = _spectrum_rows(table)
    meta = ctx.provenance(**table.metadata, quarantine=table.quarantine, units="photons per unit tau per unit omega' (dimensionless)",
                          configuration_names={int(c): c.name for c in HorizonConfiguration})
    ctx.write("spectrum.csv", header, rows, meta)
    inside = table.columns.get("moR", np.zeros(1))
    print(f"moR nonzero at {int(np.count_nonzero(inside))} of {len(table.axis)} points; {len(table.quarantine)} quarantined")


def cmd_labspectrum(ctx: Context, args) -> None:
    from .spectra import default_wavelength_grid

    step = ctx.step()
    g = ctx.cfg.grid
    lam = default_wavelength_grid(g.lab_points, g.lab_min_nm * 1e-9, g.lab_max_nm * 1e-9)
    table = lab_spectrum(step, ctx.frame, lam, jobs=ctx.cfg.jobs, tol=ctx.cfg.tolerance.unitarity)
    # internal: photons per (um / c) per um  ->  photons per second per nm
    conv = 1e-3 / TIME_UNIT_S
    labels = list(table.columns)
    tot = table.total
    rows = [[lam_i * 1e9] + [table.columns[k][i] * conv for k in labels] + [tot[i] * conv] for i, lam_i in enumerate(table.axis)]
    peak = lab_peak(table)
    summary = {
        "peak_wavelength_nm": peak["wavelength_m"] * 1e9,
        "peak_total_per_s_nm": peak["total"] * conv,
        "peak_mode": peak["dominant_mode"],
        "uv_peak": peak["wavelength_m"] < 400e-9,
        "mode_onset_order": mode_onsets(table),
    }
    meta = ctx.provenance(**table.metadata, summary=summary, quarantine=table.quarantine, units="photons s^-1 nm^-1; wavelength in nm")
    ctx.write("labspectrum.csv", ["wavelength_nm"] + labels + ["total"], rows, meta)
    print(f"peak {summary['peak_wavelength_nm']:.1f} nm from {summary['peak_mode']}" + (" (UV)" if summary["uv_peak"] else ""))


def cmd_photons(ctx: Context, args) -> None:
    step = ctx.step()
    length_m = ctx.cfg.length_mm * 1e-3
    q = ctx.cfg.grid.quad_points
    n_sli = photon_number(step, ctx.frame, length_m, "sli", q, ctx.cfg.jobs)
    n_hor = photon_number(step, ctx.frame, length_m, "horizon", q, ctx.cfg.jobs)
    dt = delta_tau(length_m, ctx.frame)
    meta = ctx.provenance(delta_n=step.delta_n, length_m=length_m, delta_tau_internal=dt, delta_tau_s=dt * TIME_UNIT_S,
                          delta_tau_convention=DELTA_TAU_CONVENTION, photon_number="N = delta_tau / (2 pi) * integral of I'_moR d omega'")
    ctx.write("photons.csv", ["delta_n", "photons_sli", "photons_horizon"], [(step.delta_n, n_sli, n_hor)], meta)
    print(f"N (full right interval) = {n_sli:.6g}; N (black-hole part) = {n_hor:.6g}")


def cmd_sweep(ctx: Context, args) -> None:
    cfg = ctx.cfg
    length_m = cfg.length_mm * 1e-3
    rows = sweep(ctx.right, ctx.frame, cfg.delta_n_list, length_m, cfg.n_ref, cfg.grid.quad_points, cfg.jobs)
    attr = "photons_horizon" if cfg.fit.interval == "horizon" else "photons_sli"
    samples = [(r.delta_n, getattr(r, attr)) for r in rows if getattr(r, attr) > 0]
    fits = {}
    for name, rng in (("low", cfg.fit.low_range), ("high", cfg.fit.high_range)):
        try:
            f = fit_power_law(samples, tuple(rng))
            fits[name] = {"exponent": f.exponent, "prefactor": f.prefactor, "fit_range": list(f.fit_range), "r_squared": f.r_squared}
        except ValueError as exc:
            fits[name] = {"error": str(exc)}
    lin = [(r.delta_n, r.horizon_width) for r in rows if r.delta_n <= 0.05]
    width_r2 = linear_r_squared(*zip(*lin)) if len(lin) >= 3 else None
    meta = ctx.provenance(length_m=length_m, delta_tau_convention=DELTA_TAU_CONVENTION, fit_interval=cfg.fit.interval, fits=fits,
                          horizon_width_linear_r_squared=width_r2, units={"width": "rad/s"})
    table = [(r.delta_n, r.sigma, r.photons_sli, r.photons_horizon, r.horizon_width * OMEGA_UNIT, r.sli_width * OMEGA_UNIT) for r in rows]
    ctx.write("sweep.csv", ["delta_n", "sigma", "photons_sli", "photons_horizon", "horizon_width_rad_s", "sli_width_rad_s"], table, meta)
    for name, f in fits.items():
        if "exponent" in f:
            print(f"{name} fit: exponent {f['exponent']:.3f} (r^2 {f['r_squared']:.4f}) over {f['fit_range']}")


COMMANDS = {
    "dispersion": cmd_dispersion,
    "modes": cmd_modes,
    "sli": cmd_sli,
    "spectrum": cmd_spectrum,
    "labspectrum": cmd_labspectrum,
    "photons": cmd_photons,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML config file (nested or dotted keys)")
    common.add_argument("--delta-n", type=float, help="index step height")
    common.add_argument("--u", type=float, help="front velocity in units of c")
    common.add_argument("--out", help="output directory")
    common.add_argument("--grid-points", type=int, help="moving-frame grid size")
    common.add_argument("--length-mm", type=float, help="propagation length in mm")
    common.add_argument("--jobs", type=int, help="worker processes for sweep points")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="rifvacuum", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("dispersion", parents=[common], help="tabulate dispersion branches on both sides")
    p = sub.add_parser("modes", parents=[common], help="local modes at one comoving frequency")
    p.add_argument("--omega-prime", type=float, help="comoving frequency in rad/s")
    p = sub.add_parser("sli", parents=[common], help="subluminal intervals")
    p.add_argument("--all", action="store_true", help="use delta_n_list instead of delta_n")
    sub.add_parser("spectrum", parents=[common], help="moving-frame spectrum per out-mode")
    sub.add_parser("labspectrum", parents=[common], help="lab-frame wavelength spectrum")
    sub.add_parser("photons", parents=[common], help="photon number for one propagation length")
    sub.add_parser("sweep", parents=[common], help="photon number and widths over delta_n_list, with fits")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    overrides = {
        "delta_n": args.delta_n,
        "u": args.u,
        "out": args.out,
        "grid.points": args.grid_points,
        "length_mm": args.length_mm,
        "jobs": args.jobs,
    }
    try:
        cfg = load_config(args.config, overrides)
    except pydantic.ValidationError as exc:
        for err in exc.errors():
            loc = ".".join(str(x) for x in err["loc"])
            print(f"config error: {loc}: {err['msg']}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    ctx = Context(cfg, args.command)
    try:
        COMMANDS[args.command](ctx, args)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1
    if ctx.hard_failures:
        print(f"{ctx.hard_failures} point(s) failed with hard errors; see quarantine in metadata", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
