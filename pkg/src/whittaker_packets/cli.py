"""Command-line interface.

Every subcommand writes CSV and JSON files into ``--out-dir``.  Options can
also come from an INI file (``--config``): keys of the ``[run]`` section and
of a section named after the subcommand use the long option names with
dashes or underscores; command-line flags take precedence.

Exit status is 0 on success, 2 on invalid input and 3 on numerical failure.
Failures are reported on stderr as one line of JSON.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .constants import CONSTANTS
from .errors import DomainError, WhittakerError
from .io import write_csv, write_json

__all__ = ["main", "build_parser"]

CONFIG_SECTION = "run"


class _Parser(argparse.ArgumentParser):
    # usage errors follow the JSON error convention
    def error(self, message):
        raise DomainError(message)


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from exc


def _common(p: argparse.ArgumentParser, physics: bool = True) -> None:
    if physics:
        p.add_argument("--energy-ev", type=float, default=1.0, help="central energy E [eV] (default 1)")
        p.add_argument("--spread-ev", type=float, default=0.1, help="energy spread dE [eV] (default 0.1)")
        p.add_argument("--allow-broad", action="store_true", help="accept dE with sigma >= mu/3 (folded packet)")
    p.add_argument("--rel-tol", type=float, default=1e-10, help="relative tolerance of the mode quadrature")
    p.add_argument("--grid-ppw", type=int, default=20, help="grid points per node spacing (>= 20)")
    p.add_argument("--out-dir", type=Path, default=Path("."), help="output directory")
    p.add_argument("--seed", type=int, default=0, help="random seed (bootstrap resampling only)")
    p.add_argument("--threads", type=int, default=1, help="worker threads for mode tables")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="whittaker", description="Whittaker wavepackets in the hydrogen continuum.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", type=Path, help="INI file with option defaults")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("mode", help="sample one continuum mode w_kappa(x)")
    p.add_argument("--kappa", type=float, default=0.1356)
    p.add_argument("--x-min", type=float, default=0.0)
    p.add_argument("--x-max", type=float, default=100.0)
    p.add_argument("--points", type=int, default=2000)
    _common(p, physics=False)

    p = sub.add_parser("packet", help="sample the packet at several times")
    p.add_argument("--times-fs", type=_float_list, default=None, help="comma separated times [fs]; default 0, dt, 2 dt")
    _common(p)

    p = sub.add_parser("characterize", help="spatial spread and diffraction lifetime")
    _common(p)

    p = sub.add_parser("decay", help="radiative decay probabilities and average rate")
    p.add_argument("--tmax-fs", type=float, default=None, help="last time [fs]; default 10 dt")
    p.add_argument("--time-points", type=int, default=64)
    _common(p)

    p = sub.add_parser("table1", help="spread-lifetime trade-off table from the closed forms")
    p.add_argument("--simulate", action="store_true", help="also simulate the lifetime of narrow-packet cells")
    _common(p, physics=False)

    p = sub.add_parser("calibrate", help="fit the spread and lifetime constants")
    p.add_argument("--which", choices=("spread", "lifetime", "both"), default="both")
    p.add_argument("--free-exponent", action="store_true")
    p.add_argument("--spread-grid", type=_float_list, default=None, help="dE values [eV] for the spread fit")
    p.add_argument("--bootstrap", type=int, default=200, help="bootstrap resamples")
    _common(p, physics=False)
    p.add_argument("--energy-ev", type=float, default=1.0, help="energy of the spread calibration [eV]")
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Prepend INI values as flags so explicit flags still win."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", type=Path)
    known, rest = pre.parse_known_args(argv)
    if known.config is None:
        return argv
    if not known.config.is_file():
        raise DomainError(f"config file not found: {known.config}")
    cfg = configparser.ConfigParser()
    cfg.read(known.config, encoding="utf-8")
    command = next((a for a in rest if not a.startswith("-")), None)
    if command is None:
        return rest
    extra = []
    for section in (CONFIG_SECTION, command):
        if not cfg.has_section(section):
            continue
        for key, value in cfg.items(section):
            flag = "--" + key.replace("_", "-")
            if value.strip().lower() in ("true", "yes", "on"):
                extra.append(flag)
            elif value.strip().lower() in ("false", "no", "off"):
                continue
            else:
                extra.extend([flag, value.strip()])
    i = rest.index(command)
    # argparse keeps the last occurrence, so config values go first
    return rest[: i + 1] + extra + rest[i + 1 :]


def _quad(args):
    from .specfun import QuadratureSpec

    return QuadratureSpec(rel_tol=args.rel_tol, abs_tol=min(1e-12, args.rel_tol))


def _params(args):
    from .packet import map_energy_params

    return map_energy_params(args.energy_ev, args.spread_ev, allow_broad=args.allow_broad)


def _check_common(args) -> None:
    if args.threads < 1:
        raise DomainError("--threads must be at least 1")
    if args.grid_ppw < 20:
        raise DomainError("--grid-ppw must be at least 20")


# --------------------------------------------------------------------------
# commands


def cmd_mode(args) -> dict:
    from .specfun import whittaker_mode

    if args.points < 2 or not args.x_max > args.x_min >= 0.0:
        raise DomainError("need 0 <= x-min < x-max and at least two points")
    x = np.linspace(args.x_min, args.x_max, args.points)
    w = whittaker_mode(args.kappa, x, _quad(args))
    path = write_csv(
        args.out_dir / "mode.csv",
        {"x": x, "re_w": w.real, "im_w": w.imag},
        header={"kappa": args.kappa, "rel_tol": args.rel_tol},
    )
    return {"files": [path.name]}


def cmd_packet(args) -> dict:
    from .observables import predicted_lifetime
    from .packet import RadialGrid, WhittakerPacket, norm_radius

    params = _params(args)
    quad = _quad(args)
    dt = predicted_lifetime(params.energy_E, params.spread_dE)
    times = args.times_fs if args.times_fs is not None else [0.0, dt, 2.0 * dt]
    if any(t < 0.0 for t in times):
        raise DomainError("times must be non-negative")
    pk = WhittakerPacket(params, quad, threads=args.threads)
    # cover the outward drift of the latest sample
    t_au = max(times) / CONSTANTS.atomic_time
    r_max = norm_radius(params) + 3.0 * params.mu * t_au
    grid = RadialGrid.for_params(params, r_max=r_max, points_per_wavelength=args.grid_ppw)
    files, widths, norms = [], [], []
    for i, t in enumerate(times):
        fld = pk.field(grid, t)
        files.append(fld.to_csv(args.out_dir / f"packet_t{i}.csv").name)
        dens = fld.density
        m0 = np.trapezoid(dens, fld.r)
        m1 = np.trapezoid(dens * fld.r, fld.r) / m0
        m2 = np.trapezoid(dens * fld.r**2, fld.r) / m0
        widths.append(math.sqrt(max(m2 - m1 * m1, 0.0)))
        norms.append(m0)
    summary = {
        "params": pk.params.as_dict(),
        "times_fs": list(times),
        "grid_r_max_a0": grid.r_max,
        "grid_points": len(grid),
        "norm_on_grid": norms,
        "envelope_width_a0": widths,
        "files": files,
    }
    write_json(args.out_dir / "packet.json", summary)
    return {"files": files + ["packet.json"]}


def cmd_characterize(args) -> dict:
    from .observables import lifetime_series, predicted_lifetime, predicted_spread, spatial_spread
    from .packet import get_packet

    params = _params(args)
    quad = _quad(args)
    env = spatial_spread(params, points_per_wavelength=args.grid_ppw, quad=quad, threads=args.threads)
    pk = get_packet(params, quad, threads=args.threads)
    ov = lifetime_series(params, packet=pk)
    write_csv(
        args.out_dir / "overlap.csv",
        {"t_fs": ov.times, "overlap": ov.values},
        header={"energy_ev": params.energy_E, "spread_ev": params.spread_dE},
    )
    write_csv(
        args.out_dir / "envelope.csv",
        {"r_a0": env.peak_positions, "envelope": env.peak_values},
        header={"energy_ev": params.energy_E, "spread_ev": params.spread_dE},
    )
    summary = {
        "params": pk.params.as_dict(),
        "delta_r": env.delta_r,
        "delta_r_nm": env.delta_r * CONSTANTS.bohr_radius,
        "delta_t": ov.delta_t,
        "delta_t_as": ov.delta_t * 1e3,
        "fitted_sigma_r": env.fitted_sigma,
        "fitted_sigma_t": ov.fitted_sigma_t,
        "fit_r2s": {"envelope": env.fit_r2, "overlap": ov.fit_r2},
        "closed_form": {
            "delta_r": predicted_spread(params.spread_dE),
            "delta_t": predicted_lifetime(params.energy_E, params.spread_dE),
        },
    }
    write_json(args.out_dir / "characterize.json", summary)
    return {"files": ["overlap.csv", "envelope.csv", "characterize.json"]}


def cmd_decay(args) -> dict:
    from .observables import diffraction_lifetime
    from .packet import get_packet
    from .radiative import DecayModel, decay_mesh

    params = _params(args)
    quad = _quad(args)
    model = DecayModel(params, quad, packet=get_packet(params, quad, threads=args.threads))
    dt = diffraction_lifetime(params, packet=model.packet)
    t_max = 10.0 * dt if args.tmax_fs is None else args.tmax_fs
    if not t_max > 0.0:
        raise DomainError("--tmax-fs must be positive")
    times = decay_mesh(t_max, args.time_points)
    # the average rate is judged at two lifetimes
    times = np.unique(np.append(times, 2.0 * dt))
    tab = model.table(times)
    ns = sorted(tab.per_n)
    t_col = np.repeat(times, len(ns))
    n_col = np.tile(ns, times.size)
    p_col = np.column_stack([tab.per_n[n] for n in ns]).ravel()
    head = {"energy_ev": params.energy_E, "spread_ev": params.spread_dE}
    write_csv(args.out_dir / "decay.csv", {"t_fs": t_col, "n": n_col, "P_n": p_col}, header=head)
    write_csv(args.out_dir / "decay_total.csv", {"t_fs": times, "P": tab.total}, header=head)
    p2 = float(tab.total[np.flatnonzero(times == 2.0 * dt)[0]])
    gamma = p2 / (2.0 * dt * 1e-15)
    summary = {
        "E": params.energy_E,
        "dE": params.spread_dE,
        "delta_t_fs": dt,
        "gamma_avg_hz": gamma,
        "n_max": tab.n_max_used,
        "probability_at_2dt": p2,
        "t_max_fs": t_max,
        "final_per_n": {str(n): float(tab.per_n[n][-1]) for n in ns},
    }
    write_json(args.out_dir / "decay.json", summary)
    return {"files": ["decay.csv", "decay_total.csv", "decay.json"]}


def cmd_table1(args) -> dict:
    from .tradeoff import trade_off_table

    cells = trade_off_table()
    rows = [c.as_row() for c in cells]
    if args.simulate:
        from .observables import diffraction_lifetime
        from .packet import map_energy_params

        quad = _quad(args)
        for c, row in zip(cells, rows):
            row["simulated_value"] = ""
            if c.quantity != "delta_t_as":
                continue
            dE = next(x.computed for x in cells if x.fixed == c.fixed and x.fixed_value == c.fixed_value and x.quantity == "dE_ev")
            params = map_energy_params(c.energy_ev, dE)
            row["simulated_value"] = diffraction_lifetime(params, quad=quad) * 1e3
    cols = {k: [r[k] for r in rows] for k in rows[0]}
    write_csv(args.out_dir / "table1.csv", cols)
    write_json(
        args.out_dir / "table1.json",
        {"cells": rows, "max_relative_error": max(c.relative_error for c in cells)},
    )
    return {"files": ["table1.csv", "table1.json"]}


def _bootstrap(fit, n: int, seed: int) -> dict:
    from .fitting import fit_power_law, leave_one_out

    rng = np.random.default_rng(seed)
    s = fit.samples
    fixed = fit.exponent if fit.exponent_fixed else None
    coeffs = []
    for _ in range(n):
        pick = rng.integers(0, s.shape[0], s.shape[0])
        if np.unique(pick).size < 2:
            continue
        try:
            coeffs.append(fit_power_law(s[pick], fixed, min_samples=2).coefficient)
        except WhittakerError:
            continue
    loo = leave_one_out(fit)
    return {
        "bootstrap_std": float(np.std(coeffs)) if coeffs else None,
        "bootstrap_count": len(coeffs),
        "leave_one_out": loo,
        "leave_one_out_max_shift": float(np.max(np.abs(loo - fit.coefficient))),
    }


def cmd_calibrate(args) -> dict:
    from .fitting import DEFAULT_SPREAD_GRID, calibrate_lifetime_constant, calibrate_spread_constant

    quad = _quad(args)
    files = []
    if args.which in ("spread", "both"):
        grid = args.spread_grid if args.spread_grid is not None else DEFAULT_SPREAD_GRID
        fit = calibrate_spread_constant(args.energy_ev, grid, free_exponent=args.free_exponent, quad=quad, threads=args.threads)
        report = fit.as_dict() | _bootstrap(fit, args.bootstrap, args.seed) | {"units": "a0 eV^0.5", "energy_ev": args.energy_ev}
        write_json(args.out_dir / "calibrate_spread.json", report)
        files.append("calibrate_spread.json")
    if args.which in ("lifetime", "both"):
        fit = calibrate_lifetime_constant(free_exponent=args.free_exponent, quad=quad)
        report = fit.as_dict() | _bootstrap(fit, args.bootstrap, args.seed) | {"units": "eV fs"}
        write_json(args.out_dir / "calibrate_lifetime.json", report)
        files.append("calibrate_lifetime.json")
    return {"files": files}


COMMANDS = {
    "mode": cmd_mode,
    "packet": cmd_packet,
    "characterize": cmd_characterize,
    "decay": cmd_decay,
    "table1": cmd_table1,
    "calibrate": cmd_calibrate,
}


def _fail(exc: BaseException, code: int) -> int:
    record = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    est = getattr(exc, "error_estimate", None)
    if est is not None and math.isfinite(est):
        record["error_estimate"] = est
    sys.stderr.write(json.dumps(record, sort_keys=True) + "\n")
    return code


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_apply_config(parser, argv))
        _check_common(args)
        args.out_dir.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](args)
    except WhittakerError as exc:
        return _fail(exc, exc.exit_code)
    except (ValueError, OSError) as exc:
        return _fail(exc, 2)
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        return _fail(exc, 3)
    return 0


if __name__ == "__main__":
    sys.exit(main())
