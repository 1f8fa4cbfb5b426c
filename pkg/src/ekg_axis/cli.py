"""Command line entry point: ``ekg-axis <command> --config <path> [--out <dir>]``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 invariant failure.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .chart import cone_region, jacobian, solve_chart, solve_cone_chart, write_chart_csv
from .config import RunConfig, parse_config
from .diagnostics import (ChartFields, chart_bounds, metric_bounds_report, write_bounds_report,
                          write_energy_csv)
from .double_null import evolve_diamond, raychaudhuri_residuals, seed_from_cauchy, write_lattice_csv
from .errors import (CD1ViolationError, ChartError, ConfigurationError, FamilyViolationError,
                     GaugeSingularityError, NumericalFailureError, SeedingError, StepError)
from .evolution import SNAPSHOT_COLUMNS, evolve, write_snapshots
from .grid import make_grid
from .initial_data import build_initial_data, write_initial_data_csv
from .io import read_csv
from .verify import format_table, run_verify

log = logging.getLogger("ekg_axis")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_INVARIANT = 0, 2, 3, 4


class InvariantFailure(Exception):
    pass


def _initial(cfg: RunConfig):
    return build_initial_data(cfg.data, make_grid(cfg.r_max, cfg.n_cells))


def _trajectory(cfg: RunConfig):
    traj = evolve(_initial(cfg), cfg.t_end, courant=cfg.courant, output_every=cfg.output_every)
    if traj.status != "ok":
        raise NumericalFailureError(f"evolution stopped at t = {traj.times[-1]:.6g}: {traj.status} ({traj.reason})")
    return traj


def cmd_init(cfg: RunConfig, out: Path) -> int:
    data = _initial(cfg)
    path = write_initial_data_csv(data, out / "initial_data.csv")
    print(f"wrote {path} ((cd1) integral max {data.cd1_margin:.6g})")
    return EXIT_OK


def cmd_evolve(cfg: RunConfig, out: Path) -> int:
    traj = _trajectory(cfg)
    paths = write_snapshots(traj, out, every=cfg.snapshot_every)
    write_energy_csv(traj, out / "energy.csv")
    rep = metric_bounds_report(traj)
    write_bounds_report(out / "bounds.txt", rep)
    print(f"wrote {len(paths)} snapshots, energy.csv and bounds.txt to {out}")
    if not rep["beta_nonnegative"] or not rep["alpha_finite"]:
        raise InvariantFailure("e^{-2 beta} in (0, 1] violated" if rep["alpha_finite"] else "alpha not finite")
    return EXIT_OK


def cmd_chart(cfg: RunConfig, out: Path) -> int:
    traj = _trajectory(cfg)
    chart = solve_chart(traj)
    write_chart_csv(chart, out / "chart.csv", stride=cfg.chart_stride)
    bounds = chart_bounds(chart, traj)
    for t_o in cfg.cone_apexes:
        cone = solve_cone_chart(traj, t_o, chart)
        write_chart_csv(cone, out / f"cone_chart_t{t_o:g}.csv", stride=cfg.chart_stride)
    write_energy_csv(traj, out / "energy.csv",
                     cone=cone_region(traj, cfg.cone_apexes[-1], chart) if cfg.cone_apexes else None)
    u0, v0, side = cfg.diamond
    fields = ChartFields(traj, chart)
    dn = evolve_diamond(seed_from_cauchy(traj, chart, u0, v0, side, max(8, cfg.n_cells // 8), fields=fields))
    write_lattice_csv(dn, out / "lattice.csv")
    bounds["null_constraint_residual"] = raychaudhuri_residuals(dn).evolved_max
    write_bounds_report(out / "chart_bounds.txt", bounds)
    print(f"wrote chart.csv, {len(cfg.cone_apexes)} cone charts, lattice.csv and chart_bounds.txt to {out}")
    j, j_inv = jacobian(chart)
    m = chart.valid
    err = float(np.max(np.abs(np.einsum("...ij,...jk->...ik", j[m], j_inv[m]) - np.eye(2))))
    if err > 1e-8:
        raise InvariantFailure(f"J J^-1 = I violated by {err:.3g}")
    if dn.status != "ok":
        raise InvariantFailure(f"double-null evolution: {dn.status} ({dn.reason})")
    return EXIT_OK


def cmd_verify(cfg: RunConfig, out: Path) -> int:
    checks, res = run_verify(cfg)
    table = format_table(checks, res)
    print(table)
    out.mkdir(parents=True, exist_ok=True)
    (out / "verify.txt").write_text(table + "\n")
    failed = [c.name for c in checks if not c.passed]
    if failed:
        raise InvariantFailure("failed: " + "; ".join(failed))
    return EXIT_OK


def cmd_export(cfg: RunConfig, out: Path) -> int:
    """Long-format CSV (t, r, field, value) from every snapshot file in the output directory."""
    snaps = sorted(out.glob("snap_t*.csv"), key=lambda p: float(p.stem[len("snap_t"):]))
    if not snaps:
        raise ConfigurationError(f"no snapshot files snap_t*.csv in {out}; run 'evolve' first")
    target = out / "export_long.csv"
    with target.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "r", "field", "value"])
        for path in snaps:
            cols = read_csv(path)
            for name in SNAPSHOT_COLUMNS:
                for t, r, v in zip(cols["t"], cols["r"], cols[name]):
                    writer.writerow([repr(float(t)), repr(float(r)), name, repr(float(v))])
    print(f"wrote {target} from {len(snaps)} snapshots")
    return EXIT_OK


COMMANDS = {"init": cmd_init, "evolve": cmd_evolve, "chart": cmd_chart, "verify": cmd_verify, "export": cmd_export}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ekg-axis", description="Axisymmetric Einstein-Klein-Gordon solver and checks.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="INI configuration file")
    p.add_argument("--out", default=None, help="output directory (overrides [output] dir)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = parse_config(args.config)
        if args.out is not None:
            cfg = replace(cfg, out_dir=args.out)
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, out)
    except (ConfigurationError, FamilyViolationError, CD1ViolationError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailureError, GaugeSingularityError, StepError, ChartError, SeedingError,
            FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except InvariantFailure as exc:
        print(f"invariant failure: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
