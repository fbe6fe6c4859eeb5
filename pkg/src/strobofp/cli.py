"""Command-line driver: sweeps, validation runs, and figure data files.

Subcommands: meantau, survival, spectrum, fit, mc, figures.  Tabular output
is CSV with a versioned header comment, structured output is JSON, figures
are CSV plus gnuplot scripts.  Every command is deterministic given its
configuration (Monte Carlo given its seed); exit codes are 0 on success,
2 on usage errors, 3 on numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import asymptotics
from ._threads import parallel_map
from .errors import ConvergenceError, FitError, InsufficientDataError, ResolutionError, SolverError
from .fitting import REFERENCE_FITS, fit_boundary, fit_bulk, fit_gap
from .montecarlo import simulate_tau, self_averaging_check, write_histogram_csv
from .operator_core import (
    DEFAULT_CUTOFF_ETA,
    FrameDistribution,
    ProblemSpec,
    build_averaged_operator,
    build_operator,
)
from .resolvent import exit_stats, mean_frames, spectral_pair, survival_sequence

CSV_SCHEMA_VERSION = 1

_NUMERICAL_ERRORS = (
    ResolutionError,
    SolverError,
    ConvergenceError,
    FitError,
    InsufficientDataError,
    np.linalg.LinAlgError,
)


class UsageError(Exception):
    """Invalid flag combination or value detected after argument parsing."""


@dataclass
class RunConfig:
    """Serializable record of one CLI invocation."""

    command: str
    rho: float | None = None
    rho_range: tuple | None = None
    y0: float = 0.5
    n_grid: int | None = None
    eta: float = DEFAULT_CUTOFF_ETA
    dist: str = "deterministic"
    trials: int = 100_000
    seed: int = 12345
    out: str = "-"
    fmt: str = "csv"
    modesum: bool = False
    n_max: int = 100
    which: str | None = None
    tol: float = 1e-12
    quadrature_order: int = 64
    hist_out: str | None = None

    def to_dict(self) -> dict:
        raw = asdict(self)
        if raw["rho_range"] is not None:
            raw["rho_range"] = list(raw["rho_range"])
        return raw

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        raw = dict(raw)
        if raw.get("rho_range") is not None:
            raw["rho_range"] = tuple(raw["rho_range"])
        return cls(**raw)


def parse_rho_range(text: str) -> tuple:
    """lo:hi:step, inclusive of lo, inclusive of hi up to step/2 rounding."""
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"range must be lo:hi:step, got {text!r}")
    lo, hi, step = (float(p) for p in parts)
    if step <= 0 or hi < lo:
        raise UsageError(f"range must satisfy lo <= hi and step > 0, got {text!r}")
    return lo, hi, step


def _range_values(rng: tuple) -> np.ndarray:
    lo, hi, step = rng
    return np.arange(lo, hi + 0.5 * step, step)


def _resolve_rhos(cfg: RunConfig) -> np.ndarray:
    if (cfg.rho is None) == (cfg.rho_range is None):
        raise UsageError("exactly one of --rho / --rho-range is required")
    if cfg.rho is not None:
        return np.array([cfg.rho])
    return _range_values(cfg.rho_range)


def _distribution(cfg: RunConfig) -> FrameDistribution:
    try:
        return FrameDistribution.parse(cfg.dist)
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from exc


def _operator(cfg: RunConfig, rho: float, mu: FrameDistribution):
    spec = ProblemSpec(rho=rho, y0=cfg.y0, n_grid=cfg.n_grid, cutoff_eta=cfg.eta)
    if mu.kind == "deterministic":
        return build_operator(spec)
    return build_averaged_operator(spec, mu, cfg.quadrature_order)


def _format(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))  # shortest representation that round-trips exactly
    return str(x)


def _write_text(out: str, text: str) -> None:
    if out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, newline="\n")


def _csv_text(command: str, columns, rows, extra_comment: str | None = None) -> str:
    lines = [f"# strobofp csv v{CSV_SCHEMA_VERSION} command={command}"]
    if extra_comment:
        lines.append(f"# {extra_comment}")
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_format(x) for x in row))
    return "\n".join(lines) + "\n"


def read_csv(text: str):
    """Round-trip reader for the CSV emitted here: (comments, columns, rows)."""
    comments, columns, rows = [], None, []
    for line in text.splitlines():
        if line.startswith("#"):
            comments.append(line)
        elif columns is None:
            columns = line.split(",")
        elif line:
            rows.append([float(x) for x in line.split(",")])
    return comments, columns, rows


# -- subcommands -------------------------------------------------------------


def cmd_meantau(cfg: RunConfig) -> int:
    mu = _distribution(cfg)
    rhos = _resolve_rhos(cfg)

    def solve(rho: float):
        stats = exit_stats(_operator(cfg, rho, mu), cfg.y0, tol=cfg.tol)
        return (rho, cfg.y0, stats.M, stats.mean_tau, stats.lambda0, stats.gap)

    rows = sorted(parallel_map(solve, rhos), key=lambda r: r[0])
    if cfg.fmt == "json":
        names = ("rho", "y0", "M", "mean_tau", "lambda0", "gap")
        payload = [dict(zip(names, row)) for row in rows]
        _write_text(cfg.out, json.dumps(payload, indent=2) + "\n")
    else:
        _write_text(
            cfg.out,
            _csv_text("meantau", ("rho", "y0", "M", "mean_tau", "lambda0", "gap"),
                      rows, f"dist={mu.describe()}"),
        )
    return 0


def cmd_survival(cfg: RunConfig) -> int:
    mu = _distribution(cfg)
    rhos = _resolve_rhos(cfg)
    if rhos.size != 1:
        raise UsageError("survival takes a single --rho")
    rho = float(rhos[0])
    if cfg.modesum and cfg.y0 not in (0.0, 0.5, 1.0):
        raise UsageError("--modesum needs y0 in {0, 0.5, 1}")
    series = survival_sequence(_operator(cfg, rho, mu), cfg.y0, cfg.n_max)
    columns = ["n", "S_n"]
    rows = [[n, s] for n, s in enumerate(series.values)]
    if cfg.modesum:
        start = "bulk" if cfg.y0 == 0.5 else "boundary"
        columns.append("mode_sum")
        for row in rows:
            row.append(
                1.0 if row[0] == 0
                else asymptotics.mode_sum_survival(rho, int(row[0]), start)
            )
    _write_text(
        cfg.out,
        _csv_text("survival", columns, rows, f"rho={_format(rho)} y0={_format(cfg.y0)}"),
    )
    return 0


def cmd_spectrum(cfg: RunConfig) -> int:
    mu = _distribution(cfg)
    rhos = _resolve_rhos(cfg)

    def solve(rho: float):
        lam, _, a0 = spectral_pair(_operator(cfg, rho, mu), tol=cfg.tol, y0=cfg.y0)
        return (rho, lam, 1.0 - lam, a0)

    rows = sorted(parallel_map(solve, rhos), key=lambda r: r[0])
    _write_text(
        cfg.out,
        _csv_text("spectrum", ("rho", "lambda0", "gap", "a0_est"), rows,
                  f"dist={mu.describe()} y0={_format(cfg.y0)}"),
    )
    return 0


def _sweep_mean_frames(cfg: RunConfig, rhos: np.ndarray, y0: float, mu: FrameDistribution):
    def solve(rho: float):
        op = _operator(cfg, rho, mu)
        return (rho, mean_frames(op, y0).M)

    return sorted(parallel_map(solve, rhos), key=lambda r: r[0])


def cmd_fit(cfg: RunConfig) -> int:
    mu = _distribution(cfg)
    which = cfg.which or "boundary"
    if cfg.rho is not None:
        raise UsageError("fit expects --rho-range, not a single --rho")
    rng = cfg.rho_range or ((20.0, 120.0, 10.0) if which == "gap" else (20.0, 200.0, 10.0))
    rhos = _range_values(rng)
    if which == "boundary":
        result = fit_boundary(_sweep_mean_frames(cfg, rhos, 0.0, mu))
    elif which == "bulk":
        result = fit_bulk(_sweep_mean_frames(cfg, rhos, 0.5, mu))
    elif which == "gap":
        def gap_of(rho: float):
            lam, _, _ = spectral_pair(_operator(cfg, rho, mu), tol=cfg.tol)
            return (rho, 1.0 - lam)

        result = fit_gap(sorted(parallel_map(gap_of, rhos), key=lambda r: r[0]))
    else:
        raise UsageError(f"unknown fit kind {which!r}")

    _write_text(cfg.out, result.to_json(indent=2, sort_keys=True) + "\n")
    targets = REFERENCE_FITS[which]
    lines = [f"fit {which} over rho in [{result.window[0]:g}, {result.window[1]:g}], "
             f"{result.n_points} points, rms residual {result.rms_residual:.3e}"]
    merged = dict(result.coefficients)
    merged.update(result.derived)
    for name, value in merged.items():
        if name in targets:
            dev = value - targets[name]
            lines.append(f"  {name} = {value:+.6f}   target {targets[name]:+.6f}   "
                         f"deviation {dev:+.2e}")
        else:
            lines.append(f"  {name} = {value:+.6f}")
    print("\n".join(lines))
    return 0


def cmd_mc(cfg: RunConfig) -> int:
    mu = _distribution(cfg)
    rhos = _resolve_rhos(cfg)
    if rhos.size != 1:
        raise UsageError("mc takes a single --rho")
    rho = float(rhos[0])
    if mu.kind == "deterministic":
        mc = simulate_tau(rho, cfg.y0, cfg.trials, cfg.seed, mu=mu)
        reference = mean_frames(_operator(cfg, rho, mu), cfg.y0).mean_tau
        z = (mc.mean_tau - reference) / mc.std_error
        payload = {
            "mode": "deterministic",
            "rho": rho,
            "y0": cfg.y0,
            "mc": mc.summary_dict(),
            "resolvent_mean_tau": reference,
            "z_score": z,
            "passed": bool(abs(z) < 3.0),
        }
    else:
        report = self_averaging_check(
            rho, cfg.y0, mu, cfg.trials, cfg.seed, cfg.quadrature_order
        )
        mc = report.mc
        payload = {
            "mode": "self-averaging",
            "rho": rho,
            "y0": cfg.y0,
            "distribution": report.distribution,
            "mc": mc.summary_dict(),
            "resolvent_mean_tau": report.resolvent_mean_tau,
            "z_score": report.z_score,
            "passed": report.passed,
        }
    _write_text(cfg.out, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    if cfg.hist_out:
        write_histogram_csv(mc, cfg.hist_out)
    return 0


_GNUPLOT_HEADER = "set datafile separator ','\nset key left top\nset grid\n"


def _figure2(out_dir: Path) -> None:
    rhos = asymptotics.loglog_window_points(10.0, 100.0, 40)
    rows = [(r, asymptotics.bulk_law(r), 0.25 * r * r) for r in rhos]
    alpha_low = asymptotics.effective_exponent(
        [(r, asymptotics.bulk_law(r)) for r in asymptotics.loglog_window_points(10, 30)],
        (10, 30),
    )
    alpha_high = asymptotics.effective_exponent(
        [(r, asymptotics.bulk_law(r)) for r in asymptotics.loglog_window_points(30, 100)],
        (30, 100),
    )
    comment = (f"alpha_eff[10,30]={alpha_low:.4f} alpha_eff[30,100]={alpha_high:.4f} "
               f"reference slope 2")
    (out_dir / "fig2.csv").write_text(
        _csv_text("figures/fig2", ("rho", "etau_bulk_law", "quarter_rho_sq"),
                  rows, comment),
        newline="\n",
    )
    script = (
        _GNUPLOT_HEADER
        + "set logscale xy\nset xlabel 'rho'\nset ylabel 'E[tau]'\n"
        + f"set label 1 'alpha_eff = {alpha_low:.2f} on [10,30]' at graph 0.05, 0.9\n"
        + f"set label 2 'alpha_eff = {alpha_high:.2f} on [30,100]' at graph 0.05, 0.82\n"
        + "plot 'fig2.csv' using 1:2 with lines title 'bulk law', \\\n"
        + "     'fig2.csv' using 1:3 with lines dashtype 2 title 'rho^2/4'\n"
    )
    (out_dir / "fig2.gp").write_text(script, newline="\n")


def _figure_sweep(cfg: RunConfig, out_dir: Path, name: str, y0: float) -> None:
    mu = FrameDistribution.deterministic()
    rng = cfg.rho_range or (20.0, 200.0, 10.0)
    data = _sweep_mean_frames(cfg, _range_values(rng), y0, mu)
    if name == "fig3":
        fit = fit_boundary(data)
        coef = fit.coefficients
        model = lambda r: coef["A"] * r + coef["B"] + coef["C"] / r
        asym = lambda r: r / math.sqrt(2.0) + (asymptotics.BOUNDARY_CONST - 1.0)
        labels = ("M_data", "M_fit", "M_asymptote")
        title = "boundary start (y0=0)"
    else:
        fit = fit_bulk(data)
        coef = fit.coefficients
        model = lambda r: coef["a"] * r * r + coef["b"] * r + coef["c"]
        asym = lambda r: 0.25 * r * r
        labels = ("M_data", "M_fit", "M_quarter_rho_sq")
        title = "bulk start (y0=1/2)"
    rows = [(r, m, model(r), asym(r)) for r, m in data]
    (out_dir / f"{name}.csv").write_text(
        _csv_text(f"figures/{name}", ("rho",) + labels, rows,
                  f"{title}; fit {fit.to_json()}"),
        newline="\n",
    )
    script = (
        _GNUPLOT_HEADER
        + f"set xlabel 'rho'\nset ylabel 'M'\nset title '{title}'\n"
        + f"plot '{name}.csv' using 1:2 with points pointtype 7 title 'data', \\\n"
        + f"     '{name}.csv' using 1:3 with lines title 'fit', \\\n"
        + f"     '{name}.csv' using 1:4 with lines dashtype 2 title 'asymptote'\n"
    )
    (out_dir / f"{name}.gp").write_text(script, newline="\n")


def cmd_figures(cfg: RunConfig) -> int:
    out_dir = Path(cfg.out if cfg.out != "-" else ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    _figure2(out_dir)
    _figure_sweep(cfg, out_dir, "fig3", 0.0)
    _figure_sweep(cfg, out_dir, "fig4", 0.5)
    print(f"wrote fig2/fig3/fig4 csv+gp under {out_dir}")
    return 0


_HANDLERS = {
    "meantau": cmd_meantau,
    "survival": cmd_survival,
    "spectrum": cmd_spectrum,
    "fit": cmd_fit,
    "mc": cmd_mc,
    "figures": cmd_figures,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="strobofp",
        description="Survival statistics of Brownian motion under frame-based "
                    "(kill-on-check) monitoring.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, rho=True):
        if rho:
            p.add_argument("--rho", type=float, default=None,
                           help="single confinement ratio")
            p.add_argument("--rho-range", type=str, default=None, metavar="LO:HI:STEP",
                           help="sweep lo:hi:step (inclusive of lo and hi)")
        p.add_argument("--y0", type=float, default=0.5, help="start point in [0,1]")
        p.add_argument("--n-grid", type=int, default=None,
                       help="override the N=ceil(18 rho) resolution rule")
        p.add_argument("--eta", type=float, default=DEFAULT_CUTOFF_ETA,
                       help="Gaussian band cutoff in kernel widths")
        p.add_argument("--dist", type=str, default="deterministic",
                       help="frame-interval law: deterministic | twopoint:u1,u2,p "
                            "| jitter:eps | exponential")
        p.add_argument("--out", type=str, default="-", help="output path ('-' = stdout)")

    p = sub.add_parser("meantau", help="mean frame counts and spectral gap over a sweep")
    common(p)
    p.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")

    p = sub.add_parser("survival", help="survival sequence S_0..S_n")
    common(p)
    p.add_argument("--n-max", type=int, default=100)
    p.add_argument("--modesum", action="store_true",
                   help="add the sine-mode reference column (y0 in {0, 0.5, 1})")

    p = sub.add_parser("spectrum", help="leading eigenvalue and overlap over a sweep")
    common(p)
    p.add_argument("--tol", type=float, default=1e-12)

    p = sub.add_parser("fit", help="regress a sweep and compare to reference constants")
    common(p)
    p.add_argument("--which", choices=("boundary", "bulk", "gap"), default="boundary")
    p.add_argument("--tol", type=float, default=1e-12)

    p = sub.add_parser("mc", help="Monte Carlo validation against the resolvent")
    common(p)
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=12345)
    p.add_argument("--hist-out", type=str, default=None,
                   help="write the tau histogram as CSV")

    p = sub.add_parser("figures", help="emit fig2/fig3/fig4 data and gnuplot scripts")
    common(p)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(command=args.command)
    for name in ("rho", "y0", "n_grid", "eta", "dist", "out", "fmt", "modesum",
                 "n_max", "which", "tol", "trials", "seed", "hist_out"):
        if hasattr(args, name) and getattr(args, name) is not None:
            setattr(cfg, name, getattr(args, name))
    if getattr(args, "rho_range", None):
        cfg.rho_range = parse_rho_range(args.rho_range)
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        cfg = config_from_args(args)
        return _HANDLERS[cfg.command](cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
