"""Command line interface for fracmem."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from pathlib import Path
from typing import Iterable, Optional, Sequence, TextIO

import numpy as np

from . import bench, database, marcher
from .bench_repository import BenchRepository
from .config import format_config, load_config
from .continuum import fit_rational, psi_gamma_real, psi_linear
from .errors import ValidationError
from .lattice import format_real, snapshot_path, write_grid_csv
from .memory import trace
from .settings import (
    DB_ENV,
    DEFAULT_LOG_LEVEL,
    DEFAULT_OUT_DIR,
    DEFAULT_WORKERS,
    LOG_LEVEL_ENV,
    OUT_DIR_ENV,
    WORKERS_ENV,
)
from .weights import psi_table
from .workbook import read_bench_workbook, write_bench_workbook

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


class CliParser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with the validation code."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _configure_logging(level: Optional[str]) -> None:
    name = (level or os.environ.get(LOG_LEVEL_ENV) or DEFAULT_LOG_LEVEL).upper()
    numeric = logging.getLevelName(name)
    if not isinstance(numeric, int):
        raise ValidationError(f"unknown log level {name!r}", key="log-level")
    logging.basicConfig(
        stream=sys.stderr,
        level=numeric,
        format="%(levelname)s %(name)s: %(message)s",
        force=True,
    )


def _resolve_out_dir(cli_value: Optional[Path], config_value: Optional[str] = None) -> Path:
    out_dir = Path(cli_value or config_value or os.environ.get(OUT_DIR_ENV) or DEFAULT_OUT_DIR)
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir


def _resolve_db(cli_value: Optional[Path]) -> Optional[Path]:
    value = cli_value or os.environ.get(DB_ENV)
    return Path(value) if value else None


def _resolve_workers(cli_value: Optional[int]) -> int:
    if cli_value is not None:
        workers = cli_value
    else:
        raw = os.environ.get(WORKERS_ENV)
        try:
            workers = int(raw) if raw else DEFAULT_WORKERS
        except ValueError as exc:
            raise ValidationError(f"{WORKERS_ENV} must be an integer, got {raw!r}", key="workers") from exc
    if workers < 1:
        raise ValidationError(f"must be at least 1, got {workers}", key="workers")
    return workers


def _print_table(headers: Sequence[str], rows: Sequence[Sequence[object]]) -> None:
    if not rows:
        print("(no data)")
        return
    widths = [len(header) for header in headers]
    for row in rows:
        for idx, value in enumerate(row):
            widths[idx] = max(widths[idx], len(f"{value}"))
    header_line = " | ".join(header.ljust(widths[idx]) for idx, header in enumerate(headers))
    separator = "-+-".join("-" * widths[idx] for idx in range(len(headers)))
    print(header_line)
    print(separator)
    for row in rows:
        print(" | ".join(str(value).ljust(widths[idx]) for idx, value in enumerate(row)))


def _write_csv(output: Optional[Path], header: Sequence[str], rows: Iterable[Sequence[object]]) -> None:
    def emit(fh: TextIO) -> None:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(format_real(value) if isinstance(value, float) else value for value in row)

    if output:
        with Path(output).open("w", newline="", encoding="utf-8") as fh:
            emit(fh)
        print(f"Written to {output}")
    else:
        emit(sys.stdout)


def run_command(args: argparse.Namespace) -> None:
    cfg = load_config(args.config)
    out_dir = _resolve_out_dir(args.out_dir, cfg.out_dir)
    trajectory = marcher.run(cfg)

    for step, grid in trajectory.snapshots:
        write_grid_csv(snapshot_path(out_dir, step), grid.data)
    write_grid_csv(snapshot_path(out_dir, trajectory.steps), trajectory.final.data)
    digest = marcher.checksum(trajectory.final.data)

    db_path = _resolve_db(args.db)
    if db_path:
        conn = database.open_db(db_path)
        try:
            database.record_run(
                conn,
                config=format_config(cfg),
                strategy=cfg.strategy.tag,
                gamma=cfg.gamma,
                steps=trajectory.steps,
                wall_time_s=trajectory.wall_time_s,
                checksum=digest,
            )
        finally:
            conn.close()

    print(f"steps={trajectory.steps} wall_time_s={trajectory.wall_time_s:.6f} checksum={digest}")


def bench_command(args: argparse.Namespace) -> None:
    cfg = load_config(args.config)
    strategies = bench.parse_sweep(args.sweep)
    gammas = bench.parse_gammas(args.gammas) if args.gammas else None
    if args.repeat < 1:
        raise ValidationError(f"must be at least 1, got {args.repeat}", key="repeat")
    records = bench.sweep(
        cfg,
        strategies,
        gammas,
        workers=_resolve_workers(args.workers),
        repeat=args.repeat,
        norm=args.norm,
    )

    if args.output:
        bench.save_records_csv(args.output, records)
        print(f"Bench records written to {args.output}")
    else:
        bench.write_records_csv(sys.stdout, records)

    if args.plot_data:
        path = bench.write_plot_data(_resolve_out_dir(args.out_dir, cfg.out_dir) / "plot_data.csv", records)
        print(f"Plot data written to {path}")
    if args.xlsx:
        write_bench_workbook(args.xlsx, records)
        print(f"Workbook written to {args.xlsx}")

    db_path = _resolve_db(args.db)
    if db_path:
        conn = database.open_db(db_path)
        try:
            inserted = BenchRepository(conn).create_many(records)
        finally:
            conn.close()
        print(f"{inserted} bench records stored in {db_path}")


def weights_command(args: argparse.Namespace) -> None:
    table = psi_table(args.gamma, args.n)
    _write_csv(args.output, ["m", "psi"], ((m, float(value)) for m, value in enumerate(table.values)))


def psi_fit_command(args: argparse.Namespace) -> None:
    table = psi_table(args.gamma, args.alpha_order + args.beta_order)
    fit = fit_rational(args.gamma, args.alpha_order, args.beta_order, table)
    rows = [("p", i, value) for i, value in enumerate(fit.numerator)]
    rows += [("q", i, value) for i, value in enumerate(fit.denominator)]
    rows += [("residual", m, float(value)) for m, value in enumerate(fit.residuals(table))]
    _write_csv(args.output, ["kind", "index", "value"], rows)


def psi_eval_command(args: argparse.Namespace) -> None:
    if not args.r_step > 0 or args.r_max < 0:
        raise ValidationError("need r-step > 0 and r-max >= 0", key="r-step")
    count = int(round(args.r_max / args.r_step)) + 1
    lags = np.linspace(0.0, args.r_step * (count - 1), count)
    if args.method == "linear":
        table = psi_table(args.gamma, max(int(math.ceil(lags[-1])), 1))
        values = psi_linear(args.gamma, lags, table)
    elif args.method == "gamma":
        values = psi_gamma_real(args.gamma, lags)
    else:
        table = psi_table(args.gamma, args.alpha_order + args.beta_order)
        values = fit_rational(args.gamma, args.alpha_order, args.beta_order, table)(lags)
    _write_csv(args.output, ["r", "psi"], zip((float(r) for r in lags), (float(v) for v in np.atleast_1d(values))))


def memory_trace_command(args: argparse.Namespace) -> None:
    cfg = load_config(args.config)
    rows = (
        (row.k, row.nodes, row.sum_weights, json.dumps({str(w): n for w, n in row.histogram.items()}))
        for row in trace(cfg.strategy, cfg.steps, dt=cfg.dt)
    )
    _write_csv(args.output, ["k", "nodes", "sum_weights", "weights_json"], rows)


def history_command(args: argparse.Namespace) -> None:
    db_path = _resolve_db(args.db)
    if not db_path:
        raise ValidationError(f"pass --db or set {DB_ENV}", key="db")
    incoming = None
    if args.from_xlsx is not None:
        incoming = read_bench_workbook(args.from_xlsx)
    elif not db_path.exists():
        raise FileNotFoundError(db_path)
    conn = database.open_db(db_path)
    try:
        repo = BenchRepository(conn)
        if incoming is not None:
            print(f"{repo.create_many(incoming)} bench records imported from {args.from_xlsx}")
        records, total = repo.list(
            strategy=args.strategy, gamma=args.gamma, limit=args.limit, offset=args.offset
        )
    finally:
        conn.close()
    _print_table(
        ["strategy", "param", "gamma", "steps", "wall_time_s", "rel_error_pct", "nodes_stored", "status"],
        [
            (r.strategy, "" if r.param is None else r.param, r.gamma, r.steps,
             f"{r.wall_time_s:.4f}", f"{r.rel_error_pct:.6g}", r.nodes_stored, r.status)
            for r in records
        ],
    )
    print(f"({len(records)} of {total})")


def build_parser() -> argparse.ArgumentParser:
    parser = CliParser(prog="fracmem", description="Fractional diffusion solver with history-memory strategies")
    parser.add_argument(
        "--log-level",
        help=f"Diagnostic level on stderr (defaults to {LOG_LEVEL_ENV} or {DEFAULT_LOG_LEVEL})",
    )

    subparsers = parser.add_subparsers(dest="command", required=True)

    run_parser = subparsers.add_parser("run", help="March a config file and write snapshot CSVs")
    run_parser.add_argument("config", type=Path, help="Path to a key=value config file")
    run_parser.add_argument("--out-dir", type=Path, help=f"Snapshot directory (overrides out_dir and {OUT_DIR_ENV})")
    run_parser.add_argument("--db", type=Path, help=f"SQLite file for the run summary (defaults to {DB_ENV})")
    run_parser.set_defaults(func=run_command)

    bench_parser = subparsers.add_parser("bench", help="Compare memory strategies against full memory")
    bench_parser.add_argument("config", type=Path, help="Base config file")
    bench_parser.add_argument(
        "--sweep",
        required=True,
        help="Strategies, e.g. 'full;short:50,100;adaptive:5,10;powerlaw:3'",
    )
    bench_parser.add_argument("--gammas", help="Comma-separated orders (defaults to the config gamma)")
    bench_parser.add_argument("--workers", type=int, help=f"Worker processes (defaults to {WORKERS_ENV} or 1)")
    bench_parser.add_argument("--repeat", type=int, default=1, help="Runs per cell; the best wall time is kept")
    bench_parser.add_argument("--norm", choices=sorted(bench.NORMS), default=bench.DEFAULT_NORM)
    bench_parser.add_argument("--output", help="Optional path to write the records CSV")
    bench_parser.add_argument("--plot-data", action="store_true", help="Also write plot_data.csv to the output directory")
    bench_parser.add_argument("--out-dir", type=Path, help="Directory for plot_data.csv")
    bench_parser.add_argument("--xlsx", type=Path, help="Optional path to write an Excel workbook")
    bench_parser.add_argument("--db", type=Path, help=f"SQLite file to store the records (defaults to {DB_ENV})")
    bench_parser.set_defaults(func=bench_command)

    weights_parser = subparsers.add_parser("weights", help="Dump psi(gamma, m) for m = 0..n as CSV")
    weights_parser.add_argument("--gamma", type=float, required=True)
    weights_parser.add_argument("--n", type=int, required=True)
    weights_parser.add_argument("--output", type=Path)
    weights_parser.set_defaults(func=weights_command)

    fit_parser = subparsers.add_parser("psi-fit", help="Fit a rational Psi(gamma, r) through the weights")
    fit_parser.add_argument("--gamma", type=float, required=True)
    fit_parser.add_argument("--alpha-order", type=int, default=1)
    fit_parser.add_argument("--beta-order", type=int, default=2)
    fit_parser.add_argument("--output", type=Path)
    fit_parser.set_defaults(func=psi_fit_command)

    eval_parser = subparsers.add_parser("psi-eval", help="Tabulate a continuous Psi(gamma, r)")
    eval_parser.add_argument("--method", choices=["linear", "gamma", "rational"], required=True)
    eval_parser.add_argument("--gamma", type=float, required=True)
    eval_parser.add_argument("--r-max", type=float, default=10.0)
    eval_parser.add_argument("--r-step", type=float, default=0.1)
    eval_parser.add_argument("--alpha-order", type=int, default=1)
    eval_parser.add_argument("--beta-order", type=int, default=2)
    eval_parser.add_argument("--output", type=Path)
    eval_parser.set_defaults(func=psi_eval_command)

    trace_parser = subparsers.add_parser("memory-trace", help="Per-step bookkeeping of the config's strategy")
    trace_parser.add_argument("config", type=Path)
    trace_parser.add_argument("--output", type=Path)
    trace_parser.set_defaults(func=memory_trace_command)

    history_parser = subparsers.add_parser("history", help="List bench records stored in SQLite")
    history_parser.add_argument("--db", type=Path, help=f"SQLite file (defaults to {DB_ENV})")
    history_parser.add_argument("--strategy")
    history_parser.add_argument("--gamma", type=float)
    history_parser.add_argument("--limit", type=int, default=50)
    history_parser.add_argument("--offset", type=int, default=0)
    history_parser.add_argument(
        "--from-xlsx", type=Path, help="Import the records sheet of a bench workbook before listing"
    )
    history_parser.set_defaults(func=history_command)

    return parser


def main(argv: Iterable[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(None if argv is None else list(argv))
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_VALIDATION

    try:
        _configure_logging(args.log_level)
        args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover - CLI entry point
    sys.exit(main())
