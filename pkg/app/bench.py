"""Error, runtime and memory comparison of memory strategies against full memory."""
from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import astuple, dataclass, fields
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence, TextIO, Tuple

import numpy as np

from .errors import ValidationError
from .lattice import FieldGrid, format_real
from .marcher import SimConfig, Trajectory, run
from .memory import STRATEGY_ORDER, STRATEGY_PARAM_KEYS, Full, MemoryStrategy, strategy_from_tag

logger = logging.getLogger(__name__)

NORMS: Dict[str, float] = {"l1": 1, "l2": 2, "linf": math.inf}
DEFAULT_NORM = "l1"
STATUS_OK = "ok"


@dataclass(slots=True)
class BenchRecord:
    """One (strategy, parameter, gamma) measurement."""

    strategy: str
    param: Optional[float]
    gamma: float
    steps: int
    wall_time_s: float
    rel_error_pct: float
    nodes_stored: int
    terms_per_step: float
    status: str = STATUS_OK

    @property
    def ok(self) -> bool:
        return self.status == STATUS_OK

    def sort_key(self) -> Tuple[int, float, float]:
        param = -math.inf if self.param is None else float(self.param)
        return STRATEGY_ORDER.index(self.strategy), param, self.gamma


CSV_COLUMNS = [f.name for f in fields(BenchRecord)]


def reference_run(cfg: SimConfig) -> FieldGrid:
    return run(cfg.with_strategy(Full())).final


def relative_error(u: np.ndarray, reference: np.ndarray, norm: str = DEFAULT_NORM) -> float:
    """100·‖u − ref‖ / ‖ref‖ in the named norm."""
    if norm not in NORMS:
        raise ValidationError(f"unknown norm {norm!r}; expected one of {', '.join(NORMS)}", key="norm")
    order = NORMS[norm]
    diff = float(np.linalg.norm(np.ravel(u - reference), ord=order))
    scale = float(np.linalg.norm(np.ravel(reference), ord=order))
    if scale == 0.0:
        return 0.0 if diff == 0.0 else math.inf
    return 100.0 * diff / scale


def _timed(cfg: SimConfig, repeat: int) -> Trajectory:
    best: Optional[Trajectory] = None
    for _ in range(max(repeat, 1)):
        trajectory = run(cfg)
        if best is None or trajectory.wall_time_s < best.wall_time_s:
            best = trajectory
    assert best is not None
    return best


def _failed(strategy: MemoryStrategy, gamma: float, steps: int, message: str) -> BenchRecord:
    return BenchRecord(
        strategy=strategy.tag,
        param=strategy.param,
        gamma=gamma,
        steps=steps,
        wall_time_s=math.nan,
        rel_error_pct=math.nan,
        nodes_stored=0,
        terms_per_step=math.nan,
        status=f"failed: {message}",
    )


def _run_cell(cell: Tuple[SimConfig, Optional[np.ndarray], str, int, str]) -> BenchRecord:
    cfg, reference, norm, repeat, reference_failure = cell
    if reference is None:
        return _failed(cfg.strategy, cfg.gamma, cfg.steps, f"reference run failed: {reference_failure}")
    try:
        trajectory = _timed(cfg, repeat)
    except (ValueError, RuntimeError) as exc:
        return _failed(cfg.strategy, cfg.gamma, cfg.steps, str(exc))
    return BenchRecord(
        strategy=cfg.strategy.tag,
        param=cfg.strategy.param,
        gamma=cfg.gamma,
        steps=cfg.steps,
        wall_time_s=trajectory.wall_time_s,
        rel_error_pct=relative_error(trajectory.final.data, reference, norm),
        nodes_stored=trajectory.nodes_peak,
        terms_per_step=trajectory.terms_per_step,
    )


def _reference_cell(cfg: SimConfig) -> Tuple[Optional[np.ndarray], str]:
    try:
        return np.array(reference_run(cfg).data), ""
    except (ValueError, RuntimeError) as exc:
        return None, str(exc)


def _mapper(workers: int) -> Tuple[Callable, Optional[ProcessPoolExecutor]]:
    if workers <= 1:
        return map, None
    pool = ProcessPoolExecutor(max_workers=workers)
    return pool.map, pool


def sweep(
    base: SimConfig,
    strategies: Sequence[MemoryStrategy],
    gammas: Optional[Sequence[float]] = None,
    *,
    workers: int = 1,
    repeat: int = 1,
    norm: str = DEFAULT_NORM,
) -> List[BenchRecord]:
    """Run every (strategy, gamma) cell and compare it with the full-memory run.

    Cells are independent; failures become rows with a ``failed:`` status and
    the sweep carries on. Output order is canonical whatever the worker count.
    """
    if norm not in NORMS:
        raise ValidationError(f"unknown norm {norm!r}; expected one of {', '.join(NORMS)}", key="norm")
    gammas = list(gammas) if gammas else [base.gamma]
    configs = {gamma: base.with_gamma(gamma) for gamma in gammas}

    mapper, pool = _mapper(workers)
    try:
        references = dict(zip(gammas, mapper(_reference_cell, [configs[g] for g in gammas])))
        records: List[BenchRecord] = []
        cells = []
        for gamma in gammas:
            reference, failure = references[gamma]
            for strategy in strategies:
                try:
                    cfg = configs[gamma].with_strategy(strategy)
                except ValidationError as exc:
                    records.append(_failed(strategy, gamma, base.steps, str(exc)))
                    continue
                cells.append((cfg, reference, norm, repeat, failure))
        records.extend(mapper(_run_cell, cells))
    finally:
        if pool is not None:
            pool.shutdown()

    for record in records:
        if not record.ok:
            logger.warning("bench cell %s(%s) gamma=%s %s", record.strategy, record.param, record.gamma, record.status)
    records.sort(key=BenchRecord.sort_key)
    return records


def parse_sweep(spec: str) -> List[MemoryStrategy]:
    """``full;short:50,100;adaptive:5,10;powerlaw:3;smart:1e-4`` to strategies."""
    strategies: List[MemoryStrategy] = []
    for group in spec.split(";"):
        group = group.strip()
        if not group:
            continue
        tag, _, raw_values = group.partition(":")
        tag = tag.strip().lower()
        if tag not in STRATEGY_PARAM_KEYS:
            raise ValidationError(f"unknown strategy {tag!r} in {group!r}", key="sweep")
        if STRATEGY_PARAM_KEYS[tag] is None:
            if raw_values.strip():
                raise ValidationError(f"strategy {tag} takes no values", key="sweep")
            strategies.append(strategy_from_tag(tag))
            continue
        values = [value.strip() for value in raw_values.split(",") if value.strip()]
        if not values:
            raise ValidationError(f"strategy {tag} needs at least one value", key="sweep")
        for value in values:
            try:
                strategies.append(strategy_from_tag(tag, float(value)))
            except ValueError as exc:
                raise ValidationError(f"bad value {value!r} for {tag}: {exc}", key="sweep") from exc
    if not strategies:
        raise ValidationError("no strategies given", key="sweep")
    return strategies


def parse_gammas(spec: str) -> List[float]:
    try:
        return [float(value) for value in spec.split(",") if value.strip()]
    except ValueError as exc:
        raise ValidationError(f"expected comma-separated reals, got {spec!r}", key="gammas") from exc


def _format_cell(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format_real(value)
    return str(value)


def write_records_csv(stream: TextIO, records: Iterable[BenchRecord]) -> None:
    writer = csv.writer(stream)
    writer.writerow(CSV_COLUMNS)
    for record in records:
        writer.writerow(_format_cell(value) for value in astuple(record))


def save_records_csv(path: Path | str, records: Iterable[BenchRecord]) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        write_records_csv(fh, records)
    return path


def plot_series(records: Iterable[BenchRecord]) -> List[BenchRecord]:
    """Successful records grouped by strategy and ordered by wall time within each."""
    ok = [record for record in records if record.ok]
    return sorted(ok, key=lambda r: (STRATEGY_ORDER.index(r.strategy), r.wall_time_s))


def write_plot_data(path: Path | str, records: Iterable[BenchRecord]) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["strategy", "param", "wall_time_s", "rel_error_pct"])
        for record in plot_series(records):
            writer.writerow(
                _format_cell(value)
                for value in (record.strategy, record.param, record.wall_time_s, record.rel_error_pct)
            )
    return path
