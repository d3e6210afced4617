"""Excel export and re-import of bench records."""
from __future__ import annotations

import math
from pathlib import Path
from typing import Dict, Iterable, List, Sequence

from openpyxl import Workbook, load_workbook
from openpyxl.worksheet.worksheet import Worksheet

from .bench import CSV_COLUMNS, BenchRecord, plot_series
from .memory import STRATEGY_ORDER

RECORDS_SHEET = "records"
SERIES_COLUMNS = ["param", "wall_time_s", "rel_error_pct", "nodes_stored", "terms_per_step"]


def _cell(value: object) -> object:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _record_row(record: BenchRecord, columns: Sequence[str]) -> List[object]:
    return [_cell(getattr(record, column)) for column in columns]


def write_bench_workbook(path: Path | str, records: Iterable[BenchRecord]) -> Path:
    """Write a ``records`` sheet plus one sheet per strategy ordered by wall time."""
    path = Path(path)
    records = list(records)
    wb = Workbook()
    ws = wb.active
    ws.title = RECORDS_SHEET
    ws.append(CSV_COLUMNS)
    for record in records:
        ws.append(_record_row(record, CSV_COLUMNS))

    by_strategy: Dict[str, List[BenchRecord]] = {}
    for record in plot_series(records):
        by_strategy.setdefault(record.strategy, []).append(record)
    for tag in STRATEGY_ORDER:
        if tag not in by_strategy:
            continue
        sheet = wb.create_sheet(tag)
        sheet.append(["gamma", *SERIES_COLUMNS])
        for record in by_strategy[tag]:
            sheet.append([record.gamma, *_record_row(record, SERIES_COLUMNS)])

    wb.save(path)
    wb.close()
    return path


def _normalised_headers(header_row: Sequence[object]) -> List[str]:
    return [str(cell).strip().lower() if cell is not None else "" for cell in header_row]


def _record_from_row(headers: Sequence[str], row: Sequence[object]) -> BenchRecord:
    values = {header: value for header, value in zip(headers, row) if header}

    def real(key: str) -> float:
        value = values.get(key)
        return math.nan if value in (None, "") else float(value)

    param = values.get("param")
    return BenchRecord(
        strategy=str(values["strategy"]).strip(),
        param=None if param in (None, "") else float(param),
        gamma=float(values["gamma"]),
        steps=int(values["steps"]),
        wall_time_s=real("wall_time_s"),
        rel_error_pct=real("rel_error_pct"),
        nodes_stored=int(values["nodes_stored"]),
        terms_per_step=real("terms_per_step"),
        status=str(values.get("status") or "ok"),
    )


def _records_from_sheet(sheet: Worksheet) -> List[BenchRecord]:
    rows_iter = sheet.iter_rows(values_only=True)
    header_row = next(rows_iter, None)
    if header_row is None:
        return []
    headers = _normalised_headers(header_row)
    missing = set(CSV_COLUMNS) - {header for header in headers if header} - {"status"}
    if missing:
        raise ValueError(f"Missing required columns: {sorted(missing)}")
    return [
        _record_from_row(headers, row)
        for row in rows_iter
        if any(cell not in (None, "") for cell in row)
    ]


def read_bench_workbook(path: Path | str) -> List[BenchRecord]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    if path.suffix.lower() != ".xlsx":
        raise ValueError("Only .xlsx files are supported")
    wb = load_workbook(path, data_only=True)
    try:
        if RECORDS_SHEET not in wb.sheetnames:
            raise ValueError(f"Worksheet '{RECORDS_SHEET}' not found in workbook")
        return _records_from_sheet(wb[RECORDS_SHEET])
    finally:
        wb.close()
