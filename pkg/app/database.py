"""SQLite persistence for bench records and run summaries."""
from __future__ import annotations

import math
import sqlite3
from pathlib import Path
from typing import Iterable

SCHEMA = """
CREATE TABLE IF NOT EXISTS bench_records (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    strategy TEXT NOT NULL,
    param REAL,
    gamma REAL NOT NULL,
    steps INTEGER NOT NULL,
    wall_time_s REAL,
    rel_error_pct REAL,
    nodes_stored INTEGER NOT NULL,
    terms_per_step REAL,
    status TEXT NOT NULL DEFAULT 'ok',
    created_at TEXT NOT NULL DEFAULT CURRENT_TIMESTAMP
);

CREATE INDEX IF NOT EXISTS idx_bench_records_strategy
    ON bench_records(strategy);
CREATE INDEX IF NOT EXISTS idx_bench_records_gamma
    ON bench_records(gamma);
"""

SCHEMA_MIGRATIONS = """
CREATE TABLE IF NOT EXISTS schema_migrations (
    name TEXT PRIMARY KEY,
    applied_at TEXT NOT NULL DEFAULT CURRENT_TIMESTAMP
);
"""

MIGRATIONS: tuple[tuple[str, str], ...] = (
    (
        "001_create_run_summaries",
        """
        CREATE TABLE IF NOT EXISTS run_summaries (
            id INTEGER PRIMARY KEY AUTOINCREMENT,
            config TEXT NOT NULL,
            strategy TEXT NOT NULL,
            gamma REAL NOT NULL,
            steps INTEGER NOT NULL,
            wall_time_s REAL NOT NULL,
            checksum TEXT NOT NULL,
            created_at TEXT NOT NULL DEFAULT CURRENT_TIMESTAMP
        );

        CREATE INDEX IF NOT EXISTS idx_run_summaries_checksum
            ON run_summaries(checksum);
        """,
    ),
)


def get_connection(db_path: Path | str) -> sqlite3.Connection:
    """Return a SQLite connection with row factory enabled."""
    conn = sqlite3.connect(Path(db_path))
    conn.row_factory = sqlite3.Row
    return conn


def init_db(db_path: Path | str) -> None:
    conn = get_connection(db_path)
    try:
        conn.executescript(SCHEMA)
        run_migrations(conn)
        conn.commit()
    finally:
        conn.close()


def open_db(db_path: Path | str) -> sqlite3.Connection:
    """Connect and make sure every table exists."""
    conn = get_connection(db_path)
    conn.executescript(SCHEMA)
    run_migrations(conn)
    return conn


def _nullable(value: float | None) -> float | None:
    # NaN is stored as NULL.
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return None
    return value


def insert_records(
    conn: sqlite3.Connection,
    rows: Iterable[tuple[str, float | None, float, int, float, float, int, float, str]],
) -> int:
    """Bulk insert bench rows; returns the number of inserted records."""
    cursor = conn.executemany(
        """
        INSERT INTO bench_records (
            strategy, param, gamma, steps, wall_time_s, rel_error_pct,
            nodes_stored, terms_per_step, status
        ) VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?)
        """,
        [
            (strategy, param, gamma, steps, _nullable(wall), _nullable(error), nodes, _nullable(terms), status)
            for strategy, param, gamma, steps, wall, error, nodes, terms, status in rows
        ],
    )
    conn.commit()
    return cursor.rowcount


def record_run(
    conn: sqlite3.Connection,
    *,
    config: str,
    strategy: str,
    gamma: float,
    steps: int,
    wall_time_s: float,
    checksum: str,
) -> int:
    cursor = conn.execute(
        """
        INSERT INTO run_summaries (config, strategy, gamma, steps, wall_time_s, checksum)
        VALUES (?, ?, ?, ?, ?, ?)
        """,
        (config, strategy, gamma, steps, wall_time_s, checksum),
    )
    conn.commit()
    return int(cursor.lastrowid)


def run_migrations(conn: sqlite3.Connection) -> None:
    """Apply named migrations not yet recorded in ``schema_migrations``."""
    conn.executescript(SCHEMA_MIGRATIONS)
    applied = {row[0] for row in conn.execute("SELECT name FROM schema_migrations")}
    for name, script in MIGRATIONS:
        if name in applied:
            continue
        conn.executescript(script)
        conn.execute("INSERT INTO schema_migrations (name) VALUES (?)", (name,))
    conn.commit()
