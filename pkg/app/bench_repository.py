"""Repository for persisting and querying stored bench records."""
from __future__ import annotations

import math
from dataclasses import astuple
from sqlite3 import Connection
from typing import Iterable, List, Optional, Tuple

from . import database
from .bench import BenchRecord


def _real(value) -> float:
    return math.nan if value is None else float(value)


class BenchRepository:
    """Data access layer for the ``bench_records`` table."""

    def __init__(self, conn: Connection) -> None:
        self._conn = conn

    def create_many(self, records: Iterable[BenchRecord]) -> int:
        return database.insert_records(self._conn, (astuple(record) for record in records))

    def list(
        self,
        *,
        strategy: Optional[str] = None,
        gamma: Optional[float] = None,
        limit: int = 100,
        offset: int = 0,
    ) -> Tuple[List[BenchRecord], int]:
        """Return paginated records, newest first, and the total count."""

        where_clauses: List[str] = []
        params: List[object] = []
        if strategy:
            where_clauses.append("strategy = ?")
            params.append(strategy)
        if gamma is not None:
            where_clauses.append("ABS(gamma - ?) < 1e-12")
            params.append(gamma)

        where_sql = ""
        if where_clauses:
            where_sql = " WHERE " + " AND ".join(where_clauses)

        total_row = self._conn.execute(
            f"SELECT COUNT(*) AS count FROM bench_records{where_sql}",
            tuple(params),
        ).fetchone()
        total = int(total_row["count"] if total_row else 0)

        rows = self._conn.execute(
            f"""
            SELECT strategy, param, gamma, steps, wall_time_s, rel_error_pct,
                   nodes_stored, terms_per_step, status
            FROM bench_records{where_sql}
            ORDER BY datetime(created_at) DESC, id DESC
            LIMIT ? OFFSET ?
            """,
            (*params, limit, offset),
        ).fetchall()

        records = [
            BenchRecord(
                strategy=str(row["strategy"]),
                param=row["param"],
                gamma=float(row["gamma"]),
                steps=int(row["steps"]),
                wall_time_s=_real(row["wall_time_s"]),
                rel_error_pct=_real(row["rel_error_pct"]),
                nodes_stored=int(row["nodes_stored"]),
                terms_per_step=_real(row["terms_per_step"]),
                status=str(row["status"]),
            )
            for row in rows
        ]
        return records, total
