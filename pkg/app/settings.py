"""Shared configuration constants for fracmem."""
from __future__ import annotations

LOG_LEVEL_ENV = "FRACMEM_LOG_LEVEL"
WORKERS_ENV = "FRACMEM_WORKERS"
OUT_DIR_ENV = "FRACMEM_OUT_DIR"
DB_ENV = "FRACMEM_DB"

DEFAULT_LOG_LEVEL = "WARNING"
DEFAULT_WORKERS = 1
DEFAULT_OUT_DIR = "."

# α·Δt^γ/Δx² above these values triggers a stability warning.
STABILITY_LIMIT_1D = 0.5
STABILITY_LIMIT_2D = 0.25

# Significant digits for every real written to CSV or config text.
CSV_DIGITS = 17
