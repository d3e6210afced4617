"""Uniform grids, the centered Laplacian kernel and snapshot CSV I/O."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence, Tuple

import numpy as np

from .errors import ValidationError
from .settings import CSV_DIGITS

PointSource = Tuple[int, int, float]

# δ fields share the grid shape; entries on the boundary ring are zero.
KernelField = np.ndarray

SNAPSHOT_PATTERN = "u_k{step}.csv"


@dataclass(frozen=True)
class FieldGrid:
    """Scalar field on a uniform grid with spacing ``dx`` in every direction.

    ``data`` is indexed ``[j]`` in 1D and ``[j, l]`` in 2D.
    """

    data: np.ndarray
    dx: float

    def __post_init__(self) -> None:
        if self.data.ndim not in (1, 2):
            raise ValidationError("grids must be one or two dimensional", key="dims")
        if min(self.data.shape) < 3:
            raise ValidationError(f"need at least 3 points per axis, got {self.data.shape}", key="nx")
        if not self.dx > 0:
            raise ValidationError(f"must be positive, got {self.dx!r}", key="dx")

    @property
    def dims(self) -> int:
        return self.data.ndim

    @property
    def nx(self) -> int:
        return self.data.shape[0]

    @property
    def ny(self) -> int:
        return self.data.shape[1] if self.data.ndim == 2 else 1

    def frozen_copy(self) -> "FieldGrid":
        data = np.array(self.data, dtype=float, copy=True)
        data.setflags(write=False)
        return FieldGrid(data=data, dx=self.dx)


def grid_shape(nx: int, ny: int) -> tuple[int, ...]:
    return (nx,) if ny == 1 else (nx, ny)


def apply_stencil(u: np.ndarray) -> KernelField:
    """Centered second difference of ``u`` on the interior, zero on the boundary."""
    delta = np.zeros_like(u, dtype=float)
    if u.ndim == 1:
        delta[1:-1] = u[2:] - 2.0 * u[1:-1] + u[:-2]
    else:
        delta[1:-1, 1:-1] = (
            u[2:, 1:-1] + u[:-2, 1:-1] - 4.0 * u[1:-1, 1:-1] + u[1:-1, 2:] + u[1:-1, :-2]
        )
    return delta


def laplacian_kernel(u: FieldGrid) -> KernelField:
    return apply_stencil(u.data)


def impose_dirichlet(u: np.ndarray) -> np.ndarray:
    """Zero the boundary ring of ``u`` in place and return it."""
    u[0] = 0.0
    u[-1] = 0.0
    if u.ndim == 2:
        u[:, 0] = 0.0
        u[:, -1] = 0.0
    return u


def make_initial(
    nx: int,
    ny: int,
    dx: float,
    spec: Iterable[PointSource] = (),
) -> FieldGrid:
    """Zero grid with the listed point values; points must be strictly interior."""
    if nx < 3 or (ny != 1 and ny < 3):
        raise ValidationError(f"grid {nx}x{ny} has no interior points", key="nx")
    data = np.zeros(grid_shape(nx, ny))
    for j, l, value in spec:
        if not 0 < j < nx - 1:
            raise ValidationError(f"point ({j}, {l}) is not strictly interior", key="init")
        if ny == 1:
            if l != 0:
                raise ValidationError(f"1D grids take l=0, got ({j}, {l})", key="init")
            data[j] = value
        else:
            if not 0 < l < ny - 1:
                raise ValidationError(f"point ({j}, {l}) is not strictly interior", key="init")
            data[j, l] = value
    return FieldGrid(data=data, dx=dx)


def format_real(value: float) -> str:
    return f"{value:.{CSV_DIGITS}g}"


def write_grid_csv(path: Path | str, data: np.ndarray) -> Path:
    path = Path(path)
    rows: Sequence[np.ndarray] = [data] if data.ndim == 1 else list(data)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        for row in rows:
            writer.writerow(format_real(float(value)) for value in row)
    return path


def read_grid_csv(path: Path | str) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [[float(cell) for cell in row] for row in csv.reader(fh) if row]
    if len(rows) == 1:
        return np.array(rows[0])
    return np.array(rows)


def snapshot_path(out_dir: Path | str, step: int) -> Path:
    return Path(out_dir) / SNAPSHOT_PATTERN.format(step=step)
