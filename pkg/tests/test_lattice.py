from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from app.errors import ValidationError
from app.lattice import (
    FieldGrid,
    apply_stencil,
    impose_dirichlet,
    laplacian_kernel,
    make_initial,
    read_grid_csv,
    snapshot_path,
    write_grid_csv,
)


def test_kernel_of_one_dimensional_impulse() -> None:
    delta = apply_stencil(np.array([0.0, 1.0, 0.0]))
    assert list(delta) == [0.0, -2.0, 0.0]


def test_kernel_center_coefficient_in_two_dimensions() -> None:
    grid = make_initial(3, 3, 1.0, [(1, 1, 1.0)])
    delta = laplacian_kernel(grid)
    assert delta[1, 1] == -4.0
    assert np.count_nonzero(delta) == 1


def test_kernel_of_constant_field_vanishes() -> None:
    delta = apply_stencil(np.full((6, 5), 3.5))
    assert np.all(delta == 0.0)


def test_kernel_boundary_is_zero() -> None:
    rng = np.random.default_rng(7)
    delta = apply_stencil(rng.normal(size=(8, 9)))
    assert np.all(delta[0] == 0.0) and np.all(delta[-1] == 0.0)
    assert np.all(delta[:, 0] == 0.0) and np.all(delta[:, -1] == 0.0)


def test_kernel_preserves_reflection_symmetry() -> None:
    rng = np.random.default_rng(11)
    raw = rng.normal(size=(9, 9))
    u = raw + raw[::-1, :]
    u = u + u[:, ::-1]
    u = u + u.T
    delta = laplacian_kernel(FieldGrid(u, 2.0))
    assert np.allclose(delta, delta[::-1, :], rtol=0, atol=1e-12)
    assert np.allclose(delta, delta[:, ::-1], rtol=0, atol=1e-12)
    assert np.allclose(delta, delta.T, rtol=0, atol=1e-12)


@pytest.mark.parametrize("shape", [(12,), (10, 11)])
def test_kernel_sums_to_zero_for_interior_support(shape) -> None:
    rng = np.random.default_rng(3)
    u = np.zeros(shape)
    interior = tuple(slice(2, -2) for _ in shape)
    u[interior] = rng.normal(size=u[interior].shape)
    delta = laplacian_kernel(FieldGrid(u, 1.0))
    assert delta.sum() == pytest.approx(0.0, abs=1e-12)
    assert np.abs(delta).sum() > 0.0


def test_kernel_does_not_modify_input() -> None:
    u = np.arange(10.0)
    apply_stencil(u)
    assert list(u) == list(np.arange(10.0))


def test_make_initial_single_source() -> None:
    grid = make_initial(20, 20, 10.0, [(10, 10, 10.0)])
    assert grid.data.shape == (20, 20)
    assert grid.data[10, 10] == 10.0
    assert grid.data.sum() == 10.0


def test_make_initial_five_point_cross() -> None:
    spec = [(50, 50, 0.1), (51, 50, 0.05), (50, 51, 0.05), (49, 50, 0.05), (50, 49, 0.05)]
    grid = make_initial(100, 100, 5.0, spec)
    assert np.count_nonzero(grid.data) == 5
    assert grid.data[50, 50] == 0.1
    assert grid.data[49, 50] == grid.data[50, 49] == 0.05


def test_make_initial_empty_spec_is_zero() -> None:
    grid = make_initial(7, 1, 1.0)
    assert grid.dims == 1
    assert np.all(grid.data == 0.0)


@pytest.mark.parametrize("point", [(0, 5, 1.0), (5, 9, 1.0), (10, 3, 1.0), (-1, 3, 1.0)])
def test_make_initial_rejects_boundary_points(point) -> None:
    with pytest.raises(ValidationError, match="strictly interior"):
        make_initial(10, 10, 1.0, [point])


def test_make_initial_one_dimensional_requires_l_zero() -> None:
    with pytest.raises(ValidationError, match="l=0"):
        make_initial(10, 1, 1.0, [(3, 2, 1.0)])


def test_field_grid_validation() -> None:
    with pytest.raises(ValidationError, match="at least 3"):
        FieldGrid(np.zeros((2, 5)), 1.0)
    with pytest.raises(ValidationError, match="dx"):
        FieldGrid(np.zeros(5), 0.0)


def test_frozen_copy_is_independent() -> None:
    data = np.zeros(5)
    frozen = FieldGrid(data, 1.0).frozen_copy()
    data[2] = 1.0
    assert frozen.data[2] == 0.0
    with pytest.raises(ValueError):
        frozen.data[2] = 1.0


def test_impose_dirichlet_zeroes_ring() -> None:
    u = impose_dirichlet(np.ones((4, 4)))
    assert u.sum() == 4.0


def test_grid_csv_round_trip_is_exact(tmp_path: Path) -> None:
    data = np.array([[0.0, 1.0 / 3.0, 2.0], [np.pi, -1e-300, 5.5]])
    path = write_grid_csv(tmp_path / "grid.csv", data)
    assert np.array_equal(read_grid_csv(path), data)
    one_d = write_grid_csv(tmp_path / "line.csv", np.array([0.1, 0.2, 0.3]))
    assert np.array_equal(read_grid_csv(one_d), np.array([0.1, 0.2, 0.3]))


def test_snapshot_path_naming(tmp_path: Path) -> None:
    assert snapshot_path(tmp_path, 1500).name == "u_k1500.csv"
