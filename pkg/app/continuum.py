"""Continuous-lag extensions Ψ(γ, r) of the weights and the adaptive-mesh memory integral."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.special import gammaln, gammasgn

from .errors import FitError, RejectedFitError, ValidationError
from .weights import PsiTable, validate_gamma

logger = logging.getLogger(__name__)

LagFunction = Callable[[np.ndarray], np.ndarray]


def _check_table(gamma: float, table: PsiTable) -> None:
    if not math.isclose(gamma, table.gamma, rel_tol=0.0, abs_tol=1e-15):
        raise ValidationError(
            f"table was built for gamma={table.gamma}, not {gamma}", key="gamma"
        )


def psi_linear(gamma: float, r, table: PsiTable):
    """Linear interpolation of the table; exact at integer lags."""
    _check_table(gamma, table)
    lags = np.asarray(r, dtype=float)
    if np.any(lags < 0) or np.any(lags > table.n):
        raise ValidationError(f"lag outside [0, {table.n}]", key="r")
    values = np.interp(lags, np.arange(len(table), dtype=float), table.values)
    return float(values) if values.ndim == 0 else values


def psi_gamma_real(gamma: float, r):
    """Real part of (-1)^r Γ(2-γ) / (Γ(r+1) Γ(2-γ-r)) on the principal branch.

    Poles of Γ(2-γ-r) give 0. At γ = 2 the expression is singular except at
    integer r, where its limit is 1; the singular points come back as NaN.
    """
    gamma = validate_gamma(gamma)
    lags = np.asarray(r, dtype=float)
    if np.any(lags < 0):
        raise ValidationError("lag must be nonnegative", key="r")
    top = 2.0 - gamma
    if top == 0.0:
        values = np.where(lags == np.floor(lags), 1.0, np.nan)
    else:
        bottom = top - lags
        pole = (bottom <= 0) & (bottom == np.floor(bottom))
        safe_bottom = np.where(pole, 0.5, bottom)
        magnitude = np.exp(gammaln(top) - gammaln(lags + 1.0) - gammaln(safe_bottom))
        values = np.cos(np.pi * lags) * gammasgn(top) * gammasgn(safe_bottom) * magnitude
        values = np.where(pole, 0.0, values)
    return float(values) if values.ndim == 0 else values


@dataclass(frozen=True)
class RationalFit:
    """Ψ(r) = P(r) / Q(r) with coefficients in increasing order and q0 = 1."""

    gamma: float
    numerator: Tuple[float, ...]
    denominator: Tuple[float, ...]

    @property
    def alpha_order(self) -> int:
        return len(self.numerator) - 1

    @property
    def beta_order(self) -> int:
        return len(self.denominator) - 1

    @property
    def constraint_count(self) -> int:
        return self.alpha_order + self.beta_order

    def __call__(self, r):
        lags = np.asarray(r, dtype=float)
        values = P.polyval(lags, self.numerator) / P.polyval(lags, self.denominator)
        return float(values) if values.ndim == 0 else values

    def residuals(self, table: PsiTable) -> np.ndarray:
        m = np.arange(self.constraint_count + 1, dtype=float)
        return np.abs(self(m) - table.values[: len(m)])


def fit_rational(gamma: float, alpha_order: int, beta_order: int, table: PsiTable) -> RationalFit:
    """Fit P_alpha/Q_beta through ψ(γ, m) for m = 0..alpha+beta with q0 = 1."""
    _check_table(gamma, table)
    if alpha_order < 0 or beta_order <= alpha_order:
        raise ValidationError(
            f"need 0 <= alpha < beta, got alpha={alpha_order}, beta={beta_order}", key="beta"
        )
    constraints = alpha_order + beta_order
    if table.n < constraints:
        raise ValidationError(f"table must reach m={constraints}, has {table.n}", key="n")
    if gamma == 1.0:
        raise FitError(gamma, alpha_order, beta_order, "psi(1, m) vanishes for m >= 1, system is singular")

    m = np.arange(constraints + 1, dtype=float)
    psi = np.asarray(table.values[: constraints + 1])
    # Unknowns p0..p_alpha, q1..q_beta; row m reads P(m) - psi_m (Q(m) - 1) = psi_m.
    system = np.empty((constraints + 1, constraints + 1))
    system[:, : alpha_order + 1] = m[:, None] ** np.arange(alpha_order + 1)
    system[:, alpha_order + 1 :] = -psi[:, None] * m[:, None] ** np.arange(1, beta_order + 1)
    try:
        solution = np.linalg.solve(system, psi)
    except np.linalg.LinAlgError as exc:
        raise FitError(gamma, alpha_order, beta_order, str(exc)) from exc
    if not np.all(np.isfinite(solution)):
        raise FitError(gamma, alpha_order, beta_order, "solution is not finite")

    fit = RationalFit(
        gamma=gamma,
        numerator=tuple(float(p) for p in solution[: alpha_order + 1]),
        denominator=(1.0,) + tuple(float(q) for q in solution[alpha_order + 1 :]),
    )
    roots = P.polyroots(fit.denominator)
    real_roots = roots[np.abs(roots.imag) <= 1e-9 * np.maximum(1.0, np.abs(roots))].real
    inside = real_roots[(real_roots >= 0.0) & (real_roots <= constraints)]
    if inside.size:
        logger.info("rejecting fit gamma=%s (%d,%d): denominator root at %s", gamma, alpha_order, beta_order, inside)
        raise RejectedFitError(
            gamma,
            alpha_order,
            beta_order,
            f"denominator vanishes at r={float(inside[0]):.6g} inside [0, {constraints}]",
            fit=fit,
        )
    return fit


@dataclass(frozen=True)
class MemoryMesh:
    """Strictly increasing lag abscissae pinned at 0 and k."""

    points: np.ndarray
    dt: float = 1.0

    def __post_init__(self) -> None:
        points = np.asarray(self.points, dtype=float)
        if points.ndim != 1 or points.size == 0 or points[0] != 0.0:
            raise ValidationError("mesh must start at lag 0", key="mesh")
        if np.any(np.diff(points) <= 0):
            raise ValidationError("mesh abscissae must be strictly increasing", key="mesh")
        object.__setattr__(self, "points", points)

    @property
    def k(self) -> float:
        return float(self.points[-1])

    @property
    def times(self) -> np.ndarray:
        return self.points * self.dt

    def __len__(self) -> int:
        return len(self.points)


def full_mesh(k: int, dt: float = 1.0) -> MemoryMesh:
    return MemoryMesh(np.arange(k + 1, dtype=float), dt)


def build_mesh(history: LagFunction, k: int, dt: float, threshold: float) -> MemoryMesh:
    """Drop integer lags where the past-history function g is locally flat.

    g'' is estimated by central second differences (max-abs over field
    components). A lag is kept when the cell created by dropping it would
    carry a linear-interpolation curvature h^2 max|g''| / 12 of at least
    ``threshold * max|g| / k``. Lags 0, 1 and k are always kept.

    ``threshold`` is therefore relative: it is measured against the size of
    g and the lag count, not against an absolute |g''|, and the curvature is
    accumulated over the whole candidate cell rather than read at one lag.
    The same ``smart:<threshold>`` value behaves alike for fields of any
    magnitude. Zero keeps every lag.
    """
    if threshold < 0:
        raise ValidationError(f"must be nonnegative, got {threshold}", key="threshold")
    if k <= 2 or threshold == 0:
        return full_mesh(k, dt)
    lags = np.arange(k + 1, dtype=float)
    g = np.asarray(history(lags), dtype=float).reshape(k + 1, -1)
    scale = float(np.max(np.abs(g)))
    if scale == 0.0:
        return MemoryMesh(np.array([0.0, 1.0, float(k)]), dt)

    curvature = np.zeros(k + 1)
    curvature[1:-1] = np.max(np.abs(g[2:] - 2.0 * g[1:-1] + g[:-2]), axis=1)
    tolerance = threshold * scale / k

    retained = [0, 1]
    anchor = 1
    worst = 0.0
    for m in range(2, k):
        worst = max(worst, curvature[m])
        width = m + 1 - anchor
        if width * width * worst / 12.0 >= tolerance:
            retained.append(m)
            anchor = m
            worst = 0.0
    retained.append(k)
    return MemoryMesh(np.array(retained, dtype=float), dt)


def mesh_weights(mesh: MemoryMesh) -> np.ndarray:
    """Quadrature weight of each mesh point.

    A cell [a, b] of width h contributes h g(a) + (h - 1)(g(b) - g(a)) / 2,
    the lattice sum of the linear interpolant over a, ..., b-1, and the oldest
    lag keeps its own unit segment. Unit cells therefore reduce to the
    left-rectangle rule and the full mesh reproduces the discrete sum.
    """
    widths = np.diff(mesh.points)
    weights = np.zeros(len(mesh))
    weights[:-1] += (widths + 1.0) / 2.0
    weights[1:] += (widths - 1.0) / 2.0
    weights[-1] += 1.0
    return weights


def memory_integral(psi_cont: LagFunction, history: LagFunction, mesh: MemoryMesh):
    coeffs = mesh_weights(mesh) * np.asarray(psi_cont(mesh.points), dtype=float)
    values = np.asarray(history(mesh.points), dtype=float)
    return np.tensordot(coeffs, values, axes=1)


def sampled_history(samples: np.ndarray) -> LagFunction:
    """Linear interpolation between stored integer-lag samples (lag 0 first)."""
    samples = np.asarray(samples, dtype=float)
    last = len(samples) - 1

    def history(lags: np.ndarray) -> np.ndarray:
        lags = np.asarray(lags, dtype=float)
        lower = np.clip(np.floor(lags).astype(np.intp), 0, last)
        upper = np.minimum(lower + 1, last)
        frac = (lags - lower).reshape(-1, *([1] * (samples.ndim - 1)))
        return samples[lower] * (1.0 - frac) + samples[upper] * frac

    return history


def smart_memory_term(
    table: PsiTable, samples: np.ndarray, threshold: float
) -> Tuple[np.ndarray, MemoryMesh]:
    """Memory term Σ Ψ δ from kernel fields ordered by lag, on an adaptive mesh."""
    k = len(samples) - 1
    history = sampled_history(samples)

    def psi_cont(lags: np.ndarray) -> np.ndarray:
        return psi_linear(table.gamma, np.asarray(lags, dtype=float), table)

    def past(lags: np.ndarray) -> np.ndarray:
        values = history(lags)
        return np.asarray(psi_cont(lags)).reshape(-1, *([1] * (values.ndim - 1))) * values

    mesh = build_mesh(past, k, 1.0, threshold)
    return memory_integral(psi_cont, history, mesh), mesh
