"""Grünwald-Letnikov weights ψ(γ, m) and a direct log-gamma oracle."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, gammasgn

from .errors import ValidationError

logger = logging.getLogger(__name__)


def validate_gamma(gamma: float) -> float:
    gamma = float(gamma)
    if not 0.0 < gamma <= 2.0:
        raise ValidationError(f"must lie in (0, 2], got {gamma!r}", key="gamma")
    if gamma == 2.0:
        logger.warning("gamma=2 is the wave limit and lies outside the validated diffusion range")
    return gamma


@dataclass(frozen=True)
class PsiTable:
    """Precomputed weights ψ(γ, 0..N); the values array is read-only."""

    gamma: float
    values: np.ndarray

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, m):
        return self.values[m]

    @property
    def n(self) -> int:
        return len(self.values) - 1

    def partial_sums(self) -> np.ndarray:
        return np.cumsum(self.values)


def psi_next(prev: float, gamma: float, m: int) -> float:
    return -prev * (2.0 - gamma - m) / m


def psi_table(gamma: float, n: int) -> PsiTable:
    gamma = validate_gamma(gamma)
    if n < 0:
        raise ValidationError(f"must be nonnegative, got {n}", key="n")
    m = np.arange(1, n + 1, dtype=float)
    # ψ(m) = ψ(m-1)·(m-2+γ)/m, each factor has magnitude ≤ 1 for m ≥ 1.
    factors = (m - 2.0 + gamma) / m
    values = np.empty(n + 1)
    values[0] = 1.0
    values[1:] = np.cumprod(factors)
    values.setflags(write=False)
    return PsiTable(gamma=gamma, values=values)


def _is_pole(x: float) -> bool:
    return x <= 0.0 and x == math.floor(x)


def psi_direct(gamma: float, m: int) -> float:
    """Evaluate (-1)^m Γ(2-γ) / (m! Γ(2-γ-m)) through log-gamma with tracked sign.

    Poles of Γ(2-γ-m) give 0. The γ = 2 pole of Γ(2-γ) is resolved by its
    limit, ψ(2, m) = 1.
    """
    if m < 0:
        raise ValidationError(f"must be nonnegative, got {m}", key="m")
    top = 2.0 - gamma
    bottom = top - m
    if _is_pole(top):
        return 1.0
    if _is_pole(bottom):
        return 0.0
    sign = (-1.0) ** m * gammasgn(top) * gammasgn(bottom)
    log_magnitude = gammaln(top) - gammaln(m + 1.0) - gammaln(bottom)
    return float(sign * math.exp(log_magnitude))
