"""Explicit FTCS time-marching of the fractional diffusion equation."""
from __future__ import annotations

import hashlib
import logging
import time
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .continuum import smart_memory_term
from .errors import ContractViolation, NonFiniteFieldError, ValidationError
from .lattice import FieldGrid, PointSource, apply_stencil, grid_shape, impose_dirichlet, make_initial
from .memory import Full, MemoryStrategy, Short, Smart, SummationTerm, make_history, window_steps
from .settings import STABILITY_LIMIT_1D, STABILITY_LIMIT_2D
from .weights import PsiTable, psi_table, validate_gamma

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SimConfig:
    gamma: float
    dt: float
    dx: float
    steps: int
    nx: int
    strategy: MemoryStrategy = field(default_factory=Full)
    alpha: float = 1.0
    beta: float = 0.0
    ny: int = 1
    initial: Tuple[PointSource, ...] = ()
    snapshot_every: int = 0
    out_dir: Optional[str] = None

    def __post_init__(self) -> None:
        validate_gamma(self.gamma)
        if not self.dt > 0:
            raise ValidationError(f"must be positive, got {self.dt!r}", key="dt")
        if not self.dx > 0:
            raise ValidationError(f"must be positive, got {self.dx!r}", key="dx")
        if not self.alpha >= 0:
            raise ValidationError(f"must be nonnegative, got {self.alpha!r}", key="alpha")
        if not self.beta >= 0:
            raise ValidationError(f"must be nonnegative, got {self.beta!r}", key="beta")
        if self.steps < 0:
            raise ValidationError(f"must be nonnegative, got {self.steps}", key="steps")
        if self.snapshot_every < 0:
            raise ValidationError(f"must be nonnegative, got {self.snapshot_every}", key="snapshot_every")
        if self.nx < 3:
            raise ValidationError(f"need at least 3 points, got {self.nx}", key="nx")
        if self.ny != 1 and self.ny < 3:
            raise ValidationError(f"must be 1 (1D) or at least 3, got {self.ny}", key="ny")
        if isinstance(self.strategy, Short) and window_steps(self.strategy.length, self.dt) < 1:
            raise ValidationError(
                f"memory length {self.strategy.length} is shorter than one step of {self.dt}", key="L"
            )
        object.__setattr__(self, "initial", tuple((int(j), int(l), float(v)) for j, l, v in self.initial))
        make_initial(self.nx, self.ny, self.dx, self.initial)

    @property
    def dims(self) -> int:
        return 1 if self.ny == 1 else 2

    @property
    def shape(self) -> tuple[int, ...]:
        return grid_shape(self.nx, self.ny)

    def with_strategy(self, strategy: MemoryStrategy) -> "SimConfig":
        return replace(self, strategy=strategy)

    def with_gamma(self, gamma: float) -> "SimConfig":
        return replace(self, gamma=gamma)

    def scaled(self, factor: float) -> "SimConfig":
        return replace(self, initial=tuple((j, l, factor * v) for j, l, v in self.initial))


@dataclass(frozen=True)
class Trajectory:
    snapshots: List[Tuple[int, FieldGrid]]
    final: FieldGrid
    steps: int
    nodes_peak: int = 0
    terms_per_step: float = 0.0
    wall_time_s: float = 0.0


def stability_coefficient(cfg: SimConfig) -> float:
    return cfg.alpha * cfg.dt**cfg.gamma / cfg.dx**2


def check_stability(cfg: SimConfig) -> bool:
    """Warn when α·Δt^γ/Δx² exceeds the explicit-scheme guardrail; True when within it."""
    coefficient = stability_coefficient(cfg)
    limit = STABILITY_LIMIT_1D if cfg.dims == 1 else STABILITY_LIMIT_2D
    if coefficient > limit:
        logger.warning(
            "stability heuristic exceeded: alpha*dt^gamma/dx^2 = %.6g > %.6g (%dD)",
            coefficient,
            limit,
            cfg.dims,
        )
        return False
    return True


def step(
    u_k: np.ndarray,
    terms: Sequence[SummationTerm],
    fields: np.ndarray,
    psi: PsiTable,
    cfg: SimConfig,
    k: int,
) -> np.ndarray:
    """Advance one FTCS step; ``fields[n]`` is the kernel field of ``terms[n]``."""
    if len(psi) <= k:
        raise ContractViolation(f"psi table holds {len(psi)} weights, step {k} needs {k + 1}")
    indices = np.fromiter((t.time_index for t in terms), dtype=np.intp, count=len(terms))
    if indices.size and (indices.max() > k or indices.min() < 0):
        raise ContractViolation(f"summation term outside [0, {k}]")
    multipliers = np.fromiter((t.multiplier for t in terms), dtype=float, count=len(terms))
    coeffs = psi.values[k - indices] * multipliers
    memory_term = np.tensordot(coeffs, fields, axes=1)
    return advance(u_k, memory_term, cfg)


def advance(u_k: np.ndarray, memory_term: np.ndarray, cfg: SimConfig) -> np.ndarray:
    scale = cfg.alpha * cfg.dt ** (cfg.gamma - 1.0) / cfg.dx**2
    u_next = u_k + cfg.dt * (scale * memory_term - cfg.beta * u_k)
    return impose_dirichlet(u_next)


def anchor_current(terms: List[SummationTerm], k: int) -> List[SummationTerm]:
    """Make sure lag 0 enters as its own (k, 1) term.

    A power-law store with η = 1 may fold δ^k into an older node; one unit of
    that node's multiplier is handed back to the exact current term.
    """
    if terms and terms[-1].time_index == k:
        return terms
    if not terms:
        return [SummationTerm(k, 1)]
    tail = terms[-1]
    anchored = terms[:-1]
    if tail.multiplier > 1:
        anchored.append(SummationTerm(tail.time_index, tail.multiplier - 1))
    anchored.append(SummationTerm(k, 1))
    return anchored


def run(cfg: SimConfig) -> Trajectory:
    check_stability(cfg)
    logger.info(
        "run gamma=%s strategy=%s param=%s steps=%d grid=%s",
        cfg.gamma,
        cfg.strategy.tag,
        cfg.strategy.param,
        cfg.steps,
        cfg.shape,
    )
    initial = make_initial(cfg.nx, cfg.ny, cfg.dx, cfg.initial)
    psi = psi_table(cfg.gamma, cfg.steps)
    store = make_history(cfg.strategy, cfg.shape, dt=cfg.dt, capacity=cfg.steps + 1)

    u = np.array(initial.data, dtype=float)
    snapshots: List[Tuple[int, FieldGrid]] = []
    if cfg.snapshot_every:
        snapshots.append((0, initial.frozen_copy()))
    nodes_peak = 0
    term_count = 0

    started = time.perf_counter()
    for k in range(cfg.steps):
        delta = apply_stencil(u)
        store.record(k, delta)
        if isinstance(cfg.strategy, Smart):
            samples = store.fields(range(k, -1, -1))
            memory_term, mesh = smart_memory_term(psi, samples, cfg.strategy.threshold)
            u = advance(u, memory_term, cfg)
            term_count += len(mesh)
        else:
            terms = anchor_current(store.terms(k), k)
            held = [t.time_index for t in terms[:-1]]
            fields = np.concatenate([store.fields(held), delta[np.newaxis]]) if held else delta[np.newaxis]
            u = step(u, terms, fields, psi, cfg, k)
            term_count += len(terms)
        if not np.all(np.isfinite(u)):
            raise NonFiniteFieldError(step=k + 1)
        nodes_peak = max(nodes_peak, store.footprint())
        if cfg.snapshot_every and (k + 1) % cfg.snapshot_every == 0:
            snapshots.append((k + 1, FieldGrid(np.array(u, copy=True), cfg.dx).frozen_copy()))
    wall_time = time.perf_counter() - started

    logger.info("run finished in %.3fs, peak %d stored fields", wall_time, nodes_peak)
    return Trajectory(
        snapshots=snapshots,
        final=FieldGrid(u, cfg.dx).frozen_copy(),
        steps=cfg.steps,
        nodes_peak=nodes_peak,
        terms_per_step=term_count / cfg.steps if cfg.steps else 0.0,
        wall_time_s=wall_time,
    )


def checksum(data: np.ndarray) -> str:
    """SHA-256 of the little-endian float64 C-order bytes of ``data``."""
    canonical = np.ascontiguousarray(data, dtype="<f8")
    return hashlib.sha256(canonical.tobytes()).hexdigest()
