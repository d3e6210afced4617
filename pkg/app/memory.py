"""History-memory strategies and the stores that retain past kernel fields.

Each strategy decides which past δ fields enter the backward summation of the
Grünwald-Letnikov memory term, with which integer multiplier, and which fields
must stay in memory for later steps.
"""
from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from collections import Counter
from dataclasses import dataclass
from typing import ClassVar, Dict, Iterator, List, NamedTuple, Optional, Sequence, Union

import numpy as np

from .errors import ContractViolation, ValidationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Full:
    tag: ClassVar[str] = "full"

    @property
    def param(self) -> Optional[float]:
        return None


@dataclass(frozen=True)
class Short:
    length: float
    tag: ClassVar[str] = "short"

    def __post_init__(self) -> None:
        if not self.length > 0 or not math.isfinite(self.length):
            raise ValidationError(f"memory length must be positive and finite, got {self.length!r}", key="L")

    @property
    def param(self) -> float:
        return self.length


@dataclass(frozen=True)
class AdaptiveArithmetic:
    a: int
    tag: ClassVar[str] = "adaptive"

    def __post_init__(self) -> None:
        if int(self.a) != self.a or self.a < 2:
            raise ValidationError(f"base interval must be an integer >= 2, got {self.a!r}", key="a")

    @property
    def param(self) -> int:
        return self.a


@dataclass(frozen=True)
class PowerLaw:
    eta: int
    tag: ClassVar[str] = "powerlaw"

    def __post_init__(self) -> None:
        if int(self.eta) != self.eta or self.eta < 1:
            raise ValidationError(f"reset interval must be an integer >= 1, got {self.eta!r}", key="eta")

    @property
    def param(self) -> int:
        return self.eta


@dataclass(frozen=True)
class Smart:
    """Experimental: memory term from an adaptive continuous-lag mesh."""

    threshold: float
    tag: ClassVar[str] = "smart"

    def __post_init__(self) -> None:
        if not self.threshold >= 0 or not math.isfinite(self.threshold):
            raise ValidationError(f"must be nonnegative and finite, got {self.threshold!r}", key="threshold")

    @property
    def param(self) -> float:
        return self.threshold


MemoryStrategy = Union[Full, Short, AdaptiveArithmetic, PowerLaw, Smart]

STRATEGY_PARAM_KEYS: Dict[str, Optional[str]] = {
    Full.tag: None,
    Short.tag: "L",
    AdaptiveArithmetic.tag: "a",
    PowerLaw.tag: "eta",
    Smart.tag: "threshold",
}

STRATEGY_ORDER = [Full.tag, Short.tag, AdaptiveArithmetic.tag, PowerLaw.tag, Smart.tag]


def strategy_from_tag(tag: str, value: float | int | None = None) -> MemoryStrategy:
    tag = tag.strip().lower()
    if tag not in STRATEGY_PARAM_KEYS:
        raise ValidationError(
            f"unknown strategy {tag!r}; expected one of {', '.join(STRATEGY_ORDER)}",
            key="strategy",
        )
    if tag == Full.tag:
        return Full()
    if value is None:
        raise ValidationError(f"strategy {tag} requires a value", key=STRATEGY_PARAM_KEYS[tag])
    if tag == Short.tag:
        return Short(float(value))
    if tag == AdaptiveArithmetic.tag:
        return AdaptiveArithmetic(_as_int(value, "a"))
    if tag == PowerLaw.tag:
        return PowerLaw(_as_int(value, "eta"))
    return Smart(float(value))


def _as_int(value: float | int, key: str) -> int:
    if not math.isfinite(float(value)) or float(value) != int(float(value)):
        raise ValidationError(f"must be an integer, got {value!r}", key=key)
    return int(float(value))


class SummationTerm(NamedTuple):
    time_index: int
    multiplier: int


class LagSample(NamedTuple):
    lag: int
    multiplier: int


def window_steps(length: float, dt: float) -> int:
    ratio = length / dt
    if not math.isfinite(ratio):
        raise ValidationError(f"L/dt must be finite, got {length!r}/{dt!r}", key="L")
    # Tolerate representation error in L/dt, e.g. 0.3/0.1.
    return int(math.floor(ratio + 1e-9))


def short_window(length: float, dt: float, k: int) -> range:
    """Lags m = 0 .. min(floor(L/dt), k) summed by the short-memory scheme."""
    if not length > 0 or not dt > 0 or k < 0:
        raise ValidationError(f"need L > 0, dt > 0, k >= 0 (got {length}, {dt}, {k})", key="L")
    return range(0, min(window_steps(length, dt), k) + 1)


def arithmetic_sample_points(a: int, k: int) -> List[LagSample]:
    """Lag samples of the arithmetic adaptive scheme, ascending in lag.

    The base interval [0, a] is summed point by point. Interval i >= 2 covers
    lags (a^(i-1), a^i] with increments of width 2i-1 represented by their
    median; the last increment of an interval is clamped to the interval end.
    Increments must end before lag k, and every lag after the last increment
    is summed point by point, so the multipliers always add up to k + 1.
    """
    if int(a) != a or a < 2:
        raise ValidationError(f"base interval must be an integer >= 2, got {a!r}", key="a")
    if k < 0:
        raise ValidationError(f"must be nonnegative, got {k}", key="k")

    covered = min(a, k)
    samples = [LagSample(n, 1) for n in range(covered + 1)]
    i = 2
    lower = a
    exhausted = covered >= k
    while not exhausted:
        upper = lower * a
        width = 2 * i - 1
        start = lower + 1
        while start <= upper:
            end = min(start + width - 1, upper)
            if end > k - 1:
                exhausted = True
                break
            count = end - start + 1
            samples.append(LagSample(start + (count - 1) // 2, count))
            covered = end
            start = end + 1
        lower = upper
        i += 1
    samples.extend(LagSample(n, 1) for n in range(covered + 1, k + 1))
    return samples


class WeightedNode:
    """One retained history entry of the power-law store."""

    __slots__ = ("time_index", "weight", "field", "prev", "next")

    def __init__(self, time_index: int, field: Optional[np.ndarray] = None, weight: int = 1) -> None:
        self.time_index = time_index
        self.weight = weight
        self.field = field
        self.prev: Optional[WeightedNode] = None
        self.next: Optional[WeightedNode] = None

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"WeightedNode({self.time_index}, w={self.weight})"


class NodeList:
    """Doubly linked list of WeightedNode ordered by time index."""

    def __init__(self) -> None:
        self.head: Optional[WeightedNode] = None
        self.tail: Optional[WeightedNode] = None
        self._size = 0
        self._class_sizes: Counter[int] = Counter()
        self._by_index: Dict[int, WeightedNode] = {}

    def __len__(self) -> int:
        return self._size

    def __iter__(self) -> Iterator[WeightedNode]:
        node = self.head
        while node is not None:
            yield node
            node = node.next

    def __contains__(self, time_index: int) -> bool:
        return time_index in self._by_index

    def node(self, time_index: int) -> WeightedNode:
        return self._by_index[time_index]

    def class_size(self, weight: int) -> int:
        return self._class_sizes[weight]

    def oversized_classes(self, eta: int) -> List[int]:
        return sorted(w for w, size in self._class_sizes.items() if size > eta)

    def append(self, node: WeightedNode) -> None:
        node.prev, node.next = self.tail, None
        if self.tail is None:
            self.head = node
        else:
            self.tail.next = node
        self.tail = node
        self._size += 1
        self._class_sizes[node.weight] += 1
        self._by_index[node.time_index] = node

    def unlink(self, node: WeightedNode) -> None:
        if node.prev is None:
            self.head = node.next
        else:
            node.prev.next = node.next
        if node.next is None:
            self.tail = node.prev
        else:
            node.next.prev = node.prev
        self._size -= 1
        self._class_sizes[node.weight] -= 1
        del self._by_index[node.time_index]
        node.prev = node.next = None
        node.field = None

    def reweight(self, node: WeightedNode, weight: int) -> None:
        self._class_sizes[node.weight] -= 1
        node.weight = weight
        self._class_sizes[weight] += 1

    def first_of_weight(self, weight: int, after: Optional[WeightedNode] = None) -> WeightedNode:
        node = self.head if after is None else after.next
        while node is not None and node.weight != weight:
            node = node.next
        if node is None:
            raise ContractViolation(f"no node of weight {weight} in the store")
        return node


def powerlaw_insert(store: NodeList, node: WeightedNode, eta: int) -> NodeList:
    """Append ``node`` and condense until no weight class holds more than ``eta`` nodes.

    Condensing a class doubles the weight of its oldest member and releases the
    second-oldest one.
    """
    if node.weight != 1:
        raise ContractViolation(f"new nodes enter with weight 1, got {node.weight}")
    if store.tail is not None and node.time_index <= store.tail.time_index:
        raise ContractViolation(
            f"time index {node.time_index} inserted after {store.tail.time_index}"
        )
    store.append(node)
    while True:
        oversized = store.oversized_classes(eta)
        if not oversized:
            break
        weight = oversized[0]
        least = store.first_of_weight(weight)
        second = store.first_of_weight(weight, after=least)
        logger.debug(
            "condensing weight %d: keep %d as %d, drop %d",
            weight,
            least.time_index,
            2 * weight,
            second.time_index,
        )
        store.reweight(least, 2 * weight)
        store.unlink(second)
    return store


def powerlaw_terms(store: NodeList) -> List[SummationTerm]:
    return [SummationTerm(node.time_index, node.weight) for node in store]


class HistoryStore(ABC):
    """Retains past kernel fields δ^i and enumerates the summation terms of step k."""

    @abstractmethod
    def record(self, k: int, field: np.ndarray) -> None:
        """Store δ^k; time indices arrive in increasing order."""

    @abstractmethod
    def terms(self, k: int) -> List[SummationTerm]:
        """Summation terms of step k ordered by increasing time index."""

    @abstractmethod
    def fields(self, time_indices: Sequence[int]) -> np.ndarray:
        """Stacked stored fields for the given time indices."""

    @abstractmethod
    def holds(self, time_index: int) -> bool:
        ...

    @abstractmethod
    def footprint(self) -> int:
        """Number of kernel fields currently retained."""


class FullHistory(HistoryStore):
    def __init__(self, shape: Sequence[int], capacity: Optional[int] = None) -> None:
        self._data = np.empty((max(int(capacity or 16), 1), *shape))
        self._count = 0

    def _check_next(self, k: int) -> None:
        if k != self._count:
            raise ContractViolation(f"expected time index {self._count}, got {k}")

    def record(self, k: int, field: np.ndarray) -> None:
        self._check_next(k)
        if k >= len(self._data):
            grown = np.empty((2 * len(self._data), *self._data.shape[1:]))
            grown[: len(self._data)] = self._data
            self._data = grown
        self._data[k] = field
        self._count += 1

    def _check_step(self, k: int) -> None:
        if not 0 <= k < self._count:
            raise ContractViolation(f"step {k} has not been recorded")

    def terms(self, k: int) -> List[SummationTerm]:
        self._check_step(k)
        return [SummationTerm(i, 1) for i in range(k + 1)]

    def fields(self, time_indices: Sequence[int]) -> np.ndarray:
        return self._data[np.asarray(time_indices, dtype=np.intp)]

    def holds(self, time_index: int) -> bool:
        return 0 <= time_index < self._count

    def footprint(self) -> int:
        return self._count


class ShortHistory(HistoryStore):
    """Ring buffer of the last floor(L/dt)+1 fields; older ones are overwritten.

    With a ``capacity`` (the number of fields the run will record) the buffer
    never holds more slots than that, so a window longer than the run costs no
    more than the full history.
    """

    def __init__(self, shape: Sequence[int], window: int, capacity: Optional[int] = None) -> None:
        if window < 1:
            raise ValidationError(f"L/dt must be at least 1, got window {window}", key="L")
        self.window = window
        slots = window if capacity is None else min(window, max(int(capacity), 1) - 1)
        self._data = np.empty((slots + 1, *shape))
        self._count = 0

    def record(self, k: int, field: np.ndarray) -> None:
        if k != self._count:
            raise ContractViolation(f"expected time index {self._count}, got {k}")
        if k >= len(self._data) and len(self._data) <= self.window:
            raise ContractViolation(f"time index {k} exceeds the capacity of {len(self._data)} fields")
        self._data[k % len(self._data)] = field
        self._count += 1

    def terms(self, k: int) -> List[SummationTerm]:
        if not 0 <= k < self._count:
            raise ContractViolation(f"step {k} has not been recorded")
        return [SummationTerm(i, 1) for i in range(max(0, k - self.window), k + 1)]

    def fields(self, time_indices: Sequence[int]) -> np.ndarray:
        indices = np.asarray(time_indices, dtype=np.intp)
        if len(indices) and not all(self.holds(int(i)) for i in (indices.min(), indices.max())):
            raise ContractViolation("requested a field outside the short-memory window")
        return self._data[indices % len(self._data)]

    def holds(self, time_index: int) -> bool:
        return self._count - 1 - self.window <= time_index < self._count and time_index >= 0

    def footprint(self) -> int:
        return min(self._count, self.window + 1)


class AdaptiveHistory(FullHistory):
    """Arithmetic adaptive sampling; the shifting sample grid needs every field."""

    def __init__(self, shape: Sequence[int], a: int, capacity: Optional[int] = None) -> None:
        super().__init__(shape, capacity)
        self.a = a

    def terms(self, k: int) -> List[SummationTerm]:
        self._check_step(k)
        return [
            SummationTerm(k - sample.lag, sample.multiplier)
            for sample in reversed(arithmetic_sample_points(self.a, k))
        ]


class PowerLawHistory(HistoryStore):
    def __init__(self, eta: int) -> None:
        self.eta = eta
        self.nodes = NodeList()
        self.inserted = 0

    def record(self, k: int, field: np.ndarray) -> None:
        powerlaw_insert(self.nodes, WeightedNode(k, field), self.eta)
        self.inserted += 1

    def terms(self, k: int) -> List[SummationTerm]:
        if self.nodes.tail is not None and self.nodes.tail.time_index > k:
            raise ContractViolation(f"store holds time index {self.nodes.tail.time_index} > step {k}")
        return powerlaw_terms(self.nodes)

    def fields(self, time_indices: Sequence[int]) -> np.ndarray:
        return np.stack([self.nodes.node(int(i)).field for i in time_indices])

    def holds(self, time_index: int) -> bool:
        return time_index in self.nodes

    def footprint(self) -> int:
        return len(self.nodes)


def make_history(
    strategy: MemoryStrategy,
    shape: Sequence[int],
    *,
    dt: float = 1.0,
    capacity: Optional[int] = None,
) -> HistoryStore:
    if isinstance(strategy, Short):
        return ShortHistory(shape, window_steps(strategy.length, dt), capacity)
    if isinstance(strategy, AdaptiveArithmetic):
        return AdaptiveHistory(shape, strategy.a, capacity)
    if isinstance(strategy, PowerLaw):
        return PowerLawHistory(strategy.eta)
    return FullHistory(shape, capacity)


def footprint(store: HistoryStore) -> int:
    return store.footprint()


@dataclass(frozen=True)
class TraceRow:
    k: int
    nodes: int
    sum_weights: int
    histogram: Dict[int, int]


def trace(strategy: MemoryStrategy, steps: int, *, dt: float = 1.0) -> Iterator[TraceRow]:
    """Replay the bookkeeping of ``strategy`` for ``steps`` steps without a field."""
    store = make_history(strategy, (1,), dt=dt, capacity=max(steps, 1))
    placeholder = np.zeros(1)
    for k in range(steps):
        store.record(k, placeholder)
        terms = store.terms(k)
        histogram = Counter(term.multiplier for term in terms)
        yield TraceRow(
            k=k,
            nodes=store.footprint(),
            sum_weights=sum(term.multiplier for term in terms),
            histogram=dict(sorted(histogram.items())),
        )
