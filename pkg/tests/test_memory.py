from __future__ import annotations

import numpy as np
import pytest

from app.errors import ContractViolation, ValidationError
from app.memory import (
    AdaptiveArithmetic,
    Full,
    LagSample,
    NodeList,
    PowerLaw,
    Short,
    Smart,
    SummationTerm,
    WeightedNode,
    arithmetic_sample_points,
    footprint,
    make_history,
    powerlaw_insert,
    powerlaw_terms,
    short_window,
    strategy_from_tag,
    trace,
)


def _state(store: NodeList) -> list[tuple[int, int]]:
    return [(node.time_index, node.weight) for node in store]


def _insert_steps(steps, eta: int, store: NodeList | None = None) -> NodeList:
    store = store if store is not None else NodeList()
    for k in steps:
        powerlaw_insert(store, WeightedNode(k), eta)
    return store


def _coverage(samples: list[LagSample], k: int) -> np.ndarray:
    counts = np.zeros(k + 1, dtype=int)
    for lag, multiplier in samples:
        start = lag - (multiplier - 1) // 2
        counts[start : start + multiplier] += 1
    return counts


@pytest.mark.parametrize(
    "length, dt, k, expected",
    [(100, 1, 1500, range(0, 101)), (10, 1, 5, range(0, 6)), (2.5, 0.5, 100, range(0, 6))],
)
def test_short_window_examples(length, dt, k, expected) -> None:
    assert short_window(length, dt, k) == expected


def test_short_window_tolerates_representation_error() -> None:
    assert short_window(0.3, 0.1, 10) == range(0, 4)


def test_arithmetic_samples_a4_k20() -> None:
    samples = arithmetic_sample_points(4, 20)
    assert samples == (
        [LagSample(n, 1) for n in range(5)]
        + [LagSample(m, 3) for m in (6, 9, 12, 15)]
        + [LagSample(n, 1) for n in range(17, 21)]
    )
    assert sum(s.multiplier for s in samples) == 21


def test_arithmetic_samples_history_shorter_than_base() -> None:
    assert arithmetic_sample_points(10, 9) == [LagSample(n, 1) for n in range(10)]


def test_arithmetic_samples_a10_k105() -> None:
    samples = arithmetic_sample_points(10, 105)
    base = [s for s in samples if s.lag <= 10]
    medians = [s for s in samples if s.multiplier == 3]
    trailing = [s for s in samples if s.lag > 100]
    assert base == [LagSample(n, 1) for n in range(11)]
    assert [s.lag for s in medians] == list(range(12, 100, 3))
    assert trailing == [LagSample(n, 1) for n in range(101, 106)]
    assert not any(s.multiplier == 5 for s in samples)
    assert sum(s.multiplier for s in samples) == 106


def test_arithmetic_samples_clamp_interval_edges() -> None:
    # Interval (16, 64] holds 48 lags; width-5 increments leave a clamped 3-lag tail.
    samples = arithmetic_sample_points(4, 200)
    assert LagSample(63, 3) in samples
    assert np.all(_coverage(samples, 200) == 1)


@pytest.mark.parametrize("a", [2, 4, 10])
def test_arithmetic_multipliers_sum_to_history_length(a) -> None:
    for k in range(0, 5001):
        assert sum(s.multiplier for s in arithmetic_sample_points(a, k)) == k + 1, k


@pytest.mark.parametrize("a", [2, 3, 4, 10])
def test_arithmetic_increments_tile_history_once(a) -> None:
    for k in list(range(0, 400)) + list(range(400, 5001, 97)):
        samples = arithmetic_sample_points(a, k)
        assert np.all(_coverage(samples, k) == 1), k
        lags = [s.lag for s in samples]
        assert lags == sorted(lags)


@pytest.mark.parametrize("a", [0, 1, 2.5])
def test_arithmetic_rejects_small_base(a) -> None:
    with pytest.raises(ValidationError, match="a: "):
        arithmetic_sample_points(a, 10)


def test_powerlaw_trace_eta3() -> None:
    store = _insert_steps(range(4), eta=3)
    assert _state(store) == [(0, 2), (2, 1), (3, 1)]
    _insert_steps([4, 5], eta=3, store=store)
    assert _state(store) == [(0, 2), (2, 2), (4, 1), (5, 1)]


def test_powerlaw_trace_eta1_condenses_fully() -> None:
    store = _insert_steps([0, 1], eta=1)
    assert _state(store) == [(0, 2)]
    _insert_steps([2, 3], eta=1, store=store)
    assert _state(store) == [(0, 4)]


def test_powerlaw_releases_dropped_fields() -> None:
    store = NodeList()
    dropped = WeightedNode(1, np.ones(3))
    powerlaw_insert(store, WeightedNode(0, np.zeros(3)), 1)
    powerlaw_insert(store, dropped, 1)
    assert dropped.field is None
    assert 1 not in store


def test_powerlaw_rejects_out_of_order_insert() -> None:
    store = _insert_steps(range(3), eta=3)
    with pytest.raises(ContractViolation):
        powerlaw_insert(store, WeightedNode(1), 3)


def test_powerlaw_rejects_heavy_new_node() -> None:
    with pytest.raises(ContractViolation):
        powerlaw_insert(NodeList(), WeightedNode(0, weight=2), 3)


@pytest.mark.parametrize("eta", [1, 2, 3, 5, 8])
def test_powerlaw_conservation_and_class_bound(eta) -> None:
    store = NodeList()
    for k in range(10_000):
        powerlaw_insert(store, WeightedNode(k), eta)
        state = _state(store)
        assert sum(w for _, w in state) == k + 1
        indices = [i for i, _ in state]
        assert all(a < b for a, b in zip(indices, indices[1:]))
        assert not store.oversized_classes(eta)


def test_powerlaw_terms_examples() -> None:
    store = _insert_steps(range(4), eta=3)
    assert powerlaw_terms(store) == [SummationTerm(0, 2), SummationTerm(2, 1), SummationTerm(3, 1)]
    assert powerlaw_terms(NodeList()) == []
    assert powerlaw_terms(_insert_steps([7], eta=3)) == [SummationTerm(7, 1)]


def test_powerlaw_footprint_is_logarithmic() -> None:
    peak = max(row.nodes for row in trace(PowerLaw(3), 2**14))
    assert peak <= 3 * (14 + 2)


def test_full_and_short_footprints() -> None:
    full = make_history(Full(), (4,), capacity=2)
    for k in range(101):
        full.record(k, np.full(4, k, dtype=float))
    assert footprint(full) == 101
    assert np.array_equal(full.fields([3, 100])[:, 0], [3.0, 100.0])

    short = make_history(Short(50), (4,), dt=1.0)
    for k in range(1001):
        short.record(k, np.full(4, k, dtype=float))
    assert footprint(short) == 51
    assert short.terms(1000)[0] == SummationTerm(950, 1)
    assert np.array_equal(short.fields([950, 1000])[:, 0], [950.0, 1000.0])
    with pytest.raises(ContractViolation):
        short.fields([949])


def test_short_history_is_capped_at_run_length() -> None:
    store = make_history(Short(1e9), (4,), dt=1.0, capacity=11)
    for k in range(11):
        store.record(k, np.full(4, k, dtype=float))
    assert footprint(store) == 11
    assert store.terms(10) == [SummationTerm(i, 1) for i in range(11)]
    assert np.array_equal(store.fields([0, 10])[:, 0], [0.0, 10.0])
    with pytest.raises(ContractViolation, match="capacity"):
        store.record(11, np.zeros(4))

    rows = list(trace(Short(1e9), 5))
    assert [row.nodes for row in rows] == [1, 2, 3, 4, 5]


@pytest.mark.parametrize(
    "build, key",
    [
        (lambda: Short(float("inf")), "L"),
        (lambda: Short(float("nan")), "L"),
        (lambda: Smart(float("inf")), "threshold"),
        (lambda: strategy_from_tag("powerlaw", float("inf")), "eta"),
        (lambda: short_window(1e300, 1e-300, 10), "L"),
    ],
)
def test_non_finite_parameters_are_rejected(build, key) -> None:
    with pytest.raises(ValidationError) as excinfo:
        build()
    assert excinfo.value.key == key


def test_adaptive_history_keeps_everything() -> None:
    store = make_history(AdaptiveArithmetic(4), (2,))
    for k in range(21):
        store.record(k, np.zeros(2))
    assert footprint(store) == 21
    terms = store.terms(20)
    assert terms[0] == SummationTerm(0, 1)
    assert terms[-1] == SummationTerm(20, 1)
    assert SummationTerm(20 - 6, 3) in terms


def test_short_memory_matches_full_when_window_covers_history() -> None:
    full = make_history(Full(), (1,))
    short = make_history(Short(30), (1,), dt=1.0)
    for k in range(25):
        full.record(k, np.zeros(1))
        short.record(k, np.zeros(1))
        assert short.terms(k) == full.terms(k)


def test_history_rejects_skipped_step() -> None:
    store = make_history(Full(), (1,))
    store.record(0, np.zeros(1))
    with pytest.raises(ContractViolation):
        store.record(2, np.zeros(1))
    with pytest.raises(ContractViolation):
        store.terms(1)


def test_trace_rows_conserve_weights() -> None:
    for strategy in (Full(), Short(5), AdaptiveArithmetic(3), PowerLaw(2), Smart(1e-3)):
        for row in trace(strategy, 60):
            if isinstance(strategy, Short):
                assert row.sum_weights == min(row.k, 5) + 1
            else:
                assert row.sum_weights == row.k + 1
            assert sum(w * n for w, n in row.histogram.items()) == row.sum_weights


def test_strategy_from_tag() -> None:
    assert strategy_from_tag("full") == Full()
    assert strategy_from_tag("short", "2.5") == Short(2.5)
    assert strategy_from_tag("Adaptive", 10) == AdaptiveArithmetic(10)
    assert strategy_from_tag("powerlaw", "3") == PowerLaw(3)
    assert strategy_from_tag("smart", 1e-4) == Smart(1e-4)
    with pytest.raises(ValidationError, match="unknown strategy"):
        strategy_from_tag("nested")
    with pytest.raises(ValidationError, match="eta"):
        strategy_from_tag("powerlaw", 2.5)
    with pytest.raises(ValidationError, match="L"):
        strategy_from_tag("short")


def test_strategy_parameter_domains() -> None:
    with pytest.raises(ValidationError):
        Short(0)
    with pytest.raises(ValidationError):
        AdaptiveArithmetic(1)
    with pytest.raises(ValidationError):
        PowerLaw(0)
    with pytest.raises(ValidationError):
        Smart(-1.0)
