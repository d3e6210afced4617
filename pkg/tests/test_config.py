from __future__ import annotations

from pathlib import Path

import pytest

from app.config import format_config, load_config, parse_config, parse_init
from app.errors import ValidationError
from app.marcher import SimConfig
from app.memory import AdaptiveArithmetic, Full, PowerLaw, Short, Smart

MINIMAL = """\
gamma=0.9
dt=1
dx=10
nx=20
ny=20
steps=100
strategy=full
"""


def test_minimal_config() -> None:
    cfg = parse_config(MINIMAL)
    assert cfg == SimConfig(gamma=0.9, dt=1.0, dx=10.0, nx=20, ny=20, steps=100, strategy=Full())
    assert cfg.alpha == 1.0 and cfg.beta == 0.0
    assert cfg.initial == ()


def test_comments_blank_lines_and_whitespace() -> None:
    text = "# header\n\n  gamma = 0.5 \n" + MINIMAL.replace("gamma=0.9\n", "") + "init = 10,10,10; 3,4,0.5\n"
    cfg = parse_config(text)
    assert cfg.gamma == 0.5
    assert cfg.initial == ((10, 10, 10.0), (3, 4, 0.5))


def test_out_of_range_gamma_names_key_and_line() -> None:
    with pytest.raises(ValidationError, match="line 1: gamma: ") as excinfo:
        parse_config(MINIMAL.replace("gamma=0.9", "gamma=2.5"))
    assert excinfo.value.key == "gamma"
    assert excinfo.value.line == 1


def test_short_without_length_points_at_strategy_line() -> None:
    with pytest.raises(ValidationError) as excinfo:
        parse_config(MINIMAL.replace("strategy=full", "strategy=short"))
    assert excinfo.value.key == "L"
    assert excinfo.value.line == 7


@pytest.mark.parametrize(
    "extra, key, message",
    [
        ("colour=blue\n", "colour", "unknown key"),
        ("dt=2\n", "dt", "duplicate key"),
        ("eta=3\n", "eta", "not used by strategy"),
        ("missing_equals\n", None, "expected key=value"),
        ("ny=abc\n", "ny", "expected an integer"),
    ],
)
def test_line_diagnostics(extra, key, message) -> None:
    text = MINIMAL.replace("ny=20\n", "") + extra
    with pytest.raises(ValidationError, match=message) as excinfo:
        parse_config(text)
    assert excinfo.value.key == key
    assert excinfo.value.line == 7


def test_missing_required_key() -> None:
    with pytest.raises(ValidationError, match="missing required key"):
        parse_config(MINIMAL.replace("dx=10\n", ""))


def test_unknown_strategy_and_bad_parameter() -> None:
    with pytest.raises(ValidationError, match="unknown strategy"):
        parse_config(MINIMAL.replace("strategy=full", "strategy=nested"))
    with pytest.raises(ValidationError, match="eta: ") as excinfo:
        parse_config(MINIMAL.replace("strategy=full", "strategy=powerlaw\neta=three"))
    assert excinfo.value.line == 8


def test_short_shorter_than_one_step() -> None:
    with pytest.raises(ValidationError, match="L: "):
        parse_config(MINIMAL.replace("strategy=full", "strategy=short\nL=0.5"))


@pytest.mark.parametrize(
    "strategy, key",
    [("short\nL=inf", "L"), ("short\nL=nan", "L"), ("smart\nthreshold=inf", "threshold"), ("adaptive\na=inf", "a")],
)
def test_non_finite_strategy_parameter(strategy, key) -> None:
    with pytest.raises(ValidationError, match=f"{key}: ") as excinfo:
        parse_config(MINIMAL.replace("strategy=full", f"strategy={strategy}"))
    assert excinfo.value.key == key
    assert excinfo.value.line == 8


def test_parse_init_errors() -> None:
    assert parse_init("") == ()
    with pytest.raises(ValidationError, match="expected j,l,value"):
        parse_init("1,2")
    with pytest.raises(ValidationError, match="malformed point"):
        parse_init("1,x,2")


@pytest.mark.parametrize(
    "strategy",
    [Full(), Short(2.5), AdaptiveArithmetic(10), PowerLaw(3), Smart(1e-4)],
    ids=lambda s: s.tag,
)
def test_format_config_round_trip(strategy) -> None:
    cfg = SimConfig(
        gamma=0.1 + 0.2,
        dt=0.1,
        dx=1.0 / 3.0,
        steps=17,
        nx=9,
        ny=11,
        alpha=0.7,
        beta=0.05,
        strategy=strategy,
        initial=((4, 5, 1.0 / 7.0), (2, 2, 3.0)),
        snapshot_every=4,
        out_dir="results",
    )
    assert parse_config(format_config(cfg)) == cfg


def test_load_config(config_file) -> None:
    path = config_file(MINIMAL)
    assert load_config(path).steps == 100
    with pytest.raises(FileNotFoundError):
        load_config(path.with_name("absent.cfg"))


@pytest.mark.parametrize("name", ["point_source.cfg", "five_point_source.cfg"])
def test_shipped_configs_parse(name) -> None:
    cfg = load_config(Path(__file__).resolve().parent.parent / "configs" / name)
    assert cfg.dims == 2
    assert cfg.strategy == Full()
