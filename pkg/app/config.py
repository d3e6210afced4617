"""Reading and writing the flat ``key=value`` simulation config format."""
from __future__ import annotations

from pathlib import Path
from typing import Dict, List, Tuple

from .errors import ValidationError
from .lattice import PointSource, format_real
from .marcher import SimConfig
from .memory import STRATEGY_PARAM_KEYS, AdaptiveArithmetic, PowerLaw, strategy_from_tag

REQUIRED_KEYS = ["gamma", "dt", "dx", "nx", "steps", "strategy"]
OPTIONAL_KEYS = ["alpha", "beta", "ny", "snapshot_every", "init", "out_dir"]
PARAM_KEYS = [key for key in STRATEGY_PARAM_KEYS.values() if key]
KNOWN_KEYS = set(REQUIRED_KEYS) | set(OPTIONAL_KEYS) | set(PARAM_KEYS)

INT_KEYS = {"nx", "ny", "steps", "snapshot_every"}
REAL_KEYS = {"gamma", "alpha", "beta", "dt", "dx"}


def _parse_lines(text: str) -> Tuple[Dict[str, str], Dict[str, int]]:
    values: Dict[str, str] = {}
    lines: Dict[str, int] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValidationError(f"expected key=value, got {line!r}", line=number)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ValidationError("unknown key", key=key, line=number)
        if key in values:
            raise ValidationError(f"duplicate key (first set on line {lines[key]})", key=key, line=number)
        values[key] = value
        lines[key] = number
    return values, lines


def _convert(key: str, value: str, line: int | None):
    try:
        if key in INT_KEYS:
            return int(value)
        if key in REAL_KEYS:
            return float(value)
    except ValueError as exc:
        kind = "an integer" if key in INT_KEYS else "a real number"
        raise ValidationError(f"expected {kind}, got {value!r}", key=key, line=line) from exc
    return value


def parse_init(value: str, line: int | None = None) -> Tuple[PointSource, ...]:
    """``j,l,value`` triples separated by semicolons; an empty value means no sources."""
    points: List[PointSource] = []
    for chunk in value.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = [part.strip() for part in chunk.split(",")]
        if len(parts) != 3:
            raise ValidationError(f"expected j,l,value, got {chunk!r}", key="init", line=line)
        try:
            points.append((int(parts[0]), int(parts[1]), float(parts[2])))
        except ValueError as exc:
            raise ValidationError(f"malformed point {chunk!r}", key="init", line=line) from exc
    return tuple(points)


def parse_config(text: str) -> SimConfig:
    values, lines = _parse_lines(text)
    missing = [key for key in REQUIRED_KEYS if key not in values]
    if missing:
        raise ValidationError(f"missing required key(s): {', '.join(missing)}", key=missing[0])

    tag = values["strategy"].strip().lower()
    if tag not in STRATEGY_PARAM_KEYS:
        raise ValidationError(f"unknown strategy {tag!r}", key="strategy", line=lines["strategy"])
    expected = STRATEGY_PARAM_KEYS.get(tag)
    for key in PARAM_KEYS:
        if key in values and key != expected:
            raise ValidationError(f"not used by strategy {tag!r}", key=key, line=lines[key])
    if expected in values:
        try:
            float(values[expected])
        except ValueError as exc:
            raise ValidationError(
                f"expected a number, got {values[expected]!r}", key=expected, line=lines[expected]
            ) from exc

    try:
        strategy = strategy_from_tag(tag, values.get(expected) if expected else None)
        kwargs = {
            key: _convert(key, values[key], lines[key])
            for key in REQUIRED_KEYS + OPTIONAL_KEYS
            if key in values and key not in {"strategy", "init", "out_dir"}
        }
        return SimConfig(
            strategy=strategy,
            initial=parse_init(values.get("init", ""), lines.get("init")),
            out_dir=values.get("out_dir") or None,
            **kwargs,
        )
    except ValidationError as exc:
        if exc.line is None and exc.key is not None:
            line = lines.get(exc.key)
            if exc.key in {"L", "a", "eta", "threshold"} and exc.key not in lines:
                line = lines.get("strategy")
            raise ValidationError(exc.detail, key=exc.key, line=line) from exc
        raise


def format_config(cfg: SimConfig) -> str:
    """Serialize ``cfg`` so that ``parse_config`` returns an equal config."""
    entries = [
        ("gamma", format_real(cfg.gamma)),
        ("alpha", format_real(cfg.alpha)),
        ("beta", format_real(cfg.beta)),
        ("dt", format_real(cfg.dt)),
        ("dx", format_real(cfg.dx)),
        ("nx", str(cfg.nx)),
        ("ny", str(cfg.ny)),
        ("steps", str(cfg.steps)),
        ("strategy", cfg.strategy.tag),
    ]
    key = STRATEGY_PARAM_KEYS[cfg.strategy.tag]
    if key:
        param = cfg.strategy.param
        text = str(param) if isinstance(cfg.strategy, (AdaptiveArithmetic, PowerLaw)) else format_real(param)
        entries.append((key, text))
    entries.append(("snapshot_every", str(cfg.snapshot_every)))
    entries.append(
        ("init", ";".join(f"{j},{l},{format_real(v)}" for j, l, v in cfg.initial))
    )
    if cfg.out_dir:
        entries.append(("out_dir", cfg.out_dir))
    return "".join(f"{key}={value}\n" for key, value in entries)


def load_config(path: Path | str) -> SimConfig:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    return parse_config(path.read_text(encoding="utf-8"))
