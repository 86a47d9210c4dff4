"""Flat ``key=value`` simulator configuration.

Keys are the field names of DramGeometry, TimingParams and EnergyParams plus
``node``, ``refresh_mode`` and ``seed``. Unknown keys are rejected. All
defaults reproduce the DDR3-1333 4Gb setup of the evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .array import DramGeometry
from .energy import REFRESH_MODES, EnergyParams, TimingParams
from .errors import ConfigError, DramError
from .reliability import DEFAULT_BASE_SEED, node as lookup_node


@dataclass(frozen=True)
class SimConfig:
    geometry: DramGeometry = field(default_factory=DramGeometry)
    timing: TimingParams = field(default_factory=TimingParams)
    energy: EnergyParams = field(default_factory=EnergyParams)
    node: str = "22nm"
    refresh_mode: str = "energy_only"
    seed: int = DEFAULT_BASE_SEED

    def __post_init__(self):
        if self.refresh_mode not in REFRESH_MODES:
            raise ConfigError(f"refresh_mode must be one of {REFRESH_MODES}, got {self.refresh_mode!r}")
        try:
            lookup_node(self.node)
        except DramError as exc:
            raise ConfigError(str(exc)) from None

    def items(self) -> list[tuple[str, object]]:
        out: list[tuple[str, object]] = []
        for part in (self.geometry, self.timing, self.energy):
            out.extend((f.name, getattr(part, f.name)) for f in fields(part))
        out.extend([("node", self.node), ("refresh_mode", self.refresh_mode), ("seed", self.seed)])
        return out

    def dumps(self) -> str:
        return "".join(f"{k}={v}\n" for k, v in self.items())


_SECTIONS = {
    "geometry": DramGeometry,
    "timing": TimingParams,
    "energy": EnergyParams,
}
_TOP = {"node": str, "refresh_mode": str, "seed": int}


def _key_types() -> dict[str, tuple[str | None, type]]:
    out: dict[str, tuple[str | None, type]] = {}
    for section, cls in _SECTIONS.items():
        for f in fields(cls):
            out[f.name] = (section, type(getattr(cls(), f.name)))
    for k, t in _TOP.items():
        out[k] = (None, t)
    return out


KEYS = _key_types()


def _convert(key: str, text: str, kind: type, line: int | None):
    try:
        if kind is int:
            base = 0 if text.lower().startswith(("0x", "0b", "0o")) else 10
            return int(text, base)
        if kind is float:
            return float(text)
        return text
    except ValueError:
        raise ConfigError(f"bad value for {key}: {text!r}", line) from None


def with_overrides(config: SimConfig, values: dict[str, object],
                   lines: dict[str, int] | None = None) -> SimConfig:
    """Apply string or typed values by flat key name."""
    lines = lines or {}
    parts: dict[str, dict[str, object]] = {s: {} for s in _SECTIONS}
    top: dict[str, object] = {}
    for key, raw in values.items():
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}", lines.get(key))
        section, kind = KEYS[key]
        value = _convert(key, raw, kind, lines.get(key)) if isinstance(raw, str) else raw
        (parts[section] if section else top)[key] = value
    # cross-field checks (e.g. tRC = tRAS + tRP) run on the combined result
    new = {s: replace(getattr(config, s), **kv) for s, kv in parts.items() if kv}
    return replace(config, **new, **top)


def parse_config(text: str) -> SimConfig:
    values: dict[str, str] = {}
    lines: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        key, sep, value = body.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"expected key=value, got {raw.strip()!r}", lineno)
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        values[key] = value
        lines[key] = lineno
    return with_overrides(SimConfig(), values, lines)


def load_config(path: str | Path | None) -> SimConfig:
    if path is None:
        return SimConfig()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)
