"""Strict JSON process configurations.

A configuration looks like::

    {
      "d": 2,
      "components": [{"family": "isotropic_stable", "alpha": 0.6},
                     {"family": "isotropic_stable", "alpha": 0.6}],
      "k": 2,
      "simulation": {"r": 1.0, "h": 0.0625, "replicates": 200,
                     "voxel_delta": 0.05, "t_kill": 8.0}
    }

Only ``d`` and ``components`` are required. Unknown or duplicate fields are
errors, reported with the line they appear on.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

from .exponent import (
    AdditiveProcess,
    LevyExponent,
    UsageError,
    brownian,
    drift,
    isotropic_stable,
    stable_subordinator,
    zero_exponent,
)

__all__ = ["ConfigError", "ProcessConfig", "load_config", "parse_config"]


class ConfigError(UsageError):
    """Malformed configuration. ``line`` and ``field`` locate the problem."""

    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None):
        self.line, self.field = line, field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


_TOP = {"d", "components", "k", "simulation"}
_SIM = {"r": float, "h": float, "replicates": int, "voxel_delta": float, "t_kill": float}
_FAMILIES = {
    "isotropic_stable": {"alpha"},
    "brownian": set(),
    "stable_subordinator": {"alpha"},
    "drift": {"velocity"},
    "zero": set(),
}


@dataclass
class ProcessConfig:
    process: AdditiveProcess
    raw: dict
    k: Optional[int] = None
    simulation: Optional[dict] = None

    def resolved(self) -> dict:
        out = {"d": self.process.d, "components": [dict(c) for c in self.raw["components"]]}
        if self.k is not None:
            out["k"] = self.k
        return out


class _Locator:
    """Best-effort source lines for fields, for diagnostics only."""

    def __init__(self, text: str):
        self.text = text

    def _component_start(self, i: int) -> int:
        m = re.search(r'"components"\s*:\s*\[', self.text)
        pos = m.end() if m else 0
        for _ in range(i + 1):
            nxt = self.text.find("{", pos)
            if nxt < 0:
                return pos
            pos = nxt + 1
        return pos

    def line_of(self, key: str, component: Optional[int] = None) -> Optional[int]:
        start = 0 if component is None else self._component_start(component)
        m = re.compile(r'"' + re.escape(key) + r'"\s*:').search(self.text, start)
        return self.text.count("\n", 0, m.start()) + 1 if m else None

    def error(self, msg: str, key: str, path: str, component: Optional[int] = None) -> ConfigError:
        return ConfigError(msg, self.line_of(key, component), path)


def _no_duplicates(pairs):
    out = {}
    for k, v in pairs:
        if k in out:
            raise ConfigError(f"duplicate field {k!r}", field=k)
        out[k] = v
    return out


def _number(value: Any, kind: type, path: str, loc: _Locator, key: str):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise loc.error(f"expected a number, got {json.dumps(value)}", key, path)
    if kind is int:
        if isinstance(value, float) and not value.is_integer():
            raise loc.error(f"expected an integer, got {value}", key, path)
        return int(value)
    return float(value)


def _component(c: Any, i: int, d: int, loc: _Locator) -> LevyExponent:
    path = f"components[{i}]"
    if not isinstance(c, dict):
        raise ConfigError("each component must be an object", field=path)
    fam = c.get("family")
    if fam not in _FAMILIES:
        raise loc.error(f"unknown family {fam!r}; expected one of {sorted(_FAMILIES)}",
                        "family", path + ".family", i)
    extra = set(c) - _FAMILIES[fam] - {"family"}
    if extra:
        key = sorted(extra)[0]
        raise loc.error(f"unknown field for family {fam}", key, f"{path}.{key}", i)
    missing = _FAMILIES[fam] - set(c)
    if missing:
        key = sorted(missing)[0]
        raise ConfigError(f"family {fam} needs {key!r}", field=f"{path}.{key}")
    try:
        if fam == "isotropic_stable":
            return isotropic_stable(_number(c["alpha"], float, path + ".alpha", loc, "alpha"), d)
        if fam == "brownian":
            return brownian(d)
        if fam == "stable_subordinator":
            if d != 1:
                raise ConfigError("stable_subordinator needs d = 1", field=path)
            return stable_subordinator(_number(c["alpha"], float, path + ".alpha", loc, "alpha"))
        if fam == "drift":
            v = c["velocity"]
            if not isinstance(v, list) or len(v) != d:
                raise loc.error(f"velocity must be a list of {d} numbers", "velocity",
                                path + ".velocity", i)
            return drift([_number(x, float, path + ".velocity", loc, "velocity") for x in v])
        return zero_exponent(d)
    except ConfigError:
        raise
    except UsageError as exc:
        key = "alpha" if "alpha" in c else "family"
        raise loc.error(str(exc), key, f"{path}.{key}", i) from None


def parse_config(text: str) -> ProcessConfig:
    """Parse and validate a configuration document."""
    loc = _Locator(text)
    try:
        raw = json.loads(text, object_pairs_hook=_no_duplicates)
    except json.JSONDecodeError as exc:
        raise ConfigError(exc.msg, exc.lineno) from None
    except ConfigError as exc:
        raise ConfigError(str(exc).split(": ", 1)[-1], loc.line_of(exc.field), exc.field) from None
    if not isinstance(raw, dict):
        raise ConfigError("top level must be an object", 1)
    extra = set(raw) - _TOP
    if extra:
        key = sorted(extra)[0]
        raise loc.error("unknown field", key, key)
    for key in ("d", "components"):
        if key not in raw:
            raise ConfigError("missing required field", field=key)
    d = _number(raw["d"], int, "d", loc, "d")
    if not 1 <= d:
        raise loc.error("d must be a positive integer", "d", "d")
    comps = raw["components"]
    if not isinstance(comps, list) or not comps:
        raise loc.error("components must be a non-empty list", "components", "components")
    process = AdditiveProcess([_component(c, i, d, loc) for i, c in enumerate(comps)])

    k = None
    if "k" in raw:
        k = _number(raw["k"], int, "k", loc, "k")
        if k < 2:
            raise loc.error("k must be at least 2", "k", "k")

    sim = None
    if "simulation" in raw:
        block = raw["simulation"]
        if not isinstance(block, dict):
            raise loc.error("simulation must be an object", "simulation", "simulation")
        extra = set(block) - set(_SIM)
        if extra:
            key = sorted(extra)[0]
            raise loc.error("unknown field", key, f"simulation.{key}")
        sim = {key: _number(val, _SIM[key], f"simulation.{key}", loc, key)
               for key, val in block.items()}
    return ProcessConfig(process=process, raw=raw, k=k, simulation=sim)


def load_config(path) -> ProcessConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", field=str(path)) from None
    return parse_config(text)
