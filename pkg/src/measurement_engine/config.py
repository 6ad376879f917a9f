"""``key=value`` run configuration for the ``demon-cycle`` command.

One key per line, ``#`` starts a comment.  Grids are comma separated lists or
``linspace(start, stop, num)``.  ``t_demon`` and ``z0`` may be lists in
``sweep`` mode, in which case every combination is swept.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, fields

import numpy as np

MODES = ("discrete", "sweep", "simulate", "pdf", "compare")

_LINSPACE = re.compile(r"^linspace\(\s*([^,]+),\s*([^,]+),\s*([^,)]+)\)$")


class ConfigError(ValueError):
    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        where = f"line {lineno}: " if lineno is not None else ""
        super().__init__(where + message)


@dataclass(frozen=True)
class RunConfig:
    mode: str
    omega0: float = 0.1
    t_demon: tuple[float, ...] = (0.001,)
    z0: tuple[float, ...] = ()
    kappa: float | None = None
    kappa_grid: tuple[float, ...] | None = None
    Q_grid: tuple[float, ...] | None = None
    kappa_branch: str = "lower"
    dt_over_tau: float = 0.01
    n_steps: int = 15
    n_traj: int = 1000
    master_seed: int = 42
    output: str = "."
    bins: int = 100
    points: int = 512
    workers: int = 1

    @property
    def duration(self) -> float:
        return self.n_steps * self.dt_over_tau

    def to_text(self) -> str:
        """Canonical text that parses back to an equal config."""
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None or value == ():
                continue
            if isinstance(value, tuple):
                text = ",".join(repr(float(v)) for v in value)
            elif isinstance(value, float):
                text = repr(value)
            else:
                text = str(value)
            lines.append(f"{f.name}={text}")
        return "\n".join(lines) + "\n"


def _float(text: str) -> float:
    value = float(text)
    if math.isnan(value):
        raise ValueError("nan is not allowed")
    return value


def _int(text: str) -> int:
    return int(text)


def _grid(text: str) -> tuple[float, ...]:
    m = _LINSPACE.match(text)
    if m:
        start, stop, num = _float(m.group(1)), _float(m.group(2)), _int(m.group(3).strip())
        if num < 1:
            raise ValueError("linspace needs at least one point")
        return tuple(float(v) for v in np.linspace(start, stop, num))
    items = [t.strip() for t in text.split(",") if t.strip()]
    if not items:
        raise ValueError("empty list")
    return tuple(_float(t) for t in items)


def _check_all(pred, message):
    def check(values):
        values = values if isinstance(values, tuple) else (values,)
        for v in values:
            if not pred(v):
                raise ValueError(f"{message}, got {v}")
    return check


_KEYS = {
    "mode": (str, _check_all(lambda v: v in MODES, f"mode must be one of {', '.join(MODES)}")),
    "omega0": (_float, _check_all(lambda v: v > 0 and math.isfinite(v), "omega0 must be > 0")),
    "t_demon": (_grid, _check_all(lambda v: v >= 0 and math.isfinite(v), "t_demon must be >= 0")),
    "z0": (_grid, _check_all(lambda v: -1.0 < v <= 0.0, "z0 must lie in (-1, 0]")),
    "kappa": (_float, _check_all(lambda v: 0.0 < v < 1.0, "kappa must lie in κ∈(0,1)")),
    "kappa_grid": (_grid, _check_all(lambda v: 0.0 < v < 1.0, "kappa_grid values must lie in κ∈(0,1)")),
    "Q_grid": (_grid, _check_all(lambda v: 0.0 <= v < math.inf, "Q_grid values must be finite and >= 0")),
    "kappa_branch": (str, _check_all(lambda v: v in ("lower", "upper"), "kappa_branch must be lower or upper")),
    "dt_over_tau": (_float, _check_all(lambda v: 0 < v < math.inf, "dt_over_tau must be > 0")),
    "n_steps": (_int, _check_all(lambda v: v >= 0, "n_steps must be >= 0")),
    "n_traj": (_int, _check_all(lambda v: v >= 1, "n_traj must be >= 1")),
    "master_seed": (_int, _check_all(lambda v: 0 <= v < 2**64, "master_seed must be a 64-bit unsigned integer")),
    "output": (str, _check_all(lambda v: bool(v), "output must not be empty")),
    "bins": (_int, _check_all(lambda v: v >= 1, "bins must be >= 1")),
    "points": (_int, _check_all(lambda v: v >= 2, "points must be >= 2")),
    "workers": (_int, _check_all(lambda v: v >= 1, "workers must be >= 1")),
}


def parse_config(text: str) -> RunConfig:
    values: dict = {}
    where: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected key=value, got {raw.strip()!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in values:
            raise ConfigError(f"duplicate key {key!r} (first set on line {where[key]})", lineno)
        convert, check = _KEYS[key]
        try:
            parsed = convert(value)
            check(parsed)
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}", lineno) from None
        values[key] = parsed
        where[key] = lineno

    if "mode" not in values:
        raise ConfigError("missing required key 'mode'")
    _check_mode(values, where)
    return RunConfig(**values)


def _check_mode(values: dict, where: dict):
    mode = values["mode"]
    line = where["mode"]
    if mode == "discrete" and "kappa" not in values:
        raise ConfigError("mode=discrete needs kappa", line)
    if mode == "sweep" and ("kappa_grid" in values) == ("Q_grid" in values):
        raise ConfigError("mode=sweep needs exactly one of kappa_grid or Q_grid", line)
    if mode != "sweep":
        for key in ("t_demon", "z0"):
            if len(values.get(key, ())) > 1:
                raise ConfigError(f"{key} may only be a list in sweep mode", where[key])
    if mode in ("pdf", "compare") and values.get("z0") == (0.0,):
        raise ConfigError("distributions need z0 strictly below 0", where["z0"])


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text)
