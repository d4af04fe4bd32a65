"""Flat key=value experiment configs with line-anchored error reporting.

The format is a single ``[experiment]`` section of ``key = value`` lines
with ``#`` comments.  Parsing validates every referenced catalog entry
eagerly and round-trips losslessly through ``serialize_config``.
"""

from __future__ import annotations

import ast
from dataclasses import dataclass, field, replace

from .mappings import parse_mapping
from .semigroup import parse_field
from .spaces import parse_space


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


_ERGODIC_KEYS = {"kind", "space", "map", "start", "N", "schedule", "k_list",
                 "seed", "tol_solver", "tol_verdict", "out"}
_SEMIGROUP_KEYS = {"kind", "space", "field", "start", "T", "h", "schedule",
                   "s_list", "r", "seed", "tol_solver", "tol_verdict", "out"}


@dataclass(frozen=True)
class ExperimentConfig:
    """One validated experiment description with defaults materialized."""

    kind: str                      # "ergodic" | "semigroup"
    space: str
    start: tuple[float, ...]
    map: str | None = None         # ergodic only
    N: int | None = None           # ergodic horizon
    field: str | None = None       # semigroup only
    T: float | None = None         # semigroup horizon
    h: float = 1e-2
    schedule: tuple[float, ...] | str = "geometric"
    k_list: tuple[int, ...] = (1, 8)
    s_list: tuple[float, ...] = (1.0,)
    r: float = 1.0
    seed: int = 0
    tol_solver: float = 1e-7
    tol_verdict: float = 1e-2
    out: str = "traces"


def _parse_tuple(value: str, line: int, key: str) -> tuple[float, ...]:
    try:
        obj = ast.literal_eval(value)
    except (ValueError, SyntaxError) as exc:
        raise ConfigError(f"key {key!r}: malformed point {value!r}", line) from exc
    if isinstance(obj, (int, float)):
        obj = (obj,)
    if not isinstance(obj, tuple) or not all(isinstance(v, (int, float)) for v in obj):
        raise ConfigError(f"key {key!r}: expected a numeric tuple", line)
    return tuple(float(v) for v in obj)


def _parse_number(value: str, line: int, key: str, cast):
    try:
        return cast(value)
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: malformed number {value!r}", line) from exc


def _parse_list(value: str, line: int, key: str, cast) -> tuple:
    items = [v.strip() for v in value.split(",") if v.strip()]
    if not items:
        raise ConfigError(f"key {key!r}: empty list", line)
    try:
        return tuple(cast(v) for v in items)
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: malformed list entry in {value!r}", line) from exc


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a config, filling defaults."""
    entries: dict[str, tuple[str, int]] = {}
    section = None
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section != "experiment":
                raise ConfigError(f"unknown section [{section}]", ln)
            continue
        if "=" not in line:
            raise ConfigError(f"expected key = value, got {line!r}", ln)
        if section != "experiment":
            raise ConfigError("keys must appear under [experiment]", ln)
        key, value = (part.strip() for part in line.split("=", 1))
        if key in entries:
            raise ConfigError(f"duplicate key {key!r}", ln)
        entries[key] = (value, ln)

    if not entries:
        raise ConfigError("empty config")

    def take(key: str) -> tuple[str, int] | None:
        return entries.get(key)

    kind_entry = take("kind")
    if kind_entry is None:
        if "map" in entries:
            kind = "ergodic"
        elif "field" in entries:
            kind = "semigroup"
        else:
            raise ConfigError("config needs kind=, map= or field=")
    else:
        kind = kind_entry[0]
    if kind not in ("ergodic", "semigroup"):
        raise ConfigError(f"unknown kind {kind!r}",
                          kind_entry[1] if kind_entry else None)

    allowed = _ERGODIC_KEYS if kind == "ergodic" else _SEMIGROUP_KEYS
    for key, (_, ln) in entries.items():
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} for kind {kind}", ln)

    def require(key: str) -> tuple[str, int]:
        entry = take(key)
        if entry is None:
            raise ConfigError(f"missing required key {key!r}")
        return entry

    space_str, space_ln = require("space")
    try:
        space = parse_space(space_str)
    except ValueError as exc:
        raise ConfigError(f"key 'space': {exc}", space_ln) from exc

    start_str, start_ln = require("start")
    start = _parse_tuple(start_str, start_ln, "start")
    try:
        space.point(start)
    except ValueError as exc:
        raise ConfigError(f"key 'start': {exc}", start_ln) from exc

    cfg = ExperimentConfig(kind=kind, space=space_str.strip(), start=start)

    if kind == "ergodic":
        map_str, map_ln = require("map")
        try:
            parse_mapping(space, map_str)
        except ValueError as exc:
            raise ConfigError(f"key 'map': {exc}", map_ln) from exc
        n_str, n_ln = require("N")
        N = _parse_number(n_str, n_ln, "N", int)
        if N < 1:
            raise ConfigError("key 'N': horizon must be >= 1", n_ln)
        cfg = replace(cfg, map=map_str.strip(), N=N)
        if take("k_list"):
            val, ln = entries["k_list"]
            ks = _parse_list(val, ln, "k_list", int)
            if any(k < 1 for k in ks):
                raise ConfigError("key 'k_list': shifts must be >= 1", ln)
            cfg = replace(cfg, k_list=ks)
    else:
        field_str, field_ln = require("field")
        try:
            parse_field(space, field_str)
        except ValueError as exc:
            raise ConfigError(f"key 'field': {exc}", field_ln) from exc
        t_str, t_ln = require("T")
        T = _parse_number(t_str, t_ln, "T", float)
        if T <= 0:
            raise ConfigError("key 'T': horizon must be positive", t_ln)
        cfg = replace(cfg, field=field_str.strip(), T=T)
        if take("h"):
            val, ln = entries["h"]
            h = _parse_number(val, ln, "h", float)
            if h <= 0:
                raise ConfigError("key 'h': step must be positive", ln)
            cfg = replace(cfg, h=h)
        if take("s_list"):
            val, ln = entries["s_list"]
            ss = _parse_list(val, ln, "s_list", float)
            if any(s < 0 for s in ss):
                raise ConfigError("key 's_list': shifts must be >= 0", ln)
            cfg = replace(cfg, s_list=ss)
        if take("r"):
            val, ln = entries["r"]
            cfg = replace(cfg, r=_parse_number(val, ln, "r", float))

    if take("schedule"):
        val, ln = entries["schedule"]
        if val.strip() == "geometric":
            cfg = replace(cfg, schedule="geometric")
        else:
            sched = _parse_list(val, ln, "schedule", float)
            if any(a >= b for a, b in zip(sched, sched[1:])):
                raise ConfigError("key 'schedule': must be strictly increasing", ln)
            cfg = replace(cfg, schedule=sched)
    if take("seed"):
        val, ln = entries["seed"]
        cfg = replace(cfg, seed=_parse_number(val, ln, "seed", int))
    if take("tol_solver"):
        val, ln = entries["tol_solver"]
        tol = _parse_number(val, ln, "tol_solver", float)
        if tol <= 0:
            raise ConfigError("key 'tol_solver': must be positive", ln)
        cfg = replace(cfg, tol_solver=tol)
    if take("tol_verdict"):
        val, ln = entries["tol_verdict"]
        tol = _parse_number(val, ln, "tol_verdict", float)
        if tol <= 0:
            raise ConfigError("key 'tol_verdict': must be positive", ln)
        cfg = replace(cfg, tol_verdict=tol)
    if take("out"):
        cfg = replace(cfg, out=entries["out"][0].strip())
    return cfg


def serialize_config(cfg: ExperimentConfig) -> str:
    """Canonical text form; parse(serialize(parse(text))) == parse(text)."""
    lines = ["[experiment]", f"kind = {cfg.kind}", f"space = {cfg.space}"]
    start = "(" + ", ".join(f"{v:g}" for v in cfg.start) + ")"
    lines.append(f"start = {start}")
    if cfg.kind == "ergodic":
        lines.append(f"map = {cfg.map}")
        lines.append(f"N = {cfg.N}")
        lines.append("k_list = " + ",".join(str(k) for k in cfg.k_list))
    else:
        lines.append(f"field = {cfg.field}")
        lines.append(f"T = {cfg.T:g}")
        lines.append(f"h = {cfg.h:g}")
        lines.append("s_list = " + ",".join(f"{s:g}" for s in cfg.s_list))
        lines.append(f"r = {cfg.r:g}")
    if cfg.schedule == "geometric":
        lines.append("schedule = geometric")
    else:
        lines.append("schedule = " + ",".join(f"{v:g}" for v in cfg.schedule))
    lines.append(f"seed = {cfg.seed}")
    lines.append(f"tol_solver = {cfg.tol_solver:g}")
    lines.append(f"tol_verdict = {cfg.tol_verdict:g}")
    lines.append(f"out = {cfg.out}")
    return "\n".join(lines) + "\n"
