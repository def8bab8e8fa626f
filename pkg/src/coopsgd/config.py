"""Flat ``key = value`` experiment configuration.

Lines are ``key = value``; ``#`` starts a comment. Keys are case-insensitive.
Sweep axes (``tau``, ``alpha``, ``v``, ``topology``) and ``seed`` accept comma
lists; ``seed`` also accepts ``range:start:stop``. ``alpha = auto`` picks, per
sweep point, the largest ``alpha_grid`` value satisfying the learning-rate
condition.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Any, Callable, Mapping

from coopsgd import simulator
from coopsgd.objectives import ObjectiveError, parse_diag

__all__ = ["ConfigError", "SweepPoint", "ExperimentConfig", "parse_config", "DEFAULT_ALPHA_GRID", "KEYS"]

DEFAULT_ALPHA_GRID = (1.0, 0.5, 0.2, 0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001)

TOPOLOGIES = ("complete", "ring", "star", "custom")
OBJECTIVES = ("quadratic", "logistic")


class ConfigError(simulator.ConfigError):
    """Config problem; ``line`` is None for defaults and command-line overrides."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        prefix = f"line {line}: " if line is not None else ""
        if key is not None:
            prefix += f"{key}: "
        super().__init__(prefix + message)
        self.key = key
        self.line = line


def _int(s: str) -> int:
    return int(s.strip())


def _float(s: str) -> float:
    return float(s.strip())


def _list(item: Callable[[str], Any]) -> Callable[[str], tuple]:
    def parse(s: str) -> tuple:
        values = tuple(item(x) for x in s.split(",") if x.strip())
        if not values:
            raise ValueError("empty list")
        return values

    return parse


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {s!r}")


def _seeds(s: str) -> tuple[int, ...]:
    s = s.strip()
    if s.startswith("range:"):
        parts = s.split(":")
        if len(parts) != 3:
            raise ValueError("expected range:start:stop")
        seeds = tuple(range(int(parts[1]), int(parts[2])))
        if not seeds:
            raise ValueError("empty seed range")
        return seeds
    return _list(_int)(s)


def _alpha(s: str) -> tuple[float, ...] | str:
    return "auto" if s.strip().lower() == "auto" else _list(_float)(s)


def _choice(options: tuple[str, ...]) -> Callable[[str], str]:
    def parse(s: str) -> str:
        v = s.strip().lower()
        if v not in options:
            raise ValueError(f"expected one of {'|'.join(options)}, got {s.strip()!r}")
        return v

    return parse


def _u1(s: str) -> float | tuple[float, ...]:
    values = _list(_float)(s)
    return values[0] if len(values) == 1 else values


_REQUIRED = object()

# key -> (parser, default)
KEYS: dict[str, tuple[Callable[[str], Any], Any]] = {
    "n": (_int, _REQUIRED),
    "k": (_int, _REQUIRED),
    "tau": (_list(_int), _REQUIRED),
    "alpha": (_alpha, _REQUIRED),
    "v": (_list(_int), (0,)),
    "m": (_int, 1),
    "dim": (_int, 10),
    "u1": (_u1, 1.0),
    "seed": (_seeds, (0,)),
    "topology": (_list(_choice(TOPOLOGIES)), ("complete",)),
    "adjacency": (str.strip, None),
    "objective": (_choice(OBJECTIVES), "quadratic"),
    "sigma2": (_float, 1.0),
    "quad_diag": (str.strip, "linspace:0.1:1"),
    "quad_b": (_list(_float), None),
    "logistic_samples": (_int, 256),
    "logistic_seed": (_int, 0),
    "ridge": (_float, 0.01),
    "alpha_grid": (_list(_float), DEFAULT_ALPHA_GRID),
    "omega_zero": (_bool, False),
    "out": (str.strip, "results"),
}


@dataclass(frozen=True)
class SweepPoint:
    index: int
    topology: str
    tau: int
    v: int
    alpha: float | None  # None means resolve from the grid

    @property
    def name(self) -> str:
        return f"p{self.index:03d}"


@dataclass(frozen=True)
class ExperimentConfig:
    N: int
    K: int
    tau: tuple[int, ...]
    alpha: tuple[float, ...] | str
    v: tuple[int, ...] = (0,)
    m: int = 1
    dim: int = 10
    u1: float | tuple[float, ...] = 1.0
    seeds: tuple[int, ...] = (0,)
    topology: tuple[str, ...] = ("complete",)
    adjacency: str | None = None
    objective: str = "quadratic"
    sigma2: float = 1.0
    quad_diag: tuple[float, ...] = ()
    quad_b: tuple[float, ...] | None = None
    logistic_samples: int = 256
    logistic_seed: int = 0
    ridge: float = 0.01
    alpha_grid: tuple[float, ...] = DEFAULT_ALPHA_GRID
    omega_zero: bool = False
    out: str = "results"

    def points(self) -> list[SweepPoint]:
        alphas: tuple[float | None, ...] = (None,) if self.alpha == "auto" else self.alpha
        combos = itertools.product(self.topology, self.tau, self.v, alphas)
        return [SweepPoint(i, t, tau, v, a) for i, (t, tau, v, a) in enumerate(combos)]


def _read_lines(text: str) -> list[tuple[int, str, str]]:
    entries = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", line=lineno)
        key, value = line.split("=", 1)
        entries.append((lineno, key.strip().lower(), value.strip()))
    return entries


def parse_config(text: str, overrides: Mapping[str, str] | None = None) -> ExperimentConfig:
    """Parse and validate a config document.

    ``overrides`` maps keys to raw string values (as given on the command
    line) and wins over the document.

    Raises
    ------
    ConfigError
        Unknown or duplicate keys, missing required keys, unparsable values
        and invariant violations; the message names the key and line.
    """
    raw: dict[str, tuple[str, int | None]] = {}
    for lineno, key, value in _read_lines(text):
        if key not in KEYS:
            raise ConfigError("unknown key", key=key, line=lineno)
        if key in raw:
            raise ConfigError(f"duplicate key (first set on line {raw[key][1]})", key=key, line=lineno)
        raw[key] = (value, lineno)
    for key, value in (overrides or {}).items():
        key = key.lower()
        if key not in KEYS:
            raise ConfigError("unknown key", key=key)
        raw[key] = (str(value), None)

    values: dict[str, Any] = {}
    lines: dict[str, int | None] = {}
    for key, (parser, default) in KEYS.items():
        if key in raw:
            text_value, lineno = raw[key]
            try:
                values[key] = parser(text_value)
            except ValueError as exc:
                raise ConfigError(f"bad value {text_value!r} ({exc})", key=key, line=lineno) from None
            lines[key] = lineno
        elif default is _REQUIRED:
            raise ConfigError("missing required key", key=key)
        else:
            values[key] = default
            lines[key] = None

    def fail(msg: str, key: str):
        raise ConfigError(msg, key=key, line=lines.get(key))

    N, K = values["n"], values["k"]
    if N < 1:
        fail("must be >= 1", "n")
    if K < 1:
        fail("must be >= 1", "k")
    for tau in values["tau"]:
        if tau < 1:
            fail("must be >= 1", "tau")
        if K % tau:
            fail(f"K mod tau must be 0 (K={K}, tau={tau})", "k")
    if any(v < 0 for v in values["v"]):
        fail("must be >= 0", "v")
    if values["m"] < 1:
        fail("must be >= 1", "m")
    if values["dim"] < 1:
        fail("must be >= 1", "dim")
    if values["alpha"] != "auto" and any(a <= 0 for a in values["alpha"]):
        fail("must be > 0", "alpha")
    if any(a <= 0 for a in values["alpha_grid"]):
        fail("must be > 0", "alpha_grid")
    if values["sigma2"] < 0:
        fail("must be >= 0", "sigma2")
    if isinstance(values["u1"], tuple) and len(values["u1"]) != values["dim"]:
        fail(f"has {len(values['u1'])} entries but dim = {values['dim']}", "u1")
    for topo in values["topology"]:
        for v in values["v"]:
            size = N + v
            if topo == "ring" and size < 3:
                fail(f"ring needs N + v >= 3, got {size}", "topology")
            if topo == "star" and size < 2:
                fail(f"star needs N + v >= 2, got {size}", "topology")
        if topo == "custom" and values["adjacency"] is None:
            fail("custom topology needs an adjacency file", "topology")

    quad_diag: tuple[float, ...] = ()
    if values["objective"] == "quadratic":
        try:
            quad_diag = parse_diag(values["quad_diag"], values["dim"])
        except (ObjectiveError, ValueError) as exc:
            fail(str(exc), "quad_diag")
        if min(quad_diag) <= 0:
            fail("entries must be positive", "quad_diag")
        if values["quad_b"] is not None and len(values["quad_b"]) != values["dim"]:
            fail(f"has {len(values['quad_b'])} entries but dim = {values['dim']}", "quad_b")
    elif values["logistic_samples"] < values["m"]:
        fail("must be >= m", "logistic_samples")

    return ExperimentConfig(
        N=N,
        K=K,
        tau=values["tau"],
        alpha=values["alpha"],
        v=values["v"],
        m=values["m"],
        dim=values["dim"],
        u1=values["u1"],
        seeds=values["seed"],
        topology=values["topology"],
        adjacency=values["adjacency"],
        objective=values["objective"],
        sigma2=values["sigma2"],
        quad_diag=quad_diag,
        quad_b=values["quad_b"],
        logistic_samples=values["logistic_samples"],
        logistic_seed=values["logistic_seed"],
        ridge=values["ridge"],
        alpha_grid=values["alpha_grid"],
        omega_zero=values["omega_zero"],
        out=values["out"],
    )
