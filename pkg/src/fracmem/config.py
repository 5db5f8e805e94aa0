"""Run configuration: flat ``key = value`` files under a ``[run]`` header.

Example::

    [run]
    command = simulate
    alpha = 0.25, 0.5, 0.75, 1
    beta = 1
    pulses = 0.3:0.55:1

List values are comma separated; ranges are ``lo:hi:step``; pulses are
``t_start:t_end:amplitude`` triples.
"""

from __future__ import annotations

import configparser
import dataclasses
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from .analytics import Pulse
from .device import DeviceParams, SwitchingTask
from .errors import ConfigError
from .io import fmt
from .optimizer import OptimizerConfig
from .sweep import SweepSpec

SECTION = "run"
COMMANDS = ("simulate", "amplitude", "energy-scan", "optimize", "sweep")
PRESETS = ("1a", "1b", "2", "3", "3cd", "4", "5")


def _floats(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


def _range(text):
    parts = [float(v) for v in text.split(":")]
    if len(parts) != 3:
        raise ValueError("expected lo:hi:step")
    return tuple(parts)


def _pulses(text):
    out = []
    for item in text.split(","):
        if not item.strip():
            continue
        parts = [float(v) for v in item.split(":")]
        if len(parts) != 3:
            raise ValueError(f"pulse {item.strip()!r} is not t_start:t_end:amplitude")
        out.append(tuple(parts))
    return tuple(out)


def _opt_float(text):
    text = text.strip()
    return None if text.lower() in ("", "none") else float(text)


def _opt_str(text):
    text = text.strip()
    return None if text.lower() in ("", "none") else text


def _bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _show(value):
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        if value and isinstance(value[0], tuple):
            return ", ".join(":".join(_num(v) for v in item) for item in value)
        return ", ".join(_num(v) for v in value)
    if isinstance(value, float):
        return _num(value)
    return str(value)


def _num(v):
    return repr(float(v)) if not float(v).is_integer() else fmt(float(v))


_RANGE_FIELDS = ("widths", "alpha_range", "beta_range")

_PARSERS = {
    "command": _opt_str,
    "A": float,
    "B": float,
    "kappa": float,
    "alpha": _floats,
    "beta": _floats,
    "x0": float,
    "x1": float,
    "t1": float,
    "min_width": float,
    "i1_upper": _opt_float,
    "restarts": int,
    "tol": float,
    "max_iters": int,
    "pulses": _pulses,
    "amplitude_mode": str,
    "t_st": float,
    "t_e": float,
    "oracle_step": float,
    "agreement_tol": float,
    "widths": _range,
    "mode": str,
    "trajectories": _bool,
    "trajectory_points": int,
    "alpha_range": _range,
    "beta_range": _range,
    "seed": int,
    "jobs": int,
    "out": _opt_str,
}


@dataclass(frozen=True)
class RunConfig:
    command: Optional[str] = None
    A: float = 1.0
    B: float = 5.0
    kappa: float = 1.0
    alpha: tuple = (0.5,)
    beta: tuple = (1.0,)
    x0: float = 0.0
    x1: float = 1.0
    t1: float = 1.0
    min_width: float = 1e-6
    i1_upper: Optional[float] = None
    restarts: int = 8
    tol: float = 1e-14
    max_iters: int = 4000
    pulses: tuple = ((0.3, 0.55, 1.0),)
    # "fixed": use pulse amplitudes as given; "required": rescale to reach x1 at t1
    amplitude_mode: str = "fixed"
    t_st: float = 0.3
    t_e: float = 0.55
    oracle_step: float = 1e-4
    agreement_tol: float = 1e-6
    widths: tuple = (0.05, 1.0, 0.05)
    mode: str = "double"
    trajectories: bool = False
    trajectory_points: int = 1001
    alpha_range: tuple = (0.05, 1.0, 0.025)
    beta_range: tuple = (0.1, 3.0, 0.05)
    seed: int = 0
    jobs: int = 1
    out: Optional[str] = None

    def __post_init__(self):
        self.validate()

    # -- validation ------------------------------------------------------------

    def validate(self):
        def need(ok, name, message):
            if not ok:
                raise ConfigError(f"{name}: {message}", field=name)

        if self.command is not None:
            need(self.command in COMMANDS, "command", f"must be one of {', '.join(COMMANDS)}")
        for name in ("A", "B", "kappa"):
            value = getattr(self, name)
            need(value > 0 and math.isfinite(value), name, f"must be a finite positive number, got {value!r}")
        need(len(self.alpha) >= 1, "alpha", "needs at least one value")
        need(len(self.beta) >= 1, "beta", "needs at least one value")
        for a in self.alpha:
            need(0.0 < a <= 1.0, "alpha", f"must satisfy 0 < alpha <= 1, got {a!r}")
        for b in self.beta:
            need(b > 0.0, "beta", f"must be positive, got {b!r}")
        need(self.x0 >= 0.0, "x0", "must be non-negative")
        need(self.x1 >= 0.0, "x1", "must be non-negative")
        need(self.x1 != self.x0, "x1", "must differ from x0")
        need(self.t1 > 0.0, "t1", "must be positive")
        need(0.0 < self.min_width < self.t1 / 2.0, "min_width", f"must lie in (0, t1/2), got {self.min_width!r}")
        need(self.i1_upper is None or self.i1_upper > 0.0, "i1_upper", "must be positive or none")
        need(self.restarts >= 1, "restarts", "must be >= 1")
        need(self.tol > 0.0, "tol", "must be positive")
        need(self.max_iters >= 1, "max_iters", "must be >= 1")
        for t_start, t_end, _ in self.pulses:
            need(0.0 <= t_start < t_end <= self.t1, "pulses", f"pulse {t_start}:{t_end} must satisfy 0 <= start < end <= t1")
        for prev, nxt in zip(self.pulses, self.pulses[1:]):
            need(nxt[0] >= prev[1], "pulses", "pulses must be sorted and non-overlapping")
        need(len(self.pulses) <= 2, "pulses", "at most two pulses are supported")
        need(self.amplitude_mode in ("fixed", "required"), "amplitude_mode", "must be 'fixed' or 'required'")
        need(self.t_st < self.t_e, "t_e", "empty pulse: t_e must exceed t_st")
        need(0.0 <= self.t_st and self.t_e <= self.t1, "t_st", "pulse must lie inside [0, t1]")
        need(0.0 < self.oracle_step <= self.t1 / 10.0, "oracle_step", "must lie in (0, t1/10]")
        need(self.agreement_tol > 0.0, "agreement_tol", "must be positive")
        lo, hi, step = self.widths
        need(0.0 < lo <= hi <= self.t1 and step > 0.0, "widths", "must satisfy 0 < lo <= hi <= t1 and step > 0")
        need(self.mode in ("double", "single", "both"), "mode", "must be 'double', 'single' or 'both'")
        need(self.trajectory_points >= 2, "trajectory_points", "must be >= 2")
        for name in _RANGE_FIELDS[1:]:
            lo, hi, step = getattr(self, name)
            need(step > 0.0 and lo < hi, name, "must satisfy lo < hi and step > 0")
        a_lo, a_hi, _ = self.alpha_range
        need(0.01 <= a_lo and a_hi <= 1.0, "alpha_range", "must lie within [0.01, 1]")
        need(self.beta_range[0] >= 0.05, "beta_range", f"lower end must be >= 0.05, got {self.beta_range[0]!r}")
        need(self.jobs >= 1, "jobs", "must be >= 1")

    # -- conversions -------------------------------------------------------------

    def device(self, alpha=None, beta=None) -> DeviceParams:
        return DeviceParams(
            A=self.A,
            B=self.B,
            kappa=self.kappa,
            alpha=self.alpha[0] if alpha is None else alpha,
            beta=self.beta[0] if beta is None else beta,
        )

    def task(self) -> SwitchingTask:
        return SwitchingTask(self.x0, self.x1, self.t1)

    def optimizer(self) -> OptimizerConfig:
        return OptimizerConfig(
            min_pulse_width=self.min_width,
            i1_upper=self.i1_upper,
            restarts=self.restarts,
            tol=self.tol,
            max_iters=self.max_iters,
        )

    def sweep_spec(self) -> SweepSpec:
        return SweepSpec(
            alpha_range=self.alpha_range,
            beta_range=self.beta_range,
            cfg=self.optimizer(),
            params=self.device(),
            task=self.task(),
            seed=self.seed,
        )

    def pulse_list(self):
        return [Pulse(a, b, i) for a, b, i in self.pulses]

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **{k: v for k, v in changes.items() if v is not None})

    # -- text form -----------------------------------------------------------------

    def to_text(self) -> str:
        lines = [f"[{SECTION}]"]
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            text = ":".join(_num(v) for v in value) if f.name in _RANGE_FIELDS else _show(value)
            lines.append(f"{f.name} = {text}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, source: str = "<config>") -> "RunConfig":
        parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
        parser.optionxform = str
        try:
            parser.read_string(text, source=source)
        except configparser.Error as exc:
            line = getattr(exc, "lineno", None)
            raise ConfigError(f"cannot parse {source}: {exc.message}", line=line) from None
        if parser.sections() != [SECTION]:
            raise ConfigError(f"{source}: expected exactly one [{SECTION}] section, found {parser.sections()}")
        lines = _line_numbers(text)
        values = {}
        for key, raw in parser.items(SECTION):
            if key not in _PARSERS:
                raise ConfigError(f"unknown field {key!r}", field=key, line=lines.get(key))
            try:
                values[key] = _PARSERS[key](raw)
            except ValueError as exc:
                raise ConfigError(f"{key}: cannot parse {raw!r} ({exc})", field=key, line=lines.get(key)) from None
        try:
            return cls(**values)
        except ConfigError as exc:
            exc.line = lines.get(exc.field)
            raise

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        return cls.from_text(text, source=str(path))


def _line_numbers(text):
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if "=" in line and not line.lstrip().startswith(("#", ";", "[")):
            out.setdefault(line.split("=", 1)[0].strip(), lineno)
    return out


def parse_value(name: str, raw: str):
    """Parse a single override given on the command line."""
    try:
        return _PARSERS[name](raw)
    except ValueError as exc:
        raise ConfigError(f"{name}: cannot parse {raw!r} ({exc})", field=name) from None


def preset_text(name: str) -> str:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}", field="preset")
    return resources.files("fracmem").joinpath("presets", f"fig{name}.ini").read_text()


def load_preset(name: str) -> RunConfig:
    return RunConfig.from_text(preset_text(name), source=f"preset fig{name}")
