"""Current-controlled memristor with linear memristance and Caputo dynamics."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

import numpy as np

from .errors import DomainError

__all__ = [
    "DeviceParams",
    "SwitchingTask",
    "memristance",
    "voltage",
    "state_rate",
]


@dataclass(frozen=True)
class DeviceParams:
    """Model constants.

    ``R = A + B*x`` and ``D^alpha x = kappa * sign(I) * |I|**beta``.
    ``kappa`` defaults to 1; published parameter sets never quote it and the
    reference curves are only reproduced with unit rate.
    """

    A: float = 1.0
    B: float = 5.0
    kappa: float = 1.0
    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        for name in ("A", "B", "kappa", "beta"):
            value = getattr(self, name)
            if not (value > 0.0 and math.isfinite(value)):
                raise DomainError(f"{name} must be a finite positive number, got {value!r}")
        if not (0.0 < self.alpha <= 1.0):
            raise DomainError(f"alpha must satisfy 0 < alpha <= 1, got {self.alpha!r}")

    def with_order(self, alpha=None, beta=None) -> "DeviceParams":
        changes = {}
        if alpha is not None:
            changes["alpha"] = float(alpha)
        if beta is not None:
            changes["beta"] = float(beta)
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SwitchingTask:
    """Drive the state from ``x0`` at ``t = 0`` to ``x1`` at ``t = t1``."""

    x0: float = 0.0
    x1: float = 1.0
    t1: float = 1.0

    def __post_init__(self):
        if self.x0 < 0.0 or self.x1 < 0.0:
            raise DomainError(f"states must be non-negative, got x0={self.x0!r}, x1={self.x1!r}")
        if self.x1 == self.x0:
            raise DomainError("target state equals initial state")
        if not self.t1 > 0.0:
            raise DomainError(f"t1 must be positive, got {self.t1!r}")

    @property
    def dx(self) -> float:
        return self.x1 - self.x0

    @property
    def is_unit(self) -> bool:
        """True for the 0 -> 1 switching task."""
        return self.x0 == 0.0 and self.x1 == 1.0


def memristance(p: DeviceParams, x):
    """Resistance ``A + B*x`` for states ``x >= 0``."""
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0.0):
        raise DomainError("state x must be non-negative")
    r = p.A + p.B * xa
    return float(r) if r.ndim == 0 else r


def voltage(p: DeviceParams, x, current):
    """Generalized Ohm's law ``V = R(x) * I``."""
    v = memristance(p, x) * np.asarray(current, dtype=float)
    return float(v) if np.ndim(v) == 0 else v


def state_rate(p: DeviceParams, current):
    """Right-hand side ``kappa * sign(I) * |I|**beta`` of the state equation."""
    i = np.asarray(current, dtype=float)
    r = p.kappa * np.sign(i) * np.abs(i) ** p.beta
    return float(r) if r.ndim == 0 else r
