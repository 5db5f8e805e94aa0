"""Closed-form trajectories, pulse amplitudes and Joule losses.

Everything here is exact algebra for rectangular current pulses; the
``oracle_*`` helpers at the bottom recompute the same quantities by
product-integration quadrature so the two routes can be compared.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .device import DeviceParams, SwitchingTask, memristance, state_rate
from .errors import DomainError, InfeasibleError
from .fraccalc import SampledSignal, Trajectory, _rl_grid, gamma, oracle_solve

__all__ = [
    "Pulse",
    "PulseTrain",
    "Trajectory",
    "single_pulse_x",
    "train_x",
    "required_amplitude",
    "normalized_trajectory",
    "single_pulse_q",
    "single_pulse_q_end_aligned",
    "two_pulse_x",
    "first_pulse_cap",
    "second_pulse_amplitude",
    "two_pulse_q",
    "two_pulse_q_printed",
    "two_pulse_q_split",
    "closed_form_trajectory",
    "drive_signal",
    "oracle_trajectory",
    "oracle_energy",
]

MAX_PULSES = 2


@dataclass(frozen=True)
class Pulse:
    """Rectangular current pulse ``amplitude`` on ``[t_start, t_end]``."""

    t_start: float
    t_end: float
    amplitude: float

    def __post_init__(self):
        if self.t_start < 0.0:
            raise DomainError(f"pulse start must be >= 0, got {self.t_start!r}")
        if not self.t_end > self.t_start:
            raise DomainError(f"empty pulse: t_end={self.t_end!r} <= t_start={self.t_start!r}")

    @property
    def width(self) -> float:
        return self.t_end - self.t_start


@dataclass(frozen=True)
class PulseTrain:
    """At most two sorted, non-overlapping pulses inside ``[0, horizon]``."""

    pulses: tuple
    horizon: float

    def __post_init__(self):
        pulses = tuple(self.pulses)
        object.__setattr__(self, "pulses", pulses)
        if not self.horizon > 0.0:
            raise DomainError(f"horizon must be positive, got {self.horizon!r}")
        if len(pulses) > MAX_PULSES:
            raise DomainError(f"at most {MAX_PULSES} pulses are supported, got {len(pulses)}")
        for prev, nxt in zip(pulses, pulses[1:]):
            if nxt.t_start < prev.t_end:
                raise DomainError("pulses must be sorted and non-overlapping")
        if pulses and pulses[-1].t_end > self.horizon:
            raise DomainError(f"pulse ends at {pulses[-1].t_end!r}, after the horizon {self.horizon!r}")

    @classmethod
    def double(cls, i1: float, i2: float, t_s: float, t1: float) -> "PulseTrain":
        """Back-to-back pulses ``i1`` on ``[0, t_s]`` and ``i2`` on ``[t_s, t1]``."""
        pulses = []
        if t_s > 0.0:
            pulses.append(Pulse(0.0, t_s, i1))
        if t_s < t1:
            pulses.append(Pulse(t_s, t1, i2))
        return cls(tuple(pulses), t1)

    def breakpoints(self) -> list:
        pts = {0.0, float(self.horizon)}
        for pulse in self.pulses:
            pts.update((pulse.t_start, pulse.t_end))
        return sorted(pts)

    def current(self, t):
        """Current at time ``t``; pulses are closed on the left, open on the right."""
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for pulse in self.pulses:
            out = np.where((t >= pulse.t_start) & (t < pulse.t_end), pulse.amplitude, out)
        return out


def _ramp(p: DeviceParams, amplitude: float, dt):
    """Fractional response ``rate * dt**alpha / gamma(alpha+1)`` to a switched-on current."""
    dt = np.maximum(np.asarray(dt, dtype=float), 0.0)
    return state_rate(p, amplitude) * dt**p.alpha / gamma(p.alpha + 1.0)


def _scalar(v):
    return float(v) if np.ndim(v) == 0 else v


def single_pulse_x(p: DeviceParams, pulse: Pulse, x0: float, t):
    """State under one rectangular pulse, valid for ``0 < alpha <= 1``.

    Before the pulse ``x = x0``; during it the state follows a fractional
    ramp; afterwards the switched-off ramp is subtracted and, for
    ``alpha < 1``, the state relaxes back toward ``x0``.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0):
        raise DomainError("time must be non-negative")
    x = x0 + _ramp(p, pulse.amplitude, t - pulse.t_start) - _ramp(p, pulse.amplitude, t - pulse.t_end)
    return _scalar(x)


def train_x(p: DeviceParams, train: PulseTrain, x0: float, t):
    """State under a pulse train, by superposition of single-pulse responses."""
    t = np.asarray(t, dtype=float)
    x = np.full_like(t, float(x0))
    for pulse in train.pulses:
        x = x + (single_pulse_x(p, pulse, 0.0, t))
    return _scalar(x)


def required_amplitude(p: DeviceParams, task: SwitchingTask, t_st: float, t_e: float) -> float:
    """Amplitude of a pulse on ``[t_st, t_e]`` that lands on ``x1`` at ``t1``."""
    if not t_e > t_st:
        raise DomainError(f"empty pulse: t_st={t_st!r} >= t_e={t_e!r}")
    if t_st < 0.0 or t_e > task.t1:
        raise DomainError("pulse must lie inside [0, t1]")
    if not task.x1 > task.x0:
        raise DomainError("only upward switching (x1 > x0) is supported")
    a = p.alpha
    window = (task.t1 - t_st) ** a - (task.t1 - t_e) ** a
    return (gamma(a + 1.0) * task.dx / (p.kappa * window)) ** (1.0 / p.beta)


def normalized_trajectory(task: SwitchingTask, alpha: float, t_st: float, t_e: float, t):
    """Post-pulse excursion ``x(t) - x0`` of the pulse that meets the task.

    The amplitude has been eliminated, so the result does not depend on
    ``beta``, ``kappa``, ``A`` or ``B``.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < t_e):
        raise DomainError("normalized trajectory is defined for t >= t_e only")
    num = (t - t_st) ** alpha - (t - t_e) ** alpha
    den = (task.t1 - t_st) ** alpha - (task.t1 - t_e) ** alpha
    return _scalar(task.dx * num / den)


def single_pulse_q(p: DeviceParams, pulse: Pulse, x0: float) -> float:
    """Joule losses of one pulse: integral of ``I**2 * R(x)`` over the pulse."""
    width = pulse.width
    i = pulse.amplitude
    growth = state_rate(p, i) * width ** (p.alpha + 1.0) / gamma(p.alpha + 2.0)
    return i * i * ((p.A + p.B * x0) * width + p.B * growth)


def single_pulse_q_end_aligned(p: DeviceParams, task: SwitchingTask, t_st: float) -> float:
    """Joule losses of the pulse on ``[t_st, t1]`` that meets the task.

    Scales as ``(t1 - t_st)**(1 - 2*alpha/beta)``: wider pulses are cheaper
    iff ``alpha > beta/2``, and the loss vanishes with the width iff
    ``alpha < beta/2``.
    """
    if not 0.0 <= t_st < task.t1:
        raise DomainError(f"t_st must lie in [0, t1), got {t_st!r}")
    a, b = p.alpha, p.beta
    scale = (gamma(a + 1.0) * task.dx / p.kappa) ** (2.0 / b)
    resistance = p.A + p.B * task.x0 + p.B * task.dx / (a + 1.0)
    return scale * resistance * (task.t1 - t_st) ** (1.0 - 2.0 * a / b)


def two_pulse_x(p: DeviceParams, i1: float, i2: float, t_s: float, t1: float, x0: float, t):
    """State under ``i1`` on ``[0, t_s]`` followed by ``i2`` on ``[t_s, t1]``."""
    t = np.asarray(t, dtype=float)
    if not 0.0 <= t_s <= t1:
        raise DomainError(f"switching time must lie in [0, t1], got {t_s!r}")
    if np.any(t < 0.0) or np.any(t > t1):
        raise DomainError("time must lie in [0, t1]")
    first = _ramp(p, i1, t) - _ramp(p, i1, t - t_s)
    second = _ramp(p, i2, t - t_s)
    return _scalar(x0 + first + second)


def _residual_budget(p: DeviceParams, task: SwitchingTask, i1, t_s):
    """State still to be supplied by the second pulse, measured at ``t1``."""
    a = p.alpha
    t2 = task.t1 - t_s
    return task.dx + p.kappa * i1**p.beta * (t2**a - task.t1**a) / gamma(1.0 + a)


def first_pulse_cap(p: DeviceParams, task: SwitchingTask, t_s: float) -> float:
    """Largest first-pulse amplitude that does not overshoot ``x1`` by itself."""
    if not 0.0 < t_s < task.t1:
        raise DomainError(f"switching time must lie in (0, t1), got {t_s!r}")
    a = p.alpha
    gap = task.t1**a - (task.t1 - t_s) ** a
    return (gamma(1.0 + a) * task.dx / (p.kappa * gap)) ** (1.0 / p.beta)


def second_pulse_amplitude(p: DeviceParams, task: SwitchingTask, i1: float, t_s: float) -> float:
    """Second-pulse amplitude that closes the task after a first pulse ``i1``.

    Raises :class:`InfeasibleError` if the first pulse alone already carries
    the state past ``x1`` at ``t1``.
    """
    if not 0.0 <= t_s < task.t1:
        raise DomainError(f"switching time must lie in [0, t1), got {t_s!r}")
    if i1 < 0.0:
        raise DomainError("only non-negative currents are supported")
    budget = _residual_budget(p, task, i1, t_s)
    if budget < 0.0:
        if budget < -1e-12 * abs(task.dx):
            raise InfeasibleError(
                f"first pulse i1={i1!r} overshoots the target before t1 (residual {budget:.3g})"
            )
        budget = 0.0
    a = p.alpha
    t2 = task.t1 - t_s
    return (t2 ** (-a) * gamma(1.0 + a) * budget / p.kappa) ** (1.0 / p.beta)


def two_pulse_q_printed(p: DeviceParams, task: SwitchingTask, i1, t_s):
    """Double-pulse Joule losses in the compact form for the 0 -> 1 task.

    Works elementwise on arrays of ``i1`` and ``t_s``; no feasibility check.
    """
    if not task.is_unit:
        raise DomainError("the compact double-pulse loss formula assumes x0 = 0 and x1 = 1")
    a, b, k = p.alpha, p.beta, p.kappa
    A, B, t1 = p.A, p.B, task.t1
    g1 = gamma(1.0 + a)
    g2 = gamma(2.0 + a)
    i1b = i1**b
    t2 = t1 - t_s
    bracket = B * i1b * k * (t1**a - t_s**a) * t_s + t2 * (A * (1.0 + a) + B) * g1
    # rounding can push the base just below zero at the amplitude cap
    tail = np.maximum(i1b * (t2**a - t1**a) + g1 / k, 0.0) ** (2.0 / b)
    first = i1**2 * t_s * (A + B * k * i1b * t_s**a / g2)
    return t2 ** (-2.0 * a / b) / g2 * bracket * tail + first


def two_pulse_q_split(p: DeviceParams, task: SwitchingTask, i1, t_s, i2=None):
    """Double-pulse Joule losses as first-pulse plus second-pulse dissipation.

    General ``x0``, ``x1``; the second pulse sees the superposed trajectory.
    Elementwise on arrays; ``i2`` defaults to the amplitude that meets the task.
    """
    a, b, k = p.alpha, p.beta, p.kappa
    A, B, t1, x0 = p.A, p.B, task.t1, task.x0
    g1 = gamma(1.0 + a)
    g2 = gamma(2.0 + a)
    t2 = t1 - t_s
    if i2 is None:
        budget = np.maximum(_residual_budget(p, task, i1, t_s), 0.0)
        i2 = (t2 ** (-a) * g1 * budget / k) ** (1.0 / b)
    i1b, i2b = i1**b, i2**b
    r0 = A + B * x0
    q1 = i1**2 * t_s * (r0 + B * k * i1b * t_s**a / g2)
    # integral of x - x0 over [t_s, t1] from the superposed ramps
    carry = i1b * (t1 ** (a + 1.0) - t_s ** (a + 1.0) - t2 ** (a + 1.0))
    own = i2b * t2 ** (a + 1.0)
    q2 = i2**2 * (r0 * t2 + B * k * (carry + own) / g2)
    return q1 + q2


def two_pulse_q(p: DeviceParams, task: SwitchingTask, i1: float, t_s: float) -> float:
    """Joule losses of the feasible double pulse with switching time ``t_s``."""
    second_pulse_amplitude(p, task, i1, t_s)  # feasibility
    if t_s == 0.0:
        return single_pulse_q_end_aligned(p, task, 0.0)
    if task.is_unit:
        return float(two_pulse_q_printed(p, task, i1, t_s))
    return float(two_pulse_q_split(p, task, i1, t_s))


def closed_form_trajectory(p: DeviceParams, train: PulseTrain, x0: float, grid) -> Trajectory:
    grid = np.asarray(grid, dtype=float)
    return Trajectory(grid, train_x(p, train, x0, grid) * np.ones_like(grid), source="closed_form")


# -- quadrature route -----------------------------------------------------------


def drive_signal(p: DeviceParams, train: PulseTrain, step: float = 1e-4) -> SampledSignal:
    """Piecewise-constant state-equation right-hand side on a grid over the horizon.

    Uses a uniform grid when every pulse edge falls on it; otherwise the
    edges are inserted as extra nodes.
    """
    horizon = float(train.horizon)
    n = max(int(round(horizon / step)), 1)
    grid = np.linspace(0.0, horizon, n + 1)
    h = horizon / n
    edges = train.breakpoints()
    aligned = all(abs(e / h - round(e / h)) < 1e-9 for e in edges)
    if aligned:
        # snap so the step lookup sees edges exactly on nodes
        for e in edges:
            grid[int(round(e / h))] = e
    else:
        grid = np.union1d(grid, edges)
    values = state_rate(p, train.current(grid))
    values = np.asarray(values, dtype=float) * np.ones_like(grid)
    return SampledSignal(grid, values, kind="step")


def oracle_trajectory(p: DeviceParams, train: PulseTrain, x0: float, step: float = 1e-4) -> Trajectory:
    """State computed by product-integration quadrature of the state equation."""
    traj = oracle_solve(drive_signal(p, train, step), p.alpha, x0)
    traj.meta["step"] = step
    return traj


def oracle_energy(p: DeviceParams, train: PulseTrain, x0: float, step: float = 1e-4) -> float:
    """Joule losses integrated numerically along the quadrature trajectory.

    The time integral of the trajectory over each pulse is taken from the
    order ``alpha + 1`` integral of the drive on the same grid, which is the
    exact integral of the product-integration solution.
    """
    drive = drive_signal(p, train, step)
    cumulative = _rl_grid(drive, p.alpha + 1.0)
    grid = drive.grid
    total = 0.0
    for pulse in train.pulses:
        ia = int(np.searchsorted(grid, pulse.t_start))
        ib = int(np.searchsorted(grid, pulse.t_end))
        r0 = float(memristance(p, x0))
        area = r0 * pulse.width + p.B * (cumulative[ib] - cumulative[ia])
        total += pulse.amplitude**2 * area
    return total

