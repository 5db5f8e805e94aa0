"""Minimum-loss pulse controls and their regime labels.

The double-pulse search runs over ``(log T2, v)`` with ``T2 = t1 - t_s`` and
``v = (I1 / I1_cap(t_s))**beta`` in ``[0, 1]``, so every probe is feasible,
the narrow-second-pulse corner is resolved on a log scale, and small-beta
optima (where ``I1 / I1_cap`` can be 1e-10) are not squeezed against a face.
Each call combines

* a 64 x 64 audit grid in ``(t_s, u)`` with ``u = I1 / I1_cap``,
* Latin-hypercube multi-start Nelder-Mead with box projection,
* bounded 1-D searches on the four faces of the box,

and returns the best point found.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.optimize import minimize, minimize_scalar
from scipy.stats import qmc

from .analytics import (
    required_amplitude,
    second_pulse_amplitude,
    single_pulse_q_end_aligned,
    two_pulse_q_printed,
    two_pulse_q_split,
    two_pulse_x,
)
from .device import DeviceParams, SwitchingTask
from .errors import DomainError
from .fraccalc import gamma

__all__ = [
    "RegimeLabel",
    "OptimizerConfig",
    "OptimizationResult",
    "optimize_single",
    "optimize_double",
    "classify_regime",
    "audit_grid",
]

# relative slack for calling a pulse width "at the floor"
FLOOR_RTOL = 1e-6
# u within this of 0 or 1 counts as an active amplitude bound
U_ATOL = 1e-9
# I1 / I2 below this reads as "no first pulse" when no floor probe is available
EPS_I = 1e-3
# floors used to probe where a pinned optimum heads as the width floor shrinks
PROBE_FACTORS = (1e-6, 1e-7)


class RegimeLabel(str, enum.Enum):
    I = "I"
    II = "II"
    III = "III"
    INTERIOR = "interior"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class OptimizerConfig:
    min_pulse_width: float = 1e-6
    i1_upper: Optional[float] = None
    restarts: int = 8
    tol: float = 1e-14
    max_iters: int = 4000
    audit_size: int = 64

    def __post_init__(self):
        if not self.min_pulse_width > 0.0:
            raise DomainError(f"min_pulse_width must be positive, got {self.min_pulse_width!r}")
        if self.i1_upper is not None and not self.i1_upper > 0.0:
            raise DomainError(f"i1_upper must be positive, got {self.i1_upper!r}")
        if self.restarts < 1:
            raise DomainError("restarts must be >= 1")
        if not self.tol > 0.0:
            raise DomainError("tol must be positive")
        if self.max_iters < 1:
            raise DomainError("max_iters must be >= 1")

    def check_horizon(self, t1: float):
        if not self.min_pulse_width < t1 / 2.0:
            raise DomainError(
                f"min_pulse_width={self.min_pulse_width!r} must be below t1/2={t1 / 2.0!r}"
            )


@dataclass
class OptimizationResult:
    """Optimal control ``i1`` on ``[0, t_s]`` then ``i2`` on ``[t_s, t1]``.

    A single-pulse optimum is stored with ``i1 = 0`` and ``t_s`` equal to the
    pulse start.
    """

    i1: float
    i2: float
    t_s: float
    q: float
    t1: float
    active_constraints: frozenset = frozenset()
    regime: RegimeLabel = RegimeLabel.INTERIOR
    converged: bool = True
    kind: str = "double"
    audit_q: float = math.nan
    nfev: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def widths(self):
        return self.t_s, self.t1 - self.t_s


def _at_floor(width: float, floor: float) -> bool:
    return width <= floor * (1.0 + FLOOR_RTOL)


def classify_regime(res: OptimizationResult, cfg: OptimizerConfig) -> RegimeLabel:
    """Label a double-pulse optimum by the shape of its pulses.

    I    the switching tends to a single pulse of minimal width
    II   first pulse longer than the second
    III  first pulse shorter than the second

    A second pulse pinned at the width floor is regime I when the first
    pulse's share of the switching shrinks as the floor is lowered (the
    ``floor_probe`` entry that :func:`optimize_double` records), and regime
    II when it grows. Without a probe the ratio ``I1 / I2 < EPS_I`` decides.
    A first pulse pinned at the floor with an idle second pulse is the
    mirror image of regime I (an exact tie at ``alpha = 1``) and is labelled I.
    """
    w = cfg.min_pulse_width
    t1_width, t2_width = res.widths
    if _at_floor(t2_width, w):
        probe = res.extra.get("floor_probe")
        if probe is None:
            tends_to_single = res.i1 < EPS_I * res.i2
        else:
            share, share_lower = probe
            tends_to_single = share <= 1e-12 or share_lower < share * (1.0 - 1e-6)
        return RegimeLabel.I if tends_to_single else RegimeLabel.II
    if _at_floor(t1_width, w) and res.i2 <= U_ATOL * res.i1:
        return RegimeLabel.I
    if _at_floor(t1_width, w) or t1_width < t2_width:
        return RegimeLabel.III
    if t1_width > t2_width:
        return RegimeLabel.II
    return RegimeLabel.INTERIOR


def optimize_single(p: DeviceParams, task: SwitchingTask, cfg: OptimizerConfig) -> OptimizationResult:
    """Best end-aligned single pulse.

    The loss scales as ``T**(1 - 2*alpha/beta)`` in the width ``T``, so the
    optimum is the full horizon when ``alpha >= beta/2`` and the narrowest
    allowed pulse otherwise.
    """
    cfg.check_horizon(task.t1)
    wide = p.alpha >= p.beta / 2.0
    t_st = 0.0 if wide else task.t1 - cfg.min_pulse_width
    amp = required_amplitude(p, task, t_st, task.t1)
    q = single_pulse_q_end_aligned(p, task, t_st)
    active = frozenset() if wide else frozenset({"T2_at_min", "I1_at_zero"})
    return OptimizationResult(
        i1=0.0,
        i2=amp,
        t_s=t_st,
        q=q,
        t1=task.t1,
        active_constraints=active,
        regime=RegimeLabel.INTERIOR if wide else RegimeLabel.I,
        converged=True,
        kind="single",
    )


class _Problem:
    """Vectorised double-pulse loss on the feasible box."""

    def __init__(self, p: DeviceParams, task: SwitchingTask, cfg: OptimizerConfig):
        self.p, self.task, self.cfg = p, task, cfg
        self.t1 = task.t1
        self.w = cfg.min_pulse_width
        self.ylo = math.log(self.w)
        self.yhi = math.log(self.t1 - self.w)
        self._g1 = gamma(1.0 + p.alpha)
        self.nfev = 0

    def cap(self, t_s):
        a, b = self.p.alpha, self.p.beta
        gap = self.t1**a - (self.t1 - t_s) ** a
        cap = (self._g1 * self.task.dx / (self.p.kappa * gap)) ** (1.0 / b)
        if self.cfg.i1_upper is not None:
            cap = np.minimum(cap, self.cfg.i1_upper)
        return cap

    def q_ts(self, t_s, u):
        t_s = np.asarray(t_s, dtype=float)
        u = np.asarray(u, dtype=float)
        self.nfev += max(t_s.size, u.size)
        i1 = u * self.cap(t_s)
        if self.task.is_unit:
            return two_pulse_q_printed(self.p, self.task, i1, t_s)
        return two_pulse_q_split(self.p, self.task, i1, t_s)

    def ts_of(self, y):
        return self.t1 - np.exp(y)

    def u_of(self, v):
        # v = (I1 / cap)**beta is the share of the state budget carried by the
        # first pulse; at small beta the optimum sits at minute I1/cap ratios
        return np.asarray(v, dtype=float) ** (1.0 / self.p.beta)

    def v_of(self, u):
        return np.asarray(u, dtype=float) ** self.p.beta

    def q_chart(self, z):
        y = min(max(z[0], self.ylo), self.yhi)
        v = min(max(z[1], 0.0), 1.0)
        return float(self.q_ts(self.ts_of(y), self.u_of(v)))


def audit_grid(p: DeviceParams, task: SwitchingTask, cfg: OptimizerConfig, size=None):
    """Loss on a uniform ``size x size`` grid over ``t_s`` and ``u``.

    Returns ``(t_s_values, u_values, Q)`` with ``Q[i, j]`` at
    ``(t_s_values[i], u_values[j])``.
    """
    size = size or cfg.audit_size
    prob = _Problem(p, task, cfg)
    ts = np.linspace(prob.w, prob.t1 - prob.w, size)
    us = np.linspace(0.0, 1.0, size)
    q = prob.q_ts(ts[:, None], us[None, :])
    return ts, us, q


def _face_search(fun, lo, hi, n=129):
    """Global-ish 1-D minimum: grid scan then bounded Brent around the best node."""
    xs = np.linspace(lo, hi, n)
    vals = np.array([fun(x) for x in xs])
    k = int(np.argmin(vals))
    a, b = xs[max(k - 1, 0)], xs[min(k + 1, n - 1)]
    res = minimize_scalar(fun, bounds=(a, b), method="bounded", options={"xatol": 1e-13 * max(1.0, abs(b))})
    if res.fun <= vals[k]:
        return float(res.x), float(res.fun)
    return float(xs[k]), float(vals[k])


def _pick(cands):
    """Lowest loss; near-ties go to the lower t_s, then the lower i1."""
    best = min(c[0] for c in cands)
    slack = 1e-14 * max(abs(best), 1e-300)
    close = [c for c in cands if c[0] <= best + slack]
    return min(close, key=lambda c: (c[1], c[2]))


def _pinned_share(p, task, cfg, floor):
    """Optimal first-pulse share ``v`` with the second pulse held at width ``floor``."""
    prob = _Problem(p, task, replace(cfg, min_pulse_width=floor))
    v, _ = _face_search(lambda v: prob.q_chart((prob.ylo, v)), 0.0, 1.0)
    return v


def optimize_double(
    p: DeviceParams, task: SwitchingTask, cfg: OptimizerConfig, seed: int = 0
) -> OptimizationResult:
    """Minimise the double-pulse loss over ``t_s`` and ``I1``.

    ``t_s`` ranges over ``[w, t1 - w]`` for the minimal width ``w`` and
    ``I1`` over ``[0, I1_cap(t_s)]``; ``I2`` is eliminated by the terminal
    condition. The result never exceeds the audit-grid minimum.
    """
    cfg.check_horizon(task.t1)
    if not task.x1 > task.x0:
        raise DomainError("only upward switching (x1 > x0) is supported")
    prob = _Problem(p, task, cfg)
    w, t1 = prob.w, prob.t1
    ylo, yhi = prob.ylo, prob.yhi

    # (q, t_s, i1, u, converged) candidates
    cands = []

    def add(y, v, q, ok):
        y = min(max(y, ylo), yhi)
        u = float(prob.u_of(min(max(v, 0.0), 1.0)))
        ts = max(float(prob.ts_of(y)), w)
        cands.append((float(q), ts, u * float(prob.cap(ts)), u, bool(ok)))

    ts_a, us_a, q_a = audit_grid(p, task, cfg)
    prob.nfev += q_a.size
    audit_q = float(np.nanmin(q_a))
    seeds = []

    def best_per_half(ts_nodes, u_nodes, q_nodes):
        late = ts_nodes >= t1 / 2.0
        for mask in (late, ~late):
            if mask.any():
                sub = np.where(mask[:, None], q_nodes, np.inf)
                i, j = np.unravel_index(np.nanargmin(sub), sub.shape)
                seeds.append((math.log(t1 - ts_nodes[i]), float(prob.v_of(u_nodes[j]))))

    # The audit grid is uniform in t_s, the chart grid resolves t_s -> t1;
    # together they seed both basins (late switch vs. early switch).
    best_per_half(ts_a, us_a, q_a)
    ys = np.linspace(ylo, yhi, 48)
    uc = prob.u_of(np.linspace(0.0, 1.0, 17))
    ts_c = prob.ts_of(ys)
    best_per_half(ts_c, uc, prob.q_ts(ts_c[:, None], uc[None, :]))

    sampler = qmc.LatinHypercube(d=2, seed=np.random.default_rng(seed))
    for y, u in qmc.scale(sampler.random(cfg.restarts), [ylo, 0.0], [yhi, 1.0]):
        seeds.append((y, u))

    span = np.array([yhi - ylo, 1.0])
    any_ok = False
    for y0, u0 in seeds:
        z0 = np.array([y0, u0])
        simplex = np.array([z0, z0 + [0.05 * span[0], 0.0], z0 + [0.0, 0.05]])
        simplex[:, 0] = np.clip(simplex[:, 0], ylo, yhi)
        simplex[:, 1] = np.clip(simplex[:, 1], 0.0, 1.0)
        # degenerate simplex at a corner: step inward instead
        if simplex[1, 0] == z0[0]:
            simplex[1, 0] = z0[0] - 0.05 * span[0]
        if simplex[2, 1] == z0[1]:
            simplex[2, 1] = z0[1] - 0.05
        res = minimize(
            prob.q_chart,
            z0,
            method="Nelder-Mead",
            options={
                "initial_simplex": simplex,
                "xatol": 1e-11,
                "fatol": cfg.tol,
                "maxiter": cfg.max_iters,
                "maxfev": 2 * cfg.max_iters,
            },
        )
        any_ok |= bool(res.success)
        add(res.x[0], res.x[1], res.fun, res.success)

    # faces of the box
    v_hi, q_hi = _face_search(lambda v: prob.q_chart((ylo, v)), 0.0, 1.0)
    add(ylo, v_hi, q_hi, True)
    v_lo, q_lo = _face_search(lambda v: prob.q_chart((yhi, v)), 0.0, 1.0)
    add(yhi, v_lo, q_lo, True)
    y0_, q0_ = _face_search(lambda y: prob.q_chart((y, 0.0)), ylo, yhi)
    add(y0_, 0.0, q0_, True)
    y1_, q1_ = _face_search(lambda y: prob.q_chart((y, 1.0)), ylo, yhi)
    add(y1_, 1.0, q1_, True)

    # restart the simplex once from the incumbent
    _, ts_best, _, u_best, _ = _pick(cands)
    z0 = np.array([math.log(t1 - ts_best), float(prob.v_of(u_best))])
    res = minimize(
        prob.q_chart,
        z0,
        method="Nelder-Mead",
        options={"xatol": 1e-12, "fatol": cfg.tol, "maxiter": cfg.max_iters, "maxfev": 2 * cfg.max_iters},
    )
    any_ok |= bool(res.success)
    add(res.x[0], res.x[1], res.fun, res.success)

    q, t_s, i1, u, _ = _pick(cands)
    i2 = second_pulse_amplitude(p, task, i1, t_s)

    active = set()
    if _at_floor(t_s, w):
        active.add("T1_at_min")
    if _at_floor(t1 - t_s, w):
        active.add("T2_at_min")
    if u <= U_ATOL:
        active.add("I1_at_zero")
    if u >= 1.0 - U_ATOL:
        active.add("I1_at_cap")

    result = OptimizationResult(
        i1=i1,
        i2=i2,
        t_s=t_s,
        q=q,
        t1=t1,
        active_constraints=frozenset(active),
        converged=any_ok,
        kind="double",
        audit_q=audit_q,
        nfev=prob.nfev,
    )
    if "T2_at_min" in active:
        result.extra["floor_probe"] = tuple(_pinned_share(p, task, cfg, w * f) for f in PROBE_FACTORS)
    result.regime = classify_regime(result, cfg)
    result.extra["x_t1"] = float(two_pulse_x(p, i1, i2, t_s, t1, task.x0, t1))
    return result
