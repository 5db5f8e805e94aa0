"""Fractional calculus numerics on sampled signals.

Product-integration quadrature for the left Riemann-Liouville integral, the
L1 scheme for the Caputo derivative, a Lanczos gamma function, and a direct
solver for Caputo equations whose right-hand side does not depend on the
state. These routines serve as the independent numerical reference for the
closed-form results in :mod:`fracmem.analytics`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

__all__ = [
    "gamma",
    "FractionalOrder",
    "SampledSignal",
    "Trajectory",
    "rl_integral",
    "rl_integral_grid",
    "caputo_derivative",
    "oracle_solve",
]

# Lanczos approximation, g = 7, n = 9
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_SQRT_2PI = math.sqrt(2.0 * math.pi)


def gamma(z: float) -> float:
    """Gamma function for positive real arguments.

    Lanczos approximation on ``z >= 0.5``; smaller arguments are shifted up
    with ``gamma(z) = gamma(z + 1) / z``. Relative error stays below 1e-13
    on ``(0, 20]``.
    """
    z = float(z)
    if not z > 0.0 or math.isinf(z):
        raise DomainError(f"gamma is only defined here for finite z > 0, got {z!r}")
    if z < 0.5:
        return gamma(z + 1.0) / z
    z -= 1.0
    acc = _LANCZOS_COEF[0]
    for k in range(1, len(_LANCZOS_COEF)):
        acc += _LANCZOS_COEF[k] / (z + k)
    t = z + _LANCZOS_G + 0.5
    # split the power to keep t**(z + 0.5) finite for larger z
    half = t ** (0.5 * (z + 0.5))
    return _SQRT_2PI * half * (half * math.exp(-t)) * acc


@dataclass(frozen=True)
class FractionalOrder:
    """Order of a fractional operator, restricted to ``0 < alpha <= 1``."""

    alpha: float

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise DomainError(f"fractional order must satisfy 0 < alpha <= 1, got {self.alpha!r}")

    def __float__(self):
        return float(self.alpha)


def _order(alpha) -> float:
    if isinstance(alpha, FractionalOrder):
        return alpha.alpha
    return FractionalOrder(float(alpha)).alpha


@dataclass(frozen=True)
class SampledSignal:
    """Samples of a function on a grid starting at zero.

    ``kind`` selects how the samples are interpolated between nodes:
    ``"linear"`` for continuous functions and ``"step"`` for piecewise
    constant ones, where ``values[j]`` holds on ``[grid[j], grid[j+1])``.
    Discontinuities of a step signal must sit on grid nodes.
    """

    grid: np.ndarray
    values: np.ndarray
    kind: str = "linear"

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape:
            raise DomainError("grid and values must be 1-D arrays of equal length")
        if grid.size < 2:
            raise DomainError("a sampled signal needs at least two points")
        if grid[0] != 0.0:
            raise DomainError(f"grid must start at 0, got {grid[0]!r}")
        if not np.all(np.diff(grid) > 0):
            raise DomainError("grid must be strictly increasing")
        if self.kind not in ("linear", "step"):
            raise DomainError(f"unknown interpolation kind {self.kind!r}")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, func, grid, kind="linear"):
        grid = np.asarray(grid, dtype=float)
        return cls(grid, np.asarray(func(grid), dtype=float) * np.ones_like(grid), kind)

    @property
    def t_max(self) -> float:
        return float(self.grid[-1])

    def uniform_step(self, rtol=1e-9):
        """Return the spacing if the grid is uniform, else ``None``."""
        h = np.diff(self.grid)
        h0 = self.t_max / (self.grid.size - 1)
        if np.all(np.abs(h - h0) <= rtol * h0):
            return h0
        return None

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "linear":
            return np.interp(t, self.grid, self.values)
        idx = np.clip(np.searchsorted(self.grid, t, side="right") - 1, 0, self.grid.size - 1)
        return self.values[idx]


@dataclass
class Trajectory:
    """Sampled internal-state trajectory."""

    grid: np.ndarray
    x: np.ndarray
    source: str = "closed_form"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.x = np.asarray(self.x, dtype=float)
        if self.source not in ("closed_form", "oracle"):
            raise DomainError(f"unknown trajectory source {self.source!r}")
        if self.grid.shape != self.x.shape:
            raise DomainError("trajectory grid and samples differ in length")

    @property
    def x0(self) -> float:
        return float(self.x[0])


def _cell_weights(p, q, alpha):
    """Integrals of s**(alpha-1) and s**alpha over [q, p], elementwise."""
    w0 = (p**alpha - q**alpha) / alpha
    w1 = (p ** (alpha + 1.0) - q ** (alpha + 1.0)) / (alpha + 1.0)
    return w0, w1


def _rl_at(f: SampledSignal, alpha: float, t: float) -> float:
    grid, vals = f.grid, f.values
    if t <= 0.0:
        return 0.0
    # cells fully or partly inside [0, t]
    n = int(np.searchsorted(grid, t, side="left"))
    a = grid[:n]
    b = np.minimum(grid[1 : n + 1], t)
    p = t - a
    q = np.maximum(t - b, 0.0)
    w0, w1 = _cell_weights(p, q, alpha)
    fa = vals[:n]
    if f.kind == "step":
        total = np.dot(fa, w0)
    else:
        h = grid[1 : n + 1] - a
        slope = (vals[1 : n + 1] - fa) / h
        # f(tau) = f_a + slope * (p - s) with s = t - tau
        total = np.dot(fa, w0) + np.dot(slope, p * w0 - w1)
    return float(total) / gamma(alpha)


def rl_integral(f: SampledSignal, alpha, t: float) -> float:
    """Left Riemann-Liouville integral of order ``alpha`` at time ``t``.

    The kernel ``(t - tau)**(alpha - 1)`` is integrated exactly against the
    piecewise-linear (or piecewise-constant) interpolant of ``f`` on every
    grid cell, so the endpoint singularity costs no accuracy.
    """
    alpha = _order(alpha)
    t = float(t)
    if t < 0.0 or t > f.t_max * (1.0 + 1e-14):
        raise DomainError(f"t={t!r} lies outside the signal span [0, {f.t_max!r}]")
    return _rl_at(f, alpha, min(t, f.t_max))


def _toeplitz_apply(kernel, seq):
    """out[i] = sum_{k=1..i} kernel[k] * seq[i-k]."""
    return np.convolve(seq, kernel)[: seq.size]


def rl_integral_grid(f: SampledSignal, alpha) -> np.ndarray:
    """Riemann-Liouville integral of ``f`` evaluated at every grid node.

    Uniform grids use a discrete convolution of the cell weights; other grids
    fall back to node-by-node evaluation.
    """
    return _rl_grid(f, _order(alpha))


def _rl_grid(f: SampledSignal, order: float) -> np.ndarray:
    # the cell weights hold for any order > 0; order > 1 is used for time
    # integrals of solutions (J^1 J^alpha = J^(alpha+1))
    h = f.uniform_step()
    if h is None:
        return np.array([_rl_at(f, order, t) for t in f.grid])
    n = f.grid.size
    k = np.arange(n, dtype=float)
    km1 = np.maximum(k - 1.0, 0.0)
    w0, w1 = _cell_weights(k, km1, order)
    w0[0] = w1[0] = 0.0
    vals = f.values
    out = _toeplitz_apply(w0, vals)
    if f.kind == "linear":
        # slope term: (f_{j+1} - f_j) * (k * w0_k - w1_k), j = i - k
        w_slope = k * w0 - w1
        w_slope[0] = 0.0
        dv = np.append(np.diff(vals), 0.0)
        out = out + _toeplitz_apply(w_slope, dv)
    return out * h**order / gamma(order)


def caputo_derivative(f: SampledSignal, alpha, t: float) -> float:
    """Caputo derivative of order ``0 < alpha < 1`` at ``t`` (L1 scheme).

    ``f'`` is replaced by the difference quotient on each cell and the kernel
    ``(t - tau)**(-alpha)`` is integrated exactly.
    """
    alpha = _order(alpha)
    if alpha >= 1.0:
        raise DomainError("caputo_derivative needs alpha < 1; use an ordinary difference quotient at alpha = 1")
    t = float(t)
    if t <= 0.0 or t > f.t_max * (1.0 + 1e-14):
        raise DomainError(f"t={t!r} must lie in (0, {f.t_max!r}]")
    t = min(t, f.t_max)
    grid, vals = f.grid, f.values
    n = int(np.searchsorted(grid, t, side="left"))
    a = grid[:n]
    b_full = grid[1 : n + 1]
    slope = (vals[1 : n + 1] - vals[:n]) / (b_full - a)
    b = np.minimum(b_full, t)
    beta = 1.0 - alpha
    w = ((t - a) ** beta - np.maximum(t - b, 0.0) ** beta) / beta
    return float(np.dot(slope, w)) / gamma(1.0 - alpha)


def oracle_solve(drive: SampledSignal, alpha, x0: float) -> Trajectory:
    """Solve ``D^alpha x = drive(t)`` with ``x(0) = x0`` on the drive's grid.

    The right-hand side does not depend on ``x``, so the solution is
    ``x0`` plus the Riemann-Liouville integral of the drive.
    """
    x = float(x0) + rl_integral_grid(drive, alpha)
    return Trajectory(drive.grid.copy(), x, source="oracle", meta={"alpha": _order(alpha)})
