"""Regime phase diagram over the (alpha, beta) plane."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .device import DeviceParams, SwitchingTask
from .errors import DomainError, FracmemError
from .optimizer import OptimizerConfig, RegimeLabel, optimize_double

__all__ = [
    "SweepSpec",
    "SweepCell",
    "PhaseDiagram",
    "run_sweep",
    "fit_boundary_ii_iii",
    "locate_boundary_i_ii",
    "axis_values",
]

log = logging.getLogger(__name__)

ALPHA_FLOOR = 0.01
BETA_FLOOR = 0.05
MAX_FAILED_FRACTION = 0.05
FAILED = "failed"


def axis_values(lo: float, hi: float, step: float) -> np.ndarray:
    """Inclusive grid ``lo, lo+step, ..., hi`` rounded to 12 digits."""
    n = int(math.floor((hi - lo) / step + 1e-9))
    return np.round(lo + step * np.arange(n + 1), 12)


@dataclass(frozen=True)
class SweepSpec:
    alpha_range: tuple = (0.05, 1.0, 0.025)
    beta_range: tuple = (0.1, 3.0, 0.05)
    cfg: OptimizerConfig = field(default_factory=OptimizerConfig)
    params: DeviceParams = field(default_factory=DeviceParams)
    task: SwitchingTask = field(default_factory=SwitchingTask)
    seed: int = 0

    def __post_init__(self):
        a_lo, a_hi, a_step = self.alpha_range
        b_lo, b_hi, b_step = self.beta_range
        if not (ALPHA_FLOOR <= a_lo < a_hi <= 1.0):
            raise DomainError(f"alpha range must satisfy {ALPHA_FLOOR} <= lo < hi <= 1, got {a_lo}..{a_hi}")
        if not (BETA_FLOOR <= b_lo < b_hi):
            raise DomainError(f"beta range must satisfy {BETA_FLOOR} <= lo < hi, got {b_lo}..{b_hi}")
        if not (a_step > 0 and b_step > 0):
            raise DomainError("sweep steps must be positive")

    @property
    def alphas(self) -> np.ndarray:
        return axis_values(*self.alpha_range)

    @property
    def betas(self) -> np.ndarray:
        return axis_values(*self.beta_range)


@dataclass
class SweepCell:
    alpha: float
    beta: float
    regime: str
    q: float = math.nan
    i1: float = math.nan
    i2: float = math.nan
    t_s: float = math.nan
    converged: bool = False

    @property
    def failed(self) -> bool:
        return self.regime == FAILED


@dataclass
class PhaseDiagram:
    """Grid of regime labels, row-major in ``beta`` then ``alpha``."""

    alphas: np.ndarray
    betas: np.ndarray
    cells: list
    boundary_i_ii: tuple = (2.0, 0.0)
    boundary_ii_iii: Optional[tuple] = None

    def row(self, j: int) -> list:
        n = len(self.alphas)
        return self.cells[j * n : (j + 1) * n]

    def rows(self):
        for j, beta in enumerate(self.betas):
            yield float(beta), self.row(j)

    @property
    def failed_count(self) -> int:
        return sum(c.failed for c in self.cells)


def _solve_cell(args):
    index, alpha, beta, spec = args
    params = spec.params.with_order(alpha=alpha, beta=beta)
    try:
        res = optimize_double(params, spec.task, spec.cfg, seed=spec.seed + index)
    except (FracmemError, ArithmeticError, ValueError) as exc:
        log.warning("cell alpha=%g beta=%g failed: %s", alpha, beta, exc)
        return index, SweepCell(alpha, beta, FAILED)
    regime = str(res.regime) if res.converged else FAILED
    return index, SweepCell(alpha, beta, regime, res.q, res.i1, res.i2, res.t_s, res.converged)


def run_sweep(spec: SweepSpec, jobs: int = 1) -> PhaseDiagram:
    """Optimise and label every cell of the grid.

    Cells are independent; with ``jobs > 1`` they run in a process pool and
    are reassembled by index, so the output does not depend on scheduling.
    """
    alphas, betas = spec.alphas, spec.betas
    work = [
        (j * len(alphas) + i, float(a), float(b), spec)
        for j, b in enumerate(betas)
        for i, a in enumerate(alphas)
    ]
    cells = [None] * len(work)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for index, cell in pool.map(_solve_cell, work, chunksize=8):
                cells[index] = cell
    else:
        for item in work:
            index, cell = _solve_cell(item)
            cells[index] = cell
    diagram = PhaseDiagram(alphas, betas, cells)
    failed = diagram.failed_count
    if failed > MAX_FAILED_FRACTION * len(cells):
        raise FracmemError(f"{failed} of {len(cells)} sweep cells failed")
    return diagram


def _transitions(row, before: set, after: set):
    """Midpoint between the last ``before`` cell and the first ``after`` cell."""
    labels = [c.regime for c in row]
    first_after = next((k for k, lab in enumerate(labels) if lab in after), None)
    if first_after is None:
        return None
    last_before = max((k for k in range(first_after) if labels[k] in before), default=None)
    if last_before is None:
        return None
    return 0.5 * (row[last_before].alpha + row[first_after].alpha)


def fit_boundary_ii_iii(diagram: PhaseDiagram):
    """Straight-line fit ``beta = slope * alpha + intercept`` to the II/III edge.

    Each beta row contributes the midpoint between its last regime-II cell and
    first regime-III cell. The grid quantises alpha, so alpha is regressed on
    beta and the line is then inverted. ``residual`` is the RMS deviation in
    beta.
    """
    pts = []
    for beta, row in diagram.rows():
        alpha_t = _transitions(row, {RegimeLabel.II.value}, {RegimeLabel.III.value})
        if alpha_t is not None:
            pts.append((beta, alpha_t))
    if len(pts) < 3:
        raise FracmemError(f"need at least 3 II/III transition points, found {len(pts)}")
    b, a = np.array(pts).T
    coef, icpt = np.polyfit(b, a, 1)
    slope = 1.0 / coef
    intercept = -icpt / coef
    residual = float(np.sqrt(np.mean((b - (slope * a + intercept)) ** 2)))
    diagram.boundary_ii_iii = (float(slope), float(intercept), residual)
    return float(slope), float(intercept), residual


def locate_boundary_i_ii(diagram: PhaseDiagram):
    """Per-row alpha where the optimum leaves regime I, as ``(beta, alpha)`` pairs."""
    later = {RegimeLabel.II.value, RegimeLabel.III.value, RegimeLabel.INTERIOR.value}
    out = []
    for beta, row in diagram.rows():
        alpha_t = _transitions(row, {RegimeLabel.I.value}, later)
        if alpha_t is not None:
            out.append((beta, alpha_t))
    if not out:
        raise FracmemError("no regime I/II transitions found")
    return out
