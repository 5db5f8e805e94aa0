"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` or as a script,
``python tests/test_acceptance.py``. Criterion 5 runs the full default
phase-diagram sweep and takes several minutes on one core.
"""

import math
import sys
import time

import numpy as np
import pytest

from fracmem.analytics import (
    Pulse,
    PulseTrain,
    closed_form_trajectory,
    oracle_energy,
    oracle_trajectory,
    required_amplitude,
    second_pulse_amplitude,
    single_pulse_q,
    single_pulse_q_end_aligned,
    single_pulse_x,
    two_pulse_q,
    two_pulse_q_printed,
    two_pulse_q_split,
    two_pulse_x,
)
from fracmem.device import DeviceParams, SwitchingTask
from fracmem.fraccalc import SampledSignal, caputo_derivative, rl_integral_grid
from fracmem.optimizer import OptimizerConfig, audit_grid, optimize_double
from fracmem.sweep import SweepSpec, fit_boundary_ii_iii, locate_boundary_i_ii, run_sweep

UNIT = SwitchingTask(0.0, 1.0, 1.0)
STEP = 1e-4


# lines collected here are echoed in the pytest terminal summary (conftest.py)
REPORT_LINES = []


def report(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    REPORT_LINES.append(line)
    sys.__stdout__.write(line + "\n")
    sys.__stdout__.flush()
    return ok


def on_grid(t):
    return round(t / STEP) * STEP


def random_case(rng):
    p = DeviceParams(alpha=float(rng.uniform(0.05, 1.0)), beta=float(rng.uniform(0.1, 3.0)))
    if rng.random() < 0.5:
        a, b = sorted(on_grid(v) for v in rng.uniform(0.0, 1.0, 2))
        b = max(b, a + STEP)
        return p, PulseTrain((Pulse(a, b, float(rng.uniform(0.2, 3.0))),), 1.0)
    t_s = on_grid(rng.uniform(0.05, 0.95))
    return p, PulseTrain.double(float(rng.uniform(0.2, 3.0)), float(rng.uniform(0.2, 3.0)), t_s, 1.0)


def closed_q(p, train):
    if len(train.pulses) == 1:
        return single_pulse_q(p, train.pulses[0], 0.0)
    first, second = train.pulses
    return float(two_pulse_q_split(p, UNIT, first.amplitude, first.t_end, second.amplitude))


def test_criterion_1_closed_form_vs_oracle():
    rng = np.random.default_rng(20240601)
    start = time.perf_counter()
    worst_x = worst_q = 0.0
    for _ in range(20):
        p, train = random_case(rng)
        oracle = oracle_trajectory(p, train, 0.0, STEP)
        closed = closed_form_trajectory(p, train, 0.0, oracle.grid)
        worst_x = max(worst_x, float(np.max(np.abs(closed.x - oracle.x))))
        q = closed_q(p, train)
        worst_q = max(worst_q, abs(q - oracle_energy(p, train, 0.0, STEP)) / q)
    elapsed = time.perf_counter() - start
    ok = worst_x <= 1e-6 and worst_q <= 1e-6 and elapsed < 10.0
    assert report(1, ok, f"max|dx|={worst_x:.2e} max rel dQ={worst_q:.2e} time={elapsed:.1f}s")


def test_criterion_2_flat_losses_at_half_beta():
    p = DeviceParams(A=1.0, B=5.0, kappa=1.0, alpha=0.5, beta=1.0)
    widths = np.round(np.arange(1, 21) * 0.05, 12)
    q = np.array([single_pulse_q_end_aligned(p, UNIT, 1.0 - w) for w in widths])
    target = math.pi / 4 * 13 / 3
    spread = float(np.ptp(q) / np.mean(q))
    err = float(np.max(np.abs(q - target)))
    ok = spread < 1e-10 and err <= 1e-9 and abs(target - 3.403392) < 1e-6
    assert report(2, ok, f"relative spread={spread:.1e} max|Q-13pi/12|={err:.1e}")


WIDTHS = np.round(np.arange(1, 21) * 0.05, 12)


def _width_curve(alpha, beta):
    p = DeviceParams(alpha=alpha, beta=beta)
    return np.array([single_pulse_q_end_aligned(p, UNIT, 1.0 - w) for w in WIDTHS])


def _criterion_3_checks():
    checks = {"a0.75 b1 decreasing": bool(np.all(np.diff(_width_curve(0.75, 1.0)) < 0))}
    checks["a0.25 b1 increasing"] = bool(np.all(np.diff(_width_curve(0.25, 1.0)) > 0))
    for alpha in (0.25, 0.5, 0.75, 1.0):
        checks[f"a{alpha} b2 increasing"] = bool(np.all(np.diff(_width_curve(alpha, 2.0)) > 0))
    tiny = single_pulse_q_end_aligned(DeviceParams(alpha=0.25, beta=1.0), UNIT, 1.0 - 1e-8)
    checks["Q(1e-8) < 1e-3"] = tiny < 1e-3
    return checks, tiny


# At alpha = 1, beta = 2 the width exponent 1 - 2 alpha / beta is zero, so the
# loss is exactly flat in T and "strictly increasing" cannot hold.
@pytest.mark.xfail(strict=True, reason="alpha=1, beta=2 gives a width-independent loss")
def test_criterion_3_width_monotonicity():
    checks, tiny = _criterion_3_checks()
    failed = [k for k, v in checks.items() if not v]
    assert report(3, not failed, f"Q(T=1e-8)={tiny:.2e} failed={failed or 'none'}")


def test_criterion_3_attainable_part():
    checks, _ = _criterion_3_checks()
    assert [k for k, v in checks.items() if not v] == ["a1.0 b2 increasing"]
    flat = _width_curve(1.0, 2.0)
    assert np.ptp(flat) <= 1e-12 * flat[0]


def _transition(alphas, labels, before, after):
    k = next(i for i, lab in enumerate(labels) if lab in after)
    j = max(i for i in range(k) if labels[i] in before)
    return 0.5 * (alphas[j] + alphas[k])


def test_criterion_4_regime_transitions_at_unit_beta():
    cfg = OptimizerConfig(min_pulse_width=1e-6)
    alphas = np.round(np.linspace(0.1, 1.0, 37), 12)
    start = time.perf_counter()
    labels = [str(optimize_double(DeviceParams(alpha=a, beta=1.0), UNIT, cfg, seed=k).regime) for k, a in enumerate(alphas)]
    elapsed = time.perf_counter() - start
    a12 = _transition(alphas, labels, {"I"}, {"II", "III", "interior"})
    a23 = _transition(alphas, labels, {"II"}, {"III"})
    ok = abs(a12 - 0.5) <= 0.02 and abs(a23 - 0.85) <= 0.03 and elapsed < 300
    assert report(4, ok, f"I->II at {a12:.4f} II->III at {a23:.4f} time={elapsed:.1f}s")


@pytest.mark.slow
def test_criterion_5_phase_diagram():
    spec = SweepSpec()
    start = time.perf_counter()
    diagram = run_sweep(spec, jobs=8)
    elapsed = time.perf_counter() - start
    slope, intercept, residual = fit_boundary_ii_iii(diagram)
    step = spec.alpha_range[2]
    i_ii = locate_boundary_i_ii(diagram)
    off_line = [(b, a) for b, a in i_ii if b <= 2.0 + 1e-9 and abs(a - b / 2.0) > step + 1e-9]
    steep_rows = [b for b, row in diagram.rows() if b > 2.0 + 1e-9 and any(c.regime != "I" for c in row)]
    ok = (
        abs(slope - 7.05) <= 0.7
        and abs(intercept + 5.08) <= 0.5
        and not off_line
        and not steep_rows
        and elapsed < 1800
    )
    detail = (
        f"slope={slope:.3f} intercept={intercept:.3f} rms={residual:.3f} "
        f"I/II rows off beta=2alpha: {off_line or 'none'} "
        f"beta>2 rows not all I: {steep_rows or 'none'} "
        f"failed cells={diagram.failed_count} time={elapsed:.0f}s"
    )
    assert report(5, ok, detail)


def test_criterion_6_losses_non_decreasing_in_order():
    alphas = np.round(np.arange(1, 11) * 0.1, 12)
    parts, ok = [], True
    for width in (1e-6, 1e-2):
        cfg = OptimizerConfig(min_pulse_width=width)
        q = [optimize_double(DeviceParams(alpha=a, beta=1.0), UNIT, cfg).q for a in alphas]
        mono = all(x <= y for x, y in zip(q, q[1:]))
        ok &= mono
        parts.append(f"w={width:g}: {'monotone' if mono else 'NOT monotone'} Q[0.1]={q[0]:.3e} Q[1]={q[-1]:.4f}")
    assert report(6, ok, "; ".join(parts))


def test_criterion_7_identities():
    rng = np.random.default_rng(7)
    worst = {}
    # compact double-pulse loss at t_s = 0 against the end-aligned single pulse
    dev0 = 0.0
    for _ in range(50):
        p = DeviceParams(alpha=float(rng.uniform(0.05, 1.0)), beta=float(rng.uniform(0.1, 3.0)))
        i1 = float(rng.uniform(0.0, 10.0))
        ref = single_pulse_q_end_aligned(p, UNIT, 0.0)
        dev0 = max(dev0, abs(float(two_pulse_q_printed(p, UNIT, i1, 0.0)) - ref) / ref)
        dev0 = max(dev0, abs(two_pulse_q(p, UNIT, i1, 0.0) - ref) / ref)
    worst["t_s=0"] = dev0
    # second-pulse amplitude with no first pulse against the single-pulse amplitude
    dev1 = 0.0
    for _ in range(50):
        p = DeviceParams(alpha=float(rng.uniform(0.05, 1.0)), beta=float(rng.uniform(0.1, 3.0)))
        t_s = float(rng.uniform(0.0, 0.99))
        ref = required_amplitude(p, UNIT, t_s, 1.0)
        dev1 = max(dev1, abs(second_pulse_amplitude(p, UNIT, 0.0, t_s) - ref) / ref)
    worst["I1=0"] = dev1
    # beta independence of the constrained trajectory
    t = np.linspace(0.0, 3.0, 301)
    dev2 = 0.0
    for alpha in (0.25, 0.5, 0.75, 1.0):
        curves = []
        for beta in (0.5, 1.0, 2.0):
            p = DeviceParams(alpha=alpha, beta=beta)
            amp = required_amplitude(p, UNIT, 0.3, 0.55)
            curves.append(single_pulse_x(p, Pulse(0.3, 0.55, amp), 0.0, t))
        dev2 = max(dev2, float(np.max(np.abs(curves[0] - curves[1]))), float(np.max(np.abs(curves[0] - curves[2]))))
    worst["beta"] = dev2
    # fundamental theorem: integral of the Caputo derivative returns f - f(0)
    grid = np.linspace(0.0, 1.0, 2001)
    values = np.sin(2 * grid) + grid**2
    f = SampledSignal(grid, values)
    dev3 = 0.0
    for alpha in (0.3, 0.7):
        d = np.array([0.0] + [caputo_derivative(f, alpha, s) for s in grid[1:]])
        back = rl_integral_grid(SampledSignal(grid, d), alpha)
        dev3 = max(dev3, float(np.max(np.abs(back - (values - values[0])))))
    worst["round trip"] = dev3
    ok = worst["t_s=0"] <= 1e-12 and worst["I1=0"] <= 1e-12 and worst["beta"] <= 1e-12 and worst["round trip"] <= 1e-3
    assert report(7, ok, " ".join(f"{k}:{v:.1e}" for k, v in worst.items()))


PANEL = [
    (0.2, 1.0, 1e-6),
    (0.45, 1.0, 1e-6),
    (0.55, 1.0, 1e-6),
    (0.7, 1.0, 1e-6),
    (0.85, 1.0, 1e-6),
    (0.95, 1.0, 1e-6),
    (1.0, 1.0, 1e-6),
    (0.6, 0.5, 1e-6),
    (0.9, 2.5, 1e-6),
    (0.8, 1.0, 1e-2),
]


def test_criterion_8_optimizer_audit():
    worst_gap = -math.inf
    worst_x = 0.0
    for k, (alpha, beta, width) in enumerate(PANEL):
        cfg = OptimizerConfig(min_pulse_width=width)
        p = DeviceParams(alpha=alpha, beta=beta)
        res = optimize_double(p, UNIT, cfg, seed=k)
        _, _, grid_q = audit_grid(p, UNIT, cfg)
        worst_gap = max(worst_gap, res.q - float(np.nanmin(grid_q)))
        x1 = float(two_pulse_x(p, res.i1, res.i2, res.t_s, 1.0, 0.0, 1.0))
        worst_x = max(worst_x, abs(x1 - 1.0))
    ok = worst_gap <= 1e-9 and worst_x <= 1e-9
    assert report(8, ok, f"max(Q - grid min)={worst_gap:.2e} max|x(t1)-1|={worst_x:.1e}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
