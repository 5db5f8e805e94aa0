import numpy as np
import pytest

from fracmem.errors import DomainError, FracmemError
from fracmem.sweep import (
    FAILED,
    PhaseDiagram,
    SweepCell,
    SweepSpec,
    axis_values,
    fit_boundary_ii_iii,
    locate_boundary_i_ii,
    run_sweep,
)

SMALL = SweepSpec(alpha_range=(0.3, 1.0, 0.35), beta_range=(0.6, 2.4, 0.6))


def test_axis_values_inclusive():
    assert list(axis_values(0.05, 1.0, 0.025))[-1] == 1.0
    assert len(axis_values(0.05, 1.0, 0.025)) == 39
    assert len(axis_values(0.1, 3.0, 0.05)) == 59


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(alpha_range=(0.0, 1.0, 0.1)),
        dict(alpha_range=(0.5, 1.2, 0.1)),
        dict(beta_range=(0.01, 1.0, 0.1)),
        dict(beta_range=(1.0, 0.5, 0.1)),
        dict(alpha_range=(0.1, 1.0, 0.0)),
    ],
)
def test_spec_validation(kwargs):
    with pytest.raises(DomainError):
        SweepSpec(**kwargs)


@pytest.mark.parametrize("alpha, label", [(0.3, "I"), (0.7, "II"), (0.95, "III")])
def test_single_cells(alpha, label):
    diagram = run_sweep(SweepSpec(alpha_range=(alpha, alpha + 0.01, 0.02), beta_range=(1.0, 1.01, 0.02)))
    assert [c.regime for c in diagram.cells] == [label]


def test_small_sweep_labels_and_determinism():
    first = run_sweep(SMALL)
    again = run_sweep(SMALL)
    pooled = run_sweep(SMALL, jobs=2)
    key = lambda d: [(c.alpha, c.beta, c.regime, c.q, c.i1, c.i2, c.t_s) for c in d.cells]
    assert key(first) == key(again) == key(pooled)
    assert first.failed_count == 0
    for beta, row in first.rows():
        labels = [c.regime for c in row]
        if beta > 2:
            assert set(labels) == {"I"}
        order = {"I": 0, "II": 1, "interior": 1, "III": 2}
        ranks = [order[lab] for lab in labels]
        assert ranks == sorted(ranks)


def synthetic(rows):
    alphas = np.round(np.arange(0.5, 1.0001, 0.05), 12)
    betas = np.array(sorted(rows))
    cells = []
    for beta in betas:
        split_12, split_23 = rows[beta]
        for a in alphas:
            lab = "I" if a < split_12 else ("II" if a < split_23 else "III")
            cells.append(SweepCell(float(a), float(beta), lab, 1.0, 0.0, 1.0, 0.5, True))
    return PhaseDiagram(alphas, betas, cells)


def test_fit_recovers_line():
    # transitions placed on the line beta = 7 alpha - 5 (alpha = (beta + 5) / 7)
    rows = {b: (0.0, (b + 5.0) / 7.0 + 0.025) for b in (0.5, 1.0, 1.5, 2.0)}
    slope, intercept, residual = fit_boundary_ii_iii(synthetic(rows))
    assert slope == pytest.approx(7.0, rel=0.1)
    assert intercept == pytest.approx(-5.0, abs=0.5)
    assert residual >= 0


def test_fit_needs_three_points():
    with pytest.raises(FracmemError):
        fit_boundary_ii_iii(synthetic({1.0: (0.6, 0.8), 1.5: (0.8, 0.9)}))


def test_locate_i_ii():
    pts = locate_boundary_i_ii(synthetic({1.0: (0.62, 0.9), 1.4: (0.72, 0.95)}))
    assert pts == [(1.0, pytest.approx(0.625)), (1.4, pytest.approx(0.725))]
    with pytest.raises(FracmemError):
        locate_boundary_i_ii(synthetic({1.0: (0.0, 0.8)}))


def test_failed_cells_are_excluded():
    d = synthetic({0.5: (0.0, 0.8), 1.0: (0.0, 0.85), 1.5: (0.0, 0.9), 2.0: (0.0, 0.95)})
    d.cells[3] = SweepCell(d.cells[3].alpha, d.cells[3].beta, FAILED)
    assert d.failed_count == 1
    fit_boundary_ii_iii(d)
