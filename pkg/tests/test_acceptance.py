"""The cheap deterministic criteria; the Monte Carlo ones run through `lab.py acceptance`."""

import numpy as np
import pytest

from src.acceptance import (
    _COUPLING_CELLS,
    _COUPLING_DT,
    _COUPLING_HORIZON,
    _COUPLING_LADDER,
    _COUPLING_RECORD,
    CRITERIA,
    SuiteContext,
    _coupling_batches,
    _linearization_offsets,
    _quadrature_variance,
    _short_time_kernel,
    run_criterion,
    run_suite,
)
from src.config import ACCEPTANCE
from src.errors import ConfigError
from src.gaussian_field import CovarianceOracle
from src.heatkernel import KernelEvaluator
from src.spectral import BoundaryCondition, build_eigensystem


@pytest.fixture
def ctx():
    return SuiteContext(seed=20240601, threads=1, quick=True)


def test_registry_covers_every_budget():
    assert sorted(CRITERIA) == sorted(ACCEPTANCE["budget_seconds"])


STEP_KEYS = ("gate_dt", "gate_dx")


def test_quick_sizes_are_cheaper(ctx):
    full = SuiteContext(1, 1, quick=False).sizes
    assert ctx.sizes.keys() == full.keys()
    for key in full:
        if key in STEP_KEYS:
            # a grid step shrinks as the run gets more expensive
            assert ctx.sizes[key] >= full[key], key
        else:
            assert ctx.sizes[key] <= full[key], key


def test_eigen_exactness_passes(ctx):
    result = run_criterion(1, ctx)
    assert result.passed, result.metrics
    assert result.metrics["dirichlet_error"] < 1e-12
    assert result.error == ""


def test_dirichlet_boundary_factor_passes(ctx):
    result = run_criterion(4, ctx)
    assert result.passed, result.metrics
    assert result.metrics["min_ratio"] > 0


def test_result_row_omits_timings(ctx):
    result = run_criterion(1, ctx)
    assert result.row() == {"criterion": 1, "name": "eigen-exactness", "passed": True, "error": ""}
    assert result.budget == ACCEPTANCE["budget_seconds"][1]
    assert result.seconds >= 0


def test_suite_reports_each_result(ctx):
    seen = []
    results = run_suite(ctx, [4, 1], on_result=seen.append)
    assert [r.number for r in results] == [4, 1]
    assert seen == results


def test_unknown_criterion(ctx):
    with pytest.raises(ConfigError):
        run_criterion(99, ctx)


@pytest.mark.parametrize("x", [0.0, 1e-2, 1.0])
def test_robin_oracle_matches_direct_quadrature_at_the_walls(x):
    es = build_eigensystem(BoundaryCondition("robin", alpha=-0.5, beta=1.0), 400)
    oracle = CovarianceOracle(es, modes=256)
    expected = _quadrature_variance(KernelEvaluator(es), 0.3, x)
    assert float(oracle.variance(0.3, x)) == pytest.approx(expected, abs=1e-6)


def test_short_time_kernel_keeps_robin_wall_condition():
    bc = BoundaryCondition("robin", alpha=-0.5, beta=1.0)
    s, y, h = 1e-3, np.array([0.02]), 1e-6
    slope = (_short_time_kernel(bc, s, h, y) - _short_time_kernel(bc, s, -h, y)) / (2 * h)
    value = _short_time_kernel(bc, s, 0.0, y)
    assert float(slope[0] + bc.alpha * value[0]) == pytest.approx(0.0, abs=1e-6)


@pytest.mark.parametrize("cells, steps", [(64, 4096), (128, 8192)])
def test_linearization_offsets_keep_physical_increments_under_refinement(cells, steps):
    base_center, base = _linearization_offsets(cells, 1.0 / steps)
    fine_center, fine = _linearization_offsets(2 * cells, 1.0 / (2 * steps))
    assert base_center[0] / steps == fine_center[0] / (2 * steps) == pytest.approx(1.0 / 32)
    assert base_center[1] / cells == fine_center[1] / (2 * cells) == 0.25
    for (dk, dj), (fk, fj) in zip(base, fine):
        assert (dk / steps, dj / cells) == (fk / (2 * steps), fj / (2 * cells))
    # nothing at the coarsest grid scale
    assert min(dk * 4096 / steps for dk, _ in base if dk) >= 2
    assert min(dj * 64 / cells for _, dj in base if dj) >= 2


def test_coupling_batches_cover_every_replicate():
    ctx = SuiteContext(seed=1, threads=1, quick=False)
    batches = _coupling_batches(ctx)
    assert sum(reps for _, reps in batches) == ctx.sizes["coupling_reps"]
    assert [b for b, _ in batches] == list(range(len(batches)))


def test_coupling_ladder_stays_local_and_above_the_grid_floor():
    dt = _COUPLING_DT * _COUPLING_RECORD
    floor = 2.0 * min(dt ** 0.25, (1.0 / _COUPLING_CELLS) ** 0.5)
    assert _COUPLING_LADDER[-1] >= floor
    assert _COUPLING_LADDER[0] <= 2.0 * _COUPLING_LADDER[-1]
    t0 = round(0.0625 / dt) * dt
    assert t0 - _COUPLING_LADDER[0] ** 4 > 0
    assert t0 + _COUPLING_LADDER[0] ** 4 <= _COUPLING_HORIZON
    assert 0.5 + _COUPLING_LADDER[0] ** 2 < 1.0


def test_unexpected_errors_fail_only_their_criterion(ctx, monkeypatch):
    def broken(_ctx):
        raise np.linalg.LinAlgError("Singular matrix")

    monkeypatch.setitem(CRITERIA, 4, ("dirichlet-boundary-factor", broken))
    results = run_suite(ctx, [4, 1])
    assert not results[0].passed
    assert results[0].error == "LinAlgError: Singular matrix"
    assert results[1].passed
