import math

import numpy as np
import pandas as pd
import pytest

from src.errors import ConfigError
from src.gaussian_field import CovarianceOracle, SpaceTimePoint, sample_w_ensemble
from src.slnd import (
    ConditioningSet,
    ScanConfig,
    boundary_term,
    conditional_variance,
    conditional_variance_report,
    projection_bound,
    slnd_ratio_scan,
)
from src.spectral import BoundaryCondition, build_eigensystem

SEED = 11
TARGET = SpaceTimePoint(0.5, 0.5)


@pytest.fixture(scope="module")
def oracle():
    return CovarianceOracle(build_eigensystem(BoundaryCondition("dirichlet"), 64))


def _points(*pairs):
    return ConditioningSet(tuple(SpaceTimePoint(t, x) for t, x in pairs))


def test_empty_set_gives_the_variance(oracle):
    assert conditional_variance(oracle, TARGET, ConditioningSet(())) == pytest.approx(
        float(oracle.variance(0.5, 0.5)))


def test_observing_the_target_leaves_no_variance(oracle):
    assert conditional_variance(oracle, TARGET, _points((0.5, 0.5), (0.3, 0.2))) < 1e-8


def test_more_observations_never_increase_the_variance(oracle):
    one = conditional_variance(oracle, TARGET, _points((0.5, 0.55)))
    two = conditional_variance(oracle, TARGET, _points((0.5, 0.55), (0.45, 0.5)))
    assert 0 < two <= one + 1e-12


def test_conditional_variance_matches_a_regression_on_sampled_paths():
    small = CovarianceOracle(build_eigensystem(BoundaryCondition("dirichlet"), 32), short_time=0.0)
    ens = sample_w_ensemble(small, [0.4, 0.5], [0.25, 0.5, 0.75], 20000, SEED)
    target = ens.values[:, 1, 1]
    observed = np.stack([ens.values[:, 0, 1], ens.values[:, 1, 0], ens.values[:, 1, 2]], axis=1)
    coef, *_ = np.linalg.lstsq(observed, target, rcond=None)
    residual = target - observed @ coef
    empirical = float(residual @ residual) / (ens.reps - observed.shape[1])
    cond = _points((0.4, 0.5), (0.5, 0.25), (0.5, 0.75))
    assert conditional_variance(small, TARGET, cond) == pytest.approx(empirical, rel=0.05)


def test_projection_bound_dominates(oracle):
    cond = _points((0.5, 0.55), (0.45, 0.5), (0.7, 0.2))
    assert conditional_variance(oracle, TARGET, cond) <= projection_bound(oracle, TARGET, cond) + 1e-12


def test_report_records_jitter_and_condition(oracle):
    report = conditional_variance_report(oracle, TARGET, _points((0.5, 0.55), (0.45, 0.5)))
    assert report.jitter == 0.0
    assert report.condition >= 1.0


def test_conditioning_set_validation():
    with pytest.raises(ConfigError, match="coincide"):
        _points((0.5, 0.5), (0.5, 0.5))
    with pytest.raises(ConfigError):
        ConditioningSet((SpaceTimePoint(0.5, 0.5),), jitter=-1.0)
    assert len(_points((0.1, 0.2)).extend(TARGET)) == 2


def test_scan_config_validation():
    with pytest.raises(ConfigError):
        ScanConfig(interior=(0.5, 0.2, 0.2, 0.8))
    with pytest.raises(ConfigError):
        ScanConfig(max_m=0)


def test_robin_scans_are_interior_only():
    robin = CovarianceOracle(build_eigensystem(BoundaryCondition("robin", alpha=-0.5, beta=1.0), 32))
    assert boundary_term(robin, 0.0) == math.inf
    with pytest.raises(ConfigError, match="interior-only"):
        slnd_ratio_scan(robin, ScanConfig(include_boundary=True), 2, SEED)


def test_ratio_scan(oracle):
    report = slnd_ratio_scan(oracle, ScanConfig(max_m=5), 20, SEED)
    assert list(report.table.columns) == ["trial", "m", "t", "x", "min_rho2", "scale", "cond_var",
                                          "jitter", "ratio"]
    assert len(report.table) == 20
    assert report.table["m"].between(1, 5).all()
    assert 0 < report.min_ratio <= report.max_ratio < math.inf
    assert report.spread >= 1.0


def test_scan_is_independent_of_threads(oracle):
    one = slnd_ratio_scan(oracle, ScanConfig(max_m=4), 40, SEED, threads=1)
    many = slnd_ratio_scan(oracle, ScanConfig(max_m=4), 40, SEED, threads=4)
    pd.testing.assert_frame_equal(one.table, many.table)


def test_scan_with_fixed_targets(oracle):
    report = slnd_ratio_scan(oracle, ScanConfig(max_m=3), 4, SEED, targets=[TARGET])
    np.testing.assert_allclose(report.table[["t", "x"]].to_numpy(), [[0.5, 0.5]] * 4)
