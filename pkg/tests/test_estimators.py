import math

import numpy as np
import pytest
from scipy import stats

from src.errors import ConfigError, EstimatorError
from src.estimators import (
    ball_sups,
    bootstrap_median,
    check_ladder,
    chung_scale,
    chung_statistic,
    dyadic_ladder,
    estimate_constants,
    exceptional_scan,
    fit_exponent,
    local_modulus,
    log_guarded,
    loglog,
    moment_growth,
    phi_small_ball,
    ratio_scaling_check,
    small_ball,
    uniform_modulus,
    wilson_interval,
)
from src.gaussian_field import PathEnsemble, SpaceTimePoint

TIMES = np.linspace(0.0, 1.0 / 16, 17)    # dt = 1/256
XS = np.linspace(0.0, 1.0, 65)            # dx = 1/64
Z0 = SpaceTimePoint(1.0 / 32, 0.5)
WHOLE = (0.0, 1.0 / 16, 0.0, 1.0)
LADDER = dyadic_ladder(0.5, 2)


def _ensemble(reps, scale=1.0, seed=0):
    rng = np.random.default_rng(seed)
    values = scale * rng.standard_normal((reps, TIMES.size, XS.size))
    return PathEnsemble(TIMES, XS, values, seed, 1.0)


@pytest.fixture(scope="module")
def noisy():
    return _ensemble(40)


@pytest.fixture(scope="module")
def flat():
    return PathEnsemble(TIMES, XS, np.full((1200, TIMES.size, XS.size), 3.0), 0, 1.0)


# ── Normalizers and ladders ───────────────────────────────────────────────────

def test_guarded_logarithms_never_drop_below_one():
    np.testing.assert_allclose(loglog([0.5, 0.9]), 1.0)
    np.testing.assert_allclose(log_guarded([0.5, 0.9]), 1.0)
    assert loglog(1e-10) == pytest.approx(math.log(math.log(1e10)))


def test_dyadic_ladder():
    np.testing.assert_allclose(dyadic_ladder(0.5, 3), [0.5, 0.25, 0.125])
    with pytest.raises(ConfigError):
        dyadic_ladder(0.0, 3)


def test_ladder_checks(noisy):
    with pytest.raises(ConfigError, match="decreasing"):
        check_ladder([0.25, 0.5], noisy)
    with pytest.raises(EstimatorError, match="resolution"):
        check_ladder([0.5, 0.125], noisy)
    with pytest.raises(ConfigError):
        check_ladder(LADDER, noisy, axis="diagonal")
    np.testing.assert_allclose(check_ladder(LADDER, noisy), LADDER)


# ── Moduli ───────────────────────────────────────────────────────────────────

def test_local_modulus_shrinks_with_the_ball(noisy):
    stat = local_modulus(noisy, Z0, LADDER)
    assert stat.sups.shape == (40, 2)
    assert np.all(stat.sups[:, 0] >= stat.sups[:, 1])
    assert np.all(stat.sups > 0)
    assert list(stat.table().columns) == ["epsilon", "median", "iqr", "mean", "max"]


def test_constant_paths_have_zero_modulus(flat):
    np.testing.assert_array_equal(local_modulus(flat, Z0, LADDER).sups, 0.0)
    np.testing.assert_array_equal(uniform_modulus(flat, WHOLE, LADDER).sups, 0.0)


def test_uniform_modulus_dominates_local(noisy):
    local = local_modulus(noisy, Z0, LADDER, normalizer="log")
    uniform = uniform_modulus(noisy, WHOLE, LADDER, normalizer="log")
    assert np.all(uniform.sups >= local.sups - 1e-12)


def test_sigma_normalization_divides_by_the_centre_value(noisy):
    doubled = noisy.with_values(noisy.values, "u", sigma_values=np.full_like(noisy.values, 2.0))
    plain = local_modulus(noisy, Z0, LADDER)
    scaled = local_modulus(doubled, Z0, LADDER, use_sigma=True)
    np.testing.assert_allclose(scaled.sups, plain.sups / 2.0)


def test_slice_modulus_is_dominated(noisy):
    space_only = local_modulus(noisy, Z0, LADDER, axis="space")
    both = local_modulus(noisy, Z0, LADDER)
    assert np.all(space_only.sups <= both.sups + 1e-12)


def test_uniform_modulus_rejects_tiny_rectangles(noisy):
    with pytest.raises(EstimatorError):
        uniform_modulus(noisy, (0.0, 0.001, 0.0, 1.0), LADDER)
    with pytest.raises(ConfigError):
        uniform_modulus(noisy, WHOLE, LADDER, normalizer="sqrt")


def test_exceptional_scan(noisy):
    scan = exceptional_scan(noisy, WHOLE, [0.0, 1.0, 1e6], 0.25)
    assert scan.fractions[0] == pytest.approx(1.0)
    assert scan.fractions[-1] == 0.0
    assert np.all(np.diff(scan.fractions) <= 0)
    assert scan.per_path.shape == (40, 3)
    assert len(scan.table()) == 3
    assert np.all(scan.uniform_constants > 0)


# ── Small balls ───────────────────────────────────────────────────────────────

def test_wilson_interval():
    low, high = wilson_interval(50, 100)
    assert low < 0.5 < high
    assert wilson_interval(0, 100)[0] == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("n", [1000, 10000])
@pytest.mark.parametrize("p", [0.2, 0.3, 0.5])
def test_wilson_interval_covers_a_known_probability(n, p):
    hits = np.arange(n + 1)
    weights = stats.binom.pmf(hits, n, p)
    keep = weights > 1e-12
    covered = [low <= p <= high for low, high in (wilson_interval(int(k), n) for k in hits[keep])]
    assert float(np.sum(weights[keep][covered])) >= 0.94


def test_ball_sups_grow_with_the_radius(noisy):
    sups = ball_sups(noisy, Z0, np.array([0.25, 0.5]), "both", False)
    assert np.all(sups[:, 1] >= sups[:, 0])


def test_small_ball_table():
    ens = _ensemble(1200, scale=0.05, seed=3)
    est = small_ball(ens, Z0, [0.5, 0.25], [1.0, 1.5, 2.0])
    table = est.table
    assert len(table) == 6
    assert table["p_hat"].between(0, 1).all()
    assert (table["low"] <= table["p_hat"] + 1e-12).all()
    assert (table["p_hat"] <= table["high"] + 1e-12).all()
    for _, rows in table.groupby("radius"):
        assert np.all(np.diff(rows.sort_values("ratio")["p_hat"].to_numpy()) <= 0)
    assert isinstance(ratio_scaling_check(est, 1.0), bool)


def test_small_ball_on_constant_paths_excludes_every_rung(flat):
    est = small_ball(flat, Z0, [0.5, 0.25], [1.0, 2.0])
    assert est.fit is None
    assert est.excluded_rungs == 4
    np.testing.assert_array_equal(est.table["p_hat"], 1.0)


def test_small_ball_guards(noisy, flat):
    with pytest.raises(EstimatorError, match="paths"):
        small_ball(noisy, Z0, [0.5], [1.0])
    est = small_ball(flat, Z0, [0.5], [1.0, 2.0])
    with pytest.raises(EstimatorError):
        ratio_scaling_check(est, 1.0)
    with pytest.raises(ConfigError):
        small_ball(flat, Z0, [0.5], [0.0])


def _scaled_window(r, reps=1500, seed=5, exponent=1.0):
    """Paths r^exponent (a sin(pi tau) + b sin(pi xi)) on the window t0 +- r^4, x0 +- r^2."""
    rng = np.random.default_rng(seed)
    tau, xi = np.linspace(-1.0, 1.0, 17), np.linspace(-1.0, 1.0, 17)
    a, b = rng.standard_normal((2, reps, 1, 1))
    # the sup sits strictly inside the window, away from the rounded ball edge
    values = r ** exponent * (a * np.sin(math.pi * tau)[None, :, None] + b * np.sin(math.pi * xi)[None, None, :])
    return PathEnsemble(0.5 + r ** 4 * tau, 0.5 + r ** 2 * xi, values, seed, 1.0)


def test_small_ball_sampler_gives_ratio_only_scaling():
    z0 = SpaceTimePoint(0.5, 0.5)
    est = small_ball(_scaled_window, z0, [0.4, 0.2], [2.0, 4.0, 8.0])
    by_radius = [rows.sort_values("ratio")["hits"].to_numpy() for _, rows in est.table.groupby("radius")]
    np.testing.assert_array_equal(by_radius[0], by_radius[1])
    assert all(ratio_scaling_check(est, q) for q in (2.0, 4.0, 8.0))


def test_small_ball_scaling_check_flags_a_field_without_scaling():
    z0 = SpaceTimePoint(0.5, 0.5)
    est = small_ball(lambda r: _scaled_window(r, exponent=0.0), z0, [0.4, 0.1], [0.5, 1.0, 2.0])
    assert not ratio_scaling_check(est, 1.0)


def test_small_ball_sampler_must_keep_the_replicate_count():
    z0 = SpaceTimePoint(0.5, 0.5)
    with pytest.raises(EstimatorError, match="replicate counts"):
        small_ball(lambda r: _scaled_window(r, reps=1000 if r < 0.3 else 1500), z0, [0.4, 0.2], [2.0])


def test_phi_small_ball(flat):
    est = phi_small_ball(flat, Z0, [0.5, 0.3], lambda e: abs(math.log(e)))
    assert est.phi_log_ratio == pytest.approx(1.0)
    assert est.phi_log_bounded
    with pytest.raises(ConfigError):
        phi_small_ball(flat, Z0, [1.5], lambda e: 1.0)


# ── Chung ────────────────────────────────────────────────────────────────────

def test_chung_scale():
    assert chung_scale(np.array([0.5]))[0] == pytest.approx(2.0)


def test_chung_statistic_is_a_running_minimum(noisy):
    stat = chung_statistic(noisy, Z0, LADDER)
    assert np.all(np.diff(stat.values, axis=1) <= 0)
    assert stat.median == pytest.approx(float(np.median(stat.final)))
    assert stat.iqr >= 0
    assert len(stat.table()) == 2


def test_statistics_ignore_the_replicate_order():
    ens = _ensemble(1200, scale=0.05, seed=3)
    rng = np.random.default_rng(11)
    shuffled = ens.select(rng.permutation(ens.reps))
    head, shuffled_head = ens.select(np.arange(60)), ens.select(rng.permutation(60))

    np.testing.assert_array_equal(local_modulus(shuffled, Z0, LADDER).medians, local_modulus(ens, Z0, LADDER).medians)
    np.testing.assert_array_equal(uniform_modulus(shuffled_head, WHOLE, LADDER).medians,
                                  uniform_modulus(head, WHOLE, LADDER).medians)
    assert chung_statistic(shuffled, Z0, LADDER).median == chung_statistic(ens, Z0, LADDER).median
    np.testing.assert_array_equal(small_ball(shuffled, Z0, [0.5, 0.25], [1.0, 2.0]).table["p_hat"],
                                  small_ball(ens, Z0, [0.5, 0.25], [1.0, 2.0]).table["p_hat"])


# ── Moments, fits and constants ───────────────────────────────────────────────

def test_moment_growth():
    ens = _ensemble(2000, seed=1)
    table = moment_growth(ens, Z0, [1, 2, 4], bounded=True)
    assert list(table["k"]) == [1.0, 2.0, 4.0]
    assert table["norm"].iloc[1] == pytest.approx(1.0, abs=0.1)
    assert table["ratio_to_2"].iloc[1] == pytest.approx(1.0)
    assert np.all(np.diff(table["norm"]) > 0)


def test_moment_growth_guards(noisy):
    with pytest.raises(ConfigError, match="bounded"):
        moment_growth(noisy, Z0, [2], bounded=False)
    with pytest.raises(EstimatorError):
        moment_growth(noisy, Z0, [2, 12], bounded=True)


def test_fit_exponent_recovers_a_power_law():
    xs = np.logspace(0, 2, 6)
    fit = fit_exponent(xs, 3.0 * xs ** 2)
    assert fit.slope == pytest.approx(2.0)
    assert fit.r_squared == pytest.approx(1.0)
    assert fit.summary()["points"] == 6


def test_fit_exponent_guards():
    xs = np.logspace(0, 2, 6)
    with pytest.raises(EstimatorError, match="insufficient points"):
        fit_exponent(xs[:4], xs[:4])
    with pytest.raises(EstimatorError, match="insufficient span"):
        fit_exponent(np.linspace(1, 2, 6), np.linspace(1, 2, 6))
    with pytest.raises(EstimatorError, match="positive"):
        fit_exponent(xs, -xs)
    assert fit_exponent(np.linspace(1, 2, 6), np.logspace(0, 2, 6), span_axis="y").slope > 0


def test_bootstrap_median():
    degenerate = bootstrap_median(np.ones(10), seed=1)
    assert degenerate.note == "degenerate sample"
    est = bootstrap_median(np.random.default_rng(2).standard_normal(200), seed=1)
    assert est.low <= est.value <= est.high


def test_estimate_constants(noisy):
    constants = estimate_constants(7, local=local_modulus(noisy, Z0, LADDER),
                                   chung=chung_statistic(noisy, Z0, LADDER), slnd_min_ratio=0.3)
    assert set(constants.entries) == {"K0", "C2", "c2"}
    assert constants["c2"].value == 0.3
    assert list(constants.table().columns) == ["constant", "value", "low", "high", "note"]
