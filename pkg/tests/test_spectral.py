"""Eigen-systems of -1/2 d^2/dx^2 under Dirichlet, Neumann and Robin conditions."""

import math

import numpy as np
import pytest
from scipy import optimize

from src.errors import ConfigError, DomainError, SpectralError
from src.spectral import (
    HYPERBOLIC,
    LINEAR,
    TRIG,
    BCKind,
    BoundaryCondition,
    build_eigensystem,
    characteristic,
    characteristic_derivative,
    characteristic_scale,
    eigen_table,
    growth_constants,
    robin_asymptotics_check,
    root_residual_bound,
)

ROBIN_POSITIVE = BoundaryCondition("robin", alpha=-0.5, beta=1.0)


def test_dirichlet_on_pi_has_half_squares():
    es = build_eigensystem(BoundaryCondition("dirichlet", length=math.pi), 4)
    np.testing.assert_allclose(es.lambdas, [0.5, 2.0, 4.5, 8.0], atol=1e-12)


def test_neumann_starts_with_constant_mode():
    es = build_eigensystem(BoundaryCondition("neumann"), 8)
    assert es.lambdas[0] == 0.0
    assert es.kinds[0] == LINEAR
    np.testing.assert_allclose(es.eval_mode(1, [0.0, 0.3, 1.0]), 1.0)


def test_robin_zero_coefficients_reproduce_neumann():
    neumann = build_eigensystem(BoundaryCondition("neumann"), 32)
    robin = build_eigensystem(BoundaryCondition("robin", alpha=0.0, beta=0.0), 32)
    np.testing.assert_allclose(robin.lambdas, neumann.lambdas, atol=1e-10)


@pytest.mark.parametrize("kind", ["dirichlet", "neumann"])
def test_classical_bases_are_orthonormal(kind):
    es = build_eigensystem(BoundaryCondition(kind), 16)
    assert es.orthonormality_error() < 1e-10


def test_robin_basis_is_orthonormal_and_satisfies_boundary_conditions():
    es = build_eigensystem(ROBIN_POSITIVE, 24)
    assert es.negative_count == 0
    assert np.all(np.diff(es.lambdas) > 0)
    assert es.orthonormality_error() < 1e-8
    assert np.max(es.boundary_residuals()) < 1e-8


def test_robin_roots_have_small_scaled_residual():
    es = build_eigensystem(ROBIN_POSITIVE, 16)
    eta = es.frequencies
    residual = np.abs(characteristic(eta, -0.5, 1.0, 1.0)) / characteristic_scale(eta, -0.5, 1.0)
    assert residual.max() < 1e-12


@pytest.mark.parametrize("alpha, beta", [(-0.5, 1.0), (0.0, 0.0)])
def test_robin_roots_at_large_mode_counts(alpha, beta):
    # at eta ~ 4096 pi a float64 root cannot reach a 1e-12 scaled residual
    es = build_eigensystem(BoundaryCondition("robin", alpha=alpha, beta=beta), 4096)
    assert es.count == 4096
    assert np.all(np.diff(es.lambdas) > 0)
    eta = es.frequencies[es.kinds == TRIG]
    residual = np.abs(characteristic(eta, alpha, beta, 1.0))
    assert np.all(residual <= root_residual_bound(eta, alpha, beta, 1.0))
    # the bound stays tight: a root off by 1e-9 would fail it
    assert np.all(np.abs(characteristic(eta[-10:] + 1e-9, alpha, beta, 1.0))
                  > root_residual_bound(eta[-10:], alpha, beta, 1.0))


def test_robin_zero_coefficients_match_neumann_at_large_mode_counts():
    neumann = build_eigensystem(BoundaryCondition("neumann"), 4096)
    robin = build_eigensystem(BoundaryCondition("robin", alpha=0.0, beta=0.0), 4096)
    np.testing.assert_allclose(robin.lambdas[1:], neumann.lambdas[1:], rtol=1e-10)
    assert robin.lambdas[0] == 0.0


def test_characteristic_derivative_matches_difference_quotient():
    eta = np.linspace(0.3, 40.0, 50)
    h = 1e-6
    numeric = (characteristic(eta + h, 1.0, 2.0, 1.3) - characteristic(eta - h, 1.0, 2.0, 1.3)) / (2 * h)
    np.testing.assert_allclose(characteristic_derivative(eta, 1.0, 2.0, 1.3), numeric, rtol=1e-6, atol=1e-6)


def test_negative_robin_modes_rejected_by_default():
    with pytest.raises(SpectralError, match="negative eigenvalue"):
        build_eigensystem(BoundaryCondition("robin", alpha=1.0, beta=2.0), 8)


def test_negative_robin_modes_included_on_request():
    es = build_eigensystem(BoundaryCondition("robin", alpha=1.0, beta=2.0), 8, negative_modes="include")
    assert es.negative_count == 1
    assert es.kinds[0] == HYPERBOLIC
    assert es.lambdas[0] < 0 < es.lambdas[1]
    assert es.orthonormality_error() < 1e-8


@pytest.mark.parametrize("bc", [
    BoundaryCondition("dirichlet"),
    BoundaryCondition("neumann"),
    ROBIN_POSITIVE,
    BoundaryCondition("robin", alpha=1.0, beta=2.0),
], ids=["dirichlet", "neumann", "robin-positive", "robin-negative-mode"])
def test_modes_solve_the_eigenvalue_equation(bc):
    es = build_eigensystem(bc, 64, negative_modes="include")
    x = np.linspace(0.0, 1.0, 201)
    f = es.basis(x)
    residual = np.abs(-0.5 * es.basis(x, derivative=2) - es.lambdas[:, None] * f)
    scale = (1.0 + np.abs(es.lambdas)) * np.max(np.abs(f), axis=1)
    assert np.all(residual.max(axis=1) <= 1e-10 * scale)


def test_robin_roots_match_an_independent_scan():
    alpha, beta = 1.0, 2.0

    def right_wall(eta):
        # e(x) = cos(eta x) - (alpha / eta) sin(eta x) meets the left condition; test the right one
        s, c = np.sin(eta), np.cos(eta)
        return -eta * s - alpha * c + beta * (c - alpha / eta * s)

    grid = np.arange(1e-3, 22 * math.pi, 1e-4)
    values = right_wall(grid)
    flips = np.nonzero(np.sign(values[:-1]) != np.sign(values[1:]))[0]
    scanned = np.array([optimize.brentq(right_wall, grid[i], grid[i + 1], xtol=1e-14) for i in flips[:20]])

    es = build_eigensystem(BoundaryCondition("robin", alpha=alpha, beta=beta), 24, negative_modes="include")
    eta = es.frequencies[es.kinds == TRIG][:20]
    np.testing.assert_allclose(eta, scanned, rtol=1e-10)


@pytest.mark.parametrize("bc", [
    BoundaryCondition("dirichlet"),
    BoundaryCondition("neumann"),
    ROBIN_POSITIVE,
], ids=["dirichlet", "neumann", "robin"])
def test_bump_reconstruction_improves_with_the_mode_count(bc):
    def bump(x):
        z = (np.asarray(x, dtype=float) - 0.5) / 0.4
        inside = np.abs(z) < 1.0
        out = np.zeros_like(z)
        out[inside] = np.exp(-1.0 / (1.0 - z[inside] ** 2))
        return out

    es = build_eigensystem(bc, 64, quad_order=512)
    coeffs = es.expand_function(bump)
    x = np.linspace(0.0, 1.0, 401)
    errors = [np.max(np.abs(es.synthesize(coeffs[:n], x) - bump(x))) for n in (8, 16, 32, 64)]
    assert np.all(np.diff(errors) < 0)
    assert errors[-1] < 1e-3


def test_zero_mode_condition():
    assert BoundaryCondition("robin", alpha=0.5, beta=1.0).has_zero_mode
    assert not ROBIN_POSITIVE.has_zero_mode
    assert BoundaryCondition("neumann").has_zero_mode


def test_classical_conditions_drop_robin_coefficients():
    bc = BoundaryCondition("dirichlet", alpha=3.0, beta=4.0)
    assert bc.kind is BCKind.DIRICHLET
    assert (bc.alpha, bc.beta) == (0.0, 0.0)


@pytest.mark.parametrize("kwargs", [
    {"kind": "periodic"},
    {"kind": "dirichlet", "length": 0.0},
    {"kind": "robin", "alpha": float("nan")},
])
def test_invalid_boundary_conditions(kwargs):
    with pytest.raises(ConfigError):
        BoundaryCondition(**kwargs)


def test_invalid_build_arguments():
    bc = BoundaryCondition("dirichlet")
    with pytest.raises(ConfigError):
        build_eigensystem(bc, 0)
    with pytest.raises(ConfigError):
        build_eigensystem(bc, 4, negative_modes="ignore")


def test_basis_rejects_points_outside_interval():
    es = build_eigensystem(BoundaryCondition("dirichlet"), 4)
    with pytest.raises(DomainError):
        es.basis([0.5, 1.5])
    with pytest.raises(ConfigError):
        es.eval_mode(5, 0.5)


def test_expand_function_recovers_a_mode():
    es = build_eigensystem(BoundaryCondition("dirichlet"), 8)
    coeffs = es.expand_function(lambda x: es.eval_mode(3, x))
    expected = np.zeros(8)
    expected[2] = 1.0
    np.testing.assert_allclose(coeffs, expected, atol=1e-10)


def test_dirichlet_growth_constants_are_exact():
    es = build_eigensystem(BoundaryCondition("dirichlet"), 10)
    growth = growth_constants(es)
    assert growth["lower"] == pytest.approx(math.pi ** 2 / 2)
    assert growth["upper"] == pytest.approx(math.pi ** 2 / 2)


def test_robin_asymptotics():
    es = build_eigensystem(ROBIN_POSITIVE, 32)
    report = robin_asymptotics_check(es)
    assert report.max_residual < 5.0
    assert abs(report.norm_ratios[-1] - 1.0) < 0.05


def test_asymptotics_check_is_robin_only():
    with pytest.raises(ConfigError):
        robin_asymptotics_check(build_eigensystem(BoundaryCondition("dirichlet"), 32))


def test_eigen_table_layout():
    table = eigen_table(build_eigensystem(ROBIN_POSITIVE, 6))
    assert list(table.columns) == ["n", "lambda", "eta", "kind", "norm_factor", "sup_norm",
                                   "bc_residual_left", "bc_residual_right"]
    assert len(table) == 6
    assert set(table["kind"]) == {"trig"}
