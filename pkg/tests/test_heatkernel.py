import math

import numpy as np
import pytest

from src.errors import ConfigError, DomainError, KernelTruncationError
from src.heatkernel import (
    InitialData,
    KernelEvaluator,
    flow_lipschitz_constants,
    kernel_bound,
    kernel_bound_fit,
)
from src.spectral import BoundaryCondition, build_eigensystem


@pytest.fixture(scope="module")
def dirichlet():
    return KernelEvaluator(build_eigensystem(BoundaryCondition("dirichlet"), 256))


@pytest.fixture(scope="module")
def neumann():
    return KernelEvaluator(build_eigensystem(BoundaryCondition("neumann"), 256))


def test_kernel_is_symmetric(dirichlet):
    xs = np.linspace(0.0, 1.0, 17)
    G = dirichlet.eval_kernel(0.05, xs, xs)
    np.testing.assert_allclose(G, G.T, atol=1e-12)


def test_dirichlet_kernel_vanishes_on_the_boundary(dirichlet):
    G = dirichlet.eval_kernel(0.05, [0.0, 1.0], np.linspace(0.0, 1.0, 9))
    assert np.max(np.abs(G)) < 1e-12


def test_neumann_kernel_conserves_mass(neumann):
    nodes, weights = neumann.es.quadrature
    G = neumann.eval_kernel(0.05, [0.1, 0.5, 0.9], nodes)
    np.testing.assert_allclose(G @ weights, 1.0, atol=1e-9)


@pytest.mark.parametrize("t", [0.005, 0.05, 0.5])
def test_dirichlet_kernel_is_nonnegative(dirichlet, t):
    xs = np.linspace(0.0, 1.0, 41)
    assert dirichlet.eval_kernel(t, xs, xs).min() >= -1e-8


def test_neumann_flow_keeps_a_constant(neumann):
    u0 = InitialData.from_function(neumann.es, lambda x: np.full_like(x, 3.0))
    xs = np.linspace(0.0, 1.0, 11)
    np.testing.assert_allclose(neumann.flow_u0(u0, 0.4, xs), 3.0, atol=1e-10)


def test_chapman_kolmogorov(dirichlet):
    assert dirichlet.chapman_kolmogorov_error(0.05, 0.05, 0.3, 0.6) < 1e-8


def test_truncation_grows_as_time_shrinks(dirichlet):
    assert dirichlet.modes_needed(1e-3) > dirichlet.modes_needed(0.1) >= 1


def test_too_few_modes_raise_with_the_required_count():
    ke = KernelEvaluator(build_eigensystem(BoundaryCondition("dirichlet"), 4))
    with pytest.raises(KernelTruncationError) as info:
        ke.eval_kernel(1e-4, [0.5], [0.5])
    assert info.value.required_modes > 4


def test_invalid_times_and_tolerances(dirichlet):
    with pytest.raises(DomainError):
        dirichlet.eval_kernel(0.0, [0.5], [0.5])
    with pytest.raises(ConfigError):
        KernelEvaluator(dirichlet.es, tail_tolerance=2.0)


def test_flow_of_an_eigenmode_decays_exponentially(dirichlet):
    es = dirichlet.es
    u0 = InitialData.from_function(es, lambda x: es.eval_mode(1, x))
    xs = np.linspace(0.0, 1.0, 11)
    expected = math.exp(-0.5 * math.pi ** 2 * 0.1) * es.eval_mode(1, xs)
    np.testing.assert_allclose(dirichlet.flow_u0(u0, 0.1, xs), expected, atol=1e-8)
    np.testing.assert_allclose(dirichlet.flow_u0(u0, 0.0, xs), es.eval_mode(1, xs))


def test_flow_grid_shape(dirichlet):
    u0 = InitialData.from_function(dirichlet.es, lambda x: np.sin(np.pi * x) ** 2)
    assert dirichlet.flow_grid(u0, [0.1, 0.2, 0.3], np.linspace(0, 1, 5)).shape == (3, 5)


def test_kernel_bound_on_the_diagonal_and_far_away():
    assert kernel_bound(0.04, 0.0) == pytest.approx(5.0)
    assert kernel_bound(0.04, 1.0) == pytest.approx(0.04)


def test_kernel_bound_fit_is_of_order_one(dirichlet):
    fit = kernel_bound_fit(dirichlet, [0.01, 0.05, 0.2], np.linspace(0.0, 1.0, 33))
    assert 0.2 < fit.constant < 1.0
    assert fit.argmax_t in (0.01, 0.05, 0.2)


def test_flow_lipschitz_constants(dirichlet):
    es = dirichlet.es
    u0 = InitialData.from_function(es, lambda x: es.eval_mode(1, x))
    out = flow_lipschitz_constants(dirichlet, u0, [0.1, 0.2], np.linspace(0.0, 1.0, 65))
    assert 0 < out["space"] <= math.sqrt(2.0) * math.pi
    assert out["time"] > 0
    single = flow_lipschitz_constants(dirichlet, u0, [0.1], np.linspace(0.0, 1.0, 65))
    assert math.isnan(single["time"])
