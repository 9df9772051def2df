"""
Heat kernel G_t(x, y) = sum_n exp(-lambda_n t) f_n(x) f_n(y) with an
adaptive truncation, and the deterministic flow of initial data.
"""

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from src.config import KERNEL
from src.errors import ConfigError, DomainError, KernelTruncationError
from src.spectral import EigenSystem, sup_norms

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class InitialData:
    """u_0 with its expansion coefficients in the eigenbasis."""

    function: Callable
    coefficients: np.ndarray
    bounded: bool = True
    lipschitz_near_target: bool = False

    @classmethod
    def from_function(cls, es: EigenSystem, function: Callable, *, bounded: bool = True,
                      lipschitz_near_target: bool = False) -> "InitialData":
        return cls(function=function, coefficients=es.expand_function(function),
                   bounded=bounded, lipschitz_near_target=lipschitz_near_target)

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        values = np.asarray(self.function(x), dtype=float)
        return np.broadcast_to(values, x.shape).copy()


@dataclass(frozen=True)
class KernelEvaluator:
    es: EigenSystem
    tail_tolerance: float = KERNEL["tail_tolerance"]

    def __post_init__(self):
        if not 0 < self.tail_tolerance < 1:
            raise ConfigError(f"tail tolerance must be in (0, 1), got {self.tail_tolerance}")

    @cached_property
    def sup_bound(self) -> float:
        """F = max_n sup_x |f_n(x)| over the built modes."""
        return float(np.max(sup_norms(self.es, KERNEL["sup_grid_per_mode"])))

    @cached_property
    def growth_constant(self) -> float:
        """c with lambda_n >= c n^2 over the positive eigenvalues."""
        n = np.arange(1, self.es.count + 1, dtype=float)
        pos = self.es.lambdas > 0
        if not pos.any():
            raise ConfigError("eigen-system has no positive eigenvalues")
        return float(np.min(self.es.lambdas[pos] / n[pos] ** 2))

    def modes_needed(self, t: float) -> int:
        """N(t) = ceil(sqrt(log(F^2 N / tol) / (c t)))."""
        _check_time(t)
        F = self.sup_bound
        log_term = max(math.log(F * F * self.es.count / self.tail_tolerance), 0.0)
        needed = int(math.ceil(math.sqrt(log_term / (self.growth_constant * t))))
        nonpositive = int(np.sum(self.es.lambdas <= 0))
        return max(needed, nonpositive + 1, 1)

    def eval_kernel(self, t: float, x, y) -> np.ndarray:
        """G_t on the outer product of x and y, shape (len(x), len(y))."""
        N = self.modes_needed(t)
        if N > self.es.count:
            raise KernelTruncationError(
                f"heat kernel at t={t:g} needs {N} modes for tolerance {self.tail_tolerance:g}, "
                f"only {self.es.count} built",
                required_modes=N,
            )
        Bx = self.es.basis(x, modes=N)
        By = self.es.basis(y, modes=N)
        decay = np.exp(-self.es.lambdas[:N] * t)
        return (Bx * decay[:, None]).T @ By

    def flow_u0(self, u0: InitialData, t: float, x) -> np.ndarray:
        """(G_t u_0)(x); u_0(x) itself at t = 0."""
        if t == 0:
            return u0(x)
        N = min(self.modes_needed(t), self.es.count, len(u0.coefficients))
        decay = np.exp(-self.es.lambdas[:N] * t)
        return (u0.coefficients[:N] * decay) @ self.es.basis(x, modes=N)

    def flow_grid(self, u0: InitialData, times, x) -> np.ndarray:
        """Flow on a time-space grid, shape (len(times), len(x))."""
        return np.stack([self.flow_u0(u0, float(t), x) for t in np.atleast_1d(times)])

    def chapman_kolmogorov_error(self, t: float, s: float, x: float, y: float) -> float:
        """|int G_t(x, z) G_s(z, y) dz - G_{t+s}(x, y)|."""
        nodes, weights = self.es.quadrature
        left = self.eval_kernel(t, [x], nodes)[0]
        right = self.eval_kernel(s, nodes, [y])[:, 0]
        combined = float(np.sum(weights * left * right))
        direct = float(self.eval_kernel(t + s, [x], [y])[0, 0])
        return abs(combined - direct)


def _check_time(t: float):
    if not math.isfinite(t) or t <= 0:
        raise DomainError(f"heat kernel time must be > 0, got t={t}")


def kernel_bound(t, distance) -> np.ndarray:
    """min(t^-1/2, t / |x - y|^3)."""
    t = np.asarray(t, dtype=float)
    d3 = np.abs(np.asarray(distance, dtype=float)) ** 3
    with np.errstate(divide="ignore"):
        far = np.where(d3 > 0, t / np.where(d3 > 0, d3, 1.0), np.inf)
    return np.minimum(t ** -0.5, far)


@dataclass(frozen=True)
class KernelBoundFit:
    constant: float        # sup |G_t(x, y)| / min(t^-1/2, t/|x-y|^3)
    argmax_t: float
    argmax_x: float
    argmax_y: float


def kernel_bound_fit(ke: KernelEvaluator, times, xs) -> KernelBoundFit:
    """Smallest constant C with |G_t(x, y)| <= C min(t^-1/2, t/|x-y|^3) on the grid."""
    xs = np.asarray(xs, dtype=float)
    best = (-1.0, math.nan, math.nan, math.nan)
    dist = xs[:, None] - xs[None, :]
    for t in np.atleast_1d(times):
        G = ke.eval_kernel(float(t), xs, xs)
        ratio = np.abs(G) / kernel_bound(t, dist)
        i, j = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
        if ratio[i, j] > best[0]:
            best = (float(ratio[i, j]), float(t), float(xs[i]), float(xs[j]))
    logger.debug("kernel bound constant %.4g at t=%.3g", best[0], best[1])
    return KernelBoundFit(*best)


def flow_lipschitz_constants(ke: KernelEvaluator, u0: InitialData, times, xs) -> dict[str, float]:
    """Largest difference quotients of G_t u_0 in x and in t on the grid."""
    times = np.asarray(times, dtype=float)
    xs = np.asarray(xs, dtype=float)
    flow = ke.flow_grid(u0, times, xs)
    out = {"space": math.nan, "time": math.nan}
    if xs.size > 1:
        out["space"] = float(np.max(np.abs(np.diff(flow, axis=1)) / np.diff(xs)[None, :]))
    if times.size > 1:
        out["time"] = float(np.max(np.abs(np.diff(flow, axis=0)) / np.diff(times)[:, None]))
    return out
