"""
Eigen-systems of -1/2 d^2/dx^2 on (0, L).

Dirichlet and Neumann systems are closed form. Robin systems come from a
sign-change scan of the characteristic function followed by bisection.
Every other module works in the basis built here.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
import pandas as pd
from scipy.optimize import bisect

from src.config import NEGATIVE_MODE_POLICIES, SPECTRAL
from src.errors import ConfigError, DomainError, SpectralError

logger = logging.getLogger(__name__)

# Mode kinds
TRIG = 0
LINEAR = 1
HYPERBOLIC = 2


class BCKind(str, Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"
    ROBIN = "robin"


@dataclass(frozen=True)
class BoundaryCondition:
    """Boundary condition on (0, L).

    Robin convention: f'(0) + alpha f(0) = 0 and f'(L) + beta f(L) = 0.
    alpha and beta are ignored (stored as 0) for Dirichlet and Neumann.
    """

    kind: BCKind
    length: float = 1.0
    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        try:
            kind = BCKind(self.kind)
        except ValueError:
            raise ConfigError(f"unknown boundary condition {self.kind!r}") from None
        object.__setattr__(self, "kind", kind)
        if not math.isfinite(self.length) or self.length <= 0:
            raise ConfigError(f"invalid length L={self.length}: must be finite and > 0")
        if kind is BCKind.ROBIN:
            if not (math.isfinite(self.alpha) and math.isfinite(self.beta)):
                raise ConfigError(f"Robin parameters must be finite (alpha={self.alpha}, beta={self.beta})")
        else:
            object.__setattr__(self, "alpha", 0.0)
            object.__setattr__(self, "beta", 0.0)

    @property
    def has_zero_mode(self) -> bool:
        if self.kind is BCKind.NEUMANN:
            return True
        if self.kind is BCKind.DIRICHLET:
            return False
        a, b, L = self.alpha, self.beta, self.length
        return abs(a * (1.0 + b * L) - b) < SPECTRAL["zero_mode_tolerance"]

    def describe(self) -> str:
        if self.kind is BCKind.ROBIN:
            return f"robin(alpha={self.alpha:g}, beta={self.beta:g}, L={self.length:g})"
        return f"{self.kind.value}(L={self.length:g})"


@dataclass(frozen=True)
class EigenSystem:
    """First `count` eigenpairs, ascending in lambda.

    `frequencies` holds eta for trigonometric modes, kappa for hyperbolic
    (negative-eigenvalue) modes and 0 for the linear zero mode. Mode n is
    f_n = norm_factors[n] * e_n with e_n(0) = 1 for Neumann/Robin, so
    f_n(0+) > 0 fixes the sign.
    """

    bc: BoundaryCondition
    lambdas: np.ndarray
    frequencies: np.ndarray
    kinds: np.ndarray
    norm_factors: np.ndarray
    quad_order: int

    @property
    def count(self) -> int:
        return len(self.lambdas)

    @property
    def length(self) -> float:
        return self.bc.length

    @property
    def negative_count(self) -> int:
        return int(np.sum(self.kinds == HYPERBOLIC))

    @cached_property
    def quadrature(self) -> tuple[np.ndarray, np.ndarray]:
        """Gauss-Legendre nodes and weights mapped to [0, L]."""
        nodes, weights = leggauss(self.quad_order)
        half = 0.5 * self.length
        return half * (nodes + 1.0), half * weights

    def basis(self, x, derivative: int = 0, modes: int | None = None,
              check_domain: bool = True) -> np.ndarray:
        """Values (or derivatives up to 2) of f_1..f_m at x; shape (m, len(x))."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        L = self.length
        if check_domain:
            slack = 1e-12 * L
            if np.any(~np.isfinite(x)) or np.any(x < -slack) or np.any(x > L + slack):
                bad = x[(x < -slack) | (x > L + slack) | ~np.isfinite(x)][0]
                raise DomainError(f"x={bad} outside [0, {L}]")
            x = np.clip(x, 0.0, L)
        if derivative not in (0, 1, 2):
            raise ConfigError(f"derivative must be 0, 1 or 2, got {derivative}")
        m = self.count if modes is None else min(int(modes), self.count)
        k = self.frequencies[:m, None]
        kinds = self.kinds[:m]
        xx = x[None, :]
        out = np.empty((m, x.size))

        if self.bc.kind is BCKind.DIRICHLET:
            s, c = np.sin(k * xx), np.cos(k * xx)
            out[:] = (s, k * c, -k * k * s)[derivative]
            return self.norm_factors[:m, None] * out

        a = self.bc.alpha
        trig = kinds == TRIG
        if trig.any():
            kt = k[trig]
            s, c = np.sin(kt * xx), np.cos(kt * xx)
            e = c - (a / kt) * s
            out[trig] = (e, -kt * s - a * c, -kt * kt * e)[derivative]
        lin = kinds == LINEAR
        if lin.any():
            vals = (1.0 - a * xx, np.full_like(xx, -a), np.zeros_like(xx))[derivative]
            out[lin] = np.broadcast_to(vals, (int(lin.sum()), x.size))
        hyp = kinds == HYPERBOLIC
        if hyp.any():
            kh = k[hyp]
            sh, ch = np.sinh(kh * xx), np.cosh(kh * xx)
            e = ch - (a / kh) * sh
            out[hyp] = (e, kh * sh - a * ch, kh * kh * e)[derivative]
        return self.norm_factors[:m, None] * out

    def eval_mode(self, n: int, x) -> np.ndarray:
        """f_n(x) for the 1-based mode index n."""
        if not 1 <= n <= self.count:
            raise ConfigError(f"mode index {n} outside 1..{self.count}")
        return self.basis(x)[n - 1]

    def eval_mode_derivative(self, n: int, x, order: int = 1) -> np.ndarray:
        if not 1 <= n <= self.count:
            raise ConfigError(f"mode index {n} outside 1..{self.count}")
        return self.basis(x, derivative=order)[n - 1]

    def gram(self, modes: int | None = None) -> np.ndarray:
        nodes, weights = self.quadrature
        B = self.basis(nodes, modes=modes)
        return (B * weights) @ B.T

    def orthonormality_error(self, modes: int | None = None) -> float:
        G = self.gram(modes)
        return float(np.max(np.abs(G - np.eye(len(G)))))

    def expand_function(self, phi: Callable, modes: int | None = None) -> np.ndarray:
        """Coefficients <phi, f_n> by quadrature."""
        nodes, weights = self.quadrature
        values = _evaluate(phi, nodes)
        return self.basis(nodes, modes=modes) @ (weights * values)

    def synthesize(self, coefficients: np.ndarray, x) -> np.ndarray:
        coefficients = np.asarray(coefficients, dtype=float)
        return coefficients @ self.basis(x, modes=coefficients.shape[-1])

    def boundary_residuals(self) -> np.ndarray:
        """Per-mode residual of the boundary conditions, shape (count, 2)."""
        L = self.length
        ends = np.array([0.0, L])
        vals = self.basis(ends)
        if self.bc.kind is BCKind.DIRICHLET:
            return np.abs(vals)
        d1 = self.basis(ends, derivative=1)
        left = d1[:, 0] + self.bc.alpha * vals[:, 0]
        right = d1[:, 1] + self.bc.beta * vals[:, 1]
        return np.abs(np.stack([left, right], axis=1))


def _evaluate(phi: Callable, x: np.ndarray) -> np.ndarray:
    try:
        values = np.asarray(phi(x), dtype=float)
    except (TypeError, ValueError):
        values = None
    if values is None or values.shape != x.shape:
        values = np.asarray(np.vectorize(phi, otypes=[float])(x), dtype=float)
    if not np.all(np.isfinite(values)):
        raise ConfigError("function returned non-finite values on the quadrature grid")
    return values


# ---------------------------------------------------------------------------
# Robin roots
# ---------------------------------------------------------------------------

def characteristic(eta, alpha: float, beta: float, length: float):
    """g(eta) = sin(eta L)(eta^2 + alpha beta) - cos(eta L)(beta - alpha) eta."""
    eta = np.asarray(eta, dtype=float)
    return np.sin(eta * length) * (eta ** 2 + alpha * beta) - np.cos(eta * length) * (beta - alpha) * eta


def characteristic_scale(eta, alpha: float, beta: float):
    eta = np.abs(np.asarray(eta, dtype=float))
    return 1.0 + eta ** 2 + abs(alpha * beta) + abs(beta - alpha) * eta


def characteristic_derivative(eta, alpha: float, beta: float, length: float):
    """dg/d eta, used to bound the residual a float64 root can reach."""
    eta = np.asarray(eta, dtype=float)
    s, c = np.sin(eta * length), np.cos(eta * length)
    return (length * c * (eta ** 2 + alpha * beta) + 2.0 * eta * s
            + length * s * (beta - alpha) * eta - c * (beta - alpha))


def root_residual_bound(eta, alpha: float, beta: float, length: float):
    """Largest |g(eta)| accepted at a computed root.

    A root rounded to float64 is off by about eps * eta, which moves g by
    eps * eta * |g'(eta)|; at large eta that floor exceeds any fixed
    tolerance on the scaled residual.
    """
    eta = np.abs(np.asarray(eta, dtype=float))
    scale = characteristic_scale(eta, alpha, beta)
    slope = np.abs(characteristic_derivative(eta, alpha, beta, length))
    floor = SPECTRAL["root_conditioning"] * np.finfo(float).eps * (eta * slope + scale)
    return SPECTRAL["root_tolerance"] * scale + floor


def hyperbolic_characteristic(kappa, alpha: float, beta: float, length: float):
    """tanh(kappa L)(alpha beta - kappa^2) - (beta - alpha) kappa; roots give lambda = -kappa^2/2."""
    kappa = np.asarray(kappa, dtype=float)
    return np.tanh(kappa * length) * (alpha * beta - kappa ** 2) - (beta - alpha) * kappa


def _bracketed_roots(func: Callable, grid: np.ndarray) -> list[float]:
    values = func(grid)
    roots = [float(x) for x in grid[:-1][values[:-1] == 0.0]]
    for i in np.nonzero(values[:-1] * values[1:] < 0.0)[0]:
        roots.append(bisect(func, grid[i], grid[i + 1], xtol=1e-15,
                            rtol=4 * np.finfo(float).eps, maxiter=200))
    return roots


def _dedupe(roots: list[float], label: str) -> np.ndarray:
    tol = SPECTRAL["dedupe_tolerance"]
    kept: list[float] = []
    for r in sorted(roots):
        if kept and r - kept[-1] < tol:
            logger.warning("merged near-duplicate %s roots %.12g and %.12g", label, kept[-1], r)
            continue
        kept.append(r)
    return np.array(kept)


def hyperbolic_roots(alpha: float, beta: float, length: float) -> np.ndarray:
    """Positive kappa roots; none lie beyond 2(|alpha| + |beta|) + 2/L."""
    kmax = 2.0 * (abs(alpha) + abs(beta)) + 2.0 / length
    grid = np.linspace(1e-6, kmax, SPECTRAL["hyperbolic_scan_points"])
    func = lambda k: hyperbolic_characteristic(k, alpha, beta, length)
    return _dedupe(_bracketed_roots(func, grid), "hyperbolic")


def robin_trig_roots(alpha: float, beta: float, length: float, count: int) -> np.ndarray:
    """First `count` positive roots of the characteristic function."""
    if count <= 0:
        return np.empty(0)
    L = length
    step = min(math.pi / (4.0 * L), SPECTRAL["scan_step"])
    upper = math.pi * (count + 3) / L
    func = lambda e: characteristic(e, alpha, beta, L)
    roots = np.empty(0)
    for _ in range(SPECTRAL["scan_extensions"]):
        n_steps = int(math.ceil(upper / step))
        grid = np.concatenate([[1e-3 * step], step * np.arange(1, n_steps + 1)])
        roots = _dedupe(_bracketed_roots(func, grid), "Robin")
        roots = roots[roots > 1e-6]
        if len(roots) > 1:
            gaps = np.diff(roots)
            worst = int(np.argmax(gaps))
            if gaps[worst] > 2.0 * math.pi / L + 2.0 * step:
                raise SpectralError(
                    f"failed to bracket a Robin root between eta={roots[worst]:.10g} "
                    f"and eta={roots[worst + 1]:.10g} ({_describe(alpha, beta, L)})"
                )
        if len(roots) >= count:
            break
        logger.debug("Robin scan found %d/%d roots on [0, %.4g], extending", len(roots), count, upper)
        upper *= 2.0
    else:
        raise SpectralError(
            f"found only {len(roots)} of {count} Robin roots on [0, {upper / 2.0:.6g}] "
            f"({_describe(alpha, beta, L)})"
        )
    roots = roots[:count]
    residual = np.abs(func(roots))
    excess = residual / root_residual_bound(roots, alpha, beta, L)
    if np.any(excess > 1.0):
        worst = int(np.argmax(excess))
        raise SpectralError(
            f"Robin root eta={roots[worst]:.12g} has residual {residual[worst]:.3e}, "
            f"{excess[worst]:.3g}x the float64 bound "
            f"({_describe(alpha, beta, L)})"
        )
    return roots


def _describe(alpha: float, beta: float, length: float) -> str:
    return f"alpha={alpha:g}, beta={beta:g}, L={length:g}"


def _trig_norm_sq(eta: np.ndarray, a: float, L: float) -> np.ndarray:
    return (0.5 * L * (1.0 + a ** 2 / eta ** 2)
            + np.sin(2.0 * eta * L) * (eta ** 2 - a ** 2) / (4.0 * eta ** 3)
            - a * np.sin(eta * L) ** 2 / eta ** 2)


def _hyperbolic_norm_sq(kappa: np.ndarray, a: float, L: float) -> np.ndarray:
    return (0.5 * L * (1.0 - a ** 2 / kappa ** 2)
            + np.sinh(2.0 * kappa * L) / (4.0 * kappa) * (1.0 + a ** 2 / kappa ** 2)
            - a * np.sinh(kappa * L) ** 2 / kappa ** 2)


def _linear_norm_sq(a: float, L: float) -> float:
    return L - a * L ** 2 + a ** 2 * L ** 3 / 3.0


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------

def build_eigensystem(bc: BoundaryCondition, count: int, quad_order: int | None = None,
                      negative_modes: str = "reject") -> EigenSystem:
    """Build the first `count` eigenpairs of -1/2 d^2/dx^2 under `bc`.

    Robin conditions whose quadratic form is indefinite have negative
    eigenvalues. With negative_modes="reject" those raise SpectralError;
    "include" keeps them as hyperbolic modes at the front of the system.
    """
    count = int(count)
    if count < 1:
        raise ConfigError(f"mode count must be >= 1, got {count}")
    if negative_modes not in NEGATIVE_MODE_POLICIES:
        raise ConfigError(f"negative_modes must be one of {NEGATIVE_MODE_POLICIES}, got {negative_modes!r}")
    if quad_order is None:
        quad_order = max(SPECTRAL["quad_nodes_per_mode"] * count, SPECTRAL["min_quad_order"])
    if quad_order < 2:
        raise ConfigError(f"quadrature order must be >= 2, got {quad_order}")

    L = bc.length
    n = np.arange(1, count + 1, dtype=float)
    if bc.kind is BCKind.DIRICHLET:
        eta = math.pi * n / L
        kinds = np.full(count, TRIG, dtype=np.int8)
        norms = np.full(count, math.sqrt(2.0 / L))
        lambdas = 0.5 * eta ** 2
    elif bc.kind is BCKind.NEUMANN:
        eta = math.pi * (n - 1.0) / L
        kinds = np.full(count, TRIG, dtype=np.int8)
        kinds[0] = LINEAR
        norms = np.full(count, math.sqrt(2.0 / L))
        norms[0] = math.sqrt(1.0 / L)
        lambdas = 0.5 * eta ** 2
    else:
        lambdas, eta, kinds, norms = _robin_modes(bc, count, negative_modes)

    es = EigenSystem(bc=bc, lambdas=lambdas, frequencies=eta, kinds=kinds,
                     norm_factors=norms, quad_order=int(quad_order))
    logger.debug("built %s with %d modes (lambda_1=%.6g, lambda_N=%.6g)",
                 bc.describe(), count, lambdas[0], lambdas[-1])
    return es


def _robin_modes(bc: BoundaryCondition, count: int, negative_modes: str):
    a, b, L = bc.alpha, bc.beta, bc.length
    kappa = hyperbolic_roots(a, b, L)
    if kappa.size and negative_modes == "reject":
        raise SpectralError(
            f"Robin condition {_describe(a, b, L)} has {kappa.size} negative eigenvalue(s) "
            f"(lambda={', '.join(f'{-0.5 * k * k:.6g}' for k in kappa)}); "
            "pass negative_modes='include' to keep them"
        )
    zero = bc.has_zero_mode
    n_trig = max(count - kappa.size - int(zero), 0)
    eta = robin_trig_roots(a, b, L, n_trig)

    freqs = np.concatenate([kappa, [0.0] if zero else [], eta])
    kinds = np.concatenate([
        np.full(kappa.size, HYPERBOLIC), [LINEAR] if zero else [], np.full(eta.size, TRIG)
    ]).astype(np.int8)
    lambdas = np.concatenate([-0.5 * kappa ** 2, [0.0] if zero else [], 0.5 * eta ** 2])
    norm_sq = np.concatenate([
        _hyperbolic_norm_sq(kappa, a, L), [_linear_norm_sq(a, L)] if zero else [], _trig_norm_sq(eta, a, L)
    ])
    if np.any(norm_sq <= 0):
        raise SpectralError(f"non-positive mode norm for {_describe(a, b, L)}")

    order = np.argsort(lambdas, kind="stable")[:count]
    return lambdas[order], freqs[order], kinds[order], 1.0 / np.sqrt(norm_sq[order])


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AsymptoticsReport:
    """Robin roots against eta_n ~ pi (n0 + n) / L."""

    n0: int
    indices: np.ndarray
    residuals: np.ndarray       # n |eta_n - pi (n0 + n) / L|
    norm_ratios: np.ndarray     # ||e_n||^-2 L / 2, tends to 1

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residuals)) if self.residuals.size else 0.0


def robin_asymptotics_check(es: EigenSystem) -> AsymptoticsReport:
    if es.bc.kind is not BCKind.ROBIN:
        raise ConfigError("asymptotics check is Robin-only")
    need = SPECTRAL["min_asymptotic_modes"]
    if es.count < need:
        raise ConfigError(f"asymptotics check needs at least {need} modes, have {es.count}")
    L = es.length
    n = np.arange(1, es.count + 1)
    keep = es.kinds != HYPERBOLIC
    n, eta = n[keep], es.frequencies[keep]
    shift = eta * L / math.pi - n
    top = max(len(shift) // 4, 1)
    n0 = int(round(float(np.mean(shift[-top:]))))
    residuals = n * np.abs(eta - math.pi * (n0 + n) / L)
    ratios = es.norm_factors[keep] ** 2 * L / 2.0
    return AsymptoticsReport(n0=n0, indices=n, residuals=residuals, norm_ratios=ratios)


def growth_constants(es: EigenSystem) -> dict[str, float]:
    """Observed constants in lambda_n ~ n^2 and lambda_{n+1} - lambda_n ~ n."""
    n = np.arange(1, es.count + 1, dtype=float)
    pos = es.lambdas > 0
    ratio = es.lambdas[pos] / n[pos] ** 2
    gaps = np.diff(es.lambdas) / n[:-1] if es.count > 1 else np.empty(0)
    return {
        "lower": float(ratio.min()) if ratio.size else float("nan"),
        "upper": float(ratio.max()) if ratio.size else float("nan"),
        "gap_lower": float(gaps[1:].min()) if gaps.size > 1 else float("nan"),
        "gap_upper": float(gaps.max()) if gaps.size else float("nan"),
    }


def sup_norms(es: EigenSystem, points_per_mode: int = 8) -> np.ndarray:
    grid = np.linspace(0.0, es.length, points_per_mode * es.count + 1)
    return np.max(np.abs(es.basis(grid)), axis=1)


def eigen_table(es: EigenSystem):
    """One row per mode, for CSV output."""
    res = es.boundary_residuals()
    return pd.DataFrame({
        "n": np.arange(1, es.count + 1),
        "lambda": es.lambdas,
        "eta": es.frequencies,
        "kind": np.array(["trig", "linear", "hyperbolic"])[es.kinds],
        "norm_factor": es.norm_factors,
        "sup_norm": sup_norms(es),
        "bc_residual_left": res[:, 0],
        "bc_residual_right": res[:, 1],
    })
