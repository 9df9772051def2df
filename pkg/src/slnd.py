"""
Conditional variances of w given finitely many observations, and scans of
their ratio to the nearest-point parabolic distance squared.
"""

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import pandas as pd
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from src.config import SLND
from src.errors import ConditioningError, ConfigError
from src.gaussian_field import CovarianceOracle, SpaceTimePoint, increment_variances, rho_grid
from src.rng import run_replicates, stream
from src.spectral import BCKind

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConditioningSet:
    points: tuple[SpaceTimePoint, ...]
    jitter: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        if self.jitter < 0:
            raise ConfigError(f"jitter must be >= 0, got {self.jitter}")
        if len(self.points) > SLND["max_points"]:
            raise ConfigError(f"conditioning set has {len(self.points)} points, cap is {SLND['max_points']}")
        if len(self.points) > 1:
            d = rho_grid(self.ts[:, None] - self.ts[None, :], self.xs[:, None] - self.xs[None, :])
            np.fill_diagonal(d, np.inf)
            if np.min(d) <= SLND["distinct_rho"]:
                i, j = np.unravel_index(int(np.argmin(d)), d.shape)
                raise ConfigError(f"conditioning points {i} and {j} coincide (rho={d[i, j]:.3g})")

    @property
    def ts(self) -> np.ndarray:
        return np.array([z.t for z in self.points], dtype=float)

    @property
    def xs(self) -> np.ndarray:
        return np.array([z.x for z in self.points], dtype=float)

    def __len__(self) -> int:
        return len(self.points)

    def extend(self, z: SpaceTimePoint) -> "ConditioningSet":
        return ConditioningSet(self.points + (z,), self.jitter)


@dataclass(frozen=True)
class ConditionalVariance:
    value: float
    jitter: float
    condition: float


def conditional_variance_report(oracle: CovarianceOracle, target: SpaceTimePoint,
                                cond: ConditioningSet) -> ConditionalVariance:
    target.check(oracle.length)
    for z in cond.points:
        z.check(oracle.length)
    var = float(oracle.variance(target.t, target.x))
    if len(cond) == 0:
        return ConditionalVariance(var, 0.0, 1.0)

    sigma = oracle.matrix(cond.ts, cond.xs)
    c = oracle.covariance(target.t, target.x, cond.ts, cond.xs)
    ladder = sorted({cond.jitter, *(j for j in SLND["jitter_ladder"] if j >= cond.jitter)})
    for jitter in ladder:
        try:
            factor = cho_factor(sigma + jitter * np.eye(len(cond)), lower=True)
        except LinAlgError:
            continue
        if jitter > cond.jitter:
            logger.warning("conditioning matrix needed jitter %.0e (m=%d)", jitter, len(cond))
        value = var - float(c @ cho_solve(factor, c))
        if value < -SLND["negative_tolerance"]:
            raise ConditioningError(f"conditional variance {value:.3e} is negative beyond tolerance",
                                    condition=float(np.linalg.cond(sigma)))
        return ConditionalVariance(max(value, 0.0), jitter, float(np.linalg.cond(sigma)))
    condition = float(np.linalg.cond(sigma))
    raise ConditioningError(f"conditioning matrix singular after jitter {ladder[-1]:g} "
                            f"(condition estimate {condition:.3e})", condition=condition)


def conditional_variance(oracle: CovarianceOracle, target: SpaceTimePoint, cond: ConditioningSet) -> float:
    """Var(w(target) | w(z_1), ..., w(z_m))."""
    return conditional_variance_report(oracle, target, cond).value


def projection_bound(oracle: CovarianceOracle, target: SpaceTimePoint, cond: ConditioningSet) -> float:
    """min_j Var(w(target) - w(z_j)); an upper bound for the conditional variance."""
    if len(cond) == 0:
        return float(oracle.variance(target.t, target.x))
    return float(np.min(increment_variances(oracle, target.t, target.x, cond.ts, cond.xs)))


# ---------------------------------------------------------------------------
# Ratio scan
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScanConfig:
    """Random conditioning configurations inside [a, T] x [c, d]."""

    interior: tuple[float, float, float, float] = SLND["interior"]
    max_m: int = SLND["max_m"]
    include_boundary: bool = False
    strict_interior: bool = True

    def __post_init__(self):
        a, T, c, d = self.interior
        if not (0 < a < T and c < d):
            raise ConfigError(f"interior must satisfy 0 < a < T and c < d, got {self.interior}")
        if self.max_m < 1:
            raise ConfigError(f"max_m must be >= 1, got {self.max_m}")

    def validate(self, bc_kind: BCKind, length: float):
        a, T, c, d = self.interior
        if c < 0 or d > length:
            raise ConfigError(f"interior [c, d]=[{c}, {d}] leaves [0, {length}]")
        if bc_kind is BCKind.ROBIN and self.strict_interior and (self.include_boundary or c <= 0 or d >= length):
            raise ConfigError("Robin scans are interior-only; drop include_boundary or strict_interior")

    def space_range(self, length: float) -> tuple[float, float]:
        return (0.0, length) if self.include_boundary else self.interior[2:]


@dataclass(frozen=True)
class ScanReport:
    table: pd.DataFrame

    @property
    def min_ratio(self) -> float:
        return float(self.table["ratio"].min())

    @property
    def max_ratio(self) -> float:
        return float(self.table["ratio"].max())

    @property
    def spread(self) -> float:
        return self.max_ratio / self.min_ratio if self.min_ratio > 0 else math.inf


def boundary_term(oracle: CovarianceOracle, x: float) -> float:
    """f_1(x) for Dirichlet/Neumann; no boundary factor (inf) for Robin."""
    if oracle.es.bc.kind is BCKind.ROBIN:
        return math.inf
    return float(oracle.es.eval_mode(1, x)[0])


def _scan_trial(oracle: CovarianceOracle, cfg: ScanConfig, seed: int, trial: int,
                target: SpaceTimePoint | None) -> dict:
    rng = stream(seed, trial)
    a, T, _, _ = cfg.interior
    lo, hi = cfg.space_range(oracle.length)
    m = int(rng.integers(1, cfg.max_m + 1))
    ts = rng.uniform(a, T, m)
    xs = rng.uniform(lo, hi, m)
    if target is None:
        target = SpaceTimePoint(float(rng.uniform(a, T)), float(rng.uniform(lo, hi)))
    cond = ConditioningSet(tuple(SpaceTimePoint(float(t), float(x)) for t, x in zip(ts, xs)))
    report = conditional_variance_report(oracle, target, cond)
    min_rho2 = float(np.min(rho_grid(ts - target.t, xs - target.x) ** 2))
    scale = min(min_rho2, math.sqrt(target.t), boundary_term(oracle, target.x))
    return {
        "trial": trial, "m": m, "t": target.t, "x": target.x,
        "min_rho2": min_rho2, "scale": scale, "cond_var": report.value, "jitter": report.jitter,
        "ratio": report.value / scale if scale > 0 else math.inf,
    }


def slnd_ratio_scan(oracle: CovarianceOracle, cfg: ScanConfig, trials: int, seed: int,
                    targets: Sequence[SpaceTimePoint] | None = None, threads: int = 1) -> ScanReport:
    """Conditional variance over (min rho^2 ^ sqrt(t) ^ f_1-term) across random trials.

    Trial k draws from its own stream (seed, k); `targets`, when given, are
    cycled instead of drawing a target per trial.
    """
    if trials < 1:
        raise ConfigError(f"trials must be >= 1, got {trials}")
    cfg.validate(oracle.es.bc.kind, oracle.length)
    targets = list(targets) if targets else None

    def work(indices):
        return [_scan_trial(oracle, cfg, seed, int(k), targets[int(k) % len(targets)] if targets else None)
                for k in indices]

    rows = [row for part in run_replicates(work, trials, threads, chunk_size=16) for row in part]
    return ScanReport(pd.DataFrame(rows))
