"""
The additive-noise field w: exact covariance oracle, exact-in-law sampler,
and the path containers shared by the solver, KPZ and estimator modules.

Covariance
----------
E[w(t,x) w(s,y)] = 1/2 int_{|t-s|}^{t+s} G_u(x, y) du. For u >= u* the
integral is summed exactly over the eigen-expansion; on [|t-s|, u*] the
kernel is replaced by its image expansion, which is exact to rounding at
those times and integrates in closed form. Under Robin conditions each wall
adds an erfcx term, integrated by Gauss-Legendre in sqrt(u). u* is the
smallest time at which the built modes resolve G to the tail tolerance.

Sampling
--------
w(t,x) = sum_n f_n(x) X_n(t) with independent Ornstein-Uhlenbeck
coefficients advanced exactly between grid times.
"""

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
import pandas as pd
from scipy import stats
from scipy.special import erfc, erfcx

from src.config import ORACLE
from src.errors import ConfigError, DomainError, NumericalError, OffGridError, OracleError
from src.rng import run_replicates, stream
from src.spectral import BCKind, EigenSystem, sup_norms

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Points, metric, balls
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpaceTimePoint:
    t: float
    x: float

    def __post_init__(self):
        if not (math.isfinite(self.t) and math.isfinite(self.x)):
            raise DomainError(f"non-finite point ({self.t}, {self.x})")
        if self.t < 0:
            raise DomainError(f"time must be >= 0, got t={self.t}")

    def check(self, length: float) -> "SpaceTimePoint":
        if not 0.0 <= self.x <= length:
            raise DomainError(f"x={self.x} outside [0, {length}]")
        return self


def rho(z1: SpaceTimePoint, z2: SpaceTimePoint) -> float:
    """Parabolic distance max(|t-s|^1/4, |x-y|^1/2)."""
    return max(abs(z1.t - z2.t) ** 0.25, abs(z1.x - z2.x) ** 0.5)


def rho_grid(dt, dx) -> np.ndarray:
    return np.maximum(np.abs(dt) ** 0.25, np.abs(dx) ** 0.5)


@dataclass(frozen=True)
class ParabolicBall:
    center: SpaceTimePoint
    radius: float
    punctured: bool = False

    def __post_init__(self):
        if not self.radius > 0:
            raise ConfigError(f"ball radius must be > 0, got {self.radius}")

    def contains(self, z: SpaceTimePoint, length: float) -> bool:
        if not 0.0 <= z.x <= length:
            return False
        d = rho(self.center, z)
        return d <= self.radius and (d > 0 or not self.punctured)

    def mask(self, times, xs) -> np.ndarray:
        """Membership over a (time x space) grid, shape (len(times), len(xs))."""
        d = rho_grid(np.asarray(times)[:, None] - self.center.t, np.asarray(xs)[None, :] - self.center.x)
        inside = d <= self.radius
        if self.punctured:
            inside &= d > 0
        return inside


# ---------------------------------------------------------------------------
# Covariance oracle
# ---------------------------------------------------------------------------

def _exp_integral(lam: np.ndarray, start: np.ndarray, span: np.ndarray) -> np.ndarray:
    """int_start^{start+span} exp(-lam u) du, with the lam = 0 limit."""
    zero = lam == 0
    safe = np.where(zero, 1.0, lam)
    val = np.exp(-safe * start) * (-np.expm1(-safe * span)) / safe
    return np.where(zero, span, val)


def _ou_variance(lam: np.ndarray, step: np.ndarray) -> np.ndarray:
    """(1 - exp(-2 lam step)) / (2 lam); `step` when lam = 0."""
    return _exp_integral(2.0 * lam, np.zeros_like(step), step)


def _gaussian_time_integral(u: np.ndarray, d: np.ndarray) -> np.ndarray:
    """int_0^u exp(-d^2/2s)/sqrt(2 pi s) ds."""
    u = np.asarray(u, dtype=float)
    d = np.abs(np.asarray(d, dtype=float))
    pos = u > 0
    safe = np.where(pos, u, 1.0)
    val = np.sqrt(2.0 * safe / math.pi) * np.exp(-d * d / (2.0 * safe)) - d * erfc(d / np.sqrt(2.0 * safe))
    return np.where(pos, val, 0.0)


_LEGENDRE_NODES, _LEGENDRE_WEIGHTS = leggauss(ORACLE["robin_splice_nodes"])


def _robin_image_integral(a: np.ndarray, b: np.ndarray, d: np.ndarray, gamma: float) -> np.ndarray:
    """int_a^b gamma erfcx(w) exp(-d^2/2u) du with w = (d - gamma u)/sqrt(2u).

    This is the Robin part of the half-line kernel,
    2 gamma int_0^inf exp(gamma z) p_u(d + z) dz, for the wall condition
    f' = -gamma f. Gauss-Legendre in v = sqrt(u) keeps the d = 0 case smooth.
    """
    if gamma == 0.0:
        return np.zeros_like(d)
    va, vb = np.sqrt(a), np.sqrt(b)
    half = 0.5 * (vb - va)
    v = va[:, None] + half[:, None] * (_LEGENDRE_NODES[None, :] + 1.0)
    dd = d[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(v > 0, (dd - gamma * v * v) / (math.sqrt(2.0) * v), np.inf)
        decay = np.where(v > 0, np.exp(-dd * dd / (2.0 * v * v)), 0.0)
    integrand = gamma * erfcx(w) * decay * 2.0 * v
    return half * (integrand @ _LEGENDRE_WEIGHTS)


@dataclass(frozen=True)
class CovarianceOracle:
    """Covariance of w under the first `modes` eigenpairs of `es`.

    short_time=None picks u* from the tail tolerance; short_time=0 gives the
    plain truncated series (the exact law of the N-mode sampler).
    """

    es: EigenSystem
    modes: int | None = None
    short_time: float | None = None
    tail_tolerance: float = ORACLE["tail_tolerance"]

    def __post_init__(self):
        modes = self.es.count if self.modes is None else int(self.modes)
        if not 1 <= modes <= self.es.count:
            raise ConfigError(f"oracle modes must be in 1..{self.es.count}, got {modes}")
        object.__setattr__(self, "modes", modes)
        if self.short_time is None:
            object.__setattr__(self, "short_time", self._resolved_time())
        elif not self.short_time >= 0:
            raise ConfigError(f"short_time must be >= 0, got {self.short_time}")

    def _resolved_time(self) -> float:
        lam_n = float(self.es.lambdas[self.modes - 1])
        if lam_n <= 0:
            return 0.0
        F = float(np.max(sup_norms(self.es)[: self.modes]))
        return max(math.log(F * F * self.modes / self.tail_tolerance), 0.0) / lam_n

    @property
    def length(self) -> float:
        return self.es.length

    @property
    def lambdas(self) -> np.ndarray:
        return self.es.lambdas[: self.modes]

    def basis(self, x) -> np.ndarray:
        return self.es.basis(x, modes=self.modes)

    def mode_weights(self, t: float, s: float) -> np.ndarray:
        """J_n(t, s) = exp(-lam |t-s|)(1 - exp(-2 lam (t^s))) / (2 lam), t^s when lam = 0."""
        if t < 0 or s < 0:
            raise DomainError(f"times must be >= 0, got t={t}, s={s}")
        tau = abs(t - s)
        m = min(t, s)
        lam = self.lambdas
        return np.exp(-lam * tau) * _ou_variance(lam, np.full_like(lam, m))

    def covariance(self, t1, x1, t2, x2) -> np.ndarray:
        """Elementwise E[w(t1,x1) w(t2,x2)] over broadcast inputs."""
        arrays = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (t1, x1, t2, x2)))
        shape = arrays[0].shape
        t1, x1, t2, x2 = (a.ravel() for a in arrays)
        if np.any(t1 < 0) or np.any(t2 < 0):
            raise DomainError("times must be >= 0")
        tau = np.abs(t1 - t2)
        sig = t1 + t2
        ustar = self.short_time

        lo = np.maximum(tau, ustar)
        span = np.maximum(sig - lo, 0.0)
        weights = _exp_integral(self.lambdas[:, None], lo[None, :], span[None, :])
        total = np.sum(self.basis(x1) * self.basis(x2) * weights, axis=0)
        if ustar > 0:
            total += self._image_integral(x1, x2, tau, np.maximum(np.minimum(sig, ustar), tau))
        return (0.5 * total).reshape(shape)

    def _image_integral(self, x1, x2, a, b) -> np.ndarray:
        L = self.length
        sign = -1.0 if self.es.bc.kind is BCKind.DIRICHLET else 1.0
        out = np.zeros_like(x1)
        for k in (-1, 0, 1):
            shift = 2.0 * k * L
            for d, s in ((x1 - x2 + shift, 1.0), (x1 + x2 + shift, sign)):
                out += s * (_gaussian_time_integral(b, d) - _gaussian_time_integral(a, d))
        if self.es.bc.kind is BCKind.ROBIN:
            # wall terms at x = 0 (f' = -alpha f) and x = L (f' = beta f in the reflected coordinate)
            out += _robin_image_integral(a, b, x1 + x2, self.es.bc.alpha)
            out += _robin_image_integral(a, b, 2.0 * L - x1 - x2, -self.es.bc.beta)
        return out

    def matrix(self, t1, x1, t2=None, x2=None) -> np.ndarray:
        """Covariance between two point lists, shape (len(t1), len(t2))."""
        t1, x1 = np.atleast_1d(t1).astype(float), np.atleast_1d(x1).astype(float)
        symmetric = t2 is None
        if symmetric:
            t2, x2 = t1, x1
        t2, x2 = np.atleast_1d(t2).astype(float), np.atleast_1d(x2).astype(float)
        out = np.empty((t1.size, t2.size))
        chunk = ORACLE["matrix_chunk"]
        for s in range(0, t1.size, chunk):
            rows = slice(s, s + chunk)
            out[rows] = self.covariance(t1[rows, None], x1[rows, None], t2[None, :], x2[None, :])
        if symmetric:
            out = 0.5 * (out + out.T)
        return out

    def variance(self, t, x) -> np.ndarray:
        return self.covariance(t, x, t, x)


def cov_w(oracle: CovarianceOracle, z1: SpaceTimePoint, z2: SpaceTimePoint) -> float:
    z1.check(oracle.length)
    z2.check(oracle.length)
    return float(oracle.covariance(z1.t, z1.x, z2.t, z2.x))


def var_increment(oracle: CovarianceOracle, z1: SpaceTimePoint, z2: SpaceTimePoint) -> float:
    """Var(w(z1) - w(z2)); roundoff negatives above -tolerance clip to 0."""
    z1.check(oracle.length)
    z2.check(oracle.length)
    return float(increment_variances(oracle, z1.t, z1.x, z2.t, z2.x))


def increment_variances(oracle: CovarianceOracle, t1, x1, t2, x2) -> np.ndarray:
    """Vectorized Var(w(t1,x1) - w(t2,x2))."""
    v = (oracle.covariance(t1, x1, t1, x1) + oracle.covariance(t2, x2, t2, x2)
         - 2.0 * oracle.covariance(t1, x1, t2, x2))
    tol = ORACLE["clip_tolerance"]
    if np.any(v < -tol):
        worst = float(np.min(v))
        raise OracleError(f"negative increment variance {worst:.3e} beyond tolerance {tol:g}")
    return np.maximum(v, 0.0)


def covariance_matrix(oracle: CovarianceOracle, points: Sequence[SpaceTimePoint]) -> np.ndarray:
    for z in points:
        z.check(oracle.length)
    return oracle.matrix([z.t for z in points], [z.x for z in points])


def default_sampling_modes(es: EigenSystem, target_variance: float,
                           rel_tol: float = ORACLE["omitted_variance"]) -> int:
    """Smallest N whose omitted variance sum_{n>N} sup|f_n|^2/(2 lam_n) is below rel_tol * target.

    Terms beyond the built count are bounded by F^2/(2 c count) with
    lam_n >= c n^2. Capped at the built count with a warning.
    """
    if not target_variance > 0:
        raise ConfigError(f"target variance must be > 0, got {target_variance}")
    sup2 = sup_norms(es) ** 2
    lam = es.lambdas
    n = np.arange(1, es.count + 1, dtype=float)
    pos = lam > 0
    c = float(np.min(lam[pos] / n[pos] ** 2))
    terms = np.where(pos, sup2 / (2.0 * np.where(pos, lam, 1.0)), np.inf)
    beyond = float(np.max(sup2)) / (2.0 * c * es.count)
    # omitted[N] = sum of terms N+1..count plus the analytic tail
    omitted = np.concatenate([np.cumsum(terms[::-1])[::-1], [0.0]]) + beyond
    budget = rel_tol * target_variance
    ok = np.nonzero(omitted[1:] < budget)[0]
    if ok.size == 0:
        logger.warning("omitted variance %.3g exceeds budget %.3g even at %d modes; using all built modes",
                       beyond, budget, es.count)
        return es.count
    return max(int(ok[0]) + 1, 1)


# ---------------------------------------------------------------------------
# Paths
# ---------------------------------------------------------------------------

def _check_grid(times, xs, length: float) -> tuple[np.ndarray, np.ndarray]:
    times = np.atleast_1d(np.asarray(times, dtype=float))
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    if times.size == 0 or xs.size == 0:
        raise ConfigError("time and space grids must be non-empty")
    if times[0] < 0 or np.any(np.diff(times) <= 0):
        raise ConfigError("time grid must start at >= 0 and be strictly increasing")
    if np.any(xs < 0) or np.any(xs > length):
        raise DomainError(f"space grid leaves [0, {length}]")
    return times, xs


def grid_index(grid: np.ndarray, value: float, label: str) -> int:
    tol = 1e-9 * max(1.0, abs(value))
    hits = np.nonzero(np.abs(grid - value) <= tol)[0]
    if hits.size == 0:
        raise OffGridError(f"{label}={value} is not a grid point")
    return int(hits[0])


@dataclass(frozen=True)
class FieldPath:
    """One realization on a (time x space) grid with the noise that produced it."""

    times: np.ndarray
    xs: np.ndarray
    values: np.ndarray
    noise_record: np.ndarray | None
    seed: int
    replicate: int = 0

    def __post_init__(self):
        if self.values.shape != (self.times.size, self.xs.size):
            raise ConfigError(f"values shape {self.values.shape} does not match grid "
                              f"({self.times.size}, {self.xs.size})")
        if not np.all(np.isfinite(self.values)):
            raise NumericalError(f"non-finite values in path (seed={self.seed}, replicate={self.replicate})")

    def at(self, z: SpaceTimePoint) -> float:
        return float(self.values[grid_index(self.times, z.t, "t"), grid_index(self.xs, z.x, "x")])


@dataclass(frozen=True)
class PathEnsemble:
    """Replicated paths on a shared grid; values shape (reps, len(times), len(xs)).

    `sigma_values` holds sigma(u) on the same grid for solver output and is
    None for Gaussian fields (sigma = 1).
    """

    times: np.ndarray
    xs: np.ndarray
    values: np.ndarray
    seed: int
    length: float
    kind: str = "w"
    sigma_values: np.ndarray | None = None
    replicates: np.ndarray | None = None

    @property
    def reps(self) -> int:
        return self.values.shape[0]

    @property
    def dt(self) -> float:
        return float(np.min(np.diff(self.times))) if self.times.size > 1 else math.inf

    @property
    def dx(self) -> float:
        return float(np.min(np.diff(self.xs))) if self.xs.size > 1 else math.inf

    @property
    def resolution(self) -> float:
        """Finest grid step in rho units."""
        return min(self.dt ** 0.25, self.dx ** 0.5)

    def index_of(self, z: SpaceTimePoint) -> tuple[int, int]:
        return grid_index(self.times, z.t, "t"), grid_index(self.xs, z.x, "x")

    def point(self, k: int, j: int) -> SpaceTimePoint:
        return SpaceTimePoint(float(self.times[k]), float(self.xs[j]))

    def sigma(self) -> np.ndarray:
        if self.sigma_values is None:
            return np.ones_like(self.values)
        return self.sigma_values

    def path(self, r: int) -> FieldPath:
        rep = int(self.replicates[r]) if self.replicates is not None else r
        return FieldPath(self.times, self.xs, self.values[r], None, self.seed, rep)

    def select(self, keep: np.ndarray) -> "PathEnsemble":
        keep = np.asarray(keep)
        reps = self.replicates if self.replicates is not None else np.arange(self.reps)
        return PathEnsemble(self.times, self.xs, self.values[keep], self.seed, self.length, self.kind,
                            None if self.sigma_values is None else self.sigma_values[keep], reps[keep])

    def subsample(self, time_stride: int = 1, space_stride: int = 1) -> "PathEnsemble":
        ts, xs = slice(None, None, time_stride), slice(None, None, space_stride)
        sig = None if self.sigma_values is None else self.sigma_values[:, ts, xs]
        return PathEnsemble(self.times[ts], self.xs[xs], self.values[:, ts, xs], self.seed, self.length,
                            self.kind, sig, self.replicates)

    def with_values(self, values: np.ndarray, kind: str, sigma_values: np.ndarray | None = None) -> "PathEnsemble":
        return PathEnsemble(self.times, self.xs, values, self.seed, self.length, kind, sigma_values, self.replicates)


# ---------------------------------------------------------------------------
# OU sampler
# ---------------------------------------------------------------------------

def _ou_chunk(lam: np.ndarray, B: np.ndarray, times: np.ndarray, seed: int,
              indices: np.ndarray, keep_noise: bool):
    T, N = times.size, lam.size
    steps = np.diff(np.concatenate([[0.0], times]))
    decay = np.exp(-lam[None, :] * steps[:, None])
    sd = np.sqrt(_ou_variance(lam[None, :], steps[:, None]))
    Z = np.stack([stream(seed, int(r)).standard_normal((T, N)) for r in indices])
    X = np.zeros((indices.size, N))
    out = np.empty((indices.size, T, B.shape[1]))
    for k in range(T):
        X = decay[k] * X + sd[k] * Z[:, k]
        out[:, k] = X @ B
    return out, (Z if keep_noise else None)


def _sampling_modes(oracle: CovarianceOracle, modes: int | None) -> int:
    modes = oracle.modes if modes is None else int(modes)
    if not 1 <= modes <= oracle.es.count:
        raise ConfigError(f"sampling modes must be in 1..{oracle.es.count}, got {modes}")
    return modes


def sample_w(oracle: CovarianceOracle, time_grid, space_grid, seed: int,
             replicate: int = 0, modes: int | None = None) -> FieldPath:
    """One path of w with its (step, mode) noise record."""
    times, xs = _check_grid(time_grid, space_grid, oracle.length)
    N = _sampling_modes(oracle, modes)
    values, noise = _ou_chunk(oracle.es.lambdas[:N], oracle.es.basis(xs, modes=N), times, seed,
                              np.array([replicate]), keep_noise=True)
    return FieldPath(times, xs, values[0], noise[0], seed, replicate)


def sample_w_ensemble(oracle: CovarianceOracle, time_grid, space_grid, reps: int, seed: int,
                      threads: int = 1, modes: int | None = None) -> PathEnsemble:
    """`reps` independent paths; replicate k is identical to sample_w(..., replicate=k)."""
    if reps < 1:
        raise ConfigError(f"reps must be >= 1, got {reps}")
    times, xs = _check_grid(time_grid, space_grid, oracle.length)
    N = _sampling_modes(oracle, modes)
    lam = oracle.es.lambdas[:N]
    B = oracle.es.basis(xs, modes=N)
    parts = run_replicates(lambda idx: _ou_chunk(lam, B, times, seed, idx, False)[0], reps, threads)
    return PathEnsemble(times, xs, np.concatenate(parts), seed, oracle.length, "w")


# ---------------------------------------------------------------------------
# Sampler law check
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LawCheck:
    table: pd.DataFrame         # one row per grid-point pair
    chi2_statistic: float
    chi2_pvalue: float
    level: float
    se_multiple: float

    @property
    def max_z(self) -> float:
        return float(self.table["z"].abs().max())

    @property
    def passed(self) -> bool:
        # two tests share the level
        return self.chi2_pvalue >= self.level / 2 and self.max_z <= self.se_multiple


def sampler_law_check(reference: CovarianceOracle, ens: PathEnsemble,
                      points: Sequence[tuple[int, int]], level: float = 0.01,
                      se_multiple: float = 3.0) -> LawCheck:
    """Empirical covariance at grid points (k, j) against `reference`.

    Pairwise entries are compared in standard errors; the whole matrix with
    the likelihood-ratio test for a known zero-mean covariance.
    """
    points = list(points)
    if len(points) < 2:
        raise ConfigError("sampler law check needs at least 2 grid points")
    ks = np.array([k for k, _ in points])
    js = np.array([j for _, j in points])
    X = ens.values[:, ks, js]
    n, p = X.shape
    S = X.T @ X / n
    sigma0 = reference.matrix(ens.times[ks], ens.xs[js])

    rows = []
    for a in range(p):
        for b in range(a, p):
            se = math.sqrt((sigma0[a, a] * sigma0[b, b] + sigma0[a, b] ** 2) / n)
            rows.append({
                "point_a": a, "point_b": b,
                "empirical": S[a, b], "oracle": sigma0[a, b], "se": se,
                "z": (S[a, b] - sigma0[a, b]) / se if se > 0 else 0.0,
            })
    M = np.linalg.solve(sigma0, S)
    sign, logdet = np.linalg.slogdet(M)
    if sign <= 0:
        raise OracleError("empirical covariance is singular at the chosen grid points")
    statistic = float(n * (np.trace(M) - logdet - p))
    pvalue = float(stats.chi2.sf(statistic, p * (p + 1) // 2))
    return LawCheck(pd.DataFrame(rows), statistic, pvalue, level, se_multiple)
