"""
Path statistics over stored ensembles: local and uniform moduli, small-ball
probabilities, Chung-type statistics, exceptional-point scans, moments and
log-log exponent fits.

All sups are finite maxima over grid points, so every statistic is
nondecreasing in the ball radius. Replicate order never matters.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np
import pandas as pd
from scipy import stats

from src.config import ESTIMATORS
from src.errors import ConfigError, EstimatorError
from src.gaussian_field import PathEnsemble, SpaceTimePoint, rho_grid
from src.rng import stream

logger = logging.getLogger(__name__)

AXES = ("both", "time", "space")


# ---------------------------------------------------------------------------
# Normalizers and ladders
# ---------------------------------------------------------------------------

def loglog(r) -> np.ndarray:
    """log log(max(1/r, e^e)), always >= 1."""
    return np.log(np.log(np.maximum(1.0 / np.asarray(r, dtype=float), ESTIMATORS["loglog_floor"])))


def log_guarded(r) -> np.ndarray:
    """log(max(1/r, e)), always >= 1."""
    return np.log(np.maximum(1.0 / np.asarray(r, dtype=float), ESTIMATORS["log_floor"]))


NORMALIZERS: dict[str, Callable] = {
    "loglog": lambda r: r * np.sqrt(loglog(r)),
    "log": lambda r: r * np.sqrt(log_guarded(r)),
}


def dyadic_ladder(eps0: float, rungs: int = ESTIMATORS["ladder_rungs"]) -> np.ndarray:
    """eps0 * 2^-k for k = 0..rungs-1."""
    if not eps0 > 0 or rungs < 1:
        raise ConfigError(f"ladder needs eps0 > 0 and rungs >= 1 (got {eps0}, {rungs})")
    return eps0 * 2.0 ** -np.arange(rungs)


def resolution(ens: PathEnsemble, axis: str = "both") -> float:
    if axis == "time":
        return ens.dt ** 0.25
    if axis == "space":
        return ens.dx ** 0.5
    return ens.resolution


def check_ladder(ladder, ens: PathEnsemble, axis: str = "both") -> np.ndarray:
    ladder = np.asarray(ladder, dtype=float)
    if axis not in AXES:
        raise ConfigError(f"axis must be one of {AXES}, got {axis!r}")
    if ladder.size == 0 or np.any(ladder <= 0) or np.any(np.diff(ladder) >= 0):
        raise ConfigError("ladder must be positive and strictly decreasing")
    floor = 2.0 * resolution(ens, axis)
    if ladder[-1] < floor:
        raise EstimatorError(f"ladder below resolution: smallest eps {ladder[-1]:.4g} < {floor:.4g} "
                             f"(two grid steps in rho units)")
    return ladder


def _axis_mask(ens: PathEnsemble, k0: int, j0: int, axis: str) -> np.ndarray:
    mask = np.ones((ens.times.size, ens.xs.size), dtype=bool)
    if axis == "time":
        mask[:, :] = False
        mask[:, j0] = True
    elif axis == "space":
        mask[:, :] = False
        mask[k0, :] = True
    return mask


def _ball_points(ens: PathEnsemble, z0: SpaceTimePoint, radius: float, axis: str,
                 punctured: bool) -> tuple[int, int, np.ndarray, np.ndarray, np.ndarray]:
    k0, j0 = ens.index_of(z0)
    d = rho_grid(ens.times[:, None] - ens.times[k0], ens.xs[None, :] - ens.xs[j0])
    inside = (d <= radius) & _axis_mask(ens, k0, j0, axis)
    if punctured:
        inside &= d > 0
    ks, js = np.nonzero(inside)
    return k0, j0, ks, js, d[ks, js]


def _running_sup(dist: np.ndarray, values: np.ndarray, ladder: np.ndarray) -> np.ndarray:
    """For each eps, max over columns with dist <= eps; 0 where the ball holds no points."""
    order = np.argsort(dist, kind="stable")
    dist = dist[order]
    out = np.zeros((values.shape[0], ladder.size))
    if dist.size == 0:
        return out
    cummax = np.maximum.accumulate(values[:, order], axis=1)
    idx = np.searchsorted(dist, ladder, side="right")
    has = idx > 0
    out[:, has] = cummax[:, idx[has] - 1]
    return out


def _sigma_at(ens: PathEnsemble, k0: int, j0: int) -> np.ndarray:
    return np.abs(ens.sigma()[:, k0, j0])


# ---------------------------------------------------------------------------
# Moduli
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModulusStatistic:
    kind: str                   # "local" or "uniform"
    normalizer: str
    ladder: np.ndarray
    sups: np.ndarray            # (reps, rungs)
    center: SpaceTimePoint | None = None
    rectangle: tuple[float, float, float, float] | None = None
    axis: str = "both"

    @property
    def medians(self) -> np.ndarray:
        return np.median(self.sups, axis=0)

    @property
    def iqr(self) -> np.ndarray:
        q75, q25 = np.percentile(self.sups, [75, 25], axis=0)
        return q75 - q25

    def table(self) -> pd.DataFrame:
        return pd.DataFrame({"epsilon": self.ladder, "median": self.medians, "iqr": self.iqr,
                             "mean": self.sups.mean(axis=0), "max": self.sups.max(axis=0)})


def local_modulus(ens: PathEnsemble, z0: SpaceTimePoint, ladder, normalizer: str = "loglog",
                  axis: str = "both", use_sigma: bool = False) -> ModulusStatistic:
    """Per path and eps: sup over B*(z0, eps) of |f(z) - f(z0)| / normalizer(rho(z, z0)).

    use_sigma divides by |sigma(u(z0))| taken from the ensemble.
    """
    ladder = check_ladder(ladder, ens, axis)
    if normalizer not in NORMALIZERS:
        raise ConfigError(f"unknown normalizer {normalizer!r}")
    k0, j0, ks, js, d = _ball_points(ens, z0, float(ladder[0]), axis, punctured=True)
    ratio = np.abs(ens.values[:, ks, js] - ens.values[:, k0, j0][:, None]) / NORMALIZERS[normalizer](d)
    if use_sigma:
        ratio = ratio / _sigma_at(ens, k0, j0)[:, None]
    return ModulusStatistic("local", normalizer, ladder, _running_sup(d, ratio, ladder), center=z0, axis=axis)


def _rectangle_slices(ens: PathEnsemble, rect) -> tuple[slice, slice]:
    a, T, c, d = rect
    kr = np.nonzero((ens.times >= a - 1e-12) & (ens.times <= T + 1e-12))[0]
    jr = np.nonzero((ens.xs >= c - 1e-12) & (ens.xs <= d + 1e-12))[0]
    if kr.size < 2 or jr.size < 2:
        raise EstimatorError(f"rectangle {rect} holds fewer than 2x2 grid points")
    return slice(kr[0], kr[-1] + 1), slice(jr[0], jr[-1] + 1)


def _uniform_steps(ens: PathEnsemble) -> tuple[float, float]:
    dts, dxs = np.diff(ens.times), np.diff(ens.xs)
    if not (np.allclose(dts, dts[0], rtol=1e-9) and np.allclose(dxs, dxs[0], rtol=1e-9)):
        raise EstimatorError("uniform statistics need an equispaced grid")
    return float(dts[0]), float(dxs[0])


def _pair_ratios(ens: PathEnsemble, rect, eps_max: float, normalizer: str,
                 use_sigma: bool) -> Iterator[tuple[float, np.ndarray, tuple[slice, slice]]]:
    """Yield (rho, ratio over base points, base slices) for every grid offset with rho <= eps_max.

    Both points stay inside `rect`; the sigma factor is taken at the base point.
    """
    ks, js = _rectangle_slices(ens, rect)
    V = ens.values[:, ks, js]
    S = np.abs(ens.sigma()[:, ks, js]) if use_sigma else None
    dt, dx = _uniform_steps(ens)
    Tn, Xn = V.shape[1:]
    Dk = min(int(math.floor(eps_max ** 4 / dt + 1e-9)), Tn - 1)
    Dj = min(int(math.floor(eps_max ** 2 / dx + 1e-9)), Xn - 1)
    norm = NORMALIZERS[normalizer]
    for dk in range(-Dk, Dk + 1):
        for dj in range(-Dj, Dj + 1):
            if dk == 0 and dj == 0:
                continue
            r = float(rho_grid(dk * dt, dj * dx))
            if r > eps_max:
                continue
            base = (slice(max(0, -dk), Tn - max(0, dk)), slice(max(0, -dj), Xn - max(0, dj)))
            other = (slice(max(0, dk), Tn + min(0, dk)), slice(max(0, dj), Xn + min(0, dj)))
            ratio = np.abs(V[:, other[0], other[1]] - V[:, base[0], base[1]]) / norm(r)
            if S is not None:
                ratio = ratio / S[:, base[0], base[1]]
            yield r, ratio, base


def uniform_modulus(ens: PathEnsemble, rect, ladder, normalizer: str = "log",
                    use_sigma: bool = False) -> ModulusStatistic:
    """Per path and eps: sup over grid pairs in `rect` with 0 < rho <= eps of the normalized increment."""
    ladder = check_ladder(ladder, ens)
    if normalizer not in NORMALIZERS:
        raise ConfigError(f"unknown normalizer {normalizer!r}")
    rhos, maxima = [], []
    for r, ratio, _ in _pair_ratios(ens, rect, float(ladder[0]), normalizer, use_sigma):
        rhos.append(r)
        maxima.append(ratio.max(axis=(1, 2)))
    if not rhos:
        sups = np.zeros((ens.reps, ladder.size))
    else:
        sups = _running_sup(np.array(rhos), np.stack(maxima, axis=1), ladder)
    return ModulusStatistic("uniform", normalizer, ladder, sups, rectangle=tuple(rect))


@dataclass(frozen=True)
class ExceptionalScan:
    thetas: np.ndarray
    fractions: np.ndarray           # mean over paths
    per_path: np.ndarray            # (reps, thetas)
    uniform_constants: np.ndarray   # per-path sup of the local ratios
    epsilon: float

    def table(self) -> pd.DataFrame:
        return pd.DataFrame({"theta": self.thetas, "fraction": self.fractions})


def exceptional_scan(ens: PathEnsemble, rect, theta_grid, epsilon: float,
                     use_sigma: bool = True) -> ExceptionalScan:
    """Fraction of grid points z in `rect` whose local sqrt-log ratio at scale eps is >= theta.

    The ratio at z is sup over z' in B*(z, eps) of |f(z') - f(z)| / (|sigma(u(z))| rho sqrt(log 1/rho)).
    """
    thetas = np.asarray(theta_grid, dtype=float)
    check_ladder([epsilon], ens)
    ks, js = _rectangle_slices(ens, rect)
    shape = (ens.reps, ks.stop - ks.start, js.stop - js.start)
    local = np.zeros(shape)
    for _, ratio, base in _pair_ratios(ens, rect, float(epsilon), "log", use_sigma):
        view = local[:, base[0], base[1]]
        np.maximum(view, ratio, out=view)
    flat = local.reshape(ens.reps, -1)
    per_path = np.stack([(flat >= th).mean(axis=1) for th in thetas], axis=1)
    return ExceptionalScan(thetas, per_path.mean(axis=0), per_path, flat.max(axis=1), float(epsilon))


# ---------------------------------------------------------------------------
# Small balls
# ---------------------------------------------------------------------------

def wilson_interval(hits: int, n: int, level: float = ESTIMATORS["wilson_level"]) -> tuple[float, float]:
    ci = stats.binomtest(int(hits), int(n)).proportion_ci(confidence_level=1.0 - level, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass(frozen=True)
class SmallBallEstimate:
    center: SpaceTimePoint
    table: pd.DataFrame             # radius, ratio, epsilon, hits, samples, p_hat, low, high, in_fit
    fit: "ExponentFit | None"
    level: float
    samples: int
    axis: str = "both"
    phi_log_ratio: float | None = None

    @property
    def excluded_rungs(self) -> int:
        return int((~self.table["in_fit"]).sum())

    @property
    def phi_log_bounded(self) -> bool | None:
        if self.phi_log_ratio is None:
            return None
        return self.phi_log_ratio <= ESTIMATORS["phi_log_bound"]


def ball_sups(ens: PathEnsemble, z0: SpaceTimePoint, radii: np.ndarray, axis: str,
              use_sigma: bool) -> np.ndarray:
    """sup over B(z0, r) of |f - f(z0)| per path and radius, shape (reps, radii)."""
    order = np.argsort(-radii)
    k0, j0, ks, js, d = _ball_points(ens, z0, float(radii[order[0]]), axis, punctured=False)
    diff = np.abs(ens.values[:, ks, js] - ens.values[:, k0, j0][:, None])
    if use_sigma:
        diff = diff / _sigma_at(ens, k0, j0)[:, None]
    sorted_radii = radii[order[::-1]]
    sups = _running_sup(d, diff, sorted_radii)
    out = np.empty_like(sups)
    out[:, order[::-1]] = sups
    return out


def _check_samples(ens: PathEnsemble, min_samples: int | None):
    need = ESTIMATORS["min_small_ball_samples"] if min_samples is None else min_samples
    if ens.reps < need:
        raise EstimatorError(f"small-ball estimates need at least {need} paths, have {ens.reps}")


def small_ball(source: "PathEnsemble | Callable[[float], PathEnsemble]", z0: SpaceTimePoint, radii, ratios,
               level: float = ESTIMATORS["wilson_level"], axis: str = "both", use_sigma: bool = False,
               min_samples: int | None = None) -> SmallBallEstimate:
    """p(r, eps) = P{sup over B(z0, r) |f - f(z0)| <= eps} at eps = r / ratio.

    `source` is either one ensemble covering the largest ball, or a sampler
    called once per radius that returns paths on that radius's own window.
    A sampler whose windows are the same grid in scaled coordinates
    (t - t0) / r^4, (x - x0) / r^2 makes the ratio-only scaling check
    independent of grid density. The fit regresses log(-log p) on log(r/eps)
    over rungs with 0 < p < 1.
    """
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    ratios = np.atleast_1d(np.asarray(ratios, dtype=float))
    if np.any(radii <= 0) or np.any(ratios <= 0):
        raise ConfigError("radii and ratios must be positive")
    if callable(source):
        columns = []
        for r in radii:
            ens = source(float(r))
            _check_samples(ens, min_samples)
            check_ladder([r], ens, axis)
            columns.append(ball_sups(ens, z0, np.array([r]), axis, use_sigma)[:, 0])
        if len({c.size for c in columns}) > 1:
            raise EstimatorError("the per-radius sampler returned different replicate counts")
        sups = np.stack(columns, axis=1)
    else:
        _check_samples(source, min_samples)
        check_ladder(np.sort(radii)[::-1][-1:], source, axis)
        sups = ball_sups(source, z0, radii, axis, use_sigma)
    n = sups.shape[0]
    rows = []
    for i, r in enumerate(radii):
        for q in ratios:
            eps = r / q
            hits = int(np.sum(sups[:, i] <= eps))
            low, high = wilson_interval(hits, n, level)
            rows.append({"radius": r, "ratio": q, "epsilon": eps, "hits": hits, "samples": n,
                         "p_hat": hits / n, "low": low, "high": high, "in_fit": 0 < hits < n})
    table = pd.DataFrame(rows)
    fit = _small_ball_fit(table)
    return SmallBallEstimate(z0, table, fit, level, n, axis)


def _small_ball_fit(table: pd.DataFrame) -> "ExponentFit | None":
    used = table[table["in_fit"]]
    if (~table["in_fit"]).any():
        logger.info("small-ball fit excludes %d rung(s) with p_hat in {0, 1}", int((~table["in_fit"]).sum()))
    try:
        return fit_exponent(used["ratio"].to_numpy(), -np.log(used["p_hat"].to_numpy()), span_axis="y")
    except EstimatorError as exc:
        logger.warning("small-ball exponent not fitted: %s", exc)
        return None


def ratio_scaling_check(est: SmallBallEstimate, ratio: float) -> bool:
    """True when all radii at the same r/eps give overlapping Wilson intervals."""
    rows = est.table[np.isclose(est.table["ratio"], ratio)]
    if len(rows) < 2:
        raise EstimatorError(f"ratio {ratio} was estimated at fewer than two radii")
    return bool(rows["low"].max() <= rows["high"].min())


def phi_small_ball(ens: PathEnsemble, z0: SpaceTimePoint, epsilons, phi: Callable,
                   level: float = ESTIMATORS["wilson_level"], use_sigma: bool = False,
                   min_samples: int | None = None) -> SmallBallEstimate:
    """P{sup over B(z0, eps / phi(eps)^(1/6)) |f - f(z0)| <= eps} per eps.

    `phi_log_ratio` is max phi(eps) / |log eps| over the ladder.
    """
    _check_samples(ens, min_samples)
    eps = np.atleast_1d(np.asarray(epsilons, dtype=float))
    if np.any(eps <= 0) or np.any(eps >= 1):
        raise ConfigError("phi small-ball thresholds must lie in (0, 1)")
    phis = np.asarray([float(phi(e)) for e in eps])
    if np.any(phis <= 0):
        raise ConfigError("phi must be positive on the ladder")
    radii = eps / phis ** (1.0 / 6.0)
    check_ladder(np.sort(radii)[::-1][-1:], ens)
    sups = ball_sups(ens, z0, radii, "both", use_sigma)
    n = ens.reps
    rows = []
    for i, (e, r, p) in enumerate(zip(eps, radii, phis)):
        hits = int(np.sum(sups[:, i] <= e))
        low, high = wilson_interval(hits, n, level)
        rows.append({"radius": r, "ratio": r / e, "epsilon": e, "phi": p, "hits": hits, "samples": n,
                     "p_hat": hits / n, "low": low, "high": high, "in_fit": 0 < hits < n})
    table = pd.DataFrame(rows)
    table["neg_log_p_over_phi"] = np.where(table["in_fit"], -np.log(table["p_hat"].clip(lower=1e-300)) / phis, np.nan)
    return SmallBallEstimate(z0, table, None, level, n, "both", float(np.max(phis / np.abs(np.log(eps)))))


# ---------------------------------------------------------------------------
# Chung statistic
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChungStatistic:
    ladder: np.ndarray
    values: np.ndarray      # (reps, rungs), running minimum along the ladder
    axis: str = "both"

    @property
    def final(self) -> np.ndarray:
        return self.values[:, -1]

    @property
    def median(self) -> float:
        return float(np.median(self.final))

    @property
    def iqr(self) -> float:
        q75, q25 = np.percentile(self.final, [75, 25])
        return float(q75 - q25)

    def table(self) -> pd.DataFrame:
        q75, q25 = np.percentile(self.values, [75, 25], axis=0)
        return pd.DataFrame({"epsilon": self.ladder, "median": np.median(self.values, axis=0), "iqr": q75 - q25})


def chung_scale(eps: np.ndarray, axis: str = "both") -> np.ndarray:
    """(loglog 1/eps)^(1/6)/eps; the slice variants use eps^4 in time and eps^2 in space."""
    if axis == "time":
        h = eps ** 4
        return (loglog(h) / h) ** 0.25
    if axis == "space":
        h = eps ** 2
        return (loglog(h) / h) ** 0.5
    return loglog(eps) ** (1.0 / 6.0) / eps


def chung_statistic(ens: PathEnsemble, z0: SpaceTimePoint, ladder, axis: str = "both",
                    use_sigma: bool = False) -> ChungStatistic:
    ladder = check_ladder(ladder, ens, axis)
    sups = ball_sups(ens, z0, ladder, axis, use_sigma)
    values = np.minimum.accumulate(sups * chung_scale(ladder, axis)[None, :], axis=1)
    return ChungStatistic(ladder, values, axis)


# ---------------------------------------------------------------------------
# Moments and fits
# ---------------------------------------------------------------------------

def moment_growth(ens: PathEnsemble, z: SpaceTimePoint, k_list: Sequence[float], bounded: bool) -> pd.DataFrame:
    """Empirical ||f(z)||_k with delta-method standard errors."""
    if not bounded:
        raise ConfigError("moment growth is defined for bounded-coefficient experiments only")
    k_list = [float(k) for k in k_list]
    if any(k <= 0 for k in k_list):
        raise ConfigError("moment orders must be positive")
    limit, large = ESTIMATORS["max_moment_small_sample"], ESTIMATORS["large_sample"]
    if max(k_list) > limit and ens.reps < large:
        raise EstimatorError(f"moments above {limit} need at least {large} paths, have {ens.reps}")
    k0, j0 = ens.index_of(z)
    x = np.abs(ens.values[:, k0, j0])
    rows = []
    for k in k_list:
        xk = x ** k
        m = float(np.mean(xk))
        norm = m ** (1.0 / k)
        se = norm / (k * m) * float(np.std(xk, ddof=1)) / math.sqrt(x.size) if m > 0 else 0.0
        rows.append({"k": k, "norm": norm, "se": se, "norm_over_sqrt_k": norm / math.sqrt(k)})
    table = pd.DataFrame(rows)
    two = table.loc[np.isclose(table["k"], 2.0), "norm"]
    table["ratio_to_2"] = table["norm"] / float(two.iloc[0]) if len(two) and float(two.iloc[0]) > 0 else np.nan
    return table


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    stderr: float
    r_squared: float
    log_x: np.ndarray = field(repr=False)
    log_y: np.ndarray = field(repr=False)

    @property
    def points(self) -> int:
        return self.log_x.size

    def summary(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "stderr": self.stderr,
                "r_squared": self.r_squared, "points": self.points}


def fit_exponent(xs, ys, min_points: int = ESTIMATORS["min_fit_points"],
                 min_decades: float = ESTIMATORS["min_fit_decades"], span_axis: str = "x") -> ExponentFit:
    """Least squares of log y on log x.

    The span requirement applies to x by default; span_axis="y" measures it
    on y instead (small-ball rungs vary little in r/eps but span decades in
    -log p).
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape:
        raise ConfigError("xs and ys must have the same shape")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise EstimatorError("exponent fits need positive data")
    if xs.size < min_points:
        raise EstimatorError(f"insufficient points for a fit: {xs.size} < {min_points}")
    lx, ly = np.log(xs), np.log(ys)
    spanned = ly if span_axis == "y" else lx
    decades = (spanned.max() - spanned.min()) / math.log(10.0)
    if decades < min_decades:
        raise EstimatorError(f"insufficient span for a fit: {decades:.2f} < {min_decades} decade(s)")
    res = stats.linregress(lx, ly)
    return ExponentFit(float(res.slope), float(res.intercept), float(res.stderr), float(res.rvalue ** 2), lx, ly)


# ---------------------------------------------------------------------------
# Constants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConstantEstimate:
    value: float
    low: float
    high: float
    note: str = ""


@dataclass(frozen=True)
class EstimatedConstants:
    entries: dict[str, ConstantEstimate]

    def __getitem__(self, name: str) -> ConstantEstimate:
        return self.entries[name]

    def table(self) -> pd.DataFrame:
        return pd.DataFrame([{"constant": k, "value": v.value, "low": v.low, "high": v.high, "note": v.note}
                             for k, v in self.entries.items()])


def bootstrap_median(values: np.ndarray, seed: int) -> ConstantEstimate:
    values = np.asarray(values, dtype=float)
    med = float(np.median(values))
    if values.size < 2 or np.all(values == values[0]):
        return ConstantEstimate(med, med, med, "degenerate sample")
    res = stats.bootstrap((values,), np.median, confidence_level=ESTIMATORS["confidence_level"],
                          n_resamples=ESTIMATORS["bootstrap_resamples"], method="percentile",
                          random_state=stream(seed, 0))
    ci = res.confidence_interval
    return ConstantEstimate(med, float(ci.low), float(ci.high), "bootstrap median")


def estimate_constants(seed: int, local: ModulusStatistic | None = None,
                       uniform: ModulusStatistic | None = None, chung: ChungStatistic | None = None,
                       small: SmallBallEstimate | None = None, slnd_min_ratio: float | None = None,
                       linearization: ExponentFit | None = None) -> EstimatedConstants:
    """Empirical stand-ins for the limit constants, each with an interval.

    K0, K and C2 come from the smallest rung of the respective statistic;
    c0 and c1 bracket -log p / (r/eps)^6 over the small-ball rungs; zeta is
    the fitted linearization-error exponent.
    """
    entries: dict[str, ConstantEstimate] = {}
    if local is not None:
        entries["K0"] = bootstrap_median(local.sups[:, -1], seed)
    if uniform is not None:
        entries["K"] = bootstrap_median(uniform.sups[:, -1], seed)
    if chung is not None:
        entries["C2"] = bootstrap_median(chung.final, seed)
    if small is not None:
        used = small.table[small.table["in_fit"]]
        if len(used):
            q6 = used["ratio"].to_numpy() ** 6
            central = -np.log(used["p_hat"].to_numpy()) / q6
            lower = -np.log(used["high"].to_numpy()) / q6
            upper = -np.log(np.maximum(used["low"].to_numpy(), 1e-300)) / q6
            entries["c0"] = ConstantEstimate(float(central.min()), float(lower.min()), float(upper.min()),
                                             "min over rungs, Wilson bounds")
            entries["c1"] = ConstantEstimate(float(central.max()), float(lower.max()), float(upper.max()),
                                             "max over rungs, Wilson bounds")
    if slnd_min_ratio is not None:
        entries["c2"] = ConstantEstimate(slnd_min_ratio, slnd_min_ratio, slnd_min_ratio, "scan minimum")
    if linearization is not None:
        half = 1.96 * linearization.stderr
        entries["zeta"] = ConstantEstimate(linearization.slope, linearization.slope - half,
                                           linearization.slope + half, "fitted exponent +- 1.96 SE")
    return EstimatedConstants(entries)
