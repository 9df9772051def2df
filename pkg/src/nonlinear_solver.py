"""
Pseudo-spectral exponential-Euler solver for du = 1/2 u'' dt + b(u) dt + sigma(u) dW,
run on the same noise as the linear field w (b = 0, sigma = 1, w(0) = 0).

One step from coefficients a_n at cell centres x_j:
    u_j = sum_n a_n f_n(x_j)
    F_j = b(u_j) dt + sigma(u_j) W_j,   W_j ~ N(0, dt/dx)
    a_n <- exp(-lambda_n dt) (a_n + sum_j f_n(x_j) F_j dx)
b and sigma are evaluated at the start of the step.
"""

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable

import numpy as np
import pandas as pd

from src.config import DIFFUSION_PRESETS, DRIFT_PRESETS, SCHEME
from src.errors import ConfigError, SchemeDivergenceError
from src.gaussian_field import FieldPath, PathEnsemble, SpaceTimePoint, grid_index, rho_grid
from src.heatkernel import InitialData
from src.rng import run_replicates, stream
from src.spectral import EigenSystem

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Coefficients
# ---------------------------------------------------------------------------

def check_lipschitz(func: Callable, constant: float, label: str,
                    pairs: int = SCHEME["lipschitz_pairs"], span: float = SCHEME["lipschitz_span"]):
    """Reject `constant` if some sampled pair violates |f(x) - f(y)| <= constant |x - y|."""
    rng = stream(0, 0)
    x = rng.uniform(-span, span, pairs)
    y = rng.uniform(-span, span, pairs)
    lhs = np.abs(np.asarray(func(x), dtype=float) - np.asarray(func(y), dtype=float))
    rhs = constant * np.abs(x - y) * (1.0 + 1e-9) + 1e-12
    if np.any(lhs > rhs):
        i = int(np.argmax(lhs - rhs))
        raise ConfigError(f"{label} violates declared Lipschitz constant {constant:g} "
                          f"at ({x[i]:.4g}, {y[i]:.4g})")


@dataclass(frozen=True)
class Coefficients:
    b: Callable
    sigma: Callable
    b_lipschitz: float
    sigma_lipschitz: float
    bounded: bool = False
    name: str = "custom"

    def __post_init__(self):
        check_lipschitz(self.b, self.b_lipschitz, f"b ({self.name})")
        check_lipschitz(self.sigma, self.sigma_lipschitz, f"sigma ({self.name})")

    @classmethod
    def from_presets(cls, b: str, sigma: str) -> "Coefficients":
        b_fn, b_lip, b_bounded = _lookup(b, DRIFT_PRESETS, "b")
        s_fn, s_lip, s_bounded = _lookup(sigma, DIFFUSION_PRESETS, "sigma")
        return cls(b_fn, s_fn, b_lip, s_lip, b_bounded and s_bounded, name=f"b={b},sigma={sigma}")


def _lookup(name: str, presets: dict, label: str):
    if name.startswith("table:"):
        table = TableFunction.from_csv(name.split(":", 1)[1])
        return table, table.lipschitz, True
    if name not in presets:
        raise ConfigError(f"unknown {label} preset {name!r}; choose from {sorted(presets)} or table:<csv>")
    return presets[name]


@dataclass(frozen=True)
class TableFunction:
    """Piecewise-linear function from (x, f) nodes, constant beyond the ends."""

    nodes: np.ndarray
    values: np.ndarray

    @classmethod
    def from_csv(cls, path: str | Path) -> "TableFunction":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"table file not found: {path}")
        df = pd.read_csv(path)
        if df.shape[1] < 2 or len(df) < 2:
            raise ConfigError(f"{path}: need two columns (x, f) and at least two rows")
        df = df.iloc[:, :2].astype(float).sort_values(df.columns[0])
        return cls(df.iloc[:, 0].to_numpy(), df.iloc[:, 1].to_numpy())

    @property
    def lipschitz(self) -> float:
        return float(np.max(np.abs(np.diff(self.values) / np.diff(self.nodes))))

    def __call__(self, u):
        return np.interp(u, self.nodes, self.values)


LINEAR_COEFFICIENTS = Coefficients.from_presets("zero", "one")


def require_bounded(coeffs: Coefficients, experiment: str):
    if not coeffs.bounded:
        raise ConfigError(f"{experiment} requires bounded b and sigma; {coeffs.name} is not")


# ---------------------------------------------------------------------------
# Scheme
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SchemeConfig:
    es: EigenSystem
    dt: float
    dx: float
    modes: int | None = None

    def __post_init__(self):
        if not (self.dt > 0 and self.dx > 0):
            raise ConfigError(f"dt and dx must be > 0 (dt={self.dt}, dx={self.dx})")
        if self.dt >= SCHEME["max_dt"]:
            raise ConfigError(f"dt={self.dt} outside the validated regime (dt < {SCHEME['max_dt']})")
        L = self.es.length
        cells = int(round(L / self.dx))
        if cells < 1 or abs(cells * self.dx - L) > 1e-9 * L:
            raise ConfigError(f"dx={self.dx} does not divide L={L}")
        modes = self.es.count if self.modes is None else int(self.modes)
        if modes < SCHEME["min_modes"]:
            raise ConfigError(f"mode count {modes} below the minimum {SCHEME['min_modes']}")
        if modes > self.es.count:
            raise ConfigError(f"mode count {modes} exceeds the {self.es.count} built modes")
        object.__setattr__(self, "modes", modes)

    @property
    def cells(self) -> int:
        return int(round(self.es.length / self.dx))

    @cached_property
    def nodes(self) -> np.ndarray:
        return (np.arange(self.cells) + 0.5) * self.dx

    @cached_property
    def basis(self) -> np.ndarray:
        """f_n at the cell centres, shape (modes, cells)."""
        return self.es.basis(self.nodes, modes=self.modes)

    @cached_property
    def decay(self) -> np.ndarray:
        return np.exp(-self.es.lambdas[: self.modes] * self.dt)

    def steps_for(self, horizon: float) -> int:
        steps = int(round(horizon / self.dt))
        if steps < 1 or abs(steps * self.dt - horizon) > 1e-9 * max(horizon, 1.0):
            raise ConfigError(f"horizon {horizon} is not a positive multiple of dt={self.dt}")
        return steps

    def initial_coefficients(self, u0: InitialData) -> np.ndarray:
        a0 = np.zeros(self.modes)
        n = min(self.modes, len(u0.coefficients))
        a0[:n] = u0.coefficients[:n]
        return a0


def step(a: np.ndarray, cfg: SchemeConfig, coeffs: Coefficients, noise: np.ndarray) -> np.ndarray:
    """Advance coefficients by one step; `a` is (modes,) or (reps, modes), `noise` the scaled cell draws."""
    u = a @ cfg.basis
    forcing = coeffs.b(u) * cfg.dt + coeffs.sigma(u) * noise
    return cfg.decay * (a + (forcing * cfg.dx) @ cfg.basis.T)


# ---------------------------------------------------------------------------
# Coupled runs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoupledPaths:
    u_path: FieldPath
    w_path: FieldPath
    noise_record: np.ndarray    # (steps, cells), scaled draws shared by u and w
    u0: InitialData
    flow: np.ndarray            # deterministic part on the recorded grid
    sigma_values: np.ndarray    # sigma(u) on the recorded grid


@dataclass(frozen=True)
class CoupledEnsemble:
    u: PathEnsemble
    w: PathEnsemble
    flow: np.ndarray
    u0: InitialData
    coeffs: Coefficients

    @property
    def times(self) -> np.ndarray:
        return self.u.times

    @property
    def xs(self) -> np.ndarray:
        return self.u.xs

    def select(self, keep: np.ndarray) -> "CoupledEnsemble":
        return CoupledEnsemble(self.u.select(keep), self.w.select(keep), self.flow, self.u0, self.coeffs)

    def subsample(self, time_stride: int = 1, space_stride: int = 1) -> "CoupledEnsemble":
        flow = self.flow[::time_stride, ::space_stride]
        return CoupledEnsemble(self.u.subsample(time_stride, space_stride),
                               self.w.subsample(time_stride, space_stride), flow, self.u0, self.coeffs)


def _simulate_chunk(cfg: SchemeConfig, coeffs: Coefficients, a0: np.ndarray, steps: int,
                    record_every: int, seed: int, indices: np.ndarray, noise_scale: float,
                    keep_noise: bool):
    R, J = indices.size, cfg.cells
    B = cfg.basis
    a_u = np.tile(a0, (R, 1))
    a_w = np.zeros((R, cfg.modes))
    n_rec = steps // record_every + 1
    U = np.empty((R, n_rec, J))
    W = np.empty((R, n_rec, J))
    U[:, 0] = a_u @ B
    W[:, 0] = a_w @ B
    record = np.empty((R, steps, J)) if keep_noise else None
    gens = [stream(seed, int(r)) for r in indices]
    scale = noise_scale * math.sqrt(cfg.dt / cfg.dx)
    block = SCHEME["noise_block"]

    for s0 in range(0, steps, block):
        nb = min(block, steps - s0)
        Z = np.stack([g.standard_normal((nb, J)) for g in gens]) * scale
        if keep_noise:
            record[:, s0:s0 + nb] = Z
        for i in range(nb):
            k = s0 + i + 1
            noise = Z[:, i]
            a_u = step(a_u, cfg, coeffs, noise)
            a_w = step(a_w, cfg, LINEAR_COEFFICIENTS, noise)
            if not np.all(np.isfinite(a_u)):
                bad = int(np.nonzero(~np.all(np.isfinite(a_u), axis=1))[0][0])
                raise SchemeDivergenceError(
                    f"non-finite solution at step {k} (replicate {indices[bad]}, {coeffs.name})",
                    step=k, replicate=int(indices[bad]))
            if k % record_every == 0:
                U[:, k // record_every] = a_u @ B
                W[:, k // record_every] = a_w @ B
    return U, W, record


def _recorded_times(cfg: SchemeConfig, steps: int, record_every: int) -> np.ndarray:
    return np.arange(steps // record_every + 1) * record_every * cfg.dt


def _flow(cfg: SchemeConfig, a0: np.ndarray, times: np.ndarray) -> np.ndarray:
    """The scheme's noise-free evolution exp(-lambda t) a_0 on the cell grid."""
    decay = np.exp(-np.outer(times, cfg.es.lambdas[: cfg.modes]))
    return (decay * a0) @ cfg.basis


def _check_run(cfg: SchemeConfig, horizon: float, record_every: int) -> int:
    steps = cfg.steps_for(horizon)
    if record_every < 1 or steps % record_every:
        raise ConfigError(f"record_every={record_every} must divide the {steps} steps")
    return steps


def solve_coupled(cfg: SchemeConfig, coeffs: Coefficients, u0: InitialData, horizon: float, seed: int,
                  replicate: int = 0, record_every: int = 1, noise_scale: float = 1.0) -> CoupledPaths:
    """One replicate of (u, w) with the noise record."""
    steps = _check_run(cfg, horizon, record_every)
    a0 = cfg.initial_coefficients(u0)
    U, W, record = _simulate_chunk(cfg, coeffs, a0, steps, record_every, seed,
                                   np.array([replicate]), noise_scale, keep_noise=True)
    times = _recorded_times(cfg, steps, record_every)
    return CoupledPaths(
        u_path=FieldPath(times, cfg.nodes, U[0], record[0], seed, replicate),
        w_path=FieldPath(times, cfg.nodes, W[0], record[0], seed, replicate),
        noise_record=record[0],
        u0=u0,
        flow=_flow(cfg, a0, times),
        sigma_values=np.asarray(coeffs.sigma(U[0]), dtype=float),
    )


def solve_coupled_ensemble(cfg: SchemeConfig, coeffs: Coefficients, u0: InitialData, horizon: float,
                           reps: int, seed: int, threads: int = 1, record_every: int = 1,
                           noise_scale: float = 1.0) -> CoupledEnsemble:
    """`reps` replicates; replicate k is identical to solve_coupled(..., replicate=k)."""
    if reps < 1:
        raise ConfigError(f"reps must be >= 1, got {reps}")
    if not coeffs.bounded:
        logger.warning("running with unbounded coefficients (%s)", coeffs.name)
    steps = _check_run(cfg, horizon, record_every)
    a0 = cfg.initial_coefficients(u0)

    def work(indices):
        U, W, _ = _simulate_chunk(cfg, coeffs, a0, steps, record_every, seed, indices, noise_scale, False)
        return U, W

    parts = run_replicates(work, reps, threads)
    U = np.concatenate([p[0] for p in parts])
    W = np.concatenate([p[1] for p in parts])
    times = _recorded_times(cfg, steps, record_every)
    L = cfg.es.length
    logger.debug("simulated %d replicates x %d steps (%s)", reps, steps, coeffs.name)
    return CoupledEnsemble(
        u=PathEnsemble(times, cfg.nodes, U, seed, L, "u", np.asarray(coeffs.sigma(U), dtype=float)),
        w=PathEnsemble(times, cfg.nodes, W, seed, L, "w"),
        flow=_flow(cfg, a0, times),
        u0=u0,
        coeffs=coeffs,
    )


# ---------------------------------------------------------------------------
# Linearization error
# ---------------------------------------------------------------------------

def _error_from_arrays(u, w, sigma, flow, k, j, k2, j2):
    return (u[..., k2, j2] - u[..., k, j] - (flow[k2, j2] - flow[k, j])
            - sigma[..., k, j] * (w[..., k2, j2] - w[..., k, j]))


def linearization_error(paths: CoupledPaths, z: SpaceTimePoint, z2: SpaceTimePoint) -> float:
    """u(z') - u(z) - [flow(z') - flow(z)] - sigma(u(z)) (w(z') - w(z)) on stored grid values."""
    u = paths.u_path
    k, j = grid_index(u.times, z.t, "t"), grid_index(u.xs, z.x, "x")
    k2, j2 = grid_index(u.times, z2.t, "t"), grid_index(u.xs, z2.x, "x")
    return float(_error_from_arrays(u.values, paths.w_path.values, paths.sigma_values, paths.flow, k, j, k2, j2))


def linearization_errors(ens: CoupledEnsemble, z: SpaceTimePoint, z2: SpaceTimePoint) -> np.ndarray:
    """The linearization error per replicate."""
    k, j = ens.u.index_of(z)
    k2, j2 = ens.u.index_of(z2)
    return _error_from_arrays(ens.u.values, ens.w.values, ens.u.sigma(), ens.flow, k, j, k2, j2)


def increment_norms(ens: CoupledEnsemble, center: tuple[int, int], offsets, kind: str = "linearization") -> pd.DataFrame:
    """L2 norms over replicates of grid increments from `center` by (dk, dj) offsets.

    kind="linearization" measures the linearization error, kind="tilde" the
    increment of u minus its deterministic flow.
    """
    if kind not in ("linearization", "tilde"):
        raise ConfigError(f"unknown increment kind {kind!r}")
    k, j = center
    T, J = ens.flow.shape
    tilde = ens.u.values - ens.flow if kind == "tilde" else None
    sigma = ens.u.sigma()
    rows = []
    for dk, dj in offsets:
        k2, j2 = k + int(dk), j + int(dj)
        if not (0 <= k2 < T and 0 <= j2 < J):
            raise ConfigError(f"offset ({dk}, {dj}) leaves the grid from ({k}, {j})")
        if tilde is None:
            e = _error_from_arrays(ens.u.values, ens.w.values, sigma, ens.flow, k, j, k2, j2)
        else:
            e = tilde[:, k2, j2] - tilde[:, k, j]
        dt = ens.times[k2] - ens.times[k]
        dx = ens.xs[j2] - ens.xs[j]
        rows.append({"dk": dk, "dj": dj, "dt": abs(dt), "dx": abs(dx),
                     "rho": float(rho_grid(dt, dx)), "l2": float(np.sqrt(np.mean(e ** 2)))})
    return pd.DataFrame(rows)
