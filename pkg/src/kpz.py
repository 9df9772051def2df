"""
Open KPZ on [0, 1] through the Hopf-Cole transform h = log u, where u solves
du = 1/2 u'' dt + u dW with the Robin condition induced by the boundary
slopes mu and nu.
"""

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from src.config import KPZ
from src.errors import ConfigError, PositivityError
from src.gaussian_field import PathEnsemble
from src.heatkernel import InitialData
from src.nonlinear_solver import Coefficients, CoupledEnsemble, SchemeConfig, solve_coupled_ensemble
from src.spectral import BoundaryCondition, EigenSystem, build_eigensystem

logger = logging.getLogger(__name__)

MULTIPLICATIVE = Coefficients.from_presets("zero", "identity")


def robin_from_kpz(mu: float, nu: float) -> BoundaryCondition:
    """h'(0) = mu, h'(1) = -nu becomes u'(0) + alpha u(0) = 0, u'(1) + beta u(1) = 0."""
    return BoundaryCondition("robin", length=KPZ["length"], alpha=0.5 - mu, beta=nu - 0.5)


def kpz_eigensystem(mu: float, nu: float, modes: int) -> EigenSystem:
    # negative modes are common here (e.g. alpha = beta = 0.2) and must be kept
    return build_eigensystem(robin_from_kpz(mu, nu), modes, negative_modes="include")


def kpz_boundary_residual(es: EigenSystem, mu: float, nu: float) -> float:
    """max over modes and ends of |f'(0) - (mu - 1/2) f(0)| and |f'(1) + (nu - 1/2) f(1)|."""
    ends = np.array([0.0, es.length])
    f = es.basis(ends)
    d = es.basis(ends, derivative=1)
    left = np.abs(d[:, 0] - (mu - 0.5) * f[:, 0])
    right = np.abs(d[:, 1] + (nu - 0.5) * f[:, 1])
    return float(max(left.max(), right.max()))


@dataclass(frozen=True)
class KPZConfig:
    mu: float
    nu: float
    u0: Callable
    dt: float
    dx: float
    modes: int
    positivity_floor: float = KPZ["positivity_floor"]

    def __post_init__(self):
        if not self.positivity_floor > 0:
            raise ConfigError(f"positivity floor must be > 0, got {self.positivity_floor}")

    def build(self) -> tuple[SchemeConfig, InitialData]:
        es = kpz_eigensystem(self.mu, self.nu, self.modes)
        scheme = SchemeConfig(es, self.dt, self.dx)
        values = np.asarray(self.u0(scheme.nodes), dtype=float) * np.ones(scheme.cells)
        if not np.all(values > 0):
            raise ConfigError(f"KPZ initial data must be strictly positive (min {values.min():.3g})")
        return scheme, InitialData.from_function(es, self.u0)


def ito_shift(scheme: SchemeConfig, times, noise_scale: float = 1.0) -> np.ndarray:
    """Lattice Ito drift of log u, as a (len(times), cells) array to add to h.

    With sigma(u) = u the projected cell noise has per-step variance
    u^2 dt c_j at node j, so log u drifts by -c_j t / 2.
    """
    K = scheme.basis.T @ scheme.basis
    c = np.sum(K ** 2, axis=1) * scheme.dx
    return 0.5 * noise_scale ** 2 * np.outer(np.asarray(times, dtype=float), c)


@dataclass(frozen=True)
class KPZRun:
    h: PathEnsemble
    w: PathEnsemble
    coupled: CoupledEnsemble      # kept paths only
    excluded: np.ndarray          # replicate indices dropped for positivity
    total: int
    shift: np.ndarray             # ito_shift on the recorded grid

    @property
    def exclusion_fraction(self) -> float:
        return self.excluded.size / self.total

    @property
    def h_renormalized(self) -> PathEnsemble:
        """log u plus the lattice Ito drift."""
        return self.h.with_values(self.h.values + self.shift, "h_renormalized")

    def report(self) -> dict:
        return {
            "replicates": self.total,
            "excluded": int(self.excluded.size),
            "exclusion_fraction": self.exclusion_fraction,
            "excluded_replicates": self.excluded.tolist(),
        }


def solve_kpz(cfg: KPZConfig, horizon: float, reps: int, seed: int, threads: int = 1,
              record_every: int = 1, noise_scale: float = 1.0,
              max_exclusion: float = KPZ["max_exclusion"]) -> KPZRun:
    """h = log u per path; paths touching the positivity floor are excluded and counted."""
    scheme, u0 = cfg.build()
    run = solve_coupled_ensemble(scheme, MULTIPLICATIVE, u0, horizon, reps, seed, threads=threads,
                                 record_every=record_every, noise_scale=noise_scale)
    low = np.min(run.u.values, axis=(1, 2)) <= cfg.positivity_floor
    excluded = np.nonzero(low)[0]
    fraction = excluded.size / reps
    if excluded.size:
        logger.warning("excluded %d/%d KPZ paths below positivity floor %.0e", excluded.size, reps,
                       cfg.positivity_floor)
    if fraction > max_exclusion:
        raise PositivityError(f"positivity exclusion fraction {fraction:.1%} exceeds {max_exclusion:.0%}; "
                              f"reduce dt={cfg.dt} or dx={cfg.dx}")
    kept = run.select(np.nonzero(~low)[0])
    h = kept.u.with_values(np.log(kept.u.values), "h")
    return KPZRun(h=h, w=kept.w, coupled=kept, excluded=excluded, total=reps,
                  shift=ito_shift(scheme, h.times, noise_scale))
