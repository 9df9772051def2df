import math

import numpy as np

# -- Boundary conditions --
BC_KINDS = ["dirichlet", "neumann", "robin"]

# Negative Robin eigenvalues: "reject" fails loudly, "include" keeps the
# hyperbolic modes so the basis stays complete.
NEGATIVE_MODE_POLICIES = ["reject", "include"]

# -- Spectral --
SPECTRAL = {
    "scan_step": 0.01,              # upper bound on the Robin scan step; also capped at pi/(4L)
    "root_tolerance": 1e-12,        # scale-free residual bound for Robin roots
    "root_conditioning": 16,        # eps multiples of eta |g'(eta)| also accepted
    "dedupe_tolerance": 1e-8,       # roots closer than this are treated as one
    "zero_mode_tolerance": 1e-12,   # |alpha (1 + beta L) - beta| below this => lambda_1 = 0
    "min_quad_order": 64,
    "quad_nodes_per_mode": 4,
    "min_asymptotic_modes": 16,
    "hyperbolic_scan_points": 20001,
    "scan_extensions": 5,
}

# -- Heat kernel --
KERNEL = {
    "tail_tolerance": 1e-10,
    "sup_grid_per_mode": 8,
}

# -- Covariance oracle and sampler --
ORACLE = {
    "tail_tolerance": 1e-13,
    "clip_tolerance": 1e-10,
    "omitted_variance": 1e-4,
    "matrix_chunk": 32,
    "robin_splice_nodes": 64,       # Gauss-Legendre nodes in sqrt(u) for the Robin wall terms
}

# -- Conditional variances --
SLND = {
    "jitter_ladder": (0.0, 1e-12, 1e-10, 1e-8),
    "max_points": 1000,
    "negative_tolerance": 1e-8,
    "interior": (0.1, 1.0, 0.2, 0.8),   # a, T, c, d
    "max_m": 20,
    "distinct_rho": 1e-12,
}

# -- Pseudo-spectral scheme --
SCHEME = {
    "max_dt": 1.0,
    "min_modes": 8,
    "noise_block": 64,                  # steps of cell noise drawn per replicate at a time
    "lipschitz_pairs": 1000,
    "lipschitz_span": 10.0,
}

# -- Coefficient presets: name -> (function, Lipschitz constant, bounded) --
DRIFT_PRESETS = {
    "zero": (lambda u: np.zeros_like(u, dtype=float), 0.0, True),
    "cos": (np.cos, 1.0, True),
}

DIFFUSION_PRESETS = {
    "one": (lambda u: np.ones_like(u, dtype=float), 0.0, True),
    "affine": (lambda u: 1.0 + 0.5 * np.asarray(u, dtype=float), 0.5, False),
    "sin2": (lambda u: 2.0 + np.sin(u), 1.0, True),
    "identity": (lambda u: np.asarray(u, dtype=float), 1.0, False),
}

# Initial data presets understood by the CLI; "const:c" and "table:file" are parsed.
U0_PRESETS = ["zero", "bump"]

# -- Open KPZ --
KPZ = {
    "length": 1.0,
    "positivity_floor": 1e-12,
    "max_exclusion": 0.2,
}

# -- Estimators --
ESTIMATORS = {
    "ladder_rungs": 7,
    "loglog_floor": math.exp(math.e),   # keeps log log(.) >= 1
    "log_floor": math.e,                # keeps log(.) >= 1
    "wilson_level": 0.05,
    "max_moment_small_sample": 8,
    "large_sample": 100_000,
    "min_small_ball_samples": 1000,
    "min_fit_points": 5,
    "min_fit_decades": 1.0,
    "bootstrap_resamples": 999,
    "phi_log_bound": 10.0,             # phi(eps) <= bound * |log eps| counts as O(|log eps|)
    "confidence_level": 0.95,
}

# -- Runs --
THREADS_ENV = "SPDE_LAB_THREADS"
SCHEMA_VERSION = 1
DEFAULT_SEED = 20240601
DEFAULT_OUT = "runs"

# -- Acceptance suite: sizes per mode, wall-clock budgets in seconds --
ACCEPTANCE = {
    "full": {
        "oracle_points": 10,
        "slnd_trials": 200,
        "slnd_modes": 128,
        "law_reps": 10_000,
        "gate_reps": 2000,
        "gate_dt": 1e-4,
        "gate_dx": 1.0 / 256,
        "gate_modes": 64,
        "ball_reps": 10_000,
        "ball_pilot_reps": 2000,
        "ball_grid": 65,
        "ball_modes": 1024,
        "lin_cells": 128,
        "lin_steps": 8192,              # time steps per unit time
        "lin_reps": 2000,
        "lin_batch": 250,
        "coupling_reps": 2000,
        "coupling_batch": 500,
        "ordering_seeds": 20,
        "ordering_reps": 20,
    },
    "quick": {
        "oracle_points": 3,
        "slnd_trials": 40,
        "slnd_modes": 64,
        "law_reps": 2000,
        "gate_reps": 400,
        "gate_dt": 1.0 / 2048,
        "gate_dx": 1.0 / 64,
        "gate_modes": 32,
        "ball_reps": 2000,
        "ball_pilot_reps": 500,
        "ball_grid": 33,
        "ball_modes": 256,
        "lin_cells": 64,
        "lin_steps": 4096,
        "lin_reps": 200,
        "lin_batch": 200,
        "coupling_reps": 300,
        "coupling_batch": 300,
        "ordering_seeds": 5,
        "ordering_reps": 10,
    },
    "budget_seconds": {1: 5, 2: 30, 3: 60, 4: 60, 5: 120, 6: 120, 7: 300, 8: 600, 9: 900,
                       10: 600, 11: 600, 12: 300, 13: 600},
    "band": (0.8, 1.25),
}
