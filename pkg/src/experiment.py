"""
Experiment configuration for lab.py.

Every subcommand's options live in one registry, which drives the argparse
flags, the YAML config file sections and validation. Precedence:
built-in defaults < config file (`common` then `<subcommand>`) < flags.
"""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np
from ruamel.yaml import YAML
from ruamel.yaml.error import YAMLError

from src.config import (
    BC_KINDS,
    DEFAULT_OUT,
    DEFAULT_SEED,
    DIFFUSION_PRESETS,
    DRIFT_PRESETS,
    ESTIMATORS,
    KPZ,
    NEGATIVE_MODE_POLICIES,
    SLND,
    THREADS_ENV,
    U0_PRESETS,
)
from src.errors import ConfigError
from src.nonlinear_solver import TableFunction
from src.rng import check_seed, resolve_threads


# ---------------------------------------------------------------------------
# Value parsing
# ---------------------------------------------------------------------------

_BOOLEAN_STATES = {"1": True, "yes": True, "true": True, "on": True,
                   "0": False, "no": False, "false": False, "off": False}


def _to_bool(raw) -> bool:
    if isinstance(raw, bool):
        return raw
    key = str(raw).strip().lower()
    if key not in _BOOLEAN_STATES:
        raise ValueError(f"not a boolean: {raw!r}")
    return _BOOLEAN_STATES[key]


def _to_floats(raw) -> tuple[float, ...]:
    if isinstance(raw, (list, tuple)):
        return tuple(float(v) for v in raw)
    return tuple(float(v) for v in str(raw).split(",") if v.strip())


def parse_grid(spec: str) -> np.ndarray:
    """'start:stop:count' (inclusive linspace) or a comma list of values."""
    spec = str(spec).strip()
    try:
        if ":" in spec:
            start, stop, count = spec.split(":")
            grid = np.linspace(float(start), float(stop), int(count))
        else:
            grid = np.array([float(v) for v in spec.split(",") if v.strip()])
    except ValueError:
        raise ConfigError(f"bad grid spec {spec!r}; use start:stop:count or a comma list") from None
    if grid.size == 0 or np.any(np.diff(grid) <= 0):
        raise ConfigError(f"grid {spec!r} must be non-empty and strictly increasing")
    return grid


def _grid_spec(raw) -> str:
    parse_grid(raw)
    return str(raw)


PARSERS: dict[str, Callable] = {
    "float": float,
    "int": int,
    "str": str,
    "bool": _to_bool,
    "floats": _to_floats,
    "grid": _grid_spec,
}


@dataclass(frozen=True)
class Option:
    name: str
    kind: str
    default: Any
    help: str = ""
    choices: tuple | None = None
    positive: bool = False

    @property
    def flag(self) -> str:
        return "--" + self.name.replace("_", "-")

    def parse(self, raw):
        if raw is None:
            if self.default is None:
                return None
            raise ConfigError(f"{self.name}: a value is required")
        try:
            value = PARSERS[self.kind](raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{self.name}: cannot parse {raw!r} as {self.kind} ({exc})") from None
        if self.choices and value not in self.choices:
            raise ConfigError(f"{self.name}: {value!r} not in {list(self.choices)}")
        if self.positive:
            values = value if isinstance(value, tuple) else (value,)
            if any(not v > 0 for v in values):
                raise ConfigError(f"{self.name}: must be > 0, got {raw!r}")
        return value


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------

COMMON = [
    Option("seed", "int", DEFAULT_SEED, "64-bit seed"),
    Option("threads", "int", None, f"worker threads (default ${THREADS_ENV}, else 1)", positive=True),
    Option("out", "str", DEFAULT_OUT, "output directory"),
]


def _bc(modes: int) -> list[Option]:
    return [
        Option("bc", "str", "dirichlet", "boundary condition", choices=tuple(BC_KINDS)),
        Option("alpha", "float", 0.0, "Robin coefficient at x=0"),
        Option("beta", "float", 0.0, "Robin coefficient at x=L"),
        Option("length", "float", 1.0, "interval length L", positive=True),
        Option("modes", "int", modes, "eigenpairs to build", positive=True),
        Option("negative_modes", "str", "reject", "negative Robin eigenvalues",
               choices=tuple(NEGATIVE_MODE_POLICIES)),
    ]


def _center(t0: float, x0: float) -> list[Option]:
    return [Option("t0", "float", t0, "centre time"), Option("x0", "float", x0, "centre position")]


def _source(t_grid: str, x_grid: str, reps: int) -> list[Option]:
    """Path source of the statistics commands: an archive, or w sampled in memory."""
    return [
        Option("paths", "str", "", "path archive (.parquet) written by sample-w, solve or kpz"),
        *_bc(128),
        Option("t_grid", "grid", t_grid, "time grid for in-memory sampling"),
        Option("x_grid", "grid", x_grid, "space grid for in-memory sampling"),
        Option("reps", "int", reps, "replicates for in-memory sampling", positive=True),
        Option("use_sigma", "bool", False, "divide increments by |sigma(u(z))| from the archive"),
    ]


_STAT_GRID = ("0:0.0625:257", "0:1:257", 200)
_BALL_GRID = ("0:0.0625:65", "0.25:0.75:33", 2000)
_RECT = "0.0,0.0625,0.25,0.75"

SUBCOMMANDS: dict[str, tuple[str, list[Option]]] = {
    "eigen": ("Eigen-system table", _bc(16)),
    "kernel": ("Heat kernel matrix on a grid", [
        *_bc(256),
        Option("t", "float", 0.1, "kernel time", positive=True),
        Option("grid_size", "int", 33, "grid points on [0, L]", positive=True),
        Option("tail_tolerance", "float", 1e-10, "truncation tolerance", positive=True),
    ]),
    "kernel-bound-fit": ("Fitted constant of the two-sided kernel bound", [
        *_bc(256),
        Option("times", "floats", (0.01, 0.02, 0.05, 0.1, 0.2, 0.5), "kernel times", positive=True),
        Option("grid_size", "int", 33, "grid points on [0, L]", positive=True),
    ]),
    "cov": ("Covariance oracle on point pairs from a CSV (t1, x1, t2, x2)", [
        *_bc(256),
        Option("points", "str", "", "CSV of point pairs"),
        Option("short_time", "float", None, "short-time splice cutoff (0 = pure series)"),
    ]),
    "sample-w": ("Sample the linear field w", [
        *_bc(128),
        Option("t_grid", "grid", "0:1:33", "time grid"),
        Option("x_grid", "grid", "0:1:33", "space grid"),
        Option("reps", "int", 200, "replicates", positive=True),
        Option("archive", "bool", True, "write the Parquet path archive"),
    ]),
    "slnd-scan": ("Conditional-variance ratio scan", [
        *_bc(256),
        Option("interior", "floats", SLND["interior"], "a,T,c,d"),
        Option("trials", "int", 200, "random configurations", positive=True),
        Option("max_m", "int", SLND["max_m"], "largest conditioning set", positive=True),
        Option("include_boundary", "bool", False, "draw points on all of [0, L]"),
        Option("strict_interior", "bool", True, "keep Robin scans interior-only"),
    ]),
    "solve": ("Coupled nonlinear solver (u, w)", [
        *_bc(64),
        Option("b", "str", "zero", f"drift: {'|'.join(DRIFT_PRESETS)}|table:<csv>"),
        Option("sigma", "str", "one", f"diffusion: {'|'.join(DIFFUSION_PRESETS)}|table:<csv>"),
        Option("u0", "str", "zero", "initial data: zero|bump|const:c|table:<csv>"),
        Option("dt", "float", 1.0 / 1024, "time step", positive=True),
        Option("dx", "float", 1.0 / 64, "cell width", positive=True),
        Option("horizon", "float", 0.25, "final time", positive=True),
        Option("reps", "int", 100, "replicates", positive=True),
        Option("record_every", "int", 4, "store every k-th step", positive=True),
        Option("noise_scale", "float", 1.0, "noise multiplier (0 = deterministic)"),
        Option("archive", "bool", True, "write Parquet path archives"),
    ]),
    "kpz": ("Open KPZ through h = log u", [
        Option("mu", "float", 0.3, "slope condition at x=0"),
        Option("nu", "float", 0.7, "slope condition at x=1"),
        Option("u0", "str", "const:1", "positive initial data: const:c|bump|table:<csv>"),
        Option("dt", "float", 1.0 / 1024, "time step", positive=True),
        Option("dx", "float", 1.0 / 64, "cell width", positive=True),
        Option("modes", "int", 64, "eigenpairs", positive=True),
        Option("horizon", "float", 0.25, "final time", positive=True),
        Option("reps", "int", 100, "replicates", positive=True),
        Option("record_every", "int", 4, "store every k-th step", positive=True),
        Option("noise_scale", "float", 1.0, "noise multiplier"),
        Option("max_exclusion", "float", KPZ["max_exclusion"], "largest tolerated exclusion fraction"),
        Option("archive", "bool", True, "write Parquet path archives"),
    ]),
    "modulus": ("Local or uniform modulus statistic", [
        *_source(*_STAT_GRID), *_center(0.03125, 0.5),
        Option("kind", "str", "local", "local|uniform", choices=("local", "uniform")),
        Option("normalizer", "str", "", "loglog|log (default by kind)"),
        Option("eps0", "float", 0.5, "largest ladder rung", positive=True),
        Option("rungs", "int", 3, "dyadic rungs", positive=True),
        Option("axis", "str", "both", "both|time|space", choices=("both", "time", "space")),
        Option("rect", "floats", _to_floats(_RECT), "a,T,c,d for the uniform modulus"),
    ]),
    "smallball": ("Small-ball probabilities and exponent fit", [
        *_source(*_BALL_GRID), *_center(0.03125, 0.5),
        Option("radii", "floats", (0.5, 0.25), "ball radii", positive=True),
        Option("ratios", "floats", (1.0, 1.25, 1.5, 1.75, 2.0, 2.5), "r/eps ratios", positive=True),
        Option("level", "float", ESTIMATORS["wilson_level"], "Wilson interval level", positive=True),
        Option("axis", "str", "both", "both|time|space", choices=("both", "time", "space")),
        Option("min_samples", "int", ESTIMATORS["min_small_ball_samples"], "minimum paths", positive=True),
    ]),
    "chung": ("Chung-type statistic", [
        *_source(*_STAT_GRID), *_center(0.03125, 0.5),
        Option("eps0", "float", 0.5, "largest ladder rung", positive=True),
        Option("rungs", "int", 3, "dyadic rungs", positive=True),
        Option("axis", "str", "both", "both|time|space", choices=("both", "time", "space")),
    ]),
    "scan": ("Exceptional-point scan", [
        *_source(*_STAT_GRID),
        Option("rect", "floats", _to_floats(_RECT), "a,T,c,d"),
        Option("thetas", "floats", (0.5, 1.0, 1.5, 2.0, 2.5, 3.0), "theta grid", positive=True),
        Option("epsilon", "float", 0.25, "scale", positive=True),
    ]),
    "moments": ("Moment growth in k", [
        *_source(*_STAT_GRID), *_center(0.03125, 0.5),
        Option("k_list", "floats", (1.0, 2.0, 4.0, 6.0, 8.0), "moment orders", positive=True),
        Option("bounded", "bool", True, "the paths come from bounded coefficients"),
    ]),
    "acceptance": ("Acceptance suite", [
        Option("quick", "bool", False, "reduced sizes"),
        Option("criteria", "str", "", "comma list of criterion numbers (default all)"),
    ]),
    "status": ("Summarise a run directory", []),
    "clean": ("Remove a run directory", []),
    "rerun": ("Re-execute the configuration recorded in a manifest", [
        Option("manifest", "str", "", "manifest.json to replay"),
    ]),
}


def options_for(subcommand: str) -> dict[str, Option]:
    if subcommand not in SUBCOMMANDS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    return {o.name: o for o in COMMON + SUBCOMMANDS[subcommand][1]}


# ---------------------------------------------------------------------------
# Config files
# ---------------------------------------------------------------------------

def read_config_file(path: str | Path, subcommand: str) -> dict[str, Any]:
    """Values from `common` and `<subcommand>`; every section is checked for unknown keys."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    yaml = YAML(typ="safe")
    try:
        with path.open("r", encoding="utf-8") as fh:
            data = yaml.load(fh)
    except YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: the top level must map section names to options")

    values: dict[str, Any] = {}
    common = {o.name: o for o in COMMON}
    for section, entries in data.items():
        if section != "common" and section not in SUBCOMMANDS:
            raise ConfigError(f"{path}: unknown section {section!r}")
        if not isinstance(entries, dict):
            raise ConfigError(f"{path}: section {section!r} must map option names to values")
        registry = common if section == "common" else options_for(section)
        for key, raw in entries.items():
            name = str(key).replace("-", "_")
            if name not in registry:
                raise ConfigError(f"{path}: unknown key {key!r} in {section!r}")
            parsed = registry[name].parse(raw)
            if section in ("common", subcommand):
                values[name] = parsed
    return values


# ---------------------------------------------------------------------------
# ExperimentConfig
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    subcommand: str
    options: dict[str, Any]
    seed: int
    threads: int
    out: Path

    def __getitem__(self, name: str):
        return self.options[name]

    def get(self, name: str, default=None):
        return self.options.get(name, default)

    def echo(self) -> dict:
        """JSON-ready record for the manifest; `rerun` rebuilds the config from it."""
        options = {k: list(v) if isinstance(v, tuple) else v for k, v in self.options.items()}
        return {"subcommand": self.subcommand, "seed": self.seed, "threads": self.threads,
                "out": str(self.out), "options": options}


def build_config(subcommand: str, overrides: dict | None = None,
                 config_file: str | Path | None = None) -> ExperimentConfig:
    registry = options_for(subcommand)
    values = {name: opt.default for name, opt in registry.items()}
    if config_file:
        values.update(read_config_file(config_file, subcommand))
    for name, raw in (overrides or {}).items():
        if name not in registry:
            raise ConfigError(f"unknown option {name!r} for {subcommand}")
        values[name] = registry[name].parse(raw)
    seed = check_seed(values.pop("seed"))
    threads = resolve_threads(values.pop("threads"))
    out = Path(values.pop("out"))
    _validate(subcommand, values)
    return ExperimentConfig(subcommand, values, seed, threads, out)


def config_from_manifest(path: str | Path, out: str | Path | None = None) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"manifest not found: {path}")
    with open(path, encoding="utf-8") as f:
        manifest = json.load(f)
    try:
        recorded = manifest["config"]
        overrides = dict(recorded["options"])
        overrides.update(seed=recorded["seed"], threads=recorded["threads"], out=out or recorded["out"])
        return build_config(recorded["subcommand"], overrides)
    except KeyError as exc:
        raise ConfigError(f"{path}: manifest lacks {exc}") from None


def _check_coefficient(name: str, presets: dict, label: str):
    if name.startswith("table:"):
        if not Path(name.split(":", 1)[1]).exists():
            raise ConfigError(f"{label} table not found: {name}")
    elif name not in presets:
        raise ConfigError(f"unknown {label} preset {name!r}; choose from {sorted(presets)} or table:<csv>")


def _validate(subcommand: str, values: dict):
    if "u0" in values:
        parse_u0(values["u0"], values.get("length", KPZ["length"]))
    if "b" in values:
        _check_coefficient(values["b"], DRIFT_PRESETS, "b")
        _check_coefficient(values["sigma"], DIFFUSION_PRESETS, "sigma")
    if "interior" in values and len(values["interior"]) != 4:
        raise ConfigError("interior needs four values a,T,c,d")
    if "rect" in values and len(values["rect"]) != 4:
        raise ConfigError("rect needs four values a,T,c,d")
    if values.get("normalizer") not in (None, "", "loglog", "log"):
        raise ConfigError(f"unknown normalizer {values['normalizer']!r}")
    if subcommand == "cov" and not values["points"]:
        raise ConfigError("cov needs --points <csv>")
    if subcommand == "rerun" and not values["manifest"]:
        raise ConfigError("rerun needs --manifest <path>")
    if subcommand == "acceptance" and values["criteria"]:
        try:
            [int(c) for c in values["criteria"].split(",")]
        except ValueError:
            raise ConfigError(f"criteria must be integers, got {values['criteria']!r}") from None
    if subcommand == "kpz" and values["u0"] == "zero":
        raise ConfigError("KPZ initial data must be strictly positive")


# ---------------------------------------------------------------------------
# Initial data
# ---------------------------------------------------------------------------

def parse_u0(spec: str, length: float = 1.0) -> Callable:
    """zero | bump | const:c | table:<csv with columns x, u0>."""
    if spec in U0_PRESETS:
        if spec == "zero":
            return lambda x: np.zeros_like(np.asarray(x, dtype=float))
        return lambda x: np.sin(np.pi * np.asarray(x, dtype=float) / length) ** 2
    kind, _, arg = spec.partition(":")
    if kind == "const":
        try:
            c = float(arg)
        except ValueError:
            raise ConfigError(f"bad constant in u0 spec {spec!r}") from None
        return lambda x: np.full_like(np.asarray(x, dtype=float), c)
    if kind == "table":
        return TableFunction.from_csv(arg)
    raise ConfigError(f"unknown u0 spec {spec!r}; use zero|bump|const:c|table:<csv>")
