"""
Run artifacts: CSV tables, schema-versioned JSON summaries, Parquet path
archives and the run manifest.

Layout of a run directory:
    <out>/manifest.json             config echo, seed, versions, artifacts, wall time
    <out>/<name>.csv                tables (header row, UTF-8, '.' decimal)
    <out>/<name>.json               summaries with schema_version
    <out>/paths/<name>.parquet      path archive, one row per (replicate, time index)
    <out>/paths/<name>.json         grid sidecar for the archive
    <out>/diagnostic.json           written on failure only
"""

import hashlib
import json
import math
import platform
import traceback
from datetime import datetime
from pathlib import Path

import numpy as np
import pandas as pd

from src.config import SCHEMA_VERSION
from src.errors import ConfigError, LabError
from src.gaussian_field import PathEnsemble

MANIFEST_NAME = "manifest.json"
DIAGNOSTIC_NAME = "diagnostic.json"
PATHS_DIR = "paths"


def _sanitize_filename(name: str) -> str:
    """Make a string safe for use as a filename."""
    return name.replace("/", "_").replace(" ", "_").replace(":", "_").replace("=", "_")


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    return str(obj)


def _clean_floats(obj):
    """NaN and inf are not JSON; store them as strings."""
    if isinstance(obj, dict):
        return {k: _clean_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean_floats(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean_floats(obj.tolist())
    if isinstance(obj, (float, np.floating)) and not math.isfinite(obj):
        return str(float(obj))
    return obj


# ---------------------------------------------------------------------------
# Tables and summaries
# ---------------------------------------------------------------------------

def save_csv(out_dir: Path, name: str, df: pd.DataFrame) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{_sanitize_filename(name)}.csv"
    df.to_csv(path, index=False, float_format="%.17g", encoding="utf-8", lineterminator="\n")
    return path


def save_json(out_dir: Path, name: str, payload: dict) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{_sanitize_filename(name)}.json"
    body = {"schema_version": SCHEMA_VERSION, **_clean_floats(payload)}
    with open(path, "w", encoding="utf-8") as f:
        json.dump(body, f, indent=2, sort_keys=True, default=_json_default)
        f.write("\n")
    return path


def load_json(path: Path) -> dict:
    with open(path, encoding="utf-8") as f:
        return json.load(f)


# ---------------------------------------------------------------------------
# Path archives
# ---------------------------------------------------------------------------

def save_ensemble(out_dir: Path, name: str, ens: PathEnsemble) -> Path:
    """Parquet archive with columns replicate, k, x0..x{J-1}; grid in a JSON sidecar."""
    folder = out_dir / PATHS_DIR
    folder.mkdir(parents=True, exist_ok=True)
    safe = _sanitize_filename(name)
    R, T, J = ens.values.shape
    reps = ens.replicates if ens.replicates is not None else np.arange(R)
    frame = pd.DataFrame(ens.values.reshape(R * T, J), columns=[f"x{j}" for j in range(J)])
    frame.insert(0, "k", np.tile(np.arange(T), R))
    frame.insert(0, "replicate", np.repeat(reps, T))
    path = folder / f"{safe}.parquet"
    frame.to_parquet(path, engine="pyarrow", index=False)
    if ens.sigma_values is not None:
        sig = pd.DataFrame(ens.sigma_values.reshape(R * T, J), columns=[f"x{j}" for j in range(J)])
        sig.to_parquet(folder / f"{safe}.sigma.parquet", engine="pyarrow", index=False)
    save_json(folder, safe, {
        "kind": ens.kind, "seed": ens.seed, "length": ens.length,
        "times": ens.times, "xs": ens.xs, "reps": R,
        "has_sigma": ens.sigma_values is not None,
    })
    return path


def load_ensemble(path: str | Path) -> PathEnsemble:
    """Load an archive written by save_ensemble (path to the .parquet file)."""
    path = Path(path)
    sidecar = path.with_suffix(".json")
    if not path.exists() or not sidecar.exists():
        raise ConfigError(f"path archive not found: {path} (with sidecar {sidecar.name})")
    meta = load_json(sidecar)
    times = np.asarray(meta["times"], dtype=float)
    xs = np.asarray(meta["xs"], dtype=float)
    frame = pd.read_parquet(path, engine="pyarrow")
    cols = [f"x{j}" for j in range(xs.size)]
    R, T = int(meta["reps"]), times.size
    values = frame[cols].to_numpy().reshape(R, T, xs.size)
    reps = frame["replicate"].to_numpy()[::T]
    sigma = None
    if meta.get("has_sigma"):
        sig = pd.read_parquet(path.with_name(path.stem + ".sigma.parquet"), engine="pyarrow")
        sigma = sig[cols].to_numpy().reshape(R, T, xs.size)
    return PathEnsemble(times, xs, values, int(meta["seed"]), float(meta["length"]), meta["kind"], sigma, reps)


# ---------------------------------------------------------------------------
# Manifest management
# ---------------------------------------------------------------------------

def versions() -> dict:
    import pyarrow
    import scipy

    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pandas": pd.__version__,
        "pyarrow": pyarrow.__version__,
    }


def load_manifest(out_dir: Path) -> dict:
    path = out_dir / MANIFEST_NAME
    if path.exists():
        return load_json(path)
    return {}


def save_manifest(out_dir: Path, manifest: dict):
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / MANIFEST_NAME, "w", encoding="utf-8") as f:
        json.dump(_clean_floats(manifest), f, indent=2, default=_json_default)
        f.write("\n")


def new_manifest(subcommand: str, config: dict, seed: int) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "subcommand": subcommand,
        "config": config,
        "seed": seed,
        "versions": versions(),
        "started": datetime.now().isoformat(),
        "artifacts": {},
    }


def update_manifest(manifest: dict, name: str, path: Path | None = None,
                    df: pd.DataFrame | None = None, error: str | None = None):
    entry = manifest.setdefault("artifacts", {}).get(name, {})
    if error:
        entry["status"] = "error"
        entry["error"] = error
    else:
        entry["status"] = "ok"
        entry.pop("error", None)
        if path is not None:
            entry["path"] = path.name if path.parent.name != PATHS_DIR else f"{PATHS_DIR}/{path.name}"
        if df is not None:
            entry["rows"] = len(df)
    manifest["artifacts"][name] = entry


def write_diagnostic(out_dir: Path, subcommand: str, exc: BaseException, config: dict) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "subcommand": subcommand,
        "error_type": type(exc).__name__,
        "message": str(exc),
        "config": config,
        "written": datetime.now().isoformat(),
    }
    for attr in ("step", "replicate", "required_modes", "condition"):
        if hasattr(exc, attr):
            payload[attr] = getattr(exc, attr)
    if not isinstance(exc, LabError):
        payload["traceback"] = traceback.format_exception(type(exc), exc, exc.__traceback__)
    path = out_dir / DIAGNOSTIC_NAME
    with open(path, "w", encoding="utf-8") as f:
        json.dump(_clean_floats(payload), f, indent=2, default=_json_default)
        f.write("\n")
    return path


# Keys that differ between otherwise identical runs: clocks, timings and where
# and how wide the run was executed.
RUN_LOCAL_KEYS = ("started", "written", "wall_time_s", "timings")
RUN_LOCAL_CONFIG_KEYS = ("out", "threads")


def _stable_json(path: Path) -> bytes:
    body = load_json(path)
    for key in RUN_LOCAL_KEYS:
        body.pop(key, None)
    config = body.get("config")
    if isinstance(config, dict):
        body["config"] = {k: v for k, v in config.items() if k not in RUN_LOCAL_CONFIG_KEYS}
    return json.dumps(body, indent=2, sort_keys=True).encode("utf-8")


def artifact_digests(out_dir: Path) -> dict[str, str]:
    """SHA-256 per file under `out_dir`, keyed by relative path.

    The manifest and diagnostic are hashed without their run-local keys;
    every other artifact is hashed byte for byte.
    """
    out_dir = Path(out_dir)
    digests = {}
    for path in sorted(p for p in out_dir.rglob("*") if p.is_file()):
        rel = path.relative_to(out_dir).as_posix()
        data = _stable_json(path) if rel in (MANIFEST_NAME, DIAGNOSTIC_NAME) else path.read_bytes()
        digests[rel] = hashlib.sha256(data).hexdigest()
    return digests
