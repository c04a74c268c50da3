"""TOML experiment configs, CSV data files and JSON reports."""

from __future__ import annotations

import csv
import io
import json
import math
from importlib import resources
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .model import (AR1, BumpDense, BumpSparse, Explicit, Gaussian, GaussianIsotropic, HalfUniformHalfNormal,
                    Identity, Known, Rademacher, RegressionSample, sample_scaled, substream)
from .simharness import ExperimentResult, SimulationConfig, TARGETS

# substream key for a covariance drawn at config time (distinct from the harness keys 0 and 1)
_CONFIG_COV_STREAM = 2


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class DataError(ValueError):
    """Malformed input data; the message names the offending row/column."""


# --------------------------------------------------------------------------
# Config
# --------------------------------------------------------------------------

def _get(table: dict, key: str, path: str, kind=None, default=...):
    if key not in table:
        if default is ...:
            raise ConfigError(f"{path}{key}", "missing required field")
        return default
    val = table[key]
    if kind is float and isinstance(val, int) and not isinstance(val, bool):
        val = float(val)
    if kind is not None and not isinstance(val, kind):
        raise ConfigError(f"{path}{key}", f"expected {kind.__name__}, got {type(val).__name__}")
    return val


def _covariance(table: dict, d: int, seed: int, base: Path, path: str):
    kind = _get(table, "kind", path, str)
    if kind == "identity":
        return Identity()
    if kind == "ar1":
        alpha = _get(table, "alpha", path, float)
        if not abs(alpha) < 1:
            raise ConfigError(f"{path}alpha", "must satisfy |alpha| < 1")
        return AR1(alpha)
    if kind == "known":
        return Known(read_matrix_csv(base / _get(table, "path", path, str)))
    if kind == "sample_scaled":
        rows = _get(table, "rows", path, int, 2 * d)
        factor = _get(table, "factor", path, float, None)
        return sample_scaled(d, rows, substream(seed, _CONFIG_COV_STREAM), factor)
    raise ConfigError(f"{path}kind", f"unknown covariance kind {kind!r}")


def _design(table: dict, d: int, seed: int, base: Path):
    path = "design."
    kind = _get(table, "kind", path, str)
    if kind == "gaussian_isotropic":
        return GaussianIsotropic()
    if kind == "rademacher":
        return Rademacher()
    if kind == "gaussian":
        cov = _get(table, "covariance", path, dict)
        return Gaussian(_covariance(cov, d, seed, base, "design.covariance."))
    raise ConfigError("design.kind", f"unknown design kind {kind!r}")


def _beta_pattern(table: dict, base: Path):
    path = "beta_pattern."
    kind = _get(table, "kind", path, str)
    if kind == "half_uniform_half_normal":
        return HalfUniformHalfNormal(_get(table, "target_norm_sq", path, float, 1.0))
    if kind == "bump_sparse":
        return BumpSparse(_get(table, "bumps", path, int), _get(table, "spacing", path, int),
                          _get(table, "target_tau1_sq", path, float))
    if kind == "bump_dense":
        return BumpDense(_get(table, "spacing", path, int), _get(table, "target_tau1_sq", path, float))
    if kind == "explicit":
        if "path" in table:
            return Explicit(read_matrix_csv(base / table["path"]).ravel())
        return Explicit(np.asarray(_get(table, "vector", path, list), dtype=float))
    raise ConfigError("beta_pattern.kind", f"unknown beta pattern kind {kind!r}")


def config_from_dict(raw: dict, base: Path = Path(".")) -> SimulationConfig:
    """Build a :class:`SimulationConfig`; relative file paths resolve against ``base``."""
    n = _get(raw, "n", "", int)
    d = _get(raw, "d", "", int)
    seed = _get(raw, "master_seed", "", int, 0)
    design = _design(_get(raw, "design", "", dict), d, seed, base)
    pattern = _beta_pattern(_get(raw, "beta_pattern", "", dict), base)
    estimators = _get(raw, "estimators", "", list, ["identity", "spectral"])
    try:
        return SimulationConfig(
            n=n, d=d,
            sigma2=_get(raw, "sigma2", "", float),
            design=design,
            beta_pattern=pattern,
            estimators=tuple(estimators),
            replicates=_get(raw, "replicates", "", int, 500),
            master_seed=seed,
            confidence_level=_get(raw, "confidence_level", "", float, 0.95),
        )
    except ValueError as exc:
        raise ConfigError("<root>", str(exc)) from exc


def load_config(path: str | Path) -> SimulationConfig:
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text())
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(str(path), str(exc)) from exc
    return config_from_dict(raw, path.parent)


def bundled_config(name: str) -> Path:
    return Path(str(resources.files("hdsnr") / "configs" / name))


# --------------------------------------------------------------------------
# CSV
# --------------------------------------------------------------------------

def fmt(x) -> str:
    """Locale-independent, round-trip exact text for a CSV cell."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def read_sample_csv(path: str | Path, response: str = "y") -> RegressionSample:
    """Read a header-ed CSV; ``response`` names y, every other column is a predictor."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DataError(f"{path} is empty")
    header = [h.strip() for h in rows[0]]
    if response not in header:
        raise DataError(f"response column {response!r} not found in header {header}")
    if len(header) < 2:
        raise DataError("need at least one predictor column besides the response")
    body = [r for r in rows[1:] if any(c.strip() for c in r)]
    if not body:
        raise DataError("no data rows")
    vals = np.empty((len(body), len(header)))
    for i, r in enumerate(body, start=2):
        if len(r) != len(header):
            raise DataError(f"row {i}: expected {len(header)} cells, found {len(r)}")
        for j, cell in enumerate(r):
            try:
                v = float(cell)
            except ValueError:
                raise DataError(f"row {i}, column {header[j]!r}: cannot parse {cell!r} as a number") from None
            if not math.isfinite(v):
                raise DataError(f"row {i}, column {header[j]!r}: value {cell!r} is not finite")
            vals[i - 2, j] = v
    k = header.index(response)
    return RegressionSample(vals[:, k], np.delete(vals, k, axis=1))


def write_sample_csv(path: str | Path, sample: RegressionSample) -> None:
    header = ["y"] + [f"x{j + 1}" for j in range(sample.d)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for yi, xi in zip(sample.y, sample.X):
            w.writerow([fmt(yi)] + [fmt(v) for v in xi])


def read_matrix_csv(path: str | Path) -> np.ndarray:
    """Numeric CSV matrix; a non-numeric first row is treated as a header."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if not rows:
        raise DataError(f"{path} is empty")
    try:
        [float(c) for c in rows[0]]
    except ValueError:
        rows = rows[1:]
    try:
        return np.array([[float(c) for c in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc


RAW_COLUMNS = (["replicate", "estimator", "sigma2", "tau2", "snr", "snr_raw"]
               + [f"{p}_{t.value}{s}" for t in TARGETS for p, s in (("ci", "_lo"), ("ci", "_hi"), ("covered", ""))]
               + ["error"])


def write_raw_csv(path: str | Path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RAW_COLUMNS)
        for row in rows:
            w.writerow([fmt(row[c]) for c in RAW_COLUMNS])


# --------------------------------------------------------------------------
# JSON
# --------------------------------------------------------------------------

def jsonable(obj):
    """Recursively convert to JSON-safe types; non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), indent=2, allow_nan=False)


def config_echo(cfg: SimulationConfig) -> dict:
    return {
        "n": cfg.n, "d": cfg.d, "sigma2": cfg.sigma2, "replicates": cfg.replicates,
        "master_seed": cfg.master_seed, "confidence_level": cfg.confidence_level,
        "estimators": list(cfg.estimators), "design": repr(cfg.design), "beta_pattern": repr(cfg.beta_pattern),
    }


def summary_document(result: ExperimentResult) -> dict:
    return {
        "config": config_echo(result.config),
        "beta_norm_sq": float(result.beta @ result.beta),
        **result.summary.to_dict(),
    }


def load_schema(name: str) -> dict:
    return json.loads((resources.files("hdsnr") / "schemas" / name).read_text())
