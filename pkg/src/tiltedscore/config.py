"""Strict JSON experiment configs with field-path diagnostics.

Unknown keys are rejected, every reported problem carries the dotted path
of the offending field, and dimensions are cross-checked at load time so
commands never crash halfway through a sweep.
"""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConfigError
from .mixtures import GaussianMixture
from .oracle import QuadratureSpec
from .sampler import SamplerConfig, make_schedule
from .tilt import TiltParams

MAX_UGRID_POINTS = 2**20


@dataclass(frozen=True)
class UGrid:
    """Cartesian grid of query points: per-axis bounds and node count."""

    lower: np.ndarray
    upper: np.ndarray
    points_per_axis: int

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float)).copy()
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float)).copy()
        if lower.ndim != 1 or lower.shape != upper.shape or lower.shape[0] == 0:
            raise ValueError("lower and upper must be matching non-empty vectors")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ValueError("grid bounds must be finite")
        if np.any(lower > upper):
            raise ValueError("lower must not exceed upper")
        n = int(self.points_per_axis)
        if n < 1:
            raise ValueError(f"points_per_axis must be at least 1, got {n}")
        if n > 1 and np.any(lower >= upper):
            raise ValueError("lower must be strictly below upper when points_per_axis > 1")
        if n ** lower.shape[0] > MAX_UGRID_POINTS:
            raise ValueError(
                f"grid of {n}^{lower.shape[0]} query points exceeds the cap of {MAX_UGRID_POINTS}"
            )
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "points_per_axis", n)

    @property
    def dim(self):
        return self.lower.shape[0]

    def points(self):
        """All grid points as an (N, d) array, last axis fastest."""
        axes = [
            np.linspace(self.lower[i], self.upper[i], self.points_per_axis)
            for i in range(self.dim)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.reshape(-1) for g in mesh], axis=-1)

    def to_dict(self):
        return {
            "lower": self.lower.tolist(),
            "upper": self.upper.tolist(),
            "points_per_axis": self.points_per_axis,
        }


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one CLI invocation needs, fully validated."""

    base_model: GaussianMixture
    tilt: TiltParams
    sigma_grid: np.ndarray
    u_grid: UGrid
    output_path: str
    quadrature: Optional[QuadratureSpec] = None
    sampler: Optional[SamplerConfig] = None
    sampler_schedule_spec: Optional[dict] = None

    def to_dict(self):
        out = {
            "base_model": self.base_model.to_dict(),
            "tilt": self.tilt.to_dict(),
            "sigma_grid": list(self.sigma_grid),
            "u_grid": self.u_grid.to_dict(),
            "output_path": self.output_path,
        }
        if self.quadrature is not None:
            out["quadrature"] = self.quadrature.to_dict()
        if self.sampler is not None:
            out["sampler"] = {
                "schedule": dict(self.sampler_schedule_spec),
                "n_samples": self.sampler.n_samples,
                "seed": self.sampler.seed,
                "mode": self.sampler.mode,
            }
        return out


def _expect_mapping(data, path):
    if not isinstance(data, dict):
        raise ConfigError(path, f"expected an object, got {type(data).__name__}")


def _expect_keys(data, path, required, optional=frozenset()):
    unknown = sorted(set(data) - set(required) - set(optional))
    if unknown:
        raise ConfigError(path, f"unknown keys: {unknown}")
    missing = sorted(set(required) - set(data))
    if missing:
        raise ConfigError(path, f"missing keys: {missing}")


def _number(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {type(value).__name__}")
    return float(value)


def _integer(value, path):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(path, f"expected an integer, got {type(value).__name__}")
    return value


def _number_vector(value, path):
    if not isinstance(value, list) or not value:
        raise ConfigError(path, "expected a non-empty list of numbers")
    return np.array([_number(x, f"{path}[{i}]") for i, x in enumerate(value)])


def _parse_ugrid(data, path):
    _expect_mapping(data, path)
    _expect_keys(data, path, required=("lower", "upper", "points_per_axis"))
    try:
        return UGrid(
            lower=_number_vector(data["lower"], f"{path}.lower"),
            upper=_number_vector(data["upper"], f"{path}.upper"),
            points_per_axis=_integer(data["points_per_axis"], f"{path}.points_per_axis"),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(path, str(exc)) from exc


def _parse_quadrature(data, path):
    _expect_mapping(data, path)
    _expect_keys(data, path, required=("lower", "upper", "points_per_axis"))
    try:
        return QuadratureSpec(
            lower=_number_vector(data["lower"], f"{path}.lower"),
            upper=_number_vector(data["upper"], f"{path}.upper"),
            points_per_axis=_integer(data["points_per_axis"], f"{path}.points_per_axis"),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(path, str(exc)) from exc


def _parse_sampler(data, path):
    _expect_mapping(data, path)
    _expect_keys(data, path, required=("schedule", "n_samples", "seed"), optional=("mode",))
    sched_path = f"{path}.schedule"
    sched = data["schedule"]
    _expect_mapping(sched, sched_path)
    _expect_keys(sched, sched_path, required=("kind", "steps"), optional=("sigma_min",))
    if not isinstance(sched["kind"], str):
        raise ConfigError(f"{sched_path}.kind", "expected a string")
    schedule_spec = {
        "kind": sched["kind"],
        "steps": _integer(sched["steps"], f"{sched_path}.steps"),
        "sigma_min": _number(sched.get("sigma_min", 0.0), f"{sched_path}.sigma_min"),
    }
    try:
        schedule = make_schedule(**schedule_spec)
    except ValueError as exc:
        raise ConfigError(sched_path, str(exc)) from exc
    mode = data.get("mode", "deterministic")
    if not isinstance(mode, str):
        raise ConfigError(f"{path}.mode", "expected a string")
    try:
        sampler = SamplerConfig(
            schedule=schedule,
            n_samples=_integer(data["n_samples"], f"{path}.n_samples"),
            seed=_integer(data["seed"], f"{path}.seed"),
            mode=mode,
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(path, str(exc)) from exc
    return sampler, schedule_spec


def _parse_base_model(value, base_dir):
    if isinstance(value, dict):
        return GaussianMixture.from_dict(value, path="base_model")
    if isinstance(value, str):
        model_path = Path(value)
        if not model_path.is_absolute() and base_dir is not None:
            model_path = Path(base_dir) / model_path
        try:
            text = model_path.read_text()
        except OSError as exc:
            raise ConfigError("base_model", f"cannot read {model_path}: {exc}") from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(
                "base_model",
                f"{model_path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}",
            ) from exc
        return GaussianMixture.from_dict(data, path=f"base_model({model_path})")
    raise ConfigError("base_model", "expected an object or a file path string")


def parse_experiment_config(data, base_dir=None):
    """Validate a decoded JSON object into an ExperimentConfig."""
    _expect_mapping(data, "config")
    _expect_keys(
        data,
        "config",
        required=("base_model", "tilt", "sigma_grid", "u_grid", "output_path"),
        optional=("quadrature", "sampler"),
    )
    base_model = _parse_base_model(data["base_model"], base_dir)
    tilt = TiltParams.from_dict(data["tilt"], path="tilt")
    if tilt.dim != base_model.dim:
        raise ConfigError(
            "tilt.v", f"dimension {tilt.dim} does not match base model dimension {base_model.dim}"
        )
    sigma_grid = _number_vector(data["sigma_grid"], "sigma_grid")
    bad = np.flatnonzero((sigma_grid < 0.0) | (sigma_grid > 1.0))
    if bad.size:
        raise ConfigError(f"sigma_grid[{bad[0]}]", f"must lie in [0, 1], got {sigma_grid[bad[0]]}")
    u_grid = _parse_ugrid(data["u_grid"], "u_grid")
    if u_grid.dim != base_model.dim:
        raise ConfigError(
            "u_grid", f"dimension {u_grid.dim} does not match base model dimension {base_model.dim}"
        )
    quadrature = None
    if "quadrature" in data:
        quadrature = _parse_quadrature(data["quadrature"], "quadrature")
        if quadrature.dim != base_model.dim:
            raise ConfigError(
                "quadrature",
                f"dimension {quadrature.dim} does not match base model dimension {base_model.dim}",
            )
    sampler = schedule_spec = None
    if "sampler" in data:
        sampler, schedule_spec = _parse_sampler(data["sampler"], "sampler")
    if not isinstance(data["output_path"], str) or not data["output_path"]:
        raise ConfigError("output_path", "expected a non-empty string")
    sigma_grid.setflags(write=False)
    return ExperimentConfig(
        base_model=base_model,
        tilt=tilt,
        sigma_grid=sigma_grid,
        u_grid=u_grid,
        output_path=data["output_path"],
        quadrature=quadrature,
        sampler=sampler,
        sampler_schedule_spec=schedule_spec,
    )


def load_experiment_config(path):
    """Read and validate a JSON config file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read config: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            str(path), f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    return parse_experiment_config(data, base_dir=path.parent)
