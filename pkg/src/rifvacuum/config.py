"""Run configuration: defaults, YAML file, environment overrides, command-line flags.

Precedence, lowest first: built-in defaults, the config file, environment
variables, then explicit flags. The file may use nested mappings or flat
dotted keys (``grid.points: 200``). Environment variables are named
``RIFVACUUM_`` plus the upper-cased key path with ``__`` for dots, e.g.
``RIFVACUUM_GRID__POINTS=200``.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .medium import SellmeierMedium
from .scattering import UNITARITY_TOL

ENV_PREFIX = "RIFVACUUM_"

STANDARD_DELTA_N = [1e-3, 2e-3, 4e-3, 1e-2, 2e-2, 3e-2, 4e-2, 5.6e-2]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class MediumConfig(_Strict):
    resonance_wavelengths_nm: tuple[float, float, float] = (9904.0, 116.0, 68.5)
    elastic_constants: tuple[float, float, float] = (0.07142, 0.03246, 0.05540)
    guard_band: float = Field(1e-3, gt=0, lt=0.5)

    @field_validator("resonance_wavelengths_nm")
    @classmethod
    def _decreasing(cls, v):
        if not all(x > 0 for x in v) or not (v[0] > v[1] > v[2]):
            raise ValueError("must be positive and strictly decreasing")
        return v

    @field_validator("elastic_constants")
    @classmethod
    def _nonneg(cls, v):
        if any(x < 0 for x in v):
            raise ValueError("must be non-negative")
        return v

    def build(self) -> SellmeierMedium:
        return SellmeierMedium(
            resonance_wavelengths=tuple(x * 1e-9 for x in self.resonance_wavelengths_nm),
            elastic_constants=self.elastic_constants,
            guard_band=self.guard_band,
        )


class GridConfig(_Strict):
    points: int = Field(400, ge=16)
    lab_points: int = Field(2000, ge=16)
    lab_min_nm: float = Field(230.0, ge=230.0)
    lab_max_nm: float = 4000.0
    quad_points: int = Field(48, ge=8)
    dispersion_points: int = Field(200, ge=2)

    @model_validator(mode="after")
    def _order(self):
        if not self.lab_max_nm > self.lab_min_nm:
            raise ValueError("lab_max_nm must exceed lab_min_nm")
        return self


class FitConfig(_Strict):
    low_range: tuple[float, float] = (1e-3, 4e-2)
    high_range: tuple[float, float] = (0.052, 1.0)
    interval: str = "horizon"

    @field_validator("interval")
    @classmethod
    def _interval(cls, v):
        if v not in ("horizon", "sli"):
            raise ValueError("must be 'horizon' or 'sli'")
        return v


class ToleranceConfig(_Strict):
    unitarity: float = Field(UNITARITY_TOL, gt=0)


class RunConfig(_Strict):
    medium: MediumConfig = MediumConfig()
    u: float = Field(0.66, gt=0, lt=1)
    delta_n: float = Field(0.02, ge=0)
    delta_n_list: list[float] = Field(default_factory=lambda: list(STANDARD_DELTA_N))
    n_ref: float | None = Field(None, gt=1)
    grid: GridConfig = GridConfig()
    fit: FitConfig = FitConfig()
    tolerance: ToleranceConfig = ToleranceConfig()
    length_mm: float = Field(1.0, gt=0)
    out: str = "out"
    jobs: int = Field(1, ge=1)

    @field_validator("delta_n_list")
    @classmethod
    def _dn_list(cls, v):
        if not v or any(x < 0 for x in v):
            raise ValueError("must be a non-empty list of non-negative values")
        return v

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form; the output directory is excluded."""
        data = self.model_dump(mode="json", exclude={"out", "jobs"})
        return hashlib.sha256(json.dumps(data, sort_keys=True).encode()).hexdigest()


def _set_path(tree: dict, path: list[str], value) -> None:
    node = tree
    for key in path[:-1]:
        node = node.setdefault(key, {})
        if not isinstance(node, dict):
            raise ValueError(f"{'.'.join(path)}: parent is not a mapping")
    node[path[-1]] = value


def unflatten(data: dict) -> dict:
    out: dict = {}
    for key, value in data.items():
        if isinstance(value, dict):
            value = unflatten(value)
        path = str(key).split(".")
        if isinstance(value, dict):
            node = out
            for p in path:
                node = node.setdefault(p, {})
            node.update(value)
        else:
            _set_path(out, path, value)
    return out


def env_overrides(environ=None) -> dict:
    environ = os.environ if environ is None else environ
    out: dict = {}
    for name in sorted(environ):
        if not name.startswith(ENV_PREFIX):
            continue
        path = name[len(ENV_PREFIX):].lower().split("__")
        _set_path(out, path, yaml.safe_load(environ[name]))
    return out


def _merge(base: dict, extra: dict) -> dict:
    out = dict(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def load_config(path: str | Path | None = None, overrides: dict | None = None, environ=None) -> RunConfig:
    """Resolve a RunConfig; raises pydantic.ValidationError with field paths on bad input."""
    data: dict = {}
    if path is not None:
        text = Path(path).read_text()
        loaded = yaml.safe_load(text) or {}
        if not isinstance(loaded, dict):
            raise ValueError(f"{path}: top level must be a mapping")
        data = unflatten(loaded)
    data = _merge(data, env_overrides(environ))
    if overrides:
        data = _merge(data, unflatten({k: v for k, v in overrides.items() if v is not None}))
    return RunConfig.model_validate(data)
