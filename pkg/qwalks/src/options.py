"""
Manage and validate options for the qwalks application
"""
from __future__ import annotations

import math
import os
from pathlib import Path
from typing import Any, Optional

import tomlkit
from tomlkit.exceptions import ParseError
from pydantic import BaseModel, BaseSettings, ValidationError, root_validator, validator

from qwalks.src.constants import Method, Sampler
from qwalks.src.errors import ConfigError
from qwalks.src.serializable import Serializable

DEFAULT_OPTIONS_PATH = "qwalks/options.json"


class Options(BaseSettings, Serializable):
    """Application-wide defaults; QWALKS_* environment variables override them"""

    log_level: str = "INFO"
    tol: float = 1e-9
    qpoch_tol: float = 1e-15
    node_cap: int = 2**16
    enumeration_cap: int = 2**16
    step_cap: int = 10**6
    threads: int = 1
    kernel_method: str = Method.QUADRATURE
    sampler: str = Sampler.AUTO
    mp_dps: int = 30
    mp_dps_cap: int = 4000

    class Config:
        env_prefix = "QWALKS_"
        env_file = ".env"

    @validator("tol", "qpoch_tol")
    def _positive_tolerance(cls, value: float) -> float:
        if value <= 0:
            raise ValueError("tolerances must be positive")
        return value

    @validator("kernel_method")
    def _known_method(cls, value: str) -> str:
        if value not in (Method.QUADRATURE, Method.RESIDUES):
            raise ValueError(f"unknown kernel method {value}")
        return value

    def serialize(self) -> dict:
        return self.dict()

    @classmethod
    def deserialize(cls, *args, **kwargs) -> "Options":
        return cls(*args, **kwargs)

    def save(self, path: str):
        try:
            with open(path, "w", encoding="utf-8") as options_file:
                options_file.write(self.json(indent=4))
        except OSError as err:
            raise ConfigError(f"Could not write options to {path}: {err}") from err


def load_options(path: str = DEFAULT_OPTIONS_PATH) -> Options:
    """Options from `path` when it exists, defaults otherwise"""
    if os.path.exists(path):
        return Options.parse_file(path)
    return Options()


class GridWindow(BaseModel):
    """Rectangular (tau, rho) window scanned with `resolution` points per axis"""

    tau_min: float = 0.05
    tau_max: float = 3.0
    rho_min: float = 0.0
    rho_max: float = 2.0
    resolution: int = 40

    @root_validator(skip_on_failure=True)
    def _ordered(cls, values: dict[str, Any]) -> dict[str, Any]:
        if values["tau_min"] >= values["tau_max"] or values["rho_min"] >= values["rho_max"]:
            raise ValueError("grid window bounds must be increasing")
        if values["resolution"] < 2:
            raise ValueError("grid resolution must be at least 2")
        return values


class RunConfig(BaseModel, Serializable):
    """
    Parameters of one command line run. Exactly one of `q` or the pair
    (`gamma`, `m`) fixes the deformation parameter; with the pair,
    q = exp(-gamma / m).
    """

    q: Optional[float] = None
    gamma: Optional[float] = None
    m: Optional[int] = None
    x: Optional[list[int]] = None
    lam: Optional[list[int]] = None
    a: Optional[list[float]] = None
    C: Optional[list[float]] = None
    seed: int = 0
    seeds: int = 1
    tol: float = 1e-9
    threads: int = 1
    out: Path = Path(".")
    method: str = Method.QUADRATURE
    sampler: str = Sampler.AUTO
    step_cap: int = 10**6
    enumeration_cap: int = 2**16
    window: GridWindow = GridWindow()

    @validator("q")
    def _q_in_unit_interval(cls, value: Optional[float]) -> Optional[float]:
        if value is not None and not 0.0 < value < 1.0:
            raise ValueError(f"q must lie in (0, 1), got {value}")
        return value

    @validator("gamma", "tol")
    def _positive(cls, value: Optional[float]) -> Optional[float]:
        if value is not None and value <= 0:
            raise ValueError("gamma and tol must be positive")
        return value

    @validator("x")
    def _strictly_decreasing(cls, value: Optional[list[int]]) -> Optional[list[int]]:
        if value is None:
            return value
        if any(part < 0 for part in value) or any(
            upper <= lower for upper, lower in zip(value, value[1:])
        ):
            raise ValueError(f"x must be strictly decreasing and nonnegative, got {value}")
        return value

    @validator("lam")
    def _partition(cls, value: Optional[list[int]]) -> Optional[list[int]]:
        if value is None:
            return value
        if not value or value[-1] < 0 or any(upper < lower for upper, lower in zip(value, value[1:])):
            raise ValueError(f"lambda must be a nonincreasing list of nonnegative integers, got {value}")
        return value

    @root_validator(skip_on_failure=True)
    def _q_or_gamma_and_m(cls, values: dict[str, Any]) -> dict[str, Any]:
        if values.get("q") is not None and values.get("gamma") is not None:
            raise ValueError("give either q or (gamma, m), not both")
        return values

    @classmethod
    def build(cls, **kwargs) -> "RunConfig":
        """Validated config; pydantic failures become ConfigError"""
        try:
            return cls(**{key: value for key, value in kwargs.items() if value is not None})
        except ValidationError as err:
            raise ConfigError(f"Invalid run configuration: {err}") from err

    @property
    def resolved_q(self) -> float:
        """The numeric q of this run"""
        if self.q is not None:
            return self.q
        if self.gamma is not None and self.m is not None:
            return math.exp(-self.gamma / self.m)
        raise ConfigError("Run needs either --q or both --gamma and --m")

    def serialize(self) -> dict:
        return json_safe(self.dict())

    @classmethod
    def deserialize(cls, *args, **kwargs) -> "RunConfig":
        return cls(*args, **kwargs)


def json_safe(data: Any) -> Any:
    """Paths become strings so configs can be dumped next to results"""
    if isinstance(data, dict):
        return {key: json_safe(value) for key, value in data.items()}
    if isinstance(data, (list, tuple)):
        return [json_safe(value) for value in data]
    if isinstance(data, Path):
        return str(data)
    return data


def read_config_file(path: str) -> dict[str, Any]:
    """`key = value` file (TOML subset) as a plain dict"""
    try:
        with open(path, encoding="utf-8") as config_file:
            document = tomlkit.parse(config_file.read())
    except (OSError, ParseError) as err:
        raise ConfigError(f"Could not read config file {path}: {err}") from err
    return document.unwrap()
