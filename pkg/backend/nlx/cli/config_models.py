"""
Experiment Config Models

TOML experiment files are validated into these models. Every catalogue key
is checked here so a bad name fails before any tree is built.

Example:

    run = ["axioms", "recover", "represent"]

    [tree]
    T = 1.0
    N = 8

    [operator]
    kind = "drift_uncertainty"
    mu = 0.1
"""

import hashlib
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Dict, List, Literal, Optional, Union

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from ..efsde import DRIVER_REGISTRY
from ..errors import ConfigError
from ..fexp import CLAIM_BUILDERS
from ..fexp.corpus import DEFAULT_CLAIM_KEYS
from ..generators import GENERATOR_REGISTRY
from ..generators.modulus import MODULUS_REGISTRY

STAGES = ("axioms", "dominate", "solve", "picard", "doob-meyer", "recover", "represent")
CLAIM_KEYS = ("const", "noise") + tuple(CLAIM_BUILDERS)


class StrictModel(BaseModel):
    model_config = {"extra": "forbid"}


# ==================== SECTIONS ====================

class TreeConfig(StrictModel):
    T: float = Field(gt=0)
    N: int = Field(ge=1)
    d: int = Field(default=1, ge=1)


class ModulusConfig(StrictModel):
    name: str = "linear"
    params: Dict[str, float] = {}

    @field_validator("name")
    @classmethod
    def known_modulus(cls, v: str) -> str:
        if v not in MODULUS_REGISTRY:
            raise ValueError(f"unknown modulus {v!r}; known: {sorted(MODULUS_REGISTRY)}")
        return v


class GeneratorConfig(StrictModel):
    name: str
    params: Dict[str, float] = {}
    modulus: Optional[ModulusConfig] = None

    @field_validator("name")
    @classmethod
    def known_generator(cls, v: str) -> str:
        if v not in GENERATOR_REGISTRY:
            raise ValueError(f"unknown generator {v!r}; known: {sorted(GENERATOR_REGISTRY)}")
        return v

    @model_validator(mode="after")
    def modulus_when_needed(self) -> "GeneratorConfig":
        if self.name in ("phi_norm", "neg_phi_norm") and self.modulus is None:
            raise ValueError(f"generator {self.name!r} needs a [generator.modulus] section")
        return self


class OperatorConfig(StrictModel):
    kind: Literal["classical", "drift_uncertainty", "from_generator"] = "classical"
    mu: float = Field(default=0.0, ge=0)


class ClaimsConfig(StrictModel):
    keys: List[str] = list(DEFAULT_CLAIM_KEYS)
    constants: List[float] = [1.0, -0.5]

    @field_validator("keys")
    @classmethod
    def known_claims(cls, v: List[str]) -> List[str]:
        unknown = [k for k in v if k not in CLAIM_KEYS]
        if unknown:
            raise ValueError(f"unknown claim keys {unknown}; known: {sorted(CLAIM_KEYS)}")
        if not v:
            raise ValueError("claim corpus must not be empty")
        return v


class DriverConfig(StrictModel):
    name: str = "zero"
    params: Dict[str, Union[float, List[float]]] = {}

    @field_validator("name")
    @classmethod
    def known_driver(cls, v: str) -> str:
        if v not in DRIVER_REGISTRY:
            raise ValueError(f"unknown driver {v!r}; known: {sorted(DRIVER_REGISTRY)}")
        return v


class PicardConfig(StrictModel):
    driver: DriverConfig = DriverConfig()
    claim: str = "B_T"
    z: List[float] = [0.0]
    eta: float = Field(default=0.0, ge=0)
    compare_shift: float = Field(default=1.0, ge=0)

    @field_validator("claim")
    @classmethod
    def known_claim(cls, v: str) -> str:
        if v not in CLAIM_BUILDERS:
            raise ValueError(f"unknown claim {v!r}; known: {sorted(CLAIM_BUILDERS)}")
        return v


class DoobMeyerConfig(StrictModel):
    """Obstacle Y_k = E[claim|F_k] - drift * t_k (claim omitted: Y_k = -drift * t_k)."""

    drift: float = Field(default=0.1, ge=0)
    claim: Optional[str] = None
    z: List[float] = [0.0]
    levels: List[float] = [1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024]
    target: Optional[float] = Field(default=None, gt=0)

    @field_validator("levels")
    @classmethod
    def increasing_levels(cls, v: List[float]) -> List[float]:
        if not v or any(n <= 0 for n in v) or any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("levels must be positive and strictly increasing")
        return v

    @field_validator("claim")
    @classmethod
    def known_claim(cls, v: Optional[str]) -> Optional[str]:
        if v is not None and v not in CLAIM_BUILDERS:
            raise ValueError(f"unknown claim {v!r}; known: {sorted(CLAIM_BUILDERS)}")
        return v


class RecoverConfig(StrictModel):
    z_grid: List[float] = [0.0, -0.5, 0.5, -1.0, 1.0, -2.0, 2.0, -4.0, 4.0]
    steps: Optional[List[int]] = None
    horizon_steps: List[int] = [1, 2]
    reference_node: int = Field(default=0, ge=0)
    interpolation: Literal["linear_abs", "linear_signed", "nearest"] = "linear_abs"
    via_doob_meyer: bool = False
    tolerance: float = Field(default=1e-10, gt=0)


class SweepConfig(StrictModel):
    axis: Optional[Literal["N", "level", "grid"]] = None
    values: List[float] = []
    grid_points: int = Field(default=9, ge=2)


class OutputConfig(StrictModel):
    directory: str = "out"


class ExperimentConfig(StrictModel):
    """One experiment: a tree, an operator and the stages to run on it."""

    name: str = "experiment"
    seed: Optional[int] = None
    run: List[str] = ["axioms"]
    strict: bool = False
    tree: TreeConfig
    operator: OperatorConfig = OperatorConfig()
    generator: Optional[GeneratorConfig] = None
    claims: ClaimsConfig = ClaimsConfig()
    picard: PicardConfig = PicardConfig()
    doob_meyer: DoobMeyerConfig = DoobMeyerConfig()
    recover: RecoverConfig = RecoverConfig()
    sweep: SweepConfig = SweepConfig()
    output: OutputConfig = OutputConfig()

    @field_validator("run")
    @classmethod
    def known_stages(cls, v: List[str]) -> List[str]:
        unknown = [s for s in v if s not in STAGES]
        if unknown:
            raise ValueError(f"unknown stages {unknown}; known: {list(STAGES)}")
        return v

    @model_validator(mode="after")
    def generator_when_needed(self) -> "ExperimentConfig":
        if self.operator.kind == "from_generator" and self.generator is None:
            raise ValueError("operator kind 'from_generator' needs a [generator] section")
        if "solve" in self.run and self.generator is None:
            raise ValueError("stage 'solve' needs a [generator] section")
        return self

    def config_hash(self) -> str:
        return hashlib.sha256(self.model_dump_json().encode("utf-8")).hexdigest()


# ==================== LOADING ====================

def _dotted(loc) -> str:
    return ".".join(str(part) for part in loc)


def parse_config(data: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        raise ConfigError(first["msg"], key=_dotted(first["loc"]) or None) from exc


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """Read and validate a TOML experiment file."""
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(data)
