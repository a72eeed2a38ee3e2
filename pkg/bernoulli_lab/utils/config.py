"""
Experiment configuration: YAML defaults, user files and command-line overrides.
"""

import json
import logging
from importlib.resources import files
from pathlib import Path
from typing import Any, Dict, List, Literal, Mapping, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from bernoulli_lab.components.boundary_data import BoundaryDatum, DatumFamily
from bernoulli_lab.components.geometry import DomainSpec
from bernoulli_lab.components.solver import SolveOptions
from bernoulli_lab.exceptions import ConfigurationError

logger = logging.getLogger(__name__)

# Shipped as package data so an installed CLI keeps its defaults.
DEFAULT_CONFIG = files("bernoulli_lab") / "config" / "default.yaml"

CheckKind = Literal["comparison", "cutpaste", "barrier", "equicontinuity", "holder", "restriction"]


class SweepSettings(BaseModel):
    model_config = ConfigDict(frozen=True)

    tmin: float = Field(0.1, gt=0, lt=1)
    tmax: float = Field(0.9, gt=0, lt=1)
    tstep: float = Field(0.05, gt=0)
    keep_fields: bool = True

    @model_validator(mode="after")
    def _ordered(self) -> "SweepSettings":
        if self.tmax < self.tmin:
            raise ValueError("sweep.tmax must not be below sweep.tmin")
        return self


class CheckSettings(BaseModel):
    """Parameters of the ``check`` subcommand."""

    model_config = ConfigDict(frozen=True)

    shift: float = Field(0.1, gt=0)
    gamma: float = Field(0.75, gt=0, le=1)
    band: Optional[float] = Field(None, gt=0)
    level: float = 0.0
    rho: Optional[float] = Field(None, gt=0)
    deltas: List[float] = Field(default_factory=lambda: [0.0625, 0.125, 0.25, 0.5])
    scales: List[float] = Field(default_factory=lambda: [0.2, 0.4, 0.6, 0.8, 1.0])
    subdomain: Optional[DomainSpec] = None


class AcceptanceSettings(BaseModel):
    """Grid sizes and sample counts of the acceptance suite."""

    model_config = ConfigDict(frozen=True)

    annulus_ladder: List[int] = Field(default_factory=lambda: [32, 64, 128])
    holder_ladder: List[int] = Field(default_factory=lambda: [32, 64, 128])
    comparison_pairs: int = Field(20, ge=1)
    comparison_n: int = Field(64, ge=4)
    cutpaste_pairs: int = Field(100, ge=1)
    equicontinuity_n: int = Field(64, ge=4)
    barrier_n: int = Field(64, ge=4)
    sweep1d_step: float = Field(0.01, gt=0)


class ExperimentConfig(BaseModel):
    """Everything a subcommand needs; echoed to ``config.json`` in the output directory."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    domain: Optional[DomainSpec] = None
    datum: Optional[BoundaryDatum] = None
    family: Optional[DatumFamily] = None
    h: float = Field(1.0 / 32.0, gt=0)
    lam: float = Field(1.0, gt=0, alias="lambda")
    mode: Literal["single", "extremes"] = "single"
    solver: SolveOptions = Field(default_factory=SolveOptions)
    checks: List[CheckKind] = Field(default_factory=lambda: ["comparison", "cutpaste", "barrier", "equicontinuity", "holder"])
    check: CheckSettings = Field(default_factory=CheckSettings)
    output_dir: Path = Path("results")
    seed: int = 0
    threads: Optional[int] = Field(None, ge=0)
    sweep: SweepSettings = Field(default_factory=SweepSettings)
    acceptance: AcceptanceSettings = Field(default_factory=AcceptanceSettings)

    @model_validator(mode="before")
    @classmethod
    def _share_lambda(cls, data: Any) -> Any:
        # the solver always runs with the experiment's lambda
        if not isinstance(data, dict):
            return data
        lam = data.get("lambda", data.get("lam"))
        if lam is None:
            return data
        solver = data.get("solver") or {}
        if isinstance(solver, SolveOptions):
            solver = solver.model_dump(by_alias=True)
        data = dict(data)
        data["solver"] = {**{k: v for k, v in solver.items() if k != "lam"}, "lambda": lam}
        return data

    def require(self, *names: str) -> None:
        """Raise ConfigurationError unless every named field is set."""
        missing = [name for name in names if getattr(self, name) is None]
        if missing:
            raise ConfigurationError(f"configuration is missing: {', '.join(missing)}")

    def to_document(self) -> Dict[str, Any]:
        return json.loads(self.model_dump_json(by_alias=True))


def deep_merge(base: Mapping[str, Any], update: Mapping[str, Any]) -> Dict[str, Any]:
    """Recursive dict merge; values in ``update`` win, None values are ignored."""
    merged = dict(base)
    for key, value in update.items():
        if value is None:
            continue
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def parse_document(value: Union[str, Path, Mapping[str, Any], None]) -> Optional[Dict[str, Any]]:
    """
    A JSON/YAML mapping given inline, as a file path, or already parsed.

    Raises:
        ConfigurationError: If the text does not parse to a mapping
    """
    if value is None or isinstance(value, Mapping):
        return None if value is None else dict(value)
    text = str(value)
    path = Path(text)
    try:
        if len(text) < 4096 and path.suffix.lower() in (".json", ".yaml", ".yml") and path.exists():
            with open(path, "r", encoding="utf-8") as f:
                document = yaml.safe_load(f)
        else:
            document = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigurationError(f"cannot parse {text[:60]!r}: {e}") from e
    if not isinstance(document, Mapping):
        raise ConfigurationError(f"expected a JSON object, got {type(document).__name__}")
    return dict(document)


def _describe(error: ValidationError) -> str:
    first = error.errors()[0]
    location = ".".join(str(part) for part in first["loc"]) or "config"
    return f"invalid {location}: {first['msg']}"


def load_config(path: Optional[Union[str, Path]] = None, overrides: Optional[Mapping[str, Any]] = None) -> ExperimentConfig:
    """
    Load the default config, merge a user file and overrides, and validate.

    Args:
        path: Optional YAML or JSON config file
        overrides: Keys set on the command line (None values are skipped)

    Raises:
        ConfigurationError: If a file is unreadable or the merged config is invalid
    """
    document = yaml.safe_load(DEFAULT_CONFIG.read_text(encoding="utf-8")) or {}

    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as f:
                user = yaml.safe_load(f) or {}
        except (OSError, yaml.YAMLError) as e:
            raise ConfigurationError(f"cannot read config {path}: {e}") from e
        if not isinstance(user, Mapping):
            raise ConfigurationError(f"config {path} is not a mapping")
        document = deep_merge(document, user)
        logger.debug("Merged config file %s", path)

    if overrides:
        document = deep_merge(document, overrides)

    try:
        return ExperimentConfig.model_validate(document)
    except ValidationError as e:
        raise ConfigurationError(_describe(e)) from e
