import hashlib
import json
import logging
from typing import List, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .bandit_env import make_instance, paper_instance
from .errors import ConfigError, InvalidInstance
from .policies import PolicyConfig
from .theory_bounds import BoundConstants

LogLevel = Literal["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]

UNHASHED_FIELDS = {"output_dir", "emit", "log_level"}


class ArmSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", allow_inf_nan=False)

    mean: float
    variance: float = Field(gt=0)


class EmitFlags(BaseModel):
    model_config = ConfigDict(extra="forbid")

    csv: bool = True
    svg: bool = True


class ExperimentConfig(BaseModel):
    """
    One experiment: an instance, the policies to run on it, and the protocol.
    Defaults reproduce the reference setup (built-in 10-arm instance, rho=1, l0=1,
    n=20000, 500 replications, SRTS only).
    """
    model_config = ConfigDict(extra="forbid", allow_inf_nan=False)

    instance: Union[Literal["paper"], List[ArmSpec]] = "paper"
    means_override: Optional[float] = None
    rho: float = Field(default=1.0, ge=0)
    l0: float = Field(default=1.0, gt=0, le=1)
    horizon: int = Field(default=20000, ge=1)
    replications: int = Field(default=500, ge=1)
    base_seed: int = Field(default=20240601, ge=0, lt=2 ** 64)
    rho_grid: Optional[List[float]] = None
    policies: List[PolicyConfig] = Field(default_factory=lambda: [PolicyConfig(kind="srts")])
    constants: BoundConstants = Field(default_factory=BoundConstants)
    eps_exponent: float = Field(default=0.25, gt=0)
    output_dir: str = "results"
    emit: EmitFlags = Field(default_factory=EmitFlags)
    log_level: LogLevel = "INFO"
    full_resolution: bool = False

    @field_validator("log_level", mode="before")
    @classmethod
    def upper_log_level(cls, value):
        return value.upper() if isinstance(value, str) else value

    @field_validator("rho_grid")
    @classmethod
    def check_rho_grid(cls, value):
        if value is None:
            return value
        if not value:
            raise ValueError("rho_grid must not be empty when given")
        bad = [r for r in value if not r > 0]
        if bad:
            raise ValueError(f"rho_grid values must be > 0, got {bad}")
        return value

    @field_validator("policies")
    @classmethod
    def check_unique_labels(cls, value):
        labels = [p.display_label() for p in value]
        duplicates = sorted({label for label in labels if labels.count(label) > 1})
        if duplicates:
            raise ValueError(f"policy labels must be unique, repeated: {duplicates}")
        return value

    def build_instance(self, rho=None):
        rho = self.rho if rho is None else rho
        if self.instance == "paper":
            return paper_instance(rho=rho, l0=self.l0, mean_override=self.means_override)
        instance = make_instance([(a.mean, a.variance) for a in self.instance], rho=rho, l0=self.l0)
        if self.means_override is not None:
            instance = instance.with_means(self.means_override)
        return instance

    def rho_values(self):
        """The sweep grid in ascending order, or the scalar rho."""
        return sorted(self.rho_grid) if self.rho_grid else [self.rho]

    def config_hash(self):
        """sha256 of the experiment-defining fields; where and how loudly it is written are left out."""
        dumped = self.model_dump(mode="json", exclude=UNHASHED_FIELDS)
        canonical = json.dumps(dumped, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def with_overrides(self, seed=None, out=None, full=None, log_level=None):
        update = {}
        if seed is not None:
            update["base_seed"] = int(seed)
        if out is not None:
            update["output_dir"] = str(out)
        if full:
            update["full_resolution"] = True
        if log_level is not None:
            update["log_level"] = log_level
        if not update:
            return self
        return ExperimentConfig.model_validate({**self.model_dump(), **update})


class ConfigLoader:
    """Reads YAML experiment files into validated ExperimentConfig objects."""

    def __init__(self):
        self.logger = logging.getLogger("ConfigLoader")

    def load(self, path):
        try:
            with open(path, "r", encoding="utf-8") as f:
                text = f.read()
        except OSError as e:
            raise ConfigError(f"Cannot read config file {path}: {e}")

        try:
            raw = yaml.safe_load(text)
        except yaml.YAMLError as e:
            mark = getattr(e, "problem_mark", None)
            line = mark.line + 1 if mark is not None else None
            raise ConfigError(f"YAML parse error: {getattr(e, 'problem', None) or e}", line=line)

        if raw is None:
            raw = {}
        if not isinstance(raw, dict):
            raise ConfigError(f"Top level of {path} must be a mapping, got {type(raw).__name__}", line=1)

        try:
            config = ExperimentConfig.model_validate(raw)
        except ValidationError as e:
            first = e.errors()[0]
            loc = first["loc"]
            field = ".".join(str(part) for part in loc) or None
            message = "unknown key" if first["type"] == "extra_forbidden" else first["msg"]
            raise ConfigError(message, field=field, line=_locate_line(text, loc))

        validate_protocol(config, line_of=lambda key: _locate_line(text, (key,)))
        self.logger.info(f"✅ Config loaded from {path} (hash {config.config_hash()[:12]})")
        return config


def validate_protocol(config, line_of=lambda key: None):
    """Checks that need the built instance: every rho builds a valid instance and n >= K."""
    for rho in config.rho_values():
        try:
            instance = config.build_instance(rho)
        except InvalidInstance as e:
            key = "rho_grid" if config.rho_grid else "instance"
            raise ConfigError(str(e), field=key, line=line_of(key))
    if config.horizon < instance.k:
        raise ConfigError(f"horizon {config.horizon} is below the arm count K={instance.k}",
                          field="horizon", line=line_of("horizon"))


def _locate_line(text, loc):
    """1-based line of the deepest node along loc in the YAML text, or None."""
    try:
        node = yaml.compose(text)
    except yaml.YAMLError:
        return None
    line = None
    for part in loc:
        if isinstance(node, yaml.MappingNode):
            match = next(((k, v) for k, v in node.value if k.value == str(part)), None)
            if match is None:
                break
            line = match[0].start_mark.line + 1
            node = match[1]
        elif isinstance(node, yaml.SequenceNode) and isinstance(part, int) and part < len(node.value):
            node = node.value[part]
            line = node.start_mark.line + 1
        else:
            break
    return line


def load_config(path):
    return ConfigLoader().load(path)
