import json
import math
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, Field, field_validator, model_validator

from .cone_metric import ConeParams
from .logging_config import get_logger
from .utils import to_fraction

logger = get_logger(__name__)

Number = Union[int, float, str]

COMMANDS = ("markov", "bound", "simulate", "ly-sweep", "eta-check", "schedule")


class Configuration(BaseModel):
    """Numerical settings shared by every pipeline."""

    nu: float = Field(
        default=0.8,
        metadata={"description": "Target subcone ratio; second iterates map C_a into C_(nu a)."},
    )

    a: Optional[int] = Field(
        default=None,
        metadata={"description": "Cone aperture. Derived from nu when omitted."},
    )

    seed: int = Field(
        default=0,
        metadata={"description": "Seed for drivings and random sweeps (unsigned 64-bit)."},
    )

    mode: Literal["float", "rational"] = Field(
        default="float",
        metadata={"description": "Arithmetic for step functions and maps."},
    )

    tol_cone: float = Field(
        default=1e-10,
        metadata={"description": "Relative tolerance of the alpha/beta bisection."},
    )

    merge_tol: float = Field(
        default=1e-12,
        metadata={"description": "Breakpoint merge tolerance in float mode."},
    )

    pullback_depth: int = Field(
        default=60,
        metadata={"description": "Second-iterate steps used to pull back the equivariant density."},
    )

    n_steps: int = Field(
        default=2000,
        metadata={"description": "Steps of the Lyapunov exponent estimators."},
    )

    burn_in: int = Field(
        default=50,
        metadata={"description": "Discarded transient steps of the power iteration."},
    )

    renorm_every: int = Field(
        default=1,
        metadata={"description": "Renormalization period of the power iteration."},
    )

    orbit_length: int = Field(
        default=100000,
        metadata={"description": "Orbit length for frequency estimates of random drivings."},
    )

    delta: float = Field(
        default=0.5,
        metadata={"description": "Exceptional mass allowed by the Birkhoff frequency threshold."},
    )

    log_level: str = Field(
        default="WARNING",
        metadata={"description": "Logging level."},
    )

    structured_logs: bool = Field(
        default=False,
        metadata={"description": "Emit JSON log lines."},
    )

    @field_validator('nu')
    def validate_nu(cls, v):
        """Validate nu lies strictly between 0 and 1."""
        if not 0.0 < v < 1.0:
            raise ValueError("nu must lie in (0, 1)")
        return v

    @field_validator('a')
    def validate_a(cls, v):
        """Validate the aperture is positive."""
        if v is not None and v <= 0:
            raise ValueError("cone aperture a must be positive")
        return v

    @field_validator('seed')
    def validate_seed(cls, v):
        """Validate the seed fits an unsigned 64-bit integer."""
        if not 0 <= v < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        return v

    @field_validator('tol_cone', 'merge_tol')
    def validate_tolerance(cls, v):
        """Validate tolerances are positive and small."""
        if not 0.0 < v < 1e-3:
            raise ValueError("tolerances must lie in (0, 1e-3)")
        return v

    @field_validator('pullback_depth', 'n_steps', 'renorm_every', 'orbit_length')
    def validate_positive(cls, v):
        """Validate step counts are positive."""
        if v < 1:
            raise ValueError("step counts must be positive")
        return v

    @field_validator('burn_in')
    def validate_burn_in(cls, v):
        """Validate burn-in is non-negative."""
        if v < 0:
            raise ValueError("burn_in must be non-negative")
        return v

    @field_validator('delta')
    def validate_delta(cls, v):
        """Validate delta lies strictly between 0 and 1."""
        if not 0.0 < v < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        return v

    @field_validator('log_level')
    def validate_log_level(cls, v):
        """Validate the log level name."""
        level = str(v).upper()
        if level not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            raise ValueError(f"unknown log level '{v}'")
        return level

    @model_validator(mode='after')
    def validate_renorm(self):
        """Validate the power iteration has something to renormalize."""
        if self.renorm_every > self.n_steps:
            raise ValueError("renorm_every must not exceed n_steps")
        return self

    def cone_params(self, sharp: bool = False) -> ConeParams:
        """Cone parameters; a is derived from nu unless set explicitly."""
        if self.a is not None:
            return ConeParams(a=self.a, nu=self.nu)
        if self.nu > 0.75 and not sharp:
            return ConeParams.from_nu(self.nu)
        return ConeParams.from_nu(self.nu, sharp=True)

    def tolerances(self) -> Dict[str, float]:
        return {"tol_cone": self.tol_cone, "merge_tol": self.merge_tol}

    @classmethod
    def from_config_dict(cls, config: Optional[Dict[str, Any]] = None) -> "Configuration":
        """Create a Configuration instance from a config dictionary."""
        config_dict = config or {}

        # Get raw values from environment or config
        raw_values: dict[str, Any] = {
            name: os.environ.get(name.upper(), config_dict.get(name))
            for name in cls.model_fields.keys()
        }

        # Filter out None values
        values = {k: v for k, v in raw_values.items() if v is not None}

        return cls(**values)


class DrivingConfig(BaseModel):
    """JSON description of a driving system.

    ``table`` rows are ``[eps1, eps2]`` or ``[eps1, eps2, p]``; entries may be
    numbers or ``"p/q"`` strings so rational runs stay exact.
    """

    kind: Literal["iid", "periodic"] = Field(
        default="periodic",
        metadata={"description": "iid draws from the table, or the table as an ordered cycle."},
    )

    table: List[List[Number]] = Field(
        default_factory=lambda: [[1, 1]],
        metadata={"description": "Rows (eps1, eps2[, probability])."},
    )

    seed: int = Field(
        default=0,
        metadata={"description": "Key of the counter-based generator (iid only)."},
    )

    kappa: Number = Field(
        default=1,
        metadata={"description": "Scale applied to every eps value."},
    )

    @field_validator('table')
    def validate_table(cls, v):
        """Validate rows have two leakage values in [0, 1] and an optional probability."""
        if not v:
            raise ValueError("driving table must not be empty")
        for row in v:
            if len(row) not in (2, 3):
                raise ValueError(f"driving table rows need 2 or 3 entries, got {row}")
            for eps in row[:2]:
                if not 0 <= to_fraction(eps) <= 1:
                    raise ValueError(f"eps values must lie in [0, 1], got {eps}")
            if len(row) == 3 and not to_fraction(row[2]) > 0:
                raise ValueError(f"probabilities must be positive, got {row[2]}")
        return v

    @field_validator('seed')
    def validate_seed(cls, v):
        """Validate the seed fits an unsigned 64-bit integer."""
        if not 0 <= v < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        return v

    @field_validator('kappa')
    def validate_kappa(cls, v):
        """Validate kappa lies in (0, 1]."""
        if not 0 < to_fraction(v) <= 1:
            raise ValueError("kappa must lie in (0, 1]")
        return v

    @model_validator(mode='after')
    def validate_probabilities(self):
        """Validate iid probabilities sum to one."""
        if self.kind == "iid":
            probabilities = [to_fraction(row[2]) if len(row) == 3 else None for row in self.table]
            if any(p is None for p in probabilities):
                if len(self.table) > 1:
                    raise ValueError("iid driving rows need probabilities")
            elif not math.isclose(float(sum(probabilities)), 1.0, abs_tol=1e-12):
                raise ValueError(f"iid probabilities must sum to 1, got {float(sum(probabilities))}")
        return self

    def rows(self) -> List[Tuple[Number, Number, Optional[Number]]]:
        return [(row[0], row[1], row[2] if len(row) == 3 else None) for row in self.table]


class OutputConfig(BaseModel):
    format: Literal["csv", "json"] = Field(
        default="csv",
        metadata={"description": "Tabular output format."},
    )

    path: Optional[str] = Field(
        default=None,
        metadata={"description": "Output file; standard output when omitted."},
    )


class RunConfig(BaseModel):
    """A complete, validated request for one CLI command."""

    command: Literal["markov", "bound", "simulate", "ly-sweep", "eta-check", "schedule"] = "bound"
    driving: Optional[DrivingConfig] = None
    settings: Configuration = Field(default_factory=Configuration)
    output: OutputConfig = Field(default_factory=OutputConfig)

    n_range: Tuple[int, int] = Field(default=(5, 12), metadata={"description": "Markov n range (inclusive)."})
    samples: int = Field(default=1000, metadata={"description": "Random cases for sweeps."})
    rational: bool = Field(default=False, metadata={"description": "Run sweeps in exact arithmetic."})
    kappa: Optional[List[float]] = Field(default=None, metadata={"description": "Scales for the asymptotic bound."})
    horizon: int = Field(default=200, metadata={"description": "Schedule horizon."})
    k_p: Optional[int] = Field(default=None, metadata={"description": "Contraction window; computed when omitted."})
    d_p: Optional[float] = Field(default=None, metadata={"description": "Diameter bound; computed when omitted."})
    g_every: Optional[int] = Field(default=None, metadata={"description": "Use every g_every-th index as the good set."})
    emit_graph: Optional[str] = Field(default=None, metadata={"description": "Write map graph samples to this path."})

    @field_validator('n_range')
    def validate_n_range(cls, v):
        """Validate the Markov range is ordered and starts at 1 or above."""
        lo, hi = v
        if lo < 1 or hi < lo:
            raise ValueError(f"n range must satisfy 1 <= A <= B, got {lo} {hi}")
        return v

    @field_validator('samples', 'horizon')
    def validate_counts(cls, v):
        """Validate counts are positive."""
        if v < 1:
            raise ValueError("sample counts and horizons must be positive")
        return v

    @field_validator('kappa')
    def validate_kappas(cls, v):
        """Validate every kappa lies in (0, 1]."""
        if v is not None and any(not 0 < k <= 1 for k in v):
            raise ValueError("kappa values must lie in (0, 1]")
        return v

    @field_validator('k_p', 'g_every')
    def validate_positive_optional(cls, v):
        """Validate optional window sizes are positive."""
        if v is not None and v < 1:
            raise ValueError("window sizes must be positive")
        return v

    @classmethod
    def load(cls, path: Optional[Union[str, Path]] = None, overrides: Optional[Dict[str, Any]] = None) -> "RunConfig":
        """Read a JSON run configuration and apply command-line overrides.

        Top-level keys that are not RunConfig fields are treated as settings.
        Settings from the file pick up environment overrides the same way as
        Configuration.from_config_dict; command-line overrides are applied
        last and beat both.
        """
        payload: Dict[str, Any] = {}
        if path is not None:
            payload = json.loads(Path(path).read_text())
            logger.debug(f"loaded run configuration from {path}")
        overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
        seed_override = overrides.get("seed")

        settings = dict(payload.pop("settings", {}) or {})
        for name in Configuration.model_fields:
            if name in payload:
                settings[name] = payload.pop(name)
        flags = {
            name: overrides.pop(name) for name in list(overrides)
            if name in Configuration.model_fields and name not in cls.model_fields
        }

        output = dict(payload.pop("output", {}) or {})
        for key in ("format", "path"):
            if key in overrides:
                output[key] = overrides.pop(key)

        payload.update(overrides)
        # --seed also keys the driving generator
        if seed_override is not None and payload.get("driving") is not None:
            payload["driving"] = {**payload["driving"], "seed": seed_override}
        from_file = Configuration.from_config_dict(settings)
        payload["settings"] = Configuration(**{**from_file.model_dump(exclude_unset=True), **flags})
        payload["output"] = OutputConfig(**output)
        return cls(**payload)
