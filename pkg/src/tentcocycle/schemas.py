"""
Report records emitted by the pipelines, and their CSV/JSON serialization.
"""

import json
from io import StringIO
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

Row = Dict[str, Any]


class Report(BaseModel):
    """Base for flat records that become one CSV row."""

    model_config = ConfigDict(ser_json_inf_nan="constants", populate_by_name=True)

    def csv_row(self) -> Row:
        return self.model_dump(by_alias=True)


class SpectrumEstimate(Report):
    lambda1: float = Field(description="Top Lyapunov exponent of the first-iterate cocycle")
    lambda2: float = Field(description="Second Lyapunov exponent of the first-iterate cocycle")
    n_steps: int
    stderr: float = Field(description="Standard error of lambda1")
    lambda2_stderr: Optional[float] = Field(default=None, description="Standard error of lambda2 (renorm_every=1 only)")


class CoveringTimes(Report):
    a: float
    nu: float
    m1: int = Field(description="Expansion time of intervals of measure 1/(2a)")
    m3: int = Field(description="Covering time of the halves after leakage")
    d: int = Field(description="Leakage time max(d12, d21)")
    G_P_freq: float = Field(description="Frequency of the good set on the sigma^2 component")


class BoundReport(Report):
    """Explicit constants of the spectral gap bound, optionally with the small-kappa bound."""

    M: float
    D_eps: float
    B: float
    m1: int
    m3: int
    d: int
    k_P: int
    D_P: float
    G_P_freq: float
    C: float
    C_statement_literal: float = Field(alias="C_literal")
    kappa: Optional[float] = None
    gamma: Optional[float] = None
    C1: Optional[float] = None
    c2: Optional[float] = None


class AsymptoticBound(Report):
    kappa: float
    m3_kappa: int
    k_P_kappa: int
    log_gamma: float
    gamma: float
    c1: float
    D_prime: float
    C1: float
    c2: float
    f: float = Field(description="Half the smaller of the G1/G2 frequencies")
    N0: int = Field(description="Birkhoff frequency threshold")
    freq: float = Field(description="Mass of the starts that meet the threshold")
    in_regime: bool


class BirkhoffThreshold(Report):
    N0: int
    good_fraction: float
    f: float
    delta: float
    n_starts: int
    horizon: int


class MarkovModel(Report):
    n: int
    kappa: float
    partition: List[List[float]] = Field(default_factory=list)
    adjacency: List[List[int]] = Field(default_factory=list)
    rho: Optional[float] = None
    r_n: Optional[float] = None
    lambda2: Optional[float] = None
    ratio_to_minus_2kappa: Optional[float] = None
    charpoly_ok: Optional[bool] = None
    asymptotic: bool = True
    real_roots: List[float] = Field(default_factory=list)

    def csv_row(self) -> Row:
        return self.model_dump(include={
            "n", "kappa", "r_n", "rho", "lambda2", "ratio_to_minus_2kappa", "charpoly_ok",
        })


MARKOV_COLUMNS = ["n", "kappa", "r_n", "rho", "lambda2", "ratio_to_minus_2kappa", "charpoly_ok"]
BOUND_COLUMNS = [
    "M", "D_eps", "B", "m1", "m3", "d", "k_P", "D_P", "G_P_freq", "C", "C_literal",
    "kappa", "gamma", "C1", "c2",
]


class LYSweepSummary(Report):
    samples: int
    mode: str
    violations_general: int
    sharp_cases: int
    violations_sharp: int
    max_ratio_general: float = Field(description="Largest lhs / rhs_general observed")
    cone_violations: int = Field(description="Second iterates that failed to map C_a into C_(nu a)")


class EtaCheckSummary(Report):
    samples: int
    monotone_failures: int
    unclosed: int
    normalization: float = Field(description="eta of the pulled-back density, measured against a pullback twice as deep")
    max_relative_error: float = Field(description="Largest |eta(x) * int v - int x| / ||x||_1")


class SimulationSummary(Report):
    driving: str
    omega_index: int
    pullback_depth: int
    phi: float
    residual: float
    increment: float
    lambda1: float
    lambda2: float
    stderr: float
    first_contraction_time: Optional[int] = None


class ScheduleRow(Report):
    n: int
    l_plus: int
    j_plus: int
    l_minus: int
    j_minus: int
    predicted_diam: float


class CommandResult(BaseModel):
    """Rows and metadata produced by one command."""

    model_config = ConfigDict(ser_json_inf_nan="constants")

    command: str
    rows: List[Row] = Field(default_factory=list)
    columns: Optional[List[str]] = None
    metadata: Dict[str, Any] = Field(default_factory=dict)


def rows_from(reports: Sequence[Report]) -> List[Row]:
    return [r.csv_row() for r in reports]


def to_csv(result: CommandResult) -> str:
    frame = pd.DataFrame(result.rows, columns=result.columns)
    return frame.to_csv(index=False, lineterminator="\n")


def to_json(result: CommandResult) -> str:
    return result.model_dump_json(indent=2)


def render(result: CommandResult, fmt: str) -> str:
    if fmt == "csv":
        return to_csv(result)
    return to_json(result) + "\n"


def write_result(result: CommandResult, fmt: str, path: Optional[Union[str, Path]] = None) -> Optional[str]:
    """Write ``result`` to ``path``; return the text instead when no path is given."""
    text = render(result, fmt)
    if path is None:
        return text
    Path(path).write_text(text)
    return None


def write_graph(samples: Sequence[Row], path: Union[str, Path]) -> None:
    """Write plot-ready (x, y, ...) samples as CSV."""
    pd.DataFrame(list(samples)).to_csv(path, index=False, lineterminator="\n")


def load_rows(text: str, fmt: str) -> List[Row]:
    """Parse rows back from CSV or JSON output."""
    if fmt == "csv":
        return pd.read_csv(StringIO(text)).to_dict(orient="records")
    return json.loads(text)["rows"]
