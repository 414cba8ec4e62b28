"""Request/response bodies for the HTTP service.

Matrices travel as rows of [re, im] pairs, models as the same JSON object
the model validator accepts, or as a preset name. Responses carry plain
floats; canonical 17-digit formatting is applied by clients that write
files, not here.
"""

from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, Field

Matrix = list[list[Any]]  # rows of [re, im] pairs or bare reals


class ValidateRequest(BaseModel):
    model: dict | str


class QuasiCompleteness(BaseModel):
    c1_holds: bool
    c2_holds: bool
    max_deviation_c2: float


class ValidateResponse(BaseModel):
    ok: bool
    dim: int | None = None
    n_channels: int | None = None
    z_values: list[float] | None = None
    total_rate: float | None = None
    quasi_completeness: QuasiCompleteness | None = None
    error: str | None = None
    detail: str | None = None


class SimulateRequest(BaseModel):
    model: dict | str
    state: Matrix | str
    t_max: float = Field(gt=0)
    dt: float = Field(gt=0)
    n_traj: int = Field(ge=1)
    master_seed: int
    mode: Literal["q", "p"] = "q"
    outputs: list[str] = ["weight", "y", "entropy", "linear_entropy"]
    snapshot_stride: int = Field(default=1, ge=1)
    workers: int | None = None


class SeriesColumn(BaseModel):
    mean: list[float]
    se: list[float]


class SimulateResponse(BaseModel):
    times: list[float]
    series: dict[str, SeriesColumn]
    manifest: dict


class CharacteristicRequest(BaseModel):
    model: dict | str
    state: Matrix | str
    k: float
    t_max: float = Field(gt=0)
    points: int = Field(default=101, ge=2)


class CharacteristicResponse(BaseModel):
    t: list[float]
    kappa: float
    re: list[float]
    im: list[float]


class ReportRequest(BaseModel):
    model: dict | str
    state: Matrix | str
    t: float = Field(ge=0)
    n_traj: int = Field(ge=2)
    master_seed: int
    dt: float = Field(default=1e-3, gt=0)
    workers: int | None = None


class Estimate(BaseModel):
    value: float
    se: float


class ReportResponse(BaseModel):
    t: float
    s_q_initial: float
    s_q_eta: float
    s_pi_1: Estimate
    s_pi_1_direct: Estimate
    s_pi_2: Estimate
    s_pi_2_alt: Estimate
    s_pi_3: float
    s_sigma_pi_1: Estimate
    s_sigma_pi_2: Estimate
    s_sigma_pi_3: Estimate
    s_sigma_pi: Estimate
    s_sigma_pi_recheck: Estimate
    amount_of_information: Estimate
    i_p_q: Estimate
    chain_residuals: list[Estimate]
    bounds_ok: bool
    n_traj: int
    dt: float
    master_seed: int


class SelfTestRequest(BaseModel):
    scale: Literal["quick", "full"] = "quick"
    workers: int | None = None
    seed: int | None = None


class CheckEntry(BaseModel):
    name: str
    statistic: float
    threshold: float
    passed: bool
    details: dict


class SelfTestResponse(BaseModel):
    passed: bool
    elapsed_seconds: float
    checks: list[CheckEntry]
