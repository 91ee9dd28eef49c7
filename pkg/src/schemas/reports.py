from typing import Any, Dict, List, Optional

from pydantic import Field

from src.schemas.schema_base import ReportModel


class RunDiagnostics(ReportModel):
    times: List[float]
    f_norm: List[float]
    g_nu_norm_accum: List[float]
    boussinesq_residual: Optional[List[float]] = None
    incompressibility_residual: List[float]
    u_vs_unu_gap: List[float]
    pressure_proxy: Optional[List[float]] = None
    density_drift: List[float]
    f_norm_monotone: bool = True
    g_bound: float
    bound_slack: float
    boussinesq_constant: Optional[float] = None
    violations: List[str] = Field(default_factory=list)


class CalibrationReport(ReportModel):
    params: Dict[str, Any]
    grid: Dict[str, Any]
    moments: List[float]
    targets: List[float]
    cond_a: float
    continuity_constant: float
    sentinel: Optional[Dict[str, Any]] = None


class SymbolReport(ReportModel):
    k: List[float]
    eigen_re: List[List[float]]
    eigen_im: List[List[float]]
    gamma_fit: float
    kappa_fit: float
    residual: float
    branch: str
    gamma_loglog: Optional[float] = None
    remainder: float = 0.0


class KappaReport(ReportModel):
    gamma: float
    gamma_fit: float
    kappa_fit: float
    residual: float
    branch: str
    gamma_loglog: Optional[float] = None
    remainder: float = 0.0
    analytic_candidate: Optional[float] = None


class AuxLimitReport(ReportModel):
    family: str
    gamma: float
    phi: str
    eps_list: List[float]
    l2_errors: List[float]
    kappa_fits: List[float]
    order: Optional[float] = None
    expected_order: float
    monotone: bool


class EvolveReport(ReportModel):
    version: str
    config: Dict[str, Any]
    gamma: float
    dt: float
    n_steps: int
    record_times: List[float]
    step_times: List[float]
    f_norm_history: List[float]
    g_accum_history: List[float]
    diagnostics: RunDiagnostics


class CaseResult(ReportModel):
    epsilon: float
    dt: float
    errors: Dict[str, float]
    max_error: float
    diagnostics: RunDiagnostics
    gradient_norm: Optional[float] = None


class ConvergenceReport(ReportModel):
    version: str
    experiment: str
    config: Dict[str, Any]
    gamma: float
    gamma_fit: float
    kappa_fit: float
    eps_list: List[float]
    record_times: List[float]
    cases: List[CaseResult]
    order: Optional[float] = None
    non_monotone: bool = False
    boussinesq_constant: Optional[float] = None
    boussinesq_stable: Optional[bool] = None
    incompressibility_constant: Optional[float] = None
    gap_constant: Optional[float] = None


class CheckReport(ReportModel):
    source: str
    ok: bool
    violations: List[str] = Field(default_factory=list)
