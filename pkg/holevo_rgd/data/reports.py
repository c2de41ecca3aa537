"""
Run Reports and Result Tables
JSON run reports, convergence traces and sweep tables (CSV via pandas)
"""

import math
from platform import platform as platform_string
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd
from pydantic import BaseModel, ConfigDict

from holevo_rgd import __version__
from holevo_rgd.optim.manifold import point_to_dict
from holevo_rgd.optim.solver import AdditivityReport, RestartResult, SolveResult, SolverConfig, SweepPoint
from holevo_rgd.quantum.channel import AnyChannel

TRACE_COLUMNS = ['iteration', 'f', 'grad_norm', 'step']
SWEEP_COLUMNS = ['parameter', 'chi', 'grad_norm', 'seconds', 'status']
FLOAT_FORMAT = '%.8f'


def _finite(value: float) -> Optional[float]:
    return None if value is None or not math.isfinite(value) else float(value)


class ChannelSummary(BaseModel):
    kind: str
    label: str
    d_in: int
    d_out: int
    n_kraus: int


class RestartSummary(BaseModel):
    seed: Optional[int]
    chi: Optional[float]
    grad_norm: Optional[float]
    iterations: int
    termination_reason: Optional[str]
    warm_start: bool
    error: Optional[str]


class ResultSummary(BaseModel):
    chi_lower_bound: float
    grad_norm_final: float
    iterations: int
    termination_reason: str
    f_trace: List[float]
    best_point: Dict[str, Any]
    restart_results: List[RestartSummary]


class AdditivitySummary(BaseModel):
    copies: int
    chi_single: float
    chi_product: float
    gap: float


class RunReport(BaseModel):
    """Everything a solve produced, in a JSON round-trippable form"""
    model_config = ConfigDict(extra='forbid')

    channel: ChannelSummary
    config: SolverConfig
    result: ResultSummary
    seconds: float
    version: str = __version__
    platform: str = platform_string()
    reference_chi: Optional[float] = None
    abs_error: Optional[float] = None
    additivity: Optional[AdditivitySummary] = None


def summarize_channel(channel: AnyChannel) -> ChannelSummary:
    base = getattr(channel, 'base', channel)
    return ChannelSummary(kind=base.kind.value, label=base.label, d_in=base.d_in,
                          d_out=base.d_out, n_kraus=base.n_kraus)


def _summarize_restart(r: RestartResult) -> RestartSummary:
    return RestartSummary(
        seed=r.seed,
        chi=_finite(r.chi),
        grad_norm=_finite(r.grad_norm),
        iterations=r.iterations,
        termination_reason=None if r.termination_reason is None else r.termination_reason.value,
        warm_start=r.warm_start,
        error=r.error,
    )


def build_report(channel: AnyChannel, cfg: SolverConfig, result: SolveResult, seconds: float,
                 reference_chi: Optional[float] = None,
                 additivity: Optional[AdditivityReport] = None) -> RunReport:
    """
    Assemble a RunReport

    Args:
        channel: Channel that was solved
        cfg: Configuration used
        result: Solver output
        seconds: Wall-clock time of the solve
        reference_chi: Closed-form χ, when known; adds an abs_error entry
        additivity: Optional k-copy comparison

    Returns:
        RunReport
    """
    summary = ResultSummary(
        chi_lower_bound=result.chi_lower_bound,
        grad_norm_final=result.grad_norm_final,
        iterations=result.iterations,
        termination_reason=result.termination_reason.value,
        f_trace=list(result.f_trace),
        best_point=point_to_dict(result.best_point),
        restart_results=[_summarize_restart(r) for r in result.restart_results],
    )
    extra = None
    if additivity is not None:
        extra = AdditivitySummary(copies=additivity.copies, chi_single=additivity.chi_single,
                                  chi_product=additivity.chi_product, gap=additivity.gap)

    return RunReport(
        channel=summarize_channel(channel),
        config=cfg,
        result=summary,
        seconds=seconds,
        reference_chi=reference_chi,
        abs_error=None if reference_chi is None else abs(result.chi_lower_bound - reference_chi),
        additivity=extra,
    )


def trace_frame(result: SolveResult) -> pd.DataFrame:
    """Convergence trace of the best restart, one row per iterate"""
    return pd.DataFrame({
        'iteration': range(len(result.f_trace)),
        'f': result.f_trace,
        'grad_norm': result.grad_trace,
        'step': result.step_trace,
    }, columns=TRACE_COLUMNS)


def write_trace_csv(result: SolveResult, path) -> None:
    trace_frame(result).to_csv(path, index=False)


def sweep_frame(rows: Sequence[SweepPoint]) -> pd.DataFrame:
    records = [
        {
            'parameter': row.parameter,
            'chi': row.chi,
            'grad_norm': row.grad_norm,
            'seconds': row.seconds,
            'status': row.status,
        }
        for row in rows
    ]
    return pd.DataFrame.from_records(records, columns=SWEEP_COLUMNS)


def sweep_csv(rows: Sequence[SweepPoint]) -> str:
    """Sweep table as CSV text; a header-only table for an empty grid"""
    return sweep_frame(rows).to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
