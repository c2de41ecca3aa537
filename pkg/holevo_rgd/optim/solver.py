"""
Riemannian Gradient Descent for the Holevo Capacity
Armijo backtracking, stopping rules, multi-restart, parameter sweeps
"""

import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Sequence

import numpy as np
from joblib import Parallel, delayed
from pydantic import BaseModel, ConfigDict, Field

from holevo_rgd import config
from holevo_rgd.errors import (
    HolevoError,
    LineSearchExhausted,
    NotDescentDirectionError,
    SolverAbortError,
)
from holevo_rgd.optim.holevo import cost, cost_and_grad
from holevo_rgd.optim.manifold import (
    EnsemblePoint,
    SimplexGeometry,
    TangentVector,
    inner,
    random_point,
    retract,
)
from holevo_rgd.quantum.channel import AnyChannel, Channel, ChannelKind, SmoothedChannel, smooth, tensor_power

logger = logging.getLogger(__name__)

LOG_EVERY = 100


class ArmijoConfig(BaseModel):
    """Backtracking parameters: step = initial_step * contraction^k"""
    model_config = ConfigDict(extra='forbid')

    initial_step: float = Field(default=config.ARMIJO_INITIAL_STEP, gt=0)
    contraction: float = Field(default=config.ARMIJO_CONTRACTION, gt=0, lt=1)
    sufficient_decrease: float = Field(default=config.ARMIJO_SUFFICIENT_DECREASE, gt=0, lt=1)
    max_backtracks: int = Field(default=config.ARMIJO_MAX_BACKTRACKS, ge=0)


class SolverConfig(BaseModel):
    """Inputs of a solve; defaults come from the environment (see config.py)"""
    model_config = ConfigDict(extra='forbid')

    max_iters: int = Field(default=config.MAX_ITERS, ge=0)
    grad_tol: float = Field(default=config.GRAD_TOL, gt=0)
    armijo: ArmijoConfig = Field(default_factory=ArmijoConfig)
    restarts: int = Field(default=config.RESTARTS, ge=1)
    seed: int = config.SEED
    delta: float = Field(default=config.DELTA, gt=0, lt=1)
    ensemble_size: Optional[int] = Field(default=None, ge=1)
    simplex_geometry: SimplexGeometry = SimplexGeometry(config.SIMPLEX_GEOMETRY)
    stall_tol: float = Field(default=config.STALL_TOL, ge=0)
    stall_window: int = Field(default=config.STALL_WINDOW, ge=1)
    n_jobs: int = config.N_JOBS


class TerminationReason(str, Enum):
    GRAD_TOL = "grad_tol"
    MAX_ITERS = "max_iters"
    STALL = "stall"
    BACKTRACK_EXHAUSTED = "backtrack_exhausted"


@dataclass(frozen=True)
class ArmijoStep:
    step: float
    point: EnsemblePoint
    f: float
    backtracks: int


@dataclass
class RestartResult:
    """Outcome of one descent run; `error` is set when the run aborted"""
    seed: Optional[int]
    chi: float = float('nan')
    grad_norm: float = float('nan')
    iterations: int = 0
    termination_reason: Optional[TerminationReason] = None
    warm_start: bool = False
    error: Optional[str] = None
    point: Optional[EnsemblePoint] = field(default=None, repr=False)
    f_trace: List[float] = field(default_factory=list, repr=False)
    grad_trace: List[float] = field(default_factory=list, repr=False)
    step_trace: List[float] = field(default_factory=list, repr=False)

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class SolveResult:
    """Best restart of a solve, plus a summary of every restart"""
    chi_lower_bound: float
    best_point: EnsemblePoint
    grad_norm_final: float
    iterations: int
    f_trace: List[float]
    grad_trace: List[float]
    step_trace: List[float]
    termination_reason: TerminationReason
    restart_results: List[RestartResult]


@dataclass
class SweepPoint:
    parameter: float
    chi: float
    grad_norm: float
    seconds: float
    status: str = "ok"
    result: Optional[SolveResult] = field(default=None, repr=False)


@dataclass(frozen=True)
class AdditivityReport:
    copies: int
    single: SolveResult = field(repr=False)
    product: SolveResult = field(repr=False)

    @property
    def chi_single(self) -> float:
        return self.single.chi_lower_bound

    @property
    def chi_product(self) -> float:
        return self.product.chi_lower_bound

    @property
    def gap(self) -> float:
        """χ(N^{⊗k}) - k χ(N) lower-bound estimate; positive values witness superadditivity"""
        return self.chi_product - self.copies * self.chi_single


def armijo_step(channel: AnyChannel, m: EnsemblePoint, direction: TangentVector,
                f_m: float, g_dot_dir: float, cfg: SolverConfig) -> ArmijoStep:
    """
    Armijo backtracking along the retraction curve t -> R_m(t·direction)

    Args:
        channel: Smoothed channel
        m: Current point
        direction: Descent direction (see descent_direction)
        f_m: Cost at m
        g_dot_dir: ⟨grad, direction⟩_m, must be negative
        cfg: Solver configuration

    Returns:
        ArmijoStep with the first step satisfying f_next ≤ f_m + c·step·g_dot_dir

    Raises:
        NotDescentDirectionError: g_dot_dir ≥ 0
        LineSearchExhausted: no step accepted within max_backtracks contractions
    """
    if not g_dot_dir < 0:
        raise NotDescentDirectionError(f"⟨grad, direction⟩ = {g_dot_dir:.3e} is not negative")

    armijo = cfg.armijo
    step = armijo.initial_step
    for backtracks in range(armijo.max_backtracks + 1):
        candidate = retract(m, direction, step)
        f_next = cost(channel, candidate).f
        if f_next <= f_m + armijo.sufficient_decrease * step * g_dot_dir:
            return ArmijoStep(step=step, point=candidate, f=f_next, backtracks=backtracks)
        step *= armijo.contraction

    raise LineSearchExhausted(f"no sufficient decrease after {armijo.max_backtracks} backtracks")


def descent_direction(m: EnsemblePoint, grad: TangentVector,
                      geometry: SimplexGeometry) -> TangentVector:
    """
    Search direction handed to the line search

    Under the euclidean simplex metric the simplex part is preconditioned by
    p: ṗ = -p∘(g - Σ_j p_j g_j), which sums to zero and keeps the retraction's
    (s·ṗ_i)²/(2p_i) term proportional to p_i. Weights heading to a face of the
    simplex then decay geometrically. State parts, and the other geometries,
    use -grad.
    """
    if SimplexGeometry(geometry) is not SimplexGeometry.EUCLIDEAN:
        return -grad
    weighted = m.p * grad.dp
    dp = -(weighted - m.p * weighted.sum())
    dstates = None if grad.dstates is None else -grad.dstates
    return TangentVector(dp=dp, dstates=dstates)


def _search(m: EnsemblePoint, grad: TangentVector, geometry: SimplexGeometry):
    # slope = -(Σ p (g - ḡ)² + ‖g_ψ‖²) under euclidean, -‖grad‖²_m otherwise
    direction = descent_direction(m, grad, geometry)
    return direction, inner(m, grad, direction, geometry)


def _stalled(f_trace: List[float], cfg: SolverConfig) -> bool:
    window = cfg.stall_window
    if len(f_trace) <= window:
        return False
    f_old, f_new = f_trace[-1 - window], f_trace[-1]
    return f_old - f_new <= cfg.stall_tol * max(1.0, abs(f_old))


def descend(channel: AnyChannel, m0: EnsemblePoint, cfg: SolverConfig,
            seed: Optional[int] = None) -> RestartResult:
    """
    Run gradient descent from m0 until a stopping rule fires

    The gradient norm tested against grad_tol and recorded in the traces is
    √(-⟨grad, direction⟩_m): the metric norm for fisher and paper_q, and
    √(Σ p (g - ḡ)² + ‖g_ψ‖²) under euclidean. The latter never exceeds the
    euclidean norm and also vanishes at optima on a face of the simplex.

    Args:
        channel: Smoothed channel
        m0: Initial point
        cfg: Solver configuration
        seed: Seed m0 was drawn with, recorded in the result

    Returns:
        RestartResult with traces and the termination reason
    """
    geometry = cfg.simplex_geometry
    m = m0
    report, grad = cost_and_grad(channel, m, geometry)
    direction, slope = _search(m, grad, geometry)
    gnorm = float(np.sqrt(max(-slope, 0.0)))
    f_trace, grad_trace, step_trace = [report.f], [gnorm], [0.0]

    iterations = 0
    while True:
        if gnorm <= cfg.grad_tol:
            reason = TerminationReason.GRAD_TOL
            break
        if iterations >= cfg.max_iters:
            reason = TerminationReason.MAX_ITERS
            break
        if _stalled(f_trace, cfg):
            reason = TerminationReason.STALL
            break

        try:
            ls = armijo_step(channel, m, direction, report.f, slope, cfg)
        except LineSearchExhausted:
            reason = TerminationReason.BACKTRACK_EXHAUSTED
            break

        m = ls.point
        report, grad = cost_and_grad(channel, m, geometry)
        direction, slope = _search(m, grad, geometry)
        gnorm = float(np.sqrt(max(-slope, 0.0)))
        iterations += 1
        f_trace.append(report.f)
        grad_trace.append(gnorm)
        step_trace.append(ls.step)

        if iterations % LOG_EVERY == 0:
            logger.debug("seed %s iter %d: chi=%.12f grad=%.3e step=%.3e",
                         seed, iterations, report.chi, gnorm, ls.step)

    return RestartResult(
        seed=seed,
        chi=report.chi,
        grad_norm=gnorm,
        iterations=iterations,
        termination_reason=reason,
        point=m,
        f_trace=f_trace,
        grad_trace=grad_trace,
        step_trace=step_trace,
    )


def default_ensemble_size(channel: AnyChannel, cfg: SolverConfig) -> int:
    if channel.kind is ChannelKind.CQ:
        return channel.d_in
    return cfg.ensemble_size or channel.d_in ** 2


def _run_restart(channel: SmoothedChannel, cfg: SolverConfig, seed: Optional[int],
                 initial: Optional[EnsemblePoint]) -> RestartResult:
    warm = initial is not None
    try:
        if initial is None:
            d = None if channel.kind is ChannelKind.CQ else channel.d_in
            initial = random_point(d, default_ensemble_size(channel, cfg), seed)
        result = descend(channel, initial, cfg, seed)
    except (HolevoError, np.linalg.LinAlgError) as exc:
        logger.warning("restart seed=%s aborted: %s", seed, exc)
        return RestartResult(seed=seed, warm_start=warm, error=str(exc))

    result.warm_start = warm
    logger.info("restart seed=%s%s: chi=%.10f grad=%.3e iters=%d (%s)",
                seed, " (warm)" if warm else "", result.chi, result.grad_norm,
                result.iterations, result.termination_reason.value)
    return result


def rgd(channel: AnyChannel, cfg: Optional[SolverConfig] = None,
        initial_points: Optional[Sequence[EnsemblePoint]] = None) -> SolveResult:
    """
    Lower-bound χ(N) by Riemannian gradient descent with restarts

    Restart r starts from random_point(seed + r); any initial_points are run
    first as extra warm-started restarts. Restarts run through joblib with
    cfg.n_jobs workers and are merged in submission order.

    Args:
        channel: Channel to analyse (smoothed with cfg.delta)
        cfg: Solver configuration
        initial_points: Optional warm starts

    Returns:
        SolveResult of the best restart

    Raises:
        SolverAbortError: every restart failed
    """
    cfg = cfg or SolverConfig()
    smoothed = smooth(channel, cfg.delta)
    if channel.kind is ChannelKind.CQ and cfg.ensemble_size not in (None, channel.d_in):
        logger.info("ensemble_size ignored for cq channel %s (uses |X| = %d)", channel.label, channel.d_in)

    tasks = [(None, point) for point in (initial_points or [])]
    tasks += [(cfg.seed + r, None) for r in range(cfg.restarts)]
    results = Parallel(n_jobs=cfg.n_jobs)(
        delayed(_run_restart)(smoothed, cfg, seed, point) for seed, point in tasks
    )

    finished = [r for r in results if r.ok]
    if not finished:
        raise SolverAbortError(f"all {len(results)} restarts failed on {channel.label}: {results[0].error}")
    best = max(finished, key=lambda r: r.chi)

    return SolveResult(
        chi_lower_bound=best.chi,
        best_point=best.point,
        grad_norm_final=best.grad_norm,
        iterations=best.iterations,
        f_trace=best.f_trace,
        grad_trace=best.grad_trace,
        step_trace=best.step_trace,
        termination_reason=best.termination_reason,
        restart_results=results,
    )


def sweep(family: Callable[[float], Channel], grid: Sequence[float],
          cfg: Optional[SolverConfig] = None) -> List[SweepPoint]:
    """
    Solve a one-parameter channel family over a grid

    Each grid point is warm-started from the previous optimizer when the
    dimensions agree, on top of the usual fresh restarts. A failing grid point
    is recorded with its error and the sweep continues.
    """
    cfg = cfg or SolverConfig()
    rows = []
    warm: Optional[EnsemblePoint] = None

    for value in grid:
        start = time.perf_counter()
        try:
            channel = family(float(value))
            initial = None
            if warm is not None and warm.n == default_ensemble_size(channel, cfg) \
                    and (warm.simplex_only or warm.d == channel.d_in):
                initial = [warm]
            result = rgd(channel, cfg, initial_points=initial)
        except HolevoError as exc:
            logger.warning("sweep point %g failed: %s", value, exc)
            rows.append(SweepPoint(parameter=float(value), chi=float('nan'), grad_norm=float('nan'),
                                   seconds=time.perf_counter() - start, status=f"error: {exc}"))
            continue

        warm = result.best_point
        rows.append(SweepPoint(parameter=float(value), chi=result.chi_lower_bound,
                               grad_norm=result.grad_norm_final,
                               seconds=time.perf_counter() - start, result=result))
        logger.info("sweep point %g: chi=%.8f", value, result.chi_lower_bound)

    return rows


def additivity_gap(channel: Channel, copies: int = 2, cfg: Optional[SolverConfig] = None,
                   initial_points: Optional[Sequence[EnsemblePoint]] = None) -> AdditivityReport:
    """
    Compare χ(N^{⊗k}) with k χ(N)

    Random initial points on the product channel are Haar in the joint input
    space, so they are entangled rather than product states. initial_points
    warm-start the single-copy solve only.
    """
    cfg = cfg or SolverConfig()
    single = rgd(channel, cfg, initial_points=initial_points)
    product = rgd(tensor_power(channel, copies), cfg)
    return AdditivityReport(copies=copies, single=single, product=product)
