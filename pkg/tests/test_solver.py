import time

import numpy as np
import pytest
from numpy.testing import assert_allclose
from pydantic import ValidationError

import holevo_rgd.optim.solver as solver_module
from holevo_rgd.data.generators import ChannelGenerator
from holevo_rgd.errors import EigensolverError, LineSearchExhausted, NotDescentDirectionError, SolverAbortError
from holevo_rgd.optim.holevo import cost, cost_and_grad, depolarizing_holevo_capacity
from holevo_rgd.optim.manifold import EnsemblePoint, SimplexGeometry, check_tangent, inner, random_point
from holevo_rgd.optim.solver import (
    ArmijoConfig,
    SolverConfig,
    TerminationReason,
    additivity_gap,
    armijo_step,
    descent_direction,
    rgd,
    sweep,
)
from holevo_rgd.quantum.channel import compose, cq_channel, depolarizing, pauli, qutrit_wd, smooth
from holevo_rgd.quantum.numerics import binary_entropy, ket_bra


def _assert_monotone(result):
    for restart in result.restart_results:
        if restart.ok:
            assert np.all(np.diff(restart.f_trace) <= 1e-12)
            assert restart.iterations == len(restart.f_trace) - 1


def _relative_entropy_spread(channel, result, cfg):
    # max_i D(σ_i‖σ) - min over weights ≥ 1e-4; zero at a critical point
    m = result.best_point
    rel = cost(smooth(channel, cfg.delta), m).rel_entropies
    return float(rel.max() - rel[m.p >= 1e-4].min())


def _timed_rgd(channel, cfg):
    start = time.perf_counter()
    result = rgd(channel, cfg)
    return result, time.perf_counter() - start


# ---------------------------------------------------------------------------
# SolverConfig
# ---------------------------------------------------------------------------

def test_solver_config_defaults():
    cfg = SolverConfig()
    assert cfg.grad_tol == 1e-6
    assert cfg.max_iters == 10000
    assert cfg.restarts == 5
    assert cfg.delta == 1e-9
    assert cfg.armijo == ArmijoConfig(initial_step=1.0, contraction=0.5, sufficient_decrease=1e-4, max_backtracks=50)
    assert cfg.simplex_geometry is SimplexGeometry.EUCLIDEAN
    assert cfg.ensemble_size is None


@pytest.mark.parametrize("values", [
    {'grad_tol': 0.0},
    {'armijo': {'contraction': 1.5}},
    {'armijo': {'sufficient_decrease': 0.0}},
    {'delta': 1.0},
    {'restarts': 0},
    {'simplex_geometry': 'hyperbolic'},
    {'unknown_option': 1},
])
def test_solver_config_validation(values):
    with pytest.raises(ValidationError):
        SolverConfig(**values)


def test_solver_config_json_round_trip():
    cfg = SolverConfig(seed=3, simplex_geometry='fisher', armijo={'contraction': 0.3})
    assert SolverConfig.model_validate_json(cfg.model_dump_json()) == cfg


# ---------------------------------------------------------------------------
# Armijo
# ---------------------------------------------------------------------------

@pytest.fixture
def depolarizing_start():
    channel = smooth(depolarizing(2, 1 / 3))
    m = random_point(2, 4, seed=0)
    report, grad = cost_and_grad(channel, m)
    return channel, m, report, grad


def test_armijo_rejects_non_descent_direction(depolarizing_start):
    channel, m, report, grad = depolarizing_start
    with pytest.raises(NotDescentDirectionError):
        armijo_step(channel, m, grad * 0.0, report.f, 0.0, SolverConfig())
    with pytest.raises(NotDescentDirectionError):
        armijo_step(channel, m, grad, report.f, inner(m, grad, grad), SolverConfig())


def test_armijo_step_decreases_cost(depolarizing_start):
    channel, m, report, grad = depolarizing_start
    cfg = SolverConfig()
    direction = -grad
    g_dot = inner(m, grad, direction)
    step = armijo_step(channel, m, direction, report.f, g_dot, cfg)
    assert step.f < report.f
    assert step.f <= report.f + cfg.armijo.sufficient_decrease * step.step * g_dot
    assert step.step == cfg.armijo.initial_step * cfg.armijo.contraction ** step.backtracks
    assert step.f == cost(channel, step.point).f


def test_descent_direction_preconditions_simplex_part(depolarizing_start):
    _, m, _, grad = depolarizing_start
    direction = descent_direction(m, grad, SimplexGeometry.EUCLIDEAN)
    assert check_tangent(m, direction, tol=1e-10)
    centered = grad.dp - np.dot(m.p, grad.dp)
    assert_allclose(direction.dp, -m.p * centered, atol=1e-15)
    assert_allclose(direction.dstates, -grad.dstates)
    slope = inner(m, grad, direction)
    expected = np.dot(m.p, centered ** 2) + np.vdot(grad.dstates, grad.dstates).real
    assert slope == pytest.approx(-expected, rel=1e-12)
    assert slope < 0


def test_descent_direction_is_negative_gradient_under_fisher():
    channel = smooth(depolarizing(2, 1 / 3))
    m = random_point(2, 4, seed=0)
    _, grad = cost_and_grad(channel, m, SimplexGeometry.FISHER)
    direction = descent_direction(m, grad, SimplexGeometry.FISHER)
    assert_allclose(direction.dp, -grad.dp)
    assert_allclose(direction.dstates, -grad.dstates)


def test_armijo_exhaustion(depolarizing_start):
    channel, m, report, grad = depolarizing_start
    # an inflated slope no step can match
    with pytest.raises(LineSearchExhausted):
        armijo_step(channel, m, -grad, report.f, -1e6, SolverConfig())


# ---------------------------------------------------------------------------
# rgd
# ---------------------------------------------------------------------------

def test_depolarizing_qubit_capacity():
    cfg = SolverConfig(seed=0)
    result, seconds = _timed_rgd(depolarizing(2, 1 / 3), cfg)
    assert abs(result.chi_lower_bound - depolarizing_holevo_capacity(2, 1 / 3)) <= 1e-8
    assert result.chi_lower_bound == pytest.approx(0.349978, abs=1e-6)
    assert len(result.restart_results) == 5
    assert [r.seed for r in result.restart_results] == [0, 1, 2, 3, 4]
    assert result.chi_lower_bound == max(r.chi for r in result.restart_results)
    assert result.chi_lower_bound == -result.f_trace[-1]
    assert _relative_entropy_spread(depolarizing(2, 1 / 3), result, cfg) <= 1e-4
    assert seconds <= 10.0
    _assert_monotone(result)


@pytest.mark.parametrize("d", [3, pytest.param(8, marks=pytest.mark.slow)])
def test_depolarizing_capacity(d):
    result, seconds = _timed_rgd(depolarizing(d, 1 / 3), SolverConfig(seed=0))
    expected = depolarizing_holevo_capacity(d, 1 / 3)
    assert abs(result.chi_lower_bound - expected) <= 1e-8
    assert result.chi_lower_bound <= expected + 1e-7
    assert seconds <= 10.0


@pytest.mark.parametrize("d", [2, 3])
def test_depolarizing_capacity_is_insensitive_to_smoothing(d):
    channel = depolarizing(d, 1 / 3)
    coarse = rgd(channel, SolverConfig(seed=0, restarts=2))
    fine = rgd(channel, SolverConfig(seed=0, restarts=2, delta=1e-12))
    assert abs(coarse.chi_lower_bound - fine.chi_lower_bound) <= 1e-7


@pytest.mark.slow
def test_qutrit_wd_capacity_is_one():
    result, seconds = _timed_rgd(qutrit_wd(0.5), SolverConfig(seed=0))
    assert abs(result.chi_lower_bound - 1.0) <= 1e-6
    assert result.chi_lower_bound <= 1.0 + 1e-7
    assert seconds <= 30.0
    _assert_monotone(result)


def test_pauli_capacity():
    channel = pauli(1 / 7, 1 / 10, 1 / 4)
    cfg = SolverConfig(seed=0)
    result, seconds = _timed_rgd(channel, cfg)
    # eigenstates of Z, the least contracted Pauli axis
    eta = (1 - 1 / 7 - 1 / 10 - 1 / 4) - 1 / 7 - 1 / 10 + 1 / 4
    assert result.chi_lower_bound == pytest.approx(0.20024, abs=1e-3)
    assert result.chi_lower_bound == pytest.approx(1.0 - binary_entropy((1 + eta) / 2), abs=1e-6)
    assert _relative_entropy_spread(channel, result, cfg) <= 1e-4
    assert seconds <= 10.0
    _assert_monotone(result)


@pytest.mark.parametrize("overlap", [0.0, 0.3, 0.7, 0.95])
def test_binary_pure_cq_channel_matches_grid_search(overlap):
    theta = np.arccos(overlap)
    first = np.array([1.0, 0.0])
    second = np.array([np.cos(theta), np.sin(theta)])
    channel = cq_channel([ket_bra(first), ket_bra(second)])

    # two pure states: σ has eigenvalues (1 ± sqrt(1 - 4p(1-p)(1-c²)))/2
    p = np.linspace(0.0, 1.0, 1_000_001)
    top = 0.5 * (1 + np.sqrt(np.clip(1 - 4 * p * (1 - p) * (1 - overlap ** 2), 0.0, None)))
    oracle = float(np.max(binary_entropy(top)))

    result = rgd(channel, SolverConfig(seed=0, restarts=2))
    assert result.best_point.simplex_only
    assert abs(result.chi_lower_bound - oracle) <= 1e-7


def test_identical_cq_outputs_have_zero_capacity():
    rho = np.diag([0.7, 0.3])
    result = rgd(cq_channel([rho, rho, rho]), SolverConfig(seed=0, restarts=1))
    assert result.chi_lower_bound == pytest.approx(0.0, abs=1e-9)


def test_rgd_is_deterministic():
    cfg = SolverConfig(seed=4, restarts=2)
    first = rgd(pauli(1 / 7, 1 / 10, 1 / 4), cfg)
    second = rgd(pauli(1 / 7, 1 / 10, 1 / 4), cfg)
    assert first.f_trace == second.f_trace
    assert first.chi_lower_bound == second.chi_lower_bound


def test_rgd_parallel_restarts_match_sequential():
    channel = depolarizing(2, 0.2)
    sequential = rgd(channel, SolverConfig(seed=1, restarts=3, n_jobs=1))
    parallel = rgd(channel, SolverConfig(seed=1, restarts=3, n_jobs=2))
    assert [r.seed for r in parallel.restart_results] == [1, 2, 3]
    assert parallel.chi_lower_bound == pytest.approx(sequential.chi_lower_bound, abs=1e-9)


def test_max_iters_terminates():
    result = rgd(pauli(1 / 7, 1 / 10, 1 / 4), SolverConfig(seed=0, restarts=1, max_iters=0))
    assert result.termination_reason is TerminationReason.MAX_ITERS
    assert result.iterations == 0
    assert len(result.f_trace) == 1


def test_all_reasons_are_recorded():
    result = rgd(depolarizing(3, 0.4), SolverConfig(seed=0, restarts=3, max_iters=200))
    for restart in result.restart_results:
        assert restart.termination_reason in set(TerminationReason)
        assert restart.iterations <= 200


def test_ensemble_size_is_configurable():
    result = rgd(depolarizing(3, 1 / 3), SolverConfig(seed=0, restarts=2, ensemble_size=3))
    assert result.best_point.n == 3
    assert result.chi_lower_bound <= depolarizing_holevo_capacity(3, 1 / 3) + 1e-7


def test_failed_restart_is_recorded():
    bad = EnsemblePoint(p=[1.0], states=[[1.0, 0.0, 0.0]])
    result = rgd(depolarizing(2, 1 / 3), SolverConfig(seed=0, restarts=1), initial_points=[bad])
    assert len(result.restart_results) == 2
    assert result.restart_results[0].error is not None
    assert result.restart_results[0].warm_start
    assert result.restart_results[1].ok


def test_all_restarts_failing_aborts(monkeypatch):
    def broken(*args, **kwargs):
        raise EigensolverError("no convergence", residual_norm=1.0)

    monkeypatch.setattr(solver_module, 'cost_and_grad', broken)
    with pytest.raises(SolverAbortError):
        rgd(depolarizing(2, 1 / 3), SolverConfig(seed=0, restarts=2, n_jobs=1))


def test_warm_start_from_optimum():
    channel = depolarizing(2, 1 / 3)
    first = rgd(channel, SolverConfig(seed=0, restarts=1))
    again = rgd(channel, SolverConfig(seed=10, restarts=1), initial_points=[first.best_point])
    warm = again.restart_results[0]
    assert warm.warm_start
    assert warm.ok
    assert warm.f_trace[0] == pytest.approx(-first.chi_lower_bound, abs=1e-12)
    assert warm.chi >= first.chi_lower_bound - 1e-12


# ---------------------------------------------------------------------------
# random channels
# ---------------------------------------------------------------------------

def test_generated_channel_capacity_range(fast_config):
    generator = ChannelGenerator(seed=5)
    eb = generator.entanglement_breaking(2)
    cq = generator.cq(10, 20)
    for channel, bound in ((eb, 1.0), (cq, np.log2(10))):
        result = rgd(channel, fast_config)
        assert -1e-9 <= result.chi_lower_bound <= bound + 1e-9


def test_generated_channel_is_reproducible():
    channel = ChannelGenerator(seed=5).entanglement_breaking(2)
    first = rgd(channel, SolverConfig(seed=0, restarts=2))
    second = rgd(ChannelGenerator(seed=5).entanglement_breaking(2), SolverConfig(seed=0, restarts=2))
    assert abs(first.chi_lower_bound - second.chi_lower_bound) <= 1e-12


def test_entanglement_breaking_qubit_is_stable_across_seeds():
    channel = ChannelGenerator(seed=8).entanglement_breaking(2)
    cfg = SolverConfig(seed=0, restarts=5)
    first, seconds = _timed_rgd(channel, cfg)
    second = rgd(channel, SolverConfig(seed=100, restarts=5))
    assert abs(first.chi_lower_bound - second.chi_lower_bound) <= 1e-6
    assert _relative_entropy_spread(channel, first, cfg) <= 1e-4
    assert seconds <= 10.0


def test_entanglement_breaking_qubit_agrees_across_geometries():
    channel = ChannelGenerator(seed=8).entanglement_breaking(2)
    euclidean = rgd(channel, SolverConfig(seed=0))
    fisher = rgd(channel, SolverConfig(seed=0, simplex_geometry='fisher'))
    assert abs(euclidean.chi_lower_bound - fisher.chi_lower_bound) <= 1e-7
    assert euclidean.termination_reason is not TerminationReason.MAX_ITERS


# ---------------------------------------------------------------------------
# sweep and additivity
# ---------------------------------------------------------------------------

def test_depolarizing_sweep_endpoints(fast_config):
    rows = sweep(lambda lam: depolarizing(2, lam), [0.0, 0.5, 1.0], fast_config)
    assert [row.status for row in rows] == ['ok', 'ok', 'ok']
    assert rows[0].chi == pytest.approx(1.0, abs=1e-6)
    assert rows[1].chi == pytest.approx(depolarizing_holevo_capacity(2, 0.5), abs=1e-8)
    assert rows[2].chi == pytest.approx(0.0, abs=1e-9)
    # the warm start is run ahead of the fresh restarts
    assert rows[1].result.restart_results[0].warm_start


def test_sweep_records_failures_and_continues():
    rows = sweep(lambda lam: depolarizing(2, lam), [0.5, 2.0, 0.25], SolverConfig(seed=0, restarts=1))
    assert rows[0].status == 'ok'
    assert rows[1].status.startswith('error')
    assert np.isnan(rows[1].chi)
    assert rows[2].status == 'ok'


def test_empty_sweep():
    assert sweep(lambda lam: depolarizing(2, lam), [], SolverConfig()) == []


@pytest.mark.slow
def test_composed_qutrit_sweep_is_monotone():
    grid = [round(0.05 * k, 2) for k in range(21)]
    start = time.perf_counter()
    rows = sweep(lambda lam: compose(depolarizing(3, lam), qutrit_wd(0.5)), grid, SolverConfig(seed=0))
    assert time.perf_counter() - start <= 900.0
    chis = [row.chi for row in rows]
    assert abs(chis[0] - 1.0) <= 1e-4
    assert abs(chis[-1]) <= 1e-6
    assert all(later <= earlier + 1e-6 for earlier, later in zip(chis, chis[1:]))


def test_additivity_gap_for_depolarizing():
    report = additivity_gap(depolarizing(2, 1 / 3), copies=2, cfg=SolverConfig(seed=0, restarts=2))
    assert report.chi_product >= report.chi_single
    assert report.gap <= 1e-6
    assert report.product.best_point.d == 4
