"""
Holevo Cost Function and Riemannian Gradient
f_N(m) = Σ p_i H(N(|ψ_i⟩⟨ψ_i|)) - H(N(Σ p_i |ψ_i⟩⟨ψ_i|)), its gradient on the product manifold,
the cq specialization and the tensor-product gradient residual
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from holevo_rgd import config
from holevo_rgd.errors import (
    DimensionMismatchError,
    DimensionOverflowError,
    NotPositiveSemidefiniteError,
    SupportViolationError,
)
from holevo_rgd.optim.manifold import (
    EnsemblePoint,
    SimplexGeometry,
    TangentVector,
    grad_norm,
    inner,
    proj_tangent,
    random_point,
    retract,
    tensor_points,
)
from holevo_rgd.quantum.channel import AnyChannel, ChannelKind, SmoothedChannel, smooth, tensor
from holevo_rgd.quantum.numerics import (
    LOG_FLOOR,
    PSD_TOL,
    SUPPORT_TOL,
    EigenDecomposition,
    entropy_from_eigenvalues,
    herm_eig,
)

logger = logging.getLogger(__name__)

FD_STEP = 1e-6
FD_FLOOR = 1e-3
FD_TOL = 1e-5


@dataclass(frozen=True)
class CostReport:
    """Holevo cost at a point, with the entropies it was assembled from (bits)"""
    f: float
    chi: float
    per_state_entropies: np.ndarray
    mixture_entropy: float
    rel_entropies: np.ndarray


@dataclass(frozen=True)
class _Evaluation:
    report: CostReport
    log_sigma: np.ndarray
    log_sigmas: np.ndarray


def _log_from(dec: EigenDecomposition) -> np.ndarray:
    logs = np.log2(np.maximum(dec.eigenvalues, LOG_FLOOR))
    return EigenDecomposition(logs, dec.eigenvectors).reconstruct()


def _output_states(channel: AnyChannel, m: EnsemblePoint) -> np.ndarray:
    if m.simplex_only:
        if channel.kind is not ChannelKind.CQ or m.n != channel.d_in:
            raise DimensionMismatchError(
                f"simplex-only point of size {m.n} needs a cq channel with {m.n} letters"
            )
        # one-hot inputs pick out the (smoothed) letter outputs
        return channel.apply_pure(np.eye(channel.d_in))

    if m.d != channel.d_in:
        raise DimensionMismatchError(f"point states live in C^{m.d}, channel takes C^{channel.d_in}")
    return channel.apply_pure(m.states)


def _evaluate(channel: AnyChannel, m: EnsemblePoint) -> _Evaluation:
    sigmas = _output_states(channel, m)
    sigma = np.einsum('i,iab->ab', m.p, sigmas)

    dec_states = herm_eig(sigmas)
    dec_mix = herm_eig(sigma)
    min_eig = float(min(dec_states.eigenvalues.min(), dec_mix.eigenvalues.min()))
    if min_eig < -PSD_TOL:
        raise NotPositiveSemidefiniteError(min_eig)
    if not isinstance(channel, SmoothedChannel) and dec_mix.eigenvalues.min() < SUPPORT_TOL:
        raise SupportViolationError(
            f"{channel.label}: average output is singular; smooth the channel before evaluating the cost"
        )

    entropies = entropy_from_eigenvalues(dec_states.eigenvalues)
    mixture_entropy = float(entropy_from_eigenvalues(dec_mix.eigenvalues))
    log_sigmas = _log_from(dec_states)
    log_sigma = _log_from(dec_mix)

    # D(σ_i‖σ) = tr σ_i (log σ_i - log σ)
    rel_entropies = np.real(np.einsum('iab,iba->i', sigmas, log_sigmas - log_sigma[None]))

    f = float(np.dot(m.p, entropies) - mixture_entropy)
    report = CostReport(
        f=f,
        chi=-f,
        per_state_entropies=np.asarray(entropies),
        mixture_entropy=mixture_entropy,
        rel_entropies=rel_entropies,
    )
    return _Evaluation(report=report, log_sigma=log_sigma, log_sigmas=log_sigmas)


def cost(channel: AnyChannel, m: EnsemblePoint) -> CostReport:
    """
    Evaluate the Holevo cost f_N(m)

    Args:
        channel: Smoothed channel (an unsmoothed one is accepted while its average output is full rank)
        m: Ensemble point; simplex-only for cq channels

    Returns:
        CostReport with f, chi = -f and the entropies behind them
    """
    return _evaluate(channel, m).report


def simplex_gradient(rel_entropies: np.ndarray, p: np.ndarray,
                     geometry: SimplexGeometry = SimplexGeometry.EUCLIDEAN) -> np.ndarray:
    """
    Simplex component of the gradient from the relative entropies D(σ_i‖σ)

    The Euclidean partials are ∂f/∂p_i = 1 - D(σ_i‖σ) (up to a constant the
    tangent space ignores).
    """
    geometry = SimplexGeometry(geometry)
    mean_rel = float(np.dot(p, rel_entropies))
    if geometry is SimplexGeometry.EUCLIDEAN:
        partials = 1.0 - rel_entropies
        return partials - partials.mean()
    if geometry is SimplexGeometry.FISHER:
        return p * (mean_rel - rel_entropies)
    # q-vector form; not tangent and not zero at the optimum
    return 1.0 - rel_entropies + p * (mean_rel - 1.0)


def _gradient(channel: AnyChannel, m: EnsemblePoint, ev: _Evaluation,
              geometry: SimplexGeometry) -> TangentVector:
    dp = simplex_gradient(ev.report.rel_entropies, m.p, geometry)
    if m.simplex_only:
        return TangentVector(dp=dp)

    # 2 p_i N†(log σ - log σ_i) |ψ_i⟩, then (I - |ψ_i⟩⟨ψ_i|); the projection adds D(σ_i‖σ)|ψ_i⟩
    heisenberg = channel.adjoint_apply(ev.log_sigma[None] - ev.log_sigmas)
    ambient = 2.0 * m.p[:, None] * np.einsum('nij,nj->ni', heisenberg, m.states)
    dstates = proj_tangent(m, np.zeros(m.n), ambient).dstates
    return TangentVector(dp=dp, dstates=dstates)


def riemannian_grad(channel: AnyChannel, m: EnsemblePoint,
                    simplex_geometry: SimplexGeometry = SimplexGeometry.EUCLIDEAN) -> TangentVector:
    """
    Riemannian gradient of the Holevo cost at m

    State components: 2 p_i [N†(log σ - log σ_i) + D(σ_i‖σ) I] |ψ_i⟩.
    Simplex component: see simplex_gradient.
    """
    return _gradient(channel, m, _evaluate(channel, m), SimplexGeometry(simplex_geometry))


def cost_and_grad(channel: AnyChannel, m: EnsemblePoint,
                  simplex_geometry: SimplexGeometry = SimplexGeometry.EUCLIDEAN) -> Tuple[CostReport, TangentVector]:
    """Cost and gradient from a single set of eigendecompositions"""
    ev = _evaluate(channel, m)
    return ev.report, _gradient(channel, m, ev, SimplexGeometry(simplex_geometry))


def cq_grad(channel: AnyChannel, p: np.ndarray,
            simplex_geometry: SimplexGeometry = SimplexGeometry.EUCLIDEAN) -> np.ndarray:
    """
    Gradient of the Holevo cost of a cq channel on the simplex

    Args:
        channel: Smoothed cq channel x -> ρ_x
        p: Input distribution in the open simplex

    Returns:
        Simplex vector in the requested geometry
    """
    if channel.kind is not ChannelKind.CQ:
        raise DimensionMismatchError(f"{channel.label} is not a cq channel")
    return riemannian_grad(channel, EnsemblePoint(p=p), simplex_geometry).dp


def product_grad_residual(first: SmoothedChannel, second: SmoothedChannel,
                          m_first: EnsemblePoint, m_second: EnsemblePoint,
                          simplex_geometry: SimplexGeometry = SimplexGeometry.EUCLIDEAN,
                          max_dim: Optional[int] = None) -> float:
    """
    Gradient norm of f_{N⊗N'} at the product ensemble {p_i q_j, ψ_i ⊗ φ_j}

    With ε-critical factors of ensemble sizes n and n' the euclidean norm is at
    most sqrt(2·max(n, n'))·ε: the sphere parts carry over with weights q_j and
    p_i while the simplex parts are repeated n' and n times.

    Args:
        first, second: Smoothed factor channels
        m_first, m_second: Critical points of the factors
        simplex_geometry: Metric used for the norm
        max_dim: Cap on the product input dimension (config.MAX_PRODUCT_DIM by default)

    Returns:
        Gradient norm at the product point
    """
    max_dim = config.MAX_PRODUCT_DIM if max_dim is None else max_dim
    if first.d_in * second.d_in > max_dim:
        raise DimensionOverflowError(
            f"product input dimension {first.d_in * second.d_in} exceeds cap {max_dim}"
        )
    product = smooth(tensor(first.base, second.base), delta=min(first.delta, second.delta))
    m = tensor_points(m_first, m_second)
    grad = riemannian_grad(product, m, simplex_geometry)
    return grad_norm(m, grad, simplex_geometry)


def directional_derivative_error(channel: AnyChannel, m: EnsemblePoint, v: TangentVector,
                                 simplex_geometry: SimplexGeometry = SimplexGeometry.EUCLIDEAN,
                                 t: float = FD_STEP) -> float:
    """
    Relative error between the central difference of f along retraction curves and ⟨grad f, v⟩

    The denominator is floored at FD_FLOOR so that near-zero derivatives are
    compared in absolute terms.
    """
    forward = cost(channel, retract(m, v, t)).f
    backward = cost(channel, retract(m, -v, t)).f
    finite_difference = (forward - backward) / (2.0 * t)
    analytic = inner(m, riemannian_grad(channel, m, simplex_geometry), v, simplex_geometry)
    return abs(finite_difference - analytic) / max(abs(analytic), FD_FLOOR)


def random_tangent(m: EnsemblePoint, rng: np.random.Generator) -> TangentVector:
    """Unit-norm (euclidean metric) random tangent vector at m"""
    dp = rng.standard_normal(m.n)
    dstates = None
    if not m.simplex_only:
        dstates = rng.standard_normal(m.states.shape) + 1j * rng.standard_normal(m.states.shape)
    v = proj_tangent(m, dp, dstates)
    return v * (1.0 / grad_norm(m, v))


def gradient_check(channel: AnyChannel, trials: int = 20, directions: int = 5,
                   simplex_geometry: SimplexGeometry = SimplexGeometry.EUCLIDEAN,
                   seed: int = 0, ensemble_size: Optional[int] = None) -> List[float]:
    """
    Finite-difference validation of riemannian_grad

    Args:
        channel: Smoothed channel
        trials: Number of random points
        directions: Random tangent directions per point
        simplex_geometry: Geometry under test
        seed: Seed for points and directions
        ensemble_size: Ensemble size (d_in² for kraus, |X| for cq by default)

    Returns:
        Worst relative error per trial
    """
    rng = np.random.default_rng(seed)
    cq = channel.kind is ChannelKind.CQ
    n = channel.d_in if cq else (ensemble_size or channel.d_in ** 2)

    worst = []
    for trial in range(trials):
        m = random_point(None if cq else channel.d_in, n, seed + trial)
        errors = [
            directional_derivative_error(channel, m, random_tangent(m, rng), simplex_geometry)
            for _ in range(directions)
        ]
        worst.append(max(errors))
        logger.debug("gradient check trial %d: worst relative error %.3e", trial, worst[-1])
    return worst


def depolarizing_holevo_capacity(d: int, lam: float) -> float:
    """
    Closed form χ(D_λ) = log d + λ' log λ' + (λ(d-1)/d) log(λ/d) with λ' = 1 - λ + λ/d (bits)
    """
    lam_prime = 1.0 - lam + lam / d
    value = np.log2(d)
    if lam_prime > 0:
        value += lam_prime * np.log2(lam_prime)
    if lam > 0:
        value += lam * (d - 1) / d * np.log2(lam / d)
    return float(max(value, 0.0))
