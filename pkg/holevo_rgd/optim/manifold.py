"""
Product Manifold Geometry
Points, tangent vectors, metric, projections and retractions on Δ₊^{n-1} x (S^{d-1})^n
"""

from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional

import numpy as np

from holevo_rgd.data.generators import haar_states
from holevo_rgd.errors import DimensionMismatchError, InvalidStateError

POINT_TOL = 1e-10
MIN_INITIAL_PROB = 1e-6


class SimplexGeometry(str, Enum):
    """How the simplex factor turns partial derivatives into a gradient"""
    EUCLIDEAN = "euclidean"
    PAPER_Q = "paper_q"
    FISHER = "fisher"


@dataclass(frozen=True, eq=False)
class EnsemblePoint:
    """
    Pure-state ensemble m = (p, ψ_0, ..., ψ_{n-1})

    `states` is None for simplex-only points (cq channels).
    """
    p: np.ndarray
    states: Optional[np.ndarray] = None

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise DimensionMismatchError(f"probabilities must be a non-empty vector, got shape {p.shape}")
        if np.any(p <= 0.0) or abs(p.sum() - 1.0) > POINT_TOL:
            raise InvalidStateError("probabilities must be positive and sum to 1")
        object.__setattr__(self, 'p', p)

        if self.states is not None:
            states = np.asarray(self.states, dtype=complex)
            if states.ndim != 2 or states.shape[0] != p.size:
                raise DimensionMismatchError(f"need {p.size} state vectors, got shape {states.shape}")
            if np.any(np.abs(np.linalg.norm(states, axis=1) - 1.0) > POINT_TOL):
                raise InvalidStateError("ensemble states must have unit norm")
            object.__setattr__(self, 'states', states)

    @property
    def n(self) -> int:
        return int(self.p.size)

    @property
    def d(self) -> int:
        return 0 if self.states is None else int(self.states.shape[1])

    @property
    def simplex_only(self) -> bool:
        return self.states is None


@dataclass(frozen=True, eq=False)
class TangentVector:
    """Perturbation (ṗ, ψ̇_0, ..., ψ̇_{n-1}); dstates is None on simplex-only points"""
    dp: np.ndarray
    dstates: Optional[np.ndarray] = None

    def __mul__(self, scale: float) -> "TangentVector":
        dstates = None if self.dstates is None else scale * self.dstates
        return TangentVector(dp=scale * self.dp, dstates=dstates)

    __rmul__ = __mul__

    def __neg__(self) -> "TangentVector":
        return self * -1.0


def _check_shapes(m: EnsemblePoint, dp: np.ndarray, dstates: Optional[np.ndarray]):
    if np.shape(dp) != (m.n,):
        raise DimensionMismatchError(f"simplex component must have shape ({m.n},), got {np.shape(dp)}")
    if m.simplex_only:
        if dstates is not None:
            raise DimensionMismatchError("simplex-only point takes no state components")
    elif dstates is None or np.shape(dstates) != m.states.shape:
        raise DimensionMismatchError(f"state components must have shape {m.states.shape}")


def inner(m: EnsemblePoint, u: TangentVector, v: TangentVector,
          geometry: SimplexGeometry = SimplexGeometry.EUCLIDEAN) -> float:
    """
    Riemannian metric Σ ṗ_i q̇_i (divided by p_i under fisher) + Σ Re⟨ψ̇_i|φ̇_i⟩

    Args:
        m: Base point
        u, v: Tangent vectors at m
        geometry: Simplex metric

    Returns:
        Real inner product
    """
    _check_shapes(m, u.dp, u.dstates)
    _check_shapes(m, v.dp, v.dstates)

    if SimplexGeometry(geometry) is SimplexGeometry.FISHER:
        total = float(np.sum(u.dp * v.dp / m.p))
    else:
        total = float(np.dot(u.dp, v.dp))
    if not m.simplex_only:
        total += float(np.real(np.vdot(u.dstates, v.dstates)))
    return total


def proj_tangent(m: EnsemblePoint, dp, dstates=None,
                 geometry: SimplexGeometry = SimplexGeometry.EUCLIDEAN) -> TangentVector:
    """
    Orthogonal projection of ambient arrays onto the tangent space at m

    The simplex part subtracts the mean (euclidean, paper_q) or p·Σx (fisher,
    orthogonal under the fisher metric); each state part applies (I - |ψ⟩⟨ψ|).
    """
    dp = np.asarray(dp, dtype=float)
    if dstates is not None:
        dstates = np.asarray(dstates, dtype=complex)
    _check_shapes(m, dp, dstates)

    if SimplexGeometry(geometry) is SimplexGeometry.FISHER:
        proj_p = dp - m.p * dp.sum()
    else:
        proj_p = dp - dp.mean()

    proj_states = None
    if dstates is not None:
        overlaps = np.einsum('ij,ij->i', m.states.conj(), dstates)
        proj_states = dstates - overlaps[:, None] * m.states
    return TangentVector(dp=proj_p, dstates=proj_states)


def retract(m: EnsemblePoint, v: TangentVector, step: float = 1.0) -> EnsemblePoint:
    """
    Move from m along step·v and land back on the manifold

    Simplex: p̂_i = p_i + sṗ_i + (sṗ_i)²/(2p_i), renormalized (p̂_i ≥ p_i/2 > 0).
    Sphere: (ψ + sψ̇)/‖ψ + sψ̇‖.
    """
    if step < 0:
        raise ValueError(f"step must be non-negative, got {step}")
    _check_shapes(m, v.dp, v.dstates)
    if step == 0:
        return m

    sdp = step * v.dp
    p_hat = m.p + sdp + sdp ** 2 / (2.0 * m.p)
    p_new = p_hat / p_hat.sum()

    states_new = None
    if not m.simplex_only:
        moved = m.states + step * v.dstates
        states_new = moved / np.linalg.norm(moved, axis=1, keepdims=True)
    return EnsemblePoint(p=p_new, states=states_new)


def random_point(d: Optional[int], n: int, seed: int) -> EnsemblePoint:
    """
    Random initial point: Haar states and a uniform draw from the simplex

    Args:
        d: State dimension, or None for a simplex-only point
        n: Ensemble size
        seed: Seed; equal seeds give identical points

    Returns:
        EnsemblePoint with every p_i ≥ 1e-6 before the final renormalization
    """
    if n < 1 or (d is not None and d < 1):
        raise ValueError(f"need d, n >= 1, got d={d}, n={n}")
    rng = np.random.default_rng(seed)

    p = rng.exponential(size=n)
    p /= p.sum()
    p = np.maximum(p, MIN_INITIAL_PROB)
    p /= p.sum()

    states = None if d is None else haar_states(rng, n, d)
    return EnsemblePoint(p=p, states=states)


def grad_norm(m: EnsemblePoint, v: TangentVector,
              geometry: SimplexGeometry = SimplexGeometry.EUCLIDEAN) -> float:
    return float(np.sqrt(max(inner(m, v, v, geometry), 0.0)))


def check_tangent(m: EnsemblePoint, v: TangentVector, tol: float = POINT_TOL) -> bool:
    """Σ ṗ_i = 0 and ⟨ψ_i|ψ̇_i⟩ = 0 within tol"""
    _check_shapes(m, v.dp, v.dstates)
    if abs(float(v.dp.sum())) > tol:
        return False
    if m.simplex_only:
        return True
    overlaps = np.einsum('ij,ij->i', m.states.conj(), v.dstates)
    return bool(np.all(np.abs(overlaps) <= tol))


def tensor_points(first: EnsemblePoint, second: EnsemblePoint) -> EnsemblePoint:
    """Product ensemble {p_i q_j, ψ_i ⊗ φ_j} indexed i-major"""
    if first.simplex_only or second.simplex_only:
        raise DimensionMismatchError("product ensembles need state components on both factors")
    p = np.outer(first.p, second.p).ravel()
    states = np.einsum('ia,jb->ijab', first.states, second.states)
    states = states.reshape(first.n * second.n, first.d * second.d)
    return EnsemblePoint(p=p / p.sum(), states=states)


def point_to_dict(m: EnsemblePoint) -> Dict:
    """JSON-ready encoding; complex entries become [re, im] pairs"""
    states = None
    if not m.simplex_only:
        states = np.stack([m.states.real, m.states.imag], axis=-1).tolist()
    return {'p': m.p.tolist(), 'states': states}


def point_from_dict(data: Dict) -> EnsemblePoint:
    p = np.asarray(data['p'], dtype=float)
    states = data.get('states')
    if states is not None:
        pairs = np.asarray(states, dtype=float)
        # renormalize away decimal round-off
        states = pairs[..., 0] + 1j * pairs[..., 1]
        states = states / np.linalg.norm(states, axis=1, keepdims=True)
    return EnsemblePoint(p=p / p.sum(), states=states)
