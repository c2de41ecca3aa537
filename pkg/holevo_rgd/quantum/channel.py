"""
Quantum Channel Representation
Kraus and classical-quantum channels, δ-smoothing, and the standard channel constructors
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence, Union

import numpy as np

from holevo_rgd.errors import ChannelValidationError, DimensionMismatchError, InvalidStateError
from holevo_rgd.quantum.numerics import hermitian, is_density_matrix

logger = logging.getLogger(__name__)

TP_TOL = 1e-9
UNIT_TOL = 1e-9
DEFAULT_DELTA = 1e-9


class ChannelKind(Enum):
    KRAUS = "kraus"
    CQ = "cq"


@dataclass(frozen=True, eq=False)
class Channel:
    """
    Completely-positive trace-preserving map

    A kraus channel stores its operators as one (K, d_out, d_in) array. A cq
    channel stores one output density matrix per input letter as an
    (|X|, d_out, d_out) array; its inputs are probability vectors over the
    alphabet, or diagonal matrices carrying one.
    """
    kind: ChannelKind
    d_in: int
    d_out: int
    kraus_ops: Optional[np.ndarray] = field(default=None, repr=False)
    output_states: Optional[np.ndarray] = field(default=None, repr=False)
    label: str = "channel"

    @classmethod
    def from_kraus(cls, ops, label: str = "kraus", tol: float = TP_TOL) -> "Channel":
        """
        Build a kraus channel and check Σ K†K = I

        Args:
            ops: Sequence of d_out x d_in matrices or a (K, d_out, d_in) array
            label: Human readable name used in reports
            tol: Frobenius tolerance of the trace-preservation check

        Returns:
            Validated Channel
        """
        ops = np.asarray(ops, dtype=complex)
        if ops.ndim == 2:
            ops = ops[None]
        if ops.ndim != 3 or ops.shape[0] == 0:
            raise ChannelValidationError(f"Kraus operators must form a (K, d_out, d_in) array, got {ops.shape}")

        channel = cls(
            kind=ChannelKind.KRAUS,
            d_in=int(ops.shape[2]),
            d_out=int(ops.shape[1]),
            kraus_ops=ops,
            label=label,
        )
        residual = channel.tp_residual()
        if residual > tol:
            raise ChannelValidationError(f"{label}: ‖Σ K†K - I‖_F = {residual:.3e} exceeds {tol:.1e}")
        return channel

    @classmethod
    def from_states(cls, states, label: str = "cq", tol: float = TP_TOL) -> "Channel":
        """Build a cq channel x -> states[x]; every state must be a density matrix"""
        states = np.asarray(states, dtype=complex)
        if states.ndim != 3 or states.shape[0] == 0 or states.shape[1] != states.shape[2]:
            raise ChannelValidationError(f"cq output states must form a (|X|, d, d) array, got {states.shape}")
        for x, rho in enumerate(states):
            if not is_density_matrix(rho, tol):
                raise ChannelValidationError(f"{label}: output state {x} is not a density matrix")

        return cls(
            kind=ChannelKind.CQ,
            d_in=int(states.shape[0]),
            d_out=int(states.shape[1]),
            output_states=hermitian(states),
            label=label,
        )

    @property
    def n_kraus(self) -> int:
        return 0 if self.kraus_ops is None else int(self.kraus_ops.shape[0])

    def tp_residual(self) -> float:
        """‖Σ K†K - I‖_F for kraus channels; worst density-matrix defect for cq channels"""
        if self.kind is ChannelKind.KRAUS:
            gram = np.einsum('kai,kaj->ij', self.kraus_ops.conj(), self.kraus_ops)
            return float(np.linalg.norm(gram - np.eye(self.d_in)))
        traces = np.real(np.einsum('xaa->x', self.output_states))
        return float(np.max(np.abs(traces - 1.0)))

    def _cq_weights(self, rho) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        if rho.ndim == 1:
            weights = rho
        else:
            diag = np.diagonal(rho, axis1=-2, axis2=-1)
            off = rho - diag[..., :, None] * np.eye(self.d_in)
            if np.linalg.norm(off) > 1e-12:
                raise InvalidStateError("cq channel inputs must be diagonal in the alphabet basis")
            weights = diag
        if weights.shape[-1] != self.d_in:
            raise DimensionMismatchError(f"cq channel takes {self.d_in} letters, got {weights.shape[-1]}")
        return np.real(weights)

    def apply(self, rho) -> np.ndarray:
        """N(ρ) = Σ_k K_k ρ K_k†, or Σ_x p_x ρ_x for cq channels"""
        if self.kind is ChannelKind.CQ:
            return np.einsum('...x,xab->...ab', self._cq_weights(rho), self.output_states)

        rho = np.asarray(rho, dtype=complex)
        if rho.shape[-2:] != (self.d_in, self.d_in):
            raise DimensionMismatchError(f"{self.label} takes {self.d_in}x{self.d_in} inputs, got {rho.shape}")
        out = np.einsum('kai,...ij,kbj->...ab', self.kraus_ops, rho, self.kraus_ops.conj())
        return hermitian(out)

    def apply_pure(self, psi) -> np.ndarray:
        """
        N(|ψ⟩⟨ψ|) computed as Σ_k (K_k ψ)(K_k ψ)†

        Args:
            psi: Unit vector (d_in,) or a stack of them (n, d_in)

        Returns:
            Output density matrix, or a stack (n, d_out, d_out)
        """
        psi = np.asarray(psi, dtype=complex)
        if psi.shape[-1] != self.d_in:
            raise DimensionMismatchError(f"{self.label} takes vectors of length {self.d_in}, got {psi.shape}")
        norms = np.linalg.norm(psi, axis=-1)
        if np.any(np.abs(norms - 1.0) > UNIT_TOL):
            raise InvalidStateError("input state vectors must have unit norm")

        if self.kind is ChannelKind.CQ:
            return np.einsum('...x,xab->...ab', np.abs(psi) ** 2, self.output_states)

        images = np.einsum('kai,...i->...ka', self.kraus_ops, psi)
        return hermitian(np.einsum('...ka,...kb->...ab', images, images.conj()))

    def adjoint_apply(self, h) -> np.ndarray:
        """Heisenberg picture N†(H) = Σ_k K_k† H K_k; diag(tr ρ_x H) for cq channels"""
        h = np.asarray(h, dtype=complex)
        if h.shape[-2:] != (self.d_out, self.d_out):
            raise DimensionMismatchError(f"{self.label} adjoint takes {self.d_out}x{self.d_out} inputs, got {h.shape}")

        if self.kind is ChannelKind.CQ:
            expectations = np.real(np.einsum('xab,...ba->...x', self.output_states, h))
            return expectations[..., :, None] * np.eye(self.d_in)

        out = np.einsum('kai,...ab,kbj->...ij', self.kraus_ops.conj(), h, self.kraus_ops)
        return hermitian(out)


@dataclass(frozen=True, eq=False)
class SmoothedChannel:
    """(1-δ)·N + δ·D with D the fully depolarizing channel, applied analytically"""
    base: Channel
    delta: float = DEFAULT_DELTA

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"smoothing delta must lie in (0, 1), got {self.delta}")

    @property
    def kind(self) -> ChannelKind:
        return self.base.kind

    @property
    def d_in(self) -> int:
        return self.base.d_in

    @property
    def d_out(self) -> int:
        return self.base.d_out

    @property
    def label(self) -> str:
        return self.base.label

    def _mixed(self, trace) -> np.ndarray:
        trace = np.asarray(trace, dtype=float)
        return (self.delta * trace / self.d_out)[..., None, None] * np.eye(self.d_out)

    def apply(self, rho) -> np.ndarray:
        rho = np.asarray(rho)
        if self.kind is ChannelKind.CQ and rho.ndim == 1:
            trace = np.sum(np.real(rho), axis=-1)
        else:
            trace = np.real(np.trace(rho, axis1=-2, axis2=-1))
        return (1.0 - self.delta) * self.base.apply(rho) + self._mixed(trace)

    def apply_pure(self, psi) -> np.ndarray:
        out = self.base.apply_pure(psi)
        return (1.0 - self.delta) * out + self._mixed(np.ones(out.shape[:-2]))

    def adjoint_apply(self, h) -> np.ndarray:
        h = np.asarray(h, dtype=complex)
        trace = np.real(np.trace(h, axis1=-2, axis2=-1))
        identity_part = (self.delta * trace / self.d_out)[..., None, None] * np.eye(self.d_in)
        return (1.0 - self.delta) * self.base.adjoint_apply(h) + identity_part


AnyChannel = Union[Channel, SmoothedChannel]


def apply(channel: AnyChannel, rho) -> np.ndarray:
    return channel.apply(rho)


def apply_pure(channel: AnyChannel, psi) -> np.ndarray:
    return channel.apply_pure(psi)


def adjoint_apply(channel: AnyChannel, h) -> np.ndarray:
    return channel.adjoint_apply(h)


def smooth(channel: AnyChannel, delta: float = DEFAULT_DELTA) -> SmoothedChannel:
    """Wrap a channel with δ-smoothing; an already smoothed channel is re-smoothed from its base"""
    if isinstance(channel, SmoothedChannel):
        channel = channel.base
    return SmoothedChannel(base=channel, delta=delta)


def is_trace_preserving(channel: Channel, tol: float = TP_TOL) -> bool:
    return channel.tp_residual() <= tol


def _require_kraus(*channels: AnyChannel, operation: str):
    for channel in channels:
        if not isinstance(channel, Channel) or channel.kind is not ChannelKind.KRAUS:
            raise ChannelValidationError(f"{operation} needs unsmoothed kraus channels")


# ---------------------------------------------------------------------------
# Constructors
# ---------------------------------------------------------------------------

def identity_channel(d: int) -> Channel:
    return Channel.from_kraus(np.eye(d), label=f"identity({d})")


def depolarizing(d: int, lam: float) -> Channel:
    """
    D_λ(ρ) = (1-λ)ρ + λ I/d

    Kraus set: √(1-λ) I plus the d² units √(λ/d) |i⟩⟨j| (zero-weight terms dropped)
    """
    if not 0.0 <= lam <= 1.0:
        raise ChannelValidationError(f"depolarizing parameter must lie in [0, 1], got {lam}")
    if d < 1:
        raise ChannelValidationError(f"dimension must be positive, got {d}")

    ops = []
    if lam < 1.0:
        ops.append(np.sqrt(1.0 - lam) * np.eye(d))
    if lam > 0.0:
        units = np.zeros((d * d, d, d))
        rows, cols = np.divmod(np.arange(d * d), d)
        units[np.arange(d * d), rows, cols] = np.sqrt(lam / d)
        ops.extend(units)
    return Channel.from_kraus(np.array(ops), label=f"depolarizing({d}, {lam:g})")


PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def pauli(p_x: float, p_y: float, p_z: float) -> Channel:
    """P(ρ) = (1-q)ρ + p_X XρX + p_Y YρY + p_Z ZρZ with q = p_X + p_Y + p_Z"""
    probs = np.array([p_x, p_y, p_z], dtype=float)
    if np.any(probs < 0.0):
        raise ChannelValidationError(f"Pauli probabilities must be non-negative, got {probs.tolist()}")
    q = float(probs.sum())
    if q > 1.0 + 1e-12:
        raise ChannelValidationError(f"Pauli probabilities sum to {q}, above 1")

    weights = np.sqrt(np.clip([1.0 - q, *probs], 0.0, None))
    ops = np.array([w * op for w, op in zip(weights, (np.eye(2), PAULI_X, PAULI_Y, PAULI_Z))])
    return Channel.from_kraus(ops, label=f"pauli({p_x:g}, {p_y:g}, {p_z:g})")


def cq_channel(states: Sequence[np.ndarray]) -> Channel:
    """Classical-quantum channel x -> states[x]"""
    if len(states) == 0:
        raise ChannelValidationError("cq channel needs at least one output state")
    shapes = {np.shape(s) for s in states}
    if len(shapes) != 1:
        raise ChannelValidationError(f"cq output states have inconsistent shapes {sorted(shapes)}")
    return Channel.from_states(np.array(states, dtype=complex), label=f"cq({len(states)})")


def entanglement_breaking(ws: Sequence[np.ndarray], vs: Sequence[np.ndarray]) -> Channel:
    """
    Entanglement-breaking channel with rank-one Kraus operators K_i = |w_i⟩⟨v_i|

    Args:
        ws: Unit output vectors
        vs: Orthonormal basis of the input space

    Returns:
        Channel; trace preservation follows from the orthonormality of vs
    """
    ws = np.asarray(ws, dtype=complex)
    vs = np.asarray(vs, dtype=complex)
    if ws.ndim != 2 or vs.ndim != 2 or ws.shape[0] != vs.shape[0] or vs.shape[0] != vs.shape[1]:
        raise ChannelValidationError(f"need d output vectors and a d x d basis, got {ws.shape} and {vs.shape}")

    gram = vs.conj() @ vs.T
    if np.linalg.norm(gram - np.eye(vs.shape[0])) > UNIT_TOL:
        raise ChannelValidationError("input vectors vs are not orthonormal")
    if np.any(np.abs(np.linalg.norm(ws, axis=1) - 1.0) > UNIT_TOL):
        raise ChannelValidationError("output vectors ws must have unit norm")

    ops = ws[:, :, None] * vs.conj()[:, None, :]
    return Channel.from_kraus(ops, label=f"entanglement_breaking({vs.shape[0]})")


def qutrit_wd(alpha: float) -> Channel:
    """
    Qutrit channel with E_α = sin α |0⟩⟨1| + |1⟩⟨2| and D_α = cos α |2⟩⟨1| + |1⟩⟨0|

    Defined for 0 < α ≤ π/4; its Holevo capacity is 1.
    """
    if not 0.0 < alpha <= np.pi / 4 + 1e-12:
        raise ChannelValidationError(f"alpha must lie in (0, π/4], got {alpha}")

    e_op = np.zeros((3, 3), dtype=complex)
    e_op[0, 1] = np.sin(alpha)
    e_op[1, 2] = 1.0
    d_op = np.zeros((3, 3), dtype=complex)
    d_op[2, 1] = np.cos(alpha)
    d_op[1, 0] = 1.0
    return Channel.from_kraus(np.array([e_op, d_op]), label=f"qutrit_wd({alpha:g})")


def compose(outer: Channel, inner: Channel) -> Channel:
    """outer ∘ inner with Kraus set {K2_j K1_i}"""
    _require_kraus(outer, inner, operation="compose")
    if inner.d_out != outer.d_in:
        raise DimensionMismatchError(f"cannot compose: inner outputs {inner.d_out}, outer takes {outer.d_in}")

    ops = np.einsum('jab,ibc->jiac', outer.kraus_ops, inner.kraus_ops)
    ops = ops.reshape(-1, outer.d_out, inner.d_in)
    return Channel.from_kraus(ops, label=f"{outer.label}∘{inner.label}")


def tensor(first: Channel, second: Channel) -> Channel:
    """first ⊗ second with Kraus set {K_i ⊗ K'_j}"""
    _require_kraus(first, second, operation="tensor")

    ops = np.einsum('iab,jcd->ijacbd', first.kraus_ops, second.kraus_ops)
    ops = ops.reshape(first.n_kraus * second.n_kraus, first.d_out * second.d_out, first.d_in * second.d_in)
    return Channel.from_kraus(ops, label=f"{first.label}⊗{second.label}")


def tensor_power(channel: Channel, copies: int) -> Channel:
    """N^{⊗k}"""
    if copies < 1:
        raise ChannelValidationError(f"number of copies must be positive, got {copies}")
    result = channel
    for _ in range(copies - 1):
        result = tensor(result, channel)
    return Channel.from_kraus(result.kraus_ops, label=f"{channel.label}^⊗{copies}")
