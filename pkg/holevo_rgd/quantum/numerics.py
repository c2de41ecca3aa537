"""
Dense Hermitian Linear Algebra
Eigendecomposition, matrix logarithm, von Neumann entropy and quantum relative entropy (in bits)
"""

import logging
from dataclasses import dataclass
from typing import Union

import numpy as np

from holevo_rgd.errors import (
    DimensionMismatchError,
    EigensolverError,
    InvalidStateError,
    NotPositiveSemidefiniteError,
    SupportViolationError,
)

logger = logging.getLogger(__name__)

# Dense complex128 arrays carry every matrix; the aliases document intent only
ComplexMatrix = np.ndarray
HermitianMatrix = np.ndarray

PSD_TOL = 1e-10            # negative eigenvalues above -PSD_TOL are round-off and get clamped
ZERO_EIGENVALUE = 1e-15    # 0 log 0 = 0 threshold for entropies
LOG_FLOOR = 1e-300         # default floor inside log_psd
TRACE_TOL = 1e-6
SUPPORT_TOL = 1e-14
RECONSTRUCTION_TOL = 1e-10


@dataclass(frozen=True)
class EigenDecomposition:
    """Spectrum of a Hermitian matrix: ascending eigenvalues and eigenvector columns"""
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        """V · diag(λ) · V†"""
        v = self.eigenvectors
        return (v * self.eigenvalues[..., None, :]) @ dagger(v)


def dagger(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose over the last two axes"""
    return np.conj(np.swapaxes(a, -1, -2))


def hermitian(a) -> HermitianMatrix:
    """
    Symmetrize a square matrix (or a stack of them) as (A + A†)/2

    Args:
        a: Array-like of shape (..., d, d)

    Returns:
        complex128 Hermitian array of the same shape
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise DimensionMismatchError(f"expected square matrix, got shape {a.shape}")
    return 0.5 * (a + dagger(a))


def ket_bra(psi: np.ndarray) -> HermitianMatrix:
    """|ψ⟩⟨ψ| for a vector or a stack of vectors (..., d)"""
    psi = np.asarray(psi, dtype=complex)
    return psi[..., :, None] * np.conj(psi[..., None, :])


def herm_eig(h) -> EigenDecomposition:
    """
    Eigendecomposition of a Hermitian matrix or a stack of them

    LAPACK's divide-and-conquer solver is tried first; on non-convergence the
    problem is re-solved through the real symmetric 2d x 2d embedding.

    Args:
        h: Hermitian array of shape (..., d, d)

    Returns:
        EigenDecomposition with ascending real eigenvalues
    """
    h = hermitian(h)
    try:
        w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError:
        logger.warning("eigh did not converge on a %s matrix, retrying via real embedding", h.shape)
        if h.ndim == 2:
            w, v = _embedded_eigh(h)
        else:
            flat = h.reshape(-1, h.shape[-2], h.shape[-1])
            pairs = [_embedded_eigh(block) for block in flat]
            w = np.stack([p[0] for p in pairs]).reshape(h.shape[:-1])
            v = np.stack([p[1] for p in pairs]).reshape(h.shape)
    return EigenDecomposition(eigenvalues=w, eigenvectors=v)


def _embedded_eigh(h: np.ndarray):
    d = h.shape[-1]
    # [[Re, -Im], [Im, Re]] carries each eigenvalue of h twice
    big = np.block([[h.real, -h.imag], [h.imag, h.real]])
    try:
        w2, v2 = np.linalg.eigh(big)
    except np.linalg.LinAlgError:
        off_diagonal = h - np.diag(np.diag(h))
        raise EigensolverError(
            "Hermitian eigensolver did not converge",
            residual_norm=float(np.linalg.norm(off_diagonal)),
        )

    z = v2[:d, ::2] + 1j * v2[d:, ::2]
    q, _ = np.linalg.qr(z)
    w = np.real(np.einsum('ji,jk,ki->i', q.conj(), h, q))
    order = np.argsort(w)
    w, q = w[order], q[:, order]

    residual = float(np.linalg.norm((q * w) @ q.conj().T - h))
    if residual > RECONSTRUCTION_TOL * d * max(float(np.linalg.norm(h)), 1.0):
        raise EigensolverError("embedded eigensolver lost the eigenbasis", residual_norm=residual)
    return w, q


def log_psd(h, floor: float = LOG_FLOOR) -> HermitianMatrix:
    """
    Binary matrix logarithm of a positive semidefinite matrix

    Args:
        h: PSD Hermitian array (..., d, d)
        floor: Eigenvalues are raised to at least this value before the log

    Returns:
        V · diag(log2 max(λ, floor)) · V†
    """
    dec = herm_eig(h)
    min_eig = float(np.min(dec.eigenvalues))
    if min_eig < -PSD_TOL:
        raise NotPositiveSemidefiniteError(min_eig)
    logs = np.log2(np.maximum(dec.eigenvalues, floor))
    return hermitian(EigenDecomposition(logs, dec.eigenvectors).reconstruct())


def entropy_from_eigenvalues(eigenvalues: np.ndarray) -> Union[float, np.ndarray]:
    """-Σ λ log2 λ over the last axis, eigenvalues below ZERO_EIGENVALUE dropped"""
    w = np.asarray(eigenvalues, dtype=float)
    kept = w > ZERO_EIGENVALUE
    safe = np.where(kept, w, 1.0)
    return -np.sum(np.where(kept, w * np.log2(safe), 0.0), axis=-1)


def _check_trace(rho: np.ndarray, name: str = "ρ"):
    trace = np.real(np.trace(rho))
    if abs(trace - 1.0) > TRACE_TOL:
        raise InvalidStateError(f"{name} has trace {trace:.9f}, expected 1")


def von_neumann_entropy(rho) -> float:
    """
    H(ρ) = -tr ρ log2 ρ

    Args:
        rho: Density matrix

    Returns:
        Entropy in bits
    """
    rho = hermitian(rho)
    _check_trace(rho)
    entropy = float(entropy_from_eigenvalues(np.linalg.eigvalsh(rho)))
    return max(entropy, 0.0)


def relative_entropy(rho, sigma) -> float:
    """
    Quantum relative entropy D(ρ‖σ) = tr ρ(log2 ρ - log2 σ)

    Args:
        rho: Density matrix
        sigma: Density matrix, full rank on the support of rho

    Returns:
        Relative entropy in bits
    """
    rho = hermitian(rho)
    sigma = hermitian(sigma)
    if rho.shape != sigma.shape:
        raise DimensionMismatchError(f"ρ is {rho.shape}, σ is {sigma.shape}")
    _check_trace(rho, "ρ")
    _check_trace(sigma, "σ")
    if np.array_equal(rho, sigma):
        return 0.0

    neg_entropy = -float(entropy_from_eigenvalues(np.linalg.eigvalsh(rho)))

    dec = herm_eig(sigma)
    # weight of ρ on each eigenvector of σ
    weights = np.real(np.einsum('ij,ik,kj->j', dec.eigenvectors.conj(), rho, dec.eigenvectors))
    kernel = dec.eigenvalues < SUPPORT_TOL
    if np.any(weights[kernel] > SUPPORT_TOL * 100):
        raise SupportViolationError(
            "ρ has support where σ is singular; smooth the channel before taking logs"
        )
    log_sigma = np.log2(np.where(kernel, 1.0, dec.eigenvalues))
    cross = float(np.sum(np.where(kernel, 0.0, weights * log_sigma)))
    return max(neg_entropy - cross, 0.0)


def kron(a, b) -> ComplexMatrix:
    """Kronecker product A ⊗ B"""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def binary_entropy(x) -> Union[float, np.ndarray]:
    """h2(x) = -x log2 x - (1-x) log2(1-x)"""
    x = np.asarray(x, dtype=float)
    result = entropy_from_eigenvalues(np.stack([x, 1.0 - x], axis=-1))
    return float(result) if np.ndim(result) == 0 else result


def is_density_matrix(rho, tol: float = 1e-9) -> bool:
    """Hermitian, unit trace and PSD, all within tol"""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        return False
    if np.linalg.norm(rho - dagger(rho)) > tol:
        return False
    if abs(np.real(np.trace(rho)) - 1.0) > tol:
        return False
    return float(np.min(np.linalg.eigvalsh(hermitian(rho)))) >= -tol
