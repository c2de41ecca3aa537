"""
Random Channel Generator
Seeded Haar sampling of pure states and bases, random entanglement-breaking and cq channels
"""

import numpy as np

from holevo_rgd.quantum.channel import Channel, cq_channel, entanglement_breaking
from holevo_rgd.quantum.numerics import ket_bra


def haar_states(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    """n Haar random unit vectors in C^d (normalized complex Gaussians), shape (n, d)"""
    z = rng.standard_normal((n, d)) + 1j * rng.standard_normal((n, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def haar_basis(rng: np.random.Generator, d: int) -> np.ndarray:
    """Haar random orthonormal basis; row i is the i-th basis vector"""
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(z)
    # fix the phase ambiguity of QR so the distribution is exactly Haar
    phases = np.diagonal(r) / np.abs(np.diagonal(r))
    return (q * phases).T


class ChannelGenerator:
    """
    Generates random channels for benchmarking:
    - entanglement-breaking channels K_i = |w_i⟩⟨v_i|
    - cq channels with pure output states
    """

    def __init__(self, seed: int = 0):
        """
        Initialize generator with a seed

        Args:
            seed: Seed of the PCG64 generator; equal seeds give identical channels
        """
        self.seed = seed
        self.rng = np.random.default_rng(seed)

    def entanglement_breaking(self, d: int) -> Channel:
        ws = haar_states(self.rng, d, d)
        vs = haar_basis(self.rng, d)
        return entanglement_breaking(ws, vs)

    def cq(self, n_letters: int, d_out: int) -> Channel:
        """cq channel whose outputs are Haar random pure states"""
        states = ket_bra(haar_states(self.rng, n_letters, d_out))
        return cq_channel(list(states))
