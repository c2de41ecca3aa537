import numpy as np
import pytest

from holevo_rgd.data.generators import ChannelGenerator, haar_states
from holevo_rgd.optim.solver import SolverConfig
from holevo_rgd.quantum.channel import (
    compose,
    depolarizing,
    identity_channel,
    pauli,
    qutrit_wd,
)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def make_density(rng):
    """Random density matrix factory; full rank unless a rank is given"""
    def factory(d, rank=None):
        rank = d if rank is None else rank
        z = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
        rho = z @ z.conj().T
        return rho / np.trace(rho).real
    return factory


@pytest.fixture
def make_hermitian(rng):
    def factory(d):
        z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        return 0.5 * (z + z.conj().T)
    return factory


@pytest.fixture
def unit_vectors(rng):
    return lambda n, d: haar_states(rng, n, d)


def standard_channels():
    generator = ChannelGenerator(seed=7)
    return {
        'identity': identity_channel(2),
        'depolarizing_2': depolarizing(2, 1 / 3),
        'depolarizing_3': depolarizing(3, 0.4),
        'pauli': pauli(1 / 7, 1 / 10, 1 / 4),
        'qutrit_wd': qutrit_wd(0.5),
        'composed': compose(depolarizing(3, 0.2), qutrit_wd(0.5)),
        'eb': generator.entanglement_breaking(2),
        'cq': generator.cq(4, 3),
    }


@pytest.fixture(params=sorted(standard_channels()))
def any_channel(request):
    return standard_channels()[request.param]


@pytest.fixture
def fast_config():
    return SolverConfig(restarts=2, seed=0, n_jobs=1)
