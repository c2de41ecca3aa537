import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from holevo_rgd.data.channel_specs import (
    CqSpec,
    DepolarizingSpec,
    build_channel,
    channel_to_spec,
    known_holevo_capacity,
    load_channel_spec,
    parse_channel_spec,
    split_solver_overrides,
    substitute,
)
from holevo_rgd.data.generators import ChannelGenerator
from holevo_rgd.errors import ChannelValidationError, DimensionOverflowError, SpecError
from holevo_rgd.quantum.channel import ChannelKind, apply, compose, depolarizing, qutrit_wd

IDENTITY_PAIRS = [[[1, 0], [0, 0]], [[0, 0], [1, 0]]]


def test_parse_depolarizing_with_lambda_alias():
    spec = parse_channel_spec({'kind': 'depolarizing', 'd': 2, 'lambda': 0.5})
    assert isinstance(spec, DepolarizingSpec)
    assert spec.lam == 0.5
    assert parse_channel_spec({'kind': 'depolarizing', 'd': 2, 'lam': 0.5}) == spec


@pytest.mark.parametrize("document", [
    {'kind': 'amplitude_damping', 'gamma': 0.1},
    {'kind': 'depolarizing', 'd': 2, 'lambda': 0.5, 'extra': 1},
    {'kind': 'depolarizing', 'd': 2},
    {'kind': 'depolarizing', 'd': 'two', 'lambda': 0.5},
    {'kind': 'identity', 'd': 0},
    {'d': 2},
    [1, 2, 3],
])
def test_parse_rejects_malformed_documents(document):
    with pytest.raises(SpecError):
        parse_channel_spec(document)


def test_build_named_channels(make_density):
    rho = make_density(2)
    built = build_channel({'kind': 'depolarizing', 'd': 2, 'lambda': 1 / 3})
    assert_allclose(apply(built, rho), apply(depolarizing(2, 1 / 3), rho), atol=1e-12)

    assert build_channel({'kind': 'pauli', 'p_x': 0.1, 'p_y': 0.2, 'p_z': 0.3}).n_kraus == 4
    assert build_channel({'kind': 'qutrit_wd', 'alpha': 0.5}).d_in == 3
    assert build_channel({'kind': 'identity', 'd': 5}).d_out == 5


def test_build_explicit_kraus(make_density):
    channel = build_channel({'kind': 'kraus', 'd_in': 2, 'd_out': 2, 'kraus': [IDENTITY_PAIRS], 'label': 'id'})
    rho = make_density(2)
    assert channel.label == 'id'
    assert_allclose(apply(channel, rho), rho, atol=1e-12)


def test_build_imaginary_entries():
    # Pauli Y carries imaginary entries
    y = [[[0, 0], [0, -1]], [[0, 1], [0, 0]]]
    channel = build_channel({'kind': 'kraus', 'd_in': 2, 'd_out': 2, 'kraus': [y]})
    assert_allclose(channel.kraus_ops[0], np.array([[0, -1j], [1j, 0]]))


def test_build_cq():
    states = [
        [[[1, 0], [0, 0]], [[0, 0], [0, 0]]],
        [[[0.5, 0], [0.5, 0]], [[0.5, 0], [0.5, 0]]],
    ]
    spec = parse_channel_spec({'kind': 'cq', 'states': states, 'label': 'two-letter'})
    assert isinstance(spec, CqSpec)
    channel = build_channel(spec)
    assert channel.kind is ChannelKind.CQ
    assert channel.d_in == 2
    assert channel.label == 'two-letter'


def test_build_nested_compose(make_density):
    channel = build_channel({
        'kind': 'compose',
        'outer': {'kind': 'depolarizing', 'd': 3, 'lambda': 0.2},
        'inner': {'kind': 'qutrit_wd', 'alpha': 0.5},
    })
    expected = compose(depolarizing(3, 0.2), qutrit_wd(0.5))
    rho = make_density(3)
    assert channel.n_kraus == expected.n_kraus
    assert_allclose(apply(channel, rho), apply(expected, rho), atol=1e-12)


def test_build_tensor_and_tensor_power():
    pair = build_channel({
        'kind': 'tensor',
        'first': {'kind': 'identity', 'd': 2},
        'second': {'kind': 'depolarizing', 'd': 3, 'lambda': 0.1},
    })
    assert pair.d_in == 6
    cube = build_channel({'kind': 'tensor_power', 'channel': {'kind': 'identity', 'd': 2}, 'copies': 3})
    assert cube.d_in == 8


def test_tensor_power_overflow():
    with pytest.raises(DimensionOverflowError):
        build_channel({'kind': 'tensor_power', 'channel': {'kind': 'identity', 'd': 2}, 'copies': 7})
    with pytest.raises(DimensionOverflowError):
        build_channel({
            'kind': 'tensor',
            'first': {'kind': 'identity', 'd': 8},
            'second': {'kind': 'identity', 'd': 9},
        })


def test_dimension_caps():
    with pytest.raises(DimensionOverflowError):
        build_channel({'kind': 'identity', 'd': 5}, max_kraus_dim=4)
    cq = channel_to_spec(ChannelGenerator(seed=0).cq(5, 2))
    with pytest.raises(DimensionOverflowError):
        build_channel(cq, max_cq_letters=4)
    assert build_channel(cq, max_cq_letters=5).d_in == 5


def test_invalid_channels_are_not_spec_errors():
    with pytest.raises(ChannelValidationError):
        build_channel({'kind': 'kraus', 'd_in': 2, 'd_out': 2, 'kraus': [IDENTITY_PAIRS, IDENTITY_PAIRS]})
    with pytest.raises(ChannelValidationError):
        build_channel({'kind': 'depolarizing', 'd': 2, 'lambda': 1.5})


def test_kraus_shape_errors():
    with pytest.raises(SpecError):
        build_channel({'kind': 'kraus', 'd_in': 3, 'd_out': 2, 'kraus': [IDENTITY_PAIRS]})
    ragged = [[[[1, 0], [0, 0]], [[0, 0]]]]
    with pytest.raises(SpecError):
        build_channel({'kind': 'kraus', 'd_in': 2, 'd_out': 2, 'kraus': ragged})


def test_channel_to_spec_round_trip():
    generator = ChannelGenerator(seed=2)
    eb = generator.entanglement_breaking(3)
    restored = build_channel(json.loads(json.dumps(channel_to_spec(eb))))
    assert np.array_equal(restored.kraus_ops, eb.kraus_ops)
    assert restored.label == eb.label

    cq = generator.cq(4, 3)
    restored = build_channel(json.loads(json.dumps(channel_to_spec(cq))))
    assert restored.kind is ChannelKind.CQ
    assert np.array_equal(restored.output_states, cq.output_states)


def test_substitute():
    template = {'kind': 'depolarizing', 'd': 2, 'lambda': '$lambda'}
    filled = substitute(template, 'lambda', 0.25)
    assert filled['lambda'] == 0.25
    assert template['lambda'] == '$lambda'

    nested = {'kind': 'compose', 'outer': {'kind': 'depolarizing', 'd': 3, 'lambda': '$lam'},
              'inner': {'kind': 'qutrit_wd', 'alpha': 0.5}}
    assert build_channel(substitute(nested, 'lam', 0.1)).d_in == 3


def test_substitute_requires_placeholder():
    with pytest.raises(SpecError):
        substitute({'kind': 'depolarizing', 'd': 2, 'lambda': 0.3}, 'lambda', 0.5)


def test_split_solver_overrides():
    document, overrides = split_solver_overrides(
        {'kind': 'identity', 'd': 2, 'solver': {'restarts': 2, 'seed': 9}}
    )
    assert document == {'kind': 'identity', 'd': 2}
    assert overrides == {'restarts': 2, 'seed': 9}
    assert split_solver_overrides({'kind': 'identity', 'd': 2})[1] == {}
    with pytest.raises(SpecError):
        split_solver_overrides({'kind': 'identity', 'd': 2, 'solver': [1]})


def test_load_channel_spec(tmp_path):
    path = tmp_path / 'channel.json'
    path.write_text(json.dumps({'kind': 'pauli', 'p_x': 0.1, 'p_y': 0.1, 'p_z': 0.1,
                                'solver': {'grad_tol': 1e-8}}))
    document, overrides = load_channel_spec(path)
    assert document['kind'] == 'pauli'
    assert overrides == {'grad_tol': 1e-8}
    assert build_channel(document).n_kraus == 4


def test_load_channel_spec_rejects_garbage(tmp_path):
    path = tmp_path / 'garbage.json'
    path.write_text('{not json')
    with pytest.raises(json.JSONDecodeError):
        load_channel_spec(path)


def test_known_holevo_capacity():
    assert known_holevo_capacity({'kind': 'depolarizing', 'd': 2, 'lambda': 1 / 3}) == pytest.approx(0.349978, abs=1e-6)
    assert known_holevo_capacity({'kind': 'qutrit_wd', 'alpha': 0.5}) == 1.0
    assert known_holevo_capacity({'kind': 'identity', 'd': 4}) == pytest.approx(2.0)
    assert known_holevo_capacity(parse_channel_spec({'kind': 'identity', 'd': 2})) == pytest.approx(1.0)
    assert known_holevo_capacity({'kind': 'pauli', 'p_x': 0.1, 'p_y': 0.1, 'p_z': 0.1}) is None
