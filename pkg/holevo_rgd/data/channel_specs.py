"""
Channel Specification Schema
JSON channel descriptions, validation, template substitution and conversion to Channel objects
"""

import copy
import json
from pathlib import Path
from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError

from holevo_rgd import config
from holevo_rgd.errors import DimensionOverflowError, SpecError
from holevo_rgd.optim.holevo import depolarizing_holevo_capacity
from holevo_rgd.quantum.channel import (
    Channel,
    ChannelKind,
    compose,
    cq_channel,
    depolarizing,
    entanglement_breaking,
    identity_channel,
    pauli,
    qutrit_wd,
    tensor,
    tensor_power,
)

SOLVER_KEY = "solver"

# complex numbers travel as [re, im] pairs
ComplexPair = Tuple[float, float]
ComplexVector = List[ComplexPair]
ComplexMatrixRows = List[ComplexVector]


class _Spec(BaseModel):
    model_config = ConfigDict(extra='forbid', populate_by_name=True)


class KrausSpec(_Spec):
    kind: Literal["kraus"]
    d_in: int = Field(ge=1)
    d_out: int = Field(ge=1)
    kraus: List[ComplexMatrixRows] = Field(min_length=1)
    label: Optional[str] = None


class CqSpec(_Spec):
    kind: Literal["cq"]
    states: List[ComplexMatrixRows] = Field(min_length=1)
    label: Optional[str] = None


class DepolarizingSpec(_Spec):
    kind: Literal["depolarizing"]
    d: int = Field(ge=1)
    lam: float = Field(alias="lambda")


class PauliSpec(_Spec):
    kind: Literal["pauli"]
    p_x: float
    p_y: float
    p_z: float


class QutritWdSpec(_Spec):
    kind: Literal["qutrit_wd"]
    alpha: float


class EntanglementBreakingSpec(_Spec):
    kind: Literal["eb"]
    ws: List[ComplexVector] = Field(min_length=1)
    vs: List[ComplexVector] = Field(min_length=1)


class IdentitySpec(_Spec):
    kind: Literal["identity"]
    d: int = Field(ge=1)


class ComposeSpec(_Spec):
    kind: Literal["compose"]
    outer: "ChannelSpec"
    inner: "ChannelSpec"


class TensorSpec(_Spec):
    kind: Literal["tensor"]
    first: "ChannelSpec"
    second: "ChannelSpec"


class TensorPowerSpec(_Spec):
    kind: Literal["tensor_power"]
    channel: "ChannelSpec"
    copies: int = Field(ge=1)


ChannelSpec = Annotated[
    Union[
        KrausSpec,
        CqSpec,
        DepolarizingSpec,
        PauliSpec,
        QutritWdSpec,
        EntanglementBreakingSpec,
        IdentitySpec,
        ComposeSpec,
        TensorSpec,
        TensorPowerSpec,
    ],
    Field(discriminator="kind"),
]

for _model in (ComposeSpec, TensorSpec, TensorPowerSpec):
    _model.model_rebuild()

_ADAPTER = TypeAdapter(ChannelSpec)


def _decode(pairs) -> np.ndarray:
    try:
        arr = np.asarray(pairs, dtype=float)
    except ValueError as exc:
        raise SpecError(f"ragged complex array: {exc}") from exc
    if arr.shape[-1] != 2:
        raise SpecError(f"complex entries must be [re, im] pairs, got trailing shape {arr.shape[-1:]}")
    return arr[..., 0] + 1j * arr[..., 1]


def _encode(values: np.ndarray) -> list:
    values = np.asarray(values, dtype=complex)
    return np.stack([values.real, values.imag], axis=-1).tolist()


def parse_channel_spec(data: Dict[str, Any]):
    """
    Validate a decoded JSON document against the channel schema

    Raises:
        SpecError: unknown kind, unknown key, missing field or wrong type
    """
    if not isinstance(data, dict):
        raise SpecError(f"channel spec must be a JSON object, got {type(data).__name__}")
    try:
        return _ADAPTER.validate_python(data)
    except ValidationError as exc:
        raise SpecError(f"invalid channel spec: {exc}") from exc


def _check_dims(channel: Channel, caps: Dict[str, int]) -> Channel:
    if channel.kind is ChannelKind.CQ:
        if channel.d_in > caps['cq']:
            raise DimensionOverflowError(f"cq alphabet size {channel.d_in} exceeds cap {caps['cq']}")
    elif channel.d_in > caps['kraus']:
        raise DimensionOverflowError(f"input dimension {channel.d_in} exceeds cap {caps['kraus']}")
    return channel


def build_channel(spec, max_kraus_dim: Optional[int] = None,
                  max_cq_letters: Optional[int] = None) -> Channel:
    """
    Turn a validated spec (or a raw dict) into a Channel

    Args:
        spec: ChannelSpec model or decoded JSON object
        max_kraus_dim: Cap on d_in for kraus channels (config.MAX_KRAUS_DIM by default)
        max_cq_letters: Cap on |X| for cq channels (config.MAX_CQ_LETTERS by default)

    Returns:
        Validated Channel

    Raises:
        SpecError: malformed spec
        ChannelValidationError: the described map is not a channel
        DimensionOverflowError: a dimension cap is exceeded
    """
    if isinstance(spec, dict):
        spec = parse_channel_spec(spec)
    caps = {
        'kraus': config.MAX_KRAUS_DIM if max_kraus_dim is None else max_kraus_dim,
        'cq': config.MAX_CQ_LETTERS if max_cq_letters is None else max_cq_letters,
    }
    return _build(spec, caps)


def _build(spec, caps: Dict[str, int]) -> Channel:
    if isinstance(spec, KrausSpec):
        ops = _decode(spec.kraus)
        if ops.ndim != 3 or ops.shape[1:] != (spec.d_out, spec.d_in):
            raise SpecError(f"Kraus operators must be {spec.d_out}x{spec.d_in}, got shape {ops.shape}")
        channel = Channel.from_kraus(ops, label=spec.label or "kraus")
    elif isinstance(spec, CqSpec):
        states = _decode(spec.states)
        if states.ndim != 3:
            raise SpecError(f"cq states must be square matrices, got shape {states.shape}")
        channel = cq_channel(list(states))
        if spec.label:
            channel = Channel.from_states(channel.output_states, label=spec.label)
    elif isinstance(spec, DepolarizingSpec):
        channel = depolarizing(spec.d, spec.lam)
    elif isinstance(spec, PauliSpec):
        channel = pauli(spec.p_x, spec.p_y, spec.p_z)
    elif isinstance(spec, QutritWdSpec):
        channel = qutrit_wd(spec.alpha)
    elif isinstance(spec, EntanglementBreakingSpec):
        channel = entanglement_breaking(_decode(spec.ws), _decode(spec.vs))
    elif isinstance(spec, IdentitySpec):
        channel = identity_channel(spec.d)
    elif isinstance(spec, ComposeSpec):
        channel = compose(_build(spec.outer, caps), _build(spec.inner, caps))
    elif isinstance(spec, TensorSpec):
        first, second = _build(spec.first, caps), _build(spec.second, caps)
        if first.kind is ChannelKind.KRAUS and second.kind is ChannelKind.KRAUS \
                and first.d_in * second.d_in > caps['kraus']:
            raise DimensionOverflowError(
                f"product input dimension {first.d_in * second.d_in} exceeds cap {caps['kraus']}"
            )
        channel = tensor(first, second)
    elif isinstance(spec, TensorPowerSpec):
        base = _build(spec.channel, caps)
        if base.kind is ChannelKind.KRAUS and base.d_in ** spec.copies > caps['kraus']:
            raise DimensionOverflowError(
                f"input dimension {base.d_in}^{spec.copies} exceeds cap {caps['kraus']}"
            )
        channel = tensor_power(base, spec.copies)
    else:
        raise SpecError(f"unsupported channel spec {type(spec).__name__}")
    return _check_dims(channel, caps)


def split_solver_overrides(data: Dict[str, Any]) -> Tuple[Dict[str, Any], Dict[str, Any]]:
    """Separate the optional top-level "solver" block from the channel description"""
    if not isinstance(data, dict):
        raise SpecError(f"channel spec must be a JSON object, got {type(data).__name__}")
    data = dict(data)
    overrides = data.pop(SOLVER_KEY, None) or {}
    if not isinstance(overrides, dict):
        raise SpecError('"solver" must be a JSON object')
    return data, overrides


def load_channel_spec(path) -> Tuple[Dict[str, Any], Dict[str, Any]]:
    """
    Read a spec file

    Returns:
        (channel document, solver overrides); the channel document is not yet validated
    """
    with open(Path(path), encoding='utf-8') as f:
        data = json.load(f)
    return split_solver_overrides(data)


def substitute(template: Any, param: str, value: float) -> Any:
    """
    Replace every "$param" string in a template with value

    Raises:
        SpecError: the placeholder does not occur in the template
    """
    placeholder = f"${param}"
    found = []

    def walk(node):
        if isinstance(node, dict):
            return {k: walk(v) for k, v in node.items()}
        if isinstance(node, list):
            return [walk(v) for v in node]
        if node == placeholder:
            found.append(True)
            return value
        return node

    result = walk(copy.deepcopy(template))
    if not found:
        raise SpecError(f"template has no {placeholder} placeholder")
    return result


def channel_to_spec(channel: Channel) -> Dict[str, Any]:
    """Explicit kraus or cq document for a channel"""
    if channel.kind is ChannelKind.CQ:
        return {'kind': 'cq', 'states': _encode(channel.output_states), 'label': channel.label}
    return {
        'kind': 'kraus',
        'd_in': channel.d_in,
        'd_out': channel.d_out,
        'kraus': _encode(channel.kraus_ops),
        'label': channel.label,
    }


def known_holevo_capacity(spec) -> Optional[float]:
    """
    Closed-form χ for the spec kinds that have one, else None

    depolarizing: closed form; qutrit_wd: 1; identity: log2 d.
    """
    if isinstance(spec, dict):
        spec = parse_channel_spec(spec)
    if isinstance(spec, DepolarizingSpec):
        return depolarizing_holevo_capacity(spec.d, spec.lam)
    if isinstance(spec, QutritWdSpec):
        return 1.0
    if isinstance(spec, IdentitySpec):
        return float(np.log2(spec.d))
    return None
