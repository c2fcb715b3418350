"""Activation functions with their analytic first derivatives.

All functions accept a float or a numpy array and work entry by entry.
"""
import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ValidationError

logger = logging.getLogger(__name__)

SELU_LAMBDA = 1.0507009873554805
SELU_ALPHA = 1.6732632423543772
LEAKY_SLOPE = 0.01
GELU_SCALE = np.sqrt(2.0 / np.pi)
GELU_CUBIC = 0.044715
# zeros of every cone-like function: g(0) = g(DELTA) = 0
CONE_DELTA = 2.0


class Tag(enum.IntEnum):
    """Activation identifiers. The integer value is the tag byte of the model file format."""
    CONE = 0
    PARABOLIC_CONE = 1
    PARAMETERIZED_CONE = 2
    SIGMOID = 3
    TANH = 4
    LISHT = 5
    SOFTPLUS = 6
    RELU = 7
    LEAKY_RELU = 8
    GELU = 9
    SELU = 10
    MISH = 11
    SWISH = 12
    ELU = 13
    LINEAR = 14

    @property
    def cli_name(self):
        return self.name.lower().replace('_', '-')


CONE_TAGS = frozenset({Tag.CONE, Tag.PARABOLIC_CONE, Tag.PARAMETERIZED_CONE})
# the activations compared with each other; LINEAR only feeds the softmax head
COMPARED_TAGS = tuple(tag for tag in Tag if tag is not Tag.LINEAR)


@dataclass(frozen=True)
class ActivationKind:
    """
    An activation function and its shape parameters.

    Parameters
    ----------
    tag: Tag
        which function
    cone_beta: float
        exponent of the parameterized cone ``1 - |z - 1| ** beta``, ignored by the other tags
    """
    tag: Tag
    cone_beta: float = 1.0
    selu_lambda: float = field(default=SELU_LAMBDA, init=False, repr=False)
    selu_alpha: float = field(default=SELU_ALPHA, init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, 'tag', Tag(self.tag))
        if not (np.isfinite(self.cone_beta) and self.cone_beta > 0):
            raise ValidationError(f"cone_beta must be a positive real, got {self.cone_beta}")

    @property
    def name(self):
        """
        Command-line name of the kind, e.g. ``parabolic-cone`` or ``parameterized-cone:2``

        Returns
        -------
        str
            name accepted by `ActivationKind.parse`
        """
        if self.tag is Tag.PARAMETERIZED_CONE and self.cone_beta != 1.0:
            return f"{self.tag.cli_name}:{self.cone_beta:g}"
        return self.tag.cli_name

    @property
    def is_cone(self):
        return self.tag in CONE_TAGS

    @classmethod
    def parse(cls, text):
        """
        Parse a command-line name.

        Parameters
        ----------
        text: str
            kind name, case insensitive, ``_`` and ``-`` are interchangeable. The parameterized cone
            takes its exponent after a colon: ``parameterized-cone:3``.

        Returns
        -------
        ActivationKind
        """
        name, _, param = text.strip().lower().replace('_', '-').partition(':')
        by_name = {tag.cli_name: tag for tag in Tag}
        if name not in by_name:
            raise ValidationError(f"Unknown activation {text!r}, valid names are: {', '.join(valid_names())}")
        tag = by_name[name]
        if not param:
            return cls(tag)
        if tag is not Tag.PARAMETERIZED_CONE:
            raise ValidationError(f"Activation {name!r} takes no parameter")
        try:
            beta = float(param)
        except ValueError:
            raise ValidationError(f"Invalid exponent {param!r} for {name}") from None
        return cls(tag, cone_beta=beta)


def valid_names():
    return [tag.cli_name for tag in Tag]


def all_kinds(include_linear=False):
    """One kind per tag, the parameterized cone with its default exponent"""
    tags = tuple(Tag) if include_linear else COMPARED_TAGS
    return [ActivationKind(tag) for tag in tags]


def _checked(z):
    z = np.asarray(z, dtype=np.float64)
    if not np.isfinite(z).all():
        raise DomainError("Activation input must be finite")
    return z


def _out(z, value):
    return float(value) if np.ndim(z) == 0 else value


def _sigmoid(z):
    # tanh form never overflows
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _softplus(z):
    # logaddexp evaluates z + ln(1 + e^-z) for large z
    return np.logaddexp(0.0, z)


def forward(kind, z):
    """
    Evaluate an activation function

    Parameters
    ----------
    kind: ActivationKind
        the function
    z: float | numpy.ndarray
        pre-activations, must be finite

    Returns
    -------
    float | numpy.ndarray
        g(z), with the shape of `z`
    """
    z = _checked(z)
    tag = kind.tag
    if tag is Tag.CONE:
        g = 1.0 - np.abs(z - 1.0)
    elif tag is Tag.PARABOLIC_CONE:
        g = z * (2.0 - z)
    elif tag is Tag.PARAMETERIZED_CONE:
        g = 1.0 - np.abs(z - 1.0) ** kind.cone_beta
    elif tag is Tag.SIGMOID:
        g = _sigmoid(z)
    elif tag is Tag.TANH:
        g = np.tanh(z)
    elif tag is Tag.LISHT:
        g = z * np.tanh(z)
    elif tag is Tag.SOFTPLUS:
        g = _softplus(z)
    elif tag is Tag.RELU:
        g = np.maximum(z, 0.0)
    elif tag is Tag.LEAKY_RELU:
        g = np.where(z >= 0.0, z, LEAKY_SLOPE * z)
    elif tag is Tag.GELU:
        g = 0.5 * z * (1.0 + np.tanh(GELU_SCALE * z + GELU_CUBIC * z ** 3))
    elif tag is Tag.SELU:
        g = kind.selu_lambda * np.where(z >= 0.0, z, kind.selu_alpha * np.expm1(np.minimum(z, 0.0)))
    elif tag is Tag.MISH:
        g = z * np.tanh(_softplus(z))
    elif tag is Tag.SWISH:
        g = z * _sigmoid(z)
    elif tag is Tag.ELU:
        g = np.where(z >= 0.0, z, np.expm1(np.minimum(z, 0.0)))
    elif tag is Tag.LINEAR:
        g = z.copy()
    else:
        raise ValidationError(f"Unsupported activation {tag!r}")
    return _out(z, g)


def derivative(kind, z):
    """
    First derivative of an activation function.

    At the kinks the following subgradients are returned: Cone and Parameterized-Cone give 0 at
    z = 1 (their maximum), ReLU gives 0 and Leaky ReLU gives 0.01 at z = 0 (left values).

    Parameters
    ----------
    kind: ActivationKind
        the function
    z: float | numpy.ndarray
        pre-activations, must be finite

    Returns
    -------
    float | numpy.ndarray
        g'(z), with the shape of `z`
    """
    z = _checked(z)
    tag = kind.tag
    if tag is Tag.CONE:
        # np.sign is 0 at the peak
        d = -np.sign(z - 1.0)
    elif tag is Tag.PARABOLIC_CONE:
        d = 2.0 - 2.0 * z
    elif tag is Tag.PARAMETERIZED_CONE:
        u = np.abs(z - 1.0)
        at_peak = u == 0.0
        safe_u = np.where(at_peak, 1.0, u)
        d = np.where(at_peak, 0.0, -kind.cone_beta * safe_u ** (kind.cone_beta - 1.0) * np.sign(z - 1.0))
    elif tag is Tag.SIGMOID:
        s = _sigmoid(z)
        d = s * (1.0 - s)
    elif tag is Tag.TANH:
        d = 1.0 - np.tanh(z) ** 2
    elif tag is Tag.LISHT:
        t = np.tanh(z)
        d = t + z * (1.0 - t ** 2)
    elif tag is Tag.SOFTPLUS:
        d = _sigmoid(z)
    elif tag is Tag.RELU:
        d = np.where(z > 0.0, 1.0, 0.0)
    elif tag is Tag.LEAKY_RELU:
        d = np.where(z > 0.0, 1.0, LEAKY_SLOPE)
    elif tag is Tag.GELU:
        t = np.tanh(GELU_SCALE * z + GELU_CUBIC * z ** 3)
        d = 0.5 * (1.0 + t) + 0.5 * z * (1.0 - t ** 2) * (GELU_SCALE + 3.0 * GELU_CUBIC * z ** 2)
    elif tag is Tag.SELU:
        d = kind.selu_lambda * np.where(z >= 0.0, 1.0, kind.selu_alpha * np.exp(np.minimum(z, 0.0)))
    elif tag is Tag.MISH:
        t = np.tanh(_softplus(z))
        d = t + z * (1.0 - t ** 2) * _sigmoid(z)
    elif tag is Tag.SWISH:
        s = _sigmoid(z)
        d = s + z * s * (1.0 - s)
    elif tag is Tag.ELU:
        d = np.where(z >= 0.0, 1.0, np.exp(np.minimum(z, 0.0)))
    elif tag is Tag.LINEAR:
        d = np.ones_like(z)
    else:
        raise ValidationError(f"Unsupported activation {tag!r}")
    return _out(z, d)


def kinks(kind):
    """Points where `kind` is not differentiable"""
    if kind.tag is Tag.CONE:
        return (1.0,)
    if kind.tag is Tag.PARAMETERIZED_CONE and kind.cone_beta <= 1.0:
        return (1.0,)
    if kind.tag in (Tag.RELU, Tag.LEAKY_RELU):
        return (0.0,)
    if kind.tag is Tag.SELU:
        # the two SELU branches have different slopes at 0
        return (0.0,)
    return ()


def positive_interval(kind):
    """
    Interval of pre-activations with a strictly positive output, when it is bounded.

    Every cone-like function is zero exactly at 0 and 2 (``|z - 1| ** beta == 1`` iff ``|z - 1| == 1``),
    so their positive set is the open interval (0, 2).

    Parameters
    ----------
    kind: ActivationKind

    Returns
    -------
    (float, float) | None
        (lo, hi) for cone-like kinds, None when the positive set is a half-line or everything
    """
    if kind.is_cone:
        return 0.0, CONE_DELTA
    return None


def zeros(kind):
    """
    Pre-activation values where the output is exactly zero, at the edge of the positive set.

    Returns
    -------
    tuple of float
        empty for kinds that are never zero (Sigmoid, Softplus)
    """
    interval = positive_interval(kind)
    if interval is not None:
        return interval
    if kind.tag in (Tag.SIGMOID, Tag.SOFTPLUS):
        return ()
    return (0.0,)


def range_of(kind):
    """
    Range of the function as listed in the activation table

    Returns
    -------
    (float, float)
        closed bounds, infinite where the range is unbounded
    """
    inf = np.inf
    ranges = {
        Tag.CONE: (-inf, 1.0),
        Tag.PARABOLIC_CONE: (-inf, 1.0),
        Tag.PARAMETERIZED_CONE: (-inf, 1.0),
        Tag.SIGMOID: (0.0, 1.0),
        Tag.TANH: (-1.0, 1.0),
        Tag.LISHT: (-inf, inf),
        Tag.SOFTPLUS: (0.0, inf),
        Tag.RELU: (0.0, inf),
        Tag.LEAKY_RELU: (-inf, inf),
        Tag.GELU: (-0.5, inf),
        Tag.SELU: (-kind.selu_lambda * kind.selu_alpha, inf),
        Tag.MISH: (-0.31, inf),
        Tag.SWISH: (-0.5, inf),
        Tag.ELU: (-1.0, inf),
        Tag.LINEAR: (-inf, inf),
    }
    return ranges[kind.tag]
