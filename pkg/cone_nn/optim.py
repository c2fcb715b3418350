"""Adam and plain SGD over lists of parameter matrices."""
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DimensionError, TrainingDivergedError, ValidationError
from .tensor import Matrix

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AdamState:
    """
    Adam hyperparameters and moment estimates.

    Parameters
    ----------
    lr: float
        learning rate
    beta1: float
        decay of the first moment
    beta2: float
        decay of the second moment
    epsilon: float
        added to the denominator
    step: int
        number of updates already applied
    m: tuple of numpy.ndarray
        first moments, shaped like the parameters (empty before the first step)
    v: tuple of numpy.ndarray
        second moments, shaped like the parameters (empty before the first step)
    """
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    m: tuple = field(default=(), repr=False)
    v: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if not self.lr > 0:
            raise ValidationError(f"Learning rate must be positive, got {self.lr}")
        for name in ('beta1', 'beta2'):
            if not 0.0 < getattr(self, name) < 1.0:
                raise ValidationError(f"{name} must lie in (0, 1), got {getattr(self, name)}")
        if not self.epsilon > 0:
            raise ValidationError(f"epsilon must be positive, got {self.epsilon}")


def _check(params, grads):
    params, grads = list(params), list(grads)
    if len(params) != len(grads):
        raise DimensionError(f"{len(params)} parameters but {len(grads)} gradients")
    for index, (p, g) in enumerate(zip(params, grads)):
        if p.shape != g.shape:
            raise DimensionError(f"Gradient {index} of shape {g.shape} for a parameter of shape {p.shape}",
                                 shapes=[p.shape, g.shape])
        if not g.is_finite():
            # parameters come in (weights, bias) pairs, one pair per layer
            raise TrainingDivergedError(f"Non-finite gradient for layer {index // 2}", layer=index // 2)
    return params, grads


def adam_step(state, params, grads):
    """
    One Adam update with bias correction

    Parameters
    ----------
    state: AdamState
        optimizer state before the update
    params: list of Matrix
        parameters
    grads: list of Matrix
        gradients, shaped like `params`

    Returns
    -------
    (list of Matrix, AdamState)
        updated parameters and state, the inputs are left untouched
    """
    params, grads = _check(params, grads)
    m = state.m or tuple(np.zeros(p.shape) for p in params)
    v = state.v or tuple(np.zeros(p.shape) for p in params)
    if len(m) != len(params) or any(mi.shape != p.shape for mi, p in zip(m, params)):
        raise DimensionError("Optimizer state does not match the parameters")
    t = state.step + 1
    correction1 = 1.0 - state.beta1 ** t
    correction2 = 1.0 - state.beta2 ** t
    new_params, new_m, new_v = [], [], []
    for p, g, mi, vi in zip(params, grads, m, v):
        g = g.values
        mi = state.beta1 * mi + (1.0 - state.beta1) * g
        vi = state.beta2 * vi + (1.0 - state.beta2) * (g * g)
        m_hat = mi / correction1
        v_hat = vi / correction2
        new_params.append(Matrix(p.values - state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon)))
        new_m.append(mi)
        new_v.append(vi)
    return new_params, replace(state, step=t, m=tuple(new_m), v=tuple(new_v))


def sgd_step(params, grads, lr):
    """
    Plain gradient descent ``p <- p - lr * g``

    Returns
    -------
    list of Matrix
    """
    params, grads = _check(params, grads)
    return [p - lr * g for p, g in zip(params, grads)]
