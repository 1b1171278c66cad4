"""
Elementwise activation functions and their derivatives.

Both the network forward pass and the structural-equation evaluator call
these same functions, so a compiled graph reproduces a network bit for bit.
"""
import numpy as np
import scipy.special as spec
from typing import Callable, Dict, Union
from .errors import ValidationError

Number = Union[float, np.ndarray]


def identity(x: Number) -> Number:
    return x


def relu(x: Number) -> Number:
    """
    >>> float(relu(-2.0)), float(relu(3.0))
    (0.0, 3.0)
    """
    return np.maximum(x, 0.0)


def logistic(x: Number) -> Number:
    """
    >>> float(logistic(0.0))
    0.5
    """
    return spec.expit(x)


def tanh(x: Number) -> Number:
    return np.tanh(x)


def d_identity(pre: Number, post: Number) -> Number:
    return np.ones_like(pre, dtype=float)


def d_relu(pre: Number, post: Number) -> Number:
    # subgradient at 0 is 0
    return np.where(np.asarray(pre) > 0.0, 1.0, 0.0)


def d_logistic(pre: Number, post: Number) -> Number:
    return post*(1.0 - post)


def d_tanh(pre: Number, post: Number) -> Number:
    return 1.0 - post*post


def log_softmax(logits: np.ndarray) -> np.ndarray:
    return spec.log_softmax(logits, axis=-1)


def softmax(logits: np.ndarray) -> np.ndarray:
    return spec.softmax(logits, axis=-1)


ACTIVATIONS: Dict[str, Callable[[Number], Number]] = {
    "identity": identity,
    "relu": relu,
    "logistic": logistic,
    "tanh": tanh,
}

DERIVATIVES: Dict[str, Callable[[Number, Number], Number]] = {
    "identity": d_identity,
    "relu": d_relu,
    "logistic": d_logistic,
    "tanh": d_tanh,
}


def get_activation(name: str) -> Callable[[Number], Number]:
    """
    Look up an activation by name.

    Parameters:
    name: one of identity, relu, logistic, tanh.

    Returns:
    The elementwise function.
    """
    try:
        return ACTIVATIONS[name]
    except KeyError:
        raise ValidationError("unknown activation '%s'" % name) from None
