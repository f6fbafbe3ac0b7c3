"""The four activation functions as differentiable graph ops.

Tangma is ``x * tanh(x + alpha) + gamma * x`` with trainable scalars:
``alpha`` shifts the inflection of the tanh response (the nonlinear
term's inflection sits at ``x = -alpha``) and ``gamma`` adds a linear
skip path that keeps gradients alive when the tanh saturates.  Both are
built compositionally from primitive tensor ops, so their parameter
gradients (summed over elements) fall out of the scalar-broadcast
backward rules; ``tangma_derivative`` provides the closed form
``tanh(x + alpha) + x * sech^2(x + alpha) + gamma`` as an independent
cross-check.
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .tensor import Tensor, parameter

_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)
_TWO_INV_SQRTPI = 2.0 / math.sqrt(math.pi)


class ActivationKind(Enum):
    """Pluggable nonlinearity tags; values are the config/CSV names."""

    RELU = "relu"
    SWISH = "swish"
    GELU = "gelu"
    TANGMA = "tangma"

    @classmethod
    def from_name(cls, name):
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).lower())
        except ValueError:
            valid = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown activation {name!r}; expected one of: {valid}") from None


@dataclass
class TangmaParams:
    """Trainable scalars of the Tangma activation.

    ``alpha`` (nonlinearity shift) and ``gamma`` (linear skip
    coefficient) are 1-element tensors; the gradient accumulator and
    trainable flag live on the tensors themselves.  Models initialize
    both to exactly 0.0 and hand them to the optimizer like any weight.
    """

    alpha: Tensor
    gamma: Tensor

    @classmethod
    def fresh(cls, dtype=np.float32, trainable=True):
        make = parameter if trainable else Tensor
        return cls(make(np.zeros(1, dtype=dtype)), make(np.zeros(1, dtype=dtype)))

    def values(self):
        return float(self.alpha.data.reshape(())), float(self.gamma.data.reshape(()))


def tangma(x, params):
    """x * tanh(x + alpha) + gamma * x, elementwise."""
    return x * (x + params.alpha).tanh() + params.gamma * x


def tangma_derivative(x, params):
    """Closed-form d/dx of tangma; sech^2 computed as (1-t)(1+t)."""
    alpha, gamma = params.values()
    data = x.data if isinstance(x, Tensor) else np.asarray(x)
    t = np.tanh(data + alpha)
    sech2 = (1.0 - t) * (1.0 + t)
    return Tensor(t + data * sech2 + gamma)


def relu(x):
    """max(0, x); the subgradient at exactly 0 is taken as 0."""
    return x.maximum(0.0)


def sigmoid(x):
    """Logistic function, overflow-safe on both tails."""
    s = _sigmoid_values(x.data)
    return x._node(s, (x,), lambda g: (g * (s * (1.0 - s)),))


def swish(x):
    """x * sigmoid(x); backward is sigma(x) + x * sigma(x)(1 - sigma(x))."""
    s = _sigmoid_values(x.data)
    xd = x.data

    def backward(g):
        return (g * (s + xd * (s * (1.0 - s))),)

    return x._node(xd * s, (x,), backward)


def erf(x):
    """Gauss error function as a graph op; see :func:`erf_values`."""
    e = erf_values(x.data)
    xd = x.data

    def backward(g):
        return (g * (_TWO_INV_SQRTPI * np.exp(-xd * xd)),)

    return x._node(e, (x,), backward)


def gelu(x):
    """x * Phi(x) in the exact error-function form.

    Backward is Phi(x) + x * phi(x) with phi the standard normal pdf.
    """
    xd = x.data
    cdf = 0.5 * (1.0 + erf_values(xd * _INV_SQRT2))

    def backward(g):
        pdf = _INV_SQRT2PI * np.exp(-0.5 * xd * xd)
        return (g * (cdf + xd * pdf),)

    return x._node(xd * cdf, (x,), backward)


def apply_activation(kind, x, params=None):
    """Dispatch on :class:`ActivationKind`; tangma requires ``params``."""
    kind = ActivationKind.from_name(kind)
    if kind is ActivationKind.RELU:
        return relu(x)
    if kind is ActivationKind.SWISH:
        return swish(x)
    if kind is ActivationKind.GELU:
        return gelu(x)
    if params is None:
        raise ValueError("tangma activation requires TangmaParams")
    return tangma(x, params)


def _sigmoid_values(x):
    # exp(-|x|) never overflows; assemble both tails from it
    z = np.exp(-np.abs(x))
    den = z + 1.0
    return np.where(x >= 0, 1.0 / den, z / den)


# Rational approximations of erf/erfc over three ranges (small arguments
# via an odd rational in x^2, the rest via erfc with the split-exponent
# trick).  Absolute error is far below the 1e-9 target in float64.
_ERF_A = (3.16112374387056560e0, 1.13864154151050156e2, 3.77485237685302021e2,
          3.20937758913846947e3, 1.85777706184603153e-1)
_ERF_B = (2.36012909523441209e1, 2.44024637934444173e2, 1.28261652607737228e3,
          2.84423683343917062e3)
_ERF_C = (5.64188496988670089e-1, 8.88314979438837594e0, 6.61191906371416295e1,
          2.98635138197400131e2, 8.81952221241769090e2, 1.71204761263407058e3,
          2.05107837782607147e3, 1.23033935479799725e3, 2.15311535474403846e-8)
_ERF_D = (1.57449261107098347e1, 1.17693950891312499e2, 5.37181101862009858e2,
          1.62138957456669019e3, 3.29079923573345963e3, 4.36261909014324716e3,
          3.43936767414372164e3, 1.23033935480374942e3)
_ERF_P = (3.05326634961232344e-1, 3.60344899949804439e-1, 1.25781726111229246e-1,
          1.60837851487422766e-2, 6.58749161529837803e-4, 1.63153871373020978e-2)
_ERF_Q = (2.56852019228982242e0, 1.87295284992346047e0, 5.27905102951428412e-1,
          6.05183413124413191e-2, 2.33520497626869185e-3)
_INV_SQRTPI = 5.6418958354775628695e-1


def _horner_ratio(t, coeffs_num, coeffs_den, last_num, last_den, lead):
    """In-place rational evaluation: (lead*t + c0)*t ... / (t + d0)*t ..."""
    num = lead * t
    den = t.copy()
    for c, d in zip(coeffs_num, coeffs_den):
        num += c
        num *= t
        den += d
        den *= t
    num += last_num
    den += last_den
    num /= den
    return num


def erf_values(x):
    """Vectorized erf on a plain array, preserving its float dtype.

    The two common range formulas run as full contiguous passes and are
    merged with ``where`` (cheaper than boolean gathers on large
    activations); the |x| > 4 asymptotic branch is evaluated only when
    such elements exist.
    """
    arr = np.asarray(x)
    if not np.issubdtype(arr.dtype, np.floating):
        arr = arr.astype(np.float64)
    y = np.minimum(np.abs(arr), 9.0)  # erf is exactly 1.0 in float64 beyond this

    # |x| <= 0.46875: odd rational in x^2
    z = y * y
    small_val = _horner_ratio(z, _ERF_A[:3], _ERF_B[:3], _ERF_A[3], _ERF_B[3], _ERF_A[4])
    small_val *= y

    expterm = np.exp(-z)

    # 0.46875 < |x| <= 4: erfc rational in y
    mid_val = _horner_ratio(y, _ERF_C[:7], _ERF_D[:7], _ERF_C[7], _ERF_D[7], _ERF_C[8])
    mid_val *= expterm
    np.subtract(1.0, mid_val, out=mid_val)

    res = np.where(y <= 0.46875, small_val, mid_val)

    big = y > 4.0
    if big.any():
        yb = y[big]
        zi = 1.0 / (yb * yb)
        ratio = _horner_ratio(zi, _ERF_P[:4], _ERF_Q[:4], _ERF_P[4], _ERF_Q[4], _ERF_P[5])
        ratio *= zi
        res[big] = 1.0 - np.exp(-yb * yb) * (_INV_SQRTPI - ratio) / yb

    return np.copysign(res, arr)
