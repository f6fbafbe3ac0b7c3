"""Cross-entropy from raw logits, prediction rule, and accuracy.

The loss is computed directly from logits with the max-shifted
log-sum-exp, so arbitrarily large scores neither overflow nor change the
result; its gradient is (softmax - onehot) / batch.
"""

import numpy as np

from .tensor import Tensor, ShapeError


def cross_entropy(logits, labels):
    """Mean over the batch of ``-z_y + logsumexp(z)``.

    ``logits`` is a (B, C) tensor, ``labels`` an integer vector in
    [0, C).  Differentiable with respect to the logits.
    """
    if logits.ndim != 2:
        raise ShapeError(f"cross_entropy expects (B, C) logits, got {tuple(logits.shape)}")
    z = logits.data
    b, c = z.shape
    y = np.asarray(labels)
    if y.shape != (b,):
        raise ShapeError(f"labels must have shape ({b},), got {tuple(y.shape)}")
    if y.size and (y.min() < 0 or y.max() >= c):
        bad = y[(y < 0) | (y >= c)][0]
        raise IndexError(f"label {bad} out of range for {c} classes")

    m = z.max(axis=1, keepdims=True)
    ez = np.exp(z - m)
    se = ez.sum(axis=1, keepdims=True)
    lse = m[:, 0] + np.log(se[:, 0])
    per_sample = lse - z[np.arange(b), y]
    loss = np.asarray(per_sample.mean(), dtype=z.dtype)

    def backward(g):
        grad = ez / se
        grad[np.arange(b), y] -= 1.0
        grad *= g / b
        return (grad.astype(z.dtype, copy=False),)

    return logits._node(loss, (logits,), backward)


def predict(logits):
    """Per-row argmax of the logits; ties resolve to the lowest index."""
    data = logits.data if isinstance(logits, Tensor) else np.asarray(logits)
    return data.argmax(axis=1)


def accuracy(pred, truth):
    """Fraction of matching labels, in [0, 1]."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise ShapeError(f"accuracy needs equal-length batches, got {pred.shape} and {truth.shape}")
    if pred.size == 0:
        raise ValueError("accuracy of an empty batch is undefined")
    return float((pred == truth).mean())
