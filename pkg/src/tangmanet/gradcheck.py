"""Finite-difference validation of every backward rule.

``grad_check`` compares one tensor's analytic gradient against central
differences; ``gradient_suite`` sweeps random instances of every
differentiable operation in the package and reports the worst relative
error per op.  Everything here runs in float64 so the finite-difference
step is meaningful.
"""

import numpy as np

from .tensor import Tensor, GraphError, parameter


def grad_check(f, x, h=1e-4):
    """Max relative error between analytic and central-difference grads.

    ``f`` maps a tensor to a scalar tensor and must be deterministic in
    its argument (it may close over fixed co-inputs).  The error is
    measured per element as ``|analytic - numeric| / max(1, |analytic|)``
    and the max over elements is returned.
    """
    base = x.data if isinstance(x, Tensor) else x
    xt = parameter(np.array(base, dtype=np.float64))

    out = f(xt)
    if out.data.size != 1:
        raise GraphError("grad_check requires a scalar-valued function")
    out.backward()
    analytic = xt.grad.copy()

    numeric = np.empty_like(xt.data)
    flat = xt.data.reshape(-1)
    num_flat = numeric.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = float(f(xt).data)
        flat[i] = orig - h
        fm = float(f(xt).data)
        flat[i] = orig
        num_flat[i] = (fp - fm) / (2.0 * h)

    rel = np.abs(analytic - numeric) / np.maximum(1.0, np.abs(analytic))
    return float(rel.max())


def _vec(rng, lo=-3.0, hi=3.0, n=8):
    return rng.uniform(lo, hi, size=n)


def _suite_cases():
    """(name, make_instance) pairs; make_instance(rng) -> (f, x0).

    Each instance freezes its co-inputs so that ``f`` is a pure function
    of the checked tensor.
    """
    from . import activations as act
    from . import layers
    from . import losses

    def case_add(rng):
        c = Tensor(_vec(rng))
        return lambda x: (x + c).sum(), _vec(rng)

    def case_mul(rng):
        c = Tensor(_vec(rng))
        return lambda x: (x * c).sum(), _vec(rng)

    def case_tanh(rng):
        return lambda x: x.tanh().sum(), _vec(rng)

    def case_exp(rng):
        return lambda x: x.exp().sum(), _vec(rng)

    def case_log(rng):
        return lambda x: x.log().sum(), _vec(rng, 0.5, 3.0)

    def case_sigmoid(rng):
        return lambda x: act.sigmoid(x).sum(), _vec(rng)

    def case_erf(rng):
        return lambda x: act.erf(x).sum(), _vec(rng)

    def case_matmul_a(rng):
        b = Tensor(rng.uniform(-2, 2, (3, 2)))
        return lambda x: x.matmul(b).sum(), rng.uniform(-2, 2, (2, 3))

    def case_matmul_b(rng):
        a = Tensor(rng.uniform(-2, 2, (2, 3)))
        return lambda x: a.matmul(x).sum(), rng.uniform(-2, 2, (3, 2))

    def case_add_rowvec(rng):
        v = Tensor(rng.uniform(-1, 1, 4))
        return lambda x: x.add_rowvec(v).sum(), rng.uniform(-2, 2, (3, 4))

    def case_reshape(rng):
        c = Tensor(rng.uniform(-1, 1, (4, 2)))
        return lambda x: (x.reshape(4, 2) * c).sum(), rng.uniform(-2, 2, (2, 4))

    def case_sum(rng):
        return lambda x: x.sum() * 0.5 + x.sum(), _vec(rng)

    def case_relu(rng):
        # sampled away from the kink where central differences are invalid
        v = _vec(rng)
        v = np.where(np.abs(v) < 0.1, v + 0.2, v)
        return lambda x: act.relu(x).sum(), v

    def case_swish(rng):
        return lambda x: act.swish(x).sum(), _vec(rng)

    def case_gelu(rng):
        return lambda x: act.gelu(x).sum(), _vec(rng)

    def case_tangma_x(rng):
        p = act.TangmaParams(Tensor(rng.uniform(-1, 1, 1)), Tensor(rng.uniform(-1, 1, 1)))
        return lambda x: act.tangma(x, p).sum(), _vec(rng)

    def case_tangma_alpha(rng):
        site = Tensor(_vec(rng))
        gamma = Tensor(rng.uniform(-1, 1, 1))
        return lambda a: act.tangma(site, act.TangmaParams(a, gamma)).sum(), rng.uniform(-1, 1, 1)

    def case_tangma_gamma(rng):
        site = Tensor(_vec(rng))
        alpha = Tensor(rng.uniform(-1, 1, 1))
        return lambda g: act.tangma(site, act.TangmaParams(alpha, g)).sum(), rng.uniform(-1, 1, 1)

    def case_conv_x(rng):
        stride, padding = ((1, 0), (1, 1), (2, 1))[int(rng.integers(3))]
        w = Tensor(rng.uniform(-1, 1, (2, 2, 3, 3)))
        b = Tensor(rng.uniform(-1, 1, 2))
        spec = layers.ConvSpec(2, 2, 3, stride, padding, w, b)
        return lambda x: layers.conv2d(x, spec).sum(), rng.uniform(-2, 2, (1, 2, 5, 5))

    def case_conv_w(rng):
        xin = Tensor(rng.uniform(-2, 2, (1, 2, 5, 5)))
        b = Tensor(rng.uniform(-1, 1, 2))

        def f(w):
            return layers.conv2d(xin, layers.ConvSpec(2, 2, 3, 1, 1, w, b)).sum()

        return f, rng.uniform(-1, 1, (2, 2, 3, 3))

    def case_conv_b(rng):
        xin = Tensor(rng.uniform(-2, 2, (1, 2, 5, 5)))
        w = Tensor(rng.uniform(-1, 1, (2, 2, 3, 3)))

        def f(b):
            return layers.conv2d(xin, layers.ConvSpec(2, 2, 3, 1, 0, w, b)).sum()

        return f, rng.uniform(-1, 1, 2)

    def case_maxpool(rng):
        # weight the pooled output so the incoming gradient is not all-ones
        w = Tensor(rng.uniform(-1, 1, (1, 2, 2, 2)))
        return lambda x: (layers.maxpool2d(x) * w).sum(), rng.uniform(-2, 2, (1, 2, 4, 4))

    def case_linear_x(rng):
        w = Tensor(rng.uniform(-1, 1, (3, 5)))
        b = Tensor(rng.uniform(-1, 1, 3))
        return lambda x: layers.linear(x, w, b).sum(), rng.uniform(-2, 2, (2, 5))

    def case_linear_w(rng):
        xin = Tensor(rng.uniform(-2, 2, (2, 5)))
        b = Tensor(rng.uniform(-1, 1, 3))
        return lambda w: layers.linear(xin, w, b).sum(), rng.uniform(-1, 1, (3, 5))

    def case_linear_b(rng):
        xin = Tensor(rng.uniform(-2, 2, (2, 5)))
        w = Tensor(rng.uniform(-1, 1, (3, 5)))
        return lambda b: layers.linear(xin, w, b).sum(), rng.uniform(-1, 1, 3)

    def case_dropout(rng):
        # fixed per-instance seed so every evaluation sees the same mask
        seed = int(rng.integers(2**31))
        spec = layers.DropoutSpec(0.3, "train")

        def f(x):
            return layers.dropout(x, spec, np.random.default_rng(seed)).sum()

        return f, _vec(rng)

    def case_flatten(rng):
        c = Tensor(rng.uniform(-1, 1, (2, 8)))
        return lambda x: (layers.flatten(x) * c).sum(), rng.uniform(-2, 2, (2, 2, 2, 2))

    def case_cross_entropy(rng):
        labels = rng.integers(0, 5, size=3)
        return lambda z: losses.cross_entropy(z, labels), rng.uniform(-3, 3, (3, 5))

    return [
        ("add", case_add),
        ("mul", case_mul),
        ("tanh", case_tanh),
        ("exp", case_exp),
        ("log", case_log),
        ("sigmoid", case_sigmoid),
        ("erf", case_erf),
        ("matmul_a", case_matmul_a),
        ("matmul_b", case_matmul_b),
        ("add_rowvec", case_add_rowvec),
        ("reshape", case_reshape),
        ("sum", case_sum),
        ("relu", case_relu),
        ("swish", case_swish),
        ("gelu", case_gelu),
        ("tangma_x", case_tangma_x),
        ("tangma_alpha", case_tangma_alpha),
        ("tangma_gamma", case_tangma_gamma),
        ("conv2d_x", case_conv_x),
        ("conv2d_w", case_conv_w),
        ("conv2d_b", case_conv_b),
        ("maxpool2d", case_maxpool),
        ("linear_x", case_linear_x),
        ("linear_w", case_linear_w),
        ("linear_b", case_linear_b),
        ("dropout", case_dropout),
        ("flatten", case_flatten),
        ("cross_entropy", case_cross_entropy),
    ]


def gradient_suite(seed=0, instances=100, h=1e-4):
    """Run ``instances`` random gradient checks per op.

    Returns an ordered ``{op_name: max_relative_error}`` mapping.
    """
    rng = np.random.default_rng(seed)
    results = {}
    for name, make_instance in _suite_cases():
        worst = 0.0
        for _ in range(instances):
            f, x0 = make_instance(rng)
            worst = max(worst, grad_check(f, np.asarray(x0, dtype=np.float64), h=h))
        results[name] = worst
    return results
