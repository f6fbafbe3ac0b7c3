import numpy as np
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=50, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def naive_conv2d(x, w, b, stride=1, padding=0):
    """Quadruple-loop cross-correlation oracle, independent of the library."""
    bsz, cin, h, ww = x.shape
    cout, _, k, _ = w.shape
    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    oh = (h - k + 2 * padding) // stride + 1
    ow = (ww - k + 2 * padding) // stride + 1
    out = np.zeros((bsz, cout, oh, ow), dtype=x.dtype)
    for bi in range(bsz):
        for o in range(cout):
            for i in range(oh):
                for j in range(ow):
                    patch = xp[bi, :, i * stride:i * stride + k, j * stride:j * stride + k]
                    out[bi, o, i, j] = (patch * w[o]).sum() + b[o]
    return out


def naive_conv2d_backward(x, w, grad_out, stride=1, padding=0):
    """Loop-based gradients of naive_conv2d wrt input, weights and bias."""
    bsz, cin, h, ww = x.shape
    cout, _, k, _ = w.shape
    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    gxp = np.zeros_like(xp)
    gw = np.zeros_like(w)
    gb = np.zeros(cout, dtype=x.dtype)
    _, _, oh, ow = grad_out.shape
    for bi in range(bsz):
        for o in range(cout):
            for i in range(oh):
                for j in range(ow):
                    g = grad_out[bi, o, i, j]
                    sl = np.s_[bi, :, i * stride:i * stride + k, j * stride:j * stride + k]
                    gxp[sl] += g * w[o]
                    gw[o] += g * xp[sl]
                    gb[o] += g
    if padding:
        gxp = gxp[:, :, padding:-padding, padding:-padding]
    return gxp, gw, gb
