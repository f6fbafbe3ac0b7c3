"""The two benchmark CNNs with a pluggable activation.

mnist (28x28 grayscale, 10 classes):
    Conv(1->32, k3, s1, p0) -> act -> Conv(32->64, k3, s1, p0) -> act
    -> MaxPool2 -> Dropout 0.25 -> Flatten(9216) -> FC(9216->128)
    -> act -> Dropout 0.5 -> FC(128->10)

cifar10 (32x32 RGB, 10 classes):
    [Conv(3->32, k3, s1, p1) -> act -> MaxPool2]
    [Conv(32->64, k3, s1, p1) -> act -> MaxPool2]
    [Conv(64->128, k3, s1, p1) -> act -> MaxPool2]
    -> Flatten(2048) -> FC(2048->512) -> act -> Dropout 0.5 -> FC(512->10)

Weights and biases are initialized uniform in +-1/sqrt(fan_in); the
Tangma scalars start at exactly 0.0.  One shared (alpha, gamma) pair
drives every activation site unless ``per_site_tangma`` is set.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .activations import ActivationKind, TangmaParams, apply_activation
from .layers import ConvSpec, DropoutSpec, conv2d, dropout, flatten, linear, maxpool2d
from .tensor import Tensor, ShapeError, parameter

_ARCHITECTURES = {
    "mnist": {
        "input": (1, 28, 28),
        "convs": ((1, 32, 3, 1, 0), (32, 64, 3, 1, 0)),
        "fcs": ((9216, 128), (128, 10)),
        "dropout_rates": (0.25, 0.5),
        "act_sites": 3,
    },
    "cifar10": {
        "input": (3, 32, 32),
        "convs": ((3, 32, 3, 1, 1), (32, 64, 3, 1, 1), (64, 128, 3, 1, 1)),
        "fcs": ((2048, 512), (512, 10)),
        "dropout_rates": (0.5,),
        "act_sites": 4,
    },
}


@dataclass
class ModelSpec:
    architecture: str
    activation: ActivationKind | str = ActivationKind.TANGMA
    seed: int = 0
    dropout_rates: tuple | None = None  # architecture default when None
    per_site_tangma: bool = False

    def __post_init__(self):
        if self.architecture not in _ARCHITECTURES:
            known = ", ".join(sorted(_ARCHITECTURES))
            raise ValueError(f"unknown architecture {self.architecture!r}; expected one of: {known}")
        self.activation = ActivationKind.from_name(self.activation)
        if self.dropout_rates is None:
            self.dropout_rates = _ARCHITECTURES[self.architecture]["dropout_rates"]


class Model:
    """Parameter container plus the forward graph for one architecture."""

    def __init__(self, spec, dtype=np.float32):
        self.spec = spec
        self.dtype = dtype
        arch = _ARCHITECTURES[spec.architecture]
        self.input_shape = arch["input"]
        rng = np.random.default_rng(spec.seed)

        self._params = {}
        self.convs = []
        for i, (cin, cout, k, s, p) in enumerate(arch["convs"], 1):
            w = self._init((cout, cin, k, k), cin * k * k, rng)
            b = self._init((cout,), cin * k * k, rng)
            self._params[f"conv{i}.weight"] = w
            self._params[f"conv{i}.bias"] = b
            self.convs.append(ConvSpec(cin, cout, k, s, p, w, b))

        self.fcs = []
        for i, (nin, nout) in enumerate(arch["fcs"], 1):
            w = self._init((nout, nin), nin, rng)
            b = self._init((nout,), nin, rng)
            self._params[f"fc{i}.weight"] = w
            self._params[f"fc{i}.bias"] = b
            self.fcs.append((w, b))

        self.tangma_sites = None
        if spec.activation is ActivationKind.TANGMA:
            n_sites = arch["act_sites"] if spec.per_site_tangma else 1
            self.tangma_sites = [TangmaParams.fresh(dtype) for _ in range(n_sites)]
            for i, site in enumerate(self.tangma_sites):
                prefix = f"tangma{i}" if n_sites > 1 else "tangma"
                self._params[f"{prefix}.alpha"] = site.alpha
                self._params[f"{prefix}.gamma"] = site.gamma

        self.last_shapes = []

    def _init(self, shape, fan_in, rng):
        bound = 1.0 / np.sqrt(fan_in)
        return parameter(rng.uniform(-bound, bound, size=shape).astype(self.dtype))

    # ------------------------------------------------------------------

    def parameters(self):
        """Name -> tensor registry in deterministic construction order."""
        return dict(self._params)

    def parameter_count(self):
        return sum(p.size for p in self._params.values())

    @property
    def tangma_params(self):
        """The logged (alpha, gamma) pair (site 0 when per-site)."""
        return self.tangma_sites[0] if self.tangma_sites else None

    def _act(self, x, site):
        params = None
        if self.tangma_sites:
            params = self.tangma_sites[site if self.spec.per_site_tangma else 0]
        return apply_activation(self.spec.activation, x, params)

    def forward(self, x, mode="train", rng=None):
        """Run the architecture; dropout is active only in train mode."""
        if mode not in ("train", "eval"):
            raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
        if not isinstance(x, Tensor):
            x = Tensor(np.asarray(x, dtype=self.dtype))
        if tuple(x.shape[1:]) != self.input_shape:
            raise ShapeError(
                f"{self.spec.architecture} input must be (B, {', '.join(map(str, self.input_shape))}), "
                f"got {tuple(x.shape)}"
            )
        if mode == "train" and rng is None and any(p > 0 for p in self.spec.dropout_rates):
            raise ValueError("train-mode forward requires an rng for dropout")

        shapes = [tuple(x.shape)]

        def track(t):
            shapes.append(tuple(t.shape))
            return t

        if self.spec.architecture == "mnist":
            p_conv, p_fc = self.spec.dropout_rates
            h = self._act(track(conv2d(x, self.convs[0])), 0)
            h = self._act(track(conv2d(h, self.convs[1])), 1)
            h = track(maxpool2d(h))
            h = dropout(h, DropoutSpec(p_conv, mode), rng)
            h = track(flatten(h))
            h = track(self._act(linear(h, *self.fcs[0]), 2))
            h = dropout(h, DropoutSpec(p_fc, mode), rng)
            logits = track(linear(h, *self.fcs[1]))
        else:
            (p_fc,) = self.spec.dropout_rates
            h = x
            for site, conv in enumerate(self.convs):
                h = track(maxpool2d(self._act(track(conv2d(h, conv)), site)))
            h = track(flatten(h))
            h = track(self._act(linear(h, *self.fcs[0]), len(self.convs)))
            h = dropout(h, DropoutSpec(p_fc, mode), rng)
            logits = track(linear(h, *self.fcs[1]))

        self.last_shapes = shapes
        return logits


def build_model(spec, dtype=np.float32):
    return Model(spec, dtype=dtype)


# ----------------------------------------------------------------------
# checkpoints: little-endian binary key-value format, documented in the
# README.  Header stores architecture/activation tags so `eval` can
# rebuild the model without the original run config.
# ----------------------------------------------------------------------

_CKPT_MAGIC = b"TNCK"
_CKPT_VERSION = 1


class CheckpointError(ValueError):
    """Checkpoint file is malformed or does not match the model."""


def _write_str(fh, s):
    raw = s.encode("utf-8")
    fh.write(struct.pack("<H", len(raw)))
    fh.write(raw)


def _read_str(fh):
    (n,) = struct.unpack("<H", fh.read(2))
    return fh.read(n).decode("utf-8")


def save_checkpoint(model, path):
    with open(path, "wb") as fh:
        fh.write(_CKPT_MAGIC)
        fh.write(struct.pack("<I", _CKPT_VERSION))
        _write_str(fh, model.spec.architecture)
        _write_str(fh, model.spec.activation.value)
        fh.write(struct.pack("<B", int(model.spec.per_site_tangma)))
        params = model.parameters()
        fh.write(struct.pack("<I", len(params)))
        for name, tensor in params.items():
            _write_str(fh, name)
            shape = tensor.shape
            fh.write(struct.pack("<B", len(shape)))
            for dim in shape:
                fh.write(struct.pack("<I", dim))
            fh.write(np.ascontiguousarray(tensor.data, dtype="<f4").tobytes())


def load_checkpoint(path):
    with open(path, "rb") as fh:
        if fh.read(4) != _CKPT_MAGIC:
            raise CheckpointError(f"{path}: not a model checkpoint")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != _CKPT_VERSION:
            raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
        arch = _read_str(fh)
        activation = _read_str(fh)
        (per_site,) = struct.unpack("<B", fh.read(1))
        model = build_model(ModelSpec(arch, activation, seed=0, per_site_tangma=bool(per_site)))
        registry = model.parameters()
        (count,) = struct.unpack("<I", fh.read(4))
        if count != len(registry):
            raise CheckpointError(f"{path}: has {count} parameters, model expects {len(registry)}")
        for _ in range(count):
            name = _read_str(fh)
            (ndim,) = struct.unpack("<B", fh.read(1))
            shape = struct.unpack(f"<{ndim}I", fh.read(4 * ndim))
            if name not in registry or tuple(registry[name].shape) != shape:
                raise CheckpointError(f"{path}: unexpected parameter {name} with shape {shape}")
            n = int(np.prod(shape)) if shape else 1
            values = np.frombuffer(fh.read(4 * n), dtype="<f4").reshape(shape)
            registry[name].data[...] = values
    return model
