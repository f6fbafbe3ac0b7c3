"""tangmanet: a self-contained CPU training stack built to benchmark the
learnable Tangma activation (x * tanh(x + alpha) + gamma * x) against
ReLU, Swish and GELU on small convolutional classifiers."""

from .tensor import Tensor, ShapeError, DomainError, GraphError, parameter, zero_grads
from .gradcheck import grad_check, gradient_suite
from .activations import (ActivationKind, TangmaParams, apply_activation, erf, erf_values,
                          gelu, relu, sigmoid, swish, tangma, tangma_derivative)
from .layers import ConvSpec, DropoutSpec, conv2d, conv_output_size, dropout, flatten, linear, maxpool2d
from .losses import accuracy, cross_entropy, predict
from .optim import Adam
from .data import (Dataset, DataFormatError, SplitSpec, batches, load_cifar10_binary,
                   load_mnist_csv, split, synthetic_dataset)
from .models import CheckpointError, Model, ModelSpec, build_model, load_checkpoint, save_checkpoint
from .harness import (EpochRecord, ParamTraceRecord, RunConfig, TrainResult,
                      TrainingDivergedError, evaluate, export_metrics, load_dataset, train_run)

__version__ = "0.1.0"

__all__ = [
    "Tensor", "ShapeError", "DomainError", "GraphError", "parameter", "zero_grads",
    "grad_check", "gradient_suite",
    "ActivationKind", "TangmaParams", "apply_activation", "erf", "erf_values",
    "gelu", "relu", "sigmoid", "swish", "tangma", "tangma_derivative",
    "ConvSpec", "DropoutSpec", "conv2d", "conv_output_size", "dropout", "flatten",
    "linear", "maxpool2d",
    "accuracy", "cross_entropy", "predict",
    "Adam",
    "Dataset", "DataFormatError", "SplitSpec", "batches", "load_cifar10_binary",
    "load_mnist_csv", "split", "synthetic_dataset",
    "CheckpointError", "Model", "ModelSpec", "build_model", "load_checkpoint", "save_checkpoint",
    "EpochRecord", "ParamTraceRecord", "RunConfig", "TrainResult", "TrainingDivergedError",
    "evaluate", "export_metrics", "load_dataset", "train_run",
    "__version__",
]
