"""Dense tensors with reverse-mode automatic differentiation.

A ``Tensor`` wraps a row-major numpy array and records, for each derived
value, the parent tensors plus a closure computing the parents' gradient
contributions.  Calling :meth:`Tensor.backward` on a scalar walks the
recorded graph once in reverse topological order and accumulates
``d(root)/d(node)`` into every reachable ``grad`` buffer.

Design constraints:

* training graphs run in float32, gradient checking rebuilds them in
  float64 (dtype simply follows the arrays);
* no implicit broadcasting except scalar-with-tensor; bias addition is
  the explicit :meth:`Tensor.add_rowvec` op;
* graphs are rebuilt per batch (define-by-run), so closures may capture
  forward values without invalidation concerns.
"""

import numpy as np


class ShapeError(ValueError):
    """Operands have incompatible shapes for the requested operation."""


class DomainError(ValueError):
    """Input lies outside an operation's mathematical domain."""


class GraphError(RuntimeError):
    """A computation-graph contract was violated."""


def _as_float_array(data, dtype=None):
    arr = np.asarray(data, dtype=dtype)
    if not np.issubdtype(arr.dtype, np.floating):
        arr = arr.astype(np.float32)
    return arr


class Tensor:
    """N-dimensional array node in a dynamically built computation graph.

    ``grad`` accumulates additively: repeated backward passes over the
    same graph add their contributions, and ``zero_grads`` resets them.
    """

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward_fn")

    def __init__(self, data, requires_grad=False, dtype=None):
        self.data = _as_float_array(data, dtype)
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self._parents = ()
        self._backward_fn = None

    # ------------------------------------------------------------------
    # construction helpers
    # ------------------------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def __repr__(self):
        return f"Tensor(shape={self.shape}, dtype={self.dtype.name}, requires_grad={self.requires_grad})"

    def _node(self, data, parents, backward_fn):
        """Wrap an op result, recording parents only when grads can flow."""
        out = Tensor(data)
        if any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = parents
            out._backward_fn = backward_fn
        return out

    # ------------------------------------------------------------------
    # elementwise arithmetic (identical shapes, or scalar-with-tensor)
    # ------------------------------------------------------------------

    @staticmethod
    def _scalar_reduce(grad, shape):
        # gradient of a broadcast scalar operand: sum over every element
        return np.asarray(grad.sum(), dtype=grad.dtype).reshape(shape)

    def _binary_shapes(self, other, opname):
        if self.shape == other.shape:
            return
        if self.size == 1 or other.size == 1:
            return
        raise ShapeError(
            f"{opname} requires identical shapes or a scalar operand, "
            f"got {tuple(self.shape)} and {tuple(other.shape)}"
        )

    def __add__(self, other):
        if not isinstance(other, Tensor):
            data = self.data + other
            return self._node(data, (self,), lambda g: (g,))
        self._binary_shapes(other, "add")
        data = self.data + other.data

        def backward(g):
            ga = g if self.shape == g.shape else self._scalar_reduce(g, self.shape)
            gb = g if other.shape == g.shape else self._scalar_reduce(g, other.shape)
            return ga, gb

        return self._node(data, (self, other), backward)

    def __radd__(self, other):
        return self.__add__(other)

    def __neg__(self):
        return self._node(-self.data, (self,), lambda g: (-g,))

    def __sub__(self, other):
        return self.__add__(-other)

    def __rsub__(self, other):
        return self.__neg__().__add__(other)

    def __mul__(self, other):
        if not isinstance(other, Tensor):
            data = self.data * other
            return self._node(data, (self,), lambda g: (g * other,))
        self._binary_shapes(other, "mul")
        a, b = self.data, other.data
        data = a * b

        def backward(g):
            ga = g * b
            gb = g * a
            if self.shape != ga.shape:
                ga = self._scalar_reduce(ga, self.shape)
            if other.shape != gb.shape:
                gb = self._scalar_reduce(gb, other.shape)
            return ga, gb

        return self._node(data, (self, other), backward)

    def __rmul__(self, other):
        return self.__mul__(other)

    # ------------------------------------------------------------------
    # matrix product and bias
    # ------------------------------------------------------------------

    def matmul(self, other):
        if self.ndim != 2 or other.ndim != 2:
            raise ShapeError(
                f"matmul requires 2-D operands, got {tuple(self.shape)} and {tuple(other.shape)}"
            )
        if self.shape[1] != other.shape[0]:
            raise ShapeError(
                f"matmul inner dimensions disagree: {tuple(self.shape)} x {tuple(other.shape)}"
            )
        a, b = self.data, other.data
        data = a @ b

        def backward(g):
            return g @ b.T, a.T @ g

        return self._node(data, (self, other), backward)

    def __matmul__(self, other):
        return self.matmul(other)

    def transpose(self):
        if self.ndim != 2:
            raise ShapeError(f"transpose expects a 2-D tensor, got {tuple(self.shape)}")
        return self._node(self.data.T, (self,), lambda g: (g.T,))

    def add_rowvec(self, vec):
        """Add a length-m vector to every row of an (n, m) tensor."""
        if self.ndim != 2 or vec.ndim != 1 or self.shape[1] != vec.shape[0]:
            raise ShapeError(
                f"add_rowvec expects (n, m) + (m,), got {tuple(self.shape)} and {tuple(vec.shape)}"
            )
        data = self.data + vec.data

        def backward(g):
            return g, g.sum(axis=0)

        return self._node(data, (self, vec), backward)

    # ------------------------------------------------------------------
    # elementwise functions
    # ------------------------------------------------------------------

    def tanh(self):
        t = np.tanh(self.data)
        return self._node(t, (self,), lambda g: (g * (1.0 - t * t),))

    def exp(self):
        e = np.exp(self.data)
        return self._node(e, (self,), lambda g: (g * e,))

    def log(self):
        if np.any(self.data <= 0.0):
            raise DomainError("log requires strictly positive inputs")
        return self._node(np.log(self.data), (self,), lambda g: (g / self.data,))

    def maximum(self, threshold):
        """Elementwise max with a constant; subgradient at the kink is 0."""
        mask = self.data > threshold
        data = np.maximum(self.data, threshold)
        return self._node(data, (self,), lambda g: (g * mask,))

    # ------------------------------------------------------------------
    # shape manipulation (views over the same row-major data)
    # ------------------------------------------------------------------

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        original = self.shape
        data = self.data.reshape(shape)
        return self._node(data, (self,), lambda g: (g.reshape(original),))

    def permute(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        inverse = tuple(np.argsort(axes))
        # materialize contiguously so downstream elementwise ops stay fast
        data = np.ascontiguousarray(np.transpose(self.data, axes))
        return self._node(data, (self,), lambda g: (np.ascontiguousarray(np.transpose(g, inverse)),))

    # ------------------------------------------------------------------
    # reductions
    # ------------------------------------------------------------------

    def sum(self):
        data = np.asarray(self.data.sum(), dtype=self.dtype)
        return self._node(data, (self,), lambda g: (np.broadcast_to(g, self.shape).astype(self.dtype, copy=True),))

    # ------------------------------------------------------------------
    # reverse-mode pass
    # ------------------------------------------------------------------

    def backward(self):
        """Accumulate ``d(self)/d(node)`` into the reachable grad buffers.

        The pass keeps its adjoints in a scratch map and only adds the
        finished per-node totals into ``grad``, so running backward twice
        on the same graph exactly doubles the stored gradients.  Grads
        are retained on leaves (and on any node whose ``grad`` buffer was
        pre-allocated, e.g. via :func:`zero_grads`); derived nodes just
        route gradient flow.
        """
        if self.data.size != 1:
            raise GraphError(
                f"backward requires a scalar root, got shape {tuple(self.shape)}"
            )

        topo = []
        visited = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in visited:
                    stack.append((parent, False))

        adjoint = {id(self): np.ones_like(self.data)}
        for node in reversed(topo):
            g = adjoint.pop(id(node), None)
            if g is None:
                continue
            if node.requires_grad and (not node._parents or node.grad is not None):
                if node.grad is None:
                    node.grad = g.copy()
                else:
                    node.grad += g
            if node._backward_fn is None:
                continue
            for parent, pg in zip(node._parents, node._backward_fn(g)):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                prev = adjoint.get(key)
                adjoint[key] = pg if prev is None else prev + pg


def parameter(data, dtype=None):
    """Create a trainable leaf tensor with a zeroed gradient buffer."""
    t = Tensor(data, requires_grad=True, dtype=dtype)
    t.grad = np.zeros_like(t.data)
    return t


def zero_grads(params):
    """Reset the gradient buffers of an iterable of tensors to zero."""
    for p in params:
        if p.grad is None:
            p.grad = np.zeros_like(p.data)
        else:
            p.grad.fill(0.0)
