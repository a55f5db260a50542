"""Dense float64 tensors with reverse-mode differentiation.

Values live in C-contiguous (row-major) float64 numpy arrays. Every
operation records a backward closure on a tape that is released after each
``backward()`` call, which is all a small static graph needs. Everything is
64-bit on purpose: gradient checking at 1e-5 tolerance does not survive
float32.

matmul deliberately goes through ``np.einsum`` instead of BLAS: einsum sums
each output element sequentially over the inner axis, so results are
bit-identical whether rows are processed one at a time or batched, and under
row permutation. Several exactness guarantees (batch equivariance, per-frame
vs batched mixing) rely on this.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ConfigError, DegenerateInputError, ShapeMismatchError

_grad_enabled = True

# One ulp below 1.0; sigmoid saturates here so outputs stay strictly < 1.
_SIGMOID_CEIL = float(np.nextafter(1.0, 0.0))


class no_grad:
    """Context manager that disables tape recording."""

    def __enter__(self):
        global _grad_enabled
        self._prev = _grad_enabled
        _grad_enabled = False
        return self

    def __exit__(self, *exc):
        global _grad_enabled
        _grad_enabled = self._prev
        return False


def grad_enabled():
    return _grad_enabled


class Tensor:
    """A node in the computation graph.

    Leaf tensors created with ``requires_grad=True`` are parameters; their
    ``.grad`` accumulates across backward passes until cleared.
    """

    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_backward")

    def __init__(self, data, requires_grad=False, name=None):
        arr = np.asarray(data, dtype=np.float64)
        self.data = np.ascontiguousarray(arr)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self.name = name
        self._parents = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    @property
    def values(self):
        """Flat row-major view of the stored values."""
        return self.data.ravel()

    def item(self):
        if self.data.size != 1:
            raise ShapeMismatchError(f"item() needs a single element, got shape {self.shape}")
        return float(self.data.reshape(()))

    def detach(self):
        return Tensor(self.data.copy())

    def zero_grad(self):
        self.grad = None

    def _accumulate(self, g):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def backward(self):
        """Reverse-mode sweep from a single-element output.

        The recorded tape (parent links and closures) is freed afterwards;
        leaf gradients survive in ``.grad``.
        """
        if self.data.size != 1:
            raise ShapeMismatchError(f"backward() needs a single-element output, got shape {self.shape}")
        topo = []
        visited = set()

        def build(t):
            if id(t) not in visited:
                visited.add(id(t))
                for p in t._parents:
                    build(p)
                topo.append(t)

        build(self)
        self.grad = np.ones_like(self.data)
        for t in reversed(topo):
            if t._backward is not None:
                t._backward()
        for t in topo:
            t._parents = ()
            t._backward = None

    # Operator sugar; scalars are wrapped as constants.
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def parameter(data, name=None):
    return Tensor(data, requires_grad=True, name=name)


def init_uniform(rng, shape, fan_in, name=None):
    """Seeded uniform init in [-sqrt(1/fan_in), +sqrt(1/fan_in)]."""
    bound = math.sqrt(1.0 / fan_in)
    return parameter(rng.uniform(-bound, bound, size=shape), name=name)


def _make(data, parents, backward):
    req = _grad_enabled and any(p.requires_grad for p in parents)
    out = Tensor(data, requires_grad=req)
    if req:
        out._parents = tuple(parents)
        out._backward = backward
    return out


def _unbroadcast(g, shape):
    """Reduce a broadcast gradient back down to ``shape``."""
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def _broadcast_op(a, b, fwd, bwd_a, bwd_b, opname):
    a, b = as_tensor(a), as_tensor(b)
    try:
        data = fwd(a.data, b.data)
    except ValueError:
        raise ShapeMismatchError(f"{opname}: shapes {a.shape} and {b.shape} do not broadcast") from None

    def backward():
        if a.requires_grad:
            a._accumulate(_unbroadcast(bwd_a(out.grad, a.data, b.data), a.data.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(bwd_b(out.grad, a.data, b.data), b.data.shape))

    out = _make(data, (a, b), backward)
    return out


def add(a, b):
    return _broadcast_op(a, b, lambda x, y: x + y, lambda g, x, y: g, lambda g, x, y: g, "add")


def sub(a, b):
    return _broadcast_op(a, b, lambda x, y: x - y, lambda g, x, y: g, lambda g, x, y: -g, "sub")


def mul(a, b):
    return _broadcast_op(a, b, lambda x, y: x * y, lambda g, x, y: g * y, lambda g, x, y: g * x, "mul")


def div(a, b):
    return _broadcast_op(
        a, b, lambda x, y: x / y, lambda g, x, y: g / y, lambda g, x, y: -g * x / (y * y), "div"
    )


def matmul(a, b):
    """2-D matrix product via einsum (bit-stable across batching)."""
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeMismatchError(f"matmul: incompatible shapes {a.shape} x {b.shape}")
    data = np.einsum("ij,jk->ik", a.data, b.data)

    def backward():
        if a.requires_grad:
            a._accumulate(np.einsum("ik,jk->ij", out.grad, b.data))
        if b.requires_grad:
            b._accumulate(np.einsum("ij,ik->jk", a.data, out.grad))

    out = _make(data, (a, b), backward)
    return out


def relu(x):
    x = as_tensor(x)
    data = np.maximum(x.data, 0.0)

    def backward():
        if x.requires_grad:
            x._accumulate(out.grad * (x.data > 0.0))

    out = _make(data, (x,), backward)
    return out


def sigmoid(x):
    """Numerically safe logistic; outputs strictly inside (0, 1).

    Inputs are clamped to [-500, 500] before exponentiation and the output
    is capped one ulp below 1.0 so saturation never leaves the open
    interval in float64.
    """
    x = as_tensor(x)
    z = np.clip(x.data, -500.0, 500.0)
    pos = z >= 0
    data = np.empty_like(z)
    data[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    data[~pos] = ez / (1.0 + ez)
    np.minimum(data, _SIGMOID_CEIL, out=data)

    def backward():
        if x.requires_grad:
            x._accumulate(out.grad * data * (1.0 - data))

    out = _make(data, (x,), backward)
    return out


def sqrt(x):
    x = as_tensor(x)
    data = np.sqrt(x.data)

    def backward():
        if x.requires_grad:
            x._accumulate(out.grad * 0.5 / data)

    out = _make(data, (x,), backward)
    return out


def tsum(x, axis=None, keepdims=False):
    x = as_tensor(x)
    data = x.data.sum(axis=axis, keepdims=keepdims)

    def backward():
        if x.requires_grad:
            g = out.grad
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            x._accumulate(np.broadcast_to(g, x.data.shape).copy())

    out = _make(data, (x,), backward)
    return out


def tmean(x, axis=None, keepdims=False):
    x = as_tensor(x)
    data = x.data.mean(axis=axis, keepdims=keepdims)
    n = x.data.size if axis is None else x.data.shape[axis]

    def backward():
        if x.requires_grad:
            g = out.grad
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            x._accumulate(np.broadcast_to(g, x.data.shape) / n)

    out = _make(data, (x,), backward)
    return out


def reshape(x, shape):
    x = as_tensor(x)
    data = x.data.reshape(shape)

    def backward():
        if x.requires_grad:
            x._accumulate(out.grad.reshape(x.data.shape))

    out = _make(data, (x,), backward)
    return out


def concat(tensors, axis=0):
    tensors = [as_tensor(t) for t in tensors]
    data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward():
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                idx = [slice(None)] * data.ndim
                idx[axis] = slice(lo, hi)
                t._accumulate(out.grad[tuple(idx)])

    out = _make(data, tuple(tensors), backward)
    return out


def tile_rows(x, reps):
    """Repeat each row ``reps`` times consecutively: (B, ...) -> (B*reps, ...)."""
    x = as_tensor(x)
    data = np.repeat(x.data, reps, axis=0)

    def backward():
        if x.requires_grad:
            g = out.grad.reshape((x.data.shape[0], reps) + x.data.shape[1:])
            x._accumulate(g.sum(axis=1))

    out = _make(data, (x,), backward)
    return out


def global_average_pool(v):
    """Mean over the two trailing spatial axes: (B, C, H, W) -> (B, C)."""
    v = as_tensor(v)
    if v.data.ndim != 4:
        raise ShapeMismatchError(f"global_average_pool: expected rank-4 input, got shape {v.shape}")
    b, c, h, w = v.shape
    if h * w == 0:
        raise DegenerateInputError(f"global_average_pool: empty spatial extent in shape {v.shape}")
    data = v.data.mean(axis=(2, 3))

    def backward():
        if v.requires_grad:
            g = out.grad[:, :, None, None] / (h * w)
            v._accumulate(np.broadcast_to(g, v.data.shape).copy())

    out = _make(data, (v,), backward)
    return out


def depthwise_temporal_conv1d(x, kernel):
    """Per-channel 1-D convolution along time with same-length zero padding.

    ``x`` is (T, K), ``kernel`` is (K, W) with odd W; channel k is convolved
    with its own width-W kernel. Taps accumulate left to right, matching the
    nested-loop reference summation order exactly; out-of-range taps are
    skipped rather than added as zeros.
    """
    x, kernel = as_tensor(x), as_tensor(kernel)
    if x.data.ndim != 2 or kernel.data.ndim != 2:
        raise ShapeMismatchError(
            f"depthwise_temporal_conv1d: expected rank-2 input and kernel, got {x.shape} and {kernel.shape}"
        )
    t_len, k_ch = x.shape
    if kernel.shape[0] != k_ch:
        raise ShapeMismatchError(
            f"depthwise_temporal_conv1d: channel mismatch between input {x.shape} and kernel {kernel.shape}"
        )
    width = kernel.shape[1]
    if width % 2 == 0:
        raise ConfigError(f"depthwise_temporal_conv1d: kernel width must be odd, got {width}")
    pad = width // 2

    data = np.zeros_like(x.data)
    for w in range(width):
        off = w - pad
        lo, hi = max(0, -off), min(t_len, t_len - off)
        if lo < hi:
            data[lo:hi] += x.data[lo + off : hi + off] * kernel.data[:, w]

    def backward():
        g = out.grad
        if x.requires_grad:
            gx = np.zeros_like(x.data)
            for w in range(width):
                off = w - pad
                lo, hi = max(0, -off), min(t_len, t_len - off)
                if lo < hi:
                    gx[lo + off : hi + off] += g[lo:hi] * kernel.data[:, w]
            x._accumulate(gx)
        if kernel.requires_grad:
            gk = np.zeros_like(kernel.data)
            for w in range(width):
                off = w - pad
                lo, hi = max(0, -off), min(t_len, t_len - off)
                if lo < hi:
                    gk[:, w] = (x.data[lo + off : hi + off] * g[lo:hi]).sum(axis=0)
            kernel._accumulate(gk)

    out = _make(data, (x, kernel), backward)
    return out
