"""Dense tensors and a reverse-mode differentiation tape.

Every layer in this package funnels its arithmetic through `Tensor` (a thin
wrapper over a row-major numpy array) and records one closure per primitive
application on the active `Tape`.  Backward replays the tape in reverse
append order, accumulating gradients by summation when a value fans out.

Two precisions are supported: float32 is the training default, float64 is
used by the finite-difference verification harness (`grad_check`), where
float32 round-off would swamp the comparison.
"""

import threading

import numpy as np

DEFAULT_DTYPE = np.float32

_FLOAT_TYPES = (np.float32, np.float64)


class ShapeError(ValueError):
    """Raised when operand shapes violate an operation's contract."""


class TapeError(RuntimeError):
    """Raised on invalid tape usage (e.g. seeding an unrecorded node)."""


class GradCheckError(RuntimeError):
    """Raised when grad_check meets a non-finite value; names the component."""


class Tensor:
    """Dense n-dimensional real array, row-major.

    Tensors are immutable by convention once produced by an operation, so
    they can be shared freely across threads.  Identity (not value) is what
    the tape tracks; do not mutate `.data` after recording.
    """

    __slots__ = ("data",)

    def __init__(self, data, dtype=None):
        arr = np.asarray(data, dtype=dtype)
        if arr.dtype.type not in _FLOAT_TYPES:
            arr = arr.astype(DEFAULT_DTYPE)
        if arr.ndim > 0 and min(arr.shape) < 1:
            raise ShapeError("all extents must be >= 1, got shape %r" % (arr.shape,))
        self.data = arr

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self):
        return self.data.size

    @property
    def ndim(self):
        return self.data.ndim

    def item(self):
        return self.data.item()

    def astype(self, dtype):
        return Tensor(self.data.astype(dtype))

    def copy(self):
        return Tensor(self.data.copy())

    def __repr__(self):
        return "Tensor(shape=%r, dtype=%s)" % (tuple(self.shape), self.data.dtype.name)


class _Node:
    __slots__ = ("output", "inputs", "backward")

    def __init__(self, output, inputs, backward):
        self.output = output
        self.inputs = inputs
        self.backward = backward


_tls = threading.local()


def _tape_stack():
    stack = getattr(_tls, "stack", None)
    if stack is None:
        stack = _tls.stack = []
    return stack


def active_tape():
    """The innermost open Tape of this thread, or None."""
    stack = _tape_stack()
    return stack[-1] if stack else None


class Tape:
    """Append-only record of primitive applications.

    A tape is confined to one training stream (thread); independent tapes
    may run concurrently.  Backward leaves the tape intact, so replaying
    forward+backward on identical inputs is bit-reproducible.
    """

    def __init__(self):
        self.nodes = []
        self._produced = set()

    def __enter__(self):
        _tape_stack().append(self)
        return self

    def __exit__(self, *exc):
        popped = _tape_stack().pop()
        assert popped is self
        return False

    def record(self, output, inputs, backward):
        """Append a node; `backward(grad_out) -> tuple of per-input grads`."""
        self.nodes.append(_Node(output, tuple(inputs), backward))
        self._produced.add(id(output))

    def backward(self, seeds):
        """Pull seed gradients back to every leaf tensor.

        `seeds` maps recorded output tensors to gradient arrays of the same
        shape.  Returns a dict from each participating leaf Tensor (one that
        no node on this tape produced) to its gradient Tensor.  Gradients
        accumulate by summation on fan-out and start at zero each call.
        """
        grads = {}
        refs = {}
        for t, g in seeds.items():
            if id(t) not in self._produced:
                raise TapeError("seeded tensor was not recorded on this tape")
            g = g.data if isinstance(g, Tensor) else np.asarray(g, dtype=t.dtype)
            if g.shape != t.data.shape:
                raise ShapeError(
                    "seed shape %r does not match output shape %r"
                    % (g.shape, t.data.shape)
                )
            _accumulate(grads, refs, t, g)
        for node in reversed(self.nodes):
            g = grads.get(id(node.output))
            if g is None:
                continue
            in_grads = node.backward(g)
            for t, ig in zip(node.inputs, in_grads):
                if ig is not None:
                    _accumulate(grads, refs, t, ig)
        out = {}
        for node in self.nodes:
            for t in node.inputs:
                if id(t) in self._produced or id(t) in out:
                    continue
                g = grads.get(id(t))
                if g is None:
                    g = np.zeros_like(t.data)
                out[id(t)] = (t, g)
        return {t: Tensor(g) for t, g in out.values()}


def _accumulate(grads, refs, tensor, grad):
    key = id(tensor)
    refs[key] = tensor
    if key in grads:
        grads[key] = grads[key] + grad
    else:
        grads[key] = grad


def record(output, inputs, backward):
    """Record on the active tape, if any.  No-op otherwise."""
    tape = active_tape()
    if tape is not None:
        tape.record(output, inputs, backward)
    return output


# ---------------------------------------------------------------------------
# primitives

def matmul(a, b):
    """Matrix product of two rank-2 tensors."""
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(
            "matmul shape mismatch: %r x %r" % (tuple(a.shape), tuple(b.shape))
        )
    out = Tensor(a.data @ b.data)

    def backward(g):
        return g @ b.data.T, a.data.T @ g

    return record(out, (a, b), backward)


def add(a, b):
    if a.shape != b.shape:
        raise ShapeError("add shape mismatch: %r vs %r" % (tuple(a.shape), tuple(b.shape)))
    out = Tensor(a.data + b.data)

    def backward(g):
        return g, g

    return record(out, (a, b), backward)


def mul(a, b):
    if a.shape != b.shape:
        raise ShapeError("mul shape mismatch: %r vs %r" % (tuple(a.shape), tuple(b.shape)))
    out = Tensor(a.data * b.data)

    def backward(g):
        return g * b.data, g * a.data

    return record(out, (a, b), backward)


def reshape(x, shape):
    out = Tensor(x.data.reshape(shape))
    in_shape = x.data.shape

    def backward(g):
        return (g.reshape(in_shape),)

    return record(out, (x,), backward)


def sum_all(x):
    """Sum of all elements; handy scalar head for gradient checks."""
    out = Tensor(np.asarray(x.data.sum(), dtype=x.dtype))

    def backward(g):
        return (np.full_like(x.data, g),)

    return record(out, (x,), backward)


def sigmoid(x):
    return activation(x, "sigmoid")


def tanh(x):
    return activation(x, "tanh")


def softmax(x, axis=0):
    return activation(x, "softmax", axis=axis)


def activation(x, kind, axis=0):
    """Elementwise sigmoid/tanh, or softmax normalized over one axis.

    Rejects non-finite inputs: a NaN or inf entering a nonlinearity is
    always an upstream bug and would otherwise propagate silently.
    """
    if not np.isfinite(x.data).all():
        raise ValueError("activation input contains non-finite elements")
    if kind == "sigmoid":
        y = _sigmoid(x.data)
        out = Tensor(y)

        def backward(g):
            return (g * y * (1.0 - y),)

    elif kind == "tanh":
        y = np.tanh(x.data)
        out = Tensor(y)

        def backward(g):
            return (g * (1.0 - y * y),)

    elif kind == "softmax":
        y = _softmax(x.data, axis)
        out = Tensor(y)

        def backward(g):
            dot = (g * y).sum(axis=axis, keepdims=True)
            return (y * (g - dot),)

    else:
        raise ValueError("unknown activation kind %r" % (kind,))
    return record(out, (x,), backward)


def _sigmoid(x):
    # Clipping keeps exp() out of overflow territory; sigmoid saturates
    # anyway well before |x| = 40.
    return 1.0 / (1.0 + np.exp(-np.clip(x, -40.0, 40.0)))


def _softmax(x, axis):
    z = x - x.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def _log_softmax(x, axis):
    z = x - x.max(axis=axis, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=axis, keepdims=True))


# ---------------------------------------------------------------------------
# verification harness

def grad_check(fn, points, step=1e-5):
    """Max relative error between tape gradients and central differences.

    `fn` maps the given Tensors to a scalar Tensor; `points` is a Tensor or
    a list of Tensors (use float64 data, FD at float32 is meaningless).
    Relative error uses max(1, |analytic|, |numeric|) as denominator.
    """
    if isinstance(points, Tensor):
        points = [points]
    if step <= 0:
        raise ValueError("step must be positive")
    with Tape() as tape:
        out = fn(*points)
    if out.size != 1:
        raise ShapeError("grad_check function must be scalar-valued")
    grads = tape.backward({out: np.ones_like(out.data)})
    max_err = 0.0
    for pi, p in enumerate(points):
        analytic = grads[p].data if p in grads else np.zeros_like(p.data)
        base = p.data
        flat = base.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            f_plus = fn(*points).item()
            flat[i] = orig - step
            f_minus = fn(*points).item()
            flat[i] = orig
            numeric = (f_plus - f_minus) / (2.0 * step)
            a = analytic.reshape(-1)[i]
            if not (np.isfinite(numeric) and np.isfinite(a)):
                raise GradCheckError(
                    "non-finite gradient at input %d component %d" % (pi, i)
                )
            denom = max(1.0, abs(a), abs(numeric))
            max_err = max(max_err, abs(a - numeric) / denom)
    return max_err
