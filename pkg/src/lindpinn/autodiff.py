"""Reverse-mode autodiff on numpy arrays with a forward time-tangent channel.

A :class:`Tensor` wraps an ndarray. When created under an active
:class:`Tape`, every primitive applied to tracked tensors appends one node
holding its parents and a vector-Jacobian closure. A tensor may also carry a
``tangent`` (its derivative with respect to time). Tangents are built from the
same recorded primitives, so a single backward pass differentiates both the
values and their time derivatives with respect to the parameters.

Typical use::

    with Tape() as tape:
        w = tape.variable(w0)
        t = Tensor(ts, tangent=np.ones_like(ts))
        y = silu(t @ w)
        loss = mean(square(y.tangent))
        grads = tape.gradients(loss, [w])
"""

import threading

import numpy as np

from .errors import NotScalar, ShapeMismatch

# one tape stack per thread so parallel training runs never share a record
_LOCAL = threading.local()


def _tapes():
    stack = getattr(_LOCAL, "tapes", None)
    if stack is None:
        stack = _LOCAL.tapes = []
    return stack


def active_tape():
    stack = _tapes()
    return stack[-1] if stack else None


class Tape:
    """Ordered record of primitive applications; rebuilt for every step."""

    def __init__(self):
        self._parents = []
        self._vjps = []

    def __enter__(self):
        _tapes().append(self)
        return self

    def __exit__(self, *exc):
        _tapes().remove(self)
        return False

    def __len__(self):
        return len(self._parents)

    def variable(self, value, tangent=None):
        """Register a leaf (parameter) on this tape."""
        node = self._add((), None)
        return Tensor(np.array(value, dtype=np.float64), tangent, node=node, tape=self)

    def _add(self, parents, vjp):
        self._parents.append(parents)
        self._vjps.append(vjp)
        return len(self._parents) - 1

    def backward(self, loss):
        """Gradient of a scalar ``loss`` for every leaf, keyed by node id.

        Gradients from fan-out accumulate additively.
        """
        if not isinstance(loss, Tensor) or loss.value.size != 1:
            raise NotScalar("backward() needs a scalar tensor")
        if loss.node is None or loss.tape is not self:
            return {}
        grads = {loss.node: np.ones_like(loss.value)}
        leaves = {}
        for nid in range(loss.node, -1, -1):
            g = grads.pop(nid, None)
            if g is None:
                continue
            vjp = self._vjps[nid]
            if vjp is None:
                leaves[nid] = g
                continue
            for pid, gp in zip(self._parents[nid], vjp(g)):
                if pid is None or gp is None:
                    continue
                if pid in grads:
                    grads[pid] = grads[pid] + gp
                else:
                    grads[pid] = gp
        return leaves

    def gradients(self, loss, variables):
        """Gradients of ``loss`` for ``variables`` in order; zeros if unreachable."""
        leaves = self.backward(loss)
        out = []
        for v in variables:
            g = leaves.get(v.node)
            out.append(np.zeros_like(v.value) if g is None else np.reshape(g, v.value.shape))
        return out


class Tensor:
    __slots__ = ("value", "tangent", "node", "tape")
    __array_priority__ = 100

    def __init__(self, value, tangent=None, node=None, tape=None):
        self.value = np.asarray(value, dtype=np.float64)
        if tangent is not None and not isinstance(tangent, Tensor):
            tangent = Tensor(tangent)
        if tangent is not None and tangent.value.shape != self.value.shape:
            raise ShapeMismatch(
                f"tangent shape {tangent.value.shape} != value shape {self.value.shape}"
            )
        self.tangent = tangent
        self.node = node
        self.tape = tape

    @property
    def shape(self):
        return self.value.shape

    @property
    def ndim(self):
        return self.value.ndim

    def item(self):
        return float(self.value)

    def __repr__(self):
        tag = "" if self.tangent is None else ", tangent"
        return f"Tensor(shape={self.shape}, node={self.node}{tag})"

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
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return index(self, key)


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def primal(x):
    """The same node without its tangent (a first-order cut for tangent rules)."""
    return Tensor(x.value, None, node=x.node, tape=x.tape)


def _tracked(x, tape):
    return x.node is not None and x.tape is tape


def custom(value, inputs, vjp):
    """Record an arbitrary primitive.

    ``vjp(g)`` must return one gradient (or ``None``) per entry of ``inputs``.
    Inputs off the active tape are treated as constants.
    """
    tape = active_tape()
    if tape is None:
        return Tensor(value)
    parents = tuple(x.node if _tracked(x, tape) else None for x in inputs)
    if all(p is None for p in parents):
        return Tensor(value)
    node = tape._add(parents, vjp)
    return Tensor(value, node=node, tape=tape)


def _unbroadcast(g, shape):
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for i, s in enumerate(shape):
        if s == 1 and g.shape[i] != 1:
            g = g.sum(axis=i, keepdims=True)
    return g


def _broadcast_shape(a, b):
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError as exc:
        raise ShapeMismatch(f"incompatible shapes {a.shape} and {b.shape}") from exc


def _tadd(x, y):
    if x is None:
        return y
    if y is None:
        return x
    return add(x, y)


# elementwise binary ---------------------------------------------------------


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b)
    sa, sb = a.shape, b.shape
    out = custom(
        a.value + b.value, (a, b), lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb))
    )
    if a.tangent is not None or b.tangent is not None:
        t = _tadd(a.tangent, b.tangent)
        if t.shape != out.shape:
            t = add(t, np.zeros(out.shape))
        out.tangent = t
    return out


def neg(a):
    a = as_tensor(a)
    out = custom(-a.value, (a,), lambda g: (-g,))
    if a.tangent is not None:
        out.tangent = neg(a.tangent)
    return out


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b)
    sa, sb = a.shape, b.shape
    out = custom(
        a.value - b.value, (a, b), lambda g: (_unbroadcast(g, sa), _unbroadcast(-g, sb))
    )
    if a.tangent is not None or b.tangent is not None:
        nb = None if b.tangent is None else neg(b.tangent)
        t = _tadd(a.tangent, nb)
        if t.shape != out.shape:
            t = add(t, np.zeros(out.shape))
        out.tangent = t
    return out


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b)
    av, bv = a.value, b.value
    out = custom(
        av * bv,
        (a, b),
        lambda g: (_unbroadcast(g * bv, av.shape), _unbroadcast(g * av, bv.shape)),
    )
    if a.tangent is not None or b.tangent is not None:
        ta = None if a.tangent is None else mul(a.tangent, primal(b))
        tb = None if b.tangent is None else mul(primal(a), b.tangent)
        t = _tadd(ta, tb)
        if t.shape != out.shape:
            t = add(t, np.zeros(out.shape))
        out.tangent = t
    return out


def div(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b)
    av, bv = a.value, b.value
    q = av / bv
    out = custom(
        q,
        (a, b),
        lambda g: (_unbroadcast(g / bv, av.shape), _unbroadcast(-g * q / bv, bv.shape)),
    )
    if a.tangent is not None or b.tangent is not None:
        pb = primal(b)
        ta = None if a.tangent is None else div(a.tangent, pb)
        tb = None if b.tangent is None else neg(mul(primal(out), div(b.tangent, pb)))
        t = _tadd(ta, tb)
        if t.shape != out.shape:
            t = add(t, np.zeros(out.shape))
        out.tangent = t
    return out


def matmul(a, b):
    """Matrix product for 1-D or 2-D operands."""
    a, b = as_tensor(a), as_tensor(b)
    av, bv = a.value, b.value
    if av.ndim not in (1, 2) or bv.ndim not in (1, 2) or av.shape[-1] != bv.shape[0]:
        raise ShapeMismatch(f"cannot matmul shapes {av.shape} and {bv.shape}")

    def vjp(g):
        a2 = av if av.ndim == 2 else av[None, :]
        b2 = bv if bv.ndim == 2 else bv[:, None]
        g2 = np.reshape(g, (a2.shape[0], b2.shape[1]))
        return (g2 @ b2.T).reshape(av.shape), (a2.T @ g2).reshape(bv.shape)

    out = custom(av @ bv, (a, b), vjp)
    if a.tangent is not None or b.tangent is not None:
        ta = None if a.tangent is None else matmul(a.tangent, primal(b))
        tb = None if b.tangent is None else matmul(primal(a), b.tangent)
        out.tangent = _tadd(ta, tb)
    return out


matvec = matmul


# elementwise unary ----------------------------------------------------------


def sin(a):
    a = as_tensor(a)
    av = a.value
    out = custom(np.sin(av), (a,), lambda g: (g * np.cos(av),))
    if a.tangent is not None:
        out.tangent = mul(cos(primal(a)), a.tangent)
    return out


def cos(a):
    a = as_tensor(a)
    av = a.value
    out = custom(np.cos(av), (a,), lambda g: (-g * np.sin(av),))
    if a.tangent is not None:
        out.tangent = neg(mul(sin(primal(a)), a.tangent))
    return out


def exp(a):
    a = as_tensor(a)
    ev = np.exp(a.value)
    out = custom(ev, (a,), lambda g: (g * ev,))
    if a.tangent is not None:
        out.tangent = mul(primal(out), a.tangent)
    return out


def tanh(a):
    a = as_tensor(a)
    tv = np.tanh(a.value)
    out = custom(tv, (a,), lambda g: (g * (1.0 - tv * tv),))
    if a.tangent is not None:
        out.tangent = mul(sub(1.0, square(primal(out))), a.tangent)
    return out


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def sigmoid(a):
    a = as_tensor(a)
    s = _sigmoid(a.value)
    out = custom(s, (a,), lambda g: (g * s * (1.0 - s),))
    if a.tangent is not None:
        out.tangent = mul(dsigmoid(primal(a)), a.tangent)
    return out


def dsigmoid(a):
    """Derivative of the logistic function, s(1 - s)."""
    a = as_tensor(a)
    s = _sigmoid(a.value)
    d = s * (1.0 - s)
    return custom(d, (a,), lambda g: (g * d * (1.0 - 2.0 * s),))


def silu(a):
    a = as_tensor(a)
    av = a.value
    s = _sigmoid(av)
    out = custom(av * s, (a,), lambda g: (g * s * (1.0 + av * (1.0 - s)),))
    if a.tangent is not None:
        out.tangent = mul(dsilu(primal(a)), a.tangent)
    return out


def dsilu(a):
    """Derivative of silu, s(1 + x(1 - s)); its own vjp uses the second derivative."""
    a = as_tensor(a)
    av = a.value
    s = _sigmoid(av)
    d = s * (1.0 + av * (1.0 - s))
    d2 = s * (1.0 - s) * (2.0 + av * (1.0 - 2.0 * s))
    return custom(d, (a,), lambda g: (g * d2,))


def relu(a):
    # subgradient at 0 is 0
    a = as_tensor(a)
    mask = (a.value > 0).astype(np.float64)
    out = custom(a.value * mask, (a,), lambda g: (g * mask,))
    if a.tangent is not None:
        out.tangent = mul(mask, a.tangent)
    return out


def softplus(a):
    a = as_tensor(a)
    av = a.value
    s = _sigmoid(av)
    out = custom(np.logaddexp(0.0, av), (a,), lambda g: (g * s,))
    if a.tangent is not None:
        out.tangent = mul(sigmoid(primal(a)), a.tangent)
    return out


def square(a):
    a = as_tensor(a)
    av = a.value
    out = custom(av * av, (a,), lambda g: (2.0 * g * av,))
    if a.tangent is not None:
        out.tangent = mul(mul(2.0, primal(a)), a.tangent)
    return out


# reductions and structure ---------------------------------------------------


def sum(a, axis=None):  # noqa: A001 - mirrors numpy naming
    a = as_tensor(a)
    shape = a.shape

    def vjp(g):
        if axis is not None:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, shape).copy(),)

    out = custom(np.sum(a.value, axis=axis), (a,), vjp)
    if a.tangent is not None:
        out.tangent = sum(a.tangent, axis=axis)
    return out


def mean(a, axis=None):
    a = as_tensor(a)
    n = a.value.size if axis is None else a.shape[axis]
    return mul(sum(a, axis=axis), 1.0 / n)


def concat(tensors, axis=-1):
    tensors = [as_tensor(x) for x in tensors]
    vals = [x.value for x in tensors]
    ax = axis % vals[0].ndim
    splits = np.cumsum([v.shape[ax] for v in vals])[:-1]
    out = custom(
        np.concatenate(vals, axis=ax), tensors, lambda g: tuple(np.split(g, splits, axis=ax))
    )
    if any(x.tangent is not None for x in tensors):
        parts = [x.tangent if x.tangent is not None else np.zeros(x.shape) for x in tensors]
        out.tangent = concat(parts, axis=ax)
    return out


def take(a, index, axis=0):
    """Select along ``axis`` with a slice, an int, or an integer array."""
    a = as_tensor(a)
    shape = a.shape
    sl = [slice(None)] * a.ndim
    sl[axis] = index
    sl = tuple(sl)

    def vjp(g):
        full = np.zeros(shape)
        if isinstance(index, (slice, int, np.integer)):
            full[sl] = g
        else:
            np.add.at(full, sl, g)
        return (full,)

    out = custom(a.value[sl], (a,), vjp)
    if a.tangent is not None:
        out.tangent = take(a.tangent, index, axis)
    return out


def index(a, key):
    """General numpy indexing (basic or advanced) as a primitive."""
    a = as_tensor(a)
    shape = a.shape

    def vjp(g):
        full = np.zeros(shape)
        np.add.at(full, key, g)
        return (full,)

    out = custom(a.value[key], (a,), vjp)
    if a.tangent is not None:
        out.tangent = index(a.tangent, key)
    return out


def reshape(a, shape):
    a = as_tensor(a)
    old = a.shape
    out = custom(np.reshape(a.value, shape), (a,), lambda g: (np.reshape(g, old),))
    if a.tangent is not None:
        out.tangent = reshape(a.tangent, shape)
    return out


# checking -------------------------------------------------------------------


def grad_check(f, x, h=1e-6):
    """Max relative error between backward() and central differences.

    ``f`` maps a Tensor to a scalar Tensor; the error per coordinate is
    ``|analytic - numeric| / max(1, |analytic|)``.
    """
    if not 1e-8 <= h <= 1e-4:
        raise ValueError("h must lie in [1e-8, 1e-4]")
    x0 = np.array(x.value if isinstance(x, Tensor) else x, dtype=np.float64)
    with Tape() as tape:
        xv = tape.variable(x0)
        (analytic,) = tape.gradients(f(xv), [xv])
    numeric = np.zeros_like(x0)
    flat = x0.reshape(-1)
    for i in range(flat.size):
        xp = flat.copy()
        xm = flat.copy()
        xp[i] += h
        xm[i] -= h
        fp = f(Tensor(xp.reshape(x0.shape))).item()
        fm = f(Tensor(xm.reshape(x0.shape))).item()
        numeric.reshape(-1)[i] = (fp - fm) / (2 * h)
    err = np.abs(analytic - numeric) / np.maximum(1.0, np.abs(analytic))
    return float(err.max()) if err.size else 0.0
