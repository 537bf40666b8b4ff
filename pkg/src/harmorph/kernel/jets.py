"""Dense truncated Taylor jets with tensor-valued coefficients.

A :class:`Jet` carries a tensor value of shape ``S`` together with all of its
partial derivatives up to a fixed order with respect to ``dim`` chart
coordinates.  ``parts[k]`` has shape ``S + (dim,) * k`` and is symmetric in its
trailing ``k`` axes.  Arithmetic propagates the derivatives exactly (Leibniz
rule and Faa di Bruno up to third order), so a component function written once
with the helpers in this module evaluates either on plain floats or on jets.

The maximum supported order is 3.
"""

from __future__ import annotations

import itertools
import string
from numbers import Number

import numpy as np

from ..errors import ConfigError, ShapeError

MAX_ORDER = 3


def _sym3(a, b):
    """``a_xy b_z + a_xz b_y + a_yz b_x`` for ``a`` with two and ``b`` with one trailing axis."""
    t = a[..., :, :, None] * b[..., None, None, :]
    return t + t.swapaxes(-1, -2) + np.moveaxis(t, -1, -3)


class Jet:
    __slots__ = ("parts", "dim")
    # numpy must hand mixed expressions back to Jet's reflected operators
    __array_ufunc__ = None

    def __init__(self, parts, dim=None):
        parts = tuple(p if type(p) is np.ndarray and p.dtype == np.float64 else np.asarray(p, dtype=float) for p in parts)
        if not parts:
            raise ShapeError("a jet needs at least a value")
        if len(parts) - 1 > MAX_ORDER:
            raise ConfigError(f"jet order {len(parts) - 1} exceeds {MAX_ORDER}")
        if dim is None:
            if len(parts) < 2:
                raise ShapeError("order-0 jets need an explicit dim")
            dim = parts[1].shape[-1]
        self.parts = parts
        self.dim = int(dim)

    # ------------------------------------------------------------------ basics
    @classmethod
    def variable(cls, point, order):
        """Seed jet for the coordinate functions at ``point``."""
        p = np.asarray(point, dtype=float)
        d = p.shape[0]
        parts = [p]
        if order >= 1:
            parts.append(np.eye(d))
        for k in range(2, order + 1):
            parts.append(np.zeros((d,) * (k + 1)))
        return cls(parts, d)

    @classmethod
    def constant(cls, value, dim, order):
        v = np.asarray(value, dtype=float)
        return cls([v] + [np.zeros(v.shape + (dim,) * k) for k in range(1, order + 1)], dim)

    @property
    def value(self):
        return self.parts[0]

    @property
    def order(self):
        return len(self.parts) - 1

    @property
    def shape(self):
        return self.parts[0].shape

    @property
    def ndim(self):
        return self.parts[0].ndim

    def __len__(self):
        return self.shape[0]

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def __repr__(self):
        return f"Jet(shape={self.shape}, dim={self.dim}, order={self.order}, value={self.value!r})"

    def derivative(self, k):
        """Array of all ``k``-th partials (``k = 0`` is the value)."""
        return self.parts[k]

    def truncate(self, order):
        return Jet(self.parts[: order + 1], self.dim)

    def grad(self):
        """Jet of the gradient: value ``parts[1]``, one order lower."""
        if self.order < 1:
            raise ConfigError("cannot differentiate an order-0 jet")
        return Jet(self.parts[1:], self.dim)

    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.dim != self.dim:
                raise ShapeError(f"jet dims differ: {self.dim} vs {other.dim}")
            return other
        return Jet.constant(other, self.dim, self.order)

    # -------------------------------------------------------------- arithmetic
    def __add__(self, other):
        o = self._coerce(other)
        n = min(self.order, o.order)
        return Jet([self.parts[k] + o.parts[k] for k in range(n + 1)], self.dim)

    __radd__ = __add__

    def __neg__(self):
        return Jet([-p for p in self.parts], self.dim)

    def __pos__(self):
        return self

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, (Number, np.ndarray)) and not isinstance(other, Jet):
            c = np.asarray(other, dtype=float)
            return Jet([p * c.reshape(c.shape + (1,) * k) for k, p in enumerate(self.parts)], self.dim)
        g = self._coerce(other)
        f = self
        n = min(f.order, g.order)
        f0, g0 = f.parts[0], g.parts[0]
        out = [f0 * g0]
        if n >= 1:
            f1, g1 = f.parts[1], g.parts[1]
            out.append(f1 * g0[..., None] + f0[..., None] * g1)
        if n >= 2:
            f2, g2 = f.parts[2], g.parts[2]
            c = f1[..., :, None] * g1[..., None, :]
            out.append(
                f2 * g0[..., None, None] + c + c.swapaxes(-1, -2) + f0[..., None, None] * g2
            )
        if n >= 3:
            f3, g3 = f.parts[3], g.parts[3]
            out.append(
                f3 * g0[..., None, None, None]
                + _sym3(f2, g1)
                + _sym3(g2, f1)
                + f0[..., None, None, None] * g3
            )
        return Jet(out, self.dim)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return self * (1.0 / np.asarray(other, dtype=float))

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, a):
        if isinstance(a, Jet):
            return exp(a * log(self))
        if a == 2:
            return self * self
        if a == 1:
            return self
        a = float(a)
        x = self.value
        return self._compose(
            [x**a, a * x ** (a - 1), a * (a - 1) * x ** (a - 2), a * (a - 1) * (a - 2) * x ** (a - 3)]
        )

    def reciprocal(self):
        x = self.value
        r = 1.0 / x
        return self._compose([r, -(r**2), 2 * r**3, -6 * r**4])

    def _compose(self, derivs):
        """Apply an elementwise function given its derivatives at the value."""
        f = self.parts
        derivs = [np.asarray(d, dtype=float) for d in derivs]
        out = [derivs[0]]
        if self.order >= 1:
            d1 = derivs[1][..., None]
            out.append(d1 * f[1])
        if self.order >= 2:
            oo = f[1][..., :, None] * f[1][..., None, :]
            out.append(derivs[2][..., None, None] * oo + derivs[1][..., None, None] * f[2])
        if self.order >= 3:
            ooo = oo[..., None] * f[1][..., None, None, :]
            out.append(
                derivs[3][..., None, None, None] * ooo
                + derivs[2][..., None, None, None] * _sym3(f[2], f[1])
                + derivs[1][..., None, None, None] * f[3]
            )
        return Jet(out, self.dim)

    # ---------------------------------------------------------------- indexing
    def __getitem__(self, idx):
        if idx is Ellipsis or (isinstance(idx, tuple) and any(i is Ellipsis for i in idx)):
            raise ShapeError("Ellipsis indexing is ambiguous on jets")
        return Jet([p[idx] for p in self.parts], self.dim)

    def sum(self, axis=None):
        nd = self.ndim
        if axis is None:
            axis = tuple(range(nd))
        elif isinstance(axis, int):
            axis = (axis,)
        axis = tuple(a % nd for a in axis)
        return Jet([p.sum(axis=axis) for p in self.parts], self.dim)

    def transpose(self, *axes):
        nd = self.ndim
        if not axes:
            axes = tuple(reversed(range(nd)))
        elif len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return Jet(
            [p.transpose(tuple(axes) + tuple(range(nd, nd + k))) for k, p in enumerate(self.parts)],
            self.dim,
        )

    @property
    def T(self):
        return self.transpose()


# ---------------------------------------------------------------------------
# elementwise functions usable on floats, arrays and jets
# ---------------------------------------------------------------------------

def exp(x):
    if isinstance(x, Jet):
        e = np.exp(x.value)
        return x._compose([e, e, e, e])
    return np.exp(x)


def log(x):
    if isinstance(x, Jet):
        v = x.value
        return x._compose([np.log(v), 1 / v, -1 / v**2, 2 / v**3])
    return np.log(x)


def sqrt(x):
    if isinstance(x, Jet):
        return x**0.5
    return np.sqrt(x)


def sin(x):
    if isinstance(x, Jet):
        s, c = np.sin(x.value), np.cos(x.value)
        return x._compose([s, c, -s, -c])
    return np.sin(x)


def cos(x):
    if isinstance(x, Jet):
        s, c = np.sin(x.value), np.cos(x.value)
        return x._compose([c, -s, -c, s])
    return np.cos(x)


def tanh(x):
    if isinstance(x, Jet):
        t = np.tanh(x.value)
        s = 1 - t**2
        return x._compose([t, s, -2 * t * s, -2 * s * (1 - 3 * t**2)])
    return np.tanh(x)


# ---------------------------------------------------------------------------
# assembly helpers
# ---------------------------------------------------------------------------

def _first_jet(items):
    for it in items:
        if isinstance(it, Jet):
            return it
        if isinstance(it, (list, tuple)):
            j = _first_jet(it)
            if j is not None:
                return j
    return None


def stack(items, axis=0):
    """``np.stack`` that accepts a mix of jets and constants."""
    items = list(items)
    ref = _first_jet(items)
    if ref is None:
        return np.stack([np.asarray(i, dtype=float) for i in items], axis=axis)
    order = min(i.order for i in items if isinstance(i, Jet))
    js = [i.truncate(order) if isinstance(i, Jet) else Jet.constant(i, ref.dim, order) for i in items]
    return Jet([np.stack([j.parts[k] for j in js], axis=axis) for k in range(order + 1)], ref.dim)


def array(nested):
    """Build a tensor (ndarray or Jet) from nested lists of scalars and jets."""
    if isinstance(nested, Jet):
        return nested
    if isinstance(nested, np.ndarray) and nested.dtype != object:
        return nested.astype(float)
    if isinstance(nested, (list, tuple, np.ndarray)):
        return stack([array(x) for x in nested])
    return np.asarray(nested, dtype=float)


def as_jet(obj, dim, order):
    """Promote the output of a component function to a jet."""
    obj = array(obj)
    if isinstance(obj, Jet):
        return obj.truncate(order) if obj.order > order else obj
    return Jet.constant(obj, dim, order)


def value_of(obj):
    return obj.value if isinstance(obj, Jet) else np.asarray(obj, dtype=float)


_LETTERS = string.ascii_uppercase


def einsum(spec, a, b):
    """Binary einsum over value axes with the Leibniz rule on derivative axes.

    ``spec`` must be explicit (``"ij,jk->ik"``) and use lowercase labels only.
    Either operand may be a plain array.
    """
    if not isinstance(a, Jet) and not isinstance(b, Jet):
        return np.einsum(spec, a, b)
    ref = a if isinstance(a, Jet) else b
    a = ref._coerce(a) if not isinstance(a, Jet) else a
    b = ref._coerce(b) if not isinstance(b, Jet) else b
    lhs, out = spec.split("->")
    sa, sb = lhs.split(",")
    order = min(a.order, b.order)
    parts = []
    for m in range(order + 1):
        labels = _LETTERS[:m]
        acc = None
        for ka in range(m + 1):
            for sub in itertools.combinations(range(m), ka):
                la = "".join(labels[i] for i in sub)
                lb = "".join(labels[i] for i in range(m) if i not in sub)
                term = np.einsum(f"{sa}{la},{sb}{lb}->{out}{labels}", a.parts[ka], b.parts[m - ka])
                acc = term if acc is None else acc + term
        parts.append(acc)
    return Jet(parts, ref.dim)


def matmul(a, b):
    return einsum("ij,jk->ik", a, b)


def matvec(a, v):
    return einsum("ij,j->i", a, v)


def inv(a):
    """Inverse of a square matrix jet by Newton-Schulz doubling.

    Each step ``X <- X (2I - A X)`` doubles the number of exact Taylor orders,
    starting from the exact inverse of the value.
    """
    if not isinstance(a, Jet):
        return np.linalg.inv(a)
    n = a.shape[0]
    x = Jet.constant(np.linalg.inv(a.value), a.dim, a.order)
    exact = 0
    eye2 = 2.0 * np.eye(n)
    while exact < a.order:
        x = matmul(x, -matmul(a, x) + eye2)
        exact = 2 * exact + 1
    return x
