"""Vectorized double-double (compensated) arithmetic on numpy arrays.

A value is an unevaluated sum hi + lo of two doubles with |lo| <= 0.5 ulp(hi),
giving roughly 31 significant digits.  Error-free transforms follow Dekker and
Knuth (two_sum / two_prod with Dekker splitting; no FMA dependence).  Used for
manufactured-load evaluation and for iterative-refinement residuals.
"""

import numpy as np

__all__ = ["DD", "two_sum", "two_prod", "dd_sum", "residual_dd"]

_SPLITTER = 134217729.0  # 2^27 + 1


def two_sum(a, b):
    """Error-free sum: s + err == a + b exactly."""
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def _quick_two_sum(a, b):
    """two_sum assuming |a| >= |b|."""
    s = a + b
    err = b - (s - a)
    return s, err


def _split(a):
    c = _SPLITTER * a
    abig = c - a
    ahi = c - abig
    return ahi, a - ahi


def two_prod(a, b):
    """Error-free product: p + err == a * b exactly."""
    p = a * b
    ahi, alo = _split(a)
    bhi, blo = _split(b)
    err = ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo
    return p, err


class DD:
    """Array of double-double numbers, shaped like its ``hi`` component."""

    __slots__ = ("hi", "lo")

    def __init__(self, hi, lo=None):
        self.hi = np.asarray(hi, dtype=float)
        self.lo = np.zeros_like(self.hi) if lo is None else np.asarray(lo, dtype=float)

    @property
    def shape(self):
        return self.hi.shape

    def to_float(self):
        return self.hi + self.lo

    def copy(self):
        return DD(self.hi.copy(), self.lo.copy())

    def __getitem__(self, idx):
        return DD(self.hi[idx], self.lo[idx])

    def __setitem__(self, idx, value):
        value = _as_dd(value)
        self.hi[idx] = value.hi
        self.lo[idx] = value.lo

    def reshape(self, *shape):
        return DD(self.hi.reshape(*shape), self.lo.reshape(*shape))

    def __neg__(self):
        return DD(-self.hi, -self.lo)

    def __add__(self, other):
        other = _as_dd(other)
        s, e = two_sum(self.hi, other.hi)
        t, f = two_sum(self.lo, other.lo)
        e = e + t
        s, e = _quick_two_sum(s, e)
        e = e + f
        hi, lo = _quick_two_sum(s, e)
        return DD(hi, lo)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-_as_dd(other))

    def __rsub__(self, other):
        return _as_dd(other) + (-self)

    def __mul__(self, other):
        other = _as_dd(other)
        p, e = two_prod(self.hi, other.hi)
        e = e + (self.hi * other.lo + self.lo * other.hi)
        hi, lo = _quick_two_sum(p, e)
        return DD(hi, lo)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _as_dd(other)
        q1 = self.hi / other.hi
        r = self - other * DD(q1)
        q2 = r.hi / other.hi
        r = r - other * DD(q2)
        q3 = r.hi / other.hi
        hi, lo = _quick_two_sum(q1, q2)
        hi, lo = _quick_two_sum(hi, lo + q3)
        return DD(hi, lo)

    def __rtruediv__(self, other):
        return _as_dd(other) / self

    def sqrt(self):
        """Newton step on a correctly rounded double seed."""
        y = np.sqrt(self.hi)
        ydd = DD(y)
        r = self - ydd * ydd
        hi, lo = _quick_two_sum(y, r.hi / (2.0 * y))
        return DD(hi, lo)


def _as_dd(x):
    if isinstance(x, DD):
        return x
    return DD(np.asarray(x, dtype=float))


def dd_sum(value: DD, axis: int = 0) -> DD:
    """Pairwise tree reduction with full double-double additions."""
    hi = np.moveaxis(value.hi, axis, 0)
    lo = np.moveaxis(value.lo, axis, 0)
    acc = DD(hi, lo)
    n = acc.hi.shape[0]
    while n > 1:
        half = n // 2
        even = acc[: 2 * half: 2] + acc[1: 2 * half: 2]
        if n % 2:
            tail = acc[n - 1: n]
            acc = DD(np.concatenate([even.hi, tail.hi]),
                     np.concatenate([even.lo, tail.lo]))
            n = half + 1
        else:
            acc = even
            n = half
    return acc[0]


def residual_dd(K, x, F):
    """F - K @ x with products and accumulation in double-double.

    Returns the residual as a DD vector; ``K`` is dense (n, n).
    """
    K = np.asarray(K, dtype=float)
    x = np.asarray(x, dtype=float)
    n = K.shape[0]
    out = DD(np.asarray(F, dtype=float).copy())
    block = max(1, int(2**22 // max(n, 1)))
    for start in range(0, n, block):
        rows = slice(start, min(start + block, n))
        p, e = two_prod(K[rows], x[None, :])
        s = dd_sum(DD(p, e), axis=1)
        out[rows] = out[rows] - s
    return out
