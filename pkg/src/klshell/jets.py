"""Truncated bivariate Taylor arithmetic ("jets") over the parametric square.

A jet of order J stores the Taylor coefficients c_ab = d^(a+b) f / (a! b!) for
a + b <= J at an expansion point, vectorized over a trailing batch of points.
All surface-mechanics fields (metrics, curvatures, stresses, divergences) are
closed under +, *, /, sqrt and elementary transcendentals, so manufactured
strong-form loads and boundary data reduce to jet arithmetic plus coefficient
shifts for partial derivatives.  Coefficient arrays are either float64 ndarrays
or :class:`~klshell.ddarith.DD` pairs; the same code path serves both.
"""

from functools import lru_cache
from math import factorial

import numpy as np

from .ddarith import DD

__all__ = ["Jet", "jet_from_partials", "partials_from_jet", "jet_variable",
           "jet_constant"]


@lru_cache(maxsize=None)
def _indices(order):
    """Graded list of multi-indices (a, b) with a + b <= order."""
    idx = [(a, b) for d in range(order + 1) for a in range(d, -1, -1)
           for b in [d - a]]
    return tuple(idx)


@lru_cache(maxsize=None)
def _index_map(order):
    return {ab: t for t, ab in enumerate(_indices(order))}


@lru_cache(maxsize=None)
def _mul_plan(order):
    """Pair lists (i, j) and output segments for truncated convolution."""
    idx = _indices(order)
    pos = _index_map(order)
    by_out = [[] for _ in idx]
    for i, (a1, b1) in enumerate(idx):
        for j, (a2, b2) in enumerate(idx):
            if a1 + a2 + b1 + b2 <= order:
                by_out[pos[(a1 + a2, b1 + b2)]].append((i, j))
    lefts, rights, seg_bounds = [], [], [0]
    for pairs in by_out:
        for i, j in pairs:
            lefts.append(i)
            rights.append(j)
        seg_bounds.append(len(lefts))
    return (np.array(lefts), np.array(rights), tuple(seg_bounds))


@lru_cache(maxsize=None)
def _deriv_plan(order, axis):
    """Gather indices and factors mapping order -> order-1 coefficients."""
    src_pos = _index_map(order)
    gather, factors = [], []
    for a, b in _indices(order - 1):
        ab = (a + 1, b) if axis == 0 else (a, b + 1)
        gather.append(src_pos[ab])
        factors.append(float(ab[axis]))
    return np.array(gather), np.array(factors)


def _is_dd(coef):
    return isinstance(coef, DD)


def _zeros(like, nterms):
    shape = (nterms,) + like.shape[1:]
    if _is_dd(like):
        return DD(np.zeros(shape), np.zeros(shape))
    return np.zeros(shape)


def _segsum_rows(prod, seg_bounds):
    """Sum contiguous row segments of ``prod`` into one row per segment."""
    nseg = len(seg_bounds) - 1
    if _is_dd(prod):
        out = _zeros(prod, nseg)
        for t in range(nseg):
            lo, hi = seg_bounds[t], seg_bounds[t + 1]
            acc = prod[lo]
            for r in range(lo + 1, hi):
                acc = acc + prod[r]
            out[t] = acc
        return out
    return np.add.reduceat(prod, seg_bounds[:-1], axis=0)


class Jet:
    """Batch of truncated bivariate Taylor expansions."""

    __slots__ = ("order", "coef")

    def __init__(self, order, coef):
        self.order = order
        self.coef = coef

    @property
    def value(self):
        return self.coef[0]

    def _like(self, coef):
        return Jet(self.order, coef)

    def __neg__(self):
        return self._like(-self.coef)

    def __add__(self, other):
        if isinstance(other, Jet):
            a, b = _match(self, other)
            return Jet(a.order, a.coef + b.coef)
        out = _copy(self.coef)
        out[0] = out[0] + other
        return self._like(out)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other if isinstance(other, Jet) else -_asarr(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return self._like(self.coef * other)
        a, b = _match(self, other)
        lefts, rights, segs = _mul_plan(a.order)
        prod = a.coef[lefts] * b.coef[rights]
        return Jet(a.order, _segsum_rows(prod, segs))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return self._like(self.coef * (1.0 / _asarr(other)))
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def reciprocal(self):
        """Newton iteration r <- r (2 - f r); exact at truncation order."""
        seed = 1.0 / self.value
        r = jet_constant(seed, self.order)
        for _ in range(_newton_steps(self.order)):
            r = r * (2.0 - self * r)
        return r

    def sqrt(self):
        """Via Newton on the inverse square root (division free)."""
        v = self.value
        seed = 1.0 / v.sqrt() if _is_dd(v) else 1.0 / np.sqrt(v)
        y = jet_constant(seed, self.order)
        for _ in range(_newton_steps(self.order)):
            y = y * (3.0 - self * y * y) * 0.5
        return self * y

    def _nilpotent_powers(self):
        g = _copy(self.coef)
        g[0] = g[0] * 0.0
        gj = Jet(self.order, g)
        powers = [gj]
        for _ in range(self.order - 1):
            powers.append(powers[-1] * gj)
        return powers

    def _series(self, even_coeffs, odd_coeffs, f_even, f_odd):
        """f(x0 + g) = f_even * sum(even_coeffs g^2k) + f_odd * sum(...)."""
        pw = self._nilpotent_powers()
        even = jet_constant(_ones_like(self.value), self.order)
        odd = jet_constant(_ones_like(self.value) * 0.0, self.order)
        for k, c in enumerate(even_coeffs[1:], start=1):
            if 2 * k - 1 < len(pw) and c != 0.0:
                even = even + pw[2 * k - 1] * c
        for k, c in enumerate(odd_coeffs):
            deg = 2 * k + 1
            if deg - 1 < len(pw) and c != 0.0:
                odd = odd + pw[deg - 1] * c
        return even * f_even + odd * f_odd

    def exp(self):
        v = self.value
        e0 = _apply(np.exp, v)
        pw = self._nilpotent_powers()
        acc = jet_constant(_ones_like(v), self.order)
        for k in range(1, self.order + 1):
            acc = acc + pw[k - 1] * (1.0 / factorial(k))
        return acc * e0

    def sin(self):
        v = self.value
        s0, c0 = _apply(np.sin, v), _apply(np.cos, v)
        cos_g = [(-1.0) ** k / factorial(2 * k) for k in range(self.order // 2 + 1)]
        sin_g = [(-1.0) ** k / factorial(2 * k + 1)
                 for k in range((self.order + 1) // 2)]
        return self._series(cos_g, sin_g, s0, c0)

    def cos(self):
        v = self.value
        s0, c0 = _apply(np.sin, v), _apply(np.cos, v)
        cos_g = [(-1.0) ** k / factorial(2 * k) for k in range(self.order // 2 + 1)]
        sin_g = [-((-1.0) ** k) / factorial(2 * k + 1)
                 for k in range((self.order + 1) // 2)]
        return self._series(cos_g, sin_g, c0, s0)

    def deriv(self, axis):
        """Partial derivative; drops the truncation order by one."""
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        gather, fac = _deriv_plan(self.order, axis)
        coef = self.coef[gather]
        if _is_dd(coef):
            coef = coef * fac.reshape((-1,) + (1,) * (coef.hi.ndim - 1))
        else:
            coef = coef * fac.reshape((-1,) + (1,) * (coef.ndim - 1))
        return Jet(self.order - 1, coef)

    def truncate(self, order):
        if order > self.order:
            raise ValueError("cannot extend a jet")
        n = len(_indices(order))
        return Jet(order, self.coef[:n])


def _newton_steps(order):
    steps, reach = 0, 1
    while reach < order + 1:
        reach *= 2
        steps += 1
    return max(steps, 1)


def _asarr(x):
    return x if isinstance(x, (DD, np.ndarray)) else np.asarray(x, dtype=float)


def _copy(coef):
    return coef.copy()


def _ones_like(v):
    if _is_dd(v):
        return DD(np.ones_like(v.hi))
    return np.ones_like(v)


def _apply(fn, v):
    """Elementary function on the constant term; dd gets a first-order lift."""
    if _is_dd(v):
        base = fn(v.hi)
        if fn is np.exp:
            dfn = base
        elif fn is np.sin:
            dfn = np.cos(v.hi)
        elif fn is np.cos:
            dfn = -np.sin(v.hi)
        else:
            raise NotImplementedError(fn)
        return DD(base) + DD(dfn) * DD(v.lo)
    return fn(v)


def _match(a, b):
    if a.order == b.order:
        return a, b
    if a.order < b.order:
        return a, b.truncate(a.order)
    return a.truncate(b.order), b


def jet_constant(value, order):
    value = _asarr(value)
    nterms = len(_indices(order))
    if _is_dd(value):
        coef = DD(np.zeros((nterms,) + value.hi.shape),
                  np.zeros((nterms,) + value.hi.shape))
    else:
        value = np.asarray(value, dtype=float)
        coef = np.zeros((nterms,) + value.shape)
    coef[0] = value
    return Jet(order, coef)


def jet_variable(value, axis, order):
    """Jet of the coordinate function xi^(axis+1) expanded at ``value``."""
    j = jet_constant(value, order)
    if order == 0:
        return j
    one = (1, 0) if axis == 0 else (0, 1)
    t = _index_map(order)[one]
    j.coef[t] = _ones_like(j.coef[0])
    return j


def jet_from_partials(partials, order):
    """Build a jet batch from a mixed-partial table.

    ``partials[..., a, b]`` (trailing two axes) are plain partial derivatives;
    batch axes lead.  Returns a jet with batch shape equal to the leading axes.
    """
    arr = partials
    dd = _is_dd(arr)
    idx = _indices(order)
    rows = []
    for a, b in idx:
        w = 1.0 / (factorial(a) * factorial(b))
        rows.append(arr[..., a, b] * w)
    if dd:
        coef = DD(np.stack([r.hi for r in rows]), np.stack([r.lo for r in rows]))
    else:
        coef = np.stack(rows)
    return Jet(order, coef)


def partials_from_jet(jet):
    """Mixed-partial table (..., order+1, order+1) from a jet batch."""
    idx = _indices(jet.order)
    v = jet.value
    shape = v.hi.shape if _is_dd(v) else v.shape
    n = jet.order + 1
    if _is_dd(v):
        out = DD(np.zeros(shape + (n, n)), np.zeros(shape + (n, n)))
    else:
        out = np.zeros(shape + (n, n))
    for t, (a, b) in enumerate(idx):
        out[..., a, b] = jet.coef[t] * float(factorial(a) * factorial(b))
    return out
