"""B-spline / NURBS evaluation and refinement for single-patch surfaces.

Univariate basis functions and their derivatives follow the triangular-table
recurrence (Piegl & Tiller, "The NURBS Book", algorithms A2.1-A2.3).  Rational
surface derivatives are obtained from the polynomial numerator/denominator
tables with the generalized Leibniz rule.  Refinement of the one-element
biquadratic master patch proceeds by Bezier degree elevation followed by
uniform knot insertion, both acting on projective (weighted) control points so
the mapped surface is unchanged.
"""

import json
import warnings
from dataclasses import dataclass
from math import comb

import numpy as np

__all__ = [
    "KnotVector",
    "BasisEval",
    "NurbsPatch",
    "SurfaceJet",
    "find_span",
    "eval_basis",
    "eval_surface",
    "surface_partials",
    "nurbs_basis_partials",
    "refine",
    "unit_square_patch",
]


class SplineError(ValueError):
    """Invalid knot vector, degree or control net."""


@dataclass(frozen=True)
class KnotVector:
    """Open knot vector on [0, 1] with maximal interior smoothness."""

    values: np.ndarray
    degree: int

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        p = self.degree
        if p < 1:
            raise SplineError(f"degree must be >= 1, got {p}")
        if vals.ndim != 1 or len(vals) < 2 * (p + 1):
            raise SplineError("knot vector too short for degree")
        if np.any(np.diff(vals) < 0.0):
            raise SplineError("knot vector must be non-decreasing")
        if vals[0] != 0.0 or vals[-1] != 1.0:
            raise SplineError("knot vector must span [0, 1]")
        if np.any(vals[: p + 1] != 0.0) or np.any(vals[-(p + 1):] != 1.0):
            raise SplineError("knot vector must be open (p+1 repeats at ends)")
        interior = vals[p + 1: -(p + 1)]
        if interior.size and np.any(np.diff(interior) <= 0.0):
            raise SplineError("interior knots must be strictly increasing")
        if interior.size and (interior[0] <= 0.0 or interior[-1] >= 1.0):
            raise SplineError("interior knots must lie strictly inside (0, 1)")

    @property
    def n_basis(self):
        return len(self.values) - self.degree - 1

    @property
    def breakpoints(self):
        """Distinct knot values (element boundaries)."""
        return np.unique(self.values)

    @property
    def n_elements(self):
        return len(self.breakpoints) - 1

    def greville(self):
        """Greville abscissae (knot averages)."""
        p = self.degree
        return np.array([self.values[i + 1: i + p + 1].mean()
                         for i in range(self.n_basis)])


@dataclass(frozen=True)
class BasisEval:
    """Values and derivatives of the p+1 active functions at one point.

    ``table[k, j]`` holds the k-th derivative of the j-th active function,
    with global function index ``span - p + j``.
    """

    span: int
    table: np.ndarray


def find_span(knots: KnotVector, xi: float) -> int:
    """Index k with values[k] <= xi < values[k+1] (right-closed at xi=1)."""
    if not 0.0 <= xi <= 1.0:
        raise SplineError(f"parameter {xi} outside [0, 1]")
    p = knots.degree
    hi = knots.n_basis - 1
    k = int(np.searchsorted(knots.values, xi, side="right")) - 1
    return min(max(k, p), hi)


def _find_spans(knots, xi):
    xi = np.asarray(xi, dtype=float)
    if np.any(xi < 0.0) or np.any(xi > 1.0):
        raise SplineError("parameter outside [0, 1]")
    k = np.searchsorted(knots.values, xi, side="right") - 1
    return np.clip(k, knots.degree, knots.n_basis - 1)


def _ders_one_point(U, p, span, xi, n):
    """Triangular-table basis derivatives at one point (A2.3)."""
    ndu = np.empty((p + 1, p + 1))
    ndu[0, 0] = 1.0
    left = np.empty(p + 1)
    right = np.empty(p + 1)
    for j in range(1, p + 1):
        left[j] = xi - U[span + 1 - j]
        right[j] = U[span + j] - xi
        saved = 0.0
        for r in range(j):
            ndu[j, r] = right[r + 1] + left[j - r]
            temp = ndu[r, j - 1] / ndu[j, r]
            ndu[r, j] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        ndu[j, j] = saved

    ders = np.zeros((n + 1, p + 1))
    ders[0, :] = ndu[:, p]
    a = np.empty((2, p + 1))
    for r in range(p + 1):
        s1, s2 = 0, 1
        a[0, 0] = 1.0
        for k in range(1, min(n, p) + 1):
            d = 0.0
            rk = r - k
            pk = p - k
            if r >= k:
                a[s2, 0] = a[s1, 0] / ndu[pk + 1, rk]
                d = a[s2, 0] * ndu[rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = k - 1 if r - 1 <= pk else p - r
            for j in range(j1, j2 + 1):
                a[s2, j] = (a[s1, j] - a[s1, j - 1]) / ndu[pk + 1, rk + j]
                d += a[s2, j] * ndu[rk + j, pk]
            if r <= pk:
                a[s2, k] = -a[s1, k - 1] / ndu[pk + 1, r]
                d += a[s2, k] * ndu[r, pk]
            ders[k, r] = d
            s1, s2 = s2, s1

    fac = float(p)
    for k in range(1, min(n, p) + 1):
        ders[k, :] *= fac
        fac *= p - k
    return ders


def eval_basis(knots: KnotVector, xi: float, n_d: int) -> BasisEval:
    """Values and derivatives (orders 0..n_d) of the active basis functions.

    Orders above the degree are exactly zero.  Requires 0 <= n_d <= p + 2.
    """
    p = knots.degree
    if not 0 <= n_d <= p + 2:
        raise SplineError(f"derivative order {n_d} outside [0, {p + 2}]")
    span = find_span(knots, xi)
    return BasisEval(span, _ders_one_point(knots.values, p, span, xi, n_d))


def basis_ders_many(knots, xi, n_d):
    """Spans and derivative tables for an array of parameters.

    Returns ``(spans, tables)`` with ``tables[q, k, j]`` the k-th derivative of
    the j-th active function at ``xi[q]``.
    """
    xi = np.asarray(xi, dtype=float)
    spans = _find_spans(knots, xi)
    p = knots.degree
    tables = np.empty((len(xi), n_d + 1, p + 1))
    cache = {}
    for q, (s, x) in enumerate(zip(spans, xi)):
        key = (int(s), float(x))
        tab = cache.get(key)
        if tab is None:
            tab = _ders_one_point(knots.values, p, int(s), float(x), n_d)
            cache[key] = tab
        tables[q] = tab
    return spans, tables


@dataclass(frozen=True)
class NurbsPatch:
    """Tensor-product rational surface patch.

    ``control_points`` has shape (n1, n2, 3) and ``weights`` (n1, n2), with
    the first index running along xi^1.
    """

    degrees: tuple
    knots: tuple
    control_points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        cp = np.asarray(self.control_points, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "control_points", cp)
        object.__setattr__(self, "weights", w)
        ku, kv = self.knots
        if (ku.degree, kv.degree) != tuple(self.degrees):
            raise SplineError("degrees do not match knot vectors")
        if cp.shape != (ku.n_basis, kv.n_basis, 3):
            raise SplineError(
                f"control net shape {cp.shape} does not match knot arithmetic "
                f"({ku.n_basis} x {kv.n_basis})")
        if w.shape != (ku.n_basis, kv.n_basis):
            raise SplineError("weight array shape mismatch")
        if np.any(w <= 0.0):
            raise SplineError("all weights must be positive")

    @property
    def projective(self):
        """Weighted control net (n1, n2, 4): (w*P, w)."""
        pw = np.empty(self.control_points.shape[:2] + (4,))
        pw[..., :3] = self.control_points * self.weights[..., None]
        pw[..., 3] = self.weights
        return pw

    def diameter(self):
        """Max pairwise distance of the control net (bounds the surface)."""
        pts = self.control_points.reshape(-1, 3)
        d = pts[:, None, :] - pts[None, :, :]
        return float(np.sqrt((d ** 2).sum(-1)).max())

    def to_json(self):
        ku, kv = self.knots
        n1 = ku.n_basis
        # Flat ordering: index i (along xi^1) varies fastest.
        cps = [list(self.control_points[i, j])
               for j in range(kv.n_basis) for i in range(n1)]
        ws = [float(self.weights[i, j])
              for j in range(kv.n_basis) for i in range(n1)]
        return json.dumps({
            "degrees": list(self.degrees),
            "knots": [list(map(float, ku.values)), list(map(float, kv.values))],
            "control_points": cps,
            "weights": ws,
        })

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        p1, p2 = data["degrees"]
        ku = KnotVector(np.array(data["knots"][0]), p1)
        kv = KnotVector(np.array(data["knots"][1]), p2)
        n1, n2 = ku.n_basis, kv.n_basis
        cp = np.empty((n1, n2, 3))
        w = np.empty((n1, n2))
        flat_cp = data["control_points"]
        flat_w = data["weights"]
        for j in range(n2):
            for i in range(n1):
                cp[i, j] = flat_cp[j * n1 + i]
                w[i, j] = flat_w[j * n1 + i]
        return cls((p1, p2), (ku, kv), cp, w)


@dataclass(frozen=True)
class SurfaceJet:
    """Partial derivatives of the geometric map at one parametric point.

    ``partials[a, b]`` is the 3-vector d^(a+b) x / d(xi^1)^a d(xi^2)^b;
    mixed-partial symmetry is structural in this storage.
    """

    xi: tuple
    order: int
    partials: np.ndarray

    @property
    def x(self):
        return self.partials[0, 0]

    def d(self, a, b):
        return self.partials[a, b]


def _binom_table(n):
    return np.array([[comb(a, k) if k <= a else 0 for k in range(n + 1)]
                     for a in range(n + 1)], dtype=float)


def surface_partials(patch: NurbsPatch, xi1, xi2, order: int):
    """Rational surface partials on an array of points.

    Returns an array of shape (npts, order+1, order+1, 3) holding all mixed
    partials with each directional order <= ``order``.
    """
    xi1 = np.atleast_1d(np.asarray(xi1, dtype=float))
    xi2 = np.atleast_1d(np.asarray(xi2, dtype=float))
    if xi1.shape != xi2.shape:
        raise SplineError("xi1 and xi2 must have matching shapes")
    ku, kv = patch.knots
    p1, p2 = patch.degrees
    su, tu = basis_ders_many(ku, xi1, order)
    sv, tv = basis_ders_many(kv, xi2, order)
    pw = patch.projective

    npts = len(xi1)
    # Gather the active (p1+1)x(p2+1) projective control nets per point.
    iu = (su[:, None] - p1) + np.arange(p1 + 1)[None, :]
    iv = (sv[:, None] - p2) + np.arange(p2 + 1)[None, :]
    local = pw[iu[:, :, None], iv[:, None, :], :]          # (npts, p1+1, p2+1, 4)

    # Numerator/denominator derivative tables A^(a,b).
    aw = np.einsum("qai,qbj,qijc->qabc", tu, tv, local)    # (npts, o+1, o+1, 4)
    wtab = aw[..., 3]
    if np.any(wtab[:, 0, 0] <= 0.0):
        raise SplineError("non-positive weight function value")

    bino = _binom_table(order)
    out = np.empty((npts, order + 1, order + 1, 3))
    for a in range(order + 1):
        for b in range(order + 1):
            acc = aw[:, a, b, :3].copy()
            for k in range(a + 1):
                for l in range(b + 1):
                    if k == 0 and l == 0:
                        continue
                    c = bino[a, k] * bino[b, l]
                    acc -= c * wtab[:, k, l, None] * out[:, a - k, b - l, :]
            out[:, a, b, :] = acc / wtab[:, 0, 0, None]
    return out


def eval_surface(patch: NurbsPatch, xi, order: int = 4) -> SurfaceJet:
    """Map and derivatives at a single parametric point."""
    if order < 0:
        raise SplineError("order must be non-negative")
    table = surface_partials(patch, [xi[0]], [xi[1]], order)[0]
    return SurfaceJet((float(xi[0]), float(xi[1])), order, table)


def nurbs_basis_partials(patch: NurbsPatch, xi1, xi2, order: int):
    """Partial derivatives of all active rational basis functions.

    Returns ``(funcs, ders)`` where ``funcs[q, f]`` is the global flat index
    (i * n2 + j) of the f-th active function at point q and
    ``ders[q, a, b, f]`` its mixed partial of order (a, b).
    """
    xi1 = np.atleast_1d(np.asarray(xi1, dtype=float))
    xi2 = np.atleast_1d(np.asarray(xi2, dtype=float))
    ku, kv = patch.knots
    p1, p2 = patch.degrees
    su, tu = basis_ders_many(ku, xi1, order)
    sv, tv = basis_ders_many(kv, xi2, order)

    npts = len(xi1)
    nloc = (p1 + 1) * (p2 + 1)
    iu = (su[:, None] - p1) + np.arange(p1 + 1)[None, :]
    iv = (sv[:, None] - p2) + np.arange(p2 + 1)[None, :]
    funcs = (iu[:, :, None] * kv.n_basis + iv[:, None, :]).reshape(npts, nloc)

    wloc = patch.weights[iu[:, :, None], iv[:, None, :]]   # (npts, p1+1, p2+1)
    # Polynomial numerator tables per function: w_f * B_f^(a,b).
    num = np.einsum("qai,qbj,qij->qabij", tu, tv, wloc).reshape(
        npts, order + 1, order + 1, nloc)
    # Weight function table.
    wtab = np.einsum("qai,qbj,qij->qab", tu, tv, wloc)

    bino = _binom_table(order)
    out = np.empty_like(num)
    for a in range(order + 1):
        for b in range(order + 1):
            acc = num[:, a, b, :].copy()
            for k in range(a + 1):
                for l in range(b + 1):
                    if k == 0 and l == 0:
                        continue
                    c = bino[a, k] * bino[b, l]
                    acc -= c * wtab[:, k, l, None] * out[:, a - k, b - l, :]
            out[:, a, b, :] = acc / wtab[:, 0, 0, None]
    return funcs, out


def _bezier_elevate_1d(pw, p, q):
    """Elevate a single-element Bezier net from degree p to q (first axis)."""
    t = q - p
    if t == 0:
        return pw
    out = np.zeros((q + 1,) + pw.shape[1:])
    for i in range(q + 1):
        for j in range(max(0, i - t), min(p, i) + 1):
            out[i] += comb(p, j) * comb(t, i - j) / comb(q, i) * pw[j]
    return out


def _insert_knot_1d(U, p, pw, u):
    """Boehm single-knot insertion along the first axis of ``pw``."""
    k = min(max(int(np.searchsorted(U, u, side="right")) - 1, p),
            len(U) - p - 2)
    n = pw.shape[0]
    out = np.empty((n + 1,) + pw.shape[1:])
    out[: k - p + 1] = pw[: k - p + 1]
    for i in range(k - p + 1, k + 1):
        alpha = (u - U[i]) / (U[i + p] - U[i])
        out[i] = alpha * pw[i] + (1.0 - alpha) * pw[i - 1]
    out[k + 1:] = pw[k:]
    newU = np.insert(U, k + 1, u)
    return newU, out


def refine(patch: NurbsPatch, target_degree: int,
           elements_per_dir: int) -> NurbsPatch:
    """Degree-elevate then uniformly knot-insert the master patch.

    The mapped surface is unchanged; the result is C^(p-1) across the
    inserted knots.  Non-power-of-two element counts are allowed but break
    the nested-refinement ladder used for rate fits, so they warn.
    """
    p1, p2 = patch.degrees
    q = target_degree
    if q < max(p1, p2):
        raise SplineError("target degree below patch degree")
    m = elements_per_dir
    if m < 1:
        raise SplineError("elements_per_dir must be >= 1")
    if m & (m - 1):
        warnings.warn("element count is not a power of two; "
                      "refinements will not nest", stacklevel=2)

    pw = patch.projective
    if q > p1 or q > p2:
        if patch.knots[0].n_elements > 1 or patch.knots[1].n_elements > 1:
            raise SplineError("degree elevation implemented for the "
                              "one-element master patch only")
        pw = _bezier_elevate_1d(pw, p1, q)
        pw = np.swapaxes(_bezier_elevate_1d(np.swapaxes(pw, 0, 1), p2, q), 0, 1)
    U = np.concatenate([np.zeros(q + 1), np.ones(q + 1)])
    V = U.copy()

    # Dyadic (or at least exactly representable) uniform knots.
    for j in range(1, m):
        U, pw = _insert_knot_1d(U, q, pw, j / m)
    pwT = np.swapaxes(pw, 0, 1)
    for j in range(1, m):
        V, pwT = _insert_knot_1d(V, q, pwT, j / m)
    pw = np.swapaxes(pwT, 0, 1)

    w = pw[..., 3]
    cp = pw[..., :3] / w[..., None]
    return NurbsPatch((q, q), (KnotVector(U, q), KnotVector(V, q)), cp, w)


def unit_square_patch(degree: int = 2) -> NurbsPatch:
    """Flat unit square [0,1]^2 in the z=0 plane (test geometry)."""
    g = np.linspace(0.0, 1.0, degree + 1)
    cp = np.zeros((degree + 1, degree + 1, 3))
    cp[..., 0] = g[:, None]
    cp[..., 1] = g[None, :]
    U = np.concatenate([np.zeros(degree + 1), np.ones(degree + 1)])
    kv = KnotVector(U, degree)
    return NurbsPatch((degree, degree), (kv, kv),
                      cp, np.ones((degree + 1, degree + 1)))
