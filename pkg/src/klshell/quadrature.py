"""Gauss-Legendre rules on uniform element grids of the parametric square.

Load data files and assembly must agree bit-for-bit on quadrature locations,
so every grid is generated here from (mesh, points-per-element) alone.
"""

from functools import lru_cache

import numpy as np

__all__ = ["gauss_1d", "element_breakpoints", "grid_1d", "interior_grid",
           "edge_grid"]


@lru_cache(maxsize=None)
def gauss_1d(n: int):
    """Nodes and weights on [0, 1], exact for polynomials of degree 2n-1."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def element_breakpoints(mesh: int):
    return np.arange(mesh + 1) / mesh


def grid_1d(mesh: int, n: int):
    """Per-element Gauss points along one direction, flattened.

    Returns (points, weights, element_index) each of length mesh * n.
    """
    x, w = gauss_1d(n)
    bp = element_breakpoints(mesh)
    h = np.diff(bp)
    pts = (bp[:-1, None] + h[:, None] * x[None, :]).ravel()
    wts = (h[:, None] * w[None, :]).ravel()
    elem = np.repeat(np.arange(mesh), n)
    return pts, wts, elem


def interior_grid(mesh: int, n: int):
    """Tensor grid over all elements: xi (N, 2), weights (N,), element ids.

    Points are ordered element-major (element index (iu, iv) lexicographic,
    iu fastest) and inside each element u-fastest, which fixes the
    deterministic reduction order used across the package.
    """
    pu, wu, eu = grid_1d(mesh, n)
    pv, wv, ev = grid_1d(mesh, n)
    # order: iv elements outer, iu inner; within element v outer, u inner
    xi = np.empty((mesh * mesh * n * n, 2))
    wt = np.empty(mesh * mesh * n * n)
    elem = np.empty(mesh * mesh * n * n, dtype=int)
    k = 0
    blk = n * n
    for jv in range(mesh):
        for ju in range(mesh):
            u = pu[ju * n:(ju + 1) * n]
            v = pv[jv * n:(jv + 1) * n]
            uu, vv = np.meshgrid(u, v, indexing="xy")
            xi[k:k + blk, 0] = uu.ravel()
            xi[k:k + blk, 1] = vv.ravel()
            wt[k:k + blk] = np.outer(wv[jv * n:(jv + 1) * n],
                                     wu[ju * n:(ju + 1) * n]).ravel()
            elem[k:k + blk] = jv * mesh + ju
            k += blk
    return xi, wt, elem


def edge_grid(edge: str, mesh: int, n: int):
    """Per-element Gauss points along a boundary edge.

    Returns (xi (N, 2), parametric weights (N,), owning boundary element).
    """
    t, w, elem = grid_1d(mesh, n)
    xi = np.empty((len(t), 2))
    if edge == "S":
        xi[:, 0], xi[:, 1] = t, 0.0
    elif edge == "N":
        xi[:, 0], xi[:, 1] = t, 1.0
    elif edge == "W":
        xi[:, 0], xi[:, 1] = 0.0, t
    elif edge == "E":
        xi[:, 0], xi[:, 1] = 1.0, t
    else:
        raise ValueError(f"unknown edge {edge!r}")
    return xi, w, elem
