"""Pointwise differential geometry of the shell midsurface.

Frames collect everything the mechanics needs at a batch of parametric
points: covariant/contravariant bases, metrics, curvature (second and third
fundamental forms), Christoffel symbols with derivatives, and the
Cartesian-to-curvilinear transforms.  Edge frames add boundary tangent/normal
fields and their covariant derivatives on a parametric edge.

Index conventions: Greek indices run over {1, 2} (stored 0-based), the
director index is 3; 2x2 tensors are stored row-major as [alpha, beta] with
contravariant legs leading in mixed tensors (``b_mix[a, b]`` is b^a_b).
"""

from dataclasses import dataclass

import numpy as np

__all__ = ["SurfaceFrame", "EdgeFrame", "build_frame", "build_edge_frame",
           "raise_index", "lower_index", "EDGES", "EDGE_TANGENTS",
           "CORNERS", "CORNER_EDGES"]

EDGES = ("S", "E", "N", "W")

# Counterclockwise (positive about a3) unit parametric tangents per edge.
EDGE_TANGENTS = {"S": (1.0, 0.0), "E": (0.0, 1.0),
                 "N": (-1.0, 0.0), "W": (0.0, -1.0)}

# Parametric corner -> (xi, (incoming edge, outgoing edge)) in CCW traversal.
CORNERS = ((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0))
CORNER_EDGES = {(0.0, 0.0): ("W", "S"), (1.0, 0.0): ("S", "E"),
                (1.0, 1.0): ("E", "N"), (0.0, 1.0): ("N", "W")}


class SingularSurfaceError(ValueError):
    """Degenerate parameterization: |a1 x a2| below tolerance."""


@dataclass
class SurfaceFrame:
    """Geometric frame data at a batch of points (leading axis = points)."""

    a_cov: np.ndarray      # (n, 2, 3) covariant basis a_alpha
    a3: np.ndarray         # (n, 3) unit director
    a_con: np.ndarray      # (n, 2, 3) contravariant basis a^alpha
    a_lo: np.ndarray       # (n, 2, 2) covariant metric
    a_up: np.ndarray       # (n, 2, 2) contravariant metric
    det_a: np.ndarray      # (n,) area Jacobian sqrt(det a_lo)
    b_lo: np.ndarray       # (n, 2, 2) curvature b_ab
    b_mix: np.ndarray      # (n, 2, 2) mixed curvature b^a_b
    c_lo: np.ndarray       # (n, 2, 2) third fundamental form
    gamma: np.ndarray      # (n, 2, 2, 2) Christoffel G^l_ab -> [l, a, b]
    dgamma: np.ndarray     # (n, 2, 2, 2, 2) G^l_ab,m -> [l, a, b, m] or None
    lam_a_d: np.ndarray    # (n, 2, 2, 3) d(a_alpha)/dxi^lam -> [alpha, lam, i]
    lam_3_d: np.ndarray    # (n, 2, 3) d(a3)/dxi^lam -> [lam, i]

    @property
    def npts(self):
        return self.a3.shape[0]


def build_frame(partials, scale=None) -> SurfaceFrame:
    """Frame from a mixed-partial table ``partials[n, a, b, 3]``.

    Christoffel derivatives need third-order partials; passing a table of
    order 2 leaves ``dgamma`` as None.
    """
    partials = np.asarray(partials, dtype=float)
    if partials.ndim == 3:
        partials = partials[None]
    order = partials.shape[1] - 1
    if order < 2:
        raise ValueError("frame construction needs partials to order >= 2")

    a1 = partials[:, 1, 0]
    a2 = partials[:, 0, 1]
    a_cov = np.stack([a1, a2], axis=1)
    cross = np.cross(a1, a2)
    cross_norm = np.linalg.norm(cross, axis=-1)
    ref = np.linalg.norm(a1, axis=-1) * np.linalg.norm(a2, axis=-1)
    if scale is None:
        scale = ref
    if np.any(cross_norm < 1e-14 * np.maximum(scale, 1e-300)):
        raise SingularSurfaceError("surface Jacobian vanishes at a sample point")
    a3 = cross / cross_norm[:, None]

    a_lo = np.einsum("nai,nbi->nab", a_cov, a_cov)
    det = a_lo[:, 0, 0] * a_lo[:, 1, 1] - a_lo[:, 0, 1] * a_lo[:, 1, 0]
    a_up = np.empty_like(a_lo)
    a_up[:, 0, 0] = a_lo[:, 1, 1] / det
    a_up[:, 1, 1] = a_lo[:, 0, 0] / det
    a_up[:, 0, 1] = -a_lo[:, 0, 1] / det
    a_up[:, 1, 0] = -a_lo[:, 1, 0] / det
    a_con = np.einsum("nab,nbi->nai", a_up, a_cov)

    # Second derivatives x_,ab as (n, 2, 2, 3).
    d2 = np.empty(partials.shape[:1] + (2, 2, 3))
    d2[:, 0, 0] = partials[:, 2, 0]
    d2[:, 0, 1] = partials[:, 1, 1]
    d2[:, 1, 0] = partials[:, 1, 1]
    d2[:, 1, 1] = partials[:, 0, 2]

    b_lo = np.einsum("ni,nabi->nab", a3, d2)
    b_mix = np.einsum("nal,nlb->nab", a_up, b_lo)
    c_lo = np.einsum("nla,nlb->nab", b_mix, b_lo)
    gamma = np.einsum("nli,nabi->nlab", a_con, d2)

    dgamma = None
    if order >= 3:
        d3 = np.empty(partials.shape[:1] + (2, 2, 2, 3))
        for a in range(2):
            for b in range(2):
                for m in range(2):
                    k = (a == 0) + (b == 0) + (m == 0)
                    d3[:, a, b, m] = partials[:, k, 3 - k]
        dgamma = (-np.einsum("nlvm,nvab->nlabm", gamma, gamma)
                  + np.einsum("nab,nlm->nlabm", b_lo, b_mix)
                  + np.einsum("nli,nabmi->nlabm", a_con, d3))

    # Gauss and Weingarten formulas for the transform derivatives.
    lam_a_d = (np.einsum("nmal,nmi->nali", gamma, a_cov)
               + np.einsum("nal,ni->nali", b_lo, a3))
    lam_3_d = -np.einsum("nml,nmi->nli", b_mix, a_cov)

    return SurfaceFrame(a_cov, a3, a_con, a_lo, a_up, np.sqrt(det),
                        b_lo, b_mix, c_lo, gamma, dgamma, lam_a_d, lam_3_d)


@dataclass
class EdgeFrame:
    """Boundary tangent/normal fields on one parametric edge."""

    edge: str
    s_up: np.ndarray       # (2,) constant parametric tangent components
    s_norm: np.ndarray     # (n,) boundary Jacobian ||s||
    t_up: np.ndarray       # (n, 2)
    t_lo: np.ndarray       # (n, 2)
    n_up: np.ndarray       # (n, 2)
    n_lo: np.ndarray       # (n, 2)
    t_lo_cd: np.ndarray    # (n, 2, 2) covariant derivative t_a|b
    n_lo_cd: np.ndarray    # (n, 2, 2) covariant derivative n_a|b

    def t_vec(self, frame):
        return np.einsum("na,nai->ni", self.t_up, frame.a_cov)

    def n_vec(self, frame):
        return np.einsum("na,nai->ni", self.n_up, frame.a_cov)


def build_edge_frame(frame: SurfaceFrame, edge: str) -> EdgeFrame:
    """Tangent/normal frame for a parametric edge, CCW about the director."""
    s_up = np.array(EDGE_TANGENTS[edge])
    s_lo = np.einsum("nab,b->na", frame.a_lo, s_up)
    s_norm = np.sqrt(np.einsum("a,na->n", s_up, s_lo))
    t_up = s_up[None, :] / s_norm[:, None]
    t_lo = s_lo / s_norm[:, None]

    deta = frame.det_a
    n_lo = np.stack([deta * t_up[:, 1], -deta * t_up[:, 0]], axis=1)
    n_up = np.einsum("nab,nb->na", frame.a_up, n_lo)

    # Covariant derivatives: s^a is constant, so s^a|b = G^a_lb s^l; the
    # normalized fields follow the quotient rule.
    s_up_cd = np.einsum("nalb,l->nab", frame.gamma, s_up)
    s_lo_cd = np.einsum("nal,nlb->nab", frame.a_lo, s_up_cd)
    sig_d = np.einsum("nl,nlb->nb", t_up, s_lo_cd)
    t_lo_cd = (s_lo_cd - t_lo[:, :, None] * sig_d[:, None, :]) / s_norm[:, None, None]
    t_up_cd = np.einsum("nal,nlb->nab", frame.a_up, t_lo_cd)
    t_up_pd = t_up_cd - np.einsum("nalb,nl->nab", frame.gamma, t_up)

    deta_d = np.einsum("nllb->nb", frame.gamma) * deta[:, None]
    n_lo_pd = np.empty_like(t_lo_cd)
    n_lo_pd[:, 0, :] = deta[:, None] * t_up_pd[:, 1, :] + deta_d * t_up[:, 1:2]
    n_lo_pd[:, 1, :] = -(deta[:, None] * t_up_pd[:, 0, :] + deta_d * t_up[:, 0:1])
    n_lo_cd = n_lo_pd - np.einsum("nlab,nl->nab", frame.gamma, n_lo)

    return EdgeFrame(edge, s_up, s_norm, t_up, t_lo, n_up, n_lo,
                     t_lo_cd, n_lo_cd)


def raise_index(frame: SurfaceFrame, comps, axis=-1):
    """Contract one covariant slot with the contravariant metric."""
    comps = np.asarray(comps)
    moved = np.moveaxis(comps, axis, -1)
    out = np.einsum("nab,n...b->n...a", frame.a_up, moved)
    return np.moveaxis(out, -1, axis)


def lower_index(frame: SurfaceFrame, comps, axis=-1):
    """Contract one contravariant slot with the covariant metric."""
    comps = np.asarray(comps)
    moved = np.moveaxis(comps, axis, -1)
    out = np.einsum("nab,n...b->n...a", frame.a_lo, moved)
    return np.moveaxis(out, -1, axis)
