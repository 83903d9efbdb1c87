"""Pointwise Kirchhoff-Love shell mechanics.

Two parallel evaluation routes are provided on purpose:

* a component route (metric/Christoffel index formulas) used by the assembly
  for per-basis-function operators and by field-level checks, and
* a jet route (truncated Taylor arithmetic from :mod:`klshell.jets`) used to
  manufacture strong-form body loads and boundary data from exact fields, and
  to cross-check the component route independently.

The boundary force energetically conjugate to displacement ("ersatz" force)
carries, besides the membrane traction, a curvature-coupled contribution
  T_bend = -b . (B . n + t B_nt)
and the transverse part (div B) . n + d(B_nt)/dt.  A deliberately inconsistent
variant replacing T_bend by -2 b . B . n is selectable for negative-control
experiments; it coincides with the correct force on flat geometries.
"""

from dataclasses import dataclass

import numpy as np

from .ddarith import DD
from .geometry import EDGE_TANGENTS, SurfaceFrame, build_edge_frame
from .jets import Jet, jet_from_partials

__all__ = [
    "Material", "ElasticityTensor", "elasticity", "voigt_matrix",
    "FieldState", "field_kinematics", "boundary_actions", "corner_jump",
    "DofOperators", "dof_operators", "dof_kinematics",
    "geometry_jets", "strong_form_from_jets", "strong_form_load",
    "edge_actions_from_jets", "edge_sign_axis",
]

_VOIGT = ((0, 0), (1, 1), (0, 1))


@dataclass(frozen=True)
class Material:
    """Isotropic shell material: Young's modulus, Poisson ratio, thickness."""

    E: float
    nu: float
    zeta: float

    def __post_init__(self):
        if self.E <= 0.0:
            raise ValueError("Young's modulus must be positive")
        if not 0.0 <= self.nu <= 0.5:
            raise ValueError("Poisson ratio must lie in [0, 1/2]")
        if self.zeta <= 0.0:
            raise ValueError("thickness must be positive")


@dataclass
class ElasticityTensor:
    """Plane-stress elasticity tensor C^{ablm} at a batch of points."""

    c: np.ndarray    # (n, 2, 2, 2, 2)
    mag: np.ndarray  # (n,) Frobenius magnitude |C|

    def voigt(self):
        return voigt_matrix(self)


def elasticity(frame: SurfaceFrame, mat: Material) -> ElasticityTensor:
    au = frame.a_up
    fac = mat.E / (2.0 * (1.0 + mat.nu))
    poisson = 2.0 * mat.nu / (1.0 - mat.nu)
    c = fac * (np.einsum("nal,nbm->nablm", au, au)
               + np.einsum("nam,nbl->nablm", au, au)
               + poisson * np.einsum("nab,nlm->nablm", au, au))
    lo = np.einsum("nablm,nax,nby,nlz,nmw->nxyzw", c,
                   frame.a_lo, frame.a_lo, frame.a_lo, frame.a_lo)
    mag = np.sqrt(np.einsum("nablm,nablm->n", c, lo))
    return ElasticityTensor(c, mag)


def voigt_matrix(et: ElasticityTensor):
    """3x3 Voigt form with contraction weights folded in.

    With strain vectors e = (e11, e22, e12), the double contraction
    (C : e) : e' equals e^T M e'.
    """
    n = et.c.shape[0]
    m = np.empty((n, 3, 3))
    for v, (a, b) in enumerate(_VOIGT):
        for w, (l, mu) in enumerate(_VOIGT):
            dv = 2.0 if v == 2 else 1.0
            dw = 2.0 if w == 2 else 1.0
            m[:, v, w] = dv * dw * et.c[:, a, b, l, mu]
    return m


# ---------------------------------------------------------------------------
# Component route: covariant derivatives of scalar coefficient tables
# ---------------------------------------------------------------------------

def _gather_partials(tab, order):
    """Split a rectangle table (..., A, B) into d1, d2, d3 index arrays."""
    d1 = np.stack([tab[..., 1, 0], tab[..., 0, 1]], axis=-1)
    d2 = np.empty(tab.shape[:-2] + (2, 2))
    d2[..., 0, 0] = tab[..., 2, 0]
    d2[..., 0, 1] = tab[..., 1, 1]
    d2[..., 1, 0] = tab[..., 1, 1]
    d2[..., 1, 1] = tab[..., 0, 2]
    d3 = None
    if order >= 3:
        d3 = np.empty(tab.shape[:-2] + (2, 2, 2))
        for a in range(2):
            for b in range(2):
                for m in range(2):
                    k = (a == 0) + (b == 0) + (m == 0)
                    d3[..., a, b, m] = tab[..., k, 3 - k]
    return d1, d2, d3


def _covariant_2(frame, d1, d2):
    """u_|ab = u_,ab - G^l_ab u_,l for scalar tables with batch axes."""
    return d2 - np.einsum("nlab,...nl->...nab", frame.gamma, d1)


def _covariant_3(frame, d1, d2, d3, cov2):
    corr = (np.einsum("...nl,nlabm->...nabm", d1, frame.dgamma)
            + np.einsum("nlab,...nlm->...nabm", frame.gamma, d2)
            + np.einsum("nlam,...nlb->...nabm", frame.gamma, cov2)
            + np.einsum("nlbm,...nal->...nabm", frame.gamma, cov2))
    return d3 - corr


@dataclass
class FieldState:
    """Strains and covariant displacement derivatives of a vector field."""

    membrane: np.ndarray   # (n, 2, 2)
    bending: np.ndarray    # (n, 2, 2)
    bend_cd: np.ndarray    # (n, 2, 2, 2) beta_ab|v
    d1: np.ndarray         # (n, 3, 2) Cartesian first partials
    cov2: np.ndarray       # (n, 3, 2, 2)
    cov3: np.ndarray       # (n, 3, 2, 2, 2) or None


def field_kinematics(frame: SurfaceFrame, u_tab, order=3) -> FieldState:
    """Kinematics of a displacement field given as a partial table.

    ``u_tab[n, i, a, b]`` are the plain mixed partials of the Cartesian
    components.  Order 2 suffices for strains; order 3 adds the covariant
    bending-strain derivative needed by boundary actions.
    """
    u_tab = np.asarray(u_tab, dtype=float)
    moved = np.moveaxis(u_tab, 1, 0)  # (3, n, A, B)
    d1, d2, d3 = _gather_partials(moved, order)
    cov2 = _covariant_2(frame, d1, d2)
    membrane = 0.5 * (np.einsum("nai,inb->nab", frame.a_cov, d1)
                      + np.einsum("nbi,ina->nab", frame.a_cov, d1))
    bending = -np.einsum("ni,inab->nab", frame.a3, cov2)
    bend_cd = None
    cov3 = None
    if order >= 3:
        if frame.dgamma is None:
            raise ValueError("frame lacks Christoffel derivatives (order 3)")
        cov3 = _covariant_3(frame, d1, d2, d3, cov2)
        bb = np.einsum("nlv,nli->nvi", frame.b_mix, frame.a_cov)
        bend_cd = (np.einsum("nvi,inab->nabv", bb, cov2)
                   - np.einsum("ni,inabv->nabv", frame.a3, cov3))
    return FieldState(membrane, bending, bend_cd,
                      np.moveaxis(d1, 0, 1), np.moveaxis(cov2, 0, 1),
                      None if cov3 is None else np.moveaxis(cov3, 0, 1))


@dataclass
class BoundaryActions:
    """Edge actions of a field: traction, moments and ersatz force."""

    tau_up: np.ndarray     # (n, 2) membrane traction components
    b_nn: np.ndarray       # (n,)
    b_nt: np.ndarray       # (n,)
    t_mem_up: np.ndarray   # (n, 2) membrane part of the in-plane ersatz force
    t_bend_up: np.ndarray  # (n, 2) bending part
    t3: np.ndarray         # (n,)
    theta_n: np.ndarray    # (n,)

    def ersatz_cartesian(self, frame):
        t_up = self.t_mem_up + self.t_bend_up
        return (np.einsum("na,nai->ni", t_up, frame.a_cov)
                + self.t3[:, None] * frame.a3)


def boundary_actions(frame, edge_frame, et: ElasticityTensor,
                     state: FieldState, mat: Material,
                     inconsistent_ersatz=False) -> BoundaryActions:
    """Tractions, moments and the ersatz force of a field on one edge."""
    zeta = mat.zeta
    a_up = zeta * np.einsum("nablm,nlm->nab", et.c, state.membrane)
    b_up = zeta**3 / 12.0 * np.einsum("nablm,nlm->nab", et.c, state.bending)
    b_cd = zeta**3 / 12.0 * np.einsum("nablm,nlmv->nabv", et.c, state.bend_cd)

    nlo, nup = edge_frame.n_lo, edge_frame.n_up
    tup, tlo = edge_frame.t_up, edge_frame.t_lo
    tau = np.einsum("nab,nb->na", a_up, nlo)
    b_nn = np.einsum("na,nb,nab->n", nlo, nlo, b_up)
    b_nt = np.einsum("na,nb,nab->n", nlo, tlo, b_up)

    bn = np.einsum("nlb,nb->nl", b_up, nlo)
    if inconsistent_ersatz:
        t_bend = -2.0 * np.einsum("nal,nl->na", frame.b_mix, bn)
    else:
        t_bend = -np.einsum("nal,nl->na", frame.b_mix,
                            bn + tup * b_nt[:, None])

    # B^{ab}_{|b}, then d(B_nt)/dt expanded with the edge-field covariant
    # derivatives.
    div_b = b_cd[:, :, 0, 0] + b_cd[:, :, 1, 1]
    dbnt_dt = (np.einsum("nal,nab,nb,nl->n",
                         edge_frame.n_lo_cd, b_up, tlo, tup)
               + np.einsum("na,nabl,nb,nl->n", nlo, b_cd, tlo, tup)
               + np.einsum("na,nab,nbl,nl->n", nlo, b_up,
                           edge_frame.t_lo_cd, tup))
    t3 = np.einsum("na,na->n", nlo, div_b) + dbnt_dt

    theta_n = -np.einsum("ni,nil,nl->n", frame.a3, state.d1, nup)
    return BoundaryActions(tau, b_nn, b_nt, tau, t_bend, t3, theta_n)


def corner_jump(b_nt_before, b_nt_after):
    """Twisting-moment jump at a corner along the CCW traversal."""
    return b_nt_after - b_nt_before


# ---------------------------------------------------------------------------
# Per-basis-function operators for assembly
# ---------------------------------------------------------------------------

@dataclass
class DofOperators:
    """Linear operators per local dof (flattened as 3*f + i).

    Interior arrays are Voigt strain operators; boundary arrays are produced
    only when an edge frame is supplied.
    """

    membrane_v: np.ndarray   # (n, 3, nloc)
    bending_v: np.ndarray    # (n, 3, nloc)
    values: np.ndarray       # (n, 3, nloc) Cartesian displacement values
    u3: np.ndarray = None          # (n, nloc)
    theta_n: np.ndarray = None     # (n, nloc)
    ersatz: np.ndarray = None      # (n, 3, nloc) Cartesian ersatz force
    b_nn: np.ndarray = None        # (n, nloc)
    b_nt: np.ndarray = None        # (n, nloc)
    t3: np.ndarray = None          # (n, nloc) transverse ersatz component
    t_bend_up: np.ndarray = None   # (n, 2, nloc)
    t_mem_up: np.ndarray = None    # (n, 2, nloc)


def _flatten_dofs(arr):
    """Collapse trailing (direction, function) axes to 3*f + i ordering."""
    swapped = np.swapaxes(arr, -1, -2)
    return swapped.reshape(arr.shape[:-2] + (-1,))


def _dof_strain_ops(frame, d1, cov2):
    """Voigt membrane/bending operators; shapes (n, 3v, 3i, f)."""
    n, f = d1.shape[0], d1.shape[1]
    memb = np.empty((n, 3, 3, f))
    # alpha_ab(f, i) = 0.5 (Lam^i_a R_,b + Lam^i_b R_,a)
    for v, (a, b) in enumerate(_VOIGT):
        memb[:, v] = 0.5 * (np.einsum("ni,nf->nif", frame.a_cov[:, a], d1[..., b])
                            + np.einsum("ni,nf->nif", frame.a_cov[:, b], d1[..., a]))
    bend = np.empty((n, 3, 3, f))
    for v, (a, b) in enumerate(_VOIGT):
        bend[:, v] = -np.einsum("ni,nf->nif", frame.a3, cov2[..., a, b])
    return memb, bend


def dof_operators(frame: SurfaceFrame, r_tab, et: ElasticityTensor,
                  mat: Material, edge_frame=None, order=2,
                  inconsistent_ersatz=False) -> DofOperators:
    """Operator tables for the active basis functions at a point batch.

    ``r_tab[n, a, b, f]`` holds partials of the scalar basis functions; local
    dofs are ordered 3*f + i with i the Cartesian direction.
    """
    r_tab = np.asarray(r_tab)
    tab = np.moveaxis(r_tab, 3, 0)   # (f, n, A, B)
    d1, d2, d3 = _gather_partials(tab, order)
    d1 = np.moveaxis(d1, 0, 1)       # (n, f, 2)
    d2m = np.moveaxis(d2, 0, 1)
    cov2 = d2m - np.einsum("nlab,nfl->nfab", frame.gamma, d1)

    memb, bend = _dof_strain_ops(frame, d1, cov2)
    n, _, _, f = memb.shape
    nloc = 3 * f
    vals = np.zeros((n, 3, 3, f))
    for i in range(3):
        vals[:, i, i, :] = r_tab[:, 0, 0, :]

    ops = DofOperators(_flatten_dofs(memb), _flatten_dofs(bend),
                       _flatten_dofs(vals))
    if edge_frame is None:
        return ops

    if order < 3:
        raise ValueError("boundary operators need third derivatives")
    cov3 = np.moveaxis(
        _covariant_3(frame, np.moveaxis(d1, 1, 0), d2, d3,
                     np.moveaxis(cov2, 1, 0)), 0, 1)

    zeta = mat.zeta
    # Membrane stress per dof: A^{ab}(f,i) = z C^{ablm} alpha_lm(f,i).
    alpha_t = np.empty((n, 2, 2, 3, f))
    for v, (a, b) in enumerate(_VOIGT):
        alpha_t[:, a, b] = memb[:, v]
        alpha_t[:, b, a] = memb[:, v]
    a_up = zeta * np.einsum("nablm,nlmif->nabif", et.c, alpha_t)

    # Bending stress factors: B^{ab}(f,i) = a3_i Bs[n,f,ab].
    bs = -(zeta**3 / 12.0) * np.einsum("nablm,nflm->nfab", et.c, cov2)
    bs3 = (zeta**3 / 12.0) * np.einsum("nablm,nflmv->nfabv", et.c, cov3)
    bb = np.einsum("nlv,nli->nvi", frame.b_mix, frame.a_cov)
    # B^{ab}_{|v}(f,i) = -bb[v,i] Bs[f,ab] - a3_i Bs3[f,ab,v]
    b_cd = -(np.einsum("nvi,nfab->nabvif", bb, bs)
             + np.einsum("ni,nfabv->nabvif", frame.a3, bs3))

    ef = edge_frame
    nlo, nup, tlo, tup = ef.n_lo, ef.n_up, ef.t_lo, ef.t_up
    tau = np.einsum("nabif,nb->naif", a_up, nlo)
    b_up = np.einsum("ni,nfab->nabif", frame.a3, bs)
    b_nn = np.einsum("na,nb,nabif->nif", nlo, nlo, b_up)
    b_nt = np.einsum("na,nb,nabif->nif", nlo, tlo, b_up)

    bn = np.einsum("nlbif,nb->nlif", b_up, nlo)
    if inconsistent_ersatz:
        t_bend = -2.0 * np.einsum("nal,nlif->naif", frame.b_mix, bn)
    else:
        t_bend = -np.einsum("nal,nlif->naif", frame.b_mix,
                            bn + np.einsum("nl,nif->nlif", tup, b_nt))

    div_b = b_cd[:, :, 0, 0] + b_cd[:, :, 1, 1]
    dbnt = (np.einsum("nal,nabif,nb,nl->nif", ef.n_lo_cd, b_up, tlo, tup)
            + np.einsum("na,nabvif,nb,nv->nif", nlo, b_cd, tlo, tup)
            + np.einsum("na,nabif,nbl,nl->nif", nlo, b_up, ef.t_lo_cd, tup))
    t3 = np.einsum("na,naif->nif", nlo, div_b) + dbnt

    ersatz = (np.einsum("naif,nak->nkif", tau + t_bend, frame.a_cov)
              + np.einsum("nif,nk->nkif", t3, frame.a3))
    theta = -np.einsum("ni,nfl,nl->nif", frame.a3, d1, nup)
    u3 = np.einsum("ni,nf->nif", frame.a3, r_tab[:, 0, 0, :])

    ops.ersatz = _flatten_dofs(ersatz)
    ops.b_nn = _flatten_dofs(b_nn)
    ops.b_nt = _flatten_dofs(b_nt)
    ops.t3 = _flatten_dofs(t3)
    ops.theta_n = _flatten_dofs(theta)
    ops.u3 = _flatten_dofs(u3)
    ops.t_bend_up = _flatten_dofs(t_bend)
    ops.t_mem_up = _flatten_dofs(tau)
    return ops


def dof_kinematics(frame: SurfaceFrame, r_tab, i, edge=None,
                   et=None, mat=None):
    """Kinematics of a single scalar basis function in direction ``i``.

    Convenience wrapper over the vectorized operator tables; returns a dict
    with membrane/bending strains, covariant derivatives and rotations.
    """
    r_tab = np.asarray(r_tab, dtype=float)
    if r_tab.ndim == 2:
        r_tab = r_tab[None]
    u_tab = np.zeros(r_tab.shape[:1] + (3,) + r_tab.shape[1:])
    u_tab[:, i] = r_tab
    order = 3 if frame.dgamma is not None and r_tab.shape[1] >= 4 else 2
    state = field_kinematics(frame, u_tab, order=order)
    out = {"membrane": state.membrane, "bending": state.bending,
           "bend_cd": state.bend_cd, "cov2": state.cov2[:, i],
           "cov3": None if state.cov3 is None else state.cov3[:, i]}
    if edge is not None:
        ef = build_edge_frame(frame, edge)
        out["theta_n"] = -np.einsum("ni,nl,nl->n", frame.a3,
                                    state.d1[:, i], ef.n_up)
        out["theta_t"] = -np.einsum("ni,nl,nl->n", frame.a3,
                                    state.d1[:, i], ef.t_up)
    return out


# ---------------------------------------------------------------------------
# Jet route: manufactured loads and independent boundary evaluation
# ---------------------------------------------------------------------------

def _dot3(u, v):
    return u[0] * v[0] + u[1] * v[1] + u[2] * v[2]


def _cross3(u, v):
    return [u[1] * v[2] - u[2] * v[1],
            u[2] * v[0] - u[0] * v[2],
            u[0] * v[1] - u[1] * v[0]]


class JetFrame:
    """Surface frame whose entries are jets (differentiable fields)."""

    def __init__(self, x_jets):
        self.x = x_jets
        self.a = [[c.deriv(0) for c in x_jets], [c.deriv(1) for c in x_jets]]
        cross = _cross3(self.a[0], self.a[1])
        self.det = _dot3(cross, cross).sqrt()
        inv = self.det.reciprocal()
        self.a3 = [c * inv for c in cross]
        self.a_lo = [[_dot3(self.a[i], self.a[j]) for j in range(2)]
                     for i in range(2)]
        det_lo = (self.a_lo[0][0] * self.a_lo[1][1]
                  - self.a_lo[0][1] * self.a_lo[1][0])
        idet = det_lo.reciprocal()
        self.a_up = [[self.a_lo[1][1] * idet, -self.a_lo[0][1] * idet],
                     [-self.a_lo[1][0] * idet, self.a_lo[0][0] * idet]]
        self.a_con = [[self.a_up[i][0] * self.a[0][k] + self.a_up[i][1] * self.a[1][k]
                       for k in range(3)] for i in range(2)]
        # Curvature b_ab = a3 . x_,ab
        d2 = [[[self.x[k].deriv(i).deriv(j) for k in range(3)]
               for j in range(2)] for i in range(2)]
        self.b_lo = [[_dot3(self.a3, d2[i][j]) for j in range(2)]
                     for i in range(2)]

    def elasticity_jets(self, mat):
        fac = mat.E / (2.0 * (1.0 + mat.nu))
        pois = 2.0 * mat.nu / (1.0 - mat.nu)
        au = self.a_up
        c = {}
        for a in range(2):
            for b in range(2):
                for l in range(2):
                    for m in range(2):
                        c[(a, b, l, m)] = (au[a][l] * au[b][m]
                                           + au[a][m] * au[b][l]
                                           + au[a][b] * au[l][m] * pois) * fac
        return c


def geometry_jets(patch, xi1, xi2, order=5, backend="float"):
    """Jets of the geometric map at a point batch."""
    from .splines import surface_partials
    tab = surface_partials(patch, xi1, xi2, order)
    if backend == "dd":
        tab = DD(tab)
    return [jet_from_partials(tab[..., i], order) for i in range(3)]


def _field_stress_jets(jf: JetFrame, u_jets, mat):
    """Membrane/bending stress component jets A^{ab}, B^{ab} of a field."""
    du = [[u_jets[i].deriv(lam) for i in range(3)] for lam in range(2)]
    gamma = [[[_dot3(jf.a_con[l], [jf.x[k].deriv(a).deriv(b) for k in range(3)])
               for b in range(2)] for a in range(2)] for l in range(2)]
    alpha = [[(_dot3(jf.a[a], du[b]) + _dot3(jf.a[b], du[a])) * 0.5
              for b in range(2)] for a in range(2)]
    d2u = [[[u_jets[i].deriv(a).deriv(b) for i in range(3)]
            for b in range(2)] for a in range(2)]
    cov2 = [[[d2u[a][b][i] - (gamma[0][a][b] * du[0][i]
                              + gamma[1][a][b] * du[1][i])
              for i in range(3)] for b in range(2)] for a in range(2)]
    beta = [[-_dot3(jf.a3, cov2[a][b]) for b in range(2)] for a in range(2)]

    c = jf.elasticity_jets(mat)
    z = mat.zeta

    def contract(strain, factor):
        out = [[None, None], [None, None]]
        for a in range(2):
            for b in range(2):
                acc = None
                for l in range(2):
                    for m in range(2):
                        term = c[(a, b, l, m)] * strain[l][m]
                        acc = term if acc is None else acc + term
                out[a][b] = acc * factor
        return out

    a_up = contract(alpha, z)
    b_up = contract(beta, z**3 / 12.0)
    return a_up, b_up


def _cartesian_tensor(jf, comps, basis):
    """T[i][j] jets of comps^{ab} basis_a (x) basis_b."""
    out = [[None] * 3 for _ in range(3)]
    for i in range(3):
        for j in range(3):
            acc = None
            for a in range(2):
                for b in range(2):
                    term = comps[a][b] * basis[a][i] * basis[b][j]
                    acc = term if acc is None else acc + term
            out[i][j] = acc
    return out


def _surface_div_tensor(jf, t_cart):
    """(div T)_i = d_lam T_ij (a^lam)_j for an in-plane tensor field."""
    out = []
    for i in range(3):
        acc = None
        for lam in range(2):
            for j in range(3):
                term = t_cart[i][j].deriv(lam) * jf.a_con[lam][j]
                acc = term if acc is None else acc + term
        out.append(acc)
    return out


def _surface_div_vector(jf, v_cart):
    acc = None
    for lam in range(2):
        for j in range(3):
            term = v_cart[j].deriv(lam) * jf.a_con[lam][j]
            acc = term if acc is None else acc + term
    return acc


def strong_form_from_jets(geom_jets, u_jets, mat: Material):
    """Manufactured body force (Cartesian jets) from an exact field.

    Implements the Euler-Lagrange interior operator: the in-plane projection
    of div(b.B) + (div B).b - div A together with the transverse component
    B:c - div(P.(div B)) - A:b.
    """
    jf = JetFrame(geom_jets)
    a_up_s, b_up_s = _field_stress_jets(jf, u_jets, mat)

    a_cart = _cartesian_tensor(jf, a_up_s, jf.a)
    b_cart = _cartesian_tensor(jf, b_up_s, jf.a)
    b_form = _cartesian_tensor(jf, jf.b_lo, jf.a_con)
    # c = b . b with one raised index pair: c_ab = b_al a^lm b_mb
    c_lo = [[None, None], [None, None]]
    for a in range(2):
        for b in range(2):
            acc = None
            for l in range(2):
                for m in range(2):
                    term = jf.b_lo[a][l] * jf.a_up[l][m] * jf.b_lo[m][b]
                    acc = term if acc is None else acc + term
            c_lo[a][b] = acc
    c_cart = _cartesian_tensor(jf, c_lo, jf.a_con)

    # b . B as a Cartesian tensor: (b.B)_ij = b_ik B_kj (grade-mixed product).
    bB = [[None] * 3 for _ in range(3)]
    for i in range(3):
        for j in range(3):
            acc = None
            for k in range(3):
                term = b_form[i][k] * b_cart[k][j]
                acc = term if acc is None else acc + term
            bB[i][j] = acc

    div_bB = _surface_div_tensor(jf, bB)
    div_B = _surface_div_tensor(jf, b_cart)
    div_A = _surface_div_tensor(jf, a_cart)

    # (div B) . b
    divB_b = []
    for j in range(3):
        acc = None
        for i in range(3):
            term = div_B[i] * b_form[i][j]
            acc = term if acc is None else acc + term
        divB_b.append(acc)

    raw = [div_bB[i] + divB_b[i] - div_A[i] for i in range(3)]
    # In-plane projector P = I - a3 (x) a3.
    raw_dot_a3 = _dot3(raw, jf.a3)
    f_inplane = [raw[i] - jf.a3[i] * raw_dot_a3 for i in range(3)]

    # Transverse component.
    b_colon_c = None
    for i in range(3):
        for j in range(3):
            term = b_cart[i][j] * c_cart[i][j]
            b_colon_c = term if b_colon_c is None else b_colon_c + term
    a_colon_b = None
    for i in range(3):
        for j in range(3):
            term = a_cart[i][j] * b_form[i][j]
            a_colon_b = term if a_colon_b is None else a_colon_b + term
    divB_dot_a3 = _dot3(div_B, jf.a3)
    p_divB = [div_B[i] - jf.a3[i] * divB_dot_a3 for i in range(3)]
    f3 = b_colon_c - _surface_div_vector(jf, p_divB) - a_colon_b

    return [f_inplane[i] + jf.a3[i] * f3 for i in range(3)]


def strong_form_load(geom_jets, field_jets, mat: Material):
    """Manufactured body-force samples (npts, 3) for a displacement field.

    Thin value-extracting wrapper over :func:`strong_form_from_jets`; both
    the in-plane and transverse components are returned assembled in
    Cartesian components (f = f_bar + f3 a3).
    """
    f = strong_form_from_jets(geom_jets, field_jets, mat)
    vals = [c.value for c in f]
    if isinstance(vals[0], DD):
        vals = [v.to_float() for v in vals]
    return np.stack(vals, axis=-1)


def edge_sign_axis(edge):
    """(sign, axis) of the CCW tangent along a parametric edge."""
    s = EDGE_TANGENTS[edge]
    axis = 0 if s[1] == 0.0 else 1
    return (s[axis], axis)


def edge_actions_from_jets(geom_jets, u_jets, mat: Material, edge,
                           inconsistent_ersatz=False):
    """Boundary data of a field on one edge, via jet arithmetic only.

    Returns a dict of jets: Cartesian ersatz force components, bending and
    twisting moments, normal rotation, and the boundary Jacobian.
    """
    jf = JetFrame(geom_jets)
    sign, axis = edge_sign_axis(edge)
    a_edge = jf.a[axis]
    sigma = _dot3(a_edge, a_edge).sqrt()
    inv_sigma = sigma.reciprocal()
    t = [c * (sign * 1.0) * inv_sigma for c in a_edge]
    n = _cross3(t, jf.a3)

    a_up_s, b_up_s = _field_stress_jets(jf, u_jets, mat)
    a_cart = _cartesian_tensor(jf, a_up_s, jf.a)
    b_cart = _cartesian_tensor(jf, b_up_s, jf.a)
    b_form = _cartesian_tensor(jf, jf.b_lo, jf.a_con)

    def mat_vec(m, v):
        out = []
        for i in range(3):
            acc = None
            for j in range(3):
                term = m[i][j] * v[j]
                acc = term if acc is None else acc + term
            out.append(acc)
        return out

    bn_vec = mat_vec(b_cart, n)
    b_nt = _dot3(n, mat_vec(b_cart, t))
    b_nn = _dot3(n, bn_vec)
    tau_vec = mat_vec(a_cart, n)

    if inconsistent_ersatz:
        t_bend = [b * (-2.0) for b in mat_vec(b_form, bn_vec)]
    else:
        w = [bn_vec[i] + t[i] * b_nt for i in range(3)]
        t_bend = [b * (-1.0) for b in mat_vec(b_form, w)]

    div_B = _surface_div_tensor(jf, b_cart)
    dbnt_dt = b_nt.deriv(axis) * inv_sigma * (sign * 1.0)
    t3 = _dot3(div_B, n) + dbnt_dt

    du = [[u_jets[i].deriv(lam) for i in range(3)] for lam in range(2)]
    theta_vec = [None, None, None]
    for j in range(3):
        acc = None
        for lam in range(2):
            term = _dot3(jf.a3, du[lam]) * (-1.0) * jf.a_con[lam][j]
            acc = term if acc is None else acc + term
        theta_vec[j] = acc
    theta_n = _dot3(theta_vec, n)

    ersatz = [tau_vec[i] + t_bend[i] + jf.a3[i] * t3 for i in range(3)]
    return {"ersatz": ersatz, "b_nn": b_nn, "b_nt": b_nt,
            "theta_n": theta_n, "sigma": sigma, "t": t, "n": n, "frame": jf}
