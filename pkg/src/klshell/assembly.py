"""Mesh bookkeeping and assembly of the Nitsche shell system.

The assembled bilinear form carries nine term families: interior membrane and
bending stiffness; ersatz-force consistency and symmetry terms plus
out-of-plane (h^-3) and in-plane (h^-1) displacement penalties on
displacement-Dirichlet edges; bending-moment consistency and symmetry terms
plus a rotation penalty (h^-1) on rotation-Dirichlet edges; and twisting
moment jump terms plus an h^-2 penalty at Dirichlet corners.  All penalty
weights carry the pointwise elasticity magnitude and the thickness powers
that make the formulation dimensionally consistent, with constants calibrated
from trace-inequality eigenproblems.

Element contributions are reduced into the global matrix in element order, so
results are bit-reproducible regardless of the worker count used to compute
the local blocks.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import quadrature
from .geometry import CORNERS, CORNER_EDGES, EDGES, build_edge_frame, build_frame
from .mechanics import Material, dof_operators, elasticity, voigt_matrix
from .problems import LoadData, ProblemSpec
from .splines import NurbsPatch, nurbs_basis_partials, surface_partials

__all__ = ["MeshTopology", "PenaltyConfig", "AssembledSystem", "build_mesh",
           "assemble", "assemble_interior", "dump_system", "AssemblyError"]


class AssemblyError(RuntimeError):
    pass


_EDGE_OWNERS = {
    "S": lambda k, m: k,
    "E": lambda k, m: k * m + (m - 1),
    "N": lambda k, m: (m - 1) * m + k,
    "W": lambda k, m: k * m,
}

_CORNER_OWNERS = {
    (0.0, 0.0): lambda m: 0,
    (1.0, 0.0): lambda m: m - 1,
    (1.0, 1.0): lambda m: m * m - 1,
    (0.0, 1.0): lambda m: (m - 1) * m,
}


@dataclass
class MeshTopology:
    """Uniform tensor mesh of a refined patch with physical element sizes."""

    mesh: int
    h_k: np.ndarray            # (mesh**2,) element diameters (3x3 sample grid)

    def h_edge(self, edge, k):
        return self.h_k[_EDGE_OWNERS[edge](k, self.mesh)]

    def h_corner(self, corner):
        return self.h_k[_CORNER_OWNERS[corner](self.mesh)]


def build_mesh(patch: NurbsPatch, mesh: int = None) -> MeshTopology:
    """Element sizes via the max pairwise distance of a mapped 3x3 grid."""
    bu = patch.knots[0].breakpoints
    bv = patch.knots[1].breakpoints
    if mesh is None:
        mesh = len(bu) - 1
    if len(bu) - 1 != mesh or len(bv) - 1 != mesh:
        raise AssemblyError("patch element count does not match mesh")
    s = np.array([0.0, 0.5, 1.0])
    h_k = np.empty(mesh * mesh)
    for jv in range(mesh):
        v = bv[jv] + (bv[jv + 1] - bv[jv]) * s
        for ju in range(mesh):
            u = bu[ju] + (bu[ju + 1] - bu[ju]) * s
            uu, vv = np.meshgrid(u, v, indexing="xy")
            pts = surface_partials(patch, uu.ravel(), vv.ravel(), 0)[:, 0, 0]
            d = pts[:, None, :] - pts[None, :, :]
            h_k[jv * mesh + ju] = np.sqrt((d ** 2).sum(-1)).max()
    return MeshTopology(mesh, h_k)


@dataclass
class PenaltyConfig:
    """Trace constants and derived Nitsche penalty constants.

    c_pen = (g1^2 c_tr1, g2^2 c_tr2, g3^2 c_tr3, g4^2 max(c_tr4, c_tr5)).
    """

    c_tr: np.ndarray
    gammas: np.ndarray = field(default_factory=lambda: np.full(4, 2.0))

    def __post_init__(self):
        self.c_tr = np.asarray(self.c_tr, dtype=float)
        self.gammas = np.asarray(self.gammas, dtype=float)
        if self.c_tr.shape != (5,):
            raise ValueError("five trace constants required")
        if np.any(self.gammas <= 1.0):
            raise ValueError("penalty ratios gamma must exceed 1")

    @property
    def c_pen(self):
        g = self.gammas
        c = self.c_tr
        return np.array([g[0] ** 2 * c[0], g[1] ** 2 * c[1],
                         g[2] ** 2 * c[2], g[3] ** 2 * max(c[3], c[4])])


@dataclass
class AssembledSystem:
    """Symmetric Nitsche system with dof map row = 3 * function + direction."""

    K: np.ndarray
    F: np.ndarray
    ndof: int
    n_funcs: tuple
    families: dict = None

    def dof(self, func_index, direction):
        return 3 * func_index + direction


def _global_dofs(funcs_row):
    return (3 * np.repeat(funcs_row, 3)
            + np.tile(np.arange(3), len(funcs_row)))


def _interior_element_blocks(spec, patch, topo, n_quad, workers=1):
    """Per-element interior stiffness blocks, in element order."""
    mesh = topo.mesh
    xi, wt, elem = quadrature.interior_grid(mesh, n_quad)
    blk = n_quad * n_quad
    mat = spec.material

    def one(e):
        sl = slice(e * blk, (e + 1) * blk)
        funcs, r_tab = nurbs_basis_partials(patch, xi[sl, 0], xi[sl, 1], 2)
        frame = build_frame(surface_partials(patch, xi[sl, 0], xi[sl, 1], 2))
        et = elasticity(frame, mat)
        ops = dof_operators(frame, r_tab, et, mat, order=2)
        w = wt[sl] * frame.det_a
        m = voigt_matrix(et) * w[:, None, None]
        k_m = np.einsum("qvk,qvw,qwl->kl", ops.membrane_v, m, ops.membrane_v)
        k_b = np.einsum("qvk,qvw,qwl->kl", ops.bending_v, m, ops.bending_v)
        k_loc = mat.zeta * k_m + mat.zeta ** 3 / 12.0 * k_b
        return _global_dofs(funcs[0]), k_loc

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, range(mesh * mesh)))
    return [one(e) for e in range(mesh * mesh)]


def assemble_interior(spec: ProblemSpec, patch, topo, n_quad, workers=1):
    """Interior stiffness a^S alone (also the trace-eigenproblem right side)."""
    ndof = 3 * patch.knots[0].n_basis * patch.knots[1].n_basis
    K = np.zeros((ndof, ndof))
    for g, k_loc in _interior_element_blocks(spec, patch, topo, n_quad,
                                             workers):
        K[np.ix_(g, g)] += k_loc
    return K


def edge_operator_batches(spec, patch, topo, n_edge, variant=False):
    """Operator bundles on every boundary edge, one batch per side.

    Yields dicts with the edge id, boundary type, quadrature data, frames,
    per-dof operator tables and pointwise elasticity magnitude.
    """
    mat = spec.material
    for edge in EDGES:
        xi, wpar, elems = quadrature.edge_grid(edge, topo.mesh, n_edge)
        funcs, r_tab = nurbs_basis_partials(patch, xi[:, 0], xi[:, 1], 3)
        frame = build_frame(surface_partials(patch, xi[:, 0], xi[:, 1], 3))
        eframe = build_edge_frame(frame, edge)
        et = elasticity(frame, mat)
        ops = dof_operators(frame, r_tab, et, mat, edge_frame=eframe,
                            order=3, inconsistent_ersatz=variant)
        yield {"edge": edge, "btype": spec.edges[edge], "xi": xi,
               "w": wpar * eframe.s_norm, "elems": elems, "funcs": funcs,
               "frame": frame, "eframe": eframe, "mag": et.mag, "ops": ops,
               "n_edge": n_edge}


def corner_operator_bundle(spec, patch, corner, variant=False):
    """Per-dof twisting-moment jump and transverse value at one corner."""
    mat = spec.material
    before, after = CORNER_EDGES[corner]
    xi1 = np.array([corner[0]])
    xi2 = np.array([corner[1]])
    funcs, r_tab = nurbs_basis_partials(patch, xi1, xi2, 3)
    frame = build_frame(surface_partials(patch, xi1, xi2, 3))
    et = elasticity(frame, mat)
    bnt = {}
    for e in (before, after):
        ef = build_edge_frame(frame, e)
        ops = dof_operators(frame, r_tab, et, mat, edge_frame=ef,
                            order=3, inconsistent_ersatz=variant)
        bnt[e] = ops.b_nt[0]
    jump = bnt[after] - bnt[before]
    u3 = np.einsum("f,i->fi", r_tab[0, 0, 0, :], frame.a3[0]).reshape(-1)
    return {"gdofs": _global_dofs(funcs[0]), "jump": jump, "u3": u3,
            "mag": et.mag[0], "a3": frame.a3[0]}


def assemble(spec: ProblemSpec, patch: NurbsPatch, topo: MeshTopology,
             penalties: PenaltyConfig, load: LoadData,
             n_quad_interior: int, n_edge: int = 25, n_load: int = 25,
             variant: bool = False, workers: int = 1,
             families: bool = False) -> AssembledSystem:
    """Assemble the full Nitsche system for one obstacle-course problem.

    ``load`` must have been generated (or imported) for the same mesh and
    data rules (``n_load``, ``n_edge``); this is validated before any
    numerics run.
    """
    mesh = topo.mesh
    load.validate_against(spec.id, mesh, n_load, n_edge)
    load.check_finite()
    if not any(bt.is_d1 for bt in spec.edges.values()):
        import warnings
        warnings.warn("no displacement-Dirichlet edge: system may be "
                      "singular", stacklevel=2)

    mat = spec.material
    zeta = mat.zeta
    cp = penalties.c_pen
    n1 = patch.knots[0].n_basis
    n2 = patch.knots[1].n_basis
    ndof = 3 * n1 * n2
    K = np.zeros((ndof, ndof))
    F = np.zeros(ndof)
    fam = {name: np.zeros((ndof, ndof)) for name in
           ("interior", "consistency", "symmetry",
            "pen1", "pen2", "pen3", "pen4")} if families else None

    def add(name, g, block):
        K[np.ix_(g, g)] += block
        if fam is not None:
            fam[name][np.ix_(g, g)] += block

    # Interior stiffness.
    for g, k_loc in _interior_element_blocks(spec, patch, topo,
                                             n_quad_interior, workers):
        add("interior", g, k_loc)

    # Body force on the load rule.
    xi_l, wt_l, _ = quadrature.interior_grid(mesh, n_load)
    blk = n_load * n_load
    for e in range(mesh * mesh):
        sl = slice(e * blk, (e + 1) * blk)
        funcs, r_tab = nurbs_basis_partials(patch, xi_l[sl, 0], xi_l[sl, 1], 0)
        frame = build_frame(
            surface_partials(patch, xi_l[sl, 0], xi_l[sl, 1], 2))
        w = wt_l[sl] * frame.det_a
        g = _global_dofs(funcs[0])
        vals = r_tab[:, 0, 0, :]                       # (q, f)
        f_loc = np.einsum("q,qi,qf->fi", w, load.body_f[sl], vals)
        F[g] += f_loc.reshape(-1)

    # Boundary terms, one batch per side, scattered per boundary element.
    for batch in edge_operator_batches(spec, patch, topo, n_edge, variant):
        edge, bt = batch["edge"], batch["btype"]
        ops, w, mag = batch["ops"], batch["w"], batch["mag"]
        blk_e = batch["n_edge"]
        eblock = load.edges[edge]
        for k in range(mesh):
            sl = slice(k * blk_e, (k + 1) * blk_e)
            g = _global_dofs(batch["funcs"][sl.start])
            nloc = len(g)
            ww = w[sl]
            mg = mag[sl]
            h = topo.h_edge(edge, k)
            vals = ops.values[sl]
            a3 = batch["frame"].a3[sl]

            if bt.is_d1:
                ersatz = ops.ersatz[sl]
                u3 = ops.u3[sl]
                m_cs = np.einsum("q,qik,qil->kl", ww, vals, ersatz)
                add("consistency", g, -m_cs)
                add("symmetry", g, -m_cs.T)
                p1 = cp[0] * zeta ** 3 / h ** 3
                add("pen1", g, p1 * np.einsum("q,q,qk,ql->kl", ww, mg, u3, u3))
                # In-plane penalty with the pointwise projector.
                proj = np.eye(3)[None] - a3[:, :, None] * a3[:, None, :]
                p4 = cp[3] * zeta / h
                add("pen4", g, p4 * np.einsum("q,q,qik,qij,qjl->kl",
                                              ww, mg, vals, proj, vals))
                u_hat = eblock["u_hat"][sl]
                u3_hat = np.einsum("qi,qi->q", u_hat, a3)
                u_hat_in = u_hat - a3 * u3_hat[:, None]
                F[g] += (-np.einsum("q,qik,qi->k", ww, ersatz, u_hat)
                         + p1 * np.einsum("q,q,qk,q->k", ww, mg, u3, u3_hat)
                         + p4 * np.einsum("q,q,qik,qi->k", ww, mg, vals,
                                          u_hat_in))
            else:
                t_hat = eblock["traction_hat"][sl]
                F[g] += np.einsum("q,qik,qi->k", ww, vals, t_hat)

            if bt.is_d2:
                theta = ops.theta_n[sl]
                b_nn = ops.b_nn[sl]
                m_cs = np.einsum("q,qk,ql->kl", ww, theta, b_nn)
                add("consistency", g, -m_cs)
                add("symmetry", g, -m_cs.T)
                p3 = cp[2] * zeta ** 3 / h
                add("pen3", g, p3 * np.einsum("q,q,qk,ql->kl",
                                              ww, mg, theta, theta))
                th_hat = eblock["theta_hat"][sl]
                F[g] += (-np.einsum("q,qk,q->k", ww, b_nn, th_hat)
                         + p3 * np.einsum("q,q,qk,q->k", ww, mg, theta,
                                          th_hat))
            else:
                bnn_hat = eblock["b_nn_hat"][sl]
                F[g] += np.einsum("q,qk,q->k", ww, ops.theta_n[sl], bnn_hat)

    # Corner terms.
    chi_d, chi_n = spec.corner_sets()
    for corner in CORNERS:
        cb = corner_operator_bundle(spec, patch, corner, variant)
        g = cb["gdofs"]
        centry = load.corners[corner]
        h = topo.h_corner(corner)
        if corner in chi_d:
            m_cs = np.outer(cb["u3"], cb["jump"])
            add("consistency", g, -m_cs)
            add("symmetry", g, -m_cs.T)
            p2 = cp[1] * zeta ** 3 * cb["mag"] / h ** 2
            add("pen2", g, p2 * np.outer(cb["u3"], cb["u3"]))
            u3_hat = float(np.dot(centry["u"], cb["a3"]))
            F[g] += -cb["jump"] * u3_hat + p2 * cb["u3"] * u3_hat
        else:
            F[g] += centry["s"] * cb["u3"]

    if not np.all(np.isfinite(K)) or not np.all(np.isfinite(F)):
        raise AssemblyError("non-finite entries in assembled system")
    return AssembledSystem(K, F, ndof, (n1, n2), fam)


def dump_system(system: AssembledSystem, path):
    """Text dump of K (coordinate triplets) and F for external inspection."""
    K, F = system.K, system.F
    nz = np.argwhere(K != 0.0)
    with open(path, "w") as fh:
        fh.write("%%MatrixMarket matrix coordinate real symmetric-stored-full\n")
        fh.write(f"% klshell stiffness ndof={system.ndof}\n")
        fh.write(f"{K.shape[0]} {K.shape[1]} {len(nz)}\n")
        for i, j in nz:
            fh.write(f"{i + 1} {j + 1} {float(K[i, j])!r}\n")
        fh.write(f"% rhs {len(F)}\n")
        for v in F:
            fh.write(f"{float(v)!r}\n")
