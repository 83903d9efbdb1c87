"""Error measurement, convergence studies and variational-consistency checks.

Errors against the manufactured fields are reported in four norms: relative
L2 and H1 (domain-diameter scaled), the strain-energy seminorm sqrt(a^S(e,e)),
and the stabilized "triple" norm that adds the trace-weighted boundary
operator terms and penalty-weighted trace terms.  Rate fits are least-squares
slopes in log-log, with points flagged as roundoff-dominated once the error
stops decreasing under refinement.

The generalized Green's identity residual implemented here is the package's
master consistency oracle: it vanishes for the variationally consistent
ersatz force on every geometry and is O(1) for the classical (incorrect)
variant on curved geometries.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from . import quadrature
from .assembly import (AssembledSystem, PenaltyConfig, assemble, build_mesh)
from .geometry import CORNERS, CORNER_EDGES, EDGES, build_edge_frame, build_frame
from .jets import jet_from_partials
from .linsolve import solve_spd
from .mechanics import (boundary_actions, edge_actions_from_jets, elasticity,
                        field_kinematics, geometry_jets, strong_form_from_jets)
from .problems import (ProblemSpec, eval_exact, generate_load_data,
                       get_problem)
from .splines import nurbs_basis_partials, refine, surface_partials
from .trace import TraceCache, compute_penalties, compute_trace_constants

__all__ = ["error_norms", "fit_rate", "run_study", "StudyCell",
           "ConvergenceReport", "recover_multiplier",
           "greens_identity_residual", "spline_field_table",
           "solve_problem", "interpolate_exact"]


def spline_field_table(patch, coeffs, xi1, xi2, order):
    """Mixed partials (n, 3, order+1, order+1) of a coefficient field."""
    funcs, ders = nurbs_basis_partials(patch, xi1, xi2, order)
    c = np.asarray(coeffs, dtype=float).reshape(-1, 3)
    return np.einsum("qabf,qfi->qiab", ders, c[funcs])


def interpolate_exact(spec: ProblemSpec, patch):
    """Coefficients collocating the exact field at Greville points.

    Reproduces in-span fields up to interpolation conditioning; used for
    matrix-level consistency checks.
    """
    gu = patch.knots[0].greville()
    gv = patch.knots[1].greville()
    n1, n2 = len(gu), len(gv)
    uu, vv = np.meshgrid(gu, gv, indexing="ij")
    pts_u, pts_v = uu.ravel(), vv.ravel()
    funcs, ders = nurbs_basis_partials(patch, pts_u, pts_v, 0)
    A = np.zeros((n1 * n2, n1 * n2))
    rows = np.arange(n1 * n2)
    A[rows[:, None], funcs] = ders[:, 0, 0, :]
    rhs = eval_exact(spec, pts_u, pts_v, 0)[:, :, 0, 0]
    coeffs = np.linalg.solve(A, rhs)
    return coeffs.reshape(-1)


def _h1_seminorm_sq(frame, tab, w):
    d1 = np.stack([tab[:, :, 1, 0], tab[:, :, 0, 1]], axis=2)  # (n, 3, 2)
    return float(np.einsum("q,qlm,qil,qim->", w, frame.a_up, d1, d1))


def error_norms(spec: ProblemSpec, patch, topo, coeffs,
                penalties: PenaltyConfig = None, n_err: int = 25):
    """Relative L2/H1/energy/triple errors of a discrete solution."""
    mat = spec.material
    ell = spec.patch.diameter()
    xi, wt, _ = quadrature.interior_grid(topo.mesh, n_err)
    frame = build_frame(surface_partials(patch, xi[:, 0], xi[:, 1], 2))
    w = wt * frame.det_a
    et = elasticity(frame, mat)

    uh = spline_field_table(patch, coeffs, xi[:, 0], xi[:, 1], 2)
    uex = eval_exact(spec, xi[:, 0], xi[:, 1], 2)
    err = uh - uex

    def l2_sq(tab):
        return float(np.einsum("q,qi,qi->", w, tab[:, :, 0, 0],
                               tab[:, :, 0, 0]))

    def h1_sq(tab):
        return l2_sq(tab) / ell ** 2 + _h1_seminorm_sq(frame, tab, w)

    def energy_sq(tab):
        st = field_kinematics(frame, tab, order=2)
        am = mat.zeta * np.einsum("nablm,nlm->nab", et.c, st.membrane)
        bm = mat.zeta ** 3 / 12.0 * np.einsum("nablm,nlm->nab", et.c,
                                              st.bending)
        return float(np.einsum("q,qab,qab->", w, am, st.membrane)
                     + np.einsum("q,qab,qab->", w, bm, st.bending))

    out = {
        "l2": np.sqrt(l2_sq(err) / l2_sq(uex)),
        "h1": np.sqrt(h1_sq(err) / h1_sq(uex)),
        "energy": np.sqrt(energy_sq(err) / energy_sq(uex)),
    }
    if penalties is not None:
        tri_e = energy_sq(err) + _boundary_norm_sq(spec, patch, topo, coeffs,
                                                   penalties, exact_delta=True)
        tri_x = energy_sq(uex) + _boundary_norm_sq(spec, patch, topo, None,
                                                   penalties, exact_delta=False)
        out["triple"] = np.sqrt(tri_e / tri_x)
    return out


def _edge_field_actions(spec, patch, xi, edge):
    """Boundary actions of the exact field at edge points (component route)."""
    tab = eval_exact(spec, xi[:, 0], xi[:, 1], 3)
    frame = build_frame(surface_partials(patch, xi[:, 0], xi[:, 1], 3))
    eframe = build_edge_frame(frame, edge)
    et = elasticity(frame, spec.material)
    st = field_kinematics(frame, tab, order=3)
    acts = boundary_actions(frame, eframe, et, st, spec.material)
    return tab, frame, eframe, et, acts


def _boundary_norm_sq(spec, patch, topo, coeffs, penalties, exact_delta,
                      n_edge=25):
    """Boundary part of the triple norm squared.

    With ``exact_delta`` the field is u_h - u_exact (coeffs given); otherwise
    the exact field itself is measured.
    """
    mat = spec.material
    zeta = mat.zeta
    c_tr = np.where(penalties.c_tr > 0, penalties.c_tr, np.inf)
    cp = penalties.c_pen
    total = 0.0
    for edge in EDGES:
        bt = spec.edges[edge]
        if not (bt.is_d1 or bt.is_d2):
            continue
        xi, wpar, elems = quadrature.edge_grid(edge, topo.mesh, n_edge)
        tab = eval_exact(spec, xi[:, 0], xi[:, 1], 3)
        if exact_delta:
            tab = spline_field_table(patch, coeffs, xi[:, 0], xi[:, 1], 3) - tab
        frame = build_frame(surface_partials(patch, xi[:, 0], xi[:, 1], 3))
        eframe = build_edge_frame(frame, edge)
        et = elasticity(frame, mat)
        st = field_kinematics(frame, tab, order=3)
        acts = boundary_actions(frame, eframe, et, st, mat)
        w = wpar * eframe.s_norm
        h_of = np.array([topo.h_edge(edge, k) for k in range(topo.mesh)])
        h = np.repeat(h_of, n_edge)
        mag = et.mag
        vals = tab[:, :, 0, 0]
        u3 = np.einsum("qi,qi->q", vals, frame.a3)
        uin = vals - frame.a3 * u3[:, None]
        uin_sq = np.einsum("qi,qi->q", uin, uin)
        if bt.is_d1:
            t_b_sq = np.einsum("qab,qa,qb->q", frame.a_lo, acts.t_bend_up,
                               acts.t_bend_up)
            t_a_sq = np.einsum("qab,qa,qb->q", frame.a_lo, acts.t_mem_up,
                               acts.t_mem_up)
            total += float(np.sum(w * (
                h ** 3 / (c_tr[0] * zeta ** 3 * mag) * acts.t3 ** 2
                + h / (c_tr[3] * zeta ** 3 * mag) * t_b_sq
                + h / (c_tr[4] * zeta * mag) * t_a_sq
                + 2.0 * cp[0] * zeta ** 3 * mag / h ** 3 * u3 ** 2
                + 2.0 * cp[3] * zeta * mag / h * uin_sq)))
        if bt.is_d2:
            total += float(np.sum(w * (
                h / (c_tr[2] * zeta ** 3 * mag) * acts.b_nn ** 2
                + 2.0 * cp[2] * zeta ** 3 * mag / h * acts.theta_n ** 2)))

    chi_d, _ = spec.corner_sets()
    for corner in chi_d:
        before, after = CORNER_EDGES[corner]
        x1 = np.array([corner[0]])
        x2 = np.array([corner[1]])
        tab = eval_exact(spec, x1, x2, 3)
        if exact_delta:
            tab = spline_field_table(patch, coeffs, x1, x2, 3) - tab
        frame = build_frame(surface_partials(patch, x1, x2, 3))
        et = elasticity(frame, mat)
        st = field_kinematics(frame, tab, order=3)
        bnt = {}
        for e in (before, after):
            ef = build_edge_frame(frame, e)
            bnt[e] = boundary_actions(frame, ef, et, st, mat).b_nt[0]
        jump = bnt[after] - bnt[before]
        u3 = float(tab[0, :, 0, 0] @ frame.a3[0])
        h = topo.h_corner(corner)
        total += (h ** 2 / (c_tr[1] * zeta ** 3 * et.mag[0]) * jump ** 2
                  + 2.0 * cp[1] * zeta ** 3 * et.mag[0] / h ** 2 * u3 ** 2)
    return total


def fit_rate(h_values, errors, tail: int = None):
    """Log-log slope over unflagged points.

    A point is flagged as roundoff-dominated when its error did not decrease
    from the previous unflagged refinement; flagged points are excluded from
    the fit.  ``tail`` restricts the fit to the last so-many unflagged points.
    """
    h = np.asarray(h_values, dtype=float)
    e = np.asarray(errors, dtype=float)
    if len(h) != len(e):
        raise ValueError("length mismatch")
    flags = np.zeros(len(e), dtype=bool)
    prev = None
    for i in range(len(e)):
        if e[i] <= 0 or not np.isfinite(e[i]):
            flags[i] = True
            continue
        if prev is not None and e[i] >= prev:
            flags[i] = True
            continue
        prev = e[i]
    keep = ~flags
    if tail is not None:
        idx = np.where(keep)[0]
        keep = np.zeros_like(keep)
        keep[idx[-tail:]] = True
    if keep.sum() < 3:
        raise ValueError(
            f"insufficient unflagged data points for a rate fit "
            f"({int(keep.sum())} < 3)")
    slope = np.polyfit(np.log(h[keep]), np.log(e[keep]), 1)[0]
    return float(slope), flags


def recover_multiplier(spec, patch, topo, coeffs, penalties, n_edge=25):
    """Variationally consistent boundary reactions of a discrete solution.

    Implements the statically condensed multiplier -B u_h + eps^{-1}(T u_h -
    g) per Dirichlet edge and corner: an out-of-plane force density, an
    in-plane force density, a bending-moment reaction, and corner forces.
    """
    mat = spec.material
    zeta = mat.zeta
    cp = penalties.c_pen
    out = {"edges": {}, "corners": {}}
    for edge in EDGES:
        bt = spec.edges[edge]
        if not (bt.is_d1 or bt.is_d2):
            continue
        xi, wpar, _ = quadrature.edge_grid(edge, topo.mesh, n_edge)
        tab_h = spline_field_table(patch, coeffs, xi[:, 0], xi[:, 1], 3)
        tab_x = eval_exact(spec, xi[:, 0], xi[:, 1], 3)
        frame = build_frame(surface_partials(patch, xi[:, 0], xi[:, 1], 3))
        eframe = build_edge_frame(frame, edge)
        et = elasticity(frame, mat)
        acts_h = boundary_actions(frame, eframe, et,
                                  field_kinematics(frame, tab_h, 3), mat)
        h_of = np.array([topo.h_edge(edge, k) for k in range(topo.mesh)])
        h = np.repeat(h_of, n_edge)
        entry = {"xi": xi}
        if bt.is_d1:
            gap = tab_h[:, :, 0, 0] - tab_x[:, :, 0, 0]
            gap3 = np.einsum("qi,qi->q", gap, frame.a3)
            gap_in = gap - frame.a3 * gap3[:, None]
            t_h = acts_h.ersatz_cartesian(frame)
            lam = (-t_h
                   + frame.a3 * (cp[0] * zeta ** 3 * et.mag
                                 / h ** 3 * gap3)[:, None]
                   + gap_in * (cp[3] * zeta * et.mag / h)[:, None])
            entry["force"] = lam
        if bt.is_d2:
            th_gap = acts_h.theta_n - _exact_theta_n(spec, patch, xi, edge)
            entry["moment"] = (-acts_h.b_nn
                               + cp[2] * zeta ** 3 * et.mag / h * th_gap)
        out["edges"][edge] = entry

    chi_d, _ = spec.corner_sets()
    for corner in chi_d:
        before, after = CORNER_EDGES[corner]
        x1 = np.array([corner[0]])
        x2 = np.array([corner[1]])
        tab_h = spline_field_table(patch, coeffs, x1, x2, 3)
        tab_x = eval_exact(spec, x1, x2, 3)
        frame = build_frame(surface_partials(patch, x1, x2, 3))
        et = elasticity(frame, mat)
        st = field_kinematics(frame, tab_h, 3)
        bnt = {}
        for e in (before, after):
            ef = build_edge_frame(frame, e)
            bnt[e] = boundary_actions(frame, ef, et, st, mat).b_nt[0]
        jump = bnt[after] - bnt[before]
        gap3 = float((tab_h - tab_x)[0, :, 0, 0] @ frame.a3[0])
        h = topo.h_corner(corner)
        out["corners"][corner] = (-jump + cp[1] * zeta ** 3 * et.mag[0]
                                  / h ** 2 * gap3)
    return out


def _exact_theta_n(spec, patch, xi, edge):
    tab = eval_exact(spec, xi[:, 0], xi[:, 1], 1)
    frame = build_frame(surface_partials(patch, xi[:, 0], xi[:, 1], 2))
    eframe = build_edge_frame(frame, edge)
    d1 = np.stack([tab[:, :, 1, 0], tab[:, :, 0, 1]], axis=2)
    return -np.einsum("ni,nil,nl->n", frame.a3, d1, eframe.n_up)


def greens_identity_residual(spec: ProblemSpec, degree: int = 4,
                             mesh: int = 1, n_quad: int = 25,
                             n_pairs: int = 5, variant: bool = False,
                             seed: int = 0):
    """Residuals of a^S(w, v) = <Lw, v> + <Bw, Tv> for random in-span pairs.

    Fields are random spline coefficient vectors of the requested degree on
    the problem geometry; all terms are quadrature-evaluated (interior
    strong form via jets, boundary ersatz/moment/corner terms over the whole
    boundary).  Returns a list of dicts with lhs, rhs and the relative
    residual.  With ``variant`` the inconsistent ersatz force is used, which
    breaks the identity on curved geometries.
    """
    if degree < 4:
        raise ValueError("identity check needs degree >= 4 fields")
    patch = refine(spec.patch, degree, mesh)
    mat = spec.material
    rng = np.random.default_rng(seed)
    nfuncs = patch.knots[0].n_basis * patch.knots[1].n_basis
    xi, wt, _ = quadrature.interior_grid(mesh, n_quad)
    frame = build_frame(surface_partials(patch, xi[:, 0], xi[:, 1], 2))
    et = elasticity(frame, mat)
    w_q = wt * frame.det_a
    geom = geometry_jets(patch, xi[:, 0], xi[:, 1], order=4)

    results = []
    for _ in range(n_pairs):
        cw = rng.standard_normal((nfuncs, 3)) * 0.01
        cv = rng.standard_normal((nfuncs, 3)) * 0.01

        tab_w = spline_field_table(patch, cw, xi[:, 0], xi[:, 1], 2)
        tab_v = spline_field_table(patch, cv, xi[:, 0], xi[:, 1], 2)
        st_w = field_kinematics(frame, tab_w, 2)
        st_v = field_kinematics(frame, tab_v, 2)
        am = mat.zeta * np.einsum("nablm,nlm->nab", et.c, st_w.membrane)
        bm = mat.zeta ** 3 / 12.0 * np.einsum("nablm,nlm->nab", et.c,
                                              st_w.bending)
        lhs = float(np.einsum("q,qab,qab->", w_q, am, st_v.membrane)
                    + np.einsum("q,qab,qab->", w_q, bm, st_v.bending))

        tab_w4 = spline_field_table(patch, cw, xi[:, 0], xi[:, 1], 4)
        wjets = [jet_from_partials(tab_w4[:, i], 4) for i in range(3)]
        f = strong_form_from_jets(geom, wjets, mat)
        fv = np.stack([f[i].value for i in range(3)], axis=1)
        rhs = float(np.einsum("q,qi,qi->", w_q, fv, tab_v[:, :, 0, 0]))

        for edge in EDGES:
            exi, ew, _ = quadrature.edge_grid(edge, mesh, n_quad)
            gj = geometry_jets(patch, exi[:, 0], exi[:, 1], order=4)
            wt_e = spline_field_table(patch, cw, exi[:, 0], exi[:, 1], 4)
            wj = [jet_from_partials(wt_e[:, i], 4) for i in range(3)]
            acts = edge_actions_from_jets(gj, wj, mat, edge,
                                          inconsistent_ersatz=variant)
            sig = acts["sigma"].value
            t_c = np.stack([acts["ersatz"][i].value for i in range(3)], 1)
            tab_v1 = spline_field_table(patch, cv, exi[:, 0], exi[:, 1], 1)
            fr_e = build_frame(surface_partials(patch, exi[:, 0],
                                                exi[:, 1], 2))
            ef_e = build_edge_frame(fr_e, edge)
            d1v = np.stack([tab_v1[:, :, 1, 0], tab_v1[:, :, 0, 1]], axis=2)
            th_v = -np.einsum("ni,nil,nl->n", fr_e.a3, d1v, ef_e.n_up)
            rhs += float(np.einsum("n,ni,ni->", ew * sig, t_c,
                                   tab_v1[:, :, 0, 0]))
            rhs += float(np.einsum("n,n,n->", ew * sig,
                                   acts["b_nn"].value, th_v))

        for corner in CORNERS:
            before, after = CORNER_EDGES[corner]
            x1 = np.array([corner[0]])
            x2 = np.array([corner[1]])
            gj = geometry_jets(patch, x1, x2, order=4)
            wt_c = spline_field_table(patch, cw, x1, x2, 4)
            wj = [jet_from_partials(wt_c[:, i], 4) for i in range(3)]
            bnt = {e: edge_actions_from_jets(gj, wj, mat, e)["b_nt"].value[0]
                   for e in (before, after)}
            fr_c = build_frame(surface_partials(patch, x1, x2, 2))
            v3 = float(spline_field_table(patch, cv, x1, x2, 0)[0, :, 0, 0]
                       @ fr_c.a3[0])
            rhs += (bnt[after] - bnt[before]) * v3

        results.append({"lhs": lhs, "rhs": rhs,
                        "residual": abs(lhs - rhs),
                        "relative": abs(lhs - rhs) / max(abs(lhs), 1e-300)})
    return results


# ---------------------------------------------------------------------------
# Study orchestration
# ---------------------------------------------------------------------------

@dataclass
class StudyCell:
    problem: int
    degree: int
    mesh: int
    h_max: float
    errors: dict = None
    failure: str = None


@dataclass
class ConvergenceReport:
    cells: list = field(default_factory=list)
    slopes: dict = field(default_factory=dict)   # (problem, degree, norm) -> slope
    flags: dict = field(default_factory=dict)    # (problem, degree, norm) -> [bool]
    meta: dict = field(default_factory=dict)

    def cell(self, problem, degree, mesh):
        for c in self.cells:
            if (c.problem, c.degree, c.mesh) == (problem, degree, mesh):
                return c
        raise KeyError((problem, degree, mesh))

    def to_json(self):
        return json.dumps({
            "meta": self.meta,
            "cells": [{"problem": c.problem, "degree": c.degree,
                       "mesh": c.mesh, "h_max": c.h_max,
                       "errors": c.errors, "failure": c.failure}
                      for c in self.cells],
            "slopes": {f"p{k[0]}_deg{k[1]}_{k[2]}": v
                       for k, v in self.slopes.items()},
        }, indent=1)

    def to_csv(self):
        lines = ["problem,degree,mesh,h_max,norm,error,failure"]
        for c in self.cells:
            if c.errors is None:
                lines.append(f"{c.problem},{c.degree},{c.mesh},{c.h_max},,"
                             f",{c.failure}")
                continue
            for norm, err in c.errors.items():
                lines.append(f"{c.problem},{c.degree},{c.mesh},{c.h_max},"
                             f"{norm},{err!r},")
        return "\n".join(lines) + "\n"


def default_interior_rule(degree: int) -> int:
    """Interior stiffness points per direction.

    Chosen so that in-span manufactured fields are reproduced to roundoff on
    coarse meshes (the rational geometry integrands are not exactly
    integrable; p+1 points leave a consistency floor above 1e-9).
    """
    return degree + 5


def default_load_rule(mesh: int) -> int:
    """Load/error quadrature points per direction and element.

    The strongly nonlinear manufactured loads need the dense 25x25 rule on
    coarse meshes; under refinement the per-element rule is relaxed while the
    global point count per direction stays near a hundred, keeping the
    quadrature error orders below the discretization error.
    """
    return int(min(25, max(7, np.ceil(96 / mesh))))


def solve_problem(spec_or_id, degree, mesh, gammas=(2.0, 2.0, 2.0, 2.0),
                  n_interior=None, n_edge=25, n_load=None, n_err=None,
                  variant=False, load=None, penalties=None, trace_cache=None,
                  trace_mesh=4, precision="double", workers=1):
    """Full pipeline for one study cell; returns a result dict."""
    spec = spec_or_id if isinstance(spec_or_id, ProblemSpec) \
        else get_problem(spec_or_id)
    if n_interior is None:
        n_interior = default_interior_rule(degree)
    if n_load is None:
        n_load = default_load_rule(mesh)
    if n_err is None:
        n_err = default_load_rule(mesh)
    patch = refine(spec.patch, degree, mesh)
    topo = build_mesh(patch)

    if penalties is None:
        cache = trace_cache if trace_cache is not None else TraceCache(None)
        tm = min(trace_mesh, mesh)
        tc = cache.get(spec.id, degree, tm)
        if tc is None:
            tpatch = refine(spec.patch, degree, tm)
            ttopo = build_mesh(tpatch)
            tc = compute_trace_constants(spec, tpatch, ttopo,
                                         n_quad_interior=n_interior,
                                         n_edge=n_edge, degree=degree)
            cache.put(tc)
        penalties = compute_penalties(tc, gammas)

    if load is None:
        load = generate_load_data(spec, mesh, n_interior=n_load,
                                  n_edge=n_edge, degree=degree,
                                  precision=precision)
    system = assemble(spec, patch, topo, penalties, load,
                      n_quad_interior=n_interior, n_edge=n_edge,
                      n_load=n_load, variant=variant, workers=workers)
    report = solve_spd(system.K, system.F)
    errors = error_norms(spec, patch, topo, report.x, penalties, n_err=n_err)
    return {"spec": spec, "patch": patch, "topo": topo, "system": system,
            "solve": report, "errors": errors, "penalties": penalties,
            "coeffs": report.x, "h_max": float(topo.h_k.max())}


def run_study(problems, degrees, meshes, variant=False, gammas=(2.0,) * 4,
              n_edge=25, n_load=None, trace_cache=None, precision="double",
              tail=None, workers=1, progress=None) -> ConvergenceReport:
    """Cartesian (problem, degree, mesh) sweep with shared caches.

    Trace constants are computed once per (problem, degree) on the coarsest
    study mesh and reused; load data are shared across degrees per mesh.
    Per-cell failures are recorded and the sweep continues.
    """
    report = ConvergenceReport(meta={
        "variant": bool(variant), "gammas": list(gammas),
        "n_edge": n_edge, "n_load": n_load, "precision": precision})
    cache = trace_cache if trace_cache is not None else TraceCache(None)
    meshes = sorted(meshes)
    for pid in problems:
        spec = get_problem(pid)
        loads = {}
        for degree in degrees:
            for mesh in meshes:
                nl = n_load if n_load is not None else default_load_rule(mesh)
                if mesh not in loads:
                    loads[mesh] = generate_load_data(
                        spec, mesh, n_interior=nl, n_edge=n_edge,
                        degree=degree, precision=precision)
                try:
                    res = solve_problem(
                        spec, degree, mesh, gammas=gammas, n_edge=n_edge,
                        n_load=nl, variant=variant, load=loads[mesh],
                        trace_cache=cache, trace_mesh=min(4, min(meshes)),
                        workers=workers)
                    cell = StudyCell(pid, degree, mesh, res["h_max"],
                                     res["errors"])
                except Exception as exc:  # record, keep sweeping
                    cell = StudyCell(pid, degree, mesh, float("nan"),
                                     None, failure=f"{type(exc).__name__}: {exc}")
                report.cells.append(cell)
                if progress is not None:
                    progress(cell)
        for degree in degrees:
            cells = [c for c in report.cells
                     if c.problem == pid and c.degree == degree
                     and c.errors is not None]
            if len(cells) < 3:
                continue
            # Rate fits use the dyadic ladder spacing: the measured physical
            # h_max converges to halving but carries curvature-dependent
            # measurement noise on coarse meshes that biases slopes.
            hs = [1.0 / c.mesh for c in cells]
            for norm in cells[0].errors:
                errs = [c.errors[norm] for c in cells]
                try:
                    slope, flags = fit_rate(hs, errs, tail=tail)
                    report.slopes[(pid, degree, norm)] = slope
                    report.flags[(pid, degree, norm)] = flags.tolist()
                except ValueError:
                    report.slopes[(pid, degree, norm)] = None
    return report
