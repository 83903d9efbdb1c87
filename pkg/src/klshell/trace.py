"""Trace constants from generalized eigenproblems, and derived penalties.

Each discrete trace inequality pairs a weighted boundary quadratic form A
with the interior strain energy B = a^S; the inequality constant follows from
the largest finite eigenvalue of (A - lambda B) x = 0.  Rigid modes lie in
the kernel of both matrices, so the pencil is regularized with a small
diagonal shift of B and the reported eigenvalue is accepted only if it is
stable under shrinking that shift.

Convention: substituting the eigenproblem bound back into the inequality
requires C_tr = 5 lambda_max (the factor-1/5 form stated alongside the
eigenproblem in the source analysis does not satisfy the inequality as
written, so it is exposed only as an explicit compatibility switch).
"""

import json
import os
from dataclasses import dataclass

import numpy as np

from .assembly import (MeshTopology, PenaltyConfig, assemble_interior,
                       corner_operator_bundle, edge_operator_batches)
from .geometry import CORNERS
from .linsolve import EigenSolveError, sym_gen_eig
from .problems import ProblemSpec

__all__ = ["TraceConstants", "assemble_trace_pencil",
           "largest_finite_eigenvalue", "compute_trace_constants",
           "compute_penalties", "TraceCache"]


@dataclass
class TraceConstants:
    lambda_max: np.ndarray   # (5,)
    c_tr: np.ndarray         # (5,)
    problem_id: int
    degree: int
    mesh: int
    convention: str = "five-times"


def _pairing_lo(a_lo, comps_up_k, comps_up_l, w):
    """Weighted metric pairing of two (q, 2, nloc) contravariant operators."""
    return np.einsum("q,qab,qak,qbl->kl", w, a_lo, comps_up_k, comps_up_l)


def assemble_trace_pencil(spec: ProblemSpec, patch, topo: MeshTopology,
                          which: int, n_quad_interior: int, n_edge: int = 25):
    """Matrices (A, B) of trace inequality ``which`` in 1..5.

    A carries the boundary form with weights h^3/(z^3|C|), h^2/(z^3|C|),
    h/(z^3|C|), h/(z^3|C|) and h/(z|C|) for the transverse ersatz force,
    corner jumps, bending moment, and the bending/membrane parts of the
    in-plane ersatz force respectively; B is the strain-energy matrix.
    """
    if which not in (1, 2, 3, 4, 5):
        raise ValueError("inequality index must be in 1..5")
    mat = spec.material
    zeta = mat.zeta
    ndof = 3 * patch.knots[0].n_basis * patch.knots[1].n_basis
    A = np.zeros((ndof, ndof))

    if which == 2:
        chi_d, _ = spec.corner_sets()
        for corner in CORNERS:
            if corner not in chi_d:
                continue
            cb = corner_operator_bundle(spec, patch, corner)
            h = topo.h_corner(corner)
            wgt = h ** 2 / (zeta ** 3 * cb["mag"])
            g = cb["gdofs"]
            A[np.ix_(g, g)] += wgt * np.outer(cb["jump"], cb["jump"])
    else:
        for batch in edge_operator_batches(spec, patch, topo, n_edge):
            bt = batch["btype"]
            if which in (1, 4, 5) and not bt.is_d1:
                continue
            if which == 3 and not bt.is_d2:
                continue
            ops, w, mag = batch["ops"], batch["w"], batch["mag"]
            blk = batch["n_edge"]
            for k in range(topo.mesh):
                sl = slice(k * blk, (k + 1) * blk)
                g = _global_dofs_from(batch["funcs"][sl.start])
                h = topo.h_edge(batch["edge"], k)
                if which == 1:
                    wq = w[sl] * h ** 3 / (zeta ** 3 * mag[sl])
                    t3 = ops.t3[sl]
                    A[np.ix_(g, g)] += np.einsum("q,qk,ql->kl", wq, t3, t3)
                elif which == 3:
                    wq = w[sl] * h / (zeta ** 3 * mag[sl])
                    bnn = ops.b_nn[sl]
                    A[np.ix_(g, g)] += np.einsum("q,qk,ql->kl", wq, bnn, bnn)
                elif which == 4:
                    wq = w[sl] * h / (zeta ** 3 * mag[sl])
                    A[np.ix_(g, g)] += _pairing_lo(
                        batch["frame"].a_lo[sl],
                        ops.t_bend_up[sl], ops.t_bend_up[sl], wq)
                else:
                    wq = w[sl] * h / (zeta * mag[sl])
                    A[np.ix_(g, g)] += _pairing_lo(
                        batch["frame"].a_lo[sl],
                        ops.t_mem_up[sl], ops.t_mem_up[sl], wq)

    B = assemble_interior(spec, patch, topo, n_quad_interior)
    return A, B


def _global_dofs_from(funcs_row):
    return (3 * np.repeat(funcs_row, 3)
            + np.tile(np.arange(3), len(funcs_row)))


def largest_finite_eigenvalue(A, B, delta: float = 1e-10) -> float:
    """Largest finite eigenvalue of (A - lambda B) x = 0.

    The common null space (rigid modes) is deflated by regularizing B with a
    relative diagonal shift; the result must move by less than 1% when the
    shift shrinks tenfold, otherwise the computation is reported as failed.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    n = A.shape[0]
    if not np.any(A):
        return 0.0
    scale = np.trace(B) / n

    def top(d):
        vals, _ = sym_gen_eig(A, B + d * scale * np.eye(n))
        return float(vals[-1])

    lam = top(delta)
    lam_check = top(delta / 10.0)
    if lam <= 0.0:
        return 0.0
    if abs(lam_check - lam) > 0.01 * abs(lam):
        raise EigenSolveError(
            f"trace eigenvalue unstable under regularization: {lam:.6e} vs "
            f"{lam_check:.6e} (delta {delta:g} vs {delta / 10:g})")
    return lam_check


def compute_trace_constants(spec: ProblemSpec, patch, topo, n_quad_interior,
                            n_edge: int = 25, degree: int = None,
                            convention: str = "five-times") -> TraceConstants:
    """All five constants for one (problem, discretization) pair."""
    if convention not in ("five-times", "paper-literal"):
        raise ValueError("convention must be 'five-times' or 'paper-literal'")
    lams = np.empty(5)
    B = None
    for i in range(5):
        A, Bi = assemble_trace_pencil(spec, patch, topo, i + 1,
                                      n_quad_interior, n_edge)
        B = Bi if B is None else B
        lams[i] = largest_finite_eigenvalue(A, B)
    factor = 5.0 if convention == "five-times" else 0.2
    c_tr = factor * lams
    # A vanishing constant (empty Dirichlet set) would zero the matching
    # penalty; keep the term inactive but well-defined.
    c_tr = np.where(c_tr > 0.0, c_tr, 0.0)
    if degree is None:
        degree = patch.degrees[0]
    return TraceConstants(lams, c_tr, spec.id, degree, topo.mesh, convention)


def compute_penalties(constants: TraceConstants,
                      gammas=(2.0, 2.0, 2.0, 2.0)) -> PenaltyConfig:
    return PenaltyConfig(constants.c_tr, np.asarray(gammas, dtype=float))


class TraceCache:
    """JSON sidecar of trace constants keyed by (problem, degree, mesh)."""

    def __init__(self, path):
        self.path = path
        self._data = {}
        if path is not None and os.path.exists(path):
            with open(path) as fh:
                self._data = json.load(fh)

    @staticmethod
    def _key(problem_id, degree, mesh, convention):
        return f"p{problem_id}_deg{degree}_mesh{mesh}_{convention}"

    def get(self, problem_id, degree, mesh, convention="five-times"):
        rec = self._data.get(self._key(problem_id, degree, mesh, convention))
        if rec is None:
            return None
        return TraceConstants(np.asarray(rec["lambda_max"]),
                              np.asarray(rec["c_tr"]), problem_id, degree,
                              mesh, convention)

    def put(self, tc: TraceConstants):
        self._data[self._key(tc.problem_id, tc.degree, tc.mesh,
                             tc.convention)] = {
            "lambda_max": list(map(float, tc.lambda_max)),
            "c_tr": list(map(float, tc.c_tr)),
        }
        if self.path is not None:
            with open(self.path, "w") as fh:
                json.dump(self._data, fh, indent=1)
