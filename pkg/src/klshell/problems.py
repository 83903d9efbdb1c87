"""The eight-problem manufactured-solution obstacle course.

Each problem is a one-element biquadratic NURBS patch (flat, parabolic,
hyperbolic or elliptic), an exact displacement field with derivatives to
fourth order, and a per-edge boundary-condition layout.  Exact fields that
ride on the surface frame (radial/transverse modes) are composed with the
geometry through jet arithmetic, so director derivatives are exact to the
truncation order.

Boundary data are manufactured from the exact field: the strong-form body
force in the interior, ersatz traction and bending moment on Neumann edges,
displacement and normal rotation on Dirichlet edges, and twisting-moment
jumps at free corners.  Where the physical configuration would leave a side
unconstrained, the corresponding nonhomogeneous data are prescribed instead
(emulated supports), which leaves the exact solution unchanged.

Edge-to-side assignments not pinned down by the geometry are a documented
registry choice; since all boundary data come from the exact solution, any
layout with a nonempty displacement-Dirichlet set converges to the same
field.
"""

import json
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import quadrature
from .ddarith import DD
from .geometry import CORNERS, CORNER_EDGES, EDGES
from .jets import jet_variable, partials_from_jet
from .mechanics import (Material, edge_actions_from_jets, geometry_jets,
                        strong_form_from_jets)
from .splines import KnotVector, NurbsPatch

__all__ = ["BoundaryType", "ProblemSpec", "LoadData", "get_problem",
           "eval_exact", "generate_load_data", "export_load_data",
           "import_load_data", "PROBLEM_IDS"]

PROBLEM_IDS = tuple(range(1, 9))

_SQ2 = float(np.sqrt(2.0))
_ISQ2 = float(np.sqrt(0.5))
_SQ3 = float(np.sqrt(3.0))


class BoundaryType(Enum):
    CLAMPED = "clamped"
    SIMPLY_SUPPORTED = "simply_supported"
    SYMMETRIC = "symmetric"
    FREE = "free"

    @property
    def is_d1(self):
        return self in (BoundaryType.CLAMPED, BoundaryType.SIMPLY_SUPPORTED)

    @property
    def is_d2(self):
        return self in (BoundaryType.CLAMPED, BoundaryType.SYMMETRIC)


class LoadDataError(ValueError):
    """Malformed or mismatching manufactured-load file."""


@dataclass(frozen=True)
class ProblemSpec:
    id: int
    patch: NurbsPatch
    edges: dict
    material: Material
    description: str
    field: callable   # (xi1_jet, xi2_jet, geom_jets) -> [3 jets]

    def corner_sets(self):
        """chi_D / chi_N split: a corner is Dirichlet if an adjacent edge
        carries a displacement condition (closure of Gamma_D1)."""
        chi_d, chi_n = [], []
        for c in CORNERS:
            before, after = CORNER_EDGES[c]
            if self.edges[before].is_d1 or self.edges[after].is_d1:
                chi_d.append(c)
            else:
                chi_n.append(c)
        return tuple(chi_d), tuple(chi_n)


def _one_element_patch(points, weights):
    """Biquadratic patch from 9 points listed with the xi^1 index fastest."""
    kv = KnotVector(np.array([0, 0, 0, 1, 1, 1.0]), 2)
    cp = np.empty((3, 3, 3))
    w = np.empty((3, 3))
    for j in range(3):
        for i in range(3):
            cp[i, j] = points[3 * j + i]
            w[i, j] = weights[3 * j + i]
    return NurbsPatch((2, 2), (kv, kv), cp, w)


def _director(geom_jets):
    a1 = [c.deriv(0) for c in geom_jets]
    a2 = [c.deriv(1) for c in geom_jets]
    cr = [a1[1] * a2[2] - a1[2] * a2[1],
          a1[2] * a2[0] - a1[0] * a2[2],
          a1[0] * a2[1] - a1[1] * a2[0]]
    inv = (cr[0] * cr[0] + cr[1] * cr[1] + cr[2] * cr[2]).sqrt().reciprocal()
    return [c * inv for c in cr]


def _field_1(x1, x2, geom):
    a1 = [c.deriv(0) for c in geom]
    inv_norm = (a1[0] * a1[0] + a1[1] * a1[1] + a1[2] * a1[2]).sqrt().reciprocal()
    a3 = _director(geom)
    radial = x1 * inv_norm
    trans = (x1.exp() - 1.0) * x1
    return [radial * a1[i] + trans * a3[i] for i in range(3)]


def _field_2(x1, x2, geom):
    ux = (x1 - 1.0) * (x1 - 1.0) * x1 * x1 * (0.5 - x2) * (1.0 - x2) * x2
    uy = (x2 - 1.0) * (x2 - 1.0) * x2 * x2 * (0.5 - x1) * (1.0 - x1) * x1
    uz = (1.0 - x1) * x1 * (x1 * np.pi).sin() * (x2 * np.pi).sin()
    return [ux, uy, uz]


def _field_3(x1, x2, geom):
    a3 = _director(geom)
    prof = -(x1 - 1.0) * (x1 - 1.0) * x1 * x1 * x2 * (x2 - 1.0)
    return [prof * a3[i] for i in range(3)]


def _field_4(x1, x2, geom):
    a3 = _director(geom)
    prof = (x1 * np.pi).cos() * 0.5
    return [prof * a3[i] for i in range(3)]


def _field_5(x1, x2, geom):
    ux = (x1 * x1 - 1.0) * (x2 - 1.0) * x2 * _SQ2
    uy = (x1 - 2.0) * x1 * (x2 - 1.0) * x2 * _SQ2
    return [ux, uy, ux * 0.0]


def _field_6(x1, x2, geom):
    prof = x2 * (x2 * (np.pi / 2.0)).sin()
    return [prof, prof * 1.0, prof * 0.0]


def _field_7(x1, x2, geom):
    a3 = _director(geom)
    prof = -(x1 * np.pi).sin()
    return [prof * a3[i] for i in range(3)]


def _field_8(x1, x2, geom):
    uz = (x1 - 1.0) * (x1.exp() * (-1.0) + float(np.e))
    return [uz * 0.0, uz * 0.0, uz]


def _registry():
    mat = Material(E=1.0e7, nu=0.3, zeta=0.1)
    bt = BoundaryType
    entries = {}

    # Problem 1: flat quarter annulus, inner radius 1 (clamped) to outer
    # radius 2 (free); xi^1 radial with a linear radius map, xi^2 angular.
    arc = [(1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
    wa = [1.0, _ISQ2, 1.0]
    pts, ws = [], []
    for j in range(3):
        for r in (1.0, 1.5, 2.0):
            pts.append((r * arc[j][0], r * arc[j][1], 0.0))
            ws.append(wa[j])
    entries[1] = ProblemSpec(
        1, _one_element_patch(pts, ws),
        {"W": bt.CLAMPED, "E": bt.FREE, "S": bt.SYMMETRIC, "N": bt.SYMMETRIC},
        mat, "flat quarter annulus, linear radial stretch + exponential lift",
        _field_1)

    # Problem 2: flat astroid-like plate with inward-bowed edges.
    pts = [(0.0, 0.0, 0.0), (1 / 3, 0.5, 0.0), (0.0, 1.0, 0.0),
           (0.5, 1 / 3, 0.0), (0.5, 0.5, 0.0), (0.5, 2 / 3, 0.0),
           (1.0, 0.0, 0.0), (2 / 3, 0.5, 0.0), (1.0, 1.0, 0.0)]
    entries[2] = ProblemSpec(
        2, _one_element_patch(pts, [1.0] * 9),
        {"W": bt.CLAMPED, "E": bt.CLAMPED,
         "S": bt.SIMPLY_SUPPORTED, "N": bt.SIMPLY_SUPPORTED},
        mat, "flat astroid plate, in-plane vortex + sinusoidal deflection",
        _field_2)

    # Problems 3 & 4: quarter cylinder of radius 1, height 1; xi^1 along the
    # arc (rational direction), xi^2 axial.
    pts, ws = [], []
    for z in (0.0, 0.5, 1.0):
        for i in range(3):
            pts.append((arc[i][0], arc[i][1], z))
            ws.append(wa[i])
    cyl = _one_element_patch(pts, ws)
    entries[3] = ProblemSpec(
        3, cyl,
        {"W": bt.CLAMPED, "E": bt.CLAMPED,
         "S": bt.SIMPLY_SUPPORTED, "N": bt.SIMPLY_SUPPORTED},
        mat, "quarter cylinder, quartic-by-quadratic transverse field",
        _field_3)
    entries[4] = ProblemSpec(
        4, cyl,
        {"W": bt.SYMMETRIC, "E": bt.SYMMETRIC,
         "S": bt.SIMPLY_SUPPORTED, "N": bt.FREE},
        mat, "cylinder (emulated via symmetry), radial sinusoid",
        _field_4)

    # Problems 5 & 6: doubly curved B-spline hourglass (hyperbolic class),
    # w == 1; xi^1 along the arc, xi^2 vertical from z=-1 to z=1.
    pts = []
    for c, z in ((_SQ2, -1.0), (_ISQ2, 0.0), (_SQ2, 1.0)):
        for i in range(3):
            pts.append((c * arc[i][0], c * arc[i][1], z))
    hyp = _one_element_patch(pts, [1.0] * 9)
    entries[5] = ProblemSpec(
        5, hyp,
        {"W": bt.SYMMETRIC, "E": bt.SYMMETRIC,
         "S": bt.SIMPLY_SUPPORTED, "N": bt.SIMPLY_SUPPORTED},
        mat, "hyperbolic shell inflated to a B-spline cylinder (in-span field)",
        _field_5)
    entries[6] = ProblemSpec(
        6, hyp,
        {"S": bt.CLAMPED, "E": bt.FREE, "N": bt.FREE, "W": bt.FREE},
        mat, "hyperbolic diving board, sinusoidal diagonal sweep",
        _field_6)

    # Problems 7 & 8: B-spline quarter hemisphere with a hole (equator to 60
    # degrees); xi^1 along the meridian, xi^2 along the longitude.
    pts = []
    for rho, z in ((1.0, 0.0), (1.0, 1.0 / _SQ3), (0.5, _SQ3 / 2.0)):
        for j in range(3):
            pts.append((rho * arc[j][0], rho * arc[j][1], z))
    # xi^1 must be the meridian: transpose the listing (i fastest over rho).
    pts = [pts[3 * j + i] for i in range(3) for j in range(3)]
    hemi = _one_element_patch(pts, [1.0] * 9)
    entries[7] = ProblemSpec(
        7, hemi,
        {"W": bt.SIMPLY_SUPPORTED, "E": bt.SIMPLY_SUPPORTED,
         "S": bt.SYMMETRIC, "N": bt.SYMMETRIC},
        mat, "inflated hemispherical shell, radial sinusoid",
        _field_7)
    entries[8] = ProblemSpec(
        8, hemi,
        {"W": bt.FREE, "E": bt.CLAMPED, "S": bt.SYMMETRIC, "N": bt.SYMMETRIC},
        mat, "stretched hemisphere, exponential vertical drop",
        _field_8)
    return entries


_PROBLEMS = None


def get_problem(problem_id: int) -> ProblemSpec:
    global _PROBLEMS
    if _PROBLEMS is None:
        _PROBLEMS = _registry()
    if problem_id not in _PROBLEMS:
        raise KeyError(f"unknown problem id {problem_id}; valid: 1..8")
    return _PROBLEMS[problem_id]


def exact_field_jets(spec: ProblemSpec, xi1, xi2, order=4, backend="float"):
    """Displacement jets of the exact field at a point batch."""
    xi1 = np.atleast_1d(np.asarray(xi1, dtype=float))
    xi2 = np.atleast_1d(np.asarray(xi2, dtype=float))
    geom = geometry_jets(spec.patch, xi1, xi2, order=order + 1, backend=backend)
    if backend == "dd":
        x1 = jet_variable(DD(xi1), 0, order)
        x2 = jet_variable(DD(xi2), 1, order)
    else:
        x1 = jet_variable(xi1, 0, order)
        x2 = jet_variable(xi2, 1, order)
    u = spec.field(x1, x2, geom)
    return geom, [c.truncate(order) for c in u]


def eval_exact(spec: ProblemSpec, xi1, xi2, order=4):
    """Mixed-partial table (n, 3, order+1, order+1) of the exact field."""
    if order > 4:
        raise ValueError("exact fields are tabulated to order 4")
    _, u = exact_field_jets(spec, xi1, xi2, order=order)
    return np.stack([partials_from_jet(c) for c in u], axis=1)


@dataclass
class LoadData:
    """Manufactured data sampled on the assembly quadrature grids."""

    problem_id: int
    mesh: int
    n_interior: int
    n_edge: int
    degree: int
    body_xi: np.ndarray    # (N, 2)
    body_f: np.ndarray     # (N, 3)
    edges: dict            # edge -> {"xi": (M,2), role arrays...}
    corners: dict          # (x, y) -> {"u": (3,), "s": float}

    def validate_against(self, problem_id, mesh, n_interior, n_edge):
        if self.problem_id != problem_id:
            raise LoadDataError(
                f"load data is for problem {self.problem_id}, not {problem_id}")
        if self.mesh != mesh:
            raise LoadDataError(
                f"load data mesh {self.mesh} != requested {mesh}")
        if (self.n_interior, self.n_edge) != (n_interior, n_edge):
            raise LoadDataError(
                "quadrature mismatch: data has "
                f"{(self.n_interior, self.n_edge)}, requested "
                f"{(n_interior, n_edge)}")
        expect = (mesh * self.n_interior) ** 2
        if self.body_xi.shape[0] != expect:
            raise LoadDataError(
                f"interior grid has {self.body_xi.shape[0]} points, "
                f"expected {expect}")

    def check_finite(self):
        bad = np.argwhere(~np.isfinite(self.body_f))
        if bad.size:
            raise LoadDataError(
                f"non-finite body force at point index {int(bad[0][0])}")
        for edge, blk in self.edges.items():
            for key, arr in blk.items():
                bad = np.argwhere(~np.isfinite(np.asarray(arr, dtype=float)))
                if bad.size:
                    raise LoadDataError(
                        f"non-finite value in edge {edge} block {key!r} "
                        f"at index {int(bad[0][0])}")


def _jet_values(jets):
    vals = [c.value for c in jets]
    if isinstance(vals[0], DD):
        vals = [v.to_float() for v in vals]
    return np.stack(vals, axis=-1)


def _scalar_values(jet):
    v = jet.value
    return v.to_float() if isinstance(v, DD) else v


def generate_load_data(spec: ProblemSpec, mesh: int, n_interior: int = 25,
                       n_edge: int = 25, degree: int = 0,
                       precision: str = "double") -> LoadData:
    """Manufacture body force and boundary data on the quadrature grids.

    ``precision='dd'`` evaluates the whole jet pipeline in compensated
    double-double arithmetic before rounding the sampled data to doubles.
    """
    backend = "dd" if precision == "dd" else "float"
    xi, _, _ = quadrature.interior_grid(mesh, n_interior)

    chunks = []
    step = 16384
    for start in range(0, len(xi), step):
        sl = slice(start, min(start + step, len(xi)))
        geom, u = exact_field_jets(spec, xi[sl, 0], xi[sl, 1],
                                   order=4, backend=backend)
        f = strong_form_from_jets(geom, u, spec.material)
        chunks.append(_jet_values(f))
    body_f = np.concatenate(chunks, axis=0)

    edges = {}
    for edge in EDGES:
        bt = spec.edges[edge]
        exi, _, _ = quadrature.edge_grid(edge, mesh, n_edge)
        geom, u = exact_field_jets(spec, exi[:, 0], exi[:, 1],
                                   order=4, backend=backend)
        blk = {"xi": exi}
        acts = edge_actions_from_jets(geom, u, spec.material, edge)
        if bt.is_d1:
            blk["u_hat"] = _jet_values(u)
        else:
            blk["traction_hat"] = _jet_values(acts["ersatz"])
        if bt.is_d2:
            blk["theta_hat"] = _scalar_values(acts["theta_n"])
        else:
            blk["b_nn_hat"] = _scalar_values(acts["b_nn"])
        edges[edge] = blk

    chi_d, chi_n = spec.corner_sets()
    corners = {}
    for c in CORNERS:
        before, after = CORNER_EDGES[c]
        x1 = np.array([c[0]])
        x2 = np.array([c[1]])
        geom, u = exact_field_jets(spec, x1, x2, order=4, backend=backend)
        entry = {"u": _jet_values(u)[0]}
        bnt = {}
        for e in (before, after):
            acts = edge_actions_from_jets(geom, u, spec.material, e)
            bnt[e] = float(_scalar_values(acts["b_nt"])[0])
        entry["s"] = bnt[after] - bnt[before]
        corners[c] = entry

    return LoadData(spec.id, mesh, n_interior, n_edge, degree,
                    xi, body_f, edges, corners)


def export_load_data(path, data: LoadData):
    payload = {
        "header": {
            "problem_id": data.problem_id,
            "mesh": data.mesh,
            "degree": data.degree,
            "quadrature": {"interior": data.n_interior, "edge": data.n_edge},
        },
        "body": {"xi": data.body_xi.tolist(), "f": data.body_f.tolist()},
        "edges": {e: {k: np.asarray(v).tolist() for k, v in blk.items()}
                  for e, blk in data.edges.items()},
        "corners": [{"xi": list(c), "u": list(map(float, entry["u"])),
                     "s": float(entry["s"])}
                    for c, entry in data.corners.items()],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)


def import_load_data(path) -> LoadData:
    with open(path) as fh:
        payload = json.load(fh)
    try:
        head = payload["header"]
        body = payload["body"]
        edges = {e: {k: np.asarray(v, dtype=float) for k, v in blk.items()}
                 for e, blk in payload["edges"].items()}
        corners = {}
        for entry in payload["corners"]:
            key = (float(entry["xi"][0]), float(entry["xi"][1]))
            corners[key] = {"u": np.asarray(entry["u"], dtype=float),
                            "s": float(entry["s"])}
        data = LoadData(int(head["problem_id"]), int(head["mesh"]),
                        int(head["quadrature"]["interior"]),
                        int(head["quadrature"]["edge"]),
                        int(head.get("degree", 0)),
                        np.asarray(body["xi"], dtype=float),
                        np.asarray(body["f"], dtype=float),
                        edges, corners)
    except (KeyError, TypeError, IndexError) as exc:
        raise LoadDataError(f"malformed load-data file: missing {exc}") from exc
    data.check_finite()
    return data
