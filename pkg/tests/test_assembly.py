import dataclasses

import numpy as np
import pytest

from klshell import quadrature
from klshell.assembly import (PenaltyConfig, assemble, assemble_interior,
                              build_mesh)
from klshell.geometry import build_frame
from klshell.mechanics import Material, elasticity, field_kinematics
from klshell.problems import LoadDataError, generate_load_data, get_problem
from klshell.splines import refine, surface_partials, unit_square_patch
from klshell.verify import spline_field_table


def setup_cell(pid, p=2, m=4, n_load=6, n_edge=6):
    spec = get_problem(pid)
    patch = refine(spec.patch, p, m)
    topo = build_mesh(patch)
    load = generate_load_data(spec, m, n_interior=n_load, n_edge=n_edge)
    pen = PenaltyConfig(np.array([10.0, 5.0, 1.0, 1.0, 5.0]))
    return spec, patch, topo, load, pen


def test_gauss_rule_exactness():
    for n in range(1, 8):
        x, w = quadrature.gauss_1d(n)
        for k in range(2 * n):
            exact = 1.0 / (k + 1)
            assert np.dot(w, x**k) == pytest.approx(exact, rel=1e-13)


def test_mesh_sizes_flat_square():
    patch = refine(unit_square_patch(2), 2, 4)
    topo = build_mesh(patch)
    np.testing.assert_allclose(topo.h_k, np.sqrt(2) / 4, rtol=1e-12)


def test_mesh_sizes_annulus_inner_smaller():
    patch = refine(get_problem(1).patch, 2, 4)
    topo = build_mesh(patch)
    h = topo.h_k.reshape(4, 4)  # [jv, ju]; xi1 = radial is ju
    assert np.all(h[:, 0] < h[:, -1])


def test_corner_ownership():
    patch = refine(get_problem(1).patch, 2, 4)
    topo = build_mesh(patch)
    assert topo.h_corner((0.0, 0.0)) == topo.h_k[0]
    assert topo.h_corner((1.0, 0.0)) == topo.h_k[3]
    assert topo.h_corner((1.0, 1.0)) == topo.h_k[15]
    assert topo.h_corner((0.0, 1.0)) == topo.h_k[12]


def test_penalty_config_rules():
    pen = PenaltyConfig(np.ones(5))
    np.testing.assert_allclose(pen.c_pen, [4.0, 4.0, 4.0, 4.0])
    pen = PenaltyConfig(np.array([1, 1, 1, 2.0, 3.0]))
    assert pen.c_pen[3] == pytest.approx(12.0)  # gamma^2 * max(c4, c5)
    with pytest.raises(ValueError):
        PenaltyConfig(np.ones(5), gammas=np.array([1.0, 2, 2, 2]))
    with pytest.raises(ValueError):
        PenaltyConfig(np.ones(4))


@pytest.mark.parametrize("pid", range(1, 9))
def test_assembled_matrix_symmetric(pid):
    spec, patch, topo, load, pen = setup_cell(pid)
    sys = assemble(spec, patch, topo, pen, load, n_quad_interior=3,
                   n_edge=6, n_load=6)
    assert np.abs(sys.K - sys.K.T).max() <= 1e-12 * np.abs(sys.K).max()
    assert np.all(np.isfinite(sys.F))


def test_worker_count_does_not_change_bits():
    spec, patch, topo, load, pen = setup_cell(3)
    a = assemble(spec, patch, topo, pen, load, n_quad_interior=4,
                 n_edge=6, n_load=6, workers=1)
    b = assemble(spec, patch, topo, pen, load, n_quad_interior=4,
                 n_edge=6, n_load=6, workers=8)
    np.testing.assert_array_equal(a.K, b.K)
    np.testing.assert_array_equal(a.F, b.F)


def test_interior_matrix_annihilates_rigid_modes():
    spec = get_problem(7)
    patch = refine(spec.patch, 2, 4)
    topo = build_mesh(patch)
    K = assemble_interior(spec, patch, topo, n_quad=4)
    scale = np.abs(K).max()
    nf = K.shape[0] // 3
    # translations
    for i in range(3):
        t = np.zeros(K.shape[0])
        t[i::3] = 1.0
        assert np.abs(K @ t).max() < 1e-10 * scale
    # linearized rotations: u = omega x x(greville-coefficients)
    gu = patch.knots[0].greville()
    gv = patch.knots[1].greville()
    # control points represent the geometry exactly (isoparametric)
    xs = patch.control_points.reshape(-1, 3)
    for omega in np.eye(3):
        rot = np.cross(np.broadcast_to(omega, xs.shape), xs).reshape(-1)
        assert np.abs(K @ rot).max() < 1e-9 * scale * np.abs(rot).max()


def test_assembled_energy_matches_direct_quadrature():
    spec = get_problem(5)
    patch = refine(spec.patch, 3, 2)
    topo = build_mesh(patch)
    K = assemble_interior(spec, patch, topo, n_quad=12)
    rng = np.random.default_rng(0)
    c = rng.standard_normal(K.shape[0]) * 0.01
    quad_energy = 0.0
    xi, wt, _ = quadrature.interior_grid(2, 12)
    frame = build_frame(surface_partials(patch, xi[:, 0], xi[:, 1], 2))
    et = elasticity(frame, spec.material)
    tab = spline_field_table(patch, c, xi[:, 0], xi[:, 1], 2)
    st = field_kinematics(frame, tab, order=2)
    zeta = spec.material.zeta
    am = zeta * np.einsum("nablm,nlm->nab", et.c, st.membrane)
    bm = zeta**3 / 12 * np.einsum("nablm,nlm->nab", et.c, st.bending)
    w = wt * frame.det_a
    quad_energy = float(np.einsum("q,qab,qab->", w, am, st.membrane)
                        + np.einsum("q,qab,qab->", w, bm, st.bending))
    assert c @ K @ c == pytest.approx(quad_energy, rel=1e-10)


def test_penalty_scaling_audit_with_thickness():
    """Doubling the thickness scales the transverse penalties by 8 and the
    in-plane penalty by 2, exactly."""
    spec, patch, topo, load, pen = setup_cell(3)
    sys1 = assemble(spec, patch, topo, pen, load, n_quad_interior=3,
                    n_edge=6, n_load=6, families=True)
    thick = dataclasses.replace(spec,
                                material=Material(1.0e7, 0.3, 0.2))
    sys2 = assemble(thick, patch, topo, pen, load, n_quad_interior=3,
                    n_edge=6, n_load=6, families=True)
    for name in ("pen1", "pen2", "pen3"):
        np.testing.assert_allclose(sys2.families[name],
                                   8.0 * sys1.families[name], rtol=1e-13)
    np.testing.assert_allclose(sys2.families["pen4"],
                               2.0 * sys1.families["pen4"], rtol=1e-13)
    total = sum(sys1.families.values())
    np.testing.assert_allclose(total, sys1.K, atol=1e-9 * np.abs(sys1.K).max())


def test_variant_changes_nothing_on_flat_geometry():
    for pid in (1, 2):
        spec, patch, topo, load, pen = setup_cell(pid)
        a = assemble(spec, patch, topo, pen, load, n_quad_interior=3,
                     n_edge=6, n_load=6)
        b = assemble(spec, patch, topo, pen, load, n_quad_interior=3,
                     n_edge=6, n_load=6, variant=True)
        np.testing.assert_array_equal(a.K, b.K)
        np.testing.assert_array_equal(a.F, b.F)


def test_variant_changes_curved_geometry():
    spec, patch, topo, load, pen = setup_cell(3)
    a = assemble(spec, patch, topo, pen, load, n_quad_interior=3,
                 n_edge=6, n_load=6)
    b = assemble(spec, patch, topo, pen, load, n_quad_interior=3,
                 n_edge=6, n_load=6, variant=True)
    assert np.abs(a.K - b.K).max() > 1e-9 * np.abs(a.K).max()


def test_nan_load_data_aborts_with_location():
    spec, patch, topo, load, pen = setup_cell(2)
    load.body_f[5, 0] = np.nan
    with pytest.raises(LoadDataError, match="5"):
        assemble(spec, patch, topo, pen, load, n_quad_interior=3,
                 n_edge=6, n_load=6)


def test_quadrature_metadata_validated():
    spec, patch, topo, load, pen = setup_cell(2)
    with pytest.raises(LoadDataError):
        assemble(spec, patch, topo, pen, load, n_quad_interior=3,
                 n_edge=6, n_load=9)


def test_dump_system_text_format(tmp_path):
    from klshell.assembly import dump_system
    spec, patch, topo, load, pen = setup_cell(1, m=2)
    sys = assemble(spec, patch, topo, pen, load, n_quad_interior=3,
                   n_edge=6, n_load=6)
    path = tmp_path / "system.mtx"
    dump_system(sys, path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("%%MatrixMarket")
    n, m, nnz = map(int, lines[2].split())
    assert (n, m) == (sys.ndof, sys.ndof)
    i, j, v = lines[3].split()
    assert sys.K[int(i) - 1, int(j) - 1] == float(v)
