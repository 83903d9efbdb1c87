import numpy as np
import pytest

from klshell.geometry import build_edge_frame, build_frame
from klshell.jets import jet_from_partials, jet_variable, partials_from_jet
from klshell.mechanics import (Material, boundary_actions, corner_jump,
                               dof_kinematics, dof_operators,
                               edge_actions_from_jets, elasticity,
                               field_kinematics, geometry_jets,
                               strong_form_from_jets, voigt_matrix)
from klshell.problems import eval_exact, get_problem
from klshell.splines import surface_partials, unit_square_patch

MAT = Material(1.0e7, 0.3, 0.1)


def frame_at(patch, xi, order=3):
    return build_frame(surface_partials(patch, xi[:, 0], xi[:, 1], order))


def test_material_validation():
    with pytest.raises(ValueError):
        Material(-1.0, 0.3, 0.1)
    with pytest.raises(ValueError):
        Material(1.0, 0.7, 0.1)
    with pytest.raises(ValueError):
        Material(1.0, 0.3, 0.0)


def test_elasticity_magnitude_closed_form():
    patch = get_problem(7).patch
    rng = np.random.default_rng(0)
    fr = frame_at(patch, rng.random((10, 2)))
    for nu in (0.0, 0.3, 0.5 - 1e-6):
        mat = Material(1.0e7, nu, 0.1)
        et = elasticity(fr, mat)
        closed = np.sqrt((3 * nu**2 - 2 * nu + 3) / (1 - nu**2)**2) * mat.E
        np.testing.assert_allclose(et.mag, closed, rtol=1e-12)


def test_elasticity_symmetries_and_bound():
    patch = get_problem(5).patch
    rng = np.random.default_rng(1)
    fr = frame_at(patch, rng.random((10, 2)))
    for nu in np.arange(0.0, 0.51, 0.1):
        nu = min(nu, 0.5)
        mat = Material(1.0e7, nu, 0.1)
        et = elasticity(fr, mat)
        c = et.c
        np.testing.assert_allclose(c, c.transpose(0, 2, 1, 3, 4), atol=1e-4)
        np.testing.assert_allclose(c, c.transpose(0, 3, 4, 1, 2), atol=1e-4)
        # |C|^2 <= 44/9 E^2
        assert np.all(et.mag**2 <= 44.0 / 9.0 * mat.E**2 * (1 + 1e-12))


def test_poisson_free_decoupling_on_orthonormal_frame():
    sq = unit_square_patch(2)
    fr = frame_at(sq, np.array([[0.3, 0.4]]))
    et = elasticity(fr, Material(1.0e7, 0.0, 0.1))
    assert abs(et.c[0, 0, 0, 1, 1]) < 1e-9 * et.mag[0]


def test_rigid_translations_have_zero_strains():
    rng = np.random.default_rng(2)
    for pid in (1, 3, 5, 7):
        patch = get_problem(pid).patch
        fr = frame_at(patch, rng.random((20, 2)))
        for i in range(3):
            tab = np.zeros((20, 3, 5, 5))
            tab[:, i, 0, 0] = 1.0
            st = field_kinematics(fr, tab, order=3)
            assert np.abs(st.membrane).max() == 0.0
            assert np.abs(st.bending).max() == 0.0
            assert np.abs(st.bend_cd).max() == 0.0


def test_flat_linear_stretch_strain():
    sq = unit_square_patch(2)
    fr = frame_at(sq, np.array([[0.4, 0.6]]))
    tab = np.zeros((1, 3, 5, 5))
    tab[:, 0, 0, 0] = 0.4       # u = (x, 0, 0): value x, du/dxi1 = 1
    tab[:, 0, 1, 0] = 1.0
    st = field_kinematics(fr, tab, order=3)
    np.testing.assert_allclose(st.membrane[0], [[1.0, 0.0], [0.0, 0.0]],
                               atol=1e-14)
    assert np.abs(st.bending).max() < 1e-14


def test_bending_strain_covariant_derivative_finite_differences():
    patch = get_problem(3).patch
    t = np.linspace(0.2, 0.8, 7)
    xi = np.column_stack([t, np.full_like(t, 0.4)])
    fr = frame_at(patch, xi)
    st = field_kinematics(fr, eval_exact(get_problem(3), xi[:, 0], xi[:, 1],
                                         3), order=3)
    h = 1e-5
    for m in range(2):
        d = np.zeros(2)
        d[m] = h
        sp = field_kinematics(frame_at(patch, xi + d),
                              eval_exact(get_problem(3), xi[:, 0] + d[0],
                                         xi[:, 1] + d[1], 2), order=2)
        sm = field_kinematics(frame_at(patch, xi - d),
                              eval_exact(get_problem(3), xi[:, 0] - d[0],
                                         xi[:, 1] - d[1], 2), order=2)
        # covariant derivative = partial derivative - two connection terms
        fd = (sp.bending - sm.bending) / (2 * h)
        corr = (np.einsum("nla,nlb->nab", fr.gamma[..., m], st.bending)
                + np.einsum("nlb,nal->nab", fr.gamma[..., m], st.bending))
        pred = st.bend_cd[..., m] + corr
        scale = max(np.abs(fd).max(), 1e-6)
        assert np.abs(fd - pred).max() < 1e-4 * scale


def test_flat_geometry_has_no_bending_ersatz_part():
    for pid in (1, 2):
        spec = get_problem(pid)
        t = np.linspace(0.1, 0.9, 6)
        xi = np.column_stack([t, np.zeros_like(t)])
        fr = frame_at(spec.patch, xi)
        ef = build_edge_frame(fr, "S")
        et = elasticity(fr, MAT)
        st = field_kinematics(fr, eval_exact(spec, xi[:, 0], xi[:, 1], 3), 3)
        for flag in (False, True):
            acts = boundary_actions(fr, ef, et, st, MAT,
                                    inconsistent_ersatz=flag)
            assert np.abs(acts.t_bend_up).max() < 1e-20


def test_membrane_only_field_gives_zero_transverse_ersatz():
    sq = unit_square_patch(2)
    t = np.linspace(0.1, 0.9, 6)
    xi = np.column_stack([t, np.zeros_like(t)])
    fr = frame_at(sq, xi)
    ef = build_edge_frame(fr, "S")
    et = elasticity(fr, MAT)
    rng = np.random.default_rng(3)
    tab = np.zeros((6, 3, 5, 5))
    tab[:, :2, :4, :4] = rng.standard_normal((6, 2, 4, 4))  # in-plane only
    st = field_kinematics(fr, tab, order=3)
    acts = boundary_actions(fr, ef, et, st, MAT)
    assert np.abs(acts.t3).max() < 1e-20
    assert np.abs(acts.b_nn).max() < 1e-20


def test_transverse_ersatz_against_jet_route():
    """Component formula for T3 vs independent jet differentiation, P3."""
    spec = get_problem(3)
    t = np.linspace(0.05, 0.95, 10)
    for edge, xi in (("S", np.column_stack([t, 0 * t])),
                     ("W", np.column_stack([0 * t, t]))):
        fr = frame_at(spec.patch, xi)
        ef = build_edge_frame(fr, edge)
        et = elasticity(fr, MAT)
        st = field_kinematics(fr, eval_exact(spec, xi[:, 0], xi[:, 1], 3), 3)
        acts = boundary_actions(fr, ef, et, st, MAT)
        geom = geometry_jets(spec.patch, xi[:, 0], xi[:, 1], 5)
        tabs = eval_exact(spec, xi[:, 0], xi[:, 1], 4)
        ujets = [jet_from_partials(tabs[:, i], 4) for i in range(3)]
        jacts = edge_actions_from_jets(geom, ujets, MAT, edge)
        scale = max(np.abs(acts.t3).max(), 1.0)
        assert np.abs(jacts["b_nt"].value - acts.b_nt).max() \
            < 1e-10 * max(np.abs(acts.b_nt).max(), 1.0)
        t3_jet = (np.stack([jacts["ersatz"][i].value for i in range(3)], 1)
                  * fr.a3).sum(axis=1)
        assert np.abs(t3_jet - acts.t3).max() < 1e-8 * scale


def test_corner_jump_definition():
    assert corner_jump(1.5, 1.5) == 0.0
    assert corner_jump(2.0, -2.0) == -4.0
    assert corner_jump(-3.0, 3.0) == 6.0


def test_problem2_corner_jump_consistent_between_routes():
    spec = get_problem(2)
    corner = (0.0, 0.0)
    fr = frame_at(spec.patch, np.array([corner]))
    et = elasticity(fr, MAT)
    st = field_kinematics(fr, eval_exact(spec, [corner[0]], [corner[1]], 3), 3)
    vals = {}
    for edge in ("W", "S"):
        ef = build_edge_frame(fr, edge)
        vals[edge] = boundary_actions(fr, ef, et, st, MAT).b_nt[0]
    jump = corner_jump(vals["W"], vals["S"])
    geom = geometry_jets(spec.patch, [corner[0]], [corner[1]], 5)
    tabs = eval_exact(spec, [corner[0]], [corner[1]], 4)
    ujets = [jet_from_partials(tabs[:, i], 4) for i in range(3)]
    jjump = (edge_actions_from_jets(geom, ujets, MAT, "S")["b_nt"].value[0]
             - edge_actions_from_jets(geom, ujets, MAT, "W")["b_nt"].value[0])
    assert jump == pytest.approx(jjump, rel=1e-10, abs=1e-12)


def test_strong_form_zero_for_zero_and_constant_stress_fields():
    sq = unit_square_patch(2)
    xi = np.random.default_rng(4).uniform(0.1, 0.9, (12, 2))
    geom = geometry_jets(sq, xi[:, 0], xi[:, 1], 5)
    zero = [jet_variable(xi[:, 0], 0, 4) * 0.0 for _ in range(3)]
    f = strong_form_from_jets(geom, zero, MAT)
    assert max(np.abs(f[i].value).max() for i in range(3)) == 0.0
    # linear in-plane field on a flat plate: constant stress, zero divergence
    x1 = jet_variable(xi[:, 0], 0, 4)
    x2 = jet_variable(xi[:, 1], 1, 4)
    lin = [x1 * 0.003 + x2 * 0.001, x2 * -0.002, x1 * 0.0]
    f = strong_form_from_jets(geom, lin, MAT)
    assert max(np.abs(f[i].value).max() for i in range(3)) < 1e-12 * MAT.E


def test_inconsistent_variant_matches_on_flat_differs_on_curved():
    rng = np.random.default_rng(5)
    t = np.linspace(0.1, 0.9, 20)
    xi = np.column_stack([0 * t, t])

    def actions(spec, flag):
        geom = geometry_jets(spec.patch, xi[:, 0], xi[:, 1], 5)
        tabs = eval_exact(spec, xi[:, 0], xi[:, 1], 4)
        uj = [jet_from_partials(tabs[:, i], 4) for i in range(3)]
        a = edge_actions_from_jets(geom, uj, MAT, "W",
                                   inconsistent_ersatz=flag)
        return np.stack([a["ersatz"][i].value for i in range(3)], 1)

    flat = get_problem(1)
    np.testing.assert_allclose(actions(flat, False), actions(flat, True),
                               atol=1e-18)
    curved = get_problem(3)
    diff = np.abs(actions(curved, False) - actions(curved, True)).max()
    assert diff > 1e-6 * np.abs(actions(curved, False)).max()


def test_dof_operators_consistent_with_field_route():
    """Operators contracted with coefficients equal the field evaluation."""
    from klshell.splines import nurbs_basis_partials, refine
    spec = get_problem(7)
    patch = refine(spec.patch, 3, 2)
    rng = np.random.default_rng(6)
    nf = patch.knots[0].n_basis * patch.knots[1].n_basis
    coeff = rng.standard_normal((nf, 3)) * 0.01
    t = np.linspace(0.05, 0.95, 8)
    xi = np.column_stack([t, np.zeros_like(t)])
    funcs, r_tab = nurbs_basis_partials(patch, xi[:, 0], xi[:, 1], 3)
    fr = frame_at(patch, xi)
    ef = build_edge_frame(fr, "S")
    et = elasticity(fr, MAT)
    ops = dof_operators(fr, r_tab, et, MAT, edge_frame=ef, order=3)
    cloc = coeff[funcs].reshape(len(xi), -1)  # (q, nloc) in 3f+i order

    utab = np.einsum("qabf,qfi->qiab", r_tab, coeff[funcs])
    st = field_kinematics(fr, utab, order=3)
    acts = boundary_actions(fr, ef, et, st, MAT)

    got_t = np.einsum("qil,ql->qi", ops.ersatz, cloc)
    np.testing.assert_allclose(got_t, acts.ersatz_cartesian(fr), rtol=1e-10,
                               atol=1e-12)
    np.testing.assert_allclose(np.einsum("ql,ql->q", ops.b_nn, cloc),
                               acts.b_nn, rtol=1e-10, atol=1e-14)
    np.testing.assert_allclose(np.einsum("ql,ql->q", ops.b_nt, cloc),
                               acts.b_nt, rtol=1e-10, atol=1e-14)
    np.testing.assert_allclose(np.einsum("ql,ql->q", ops.theta_n, cloc),
                               acts.theta_n, rtol=1e-10, atol=1e-14)
    np.testing.assert_allclose(np.einsum("ql,ql->q", ops.t3, cloc),
                               acts.t3, rtol=1e-9, atol=1e-12)
    # membrane/bending Voigt operators against the strain tensors
    mem = np.einsum("qvl,ql->qv", ops.membrane_v, cloc)
    np.testing.assert_allclose(
        mem, np.stack([st.membrane[:, 0, 0], st.membrane[:, 1, 1],
                       st.membrane[:, 0, 1]], axis=1), rtol=1e-10, atol=1e-14)


def test_dof_kinematics_single_function():
    spec = get_problem(3)
    xi = np.array([[0.3, 0.0]])
    fr = frame_at(spec.patch, xi)
    r_tab = np.zeros((1, 4, 4))
    r_tab[0, 0, 0] = 1.0   # constant basis function
    for i in range(3):
        kin = dof_kinematics(fr, r_tab, i, edge="S")
        assert np.abs(kin["membrane"]).max() == 0.0
        assert np.abs(kin["bending"]).max() == 0.0
        assert kin["theta_n"][0] == 0.0
        assert kin["theta_t"][0] == 0.0


def test_strain_energy_decomposition_no_cross_terms():
    """a^S energy equals the membrane and bending quadratures separately."""
    spec = get_problem(5)
    rng = np.random.default_rng(7)
    xi = rng.uniform(0, 1, (200, 2))
    fr = frame_at(spec.patch, xi, order=2)
    et = elasticity(fr, MAT)
    tab = eval_exact(spec, xi[:, 0], xi[:, 1], 2)
    st = field_kinematics(fr, tab, order=2)
    m = voigt_matrix(et)
    mem_v = np.stack([st.membrane[:, 0, 0], st.membrane[:, 1, 1],
                      st.membrane[:, 0, 1]], axis=1)
    e_voigt = np.einsum("qv,qvw,qw->q", mem_v, m, mem_v)
    e_tensor = np.einsum("qablm,qab,qlm->q", et.c, st.membrane, st.membrane)
    np.testing.assert_allclose(e_voigt, e_tensor, rtol=1e-12)
