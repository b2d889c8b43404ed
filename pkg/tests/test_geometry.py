import numpy as np
import pytest

from worldsheet import (
    DegenerateFrameError,
    DegenerateMetricError,
    MetricData,
    SignatureError,
    build_geometry,
    build_grid,
    chart_metric,
    gauss_residual,
    make_chart,
    metric,
    minkowski_dot,
    normal_frame,
    second_fundamental_form,
    weingarten_residual,
)
from worldsheet import presets

RHO = 1.5


def cylinder_setup(n=17):
    g = build_grid([(0, 1), (0, 2 * np.pi * RHO)], [9, n])
    f = presets.cylinder(g, radius=RHO)
    return g, f


def sphere_setup(n=17):
    g = build_grid([(0, 1), (0.7, np.pi - 0.7), (0.3, np.pi - 0.3)], [9, n, n])
    f = presets.sphere_product(g, radius=RHO)
    return g, f


def test_minkowski_signature():
    assert minkowski_dot(np.array([1.0, 0, 0]), np.array([1.0, 0, 0])) == -1.0


def test_minkowski_null():
    assert minkowski_dot(np.array([1.0, 1.0, 0]), np.array([1.0, 1.0, 0])) == 0.0


def test_minkowski_spatial():
    v = np.array([0.0, 2.0, 3.0])
    assert minkowski_dot(v, v) == 13.0


def test_minkowski_length_mismatch():
    with pytest.raises(ValueError):
        minkowski_dot(np.zeros(3), np.zeros(4))


def test_flat_metric_exact():
    g = build_grid([(0, 1), (0, 1)], [5, 5])
    f = presets.flat(g)
    md = metric(f, g)
    want = np.array([[-1.0, 0.0], [0.0, 1.0]])
    assert np.max(np.abs(md.g - want)) == 0.0
    assert np.max(np.abs(md.det_g + 1.0)) == 0.0
    assert np.max(np.abs(md.sqrt_neg_g - 1.0)) == 0.0


def test_cylinder_metric_second_order():
    errs = []
    for n in (17, 33):
        g, f = cylinder_setup(n)
        md = metric(f, g)
        want = np.array([[-1.0, 0.0], [0.0, 1.0]])
        errs.append(np.max(np.abs(md.g - want)))
    assert errs[0] < 0.08
    assert 2.5 < errs[0] / errs[1] < 6.0


def test_sphere_metric_matches_analytic():
    g, f = sphere_setup(33)
    md = metric(f, g)
    u1 = g.coordinates[..., 1]
    want = np.zeros(g.counts + (3, 3))
    want[..., 0, 0] = -1.0
    want[..., 1, 1] = RHO**2
    want[..., 2, 2] = RHO**2 * np.sin(u1) ** 2
    assert np.max(np.abs(md.g - want)) < 2e-2


def test_metric_inverse_identity():
    g, f = sphere_setup(9)
    md = metric(f, g)
    eye = np.eye(3)
    prod = np.einsum("...jk,...kl->...jl", md.g, md.g_inv)
    assert np.max(np.abs(prod - eye)) < 1e-10


def test_metric_degenerate_error_names_node():
    g = build_grid([(0, 1), (0, 1)], [5, 5])
    f = presets.flat(g)
    f.r[..., 1] = 0.0  # kill the spatial tangent everywhere
    with pytest.raises(DegenerateMetricError, match=r"\(0, 0\)"):
        metric(f, g)


def test_metric_signature_error():
    g = build_grid([(0, 1), (0, 1)], [5, 5])
    f = presets.flat(g)
    # Riemannian sheet: both tangents space-like.
    f.r[...] = 0.0
    f.r[..., 1] = g.coordinates[..., 0]
    f.r[..., 2] = g.coordinates[..., 1]
    with pytest.raises(SignatureError):
        metric(f, g)


def test_normal_frame_flat():
    g = build_grid([(0, 1), (0, 1)], [5, 5])
    f = presets.flat(g)
    frame = normal_frame(metric(f, g), f)
    assert frame.vectors.shape == g.counts + (1, 3)
    assert np.max(np.abs(np.abs(frame.vectors[..., 0, 2]) - 1.0)) < 1e-12
    # candidate n is already normal, projection is the identity on it
    assert np.max(np.abs(frame.n_normal - f.n)) < 1e-12


def test_normal_frame_cylinder():
    g, f = cylinder_setup(33)
    frame = normal_frame(metric(f, g), f)
    ang = g.coordinates[..., 1] / RHO
    want = np.stack([np.zeros_like(ang), np.cos(ang), np.sin(ang)], axis=-1)
    got = frame.vectors[..., 0, :]
    align = np.einsum("...a,...a->...", got, want)
    assert np.max(np.abs(np.abs(align) - 1.0)) < 5e-3


def test_normal_frame_invariants_random_embedding():
    rng = np.random.default_rng(7)
    g = build_grid([(0, 1), (0, 1)], [7, 7])
    u = g.coordinates
    for _ in range(5):
        a, b = rng.uniform(0.05, 0.25, size=2)
        f = presets.flat(g, n_ambient=3)
        f.r[..., 2] = a * np.sin(u[..., 1] + u[..., 0])
        f.r[..., 3] = b * np.cos(2 * u[..., 1])
        md = metric(f, g)
        frame = normal_frame(md, f)
        s = frame.vectors.shape[-2]
        assert s == 2
        gram = np.einsum(
            "...qa,...pa,a->...qp", frame.vectors, frame.vectors, np.array([-1.0, 1, 1, 1])
        )
        assert np.max(np.abs(gram - np.eye(s))) < 1e-10
        tangency = np.einsum(
            "...qa,...ja,a->...qj", frame.vectors, md.tangents, np.array([-1.0, 1, 1, 1])
        )
        assert np.max(np.abs(tangency)) < 1e-10


def test_normal_frame_null_complement_error():
    # Hand-built tangents containing a null direction: (1, 0, 1) and (0, 1, 0).
    counts = (3, 3)
    tang = np.zeros(counts + (2, 3))
    tang[..., 0, 0] = 1.0
    tang[..., 0, 2] = 1.0
    tang[..., 1, 1] = 1.0
    md = MetricData(
        tangents=tang,
        g=np.zeros(counts + (2, 2)),
        g_inv=np.zeros(counts + (2, 2)),
        det_g=np.zeros(counts),
        sqrt_neg_g=np.zeros(counts),
    )
    g = build_grid([(0, 1), (0, 1)], [3, 3])
    f = presets.flat(g, n_ambient=2)
    with pytest.raises(DegenerateFrameError):
        normal_frame(md, f)


def test_christoffel_flat_zero():
    g = build_grid([(0, 1), (0, 1)], [5, 5])
    f = presets.flat(g)
    geom = build_geometry(f, g)
    assert np.max(np.abs(geom.gamma)) == 0.0


def test_christoffel_cylinder_flat_connection():
    g, f = cylinder_setup(33)
    geom = build_geometry(f, g)
    h = g.spacings[1]
    assert np.max(np.abs(geom.gamma)) < 2.0 * h**2


def test_christoffel_sphere_analytic():
    g, f = sphere_setup(33)
    geom = build_geometry(f, g)
    u1 = g.coordinates[..., 1]
    # frozen from the tangential-projection definition on the round sphere
    err122 = np.abs(geom.gamma[..., 1, 2, 2] + np.sin(u1) * np.cos(u1))
    err212 = np.abs(geom.gamma[..., 2, 1, 2] - np.cos(u1) / np.sin(u1))
    assert err122.max() < 5e-3
    assert err212.max() < 5e-3
    # spatial block entries that vanish on the sphere
    assert np.abs(geom.gamma[..., 1, 1, 1]).max() < 5e-3
    # symmetry in the lower pair is exact by construction
    assert np.array_equal(geom.gamma, np.swapaxes(geom.gamma, -2, -1))


def test_fundamental_form_flat_zero():
    g = build_grid([(0, 1), (0, 1)], [5, 5])
    f = presets.flat(g)
    geom = build_geometry(f, g, require_unit_normal=True)
    assert np.max(np.abs(geom.b)) == 0.0


def test_fundamental_form_cylinder():
    g, f = cylinder_setup(33)
    geom = build_geometry(f, g, require_unit_normal=True)
    assert np.max(np.abs(geom.b[..., 1, 1] + 1.0 / RHO)) < 5e-3
    assert np.max(np.abs(geom.b[..., 0, 0])) < 1e-12
    assert np.max(np.abs(geom.b[..., 0, 1])) < 1e-12


def test_fundamental_form_sphere_proportional_to_metric():
    g, f = sphere_setup(33)
    geom = build_geometry(f, g, require_unit_normal=True)
    md = geom.metric
    want = -(1.0 / RHO) * md.g[..., 1:, 1:]
    assert np.max(np.abs(geom.b[..., 1:, 1:] - want)) < 2e-2
    assert np.max(np.abs(geom.b - np.swapaxes(geom.b, -2, -1))) < 1e-12


def test_fundamental_form_requires_unit_normal():
    g = build_grid([(0, 1), (0, 1)], [5, 5])
    f = presets.flat(g)
    f.n *= 2.0
    geom = build_geometry(f, g)  # lenient path works
    assert geom.b.shape == g.counts + (2, 2)
    d2r = geom.d2r
    with pytest.raises(ValueError, match="not unit"):
        second_fundamental_form(d2r, f.n, geom.metric)


def test_riemann_flat_zero():
    g = build_grid([(0, 1), (0, 1)], [5, 5])
    f = presets.flat(g)
    geom = build_geometry(f, g, with_riemann=True)
    assert np.max(np.abs(geom.riemann)) == 0.0


def test_riemann_sphere_value_and_antisymmetry():
    g, f = sphere_setup(33)
    geom = build_geometry(f, g, with_riemann=True)
    u1 = g.coordinates[..., 1]
    # R^1_{212} = -sin^2(u1) in the curvature convention used here (derived
    # by evaluating the defining formula on the round-sphere connection).
    got = geom.riemann[..., 1, 2, 1, 2]
    assert np.max(np.abs(got + np.sin(u1) ** 2)) < 3e-2
    swapped = np.swapaxes(geom.riemann, -3, -2)
    assert np.max(np.abs(geom.riemann + swapped)) <= 1e-10


def test_gauss_residual_flat_exact():
    g = build_grid([(0, 1), (0, 1)], [5, 5])
    f = presets.flat(g)
    geom = build_geometry(f, g, with_riemann=True, require_unit_normal=True)
    assert gauss_residual(geom.riemann, geom.b, geom.b_up) == 0.0


def test_gauss_residual_cylinder_structurally_zero():
    # Static and intrinsically flat: both sides of the identity vanish to
    # rounding, independent of the spacing.
    g, f = cylinder_setup(17)
    geom = build_geometry(f, g, with_riemann=True, require_unit_normal=True)
    assert gauss_residual(geom.riemann, geom.b, geom.b_up) < 1e-10


def test_gauss_residual_sphere_second_order():
    res = []
    for n in (9, 17):
        g = build_grid([(0, 1), (1.0, np.pi - 1.0), (0.4, np.pi - 0.4)], [n, n, n])
        f = presets.sphere_product(g, radius=1.0)
        geom = build_geometry(f, g, with_riemann=True, require_unit_normal=True)
        res.append(gauss_residual(geom.riemann, geom.b, geom.b_up))
    assert 2.8 < res[0] / res[1] < 5.0


def test_weingarten_flat_exact():
    g = build_grid([(0, 1), (0, 1)], [5, 5])
    f = presets.flat(g)
    geom = build_geometry(f, g, with_frame=True, require_unit_normal=True)
    res, e = weingarten_residual(f, g, geom.b_up, geom.metric, geom.frame)
    assert res == 0.0
    assert np.max(np.abs(e)) == 0.0


def test_weingarten_cylinder_second_order():
    res = []
    for n in (17, 33):
        g, f = cylinder_setup(n)
        geom = build_geometry(f, g, with_frame=True, require_unit_normal=True)
        r, _ = weingarten_residual(f, g, geom.b_up, geom.metric, geom.frame)
        res.append(r)
    assert 3.0 < res[0] / res[1] < 5.0


def test_normal_tangency_consequence_of_unit_length():
    g, f = cylinder_setup(33)
    from worldsheet.grid import finite_difference

    dn = np.stack([finite_difference(f.n, g, axis=j) for j in range(2)], axis=-2)
    dots = np.einsum("...ja,...a->...j", dn, f.n) - 2.0 * dn[..., 0] * 0.0
    # minkowski dot: time components vanish here, plain dot suffices
    h = g.spacings[1]
    assert np.max(np.abs(dots)) < 2.0 * h**2


def test_chart_metric_identity():
    c = 2.0
    cg = build_grid([(0, 1), (0, 1), (0, 1), (0, 1)], [3, 3, 3, 3])
    u = np.zeros(cg.counts + (4,))
    u[..., 0] = c * cg.coordinates[..., 0]
    u[..., 1:] = cg.coordinates[..., 1:]
    cm = chart_metric(make_chart(cg, u, c))
    want = np.diag([c**2, 1.0, 1.0, 1.0])
    assert np.max(np.abs(cm.U_ij - want)) < 1e-12
    assert np.max(np.abs(cm.U - c**2)) < 1e-12


def test_chart_metric_degenerate_chart():
    cg = build_grid([(0, 1), (0, 1), (0, 1), (0, 1)], [3, 3, 3, 3])
    u = np.zeros(cg.counts + (2,))
    u[..., 0] = cg.coordinates[..., 0]
    u[..., 1] = cg.coordinates[..., 1]  # independent of x_2, x_3
    cm = chart_metric(make_chart(cg, u, 1.0))
    assert np.max(np.abs(cm.U)) < 1e-12


def test_chart_metric_rescaled_axis():
    cg = build_grid([(0, 1), (0, 1), (0, 1), (0, 1)], [3, 3, 3, 3])
    u = np.zeros(cg.counts + (2,))
    u[..., 0] = cg.coordinates[..., 0]
    u[..., 1] = 2.0 * cg.coordinates[..., 1]
    cm = chart_metric(make_chart(cg, u, 1.0))
    assert np.max(np.abs(cm.U_ij[..., 1, 1] - 4.0)) < 1e-12
