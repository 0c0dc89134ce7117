import csv
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from geoflow.curve import (
    DiscreteCurve,
    covariant_ds,
    d_ds,
    frenet,
    geometry,
    ramp_height,
    resample_arclength,
    signed_curvature,
    winding_number,
    write_snapshot,
)
from geoflow.errors import DegenerateCurveError, FrameUndefinedError
from geoflow.generators import (
    circle,
    clifford_helix,
    ellipse,
    helix,
    make_curve,
    perturbed_circle,
    points_file,
    random_circle,
    torus_winding,
)
from geoflow.manifold import Circle, Euclidean, Product, SpaceForm

TWO_PI = 2 * math.pi
E2, E3, S3 = Euclidean(2), Euclidean(3), SpaceForm(3, 1)
TORUS = Product(Circle(1.0), 1.0)


def _fine_length(fn, model, m=1 << 16):
    """Length of a parametric closed curve u -> fn(u) by a fine Riemann sum."""
    u = np.arange(m) * (TWO_PI / m)
    x = fn(u)
    dx = np.gradient(np.vstack([x[-2:], x, x[:2]]), TWO_PI / m, axis=0)[2:-2]
    speed = np.sqrt(np.einsum("ia,iab,ib->i", dx, model.metric(x), dx))
    return speed.sum() * (TWO_PI / m)


# -- basic geometry -------------------------------------------------------------


def test_unit_circle_curvature_and_length():
    g = geometry(circle(256), E2)
    assert np.abs(g.k - 1).max() < 1e-3
    assert abs(g.length - TWO_PI) < 1e-4


def test_great_circle_on_sphere_is_geodesic():
    g = geometry(circle(256, dim=3), S3)
    assert g.k.max() <= 1e-3
    assert g.length == pytest.approx(TWO_PI, rel=1e-10)


def test_ellipse_curvature_extremes():
    # k = ab / (a^2 sin^2 + b^2 cos^2)^(3/2): 2 at the major-axis ends, 1/4 at the minor-axis ends
    g = geometry(ellipse(512, 2.0, 1.0), E2)
    assert g.k.max() == pytest.approx(2.0, abs=1e-2)
    assert g.k.min() == pytest.approx(0.25, abs=1e-2)


def test_ellipse_curvature_profile_matches_closed_form():
    c = ellipse(512, 2.0, 1.0)
    u = np.arange(512) * c.du
    exact = 2.0 / (4 * np.sin(u) ** 2 + np.cos(u) ** 2) ** 1.5
    assert np.abs(geometry(c, E2).k - exact).max() < 1e-2


def test_degenerate_curve_raises():
    with pytest.raises(DegenerateCurveError):
        geometry(DiscreteCurve(np.zeros((32, 2))), E2)


def test_curve_needs_sixteen_nodes():
    with pytest.raises(ValueError):
        DiscreteCurve(np.zeros((8, 2)))


def test_nodes_are_read_only():
    c = circle(32)
    with pytest.raises(ValueError):
        c.nodes[0, 0] = 1.0


@given(
    st.floats(0.0, 0.3),
    st.integers(2, 6),
    st.floats(0.3, 1.5),
    st.sampled_from(["euclidean", "sphere", "ball"]),
)
def test_unit_tangent_and_normality(amp, mode, radius, which):
    model = {"euclidean": E3, "sphere": S3, "ball": SpaceForm(3, -1)}[which]
    if which == "ball":
        radius = min(radius, 0.6)
    g = geometry(perturbed_circle(128, amp, mode, radius, dim=3), model)
    assert np.abs(g.norm(g.T) - 1).max() < 1e-12
    assert g.k.min() >= 0
    assert g.length > 0 and g.bending >= 0
    # mean curvature vector is normal to the curve
    assert np.abs(g.inner(g.dT, g.T)).max() < 1e-8


def test_length_agrees_with_fine_quadrature():
    for N in (256, 512):
        c = perturbed_circle(N, 0.2, 3, 1.0, dim=3)
        fn = lambda u: np.column_stack(
            [(1 + 0.2 * np.sin(3 * u)) * np.cos(u), (1 + 0.2 * np.sin(3 * u)) * np.sin(u), 0 * u]
        )
        exact = _fine_length(fn, S3)
        assert abs(geometry(c, S3).length - exact) / exact < 1e-6


def test_derivative_of_curvature_bounded_by_second_derivative():
    # |d/ds |DT/ds|| <= |D^2T/ds^2| away from inflections
    g = geometry(perturbed_circle(512, 0.1, 3, dim=3), S3)
    lhs = np.abs(d_ds(g, g.k))
    rhs = g.norm(g.D[2])
    assert np.all(lhs <= rhs * (1 + 1e-3) + 1e-8)


def test_signed_curvature_orientation():
    g = geometry(circle(64), E2)
    assert np.all(signed_curvature(g) > 0)
    rev = DiscreteCurve(circle(64).nodes[::-1])
    assert np.all(signed_curvature(geometry(rev, E2)) < 0)


# -- Frenet frame -----------------------------------------------------------------


def test_round_helix_curvature_and_torsion():
    g = geometry(helix(512, 1.0, 1.0, turns=1), E3)
    N, B, tau = frenet(g)
    assert np.abs(g.k - 0.5).max() < 1e-2
    assert np.abs(tau - 0.5).max() < 1e-2


def test_planar_circle_has_zero_torsion():
    g = geometry(circle(256, dim=3), E3)
    _, _, tau = frenet(g)
    assert np.abs(tau).max() < 1e-3


@pytest.mark.parametrize(
    "curve,model",
    [
        (helix(256, 1.0, 0.5, turns=2), E3),
        (perturbed_circle(256, 0.2, 3, dim=3), S3),
        (clifford_helix(256, 1, 2, 0.5), S3),
        (perturbed_circle(256, 0.2, 3, 0.5, dim=3), SpaceForm(3, -1)),
    ],
)
def test_frenet_frame_orthonormal_and_oriented(curve, model):
    g = geometry(curve, model)
    N, B, tau = frenet(g)
    for X, Y in ((g.T, N), (g.T, B), (N, B)):
        assert np.abs(g.inner(X, Y)).max() < 1e-10
    assert np.abs(g.norm(N) - 1).max() < 1e-8
    assert np.abs(g.norm(B) - 1).max() < 1e-10
    assert np.all(np.linalg.det(np.stack([g.T, N, B], axis=2)) > 0)


def test_frame_undefined_on_geodesic():
    with pytest.raises(FrameUndefinedError):
        frenet(geometry(helix(64, a=0.0, b=1.0), E3))


def test_frenet_needs_dimension_three():
    with pytest.raises(ValueError):
        frenet(geometry(circle(64), E2))


def test_binormal_derivative_converges_at_second_order():
    # D B/ds = -tau N: the discrete defect falls about 4x per halving of ds
    errs = []
    for N in (64, 128, 256):
        base = clifford_helix(N, 1, 2, 0.5)
        wobble = 1 + 0.05 * np.sin(np.arange(N) * base.du)
        g = geometry(base.with_nodes(base.nodes * wobble[:, None]), S3)
        Nf, B, tau = frenet(g)
        errs.append(g.norm(covariant_ds(g, B) + tau[:, None] * Nf).max())
    assert errs[0] / errs[1] > 3.5 and errs[1] / errs[2] > 3.5


# -- resampling ------------------------------------------------------------------


def test_resample_fixes_uniform_circle():
    c = circle(128)
    assert np.abs(resample_arclength(c, E2).nodes - c.nodes).max() < 1e-9


def test_resample_uniformises_and_keeps_length():
    N = 256
    u = np.arange(N) * (TWO_PI / N)
    th = u + 0.3 * np.sin(u)
    c = DiscreteCurve(np.column_stack([np.cos(th), np.sin(th)]))
    r = resample_arclength(c, E2)
    gr = geometry(r, E2)
    assert (gr.ds.max() - gr.ds.min()) / gr.ds.mean() < 1e-2
    assert abs(gr.length - TWO_PI) / TWO_PI < 1e-6
    assert np.abs(np.linalg.norm(r.nodes, axis=1) - 1).max() < 1e-6


@given(st.floats(0.0, 0.15), st.integers(2, 3), st.floats(0.0, 0.3))
def test_resample_preserves_length_and_bending(amp, mode, warp):
    # well-resolved curves: elsewhere the bending estimate itself carries O(ds^2) grid bias
    N = 512
    u = np.arange(N) * (TWO_PI / N)
    th = u + warp * np.sin(u)
    r = 1 + amp * np.sin(mode * th)
    c = DiscreteCurve(np.column_stack([r * np.cos(th), r * np.sin(th)]))
    g0, g1 = geometry(c, E2), geometry(resample_arclength(c, E2), E2)
    fine = geometry(perturbed_circle(8192, amp, mode), E2)
    assert abs(g1.length - fine.length) / fine.length < 1e-6
    assert abs(g1.bending - g0.bending) / g0.bending < 1e-4
    assert abs(g1.bending - fine.bending) / fine.bending < 1e-3
    assert (g1.ds.max() - g1.ds.min()) / g1.ds.mean() < 1e-2


def test_resample_keeps_torus_winding_shift():
    c = torus_winding(128, 1, 2, amp=0.2, mode=1)
    r = resample_arclength(c, TORUS)
    assert np.array_equal(r.shift, c.shift)
    g = geometry(r, TORUS)
    assert (g.ds.max() - g.ds.min()) / g.ds.mean() < 1e-2


# -- ramps --------------------------------------------------------------------------


def test_diagonal_winding_ramp_height():
    ctx = ramp_height(geometry(torus_winding(64, 1, 1), TORUS), TORUS)
    assert np.abs(ctx.h - 1 / math.sqrt(2)).max() < 1e-10
    assert ctx.is_ramp


def test_curve_constant_in_fiber_is_not_ramp():
    c = torus_winding(64, 1, 0)
    ctx = ramp_height(geometry(c, TORUS), TORUS)
    assert np.abs(ctx.h).max() == 0.0
    assert not ctx.is_ramp


def test_vertical_circle_height_one():
    N = 64
    u = np.arange(N) * (TWO_PI / N)
    c = DiscreteCurve(np.column_stack([np.full(N, 0.3), u]), [0.0, TWO_PI])
    ctx = ramp_height(geometry(c, TORUS), TORUS)
    assert np.abs(ctx.h - 1).max() < 1e-12
    assert ctx.mu == pytest.approx(1.0)


def test_ramp_height_needs_circle_factor():
    with pytest.raises(ValueError):
        ramp_height(geometry(circle(32), E2), E2)


def test_winding_numbers():
    c = torus_winding(128, 2, 3, amp=0.1)
    assert winding_number(c, axis=0) == 2
    assert winding_number(c, axis=1) == 3


# -- generators and files ------------------------------------------------------------


def test_clifford_helix_has_nearly_constant_curvature_and_torsion():
    # an isometry orbit; the chart differences leave an O(ds^2) ripple in k and tau
    spread = []
    for N in (128, 256, 512):
        g = geometry(clifford_helix(N, 1, 2, 0.5), S3)
        _, _, tau = frenet(g)
        spread.append((np.ptp(g.k) / g.k.mean(), np.ptp(tau) / abs(tau.mean())))
    spread = np.array(spread)
    assert np.all(spread[-1] < 3e-3)
    assert np.all(spread[:-1] / spread[1:] > 3.5)


def test_random_circle_is_seeded():
    a, b, c = random_circle(64, seed=3), random_circle(64, seed=3), random_circle(64, seed=4)
    assert np.array_equal(a.nodes, b.nodes)
    assert not np.array_equal(a.nodes, c.nodes)
    r = np.linalg.norm(a.nodes, axis=1)
    assert np.abs(r - 1).max() == pytest.approx(0.05)


def test_make_curve_rejects_unknown_name():
    with pytest.raises(ValueError):
        make_curve("spiral", 64)


def test_snapshot_and_points_file_round_trip(tmp_path):
    g = geometry(circle(32, dim=3), E3)
    _, _, tau = frenet(g)
    path = tmp_path / "snap.csv"
    write_snapshot(path, g, tau=tau)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["x0", "x1", "x2", "v", "k", "tau", "h"]
    assert len(rows) == 33 and rows[1][-1] == ""
    assert float(rows[5][0]) == g.curve.nodes[4, 0]

    pts = tmp_path / "pts.csv"
    np.savetxt(pts, circle(32).nodes, delimiter=",", fmt="%.17g")
    assert np.array_equal(points_file(pts, 32).nodes, circle(32).nodes)
    with pytest.raises(ValueError):
        points_file(pts, 64)
