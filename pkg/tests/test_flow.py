import math
from types import SimpleNamespace

import numpy as np
import pytest

from geoflow.curve import DiscreteCurve, geometry
from geoflow.flow import (
    EXIT_CODES,
    TRACE_COLUMNS,
    FlowRun,
    FlowSettings,
    FlowState,
    adaptive_dt,
    avoid_pole,
    bernstein_monitor,
    bernstein_window,
    geodesic_certificate,
    monitor_identities,
    run,
    step,
    velocity,
)
from geoflow.generators import circle, ellipse, perturbed_circle, torus_winding
from geoflow.manifold import Circle, Euclidean, Product, SpaceForm

E2, S3 = Euclidean(2), SpaceForm(3, 1)
TORUS = Product(Circle(1.0), 1.0)


def _state(curve, model):
    return FlowState(curve, 0.0, 0, 0.0, geometry(curve, model))


@pytest.fixture(scope="module")
def torus_run():
    """Perturbed (1, 2) winding on the flat torus, flowed to its geodesic."""
    return run(TORUS, torus_winding(64, 1, 2, amp=0.1, mode=2), t_max=100.0)


# -- velocity and time step -----------------------------------------------------------


def test_circle_velocity_points_inward():
    c = circle(256)
    vel = velocity(_state(c, E2), E2)
    assert np.abs(vel + c.nodes).max() < 1e-3


def test_great_circle_velocity_vanishes():
    assert np.linalg.norm(velocity(_state(circle(256, dim=3), S3), S3), axis=1).max() <= 1e-3


def test_ellipse_velocity_at_major_axis():
    vel = velocity(_state(ellipse(512), E2), E2)
    assert np.linalg.norm(vel[[0, 256]], axis=1) == pytest.approx([2.0, 2.0], abs=2e-2)


def test_cfl_step():
    g = geometry(circle(256), E2)
    assert adaptive_dt(g) == pytest.approx(0.25 * (2 * math.pi / 256) ** 2, rel=1e-6)
    assert adaptive_dt(g) == pytest.approx(1.506e-4, rel=1e-3)
    assert adaptive_dt(geometry(circle(512), E2)) == pytest.approx(adaptive_dt(g) / 4, rel=1e-6)
    assert adaptive_dt(SimpleNamespace(ds=np.full(8, 1e-7))) == 1e-12
    assert adaptive_dt(g, dt_max=1e-5) == 1e-5


# -- single steps ---------------------------------------------------------------------------


def test_step_shortens_curve():
    s = _state(ellipse(256), E2)
    nxt = step(s, E2, adaptive_dt(s.geom))
    assert nxt.geom.length < s.geom.length
    assert nxt.t > s.t and nxt.step == 1


def test_step_resamples_on_cadence():
    s = _state(ellipse(128), E2)
    for _ in range(25):
        s = step(s, E2, adaptive_dt(s.geom), resample_every=25)
    assert (s.geom.ds.max() - s.geom.ds.min()) / s.geom.ds.mean() < 1e-2


def test_great_circle_stays_put():
    c = circle(256, dim=3)
    s = _state(c, S3)
    for _ in range(10_000):
        s = step(s, S3, adaptive_dt(s.geom))
    assert np.abs(s.curve.nodes - c.nodes).max() < 1e-3


def test_shrinking_circle_radius_law():
    # r(t) = sqrt(1 - 2t)
    res = run(E2, circle(128), t_max=0.25)
    r = np.linalg.norm(res.state.curve.nodes, axis=1)
    assert np.abs(r - math.sqrt(0.5)).max() < 5e-3


# -- identity monitors ------------------------------------------------------------------------


def _pair(curve, model, steps=1):
    s = _state(curve, model)
    dt = adaptive_dt(s.geom)
    nxt = step(s, model, dt, resample_every=0)
    return s.geom, nxt.geom, dt


def test_circle_length_law_residual():
    prev, nxt, dt = _pair(circle(512), E2)
    r1, r2, r3 = monitor_identities(prev, nxt, dt)
    assert r1 < 1e-2 and r2 < 1e-2 and r3 < 1e-2


def test_geodesic_residuals_vanish():
    prev, nxt, dt = _pair(torus_winding(128, 1, 2), TORUS)
    assert max(monitor_identities(prev, nxt, dt)) < 1e-6


def test_length_law_residual_falls_under_refinement():
    res = []
    for N in (128, 256, 512):
        prev, nxt, dt = _pair(ellipse(N), E2)
        res.append(monitor_identities(prev, nxt, dt)[0])
    assert res[0] > res[1] > res[2]
    assert res[0] / res[2] > 4


def test_speed_and_tangent_laws_on_sphere():
    # the speed law residual is relative per node, so keep k away from 0
    prev, nxt, dt = _pair(perturbed_circle(512, 0.05, 2, 0.5, dim=3), S3)
    assert prev.k.min() > 0.5
    r1, r2, r3 = monitor_identities(prev, nxt, dt)
    assert r1 < 1e-3 and r2 < 1e-3 and r3 < 1e-3


# -- Bernstein window -------------------------------------------------------------------------


def test_bernstein_window_formula():
    assert bernstein_window(1.0, 1.0) == pytest.approx(0.5 * math.log(1 + 1 / 6))
    # flat models use the floor; the window tends to 1 / (2 (4 M0 + 1))
    assert bernstein_window(1.0, 0.0) == pytest.approx(0.1, rel=1e-5)


def test_bernstein_geodesic_trivially_passes(torus_run):
    res = run(TORUS, torus_winding(64, 1, 2), t_max=0.1)
    rep = bernstein_monitor(res.trace, TORUS)
    assert rep.passed and rep.M0 < 1e-20


def test_bernstein_flat_ellipse():
    res = run(E2, ellipse(256), t_max=0.02, bernstein=True)
    rep = bernstein_monitor(res.trace, E2)
    assert rep.lam == 1e-6
    assert math.isfinite(rep.window) and rep.rows > 1
    assert rep.passed and rep.ratio1 <= 1.0
    assert res.report.reason == "t-max-reached"


# -- full runs ----------------------------------------------------------------------------------


def test_torus_winding_converges_to_geodesic(torus_run):
    res = torus_run
    assert res.report.reason == "geodesic-converged"
    assert res.report.exit_code == 0 and res.report.clean
    last = res.trace[-1]
    assert last.sup_D1 < 1e-4 and last.sup_D2 < 10 * 1e-4
    assert last.bending < res.trace[0].bending and last.bending < 1e-6
    assert last.int_D2sq < 1e-5
    cert = res.report.certificate
    assert cert["final_residual"] == last.residual and len(cert["last_residuals"]) == 10
    assert geodesic_certificate(res) == {"sup_D1": last.sup_D1, "sup_D2": last.sup_D2}


def test_length_never_increases(torus_run):
    L = np.array([d.L for d in torus_run.trace])
    assert np.all(np.diff(L) <= 1e-12 * L[0])
    assert all(d.L0 == L[0] for d in torus_run.trace)


def test_length_law_recorded(torus_run):
    r1 = np.array([d.residual1 for d in torus_run.trace[1:]])
    bend = np.array([d.bending for d in torus_run.trace[:-1]])
    assert np.all(r1[bend > 1e-6] < 5e-2)
    assert math.isnan(torus_run.trace[0].residual1)


def test_circle_collapses_near_half():
    res = run(E2, circle(64), t_max=1.0)
    assert res.report.reason in ("blowup-guard", "length-floor")
    assert res.report.exit_code == (4 if res.report.reason == "blowup-guard" else 0)
    assert res.trace[-1].t == pytest.approx(0.5, abs=5e-3)


def test_great_circle_converges_immediately():
    res = run(S3, circle(512, dim=3))
    assert res.report.reason == "geodesic-converged"
    assert len(res.trace) <= 51


def test_max_steps_and_trace_columns():
    res = run(E2, ellipse(64), max_steps=7)
    assert res.report.reason == "t-max-reached"
    assert [d.step for d in res.trace] == list(range(8))
    assert TRACE_COLUMNS[:3] == ("step", "t", "dt")
    assert res.trace[1].kappa > 0  # convex curve, signed curvature positive


def test_snapshots_on_cadence():
    res = run(E2, ellipse(64), max_steps=10, snapshot_every=4)
    assert [s.step for s in res.snapshots] == [0, 4, 8, 10]


def test_runs_are_deterministic():
    a = run(E2, ellipse(64), max_steps=30)
    b = run(E2, ellipse(64), max_steps=30)
    assert [d.L for d in a.trace] == [d.L for d in b.trace]


def test_settings_or_keywords():
    with pytest.raises(TypeError):
        run(E2, ellipse(64), FlowSettings(), t_max=1.0)


def test_exit_codes():
    assert EXIT_CODES["geodesic-converged"] == 0
    assert EXIT_CODES["monitor-violation"] == 2
    assert EXIT_CODES["blowup-guard"] == 4
    assert EXIT_CODES["resample-failure"] == 4


def test_domain_exit_is_reported(monkeypatch):
    # a node pushed out of the Poincare ball ends the run, it does not crash
    ball = SpaceForm(3, -1)
    c = perturbed_circle(64, 0.05, 3, 0.9, dim=3)

    class Push(FlowRun):
        def advance(self, state, dt):
            g = state.geom
            return SimpleNamespace(dT=g.curve.nodes / dt)

    res = Push(ball, c).run()
    assert res.report.reason == "resample-failure"
    assert res.report.exit_code == 4


def test_pole_rotation():
    # small circle of ambient radius 1e-3 around the projection pole: chart radius about 2e3
    u = np.arange(64) * (2 * np.pi / 64)
    eps = 1e-3
    y = np.column_stack([eps * np.cos(u), eps * np.sin(u), np.zeros(64), np.full(64, -math.sqrt(1 - eps**2))])
    near = DiscreteCurve(S3.from_ambient(y))
    assert np.linalg.norm(near.nodes, axis=1).max() > 1e3
    rotated, moved = avoid_pole(near, S3)
    assert moved
    assert np.linalg.norm(rotated.nodes, axis=1).max() < 10
    # the rotation is an isometry
    assert geometry(rotated, S3).length == pytest.approx(2 * np.pi * eps, rel=1e-3)
    c = circle(64, dim=3)
    assert avoid_pole(c, S3) == (c, False)
