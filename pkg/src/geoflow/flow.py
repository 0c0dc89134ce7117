"""Curve shortening flow by explicit Euler steps in chart coordinates.

Each step moves every node by dt times the curvature vector DT/ds, with
dt tied to the smallest arclength spacing.  Every transition is checked
against the evolution laws of the flow:

* dL/dt = -int k^2 ds
* dv/dt = -k^2 v
* nabla_t T = k^2 T + D^2T/ds^2

and the run stops on geodesic convergence, blow-up, collapse, a failed
monitor, or the time limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np

from .curve import (
    DiscreteCurve,
    frenet,
    geometry,
    ramp_height,
    resample_arclength,
    signed_curvature,
)
from .errors import (
    DegenerateCurveError,
    DegenerateDenominatorError,
    DomainError,
    FrameUndefinedError,
    ResampleError,
)
from .manifold import SpaceForm

LAMBDA_FLOOR = 1e-6
POLE_RADIUS = 1e3

CLEAN_STOPS = ("geodesic-converged", "t-max-reached", "length-floor")
EXIT_CODES = {
    "geodesic-converged": 0,
    "t-max-reached": 0,
    "length-floor": 0,
    "monitor-violation": 2,
    "blowup-guard": 4,
    "metric-singular": 4,
    "resample-failure": 4,
}


@dataclass
class FlowSettings:
    """Integrator, stopping and monitor parameters of one run."""

    t_max: float = 1.0
    tol_geo: float = 1e-4
    converge_steps: int = 50
    c_cfl: float = 0.25
    dt_min: float = 1e-12
    dt_max: float = 1e-2
    resample_every: int = 25
    k2_max: float = 1e6
    length_floor: float = 1e-4  # relative to the initial length
    n_max: int = 3
    # identity monitors: residual_1 is enforced only while int k^2 ds > monitor_gate
    monitor_tol: float = 5e-2
    monitor_gate: float = 1e-6
    monotone_tol: float = 1e-12
    bernstein: bool = False
    bernstein_slack: float = 0.05
    snapshot_every: int = 0
    max_steps: int | None = None


@dataclass
class FlowState:
    curve: DiscreteCurve
    t: float = 0.0
    step: int = 0
    f_value: float = 0.0
    geom: object = field(default=None, repr=False)


@dataclass(slots=True)
class Diagnostics:
    """Scalar summary of one flow state.

    ``residual1..3`` describe the transition that produced this state and are
    NaN on the first row or when not applicable.  ``L0`` is the initial
    length, the upper length bound role in the decay estimates.
    """

    step: int
    t: float
    dt: float
    L: float
    dLdt: float
    bending: float
    M: float
    kappa: float
    lam: float
    sup_D1: float
    sup_D2: float
    sup_D3: float
    int_D2sq: float
    mu: float
    L0: float
    residual: float
    residual1: float = math.nan
    residual2: float = math.nan
    residual3: float = math.nan
    bernstein2: float = math.nan
    extra: dict = field(default_factory=dict)


TRACE_COLUMNS = tuple(f.name for f in fields(Diagnostics) if f.name != "extra")


@dataclass
class StopReport:
    reason: str
    diagnostics: Diagnostics | None
    message: str = ""
    certificate: dict = field(default_factory=dict)

    @property
    def exit_code(self):
        return EXIT_CODES[self.reason]

    @property
    def clean(self):
        return self.reason in CLEAN_STOPS


@dataclass
class Snapshot:
    step: int
    t: float
    geom: object
    tau: np.ndarray | None
    h: np.ndarray | None


@dataclass
class FlowResult:
    trace: list
    snapshots: list
    report: StopReport
    state: FlowState
    model: object


class StopRun(Exception):
    """Raised inside a step to end the run with a given reason."""

    def __init__(self, reason, message=""):
        super().__init__(message)
        self.reason = reason
        self.message = message


# ---------------------------------------------------------------------------
# single-step pieces


def velocity(state, model):
    """Curvature vector DT/ds at every node (the flow velocity)."""
    geom = state.geom if state.geom is not None else geometry(state.curve, model, state.t)
    return geom.dT


def adaptive_dt(geom, c_cfl=0.25, dt_min=1e-12, dt_max=1e-2):
    """CFL step c_cfl * (min ds)^2 clamped to [dt_min, dt_max]."""
    raw = c_cfl * float(np.min(geom.ds)) ** 2
    return min(max(raw, dt_min), dt_max)


def step(state, model, dt, resample_every=25, n_max=3):
    """One forward Euler step; resamples when the new step index is a multiple
    of ``resample_every``.

    Raises
    ------
    DomainError
        If a node leaves the chart domain.
    """
    geom = state.geom if state.geom is not None else geometry(state.curve, model, state.t, n_max)
    nodes = state.curve.nodes + dt * geom.dT
    model.check_domain(nodes)
    curve = state.curve.with_nodes(nodes)
    t = state.t + dt
    n = state.step + 1
    if resample_every and n % resample_every == 0:
        curve = resample_arclength(curve, model, t)
    return FlowState(curve, t, n, state.f_value, geometry(curve, model, t, n_max))


def monitor_identities(prev, nxt, dt, rate_L=0.0, rate_v=0.0, static=True):
    """Residuals of the length law, the speed law and the tangent law.

    ``prev`` and ``nxt`` are geometries of consecutive states with no
    resampling in between.  ``rate_L`` and ``rate_v`` are additional terms
    of dL/dt and dv/dt (nonzero for time-dependent metrics).  The tangent
    law is only checked when ``static``.
    """
    bend = prev.bending
    r1 = abs((nxt.length - prev.length) / dt + bend - rate_L) / max(bend, 1e-12)
    k2v = prev.k**2 * prev.v
    dv = (nxt.v - prev.v) / dt + k2v - rate_v
    r2 = float((np.abs(dv) / np.maximum(k2v, 1e-8)).max())
    r3 = math.nan
    if static:
        lhs = (nxt.T - prev.T) / dt
        if prev.gamma is not None:
            lhs = lhs + np.einsum("iabc,ib,ic->ia", prev.gamma, prev.dT, prev.T)
        k2T = prev.k[:, None] ** 2 * prev.T
        rhs = k2T + prev.D[2]
        # the two terms cancel on round circles, so scale by their sizes
        scale = max(float(prev.norm(k2T).max()), float(prev.norm(prev.D[2]).max()), 1e-8)
        r3 = float(prev.norm(lhs - rhs).max()) / scale
    return float(r1), r2, r3


@dataclass
class BernsteinReport:
    window: float
    M0: float
    lam: float
    ratio1: float  # max M_t / (2 M0)
    ratio2: float  # max bernstein2 / (16 M0)
    rows: int
    passed: bool


def bernstein_window(M0, lam):
    """Length of the short-time window (1/2L) log(1 + L/(4 M0 + L + 1))."""
    lam = max(lam, LAMBDA_FLOOR)
    return math.log1p(lam / (4.0 * M0 + lam + 1.0)) / (2.0 * lam)


def bernstein_monitor(trace, model, slack=0.05, floor=1e-10):
    """Check M_t <= 2 M0 and sup(t |D^2T/ds^2|^2 + 3 k^2) <= 16 M0 on the window.

    Rows must carry ``bernstein2`` measured with the time origin at the first
    row of ``trace``.
    """
    if not trace:
        raise ValueError("empty trace")
    lam = max(float(model.lambda_bound), LAMBDA_FLOOR)
    t0, M0 = trace[0].t, trace[0].M
    window = bernstein_window(M0, lam)
    r1 = r2 = 0.0
    rows = 0
    for d in trace:
        if d.t - t0 > window:
            break
        rows += 1
        r1 = max(r1, d.M / max(2.0 * M0, floor))
        if not math.isnan(d.bernstein2):
            r2 = max(r2, d.bernstein2 / max(16.0 * M0, floor))
    ok = r1 <= 1.0 + slack and r2 <= 1.0 + slack
    return BernsteinReport(window, M0, lam, r1, r2, rows, ok)


# ---------------------------------------------------------------------------
# setup helpers


def avoid_pole(curve, model):
    """Rotate a curve on S^3 away from the projection pole if it comes close.

    Nodes with chart radius above 1e3 are near the excluded pole; the curve is
    then moved by the rotation exchanging the first and last ambient axes.
    Returns the (possibly rotated) curve and whether a rotation was applied.
    """
    if not (isinstance(model, SpaceForm) and model.K > 0):
        return curve, False
    if np.max(np.linalg.norm(curve.nodes, axis=1)) <= POLE_RADIUS:
        return curve, False
    y = model.to_ambient(curve.nodes)
    y = y[:, [-1] + list(range(1, y.shape[1] - 1)) + [0]]
    y[:, 0] = -y[:, 0]
    return curve.with_nodes(model.from_ambient(y)), True


# ---------------------------------------------------------------------------
# the run loop


class FlowRun:
    """A curve shortening run with identity monitors and stop detection.

    Subclasses extend the run through a few hooks:

    ``prepare(state)``
        validation at t = 0 (raise to refuse the initial data);
    ``advance(state, dt)``
        update time-dependent metric data, return the geometry whose DT/ds
        drives this step;
    ``law_terms(geom)``
        extra terms of dL/dt and dv/dt for the identity monitors;
    ``extra(geom, state)``
        additional trace columns, listed in ``extra_columns``;
    ``check(prev, nxt, dt)``
        return a violation message or None.
    """

    extra_columns: tuple = ()
    static_metric = True

    def __init__(self, model, curve, settings=None, t0=0.0):
        self.model = model
        self.settings = settings or FlowSettings()
        curve, self.rotated = avoid_pole(curve, model)
        curve.validate(model)
        self.curve0 = curve
        self.t0 = t0
        self.orientation = None
        self.has_fiber = hasattr(model, "rho")

    # -- hooks -----------------------------------------------------------
    def prepare(self, state):
        pass

    def advance(self, state, dt):
        return state.geom

    def law_terms(self, geom):
        return 0.0, 0.0

    def extra(self, geom, state):
        return {}

    def check(self, prev, nxt, dt):
        return None

    # -- pieces ------------------------------------------------------------
    def geometry(self, curve, t):
        return geometry(curve, self.model, t, self.settings.n_max)

    def ramp(self, geom):
        ctx = ramp_height(geom, self.model, self.orientation)
        if self.orientation is None:
            self.orientation = ctx.orientation
        return ctx

    def diagnostics(self, state, dt, L0, prev_L=None):
        geom = state.geom
        k = geom.k
        kmax = float(k.max())
        d2 = geom.norm(geom.D[2]) if len(geom.D) > 2 else None
        d3 = geom.norm(geom.D[3]) if len(geom.D) > 3 else None
        kappa = float(signed_curvature(geom).min()) if geom.curve.dim == 2 else math.nan
        mu = self.ramp(geom).mu if self.has_fiber else math.nan
        bern = math.nan
        if d2 is not None:
            bern = float(((state.t - self.t0) * d2**2 + 3.0 * k**2).max())
        return Diagnostics(
            step=state.step,
            t=state.t,
            dt=dt,
            L=geom.length,
            dLdt=math.nan if prev_L is None else (geom.length - prev_L) / dt,
            bending=geom.bending,
            M=kmax**2,
            kappa=kappa,
            lam=kmax,
            sup_D1=kmax,
            sup_D2=math.nan if d2 is None else float(d2.max()),
            sup_D3=math.nan if d3 is None else float(d3.max()),
            int_D2sq=math.nan if d2 is None else geom.integral(d2**2),
            mu=mu,
            L0=L0,
            residual=kmax,
            bernstein2=bern,
            extra=self.extra(geom, state),
        )

    def snapshot(self, state):
        geom = state.geom
        tau = None
        if geom.curve.dim == 3:
            try:
                tau = frenet(geom)[2]
            except FrameUndefinedError:
                tau = None
        h = self.ramp(geom).h if self.has_fiber else None
        return Snapshot(state.step, state.t, geom, tau, h)

    # -- main loop ---------------------------------------------------------
    def run(self):
        s = self.settings
        state = FlowState(self.curve0, self.t0, 0, 0.0)
        state.geom = self.geometry(state.curve, state.t)
        self.prepare(state)
        L0 = state.geom.length
        trace, snaps = [], []
        diag = self.diagnostics(state, math.nan, L0)
        trace.append(diag)
        if s.snapshot_every:
            snaps.append(self.snapshot(state))
        streak = 0
        bern_window = None
        if s.bernstein:
            bern_window = bernstein_window(diag.M, float(self.model.lambda_bound))
        report = None
        while report is None:
            # stop criteria on the current state
            streak = streak + 1 if diag.residual < s.tol_geo else 0
            if streak >= s.converge_steps:
                tail = [d.residual for d in trace[-10:]]
                report = StopReport(
                    "geodesic-converged",
                    diag,
                    f"sup|DT/ds| < {s.tol_geo:g} for {s.converge_steps} steps",
                    {"final_residual": diag.residual, "last_residuals": tail},
                )
                break
            if diag.M > s.k2_max:
                report = StopReport("blowup-guard", diag, f"max k^2 = {diag.M:.6g} exceeds {s.k2_max:g}")
                break
            if diag.L < s.length_floor * L0:
                report = StopReport("length-floor", diag, f"length {diag.L:.6g} below floor")
                break
            if state.t >= s.t_max * (1.0 - 1e-14):
                report = StopReport("t-max-reached", diag)
                break
            if s.max_steps is not None and state.step >= s.max_steps:
                report = StopReport("t-max-reached", diag, "step limit reached")
                break
            raw = s.c_cfl * float(state.geom.ds.min()) ** 2
            if raw < s.dt_min:
                report = StopReport("blowup-guard", diag, f"time step {raw:.3g} below dt_min")
                break
            dt = min(raw, s.dt_max, s.t_max - state.t)
            try:
                state, diag, violation = self._transition(state, dt, L0, diag)
            except StopRun as stop:
                report = StopReport(stop.reason, diag, stop.message)
                break
            except DegenerateDenominatorError as exc:
                report = StopReport("monitor-violation", diag, str(exc))
                break
            except (ResampleError, DomainError) as exc:
                report = StopReport("resample-failure", diag, str(exc))
                break
            except DegenerateCurveError as exc:
                report = StopReport("blowup-guard", diag, str(exc))
                break
            trace.append(diag)
            if s.snapshot_every and state.step % s.snapshot_every == 0:
                snaps.append(self.snapshot(state))
            if violation is None and bern_window is not None and state.t - self.t0 <= bern_window:
                M0 = trace[0].M
                slack = 1.0 + s.bernstein_slack
                if diag.M > max(2.0 * M0 * slack, 1e-10) or diag.bernstein2 > max(16.0 * M0 * slack, 1e-10):
                    violation = f"Bernstein bound exceeded at t = {state.t:.6g}"
            if violation is not None:
                report = StopReport("monitor-violation", diag, violation)
        if s.snapshot_every and (not snaps or snaps[-1].step != state.step):
            snaps.append(self.snapshot(state))
        return FlowResult(trace, snaps, report, state, self.model)

    def _transition(self, state, dt, L0, diag):
        s = self.settings
        prev = state.geom
        drive = self.advance(state, dt)
        nodes = state.curve.nodes + dt * drive.dT
        self.model.check_domain(nodes)
        if isinstance(self.model, SpaceForm) and self.model.K > 0:
            if np.max(np.linalg.norm(nodes, axis=1)) > POLE_RADIUS:
                raise DomainError("a node approached the stereographic pole")
        t = state.t + dt
        n = state.step + 1
        curve = state.curve.with_nodes(nodes)
        raw_geom = self.geometry(curve, t)
        # monitors compare against the stepped curve before any resampling
        rate_L, rate_v = self.law_terms(prev)
        r1, r2, r3 = monitor_identities(prev, raw_geom, dt, rate_L, rate_v, self.static_metric)
        violation = None
        if prev.bending > s.monitor_gate and r1 > s.monitor_tol and not self._within_grid_error(prev, r1):
            violation = f"length law residual {r1:.3g} at step {n}"
        if self.static_metric and raw_geom.length > prev.length + s.monotone_tol * L0:
            violation = f"length increased by {raw_geom.length - prev.length:.3g} at step {n}"
        msg = self.check(prev, raw_geom, dt)
        if msg is not None and violation is None:
            violation = msg
        geom = raw_geom
        if s.resample_every and n % s.resample_every == 0:
            curve = resample_arclength(curve, self.model, t)
            geom = self.geometry(curve, t)
        new = FlowState(curve, t, n, state.f_value, geom)
        self.after_step(new)
        out = self.diagnostics(new, dt, L0, prev_L=prev.length)
        out.dLdt = (raw_geom.length - prev.length) / dt
        out.residual1, out.residual2, out.residual3 = r1, r2, r3
        return new, out, violation

    def _within_grid_error(self, prev, r1):
        """Whether a length-law mismatch is explained by the grid error of the bending.

        The discrete bending carries an O(ds^2) bias while the length is
        spectrally accurate, so near geodesics the relative residual can be
        large for a well-behaved run.  The bias is estimated by Richardson
        extrapolation against every other node.
        """
        if prev.curve.N < 32:
            return False
        half = self.geometry(prev.curve.with_nodes(prev.curve.nodes[::2]), prev.t)
        bias = abs(prev.bending - half.bending) / 3.0
        mismatch = r1 * prev.bending
        return mismatch <= self.settings.monitor_tol * prev.bending + 2.0 * bias

    def after_step(self, state):
        pass


def run(model, curve, settings=None, **kwargs):
    """Run plain curve shortening flow; see :class:`FlowRun`."""
    if settings is None:
        settings = FlowSettings(**kwargs)
    elif kwargs:
        raise TypeError("pass either settings or keyword overrides, not both")
    return FlowRun(model, curve, settings).run()


def geodesic_certificate(result):
    """Final sup|DT/ds| and sup|D^2T/ds^2| of a run."""
    d = result.trace[-1]
    return {"sup_D1": d.sup_D1, "sup_D2": d.sup_D2}


__all__ = [
    "FlowSettings",
    "FlowState",
    "Diagnostics",
    "StopReport",
    "Snapshot",
    "FlowResult",
    "FlowRun",
    "TRACE_COLUMNS",
    "velocity",
    "adaptive_dt",
    "step",
    "monitor_identities",
    "bernstein_window",
    "bernstein_monitor",
    "avoid_pole",
    "run",
]
