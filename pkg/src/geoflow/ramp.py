"""Ramps on products M x S^1 and geodesic search by curve shortening.

A closed curve on M x S^1 is a ramp when the fiber component of its unit
tangent, the ramp height h, is positive everywhere.  Under the flow h obeys

    dh/dt = h'' + k^2 h        (primes are arclength derivatives)

so the minimum height mu_t never decreases, ramps stay ramps, and a ramp
converges to a closed geodesic winding around the fiber.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .curve import K_FLOOR, d2_ds2, ramp_height, signed_curvature, winding_number
from .errors import NotARampError
from .flow import FlowRun, FlowSettings, StopReport

MU_SLACK = 1e-6


def require_ramp(geom, model, orientation=None):
    """Return the ramp context of ``geom`` or raise naming the lowest node."""
    ctx = ramp_height(geom, model, orientation)
    if not ctx.is_ramp:
        node = int(np.argmin(ctx.h))
        raise NotARampError(
            f"not a ramp: fiber component {ctx.h[node]:.3g} at node {node}", node
        )
    return ctx


def check_ramp_evolution(prev, nxt, dt, model, orientation=1.0):
    """Max relative residual of dh/dt = h'' + k^2 h between two flow states.

    ``prev`` and ``nxt`` are geometries of consecutive states with no
    resampling in between.
    """
    h0 = ramp_height(prev, model, orientation).h
    h1 = ramp_height(nxt, model, orientation).h
    lhs = (h1 - h0) / dt
    rhs = d2_ds2(prev, h0) + prev.k**2 * h0
    scale = max(float(np.max(np.abs(rhs))), 1e-8)
    return float(np.max(np.abs(lhs - rhs))) / scale


def curvature_over_height(geom, h):
    """k / h per node, with k signed in dimension 2."""
    k = signed_curvature(geom) if geom.curve.dim == 2 else geom.k
    return k / h


@dataclass
class RampTrace:
    """Per-step ramp quantities of a run.

    ``Phi`` and ``Psi`` are min and max of k / h; ``C1`` and ``C2`` are their
    values at t = 0, the constants of the exponential curvature bounds.
    """

    t: np.ndarray
    dt: np.ndarray
    mu: np.ndarray
    kappa: np.ndarray
    lam: np.ndarray
    Phi: np.ndarray
    Psi: np.ndarray
    xi: float
    h0: np.ndarray

    @property
    def C1(self):
        return float(self.Phi[0])

    @property
    def C2(self):
        return float(self.Psi[0])

    @classmethod
    def from_flow(cls, trace, xi, h0):
        cols = {name: _column(trace, name) for name in ("t", "dt", "mu", "kappa", "lam", "Phi", "Psi")}
        return cls(xi=float(xi), h0=np.asarray(h0), **cols)


def _column(trace, name):
    if name in ("Phi", "Psi"):
        return np.array([d.extra[name] for d in trace])
    return np.array([getattr(d, name) for d in trace])


@dataclass
class MuReport:
    passed: bool
    worst: float  # most negative mu_{n+1} - mu_n + slack * dt
    step: int | None  # first failing step
    always_ramp: bool


def monitor_mu(trace, slack=MU_SLACK):
    """Check that the minimum ramp height never decreases beyond ``slack * dt``.

    Raises
    ------
    NotARampError
        If the initial curve is not a ramp.
    """
    if trace.h0.min() <= 0:
        node = int(np.argmin(trace.h0))
        raise NotARampError(f"initial curve is not a ramp at node {node}", node)
    mu = trace.mu
    margin = np.diff(mu) + slack * trace.dt[1:]
    bad = np.flatnonzero(margin < 0)
    worst = float(margin.min()) if margin.size else 0.0
    return MuReport(bad.size == 0, worst, int(bad[0]) + 1 if bad.size else None, bool(np.all(mu > 0)))


@dataclass
class BranchResult:
    status: str  # "pass", "fail" or "not-applicable"
    worst_ratio: float = math.nan
    step: int | None = None


def exponential_curvature_bounds(trace, xi=None, slack=1.05, floor=K_FLOOR):
    """Exponential bounds Phi_t >= Phi_0 exp(Xi t) and Psi_t <= Psi_0 exp(Xi t).

    The lower branch applies while Phi stays negative, the upper branch while
    Psi stays positive (both beyond ``floor``); otherwise the branch is
    reported as not applicable.
    """
    xi = trace.xi if xi is None else xi
    t = trace.t - trace.t[0]
    grow = np.exp(xi * t)
    out = {}
    Phi, Psi = trace.Phi, trace.Psi
    if np.all(Phi < -floor):
        bound = slack * Phi[0] * grow
        ratio = Phi / bound  # both negative; ratio <= 1 means inside the bound
        bad = np.flatnonzero(Phi < bound)
        out["lower"] = BranchResult("fail" if bad.size else "pass", float(ratio.max()), int(bad[0]) if bad.size else None)
    else:
        out["lower"] = BranchResult("not-applicable")
    if np.all(Psi > floor):
        bound = slack * Psi[0] * grow
        ratio = Psi / bound
        bad = np.flatnonzero(Psi > bound)
        out["upper"] = BranchResult("fail" if bad.size else "pass", float(ratio.max()), int(bad[0]) if bad.size else None)
    else:
        out["upper"] = BranchResult("not-applicable")
    return out


class RampRun(FlowRun):
    """Flow run on a product that records and monitors the ramp height."""

    extra_columns = ("Phi", "Psi")

    def __init__(self, model, curve, settings=None, t0=0.0, mu_slack=MU_SLACK):
        if not hasattr(model, "rho"):
            raise ValueError("a ramp run needs a model with a circle factor")
        super().__init__(model, curve, settings, t0)
        self.mu_slack = mu_slack
        self.h0 = None

    def prepare(self, state):
        ctx = require_ramp(state.geom, self.model)
        self.orientation = ctx.orientation
        self.h0 = ctx.h

    def extra(self, geom, state):
        q = curvature_over_height(geom, self.ramp(geom).h)
        return {"Phi": float(q.min()), "Psi": float(q.max())}

    def check(self, prev, nxt, dt):
        mu0 = self.ramp(prev).mu
        mu1 = self.ramp(nxt).mu
        if mu1 <= 0:
            return f"ramp lost: minimum height {mu1:.3g}"
        if mu1 < mu0 - self.mu_slack * dt:
            return f"minimum ramp height decreased from {mu0:.17g} to {mu1:.17g}"
        return None

    def ramp_trace(self, trace):
        return RampTrace.from_flow(trace, self.model.xi_bound, self.h0)


@dataclass
class GeodesicResult:
    converged: bool
    curve: object
    geom: object
    winding: tuple
    sup_D1: float
    sup_D2: float
    report: StopReport
    ramp_trace: RampTrace
    flow: object = field(repr=False, default=None)


def windings(curve, model):
    """Winding numbers around the periodic chart axes (fiber last)."""
    out = []
    for a in model.shift_axes:
        out.append(winding_number(curve, axis=a))
    return tuple(out)


def find_geodesic(model, curve, settings=None):
    """Flow a ramp to a closed geodesic.

    Raises
    ------
    NotARampError
        If ``curve`` is not a ramp.
    """
    settings = settings or FlowSettings(t_max=1e3)
    runner = RampRun(model, curve, settings)
    w0 = windings(runner.curve0, model)
    res = runner.run()
    final = res.state
    w1 = windings(final.curve, model)
    if w1 != w0:
        raise RuntimeError(f"winding changed from {w0} to {w1} during the flow")
    last = res.trace[-1]
    return GeodesicResult(
        converged=res.report.reason == "geodesic-converged",
        curve=final.curve,
        geom=final.geom,
        winding=w1,
        sup_D1=last.sup_D1,
        sup_D2=last.sup_D2,
        report=res.report,
        ramp_trace=runner.ramp_trace(res.trace),
        flow=res,
    )


def straight_winding_deviation(curve, model):
    """Max deviation of the nodes from the best straight winding on a flat torus.

    Every chart axis is regressed linearly against the node index; the
    deviation is measured in the product metric.
    """
    n = curve.N
    i = np.arange(n, dtype=float)
    A = np.column_stack([i, np.ones(n)])
    coef, *_ = np.linalg.lstsq(A, curve.nodes, rcond=None)
    resid = curve.nodes - A @ coef
    g = model.metric_diagonal(curve.nodes)
    return float(np.max(np.sqrt((resid**2 * g).sum(axis=1))))
