"""Curve shortening under a metric that evolves with the curve.

Two settings are supported, both with a spatially constant f(t), f(0) = 0:

* conformal, g_t = exp(f) g_0, with df/dt = 2k^2 + 2R(T, N, T, N) at the
  node of maximal curvature;
* warped, g + exp(f) rho^2 dsigma^2 on base x S^1, with the same numerator
  divided by 2|pi_* T|^2 - |pi_* N|^2 (fiber-factor norms).

With these rates the maximal curvature M_t never increases.  A unit circle
in the conformal plane is the model case: f = 2t, the chart radius is
exp(-t) and k^2 stays 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from types import SimpleNamespace

import numpy as np

from .curve import K_FLOOR, frenet
from .errors import DegenerateDenominatorError
from .flow import FlowRun, FlowSettings, StopRun
from .manifold import ConformalEvolving, Held, PiecewiseLinear, WarpedCircle, curvature_form

DENOMINATOR_FLOOR = 1e-6
F_LIMIT = 50.0
MT_SLACK = 1e-4
MODES = ("conformal", "warped", "off")


def argmax_node(geom):
    """Index of maximal k^2, lowest index on ties."""
    return int(np.argmax(geom.k))


def max_curvature_set(geom, tol=1e-6):
    """Nodes with k^2 >= M_t (1 - tol)."""
    k2 = geom.k**2
    return np.flatnonzero(k2 >= k2.max() * (1.0 - tol))


def _unit_normal(geom, i):
    if geom.curve.dim == 3:
        return frenet(geom)[0][i]
    return geom.dT[i] / geom.k[i]


def _curvature_term(geom, model, i):
    """R(T, N, T, N) at node i under the metric of ``geom``."""
    if model.flat:
        return 0.0
    T = geom.T[i]
    N = _unit_normal(geom, i)
    return float(curvature_form(model, geom.curve.nodes[i], T, N, T, N, geom.t))


def f_rate_conformal(geom, model, k_floor=K_FLOOR):
    """2k^2 + 2R(T, N, T, N) at the node of maximal curvature.

    Below ``k_floor`` the normal is undefined and the curvature term is
    dropped.
    """
    i = argmax_node(geom)
    k2 = float(geom.k[i] ** 2)
    if geom.k[i] <= k_floor:
        return 2.0 * k2
    return 2.0 * k2 + 2.0 * _curvature_term(geom, model, i)


def warped_denominator(geom, model, i):
    """2|pi_* T|^2 - |pi_* N|^2 at node i, fiber norms in the current metric."""
    s2 = model.fiber_scale2(geom.t)
    T = geom.T[i]
    N = _unit_normal(geom, i)
    return float(2.0 * s2 * T[-1] ** 2 - s2 * N[-1] ** 2)


def warped_rate(k2, curvature, denominator, floor=DENOMINATOR_FLOOR):
    """(2k^2 + 2R) / denominator, refusing near-zero denominators."""
    if not abs(denominator) > floor:
        raise DegenerateDenominatorError(
            f"warped rate denominator {denominator:.3g} is within {floor:g} of zero"
        )
    return (2.0 * k2 + 2.0 * curvature) / denominator


def f_rate_warped(geom, model, k_floor=K_FLOOR):
    """Warped-product rate at the node of maximal curvature.

    Returns
    -------
    rate, denominator : float
        The denominator is NaN when the curve is discretely geodesic
        (k <= ``k_floor``), where the rate is taken as 0.

    Raises
    ------
    DegenerateDenominatorError
        If the denominator is within 1e-6 of zero.
    """
    i = argmax_node(geom)
    if geom.k[i] <= k_floor:
        return 0.0, math.nan
    den = warped_denominator(geom, model, i)
    return warped_rate(float(geom.k[i] ** 2), _curvature_term(geom, model, i), den), den


@dataclass
class MtReport:
    passed: bool
    worst_ratio: float
    step: int | None


def monitor_Mt(trace, slack=MT_SLACK):
    """Check M_{t+dt} <= M_t (1 + slack) along a trace."""
    M = np.array([d.M for d in trace])
    if M.size < 2:
        return MtReport(True, 1.0, None)
    ratio = M[1:] / np.maximum(M[:-1], 1e-300)
    bad = np.flatnonzero(M[1:] > M[:-1] * (1.0 + slack))
    return MtReport(bad.size == 0, float(ratio.max()), int(bad[0]) + 1 if bad.size else None)


def evolving_model(mode, base, rho=1.0):
    """Model with f held at 0 for the given rate mode."""
    if mode == "warped":
        return WarpedCircle(base, rho, Held(0.0))
    if mode in ("conformal", "off"):
        return ConformalEvolving(base, Held(0.0))
    raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")


class EvolvingRun(FlowRun):
    """Flow run that advances f before every curve step.

    Each step computes the rate at the current curve, sets
    f <- f + dt * rate, and moves the curve with the curvature vector of the
    updated metric.  With ``mode="off"`` the rate is forced to 0.
    """

    extra_columns = ("f", "df_dt", "M_t", "denominator")

    def __init__(self, model, curve, settings=None, mode="conformal", enforce_Mt=None, f0=0.0, t0=0.0):
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
        if mode == "warped" and not isinstance(model, WarpedCircle):
            raise ValueError("warped mode needs a WarpedCircle model")
        if mode != "warped" and not isinstance(model, ConformalEvolving):
            raise ValueError(f"{mode} mode needs a ConformalEvolving model")
        model = replace(model, f=Held(f0))
        super().__init__(model, curve, settings, t0)
        self.mode = mode
        self.static_metric = mode == "off"
        self.enforce_Mt = mode != "off" if enforce_Mt is None else enforce_Mt
        self.f = f0
        self.rate = 0.0
        self.times = [t0]
        self.values = [f0]
        self._pending = None  # (geometry, rate, denominator, error)

    # rate evaluation is cached per geometry so the trace and the step agree
    def _rate(self, geom):
        if self._pending is not None and self._pending[0] is geom:
            return self._pending[1:]
        den, err = math.nan, None
        if self.mode == "off":
            rate = 0.0
        elif self.mode == "conformal":
            rate = f_rate_conformal(geom, self.model)
        else:
            try:
                rate, den = f_rate_warped(geom, self.model)
            except DegenerateDenominatorError as exc:
                rate, err = math.nan, exc
                den = warped_denominator(geom, self.model, argmax_node(geom))
        self._pending = (geom, rate, den, err)
        return rate, den, err

    def extra(self, geom, state):
        rate, den, _ = self._rate(geom)
        return {"f": float(self.f), "df_dt": rate, "M_t": float(geom.k.max()) ** 2, "denominator": den}

    def advance(self, state, dt):
        geom = state.geom
        rate, _, err = self._rate(geom)
        if err is not None:
            raise err
        self.rate = rate
        if rate == 0.0:
            return geom
        f_new = self.f + dt * rate
        if abs(f_new) > F_LIMIT:
            raise StopRun("metric-singular", f"|f| = {abs(f_new):.3g} exceeds {F_LIMIT:g}")
        df = f_new - self.f
        self.f = f_new
        state.f_value = f_new
        self.model = replace(self.model, f=Held(f_new))
        if self.mode == "conformal":
            # a constant conformal factor scales DT/ds by exp(-df) in chart components
            return SimpleNamespace(dT=geom.dT * math.exp(-df))
        return self.geometry(state.curve, state.t + dt)

    def after_step(self, state):
        state.f_value = self.f
        self.times.append(state.t)
        self.values.append(self.f)

    def law_terms(self, geom):
        """Extra dL/dt and dv/dt from the metric change over one step."""
        if self.rate == 0.0:
            return 0.0, 0.0
        if self.mode == "conformal":
            w = 1.0
        else:
            s2 = self.model.fiber_scale2(geom.t)
            w = s2 * geom.T[:, -1] ** 2
        half = 0.5 * self.rate
        return half * geom.integral(w * np.ones_like(geom.v)), half * w * geom.v

    def check(self, prev, nxt, dt):
        if not self.enforce_Mt:
            return None
        m0, m1 = float(prev.k.max()) ** 2, float(nxt.k.max()) ** 2
        if m1 > m0 * (1.0 + MT_SLACK):
            return f"max curvature increased from {m0:.17g} to {m1:.17g}"
        return None

    def f_function(self):
        """f as a piecewise-linear function of t over the run so far."""
        return PiecewiseLinear(tuple(self.times), tuple(self.values))


def run_evolving(model, curve, mode="conformal", settings=None, **kwargs):
    """Run an evolving-metric flow; returns (FlowResult, EvolvingRun)."""
    if settings is None:
        settings = FlowSettings(**kwargs)
    runner = EvolvingRun(model, curve, settings, mode)
    return runner.run(), runner


def step_evolving(state, model, dt, mode="conformal"):
    """One evolving-metric step of size ``dt`` from ``state``.

    Returns
    -------
    state : FlowState
        The new state, with ``f_value`` advanced by dt times the rate.
    model
        The model with f held at the new value.
    """
    settings = FlowSettings(t_max=state.t + dt, dt_max=dt, c_cfl=1e300, resample_every=0)
    runner = EvolvingRun(model, state.curve, settings, mode, enforce_Mt=False, f0=state.f_value, t0=state.t)
    res = runner.run()
    if res.report.reason != "t-max-reached":
        raise RuntimeError(f"step stopped early: {res.report.reason} {res.report.message}")
    return res.state, runner.model
