"""Curvature and torsion of helices in space forms.

A curve with spatially constant curvature k and torsion tau in a space form
of curvature K stays such a curve under curve shortening flow, and (k, tau)
obey

    dk/dt = k^3 - tau^2 k + K k,      dtau/dt = 2 tau k^2,

or in u = k^2, v = tau^2

    du/dt = 2u^2 + 2Ku - 2uv,         dv/dt = 4uv.

For K = -1 with u(0) = 1 the orbit is u = 1 + sqrt(v v0) - v and
tilde_tau = sqrt(v) solves dtilde_tau/dt = 2 tilde_tau (1 + tilde_tau0 tilde_tau - tilde_tau^2),
which integrates in closed form (the implicit solution checked by
:func:`diamond_residual`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

BLOWUP_K = 1e8


@dataclass(frozen=True)
class HelixState:
    k: float
    tau: float
    K: int = -1
    t: float = 0.0

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("curvature must be nonnegative")
        if self.K not in (-1, 0, 1):
            raise ValueError("K must be -1, 0 or 1")

    @property
    def u(self):
        return self.k * self.k

    @property
    def v(self):
        return self.tau * self.tau


def rhs_kt(k, tau, K):
    return k**3 - tau * tau * k + K * k, 2.0 * tau * k * k


def rhs(state):
    """(dk/dt, dtau/dt) at ``state``."""
    return rhs_kt(state.k, state.tau, state.K)


def rhs_uv(u, v, K):
    return 2.0 * u * u + 2.0 * K * u - 2.0 * u * v, 4.0 * u * v


@dataclass
class Trajectory:
    t: np.ndarray
    k: np.ndarray
    tau: np.ndarray
    K: int
    blowup: bool = False
    blowup_t: float = math.nan

    @property
    def u(self):
        return self.k**2

    @property
    def v(self):
        return self.tau**2

    def final(self):
        return HelixState(float(self.k[-1]), float(self.tau[-1]), self.K, float(self.t[-1]))


def _rk4(f, y, h):
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(state, t_end, dt=1e-3, h_min=1e-300):
    """Classical RK4 for (k, tau) from ``state`` to ``t_end``.

    A step is halved until the change in k is at most 0.01 max(k, 1); the next
    step starts from twice the accepted size (capped at ``dt``).  The run
    stops with ``blowup=True`` once k exceeds 1e8.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    K = state.K

    def f(y):
        return np.array(rhs_kt(y[0], y[1], K))

    y = np.array([state.k, state.tau], dtype=float)
    t = state.t
    ts, ks, taus = [t], [y[0]], [y[1]]
    h = dt
    blowup = False
    while t < t_end - 1e-12 * max(1.0, abs(t_end)):
        h = min(h, dt, t_end - t)
        while True:
            y_new = _rk4(f, y, h)
            if abs(y_new[0] - y[0]) <= 0.01 * max(y[0], 1.0) and np.all(np.isfinite(y_new)):
                break
            h *= 0.5
            if h < h_min:
                blowup = True
                break
        if blowup:
            break
        y, t = y_new, t + h
        ts.append(t)
        ks.append(y[0])
        taus.append(y[1])
        if y[0] > BLOWUP_K:
            blowup = True
            break
        h *= 2.0
    traj = Trajectory(np.array(ts), np.array(ks), np.array(taus), K, blowup)
    if blowup:
        traj.blowup_t = t
    return traj


def integrate_uv(u0, v0, K, t_end, dt=1e-3):
    """Fixed-step RK4 for the (u, v) form; returns (t, u, v) arrays."""

    def f(y):
        return np.array(rhs_uv(y[0], y[1], K))

    n = int(math.ceil(t_end / dt - 1e-9))
    h = t_end / n
    out = np.empty((n + 1, 2))
    out[0] = (u0, v0)
    for i in range(n):
        out[i + 1] = _rk4(f, out[i], h)
    return np.linspace(0.0, t_end, n + 1), out[:, 0], out[:, 1]


# ---------------------------------------------------------------------------
# closed forms for K = -1


def invariant_u_of_v(v, v0):
    """u on the K = -1 orbit through (u, v) = (1, v0): 1 + sqrt(v v0) - v."""
    v = np.asarray(v, dtype=float)
    if np.any(v <= 0) or v0 <= 0:
        raise DomainError("v and v0 must be positive")
    out = 1.0 + np.sqrt(v * v0) - v
    return float(out) if out.ndim == 0 else out


def tilde_tau_roots(tau0):
    """Roots (r_plus, r_minus) of 1 + tau0 x - x^2."""
    s = math.sqrt(tau0 * tau0 + 4.0)
    return 0.5 * (tau0 + s), 0.5 * (tau0 - s)


def diamond_exponents(tau0):
    """Exponents (a, b, c) of the implicit tilde-tau solution; b + c = 1."""
    s = math.sqrt(tau0 * tau0 + 4.0)
    return -1.0, 0.5 - tau0 / (2.0 * s), 0.5 + tau0 / (2.0 * s)


def _diamond_lhs(x, gap, tau0):
    a, b, c = diamond_exponents(tau0)
    rp, rm = tilde_tau_roots(tau0)
    return x**a * gap**b * (x - rm) ** c


def diamond_residual(tau, t, tau0, gap=None):
    """Left minus right side of the implicit solution

        tau^a (r+ - tau)^b (tau - r-)^c = C exp(-2t),

    with C fixed by tau(0) = tau0.  ``gap`` may supply r+ - tau directly
    when it is below the resolution of ``tau`` itself.
    """
    rp, rm = tilde_tau_roots(tau0)
    if gap is None:
        gap = rp - tau
    if not (tau > 0 and gap > 0 and tau > rm):
        raise DomainError(f"tilde tau {tau!r} outside ({max(rm, 0.0)}, {rp})")
    c0 = _diamond_lhs(tau0, rp - tau0, tau0)
    return _diamond_lhs(tau, gap, tau0) - c0 * math.exp(-2.0 * t)


def integrate_tilde_tau(tau0, t_end, dt=1e-3):
    """RK4 of dtilde_tau/dt = 2 tilde_tau (1 + tau0 tilde_tau - tilde_tau^2).

    The state is the gap w = r+ - tilde_tau, which decays exponentially and
    would be lost to cancellation if tilde_tau were integrated instead.

    Returns
    -------
    t, tilde_tau, gap : ndarray
    """
    rp, rm = tilde_tau_roots(tau0)

    def f(w):
        return -2.0 * (rp - w) * w * (rp - w - rm)

    n = int(math.ceil(t_end / dt - 1e-9))
    h = t_end / n
    w = np.empty(n + 1)
    w[0] = rp - tau0
    for i in range(n):
        w[i + 1] = _rk4(f, w[i], h)
    return np.linspace(0.0, t_end, n + 1), rp - w, w


def hyperbolic_limit_tau(tau0):
    """Limit of tilde tau as t -> infinity for K = -1, u(0) = 1."""
    return tilde_tau_roots(tau0)[0]


# ---------------------------------------------------------------------------
# K = +1


def sphere_orbit_m(v0, u0=1.0):
    """Constant m of the K = +1 orbit u = m sqrt(v) - v - 1.

    With u0 = 1 this is sqrt(v0) (2 / v0 + 1).
    """
    return (u0 + 1.0 + v0) / math.sqrt(v0)


def sphere_limit_sqrt_v(v0, u0=1.0):
    """Limit of sqrt(v) for K = +1: the root of u = m sqrt(v) - v - 1 above sqrt(v0).

    u vanishes where x^2 - m x + 1 = 0 for x = sqrt(v), so the limit is
    (m + sqrt(m^2 - 4)) / 2.
    """
    m = sphere_orbit_m(v0, u0)
    return 0.5 * (m + math.sqrt(m * m - 4.0))

