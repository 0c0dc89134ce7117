"""Discrete closed curves and their intrinsic geometry.

A :class:`DiscreteCurve` stores N chart points sampled at u_i = 2 pi i / N.
Curves may close up to a translation ``shift`` along isometric chart axes
(node N is node 0 + shift); this is how windings on a torus or helices in
R^3 / Z are represented.

Derivatives:

* d(gamma)/du is evaluated spectrally on the periodic part of the nodes, so
  speed, tangent and length are accurate to round-off on smooth curves.
* D/ds of node vector fields uses the centred stencil
  (W_{i+1} - W_{i-1}) / (2 ds_i) plus the Christoffel correction at node i,
  applied n times for D^n T / ds^n.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DegenerateCurveError, FrameUndefinedError, ResampleError

SPEED_FLOOR = 1e-10
K_FLOOR = 1e-7
TWO_PI = 2.0 * np.pi


@dataclass(frozen=True, eq=False)
class DiscreteCurve:
    nodes: np.ndarray
    shift: np.ndarray = None

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        if nodes.ndim != 2:
            raise ValueError("nodes must have shape (N, dim)")
        if len(nodes) < 16:
            raise ValueError("a discrete curve needs at least 16 nodes")
        shift = np.zeros(nodes.shape[1]) if self.shift is None else np.array(self.shift, float)
        if shift.shape != (nodes.shape[1],):
            raise ValueError("shift must have one entry per chart coordinate")
        nodes.setflags(write=False)
        shift.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "shift", shift)

    @property
    def N(self):
        return len(self.nodes)

    @property
    def dim(self):
        return self.nodes.shape[1]

    @property
    def du(self):
        return TWO_PI / self.N

    def with_nodes(self, nodes):
        return DiscreteCurve(nodes, self.shift)

    def validate(self, model):
        """Check chart domain and closure shift against ``model``."""
        if self.dim != model.dim:
            raise ValueError(f"curve has dim {self.dim}, model has dim {model.dim}")
        bad = [a for a in np.flatnonzero(self.shift) if a not in model.shift_axes]
        if bad:
            raise ValueError(f"closure shift along non-isometric axis {bad[0]}")
        model.check_domain(self.nodes)

    def periodic_part(self):
        if not self.shift.any():
            return self.nodes
        return self.nodes - _ramp(self.N) * self.shift


@lru_cache(maxsize=32)
def _ramp(n):
    r = (np.arange(n) / n)[:, None]
    r.setflags(write=False)
    return r


@lru_cache(maxsize=32)
def _wavenumbers(n):
    # i*m for the rfft modes, Nyquist mode dropped so the derivative stays real
    m = np.arange(n // 2 + 1, dtype=float)
    if n % 2 == 0:
        m[-1] = 0.0
    w = (1j * m)[:, None]
    w.setflags(write=False)
    return w


def spectral_du(curve):
    """d(gamma)/du at the nodes."""
    n = curve.N
    coef = np.fft.rfft(curve.periodic_part(), axis=0)
    d = np.fft.irfft(_wavenumbers(n) * coef, n=n, axis=0)
    return d + curve.shift / TWO_PI


def rowsum(a):
    """Sum over the last axis of an (N, d) array; faster than ``sum(axis=1)`` for small d."""
    out = a[:, 0].copy()
    for j in range(1, a.shape[1]):
        out += a[:, j]
    return out


def cdiff(W):
    """W_{i+1} - W_{i-1} on the periodic index (no closure shift)."""
    out = np.empty_like(W)
    out[1:-1] = W[2:] - W[:-2]
    out[0] = W[1] - W[-1]
    out[-1] = W[0] - W[-2]
    return out


@dataclass
class CurveGeometry:
    """Per-node geometry of a curve under one metric at one time.

    ``D[n]`` holds D^n T / ds^n, with ``D[0] = T``.  The metric is kept as its
    diagonal ``gdiag`` when the model is diagonal, otherwise as ``gfull``.
    """

    curve: DiscreteCurve
    t: float
    gdiag: np.ndarray | None
    gfull: np.ndarray | None
    gamma: np.ndarray | None
    dgamma_du: np.ndarray
    v: np.ndarray
    ds: np.ndarray
    D: list
    k: np.ndarray
    length: float
    bending: float
    frame: tuple | None = field(default=None, repr=False)

    @property
    def g(self):
        if self.gfull is None:
            d = self.gdiag.shape[1]
            self.gfull = self.gdiag[:, :, None] * np.eye(d)
        return self.gfull

    @property
    def T(self):
        return self.D[0]

    @property
    def dT(self):
        return self.D[1]

    def inner(self, X, Y):
        if self.gdiag is not None:
            return rowsum(X * self.gdiag * Y)
        return np.einsum("ia,iab,ib->i", X, self.gfull, Y)

    def norm(self, X):
        return np.sqrt(np.maximum(self.inner(X, X), 0.0))

    def integral(self, f):
        """Periodic trapezoid quadrature of a node function against ds."""
        return float((f * self.ds).sum())


def covariant_ds(geom, W):
    """D W / ds for a node vector field W (no closure shift: W is a vector field)."""
    d = cdiff(W) / (2.0 * geom.ds[:, None])
    if geom.gamma is not None:
        d = d + np.einsum("iabc,ib,ic->ia", geom.gamma, geom.T, W)
    return d


def d_ds(geom, f):
    """Centred derivative in s of a scalar node function."""
    return cdiff(f) / (2.0 * geom.ds)


def d2_ds2(geom, f):
    """Compact centred second derivative in s of a scalar node function."""
    du = geom.curve.du
    sp = 0.5 * du * (geom.v + np.roll(geom.v, -1))
    sm = 0.5 * du * (geom.v + np.roll(geom.v, 1))
    fp, fm = np.roll(f, -1), np.roll(f, 1)
    return 2.0 * ((fp - f) / sp - (f - fm) / sm) / (sp + sm)


def geometry(curve, model, t=0.0, n_max=3):
    """Speed, tangent, iterated covariant derivatives and curvature of ``curve``.

    Raises
    ------
    DegenerateCurveError
        If some node speed is below 1e-10.
    """
    if not 1 <= n_max <= 4:
        raise ValueError("n_max must be between 1 and 4")
    x = curve.nodes
    if model.diagonal:
        gdiag, gfull = model.metric_diagonal(x, t), None
    else:
        gdiag, gfull = None, model.metric(x, t)
    gamma = None if model.flat else model.christoffel(x, t)
    dg = spectral_du(curve)
    geom = CurveGeometry(curve, t, gdiag, gfull, gamma, dg, None, None, [], None, 0.0, 0.0)
    v = geom.norm(dg)
    if not v.min() > SPEED_FLOOR:  # also catches NaN
        bad = int(np.argmin(np.where(np.isfinite(v), v, -1.0)))
        raise DegenerateCurveError(f"node {bad} has speed {v[bad]:.3g}")
    T = dg / v[:, None]
    ds = v * curve.du
    geom.v, geom.ds = v, ds
    geom.D.append(T)
    d1 = covariant_ds(geom, T)
    # DT/ds is normal to T; drop the O(ds^2) tangential residue of the stencil
    d1 = d1 - geom.inner(d1, T)[:, None] * T
    geom.D.append(d1)
    for _ in range(2, n_max + 1):
        geom.D.append(covariant_ds(geom, geom.D[-1]))
    geom.k = geom.norm(d1)
    geom.length = float(ds.sum())
    geom.bending = geom.integral(geom.k**2)
    return geom


def _raise_index_cross(g, a, b):
    """Metric-oriented cross product *(a ^ b) in dimension 3."""
    cov = np.sqrt(np.linalg.det(g))[:, None] * np.cross(a, b)
    return np.linalg.solve(g, cov[..., None])[..., 0]


def frenet(geom, model=None, t=None, k_floor=K_FLOOR):
    """Frenet normal, binormal and torsion at every node (dimension 3).

    Nodes with k <= ``k_floor`` get N and B continued from the nearest node
    with a defined frame (re-orthonormalised against the local T) and
    torsion NaN.

    Returns
    -------
    N, B, tau : ndarray
    """
    if geom.curve.dim != 3:
        raise ValueError("the Frenet frame is only defined in dimension 3")
    if geom.frame is not None:
        return geom.frame
    T, d1, k = geom.T, geom.dT, geom.k
    good = k > k_floor
    if not np.any(good):
        raise FrameUndefinedError("curvature below k_floor at every node")
    n = len(k)
    N = np.zeros_like(T)
    N[good] = d1[good] / k[good, None]
    if not np.all(good):
        idx = np.flatnonzero(good)
        for i in np.flatnonzero(~good):
            dist = np.abs(idx - i)
            dist = np.minimum(dist, n - dist)
            w = N[idx[np.argmin(dist)]]
            w = w - geom.inner(w[None], T[i : i + 1])[0] * T[i]
            gi = geom.g[i]
            N[i] = w / np.sqrt(w @ gi @ w)
    B = _raise_index_cross(geom.g, T, N)
    dN = covariant_ds(geom, N)
    tau = geom.inner(dN + k[:, None] * T, B)
    tau = np.where(good, tau, np.nan)
    geom.frame = (N, B, tau)
    return geom.frame


def signed_curvature(geom):
    """Curvature signed against the counter-clockwise unit normal (dimension 2).

    DT/ds is normal to T, so its sign is the orientation of the pair (T, DT/ds).
    """
    if geom.curve.dim != 2:
        raise ValueError("signed curvature needs a 2-dimensional model")
    T, d1 = geom.T, geom.dT
    return np.copysign(geom.k, T[:, 0] * d1[:, 1] - T[:, 1] * d1[:, 0])


def resample_arclength(curve, model, t=0.0, oversample=16):
    """Redistribute the nodes uniformly in arclength.

    The periodic part of the chart coordinates is interpolated by a periodic
    cubic spline; arclength along the spline is integrated on a grid
    ``oversample`` times finer than the curve, inverted, and the spline is
    evaluated at the new parameter values.  Node 0 stays fixed.
    """
    n = curve.N
    u = np.arange(n + 1) * curve.du
    per = curve.periodic_part()
    try:
        spline = CubicSpline(u, np.vstack([per, per[:1]]), bc_type="periodic", axis=0)
        m = oversample * n
        uf = np.arange(m + 1) * (TWO_PI / m)
        xf = spline(uf) + uf[:, None] / TWO_PI * curve.shift
        dxf = spline(uf, 1) + curve.shift / TWO_PI
        gf = model.metric(xf, t)
        speed = np.sqrt(np.einsum("ia,iab,ib->i", dxf, gf, dxf))
        # cumulative trapezoid, rescaled so the total matches Simpson's rule
        h = TWO_PI / m
        seg = 0.5 * h * (speed[1:] + speed[:-1])
        s = np.concatenate([[0.0], np.cumsum(seg)])
        s *= _simpson(speed, h) / s[-1]
        target = np.arange(n) * (s[-1] / n)
        unew = np.interp(target, s, uf)
        # Newton corrections per node against the spline speed
        for _ in range(2):
            snew = np.interp(unew, uf, s)
            xs = spline(unew, 1) + curve.shift / TWO_PI
            xn = spline(unew) + unew[:, None] / TWO_PI * curve.shift
            sp = np.sqrt(np.einsum("ia,iab,ib->i", xs, model.metric(xn, t), xs))
            unew = unew - (snew - target) / sp
            unew[0] = 0.0
        nodes = spline(unew) + unew[:, None] / TWO_PI * curve.shift
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise ResampleError(f"resampling failed: {exc}") from exc
    if not np.all(np.isfinite(nodes)) or np.any(np.diff(unew) <= 0):
        raise ResampleError("resampling produced a non-monotone or non-finite parameterisation")
    if not np.all(model.in_domain(nodes)):
        raise ResampleError("resampled nodes left the chart domain")
    return curve.with_nodes(nodes)


def _simpson(f, h):
    # periodic closed grid with an even number of intervals
    return h / 3.0 * (f[0] + f[-1] + 4.0 * f[1:-1:2].sum() + 2.0 * f[2:-1:2].sum())


@dataclass
class RampContext:
    h: np.ndarray
    mu: float
    orientation: float

    @property
    def is_ramp(self):
        return self.mu > 0.0


def fiber_component(geom, model, X):
    """Signed length of the circle-factor projection of X (last chart axis)."""
    g_ff = geom.gdiag[:, -1] if geom.gdiag is not None else geom.g[:, -1, -1]
    return X[:, -1] * np.sqrt(g_ff)


def ramp_height(geom, model, orientation=None):
    """Ramp height h_i = <pi_* T, U> for the unit fiber field U.

    The orientation of U is taken from the sign of the mean fiber component
    unless given explicitly (+1 or -1).
    """
    if not hasattr(model, "rho"):
        raise ValueError("ramp height needs a model with a circle factor")
    h = fiber_component(geom, model, geom.T)
    if orientation is None:
        orientation = 1.0 if np.mean(h) >= 0 else -1.0
    h = orientation * h
    return RampContext(h, float(h.min()), orientation)


def winding_number(curve, axis=-1, period=TWO_PI, tol=1e-6):
    """Degree of the curve around a periodic chart axis from wrapped node angles."""
    ang = np.mod(curve.nodes[:, axis], period)
    closed = np.append(ang, ang[0])
    steps = np.diff(closed)
    steps = (steps + period / 2) % period - period / 2
    total = steps.sum() / period
    w = round(total)
    if abs(total - w) > tol:
        raise ValueError(f"fiber angle total variation {total} is not an integer")
    return int(w)


def write_snapshot(path, geom, model=None, tau=None, h=None):
    """Write one curve snapshot as CSV: chart coordinates, v, k, tau, h."""
    d = geom.curve.dim
    header = [f"x{a}" for a in range(d)] + ["v", "k", "tau", "h"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(geom.curve.N):
            row = [_fmt(c) for c in geom.curve.nodes[i]]
            row += [_fmt(geom.v[i]), _fmt(geom.k[i])]
            row.append("" if tau is None or not np.isfinite(tau[i]) else _fmt(tau[i]))
            row.append("" if h is None else _fmt(h[i]))
            w.writerow(row)


def _fmt(x):
    return "%.17g" % x


def read_points(path):
    """Chart coordinates from a CSV of points, one node per row (header optional)."""
    rows = []
    with open(path) as fh:
        for rec in csv.reader(fh):
            if not rec:
                continue
            try:
                rows.append([float(c) for c in rec])
            except ValueError:
                if rows:
                    raise
    return np.array(rows)
