"""Manifold models: charts, metric tensors, Christoffel symbols and curvature.

Every model works in a single chart and evaluates its tensors on batches of
points with shape ``(N, dim)``.  Index conventions:

``metric(x)[i, a, b]``
    g_ab at point i.
``christoffel(x)[i, a, b, c]``
    Gamma^a_bc, symmetric in (b, c).
``riemann(x)[i, a, b, c, d]``
    components of the curvature operator, ``(R(e_c, e_d) e_b)^a``.

The curvature operator uses the sign convention

    R(X, Y)Z = nabla_Y nabla_X Z - nabla_X nabla_Y Z + nabla_[X,Y] Z,

so that on a space of constant curvature K

    R(X1, X2)X3 = K (<X1, X3> X2 - <X2, X3> X1),

R(T, N)T = K N for orthonormal T, N, and the sectional curvature of the plane
spanned by X, Y is <R(X, Y)X, Y> / (|X|^2 |Y|^2 - <X, Y>^2).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DegeneratePlaneError, DomainError

FD_STEP = 1e-5
XI_FLOOR = 1e-9


def _zero(t):
    return 0.0


@dataclass(frozen=True)
class ConstantRate:
    """f(t) = rate * t."""

    rate: float = 0.0

    def __call__(self, t):
        return self.rate * t


@dataclass(frozen=True)
class Held:
    """f(t) = value for every t (the current value of a stepped f)."""

    value: float = 0.0

    def __call__(self, t):
        return self.value


@dataclass(frozen=True)
class PiecewiseLinear:
    """Continuous piecewise-linear time function through ``(times, values)``.

    Beyond the last knot the function is held constant.  Instances are
    immutable; :meth:`extend` returns a new function with one more knot.
    """

    times: tuple = (0.0,)
    values: tuple = (0.0,)

    def __call__(self, t):
        if t >= self.times[-1]:
            return self.values[-1]
        return float(np.interp(t, self.times, self.values))

    def extend(self, t, value):
        return PiecewiseLinear(self.times + (float(t),), self.values + (float(value),))

    @property
    def last(self):
        return self.values[-1]


class MetricModel:
    """Base class.  Subclasses override the analytic pieces they know.

    The default ``christoffel`` and ``riemann`` fall back to centred finite
    differences of ``metric`` and ``christoffel`` respectively.
    """

    family: str = "generic"
    dim: int
    flat: bool = False
    diagonal: bool = False

    # -- domain ---------------------------------------------------------
    def in_domain(self, x):
        x = np.atleast_2d(x)
        return np.all(np.isfinite(x), axis=-1)

    def check_domain(self, x):
        ok = self.in_domain(x)
        if not np.all(ok):
            bad = int(np.flatnonzero(~np.atleast_1d(ok))[0])
            raise DomainError(f"{self.family}: point {bad} outside chart domain")

    @property
    def shift_axes(self):
        """Chart axes along which translation is an isometry (curve closure shifts)."""
        return ()

    # -- tensors --------------------------------------------------------
    def metric(self, x, t=0.0):
        raise NotImplementedError

    def metric_diagonal(self, x, t=0.0):
        """Diagonal of the metric, for models with ``diagonal = True``."""
        return np.einsum("iaa->ia", self.metric(x, t))

    def christoffel(self, x, t=0.0):
        return christoffel_fd(self, x, t)

    def riemann(self, x, t=0.0):
        return riemann_fd(self, x, t)

    # -- curvature bounds -------------------------------------------------
    @property
    def lambda_bound(self):
        return estimate_lambda(self)

    @property
    def xi_bound(self):
        return XI_FLOOR

    def sample_points(self, n, rng):
        """Random chart points well inside the domain (used by estimators and tests)."""
        return rng.uniform(-1.0, 1.0, size=(n, self.dim))


@dataclass(frozen=True, eq=False)
class Euclidean(MetricModel):
    dim: int = 2
    family = "euclidean"
    flat = True
    diagonal = True

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be positive")

    @property
    def shift_axes(self):
        return tuple(range(self.dim))

    def metric(self, x, t=0.0):
        x = np.atleast_2d(x)
        return np.broadcast_to(np.eye(self.dim), (len(x), self.dim, self.dim)).copy()

    def metric_diagonal(self, x, t=0.0):
        return np.ones(np.atleast_2d(x).shape)

    def christoffel(self, x, t=0.0):
        x = np.atleast_2d(x)
        return np.zeros((len(x),) + (self.dim,) * 3)

    def riemann(self, x, t=0.0):
        x = np.atleast_2d(x)
        return np.zeros((len(x),) + (self.dim,) * 4)

    @property
    def lambda_bound(self):
        return 0.0


@dataclass(frozen=True, eq=False)
class Circle(MetricModel):
    """Flat circle of radius ``radius`` in its angle coordinate."""

    radius: float = 1.0
    dim: int = 1
    family = "circle"
    flat = True
    diagonal = True

    @property
    def shift_axes(self):
        return (0,)

    def metric(self, x, t=0.0):
        x = np.atleast_2d(x)
        return np.full((len(x), 1, 1), self.radius**2)

    def metric_diagonal(self, x, t=0.0):
        return np.full(np.atleast_2d(x).shape, self.radius**2)

    def christoffel(self, x, t=0.0):
        x = np.atleast_2d(x)
        return np.zeros((len(x), 1, 1, 1))

    def riemann(self, x, t=0.0):
        x = np.atleast_2d(x)
        return np.zeros((len(x), 1, 1, 1, 1))

    @property
    def lambda_bound(self):
        return 0.0


@dataclass(frozen=True, eq=False)
class SpaceForm(MetricModel):
    """Constant curvature K = +1 (stereographic chart) or K = -1 (Poincare ball).

    Both charts are conformally flat, g = (2 / (1 + K|x|^2))^2 delta.  The
    stereographic chart projects from the south pole, so the pole itself is
    at infinity and the equator maps to the unit sphere.
    """

    dim: int = 3
    K: int = 1
    diagonal = True

    def __post_init__(self):
        if self.K not in (-1, 1):
            raise ValueError("K must be -1 or +1")
        if self.dim not in (2, 3):
            raise ValueError("space forms are supported in dimension 2 and 3")

    @property
    def family(self):
        if self.K > 0:
            return "sphere%d" % self.dim
        return "hyperbolic%d" % self.dim

    def in_domain(self, x):
        x = np.atleast_2d(x)
        ok = np.all(np.isfinite(x), axis=-1)
        if self.K < 0:
            ok &= np.einsum("ia,ia->i", x, x) < 1.0
        return ok

    def conformal_factor(self, x):
        x = np.atleast_2d(x)
        r2 = np.einsum("ia,ia->i", x, x)
        return (2.0 / (1.0 + self.K * r2)) ** 2

    def metric(self, x, t=0.0):
        x = np.atleast_2d(x)
        lam = self.conformal_factor(x)
        return lam[:, None, None] * np.eye(self.dim)

    def metric_diagonal(self, x, t=0.0):
        x = np.atleast_2d(x)
        return np.repeat(self.conformal_factor(x)[:, None], self.dim, axis=1)

    def christoffel(self, x, t=0.0):
        x = np.atleast_2d(x)
        r2 = np.einsum("ia,ia->i", x, x)
        dphi = (-2.0 * self.K / (1.0 + self.K * r2))[:, None] * x
        eye = np.eye(self.dim)
        gam = (
            np.einsum("ab,ic->iabc", eye, dphi)
            + np.einsum("ac,ib->iabc", eye, dphi)
            - np.einsum("bc,ia->iabc", eye, dphi)
        )
        return gam

    def riemann(self, x, t=0.0):
        g = self.metric(x, t)
        eye = np.eye(self.dim)
        # (R(e_c, e_d) e_b)^a = K (g_cb delta^a_d - g_db delta^a_c)
        return self.K * (
            np.einsum("icb,ad->iabcd", g, eye) - np.einsum("idb,ac->iabcd", g, eye)
        )

    @property
    def lambda_bound(self):
        return float(abs(self.K))

    @property
    def xi_bound(self):
        return max(float(self.K), XI_FLOOR)

    def sample_points(self, n, rng):
        if self.K < 0:
            d = rng.normal(size=(n, self.dim))
            d /= np.linalg.norm(d, axis=1, keepdims=True)
            return d * rng.uniform(0.0, 0.9, size=(n, 1)) ** (1.0 / self.dim)
        return rng.uniform(-2.0, 2.0, size=(n, self.dim))

    # ambient embedding, sphere only
    def to_ambient(self, x):
        """Inverse stereographic projection into the unit sphere of R^(dim+1)."""
        x = np.atleast_2d(x)
        r2 = np.einsum("ia,ia->i", x, x)
        if self.K > 0:
            return np.column_stack([2 * x, 1.0 - r2]) / (1.0 + r2)[:, None]
        return np.column_stack([2 * x, 1.0 + r2]) / (1.0 - r2)[:, None]

    def from_ambient(self, y):
        y = np.atleast_2d(y)
        return y[:, :-1] / (1.0 + y[:, -1])[:, None]


@dataclass(frozen=True, eq=False)
class Product(MetricModel):
    """Riemannian product base x S^1 with fiber circle of radius ``rho``.

    The fiber angle is the last chart coordinate.
    """

    base: MetricModel = field(default_factory=lambda: Circle(1.0))
    rho: float = 1.0
    family = "product"

    @property
    def dim(self):
        return self.base.dim + 1

    @property
    def flat(self):
        return self.base.flat

    @property
    def diagonal(self):
        return self.base.diagonal

    @property
    def shift_axes(self):
        return tuple(self.base.shift_axes) + (self.base.dim,)

    def in_domain(self, x):
        x = np.atleast_2d(x)
        return self.base.in_domain(x[:, :-1]) & np.isfinite(x[:, -1])

    def fiber_scale2(self, t=0.0):
        return self.rho**2

    def metric(self, x, t=0.0):
        x = np.atleast_2d(x)
        n, d = len(x), self.dim
        g = np.zeros((n, d, d))
        g[:, :-1, :-1] = self.base.metric(x[:, :-1], t)
        g[:, -1, -1] = self.fiber_scale2(t)
        return g

    def metric_diagonal(self, x, t=0.0):
        x = np.atleast_2d(x)
        out = np.empty(x.shape)
        out[:, :-1] = self.base.metric_diagonal(x[:, :-1], t)
        out[:, -1] = self.fiber_scale2(t)
        return out

    def christoffel(self, x, t=0.0):
        x = np.atleast_2d(x)
        n, d = len(x), self.dim
        gam = np.zeros((n, d, d, d))
        gam[:, :-1, :-1, :-1] = self.base.christoffel(x[:, :-1], t)
        return gam

    def riemann(self, x, t=0.0):
        x = np.atleast_2d(x)
        n, d = len(x), self.dim
        r = np.zeros((n,) + (d,) * 4)
        r[:, :-1, :-1, :-1, :-1] = self.base.riemann(x[:, :-1], t)
        return r

    @property
    def lambda_bound(self):
        return self.base.lambda_bound

    @property
    def xi_bound(self):
        return self.base.xi_bound

    def sample_points(self, n, rng):
        return np.column_stack(
            [self.base.sample_points(n, rng), rng.uniform(0, 2 * np.pi, size=n)]
        )


@dataclass(frozen=True, eq=False)
class WarpedCircle(Product):
    """Warped product g_base + exp(f(t)) rho^2 dsigma^2 with f spatially constant."""

    f: Callable = _zero
    family = "warped-circle"

    def fiber_scale2(self, t=0.0):
        return float(np.exp(self.f(t))) * self.rho**2


@dataclass(frozen=True, eq=False)
class ConformalEvolving(MetricModel):
    """Conformal evolution g_t = exp(f(t)) g_base with f spatially constant.

    A spatially constant factor leaves the Levi-Civita connection and the
    curvature operator unchanged, so both are taken from the base model.
    """

    base: MetricModel = field(default_factory=lambda: Euclidean(2))
    f: Callable = _zero
    family = "conformal"

    @property
    def dim(self):
        return self.base.dim

    @property
    def flat(self):
        return self.base.flat

    @property
    def diagonal(self):
        return self.base.diagonal

    @property
    def shift_axes(self):
        return self.base.shift_axes

    def in_domain(self, x):
        return self.base.in_domain(x)

    def metric(self, x, t=0.0):
        return float(np.exp(self.f(t))) * self.base.metric(x, t)

    def metric_diagonal(self, x, t=0.0):
        return float(np.exp(self.f(t))) * self.base.metric_diagonal(x, t)

    def christoffel(self, x, t=0.0):
        return self.base.christoffel(x, t)

    def riemann(self, x, t=0.0):
        return self.base.riemann(x, t)

    @property
    def lambda_bound(self):
        return self.base.lambda_bound

    @property
    def xi_bound(self):
        return self.base.xi_bound

    def sample_points(self, n, rng):
        return self.base.sample_points(n, rng)


# ---------------------------------------------------------------------------
# finite-difference fallbacks


def metric_derivative_fd(model, x, t=0.0, h=FD_STEP):
    """dg[i, c, a, b] = partial_c g_ab by central differences."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n, d = x.shape
    dg = np.empty((n, d, d, d))
    for c in range(d):
        e = np.zeros(d)
        e[c] = h
        dg[:, c] = (model.metric(x + e, t) - model.metric(x - e, t)) / (2 * h)
    return dg


def christoffel_fd(model, x, t=0.0, h=FD_STEP):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    g = model.metric(x, t)
    ginv = np.linalg.inv(g)
    dg = metric_derivative_fd(model, x, t, h)
    # Gamma^a_bc = 1/2 g^ad (d_b g_dc + d_c g_db - d_d g_bc)
    low = dg.transpose(0, 2, 1, 3) + dg.transpose(0, 2, 3, 1) - dg
    # low[i, d, b, c] = d_b g_dc + d_c g_db - d_d g_bc
    gam = 0.5 * np.einsum("iad,idbc->iabc", ginv, low)
    return 0.5 * (gam + gam.transpose(0, 1, 3, 2))


def riemann_fd(model, x, t=0.0, h=FD_STEP):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n, d = x.shape
    gam = model.christoffel(x, t)
    dgam = np.empty((n, d, d, d, d))  # dgam[i, e, a, b, c] = d_e Gamma^a_bc
    for e_ in range(d):
        e = np.zeros(d)
        e[e_] = h
        dgam[:, e_] = (model.christoffel(x + e, t) - model.christoffel(x - e, t)) / (2 * h)
    # (R(e_c, e_d) e_b)^a = d_d G^a_cb - d_c G^a_db + G^a_de G^e_cb - G^a_ce G^e_db
    r = (
        np.einsum("idacb->iabcd", dgam)
        - np.einsum("icadb->iabcd", dgam)
        + np.einsum("iade,iecb->iabcd", gam, gam)
        - np.einsum("iace,iedb->iabcd", gam, gam)
    )
    return r


def covariant_riemann_fd(model, x, t=0.0, h=1e-4):
    """(nabla_e R)^a_bcd at each point, by central differences of ``riemann``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n, d = x.shape
    r = model.riemann(x, t)
    gam = model.christoffel(x, t)
    out = np.empty((n, d) + (d,) * 4)
    for e_ in range(d):
        e = np.zeros(d)
        e[e_] = h
        out[:, e_] = (model.riemann(x + e, t) - model.riemann(x - e, t)) / (2 * h)
    g = gam  # g[i, a, e, f] = Gamma^a_ef
    out += np.einsum("iaef,ifbcd->ieabcd", g, r)
    out -= np.einsum("ifeb,iafcd->ieabcd", g, r)
    out -= np.einsum("ifec,iabfd->ieabcd", g, r)
    out -= np.einsum("ifed,iabcf->ieabcd", g, r)
    return out


def estimate_lambda(model, n_frames=1000, safety=1.5, seed=0):
    """Sampled bound on |R(X, Y, Z, W)| over unit vectors, times a safety factor."""
    rng = np.random.default_rng(seed)
    x = model.sample_points(n_frames, rng)
    vecs = [_random_unit(model, x, rng) for _ in range(4)]
    vals = curvature_form(model, x, *vecs)
    return safety * float(np.max(np.abs(vals)))


def _random_unit(model, x, rng, t=0.0):
    v = rng.normal(size=x.shape)
    return v / np.sqrt(np.einsum("ia,iab,ib->i", v, model.metric(x, t), v))[:, None]


# ---------------------------------------------------------------------------
# point-wise operations


def _pt(p):
    p = np.asarray(p, dtype=float)
    return p[None, :] if p.ndim == 1 else p


def _out(res, p):
    return res[0] if np.asarray(p).ndim == 1 else res


def metric_at(model, p, t=0.0):
    """Metric matrix g_ij(p, t); raises :class:`DomainError` outside the chart."""
    x = _pt(p)
    model.check_domain(x)
    return _out(model.metric(x, t), p)


def christoffel(model, p, t=0.0):
    x = _pt(p)
    model.check_domain(x)
    return _out(model.christoffel(x, t), p)


def inner(model, p, X, Y, t=0.0):
    x = _pt(p)
    g = model.metric(x, t)
    res = np.einsum("ia,iab,ib->i", _pt(X), g, _pt(Y))
    return _out(res, p)


def norm(model, p, X, t=0.0):
    return np.sqrt(np.maximum(inner(model, p, X, X, t), 0.0))


def riemann_apply(model, p, X, Y, Z, t=0.0):
    """Tangent vector R(X, Y)Z at p."""
    x = _pt(p)
    model.check_domain(x)
    r = model.riemann(x, t)
    res = np.einsum("iabcd,ib,ic,id->ia", r, _pt(Z), _pt(X), _pt(Y))
    return _out(res, p)


def curvature_form(model, p, X, Y, Z, W, t=0.0):
    """R(X, Y, Z, W) = <R(X, Y)Z, W>."""
    x = _pt(p)
    rz = riemann_apply(model, x, _pt(X), _pt(Y), _pt(Z), t)
    return _out(np.einsum("ia,iab,ib->i", rz, model.metric(x, t), _pt(W)), p)


def sectional(model, p, X, Y, t=0.0):
    """Sectional curvature of the plane spanned by X and Y."""
    x = _pt(p)
    Xp, Yp = _pt(X), _pt(Y)
    g = model.metric(x, t)
    xx = np.einsum("ia,iab,ib->i", Xp, g, Xp)
    yy = np.einsum("ia,iab,ib->i", Yp, g, Yp)
    xy = np.einsum("ia,iab,ib->i", Xp, g, Yp)
    den = xx * yy - xy**2
    if np.any(den < 1e-12):
        raise DegeneratePlaneError("vectors span a degenerate plane")
    num = curvature_form(model, x, Xp, Yp, Xp, Yp, t)
    return _out(num / den, p)


# ---------------------------------------------------------------------------
# construction from config names

FAMILIES = ("euclidean", "sphere3", "hyperbolic3", "product", "conformal", "warped-circle")


def make_base(name, dim=2, radius=1.0):
    if name == "circle":
        return Circle(radius)
    if name == "sphere2":
        return SpaceForm(2, 1)
    if name == "euclidean":
        return Euclidean(dim)
    if name == "sphere3":
        return SpaceForm(3, 1)
    if name == "hyperbolic3":
        return SpaceForm(3, -1)
    raise ValueError(f"unknown base manifold {name!r}")


def make_model(family, dim=2, base="circle", base_dim=2, base_radius=1.0, rho=1.0, f=None):
    """Build a model from its config name and numeric parameters."""
    f = f if f is not None else _zero
    if family == "euclidean":
        return Euclidean(dim)
    if family == "sphere3":
        return SpaceForm(3, 1)
    if family == "hyperbolic3":
        return SpaceForm(3, -1)
    if family == "product":
        return Product(make_base(base, base_dim, base_radius), rho)
    if family == "warped-circle":
        return WarpedCircle(make_base(base, base_dim, base_radius), rho, f)
    if family == "conformal":
        return ConformalEvolving(make_base(base, base_dim, base_radius), f)
    raise ValueError(f"unknown manifold family {family!r}")
