"""Initial curves by name.

Every generator returns a :class:`DiscreteCurve` with N nodes at
u_i = 2 pi i / N.  Windings on a torus and helices in R^3 close up to a
translation along periodic or isometric axes (the curve's ``shift``).
"""

from __future__ import annotations

import numpy as np

from .curve import DiscreteCurve, read_points
from .manifold import SpaceForm

TWO_PI = 2.0 * np.pi


def _u(N):
    return np.arange(N) * (TWO_PI / N)


def _pad(xy, dim):
    if dim < xy.shape[1]:
        raise ValueError(f"dim must be at least {xy.shape[1]}")
    return np.column_stack([xy, np.zeros((len(xy), dim - xy.shape[1]))])


def circle(N, radius=1.0, dim=2):
    """Round circle of chart radius ``radius`` in the first coordinate plane."""
    u = _u(N)
    return DiscreteCurve(_pad(radius * np.column_stack([np.cos(u), np.sin(u)]), dim))


def ellipse(N, a=2.0, b=1.0, dim=2):
    u = _u(N)
    return DiscreteCurve(_pad(np.column_stack([a * np.cos(u), b * np.sin(u)]), dim))


def perturbed_circle(N, amp=0.1, mode=3, radius=1.0, dim=2):
    """Circle with radius ``radius (1 + amp sin(mode u))``."""
    u = _u(N)
    r = radius * (1.0 + amp * np.sin(mode * u))
    return DiscreteCurve(_pad(np.column_stack([r * np.cos(u), r * np.sin(u)]), dim))


def random_circle(N, amp=0.05, modes=4, radius=1.0, dim=2, seed=0):
    """Circle whose radius carries a random low-mode Fourier perturbation.

    The radius is ``radius (1 + amp w(u))`` with
    ``w = sum_m (a_m cos mu + b_m sin mu) / m`` over ``m = 2..modes + 1``,
    coefficients standard normal from ``numpy.random.default_rng(seed)``,
    rescaled so that max |w| = 1.  The same seed gives the same curve.
    """
    rng = np.random.default_rng(seed)
    u = _u(N)
    m = np.arange(2, modes + 2)
    a, b = rng.standard_normal((2, modes))
    w = (a / m) @ np.cos(np.outer(m, u)) + (b / m) @ np.sin(np.outer(m, u))
    w /= np.abs(w).max()
    r = radius * (1.0 + amp * w)
    return DiscreteCurve(_pad(np.column_stack([r * np.cos(u), r * np.sin(u)]), dim))


def torus_winding(N, p=1, q=2, amp=0.0, mode=1, along="base", base_radius=1.0, rho=1.0):
    """(p, q) winding (p u, q u) on S^1 x S^1, optionally perturbed.

    With ``along="base"`` the first angle gets ``amp sin(mode u)`` added;
    with ``along="normal"`` the nodes move by ``amp sin(mode u)`` along the
    unit normal of the straight winding in the metric
    diag(base_radius^2, rho^2).
    """
    u = _u(N)
    nodes = np.column_stack([p * u, q * u]).astype(float)
    wave = amp * np.sin(mode * u)
    if along == "base":
        nodes[:, 0] += wave
    elif along == "normal":
        a, b = base_radius**2, rho**2
        n = np.array([-b * q, a * p], dtype=float)
        n /= np.sqrt(a * n[0] ** 2 + b * n[1] ** 2)
        nodes += wave[:, None] * n
    else:
        raise ValueError("along must be 'base' or 'normal'")
    return DiscreteCurve(nodes, [TWO_PI * p, TWO_PI * q])


def sphere_lift(N, q=1, amp=0.0, mode=2):
    """Equator of the stereographic S^2 chart lifted to S^2 x S^1 with fiber winding q.

    The chart radius is ``1 + amp sin(mode u)``, so ``amp = 0`` gives a closed
    geodesic (great circle times a uniform fiber rotation).
    """
    u = _u(N)
    r = 1.0 + amp * np.sin(mode * u)
    nodes = np.column_stack([r * np.cos(u), r * np.sin(u), q * u])
    return DiscreteCurve(nodes, [0.0, 0.0, TWO_PI * q])


def clifford_helix(N, p=1, q=2, sin_a=0.5):
    """Curve (cos a e^{i p u}, sin a e^{i q u}) on a Clifford torus of S^3, in the chart.

    It is an orbit of a one-parameter group of isometries, so its curvature
    and torsion are constant along it.
    """
    u = _u(N)
    cos_a = np.sqrt(1.0 - sin_a**2)
    y = np.column_stack(
        [cos_a * np.cos(p * u), cos_a * np.sin(p * u), sin_a * np.cos(q * u), sin_a * np.sin(q * u)]
    )
    return DiscreteCurve(SpaceForm(3, 1).from_ambient(y))


def helix(N, a=1.0, b=1.0, turns=1):
    """Round helix (a cos u, a sin u, b u) in R^3, closed up to a shift along the axis."""
    u = _u(N) * turns
    nodes = np.column_stack([a * np.cos(u), a * np.sin(u), b * u])
    return DiscreteCurve(nodes, [0.0, 0.0, TWO_PI * b * turns])


def points_file(path, N=None):
    """Closed curve through the points of a CSV file (one node per row)."""
    pts = read_points(path)
    if N is not None and len(pts) != N:
        raise ValueError(f"{path}: expected {N} points, found {len(pts)}")
    return DiscreteCurve(pts)


GENERATORS = {
    "circle": circle,
    "ellipse": ellipse,
    "perturbed-circle": perturbed_circle,
    "random-circle": random_circle,
    "torus-winding": torus_winding,
    "sphere-lift": sphere_lift,
    "clifford-helix": clifford_helix,
    "helix": helix,
    "points-file": points_file,
}


def make_curve(init, N, **params):
    """Curve from a generator name and its parameters."""
    try:
        gen = GENERATORS[init]
    except KeyError:
        raise ValueError(f"unknown curve generator {init!r}; expected one of {sorted(GENERATORS)}") from None
    if init == "points-file":
        return gen(params.pop("path"), N=N, **params)
    return gen(N, **params)
