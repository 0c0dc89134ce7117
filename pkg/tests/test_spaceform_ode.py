import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geoflow.errors import DomainError
from geoflow.spaceform_ode import (
    HelixState,
    diamond_exponents,
    diamond_residual,
    hyperbolic_limit_tau,
    integrate,
    integrate_tilde_tau,
    integrate_uv,
    invariant_u_of_v,
    rhs,
    sphere_limit_sqrt_v,
    sphere_orbit_m,
    tilde_tau_roots,
)

GOLDEN = (1 + math.sqrt(5)) / 2


# -- right-hand side ----------------------------------------------------------------


@pytest.mark.parametrize("K", [-1, 0, 1])
def test_zero_curvature_is_equilibrium(K):
    assert rhs(HelixState(0.0, 2.5, K)) == (0.0, 0.0)


def test_rhs_values():
    assert rhs(HelixState(1.0, 0.0, -1)) == (0.0, 0.0)
    assert rhs(HelixState(1.0, 1.0, -1)) == (-1.0, 2.0)
    assert rhs(HelixState(2.0, 1.0, 1)) == (8.0 - 2.0 + 2.0, 8.0)


def test_state_validation():
    with pytest.raises(ValueError):
        HelixState(-1.0, 0.0)
    with pytest.raises(ValueError):
        HelixState(1.0, 0.0, K=2)
    s = HelixState(2.0, -3.0)
    assert (s.u, s.v) == (4.0, 9.0)


# -- trajectories ---------------------------------------------------------------------


@pytest.fixture(scope="module")
def hyperbolic():
    return integrate(HelixState(1.0, 1.0, -1), 10.0, dt=1e-3)


def test_hyperbolic_limit(hyperbolic):
    end = hyperbolic.final()
    assert abs(end.tau - GOLDEN) < 1e-4
    assert end.u < 1e-6
    assert hyperbolic_limit_tau(1.0) == pytest.approx(GOLDEN, rel=1e-15)
    assert not hyperbolic.blowup


def test_hyperbolic_orbit_invariant(hyperbolic):
    u_closed = invariant_u_of_v(hyperbolic.v, 1.0)
    assert np.abs(hyperbolic.u - u_closed).max() < 1e-8


def test_v_never_decreases(hyperbolic):
    assert np.all(np.diff(hyperbolic.v) >= 0)


def test_sphere_limit():
    # orbit u = m sqrt(v) - v - 1 with m = 3: u reaches 0 where sqrt(v) = (3 + sqrt 5) / 2
    traj = integrate(HelixState(1.0, 1.0, 1), 10.0)
    assert sphere_orbit_m(1.0) == 3.0
    expected = sphere_limit_sqrt_v(1.0)
    assert expected == pytest.approx((3 + math.sqrt(5)) / 2)
    assert abs(math.sqrt(traj.v[-1]) - expected) < 1e-4
    assert traj.u[-1] < 1e-6
    m = sphere_orbit_m(1.0)
    assert np.abs(traj.u - (m * np.sqrt(traj.v) - traj.v - 1)).max() < 1e-8


def test_flat_blowup_time():
    # dk/dt = k^3 from k = 1: k = (1 - 2t)^(-1/2)
    traj = integrate(HelixState(1.0, 0.0, 0), 1.0)
    assert traj.blowup
    assert traj.blowup_t == pytest.approx(0.5, abs=1e-3)
    mid = np.searchsorted(traj.t, 0.25)
    assert traj.k[mid] == pytest.approx((1 - 2 * traj.t[mid]) ** -0.5, rel=1e-8)


def test_sphere_without_torsion_blows_up():
    assert integrate(HelixState(1.0, 0.0, 1), 2.0).blowup


def test_torsion_sign_preserved():
    traj = integrate(HelixState(1.0, -1.0, -1), 5.0)
    assert np.all(traj.tau < 0)
    assert traj.tau[-1] == pytest.approx(-GOLDEN, abs=1e-4)


def test_kt_and_uv_forms_agree():
    t, u, v = integrate_uv(1.0, 1.0, -1, 5.0, dt=1e-3)
    traj = integrate(HelixState(1.0, 1.0, -1), 5.0, dt=1e-3)
    assert np.allclose(traj.t, t, atol=1e-12, rtol=0)
    assert np.abs(traj.u - u).max() < 1e-9
    assert np.abs(traj.v - v).max() < 1e-9


@settings(max_examples=10)
@given(st.floats(0.01, 5.0))
def test_limit_attraction(tau0):
    traj = integrate(HelixState(1.0, tau0, -1), 20.0, dt=1e-3)
    assert abs(traj.tau[-1] - (tau0 + math.sqrt(tau0**2 + 4)) / 2) < 1e-6
    assert traj.u[-1] < 1e-6


def test_invalid_step():
    with pytest.raises(ValueError):
        integrate(HelixState(1.0, 1.0), 1.0, dt=0.0)


# -- closed forms -----------------------------------------------------------------------


def test_invariant_values():
    assert invariant_u_of_v(2.0, 2.0) == pytest.approx(1.0)
    assert invariant_u_of_v(4.0, 1.0) == pytest.approx(-1.0)
    with pytest.raises(DomainError):
        invariant_u_of_v(0.0, 1.0)
    with pytest.raises(DomainError):
        invariant_u_of_v(1.0, -1.0)


def test_diamond_at_initial_time():
    assert diamond_residual(1.0, 0.0, 1.0) == 0.0
    assert diamond_residual(0.3, 0.0, 0.3) == 0.0


def test_diamond_along_solution():
    t, tt, gap = integrate_tilde_tau(1.0, 5.0, dt=1e-5)
    for ts in (0.1, 1.0, 5.0):
        i = int(round(ts / 1e-5))
        assert abs(diamond_residual(tt[i], t[i], 1.0, gap=gap[i])) < 1e-7


def test_diamond_outside_bracket():
    rp, rm = tilde_tau_roots(1.0)
    with pytest.raises(DomainError):
        diamond_residual(rp + 0.1, 1.0, 1.0)
    with pytest.raises(DomainError):
        diamond_residual(-0.1, 1.0, 1.0)


@given(st.floats(0.0, 100.0, allow_subnormal=False))
def test_diamond_exponents(tau0):
    a, b, c = diamond_exponents(tau0)
    assert a == -1.0
    assert b + c == pytest.approx(1.0, abs=1e-15)
    assert b > 0 and c > 0


def test_tilde_tau_agrees_with_kt_integration(hyperbolic):
    t, tt, _ = integrate_tilde_tau(1.0, 10.0, dt=1e-3)
    assert np.abs(tt - hyperbolic.tau).max() < 1e-9
