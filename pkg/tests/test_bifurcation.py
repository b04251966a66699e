"""Tests for profile construction and coefficient reduction.

The frozen quartic parameter value below was computed three independent ways
(40-digit arbitrary-precision root solve, scipy.special evaluation, direct
quadrature of the defining integrals); all agree to full double precision.
"""

import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

import oracles
from wavebif import bifurcation as bif
from wavebif import elliptic
from wavebif.errors import ConvergenceError, DomainError

# unique root of (7+m)K - 6E in (-1, 0), frozen at double precision
QUARTIC_M = -0.2554442273678654

NC = bif.NonlinearityCoefficients


# ---------------------------------------------------------------------------
# quartic profile

def test_quartic_parameter_value():
    p = bif.solve_quartic_profile(1.0)
    assert p.m == pytest.approx(QUARTIC_M, abs=1e-13)
    assert elliptic.psi_quartic(p.m) == pytest.approx(0.0, abs=1e-12)


def test_quartic_profile_structure():
    p = bif.solve_quartic_profile(1.0)
    assert p.case == "quartic"
    assert p.Omega == pytest.approx(2.0 * elliptic.complete_K(p.m) / math.pi, rel=1e-14)
    assert p.residual_sup < 1e-8
    assert p.s_star is None and p.lam is None


def test_quartic_profile_independent_of_a4():
    a = bif.solve_quartic_profile(1.0)
    b = bif.solve_quartic_profile(7.3)
    assert a == b
    with pytest.raises(DomainError):
        bif.solve_quartic_profile(0.0)


def test_quartic_parameter_system_consistency():
    p = bif.solve_quartic_profile(1.0)
    t = np.arange(512) * (2 * math.pi / 512)
    g = p.g(t)
    g2 = float(np.mean(g**2))
    a_g = float(np.mean(g**4)) + 3.0 * g2**2
    assert p.Omega**2 * (1.0 + p.m) == pytest.approx(3.0 * a_g * g2, rel=1e-9)
    # cubic coefficient line: -2 m Omega^2 = V^2 A(g)
    assert -2.0 * p.m * p.Omega**2 == pytest.approx(p.V**2 * a_g, rel=1e-9)


def test_quartic_profile_vs_ode_integration():
    """Integrate the reduced ODE from the profile's initial data and compare."""
    p = bif.solve_quartic_profile(1.0)
    t = np.arange(512) * (2 * math.pi / 512)
    g = p.g(t)
    g2 = float(np.mean(g**2))
    a_g = float(np.mean(g**4)) + 3.0 * g2**2

    def rhs(_, y):
        return [y[1], -a_g * (3.0 * g2 * y[0] + y[0] ** 3)]

    sol = solve_ivp(rhs, (0.0, 2 * math.pi), [0.0, float(p.dg(0.0))],
                    t_eval=t, rtol=1e-12, atol=1e-12, method="DOP853")
    np.testing.assert_allclose(sol.y[0], g, atol=1e-10)


def test_quartic_profile_odd_periodic():
    p = bif.solve_quartic_profile(1.0)
    t = np.linspace(0.1, 3.0, 7)
    np.testing.assert_allclose(p.g(-t), -p.g(t), atol=1e-13)
    np.testing.assert_allclose(p.g(t + 2 * math.pi), p.g(t), atol=1e-12)
    # derivative consistency against central differences
    h = 1e-6
    fd = (p.g(t + h) - p.g(t - h)) / (2 * h)
    np.testing.assert_allclose(p.dg(t), fd, rtol=1e-8, atol=1e-9)
    fd2 = (p.dg(t + h) - p.dg(t - h)) / (2 * h)
    np.testing.assert_allclose(p.ddg(t), fd2, rtol=1e-7, atol=1e-6)


# ---------------------------------------------------------------------------
# cubic profiles

@pytest.mark.parametrize("lam,s_star", [
    (0.2, -1), (0.3, -1), (0.5, -1), (1.0, -1), (2.0, -1), (5.0, -1),
    (0.1, +1), (0.3, +1), (0.5, +1), (0.7, +1), (0.9, +1),
])
def test_cubic_profile_parameter_relation(lam, s_star):
    p = bif.solve_cubic_profile(lam, s_star)
    assert p.case == "quadratic_cubic"
    assert p.s_star == s_star and p.lam == lam
    if s_star == +1:
        assert 0.0 < p.m < 1.0
    else:
        assert p.m < -1.0
    # the defining relation lambda = 2 m <sn^2> / (1+m)
    lam_back = 2.0 * p.m * elliptic.mean_sn2(p.m) / (1.0 + p.m)
    assert lam_back == pytest.approx(lam, rel=1e-12)
    # amplitude line: 2 m Omega^2 = s* lambda V^2
    assert 2.0 * p.m * p.Omega**2 == pytest.approx(s_star * lam * p.V**2, rel=1e-12)
    assert p.Omega == pytest.approx(2.0 * elliptic.complete_K(p.m) / math.pi, rel=1e-11)
    assert p.residual_sup < 1e-8


def test_cubic_unit_lambda_example():
    p = bif.solve_cubic_profile(1.0, -1)
    assert p.m < -1.0
    lam_back = 2.0 * p.m * elliptic.mean_sn2(p.m) / (1.0 + p.m)
    assert abs(lam_back - 1.0) < 1e-12


@pytest.mark.parametrize("s_star", [-1, +1])
def test_cubic_parameter_monotone_in_lambda(s_star):
    lams = [0.3, 0.5, 0.7] if s_star == +1 else [0.5, 1.0, 2.0]
    ms = [bif.solve_cubic_profile(lam, s_star).m for lam in lams]
    assert all(a < b for a, b in zip(ms, ms[1:]))


def test_cubic_profile_vs_ode_integration():
    p = bif.solve_cubic_profile(0.3, +1)
    t = np.arange(512) * (2 * math.pi / 512)
    g = p.g(t)
    g2 = float(np.mean(g**2))

    def rhs(_, y):
        # -s* y'' - <g^2> y + lam y^3 = 0, s* = +1
        return [y[1], -(g2 * y[0] - 0.3 * y[0] ** 3)]

    sol = solve_ivp(rhs, (0.0, 2 * math.pi), [0.0, float(p.dg(0.0))],
                    t_eval=t, rtol=1e-12, atol=1e-12, method="DOP853")
    np.testing.assert_allclose(sol.y[0], g, atol=1e-9)


def test_cubic_domain_errors():
    with pytest.raises(DomainError):
        bif.solve_cubic_profile(1.2, +1)
    with pytest.raises(DomainError):
        bif.solve_cubic_profile(1.0, +1)
    with pytest.raises(DomainError):
        bif.solve_cubic_profile(-0.1, -1)
    with pytest.raises(DomainError):
        bif.solve_cubic_profile(0.5, 0)


def test_cubic_representability_guards():
    with pytest.raises(ConvergenceError):
        bif.solve_cubic_profile(0.05, -1)
    with pytest.raises(ConvergenceError):
        bif.solve_cubic_profile(0.9999, +1)


# ---------------------------------------------------------------------------
# exterior profile

@pytest.mark.parametrize("lam", [0.3, 1.0, 5.0])
def test_exterior_profile(lam):
    p = bif.solve_exterior_profile(lam)
    assert p.case == "exterior"
    assert -1.0 < p.m < 0.0
    lam_back = -2.0 * p.m * elliptic.mean_sn2(p.m) / (1.0 + p.m)
    assert lam_back == pytest.approx(lam, rel=1e-12)
    assert p.residual_sup < 1e-8


def test_exterior_profile_vs_ode_integration():
    p = bif.solve_exterior_profile(1.0)
    t = np.arange(512) * (2 * math.pi / 512)
    g = p.g(t)
    g2 = float(np.mean(g**2))

    def rhs(_, y):
        return [y[1], -(g2 * y[0] + 1.0 * y[0] ** 3)]

    sol = solve_ivp(rhs, (0.0, 2 * math.pi), [0.0, float(p.dg(0.0))],
                    t_eval=t, rtol=1e-12, atol=1e-12, method="DOP853")
    np.testing.assert_allclose(sol.y[0], g, atol=1e-10)


# ---------------------------------------------------------------------------
# coefficient reduction

def test_reduce_interior_two_branches():
    rc = bif.reduce_coefficients(NC("quadratic_cubic", a2=1.0, a3_mean=0.5))
    assert [r.s_star for r in rc] == [-1, +1]
    assert all(r.regime == "interior" for r in rc)
    alpha = (9 * 0.5 - math.pi**2) / 12
    gamma = math.pi * 0.5 / 2
    for r in rc:
        assert r.alpha == pytest.approx(alpha, rel=1e-15)
        assert r.gamma == pytest.approx(gamma, rel=1e-15)
        assert r.lam == pytest.approx(abs(gamma) / (2 * math.pi * abs(alpha)), rel=1e-14)
        assert r.beta == pytest.approx(1 / math.sqrt(2 * abs(alpha)), rel=1e-14)
        assert r.lam < 1.0


def test_reduce_interior_threshold():
    # the s*=+1 branch exists exactly when lambda < 1
    thr = math.pi**2 / 12
    rc = bif.reduce_coefficients(NC("quadratic_cubic", a2=1.0, a3_mean=0.999 * thr))
    assert len(rc) == 2
    rc = bif.reduce_coefficients(NC("quadratic_cubic", a2=1.0, a3_mean=1.001 * thr))
    assert len(rc) == 1 and rc[0].s_star == -1 and rc[0].lam > 1.0


@pytest.mark.parametrize("a3,expected_s", [(-1.0, +1), (2.0, -1)])
def test_reduce_exterior(a3, expected_s):
    rc = bif.reduce_coefficients(NC("quadratic_cubic", a2=1.0, a3_mean=a3))
    assert len(rc) == 1
    assert rc[0].regime == "exterior"
    assert rc[0].s_star == expected_s
    assert rc[0].lam > 0.0


def test_reduce_degenerate_tags():
    rc = bif.reduce_coefficients(NC("quadratic_cubic", a2=1.0, a3_mean=0.0))
    assert len(rc) == 1 and rc[0].regime == "nonlocal_only"
    assert rc[0].s_star == +1 and rc[0].lam is None
    a3_star = math.pi**2 / 9  # rounds so that alpha vanishes exactly
    rc = bif.reduce_coefficients(NC("quadratic_cubic", a2=1.0, a3_mean=a3_star))
    assert len(rc) == 1 and rc[0].regime == "pure_cubic"
    assert rc[0].beta == pytest.approx(math.sqrt(math.pi / rc[0].gamma), rel=1e-14)


def test_reduce_pure_cubic_without_quadratic_term():
    rc = bif.reduce_coefficients(NC("quadratic_cubic", a2=0.0, a3_mean=1.0))
    assert len(rc) == 1 and rc[0].regime == "exterior" and rc[0].s_star == -1


def test_coefficient_validation():
    with pytest.raises(DomainError):
        NC("quadratic_cubic", a2=0.0, a3_mean=0.0)
    with pytest.raises(DomainError):
        NC("quartic", a4=0.0)
    with pytest.raises(DomainError):
        NC("something_else")
    with pytest.raises(DomainError):
        bif.reduce_coefficients(NC("quartic", a4=1.0))


# ---------------------------------------------------------------------------
# degenerate profiles, frequency map, serialization

def test_degenerate_nonlocal_only():
    d = bif.degenerate_profiles("nonlocal_only")
    assert d.residual_sup == 0.0
    assert d.coefficients[1] == pytest.approx(math.sqrt(2.0), rel=1e-15)
    assert float(np.sum(np.abs(d.coefficients))) == pytest.approx(math.sqrt(2.0), rel=1e-15)


def test_degenerate_unknown_tag():
    with pytest.raises(DomainError):
        bif.degenerate_profiles("quadratic")


def test_frequency_map_values():
    assert bif.frequency_map(0.5, "quadratic_cubic", -1) == pytest.approx(math.sqrt(1.5), rel=1e-15)
    assert bif.frequency_map(0.5, "quadratic_cubic", +1) == pytest.approx(math.sqrt(0.5), rel=1e-15)
    assert bif.frequency_map(0.5, "quartic") == pytest.approx(math.sqrt(1 - 2 * 0.5**6), rel=1e-15)
    assert bif.frequency_map(0.0, "quartic") == 1.0


def test_frequency_map_domain():
    with pytest.raises(DomainError):
        bif.frequency_map(1.0, "quadratic_cubic", +1)
    with pytest.raises(DomainError):
        bif.frequency_map(1.0, "quartic")
    with pytest.raises(DomainError):
        bif.frequency_map(-0.1, "quartic")
    with pytest.raises(DomainError):
        bif.frequency_map(0.5, "quadratic_cubic")


def test_profile_serialization_keys():
    p = bif.solve_cubic_profile(0.5, -1)
    d = p.as_dict()
    assert set(d) == {"case", "V", "Omega", "m", "s_star", "lambda", "residual_sup"}
    assert d["lambda"] == 0.5 and d["s_star"] == -1
    q = bif.solve_quartic_profile(1.0).as_dict()
    assert q["s_star"] is None and q["lambda"] is None
