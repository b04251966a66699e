"""Complete elliptic integrals and Jacobi elliptic functions for parameter m < 1.

Everything here uses the parameter convention m = k^2.  Negative parameters are
fully supported: K and E go through the reciprocal-parameter transform, the
Jacobi functions through the corresponding function-value transform, both of
which keep all intermediate quantities inside (0, 1) where the AGM and Landen
recursions are well conditioned.

The AGM gap sequence is computed by the algebraically equivalent recurrence
c_{n+1} = c_n^2 / (2 (a_n + b_n)) instead of (a_n - b_n)/2, which removes the
cancellation near m = 0 and makes quantities like K - E and <sn^2> - 1/2
accurate to relative rounding error for every parameter.

The amplitude ODE d(am)/dt = sqrt(1 - m sin^2 am) is also integrated directly
(adaptive 8th-order Runge-Kutta) as an independent evaluation path; it is
deliberately slow and serves as the oracle for the fast path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.integrate import solve_ivp

from .errors import ConvergenceError, CrossCheckError, DomainError

__all__ = [
    "JacobiSample",
    "MeanRatios",
    "complete_K",
    "complete_E",
    "ke_from_complement",
    "jacobi",
    "jacobi_ode",
    "mean_sn2",
    "mean_sn2_excess",
    "mean_ratios",
    "phi_mean_map",
    "phi_mean_derivative",
    "psi_quartic",
]


def _require_parameter(m: float) -> float:
    m = float(m)
    if not math.isfinite(m) or m >= 1.0:
        raise DomainError(f"elliptic parameter must satisfy m < 1, got {m}")
    return m


# ---------------------------------------------------------------------------
# AGM core

class _AgmChain(NamedTuple):
    """AGM scales a_0..a_N and gaps c_1..c_N for one parameter m = 1 - mc."""

    m: float
    a: list[float]  # length N+1
    c: list[float]  # length N, c[i] is the gap at level i+1

    @property
    def quarter_period(self) -> float:
        return math.pi / (2.0 * self.a[-1])

    @property
    def gap_fraction(self) -> float:
        """(K - E)/(m K) - 1/2, i.e. sum_{n>=1} 2^(n-1) c_n^2 / m."""
        if self.m == 0.0:
            return 0.0
        return sum(2.0 ** n * cn * cn for n, cn in enumerate(self.c)) / self.m

    @property
    def e_over_k(self) -> float:
        return 1.0 - self.m * (0.5 + self.gap_fraction)


def _agm_chain(mc: float, m: float | None = None) -> _AgmChain:
    """Run the AGM for complement mc in (0, 1].

    The caller may pass the exact complementary value m = 1 - mc when it owns
    a sharper representation of it than the subtraction would give.
    """
    if m is None:
        m = 1.0 - mc
    a, b = 1.0, math.sqrt(mc)
    a_list = [a]
    c_list: list[float] = []
    c = m / (2.0 * (1.0 + b))  # (a0 - b0)/2 without the subtraction
    for _ in range(40):
        a, b = 0.5 * (a + b), math.sqrt(a * b)
        a_list.append(a)
        c_list.append(c)
        if abs(c) <= 2e-16 * a:
            return _AgmChain(m=m, a=a_list, c=c_list)
        c = c * c / (2.0 * (a + b))
    raise ConvergenceError("AGM iteration failed to converge")


def ke_from_complement(mc: float, m: float | None = None) -> tuple[float, float]:
    """K(m) and E(m) for m = 1 - mc, taking the complement as the input.

    Useful on its own when m is so close to 1 that forming it explicitly
    would lose all precision; root solves in that regime work in mc directly.
    """
    mc = float(mc)
    if not (0.0 < mc <= 1.0):
        raise DomainError(f"complement must lie in (0, 1], got {mc}")
    chain = _agm_chain(mc, m)
    big_k = chain.quarter_period
    return big_k, big_k * chain.e_over_k


def _ke(m: float) -> tuple[float, float]:
    m = _require_parameter(m)
    if m == 0.0:
        return math.pi / 2.0, math.pi / 2.0
    if m > 0.0:
        return ke_from_complement(1.0 - m, m)
    # m < 0: reciprocal-parameter transform through zeta = 1/(1-m), which is
    # also the complement of mu = m/(m-1); all cancellation-free.
    zeta = 1.0 / (1.0 - m)
    mu = -m / (1.0 - m)
    k_mu, e_mu = ke_from_complement(zeta, mu)
    root = math.sqrt(zeta)
    return root * k_mu, e_mu / root


def complete_K(m: float) -> float:
    """Complete elliptic integral of the first kind, parameter convention."""
    return _ke(m)[0]


def complete_E(m: float) -> float:
    """Complete elliptic integral of the second kind, parameter convention."""
    return _ke(m)[1]


# ---------------------------------------------------------------------------
# Jacobi functions

@dataclass(frozen=True)
class JacobiSample:
    """Amplitude and elliptic function values at times t for one parameter m.

    sn is sin(am) by construction and dn is the stable square root of
    1 - m*sn^2, so the defining identities hold to rounding error.  The time
    derivative of sn is cn*dn (the `dsn` property).
    """

    t: np.ndarray
    m: float
    am: np.ndarray
    sn: np.ndarray
    dn: np.ndarray

    @property
    def cn(self) -> np.ndarray:
        return np.cos(self.am)

    @property
    def dsn(self) -> np.ndarray:
        return self.cn * self.dn


def _am_reduced_landen(x: np.ndarray, chain: _AgmChain) -> np.ndarray:
    """Amplitude for |x| <= K(m) with m in (0,1), by descending Landen steps."""
    n = len(chain.c)
    phi = (2.0**n * chain.a[-1]) * x
    for i in range(n, 0, -1):
        ratio = chain.c[i - 1] / chain.a[i]
        phi = 0.5 * (phi + np.arcsin(np.clip(ratio * np.sin(phi), -1.0, 1.0)))
    return phi


def jacobi(t, m: float) -> JacobiSample:
    """Jacobi amplitude, sn and dn at real times t, any parameter m < 1.

    Parameters
    ----------
    t : float or array_like
        Evaluation times, unrestricted real values.
    m : float
        Elliptic parameter, m < 1 (m = k^2; negative values allowed).

    Returns
    -------
    JacobiSample
        Bundle of am, sn, dn arrays broadcast to the shape of t.
    """
    m = _require_parameter(m)
    t_arr = np.asarray(t, dtype=float)
    scalar = t_arr.ndim == 0
    t_flat = np.atleast_1d(t_arr)

    if m == 0.0:
        am = t_flat.copy()
    elif m > 0.0:
        chain = _agm_chain(1.0 - m, m)
        quarter = chain.quarter_period
        winding = np.round(t_flat / (2.0 * quarter))
        r = t_flat - 2.0 * quarter * winding
        am = winding * math.pi + _am_reduced_landen(r, chain)
    else:
        # Map to the positive parameter m1 = -m/(1-m); the function values
        # return through sn = sn1/(kappa*dn1) with kappa = sqrt(1-m).
        kappa = math.sqrt(1.0 - m)
        zeta = 1.0 / (1.0 - m)  # complement of m1, formed exactly
        m1 = -m / (1.0 - m)
        chain = _agm_chain(zeta, m1)
        quarter = chain.quarter_period / kappa  # K(m), reciprocal transform
        winding = np.round(t_flat / (2.0 * quarter))
        r = t_flat - 2.0 * quarter * winding
        am1 = _am_reduced_landen(kappa * r, chain)
        sn1 = np.sin(am1)
        cn1 = np.cos(am1)
        dn1 = np.sqrt(zeta + m1 * cn1**2)
        sn_r = sn1 / (kappa * dn1)
        am = winding * math.pi + np.arcsin(np.clip(sn_r, -1.0, 1.0))

    sn = np.sin(am)
    if m > 0.0:
        dn = np.sqrt((1.0 - m) + m * np.cos(am) ** 2)
    else:
        dn = np.sqrt(1.0 - m * sn**2)

    if scalar:
        am, sn, dn = am[0], sn[0], dn[0]
    else:
        am = am.reshape(t_arr.shape)
        sn = sn.reshape(t_arr.shape)
        dn = dn.reshape(t_arr.shape)
    return JacobiSample(t=t_arr, m=m, am=am, sn=sn, dn=dn)


def jacobi_ode(t, m: float, rtol: float = 1e-13, atol: float = 1e-13) -> JacobiSample:
    """Jacobi sample obtained by integrating the amplitude ODE directly.

    This is the slow reference path: d(am)/dt = sqrt(1 - m sin^2 am) with
    am(0) = 0, integrated with an adaptive 8th-order Runge-Kutta scheme.  It
    shares no code with `jacobi` beyond the final sn/dn assembly and is used
    to validate it.
    """
    m = _require_parameter(m)
    t_arr = np.asarray(t, dtype=float)
    scalar = t_arr.ndim == 0
    t_flat = np.atleast_1d(t_arr).ravel()

    def rhs(_t, phi):
        return np.sqrt(1.0 - m * np.sin(phi) ** 2)

    # am is odd in t, so one integration over the distinct magnitudes covers
    # both signs (and any repeated points).
    uniq, inverse = np.unique(np.abs(t_flat), return_inverse=True)
    am_uniq = np.zeros_like(uniq)
    positive = uniq > 0.0
    if np.any(positive):
        eval_pts = uniq[positive]
        sol = solve_ivp(
            rhs,
            (0.0, float(eval_pts[-1])),
            [0.0],
            method="DOP853",
            t_eval=eval_pts,
            rtol=rtol,
            atol=atol,
        )
        if not sol.success:
            raise ConvergenceError(f"amplitude ODE integration failed: {sol.message}")
        am_uniq[positive] = sol.y[0]
    am = am_uniq[inverse] * np.sign(t_flat)

    sn = np.sin(am)
    dn = np.sqrt(1.0 - m * sn**2) if m <= 0.0 else np.sqrt((1.0 - m) + m * np.cos(am) ** 2)
    am = am.reshape(np.atleast_1d(t_arr).shape)
    sn = sn.reshape(am.shape)
    dn = dn.reshape(am.shape)
    if scalar:
        am, sn, dn = am[0], sn[0], dn[0]
    return JacobiSample(t=t_arr, m=m, am=am, sn=sn, dn=dn)


# ---------------------------------------------------------------------------
# period averages

def mean_sn2_excess(m: float) -> float:
    """<sn^2> - 1/2, to full relative accuracy even for m near 0.

    For m > 0 this is the pure-positive AGM gap sum; for m < 0 it is the
    negated gap sum of the reciprocal parameter.  No subtractions occur, so
    the result keeps ~15 significant digits all the way down to m = 0 where
    it vanishes linearly (slope 1/16).
    """
    m = _require_parameter(m)
    if m == 0.0:
        return 0.0
    if m > 0.0:
        return _agm_chain(1.0 - m, m).gap_fraction
    zeta = 1.0 / (1.0 - m)
    mu = -m / (1.0 - m)
    return -_agm_chain(zeta, mu).gap_fraction


def mean_sn2(m: float) -> float:
    """Period average of sn(.,m)^2; equals (K - E)/(m K), 1/2 at m = 0."""
    return 0.5 + mean_sn2_excess(m)


def phi_mean_map(m: float) -> float:
    """mean_sn2 recomputed along two independent display formulas.

    Route one is the literal (K - E)/(m K) from complete_K/complete_E; route
    two is the reciprocal-parameter form 1 - 1/mu + E(mu)/(mu K(mu)) with
    mu = m/(m-1).  Both must agree with the stable gap-sum value to 1e-11,
    otherwise CrossCheckError.  Route one is skipped for |m| < 1e-4 where its
    own cancellation exceeds that tolerance.
    """
    m = _require_parameter(m)
    value = mean_sn2(m)
    if m == 0.0:
        return value
    mu = m / (m - 1.0)
    k_mu, e_mu = _ke(mu)
    reciprocal = 1.0 - 1.0 / mu + e_mu / (mu * k_mu)
    routes = [("reciprocal", reciprocal)]
    if abs(m) >= 1e-4:
        big_k, big_e = _ke(m)
        routes.append(("direct", (big_k - big_e) / (m * big_k)))
    for name, other in routes:
        if abs(other - value) > 1e-11 * max(1.0, abs(value)):
            raise CrossCheckError(
                f"mean_sn2 {name} route disagrees at m={m}: {value} vs {other}"
            )
    return value


def phi_mean_derivative(m: float) -> float:
    """d/dm of mean_sn2, from the closed-form K and E derivatives."""
    m = _require_parameter(m)
    if m == 0.0:
        return 1.0 / 16.0
    big_k, big_e = _ke(m)
    dk = (big_e - (1.0 - m) * big_k) / (2.0 * m * (1.0 - m))
    de = (big_e - big_k) / (2.0 * m)
    num = big_k - big_e
    return ((dk - de) * m * big_k - num * (big_k + m * dk)) / (m * big_k) ** 2


class MeanRatios(NamedTuple):
    """Period averages (sn^4, sn^2/dn^2, sn^4/dn^2)."""

    sn4: float
    sn2_over_dn2: float
    sn4_over_dn2: float


def _period_averages_quadrature(m: float) -> tuple[float, float, float, float]:
    """Trapezoid averages of sn^2, sn^4, sn^2/dn^2, sn^4/dn^2 over one period.

    The integrands share the period 2K(m); the node count doubles until two
    successive levels agree to 1e-12.
    """
    period = 2.0 * complete_K(m)
    prev = None
    npts = 2048
    while npts <= 1 << 17:
        x = np.arange(npts) * (period / npts)
        s = jacobi(x, m)
        sn2 = s.sn**2
        dn2 = s.dn**2
        vals = (
            float(np.mean(sn2)),
            float(np.mean(sn2**2)),
            float(np.mean(sn2 / dn2)),
            float(np.mean(sn2**2 / dn2)),
        )
        if prev is not None and all(
            abs(a - b) <= 1e-12 * max(1.0, abs(a)) for a, b in zip(vals, prev)
        ):
            return vals
        prev = vals
        npts *= 2
    raise ConvergenceError(f"period-average quadrature did not settle for m={m}")


def mean_ratios(m: float) -> MeanRatios:
    """Averages (sn^4, sn^2/dn^2, sn^4/dn^2) with closed forms cross-checked.

    The closed forms are rearranged around <sn^2> - 1/2 so they stay fully
    accurate near m = 0.  Every value is also computed by direct periodic
    quadrature and the routes must agree to 1e-10; a disagreement raises
    CrossCheckError instead of returning a possibly broken table.
    """
    m = _require_parameter(m)
    if m == 0.0:
        return MeanRatios(sn4=3.0 / 8.0, sn2_over_dn2=0.5, sn4_over_dn2=3.0 / 8.0)
    excess = mean_sn2_excess(m)
    phi = 0.5 + excess
    ratio2 = (1.0 - phi) / (1.0 - m)
    # <sn^4/dn^2> = (1 + (m-2) phi)/(m (1-m)) with 1 - 2 phi = -2 excess
    ratio4 = (phi - 2.0 * excess / m) / (1.0 - m)
    # <sn^4> = (2 (1+m) phi - 1)/(3 m) rearranged the same way
    sn4_closed = (2.0 * excess / m + 2.0 * phi) / 3.0

    q_sn2, q_sn4, q_r2, q_r4 = _period_averages_quadrature(m)
    checks = (
        ("sn2", phi, q_sn2),
        ("sn4", sn4_closed, q_sn4),
        ("sn2/dn2", ratio2, q_r2),
        ("sn4/dn2", ratio4, q_r4),
    )
    for name, closed, quad in checks:
        if abs(closed - quad) > 1e-10 * max(1.0, abs(closed)):
            raise CrossCheckError(
                f"period average {name} mismatch at m={m}: closed {closed}, quadrature {quad}"
            )
    return MeanRatios(sn4=q_sn4, sn2_over_dn2=ratio2, sn4_over_dn2=ratio4)


def psi_quartic(m: float) -> float:
    """The quartic-case parameter function (7+m)K(m) - 6E(m) on (-1, 0]."""
    m = float(m)
    if not (-1.0 < m <= 0.0):
        raise DomainError(f"psi_quartic requires m in (-1, 0], got {m}")
    big_k, big_e = _ke(m)
    return (7.0 + m) * big_k - 6.0 * big_e
