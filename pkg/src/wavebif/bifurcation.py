"""Construction of the 0th-order standing-wave profiles g(t) = V sn(Omega t, m).

Each admissible nonlinearity reduces to a scalar ODE for an odd 2*pi-periodic
function; the profiles built here solve those ODEs exactly in elliptic form.
The parameter systems are transcendental in m and are solved by bracketed
Brent iteration in charts where the quantities stay O(1):

* quartic case: m in (-1, 0) from (7+m)K - 6E = 0;
* cubic case, s* = +1: m in (0, 1), solved in the complement 1 - m;
* cubic case, s* = -1: m < -1, solved in zeta = 1/(1-m) in (0, 1/2);
* exterior case: m in (-1, 0) directly.

The s* = +-1 bookkeeping and the lambda threshold follow the coefficient
reduction implemented in `reduce_coefficients`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from . import elliptic
from .errors import ConvergenceError, DomainError

__all__ = [
    "NonlinearityCoefficients",
    "ReducedCoefficients",
    "WaveProfile",
    "DegenerateProfile",
    "reduce_coefficients",
    "solve_quartic_profile",
    "solve_cubic_profile",
    "solve_exterior_profile",
    "degenerate_profiles",
    "frequency_map",
    "QUARTIC_PARAMETER_BRACKET",
]

# The quartic parameter equation has its single sign change well inside this
# bracket (the root is near -0.2554); a coarse scan in solve_quartic_profile
# re-verifies that before Brent runs.
QUARTIC_PARAMETER_BRACKET = (-0.5, -0.1)

# Complements smaller than this are too close to the representability edge of
# double precision for the downstream elliptic evaluations to mean anything.
_MIN_CHART = 1e-13


@dataclass(frozen=True)
class NonlinearityCoefficients:
    """Input coefficients (a2, <a3>, a4) of the wave-equation nonlinearity."""

    case: str  # "quartic" | "quadratic_cubic"
    a2: float = 0.0
    a3_mean: float = 0.0
    a4: float = 0.0

    def __post_init__(self):
        if self.case == "quartic":
            if self.a4 == 0.0:
                raise DomainError("quartic case requires a4 != 0")
        elif self.case == "quadratic_cubic":
            if self.a2 == 0.0 and self.a3_mean == 0.0:
                raise DomainError("quadratic_cubic case requires (a2, a3_mean) != (0, 0)")
        else:
            raise DomainError(f"unknown case {self.case!r}")


@dataclass(frozen=True)
class ReducedCoefficients:
    """Scaled coefficients of one admissible reduced ODE.

    regime is one of:

    * "interior":       -s* eta'' - <eta^2> eta + lambda eta^3 = 0
    * "exterior":        eta'' + <eta^2> eta + lambda eta^3 = 0
    * "pure_cubic":      eta'' + eta^3 = 0
    * "nonlocal_only":   eta'' + <eta^2> eta = 0
    """

    alpha: float
    gamma: float
    beta: float
    lam: Optional[float]
    s_star: int
    regime: str
    equation: str


@dataclass(frozen=True)
class WaveProfile:
    """An elliptic profile g(t) = V sn(Omega t, m), 2*pi-periodic and odd.

    case is "quartic", "quadratic_cubic" or "exterior"; s_star and lam are
    populated for the cubic family only.  residual_sup is the sup-norm of the
    defining ODE residual on the construction grid.
    """

    case: str
    V: float
    Omega: float
    m: float
    s_star: Optional[int]
    lam: Optional[float]
    residual_sup: float

    def g(self, t) -> np.ndarray:
        """Profile values V sn(Omega t, m)."""
        return self.V * elliptic.jacobi(self.Omega * np.asarray(t, float), self.m).sn

    def dg(self, t) -> np.ndarray:
        """First derivative, via d/dx sn = cn dn."""
        s = elliptic.jacobi(self.Omega * np.asarray(t, float), self.m)
        return self.V * self.Omega * s.dsn

    def ddg(self, t) -> np.ndarray:
        """Second derivative, via sn'' = -(1+m) sn + 2m sn^3."""
        g = self.g(t)
        return -self.Omega**2 * (1.0 + self.m) * g + (
            2.0 * self.m * self.Omega**2 / self.V**2
        ) * g**3

    def as_dict(self) -> dict:
        return {
            "case": self.case,
            "V": self.V,
            "Omega": self.Omega,
            "m": self.m,
            "s_star": self.s_star,
            "lambda": self.lam,
            "residual_sup": self.residual_sup,
        }


@dataclass(frozen=True)
class DegenerateProfile:
    """Odd 2*pi-periodic solution of a degenerate reduced ODE.

    Held as sine coefficients: eta(t) = sum_k coefficients[k] sin(k t).
    """

    tag: str
    coefficients: np.ndarray
    residual_sup: float


# ---------------------------------------------------------------------------
# coefficient reduction

def _interior_threshold(a2: float) -> float:
    return math.pi**2 * a2**2 / 9.0


def reduce_coefficients(coeffs: NonlinearityCoefficients) -> list[ReducedCoefficients]:
    """All admissible reduced-ODE coefficient sets for a quadratic-cubic input.

    The regime splits at <a3> = 0 and <a3> = pi^2 a2^2 / 9 (where alpha
    changes sign).  Inside (0, pi^2 a2^2/9) the s* = -1 branch is always
    admissible while s* = +1 requires lambda < 1; the latter condition is
    algebraically the same as <a3> < pi^2 a2^2 / 12, which is how the
    admissibility table is usually quoted.  Both forms are implemented by the
    single test lambda < 1.
    """
    if coeffs.case != "quadratic_cubic":
        raise DomainError("reduce_coefficients applies to the quadratic_cubic case")
    a2, a3 = coeffs.a2, coeffs.a3_mean
    alpha = (9.0 * a3 - math.pi**2 * a2**2) / 12.0
    gamma = math.pi * a3 / 2.0

    if a3 == 0.0:
        beta = 1.0 / math.sqrt(2.0 * abs(alpha))
        return [
            ReducedCoefficients(
                alpha=alpha, gamma=gamma, beta=beta, lam=None, s_star=+1,
                regime="nonlocal_only", equation="eta'' + <eta^2> eta = 0",
            )
        ]
    if alpha == 0.0:
        beta = math.sqrt(math.pi / gamma)
        return [
            ReducedCoefficients(
                alpha=alpha, gamma=gamma, beta=beta, lam=None, s_star=-1,
                regime="pure_cubic", equation="eta'' + eta^3 = 0",
            )
        ]

    beta = 1.0 / math.sqrt(2.0 * abs(alpha))
    lam = abs(gamma) / (2.0 * math.pi * abs(alpha))
    if a3 < 0.0 or a3 > _interior_threshold(a2):
        s_star = -1 if alpha > 0.0 else +1
        return [
            ReducedCoefficients(
                alpha=alpha, gamma=gamma, beta=beta, lam=lam, s_star=s_star,
                regime="exterior",
                equation="eta'' + <eta^2> eta + lambda eta^3 = 0",
            )
        ]

    # interior: 0 < a3 < pi^2 a2^2 / 9, alpha < 0
    out = [
        ReducedCoefficients(
            alpha=alpha, gamma=gamma, beta=beta, lam=lam, s_star=-1,
            regime="interior",
            equation="eta'' - <eta^2> eta + lambda eta^3 = 0",
        )
    ]
    if lam < 1.0:
        out.append(
            ReducedCoefficients(
                alpha=alpha, gamma=gamma, beta=beta, lam=lam, s_star=+1,
                regime="interior",
                equation="-eta'' - <eta^2> eta + lambda eta^3 = 0",
            )
        )
    return out


# ---------------------------------------------------------------------------
# profile constructors

def _grid_residual(profile: WaveProfile, npts: int = 512) -> float:
    """Sup-norm of the defining reduced ODE at the profile, on a uniform grid.

    g'' is evaluated through the elliptic identity (the module's own
    differentiation rule); the nonlocal averages come from the grid itself,
    which is spectrally accurate for these periodic integrands.
    """
    t = np.arange(npts) * (2.0 * math.pi / npts)
    g = profile.g(t)
    ddg = profile.ddg(t)
    g2_mean = float(np.mean(g**2))
    if profile.case == "quartic":
        a_of_g = float(np.mean(g**4)) + 3.0 * g2_mean**2
        res = ddg + a_of_g * (3.0 * g2_mean * g + g**3)
    elif profile.case == "quadratic_cubic":
        res = -profile.s_star * ddg - g2_mean * g + profile.lam * g**3
    elif profile.case == "exterior":
        res = ddg + g2_mean * g + profile.lam * g**3
    else:
        raise DomainError(f"unknown profile case {profile.case!r}")
    return float(np.max(np.abs(res)))


def solve_quartic_profile(a4: float) -> WaveProfile:
    """Profile for the quartic-nonlinearity reduced ODE.

    The parameter m solves (7+m)K(m) - 6E(m) = 0; a coarse scan confirms the
    single sign change sits inside the fixed bracket before Brent polishes it
    to ~1e-14.  Omega then makes g 2*pi-periodic and V balances the cubic
    coefficient.  The profile is independent of a4 (which only scales the
    functional, not its critical points); a4 merely must be nonzero.
    """
    if a4 == 0.0:
        raise DomainError("quartic case requires a4 != 0")

    lo, hi = QUARTIC_PARAMETER_BRACKET
    scan = np.linspace(-1.0 + 1e-9, -1e-12, 201)
    signs = np.sign([elliptic.psi_quartic(s) for s in scan])
    flips = np.nonzero(np.diff(signs) != 0.0)[0]
    if len(flips) != 1:
        raise ConvergenceError("expected exactly one sign change of the parameter function")
    if not (lo < scan[flips[0]] and scan[flips[0] + 1] < hi):
        raise ConvergenceError("parameter sign change escaped the fixed bracket")

    m_bar = brentq(elliptic.psi_quartic, lo, hi, xtol=1e-14, rtol=8.9e-16)
    omega = 2.0 * elliptic.complete_K(m_bar) / math.pi
    ratios = elliptic.mean_ratios(m_bar)
    phi = elliptic.mean_sn2(m_bar)
    a_sn = ratios.sn4 + 3.0 * phi**2
    v_amp = (-2.0 * m_bar * omega**2 / a_sn) ** (1.0 / 6.0)

    # consistency: the remaining line of the parameter system
    a_g = v_amp**4 * a_sn
    lhs = omega**2 * (1.0 + m_bar)
    rhs = 3.0 * a_g * v_amp**2 * phi
    if abs(lhs - rhs) > 1e-9 * max(1.0, abs(lhs)):
        raise ConvergenceError("quartic parameter system inconsistent after root solve")

    profile = WaveProfile(
        case="quartic", V=v_amp, Omega=omega, m=m_bar,
        s_star=None, lam=None, residual_sup=0.0,
    )
    return _with_residual(profile)


def _with_residual(profile: WaveProfile) -> WaveProfile:
    res = _grid_residual(profile)
    return WaveProfile(
        case=profile.case, V=profile.V, Omega=profile.Omega, m=profile.m,
        s_star=profile.s_star, lam=profile.lam, residual_sup=res,
    )


def _lambda_of_complement(mc: float) -> float:
    """lambda(m) = 2 m <sn^2> / (1+m) for m = 1 - mc in (0, 1), stable in mc."""
    chain_phi = 0.5 + elliptic._agm_chain(mc, 1.0 - mc).gap_fraction
    return 2.0 * (1.0 - mc) * chain_phi / (2.0 - mc)


def _lambda_of_zeta(zeta: float) -> float:
    """lambda(m) for m = 1 - 1/zeta < -1, stable in zeta = 1/(1-m) in (0, 1/2)."""
    mu = 1.0 - zeta
    gap_mu = elliptic._agm_chain(zeta, mu).gap_fraction
    # 2 m phi/(1+m) with phi(m) = 1/2 - gap_mu; all factors exact in zeta
    return mu * (1.0 - 2.0 * gap_mu) / (1.0 - 2.0 * zeta)


def solve_cubic_profile(lam: float, s_star: int) -> WaveProfile:
    """Profile for the interior quadratic-cubic reduced ODE.

    Parameters
    ----------
    lam : float
        Cubic coefficient of the reduced ODE, lambda > 0 (and < 1 for
        s_star = +1).
    s_star : int
        Branch selector, +1 or -1.

    Raises
    ------
    DomainError
        If (lam, s_star) is outside the admissible region.
    ConvergenceError
        If the solution parameter is beyond what double precision can
        represent (lambda too close to 1 for s*=+1, too close to 0 for
        s*=-1).
    """
    lam = float(lam)
    if s_star not in (+1, -1):
        raise DomainError("s_star must be +1 or -1")
    if lam <= 0.0:
        raise DomainError("lambda must be positive")

    if s_star == +1:
        if lam >= 1.0:
            raise DomainError("s_star=+1 requires lambda in (0, 1)")
        lo, hi = _MIN_CHART, 1.0
        if _lambda_of_complement(lo) <= lam:
            raise ConvergenceError(
                "lambda so close to 1 that 1-m underflows double precision"
            )
        mc = brentq(lambda x: _lambda_of_complement(x) - lam, lo, hi,
                    xtol=1e-16, rtol=8.9e-16)
        m_bar = 1.0 - mc
        chain = elliptic._agm_chain(mc, m_bar)
        big_k = chain.quarter_period
        phi = 0.5 + chain.gap_fraction
        omega = 2.0 * big_k / math.pi
        v_sq = 2.0 * m_bar * omega**2 / lam
    else:
        lo, hi = _MIN_CHART, 0.5 - _MIN_CHART
        if _lambda_of_zeta(lo) >= lam:
            raise ConvergenceError(
                "lambda so small that the parameter m escapes double precision"
            )
        if _lambda_of_zeta(hi) <= lam:
            raise ConvergenceError("lambda too large to separate m from -1")
        zeta = brentq(lambda x: _lambda_of_zeta(x) - lam, lo, hi,
                      xtol=1e-16, rtol=8.9e-16)
        m_bar = 1.0 - 1.0 / zeta
        mu = 1.0 - zeta
        chain = elliptic._agm_chain(zeta, mu)
        k_mu = chain.quarter_period
        phi = 0.5 - chain.gap_fraction
        omega = 2.0 * math.sqrt(zeta) * k_mu / math.pi
        # V^2 = -2 m Omega^2 / lambda with m Omega^2 = (4/pi^2)(zeta-1) K_mu^2
        v_sq = (8.0 / math.pi**2) * mu * k_mu**2 / lam

    v_amp = math.sqrt(v_sq)
    lhs = omega**2 * (1.0 + m_bar)
    rhs = s_star * v_sq * phi
    if abs(lhs - rhs) > 1e-9 * max(1.0, abs(lhs)):
        raise ConvergenceError("cubic parameter system inconsistent after root solve")

    profile = WaveProfile(
        case="quadratic_cubic", V=v_amp, Omega=omega, m=m_bar,
        s_star=int(s_star), lam=lam, residual_sup=0.0,
    )
    return _with_residual(profile)


def solve_exterior_profile(lam: float) -> WaveProfile:
    """Profile for the exterior-regime reduced ODE eta'' + <eta^2> eta + lambda eta^3 = 0.

    The parameter lies in (-1, 0) where lambda = -2 m <sn^2>/(1+m) covers
    (0, inf) monotonically; no chart tricks are needed.
    """
    lam = float(lam)
    if lam <= 0.0:
        raise DomainError("lambda must be positive")
    lo, hi = -1.0 + 1e-10, -1e-12

    def objective(m):
        return -2.0 * m * elliptic.mean_sn2(m) / (1.0 + m) - lam

    if objective(lo) < 0.0:
        raise ConvergenceError("lambda too large to separate m from -1")
    m_bar = brentq(objective, lo, hi, xtol=1e-15, rtol=8.9e-16)
    omega = 2.0 * elliptic.complete_K(m_bar) / math.pi
    v_sq = -2.0 * m_bar * omega**2 / lam
    v_amp = math.sqrt(v_sq)
    phi = elliptic.mean_sn2(m_bar)
    lhs = omega**2 * (1.0 + m_bar)
    if abs(lhs - v_sq * phi) > 1e-9 * max(1.0, abs(lhs)):
        raise ConvergenceError("exterior parameter system inconsistent after root solve")

    profile = WaveProfile(
        case="exterior", V=v_amp, Omega=omega, m=m_bar,
        s_star=None, lam=lam, residual_sup=0.0,
    )
    return _with_residual(profile)


# ---------------------------------------------------------------------------
# degenerate regimes

def degenerate_profiles(tag: str) -> DegenerateProfile:
    """Closed-form or Galerkin solutions of the two degenerate reduced ODEs."""
    if tag == "nonlocal_only":
        coeffs = np.zeros(2)
        coeffs[1] = math.sqrt(2.0)
        # eta = sqrt(2) sin t: <eta^2> = 1, so eta'' + <eta^2> eta = 0 exactly
        return DegenerateProfile(tag=tag, coefficients=coeffs, residual_sup=0.0)
    if tag == "pure_cubic":
        from . import galerkin  # deferred: galerkin is a heavier module

        omega = 2.0 * elliptic.complete_K(-1.0) / math.pi
        t = np.arange(512) * (2.0 * math.pi / 512)
        seed_vals = math.sqrt(2.0) * omega * elliptic.jacobi(omega * t, -1.0).sn
        from .fourier import sine_coeffs

        seed = sine_coeffs(seed_vals, 64)
        sol = galerkin.ode_newton("pure_cubic", (), 64, seed)
        res = galerkin.ode_residual_sup("pure_cubic", (), sol)
        return DegenerateProfile(tag=tag, coefficients=sol, residual_sup=res)
    raise DomainError(f"unknown degenerate tag {tag!r}")


def frequency_map(delta: float, case: str, s_star: Optional[int] = None) -> float:
    """Frequency of the continued solution at amplitude parameter delta.

    quadratic_cubic: omega = sqrt(1 - 2 s* delta^2); quartic (and exterior):
    omega = sqrt(1 - 2 delta^6).
    """
    delta = float(delta)
    if delta < 0.0:
        raise DomainError("delta must be nonnegative")
    if case == "quadratic_cubic":
        if s_star not in (+1, -1):
            raise DomainError("quadratic_cubic frequency needs s_star = +-1")
        radicand = 1.0 - 2.0 * s_star * delta**2
    elif case in ("quartic", "exterior"):
        radicand = 1.0 - 2.0 * delta**6
    else:
        raise DomainError(f"unknown case {case!r}")
    if radicand <= 0.0:
        raise DomainError(f"frequency undefined: radicand {radicand} <= 0")
    return math.sqrt(radicand)
