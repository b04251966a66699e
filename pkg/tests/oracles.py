"""Independent quadrature oracles for pinning expected values.

Everything here goes through scipy.integrate.quad on the defining integrals,
deliberately avoiding the AGM/Landen machinery used by the package itself, so
test comparisons are between two unrelated computations.
"""

import math
import warnings

from scipy.integrate import IntegrationWarning, quad

_QUAD_OPTS = dict(epsabs=1e-15, epsrel=1e-14, limit=200)


def _quad(f, a, b):
    # tolerances are set at the roundoff floor on purpose; the "roundoff
    # error detected" warning is expected there and not actionable
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        val, _ = quad(f, a, b, **_QUAD_OPTS)
    return val


def k_complete(m: float) -> float:
    """Complete integral of the first kind from its defining theta integral."""
    return _quad(lambda th: 1.0 / math.sqrt(1.0 - m * math.sin(th) ** 2),
                 0.0, math.pi / 2.0)


def e_complete(m: float) -> float:
    """Complete integral of the second kind from its defining theta integral."""
    return _quad(lambda th: math.sqrt(1.0 - m * math.sin(th) ** 2),
                 0.0, math.pi / 2.0)


def period_mean(h, m: float) -> float:
    """Average of h(sn^2, dn^2) over one sn period.

    Uses the amplitude substitution: with u the elliptic argument and theta
    its amplitude, du = dtheta / sqrt(1 - m sin^2 theta), so the period mean
    becomes a plain theta integral weighted by 1/sqrt(1 - m sin^2 theta),
    normalized by the quarter period.
    """
    def integrand(th):
        s2 = math.sin(th) ** 2
        d2 = 1.0 - m * s2
        return h(s2, d2) / math.sqrt(d2)

    return _quad(integrand, 0.0, math.pi / 2.0) / k_complete(m)


def mean_sn2(m: float) -> float:
    return period_mean(lambda s2, d2: s2, m)


def mean_sn4(m: float) -> float:
    return period_mean(lambda s2, d2: s2 * s2, m)


def mean_sn2_over_dn2(m: float) -> float:
    return period_mean(lambda s2, d2: s2 / d2, m)


def mean_sn4_over_dn2(m: float) -> float:
    return period_mean(lambda s2, d2: s2 * s2 / d2, m)
