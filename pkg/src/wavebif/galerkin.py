"""Spectral Newton machinery for the reduced profiles and the cylinder system.

Three layers live here.

1.  A sine-basis Newton solver for the reduced profile equations in one
    variable (`ode_newton`), with the nonlocal averages evaluated exactly by
    Parseval and analytic Jacobians including the rank-one couplings those
    averages induce.  Each equation is the Euler-Lagrange condition of a
    reduced energy exposed through `functional_and_gradient`.

2.  Verification of the separation-of-scales expansions
    (`verify_development`): embedding a profile on the cylinder through
    eta(n(t+x)) - eta(n(t-x)), evaluating the exact energy of the embedded
    field, and checking that the rescaled values approach the reduced energy
    at the predicted second-order rate in 1/n.

3.  A solver for the out-of-resonance component of the cylinder system at
    small amplitude (`range_solve`): closed form at delta = 0, a
    preconditioned Krylov-Newton iteration for delta > 0, small-divisor
    diagnostics, and a Monte-Carlo divisor sweep (`divisor_sweep`).

Throughout, odd 2*pi-periodic profiles are plain coefficient arrays b with
eta(t) = sum_{k>=1} b[k] sin(k t) and b[0] unused, matching `fourier`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.sparse.linalg as spla

from . import field2d, fourier
from .errors import ConvergenceError, CrossCheckError, DomainError, ResonanceError

TWO_PI = 2.0 * np.pi

EQUATION_TAGS = (
    "quartic_A",
    "cubic_sstar",
    "exterior_lambda",
    "pure_cubic",
    "nonlocal_only",
)


# ---------------------------------------------------------------------------
# profile equations in the sine basis


def _clean(b: np.ndarray) -> np.ndarray:
    b = np.asarray(b, dtype=float).copy()
    if b.ndim != 1 or len(b) < 2:
        raise DomainError("profile coefficients must be a 1D array, index 0 unused")
    b[0] = 0.0
    return b


def _grid_for(n: int) -> np.ndarray:
    m = 64
    while m < 6 * n + 2:
        m *= 2
    return fourier.grid(m)


def _mean_sq(b: np.ndarray) -> float:
    """<eta^2> by Parseval."""
    return 0.5 * float(np.sum(b[1:] ** 2))


def _mean_quartic(b: np.ndarray, t: np.ndarray) -> float:
    """<eta^4> by exact quadrature on a de-aliased grid."""
    vals = fourier.eval_sine(b, t)
    return float(np.mean(vals**4))


def _check_params(tag: str, params: Sequence[float]) -> tuple:
    if tag not in EQUATION_TAGS:
        raise DomainError(f"unknown equation tag {tag!r}")
    params = tuple(float(p) for p in params)
    if tag == "cubic_sstar":
        if len(params) != 2:
            raise DomainError("cubic_sstar needs (lambda, s_star)")
        if params[1] not in (1.0, -1.0):
            raise DomainError("s_star must be +-1")
    elif tag == "exterior_lambda":
        if len(params) != 1:
            raise DomainError("exterior_lambda needs (lambda,)")
    elif params:
        raise DomainError(f"{tag} takes no parameters")
    return params


def _residual_coeffs(tag: str, params: tuple, b: np.ndarray,
                     t: np.ndarray) -> np.ndarray:
    """Sine coefficients of the profile equation residual, index 0 unused."""
    n = len(b) - 1
    k2 = np.arange(n + 1, dtype=float) ** 2
    e2 = _mean_sq(b)
    if tag == "nonlocal_only":
        r = -k2 * b + e2 * b
        r[0] = 0.0
        return r
    vals = fourier.eval_sine(b, t)
    cube = fourier.sine_coeffs(vals**3, n)
    if tag == "quartic_A":
        e4 = float(np.mean(vals**4))
        a_coef = e4 + 3.0 * e2 * e2
        r = -k2 * b + a_coef * (3.0 * e2 * b + cube)
    elif tag == "cubic_sstar":
        lam, s_star = params
        r = s_star * k2 * b - e2 * b + lam * cube
    elif tag == "exterior_lambda":
        (lam,) = params
        r = -k2 * b + e2 * b + lam * cube
    else:  # pure_cubic
        r = -k2 * b + cube
    r[0] = 0.0
    return r


def _mult_matrix(w_cos: np.ndarray, n: int) -> np.ndarray:
    """Matrix of h -> sine coefficients of w(t) h for odd h, w even.

    w_cos holds the cosine coefficients of w (w = sum_m w_cos[m] cos(mt))
    up to index 2n at least.
    """
    k = np.arange(1, n + 1)
    diff = np.abs(k[:, None] - k[None, :])
    summ = k[:, None] + k[None, :]
    mat = 0.5 * (w_cos[diff] - w_cos[summ])
    mat[diff == 0] += 0.5 * w_cos[0]
    return mat


def ode_jacobian(tag: str, params: Sequence[float], b: np.ndarray) -> np.ndarray:
    """Jacobian of the residual coefficients with respect to b[1:].

    The multiplication part is assembled from cosine coefficients of the
    local coefficient function; the nonlocal averages contribute rank-one
    updates.  Shape (n, n) for n retained modes.
    """
    params = _check_params(tag, params)
    b = _clean(b)
    n = len(b) - 1
    t = _grid_for(n)
    k2 = np.arange(1, n + 1, dtype=float) ** 2
    e2 = _mean_sq(b)
    if tag == "nonlocal_only":
        return np.diag(-k2 + e2) + np.outer(b[1:], b[1:])
    vals = fourier.eval_sine(b, t)
    cube = fourier.sine_coeffs(vals**3, n)
    if tag == "quartic_A":
        e4 = float(np.mean(vals**4))
        a_coef = e4 + 3.0 * e2 * e2
        w_cos = fourier.cos_coeffs(3.0 * a_coef * (e2 + vals**2), 2 * n)
        jac = np.diag(-k2) + _mult_matrix(w_cos, n)
        s_i1 = 6.0 * (9.0 * e2 * e2 + e4) * b[1:] + 12.0 * e2 * cube[1:]
        s_i2 = 12.0 * e2 * b[1:] + 4.0 * cube[1:]
        jac += np.outer(s_i1, 0.5 * b[1:]) + np.outer(s_i2, 0.5 * cube[1:])
        return jac
    if tag == "cubic_sstar":
        lam, s_star = params
        w_cos = fourier.cos_coeffs(3.0 * lam * vals**2, 2 * n)
        return (np.diag(s_star * k2 - e2) + _mult_matrix(w_cos, n)
                - np.outer(b[1:], b[1:]))
    if tag == "exterior_lambda":
        (lam,) = params
        w_cos = fourier.cos_coeffs(3.0 * lam * vals**2, 2 * n)
        return (np.diag(-k2 + e2) + _mult_matrix(w_cos, n)
                + np.outer(b[1:], b[1:]))
    # pure_cubic
    w_cos = fourier.cos_coeffs(3.0 * vals**2, 2 * n)
    return np.diag(-k2) + _mult_matrix(w_cos, n)


def ode_newton(tag: str, params: Sequence[float], n_modes: int,
               guess: np.ndarray, tol: float = 1e-12,
               max_iter: int = 60) -> np.ndarray:
    """Newton solution of a reduced profile equation in the sine basis.

    Returns coefficients (length n_modes+1, index 0 unused) of the solution
    nearest the guess.  Full Newton steps with residual-norm backtracking
    (halving, at most 20 times).
    """
    params = _check_params(tag, params)
    if n_modes < 8:
        raise DomainError("need at least 8 sine modes")
    g = _clean(guess)
    b = np.zeros(n_modes + 1)
    m = min(len(g), n_modes + 1)
    b[:m] = g[:m]
    t = _grid_for(n_modes)

    r = _residual_coeffs(tag, params, b, t)
    nrm = float(np.linalg.norm(r[1:]))
    for _ in range(max_iter):
        if nrm < tol:
            return b
        jac = ode_jacobian(tag, params, b)
        try:
            step = np.linalg.solve(jac, -r[1:])
        except np.linalg.LinAlgError:
            sigma = float(np.linalg.svd(jac, compute_uv=False)[-1])
            raise ConvergenceError(
                f"singular Jacobian for {tag}: smallest singular value {sigma:.3e}"
            ) from None
        if not np.all(np.isfinite(step)):
            sigma = float(np.linalg.svd(jac, compute_uv=False)[-1])
            raise ConvergenceError(
                f"Jacobian solve failed for {tag}: smallest singular value {sigma:.3e}"
            )
        size = 1.0
        for _ in range(20):
            trial = b.copy()
            trial[1:] += size * step
            r_try = _residual_coeffs(tag, params, trial, t)
            nrm_try = float(np.linalg.norm(r_try[1:]))
            if nrm_try < nrm:
                b, r, nrm = trial, r_try, nrm_try
                break
            size *= 0.5
        else:
            raise ConvergenceError(
                f"{tag}: backtracking exhausted at residual {nrm:.3e}"
            )
    raise ConvergenceError(f"{tag}: no convergence after {max_iter} iterations")


def ode_residual_sup(tag: str, params: Sequence[float], b: np.ndarray,
                     n_grid: int = 4096) -> float:
    """Sup-norm of the profile equation residual on a dense grid."""
    params = _check_params(tag, params)
    b = _clean(b)
    t = fourier.grid(n_grid)
    e2 = _mean_sq(b)
    vals = fourier.eval_sine(b, t)
    acc = fourier.eval_sine_derivative(b, t, order=2)
    if tag == "quartic_A":
        e4 = float(np.mean(fourier.eval_sine(b, _grid_for(len(b) - 1)) ** 4))
        a_coef = e4 + 3.0 * e2 * e2
        r = acc + a_coef * (3.0 * e2 * vals + vals**3)
    elif tag == "cubic_sstar":
        lam, s_star = params
        r = -s_star * acc - e2 * vals + lam * vals**3
    elif tag == "exterior_lambda":
        (lam,) = params
        r = acc + e2 * vals + lam * vals**3
    elif tag == "pure_cubic":
        r = acc + vals**3
    else:
        r = acc + e2 * vals
    return float(np.max(np.abs(r)))


# ---------------------------------------------------------------------------
# reduced energies


def functional_and_gradient(tag: str, params: Sequence[float],
                            b: np.ndarray) -> tuple[float, np.ndarray]:
    """Reduced energy and its gradient in coefficient space.

    The critical points are exactly the ode_newton solutions: the gradient
    is (up to the tag's overall sign) pi times the residual coefficients.
    """
    params = _check_params(tag, params)
    b = _clean(b)
    n = len(b) - 1
    t = _grid_for(n)
    k2 = np.arange(n + 1, dtype=float) ** 2
    int_dot2 = np.pi * float(np.sum(k2 * b**2))
    int_sq = np.pi * float(np.sum(b[1:] ** 2))
    e2 = _mean_sq(b)
    vals = fourier.eval_sine(b, t)
    e4 = float(np.mean(vals**4))
    int_quartic = TWO_PI * e4

    if tag == "quartic_A":
        a_coef = e4 + 3.0 * e2 * e2
        value = 0.5 * int_dot2 - 0.25 * np.pi * a_coef**2
        sign = -1.0
    elif tag == "cubic_sstar":
        lam, s_star = params
        value = (0.5 * s_star * int_dot2 - int_sq**2 / (8.0 * np.pi)
                 + 0.25 * lam * int_quartic)
        sign = 1.0
    elif tag == "exterior_lambda":
        (lam,) = params
        value = (-0.5 * int_dot2 + int_sq**2 / (8.0 * np.pi)
                 + 0.25 * lam * int_quartic)
        sign = 1.0
    elif tag == "pure_cubic":
        value = -0.5 * int_dot2 + 0.25 * int_quartic
        sign = 1.0
    else:  # nonlocal_only
        value = -0.5 * int_dot2 + int_sq**2 / (8.0 * np.pi)
        sign = 1.0
    grad = sign * np.pi * _residual_coeffs(tag, params, b, t)
    return value, grad


def q_ratio(b: np.ndarray) -> float:
    """(int eta^2)^2 / (2 pi int eta^4), the compactness ratio in (0, 1)."""
    b = _clean(b)
    int_sq = np.pi * float(np.sum(b[1:] ** 2))
    if int_sq == 0.0:
        raise DomainError("q_ratio undefined for the zero profile")
    t = _grid_for(len(b) - 1)
    int_quartic = TWO_PI * float(np.mean(fourier.eval_sine(b, t) ** 4))
    return int_sq**2 / (TWO_PI * int_quartic)


def quartic_mean_pair(b: np.ndarray) -> float:
    """The combination 2(<eta^4> + 3 <eta^2>^2) entering the quartic limit."""
    b = _clean(b)
    t = _grid_for(len(b) - 1)
    e2 = _mean_sq(b)
    e4 = float(np.mean(fourier.eval_sine(b, t) ** 4))
    return 2.0 * (e4 + 3.0 * e2 * e2)


# ---------------------------------------------------------------------------
# x-dependent cubic coefficient ingestion


def cosine_fit_half_range(x: np.ndarray, values: np.ndarray,
                          max_modes: int = 32) -> np.ndarray:
    """Least-squares cosine coefficients q of f(x) = sum_m q[m] cos(m x) on (0, pi)."""
    x = np.asarray(x, dtype=float)
    values = np.asarray(values, dtype=float)
    if x.ndim != 1 or x.shape != values.shape or len(x) < 4:
        raise DomainError("need matching 1D sample arrays with at least 4 points")
    if np.any(x < 0.0) or np.any(x > np.pi):
        raise DomainError("sample abscissae must lie in [0, pi]")
    n_modes = int(min(max_modes, (len(x) - 1) // 2))
    design = np.cos(np.outer(x, np.arange(n_modes + 1)))
    q, *_ = np.linalg.lstsq(design, values, rcond=None)
    return q


def load_coefficient_samples(path: str, max_modes: int = 32) -> np.ndarray:
    """Read two-column text samples (x, value) and fit cosine modes on (0, pi)."""
    data = np.loadtxt(path)
    if data.ndim != 2 or data.shape[1] != 2:
        raise DomainError("coefficient sample file must have two columns: x value")
    return cosine_fit_half_range(data[:, 0], data[:, 1], max_modes)


# ---------------------------------------------------------------------------
# cylinder embeddings and pairings


def _embedded_power_cos(b: np.ndarray, power: int) -> np.ndarray:
    """Cosine picture (undilated labels) of (eta(t+x) - eta(t-x))^power, power even."""
    n = len(b) - 1
    band = power * n
    mt, mx = field2d.grid_sizes(band, band)
    vals = field2d.sine_to_grid(field2d.diagonal_embedding(b, 1), mt, mx)
    cos_part, _ = field2d.grid_to_parity(vals**power, band, band)
    return cos_part


def _embedded_integral_quartic(b: np.ndarray) -> float:
    """int over the cylinder of the embedded field to the 4th power."""
    c4 = _embedded_power_cos(b, 4)
    return TWO_PI * np.pi * float(c4[0, 0])


def kinetic_identity_error(b: np.ndarray, n: int) -> float:
    """Relative defect of the dilation identity |H_n v|^2 = n^2 |v|^2.

    Both sides evaluated from coefficients; zero up to rounding for any
    trigonometric-polynomial profile.
    """
    b = _clean(b)
    lhs = field2d.h1_seminorm_sq(field2d.diagonal_embedding(b, n))
    rhs = n * n * field2d.h1_seminorm_sq(field2d.diagonal_embedding(b, 1))
    return abs(lhs - rhs) / max(1.0, abs(rhs))


# ---------------------------------------------------------------------------
# development verification


@dataclass(frozen=True)
class DevelopmentReport:
    """Outcome of the separation-of-scales check for one profile.

    rescaled_values approach limit_value; deviations (after removing the
    oscillatory-coefficient contribution held in r3_values for the
    quadratic-cubic case) fit a power law n^(-fitted_exponent).
    """

    case: str
    n_values: tuple[int, ...]
    rescaled_values: tuple[float, ...]
    limit_value: float
    fitted_exponent: float
    beta: float
    remainder_coefficient: float
    kinetic_error: float
    r3_values: tuple[float, ...]

    def as_dict(self) -> dict:
        return {
            "case": self.case,
            "n_values": list(self.n_values),
            "rescaled_values": list(self.rescaled_values),
            "limit_value": self.limit_value,
            "fitted_exponent": self.fitted_exponent,
            "beta": self.beta,
            "remainder_coefficient": self.remainder_coefficient,
            "kinetic_error": self.kinetic_error,
            "r3_values": list(self.r3_values),
        }


def _fit_exponent(n_values: np.ndarray, deviations: np.ndarray,
                  scale: float) -> float:
    keep = deviations > 1e-14 * max(1.0, abs(scale))
    if int(np.sum(keep)) < 2:
        # already at rounding level for every n: the rate claim is settled
        return 2.0
    slope, _ = np.polyfit(np.log(n_values[keep]), np.log(deviations[keep]), 1)
    return float(-slope)


def cubic_reduction_constants(a2: float, a3_mean: float) -> tuple[float, float, float]:
    """(alpha, gamma, beta) of the reduced cubic energy for given coefficients."""
    alpha = (9.0 * a3_mean - np.pi**2 * a2**2) / 12.0
    gamma = 0.5 * np.pi * a3_mean
    if alpha != 0.0:
        beta = 1.0 / np.sqrt(2.0 * abs(alpha))
    elif gamma > 0.0:
        beta = np.sqrt(np.pi / gamma)
    else:
        raise DomainError("reduced energy degenerate: alpha = 0 and gamma <= 0")
    return alpha, gamma, beta


def verify_development(case: str, b: np.ndarray, n_values: Sequence[int], *,
                       a4: float = 1.0, a2: float = 1.0,
                       a3_cos: Optional[np.ndarray] = None,
                       s_star: int = -1) -> DevelopmentReport:
    """Check the small-wavelength expansion of the cylinder energy.

    Embeds the profile at each dilation n, evaluates the exact energy of the
    scaled field, and verifies that the rescaled values approach the reduced
    energy like 1/n^2.  For the quadratic-cubic case the contribution of the
    non-constant cubic coefficient modes (which dies out once n exceeds their
    bandwidth) is computed exactly and reported separately.
    """
    if case not in ("quartic", "quadratic_cubic"):
        raise DomainError(f"unknown development case {case!r}")
    b = _clean(b)
    n_values = tuple(int(n) for n in n_values)
    if len(n_values) < 3 or any(n < 1 for n in n_values):
        raise DomainError("need at least three positive dilation orders")
    if s_star not in (1, -1):
        raise DomainError("s_star must be +-1")

    k2 = np.arange(len(b), dtype=float) ** 2
    int_dot2 = np.pi * float(np.sum(k2 * b**2))
    int_sq = np.pi * float(np.sum(b[1:] ** 2))
    t = _grid_for(len(b) - 1)
    vals = fourier.eval_sine(b, t)
    e2 = _mean_sq(b)
    e4 = float(np.mean(vals**4))
    int_quartic = TWO_PI * e4

    kin_err = max(kinetic_identity_error(b, n) for n in n_values)

    rescaled = []
    r3_list: list[float] = []
    if case == "quartic":
        if a4 == 0.0:
            raise DomainError("quartic case needs a4 != 0")
        beta = (3.0 / (np.pi**2 * a4**2)) ** (1.0 / 6.0)
        remainder_coef = a4**2 * beta**6 / (8.0 * np.pi)
        a_coef = e4 + 3.0 * e2 * e2
        limit = 0.5 * int_dot2 - 0.25 * np.pi * a_coef**2
        c4 = _embedded_power_cos(b, 4)
        for n in n_values:
            pair = field2d.box_pair_even(c4, dilation=n)
            amp = beta * n ** (1.0 / 3.0)
            kinetic = 0.5 * amp**2 * field2d.h1_seminorm_sq(
                field2d.diagonal_embedding(b, n))
            value = kinetic - 0.5 * a4**2 * amp**8 * pair
            rescaled.append(value / (4.0 * np.pi * beta**2 * n ** (8.0 / 3.0)))
        deviations = np.array([abs(v - limit) for v in rescaled])
    else:
        q = (np.asarray(a3_cos, dtype=float)
             if a3_cos is not None else np.zeros(1))
        if q.ndim != 1 or len(q) < 1:
            raise DomainError("cubic coefficient modes must be a 1D array")
        alpha, gamma, beta = cubic_reduction_constants(a2, float(q[0]))
        remainder_coef = a2**2 * beta**2 / (8.0 * np.pi)
        limit = (0.5 * s_star * int_dot2
                 + beta**2 / (4.0 * np.pi) * (alpha * int_sq**2
                                              + gamma * int_quartic))
        c2 = _embedded_power_cos(b, 2)
        c4 = _embedded_power_cos(b, 4)
        band = c4.shape[1] - 1
        devs = []
        for n in n_values:
            pair = field2d.box_pair_even(c2, dilation=n)
            amp = beta * n
            kinetic = 0.5 * s_star * amp**2 * field2d.h1_seminorm_sq(
                field2d.diagonal_embedding(b, n))
            quartic_mean = 0.25 * amp**4 * float(q[0]) * (
                TWO_PI * np.pi * c4[0, 0])
            # cosine modes of the cubic coefficient hit the embedded field
            # only at multiples of n
            osc = 0.0
            for a_idx in range(1, band + 1):
                mode = n * a_idx
                if mode < len(q) and q[mode] != 0.0:
                    osc += c4[0, a_idx] * q[mode]
            r3_term = 0.25 * amp**4 * TWO_PI * 0.5 * np.pi * osc
            value = (kinetic - 0.5 * a2**2 * amp**4 * pair
                     + quartic_mean + r3_term)
            scale = 4.0 * np.pi * beta**2 * n**4
            rescaled.append(value / scale)
            r3_list.append(r3_term / scale)
            devs.append(abs(rescaled[-1] - r3_list[-1] - limit))
        deviations = np.array(devs)

    exponent = _fit_exponent(np.array(n_values, dtype=float), deviations,
                             abs(limit))
    if not 1.7 <= exponent <= 2.3:
        raise CrossCheckError(
            f"remainder exponent {exponent:.3f} outside [1.7, 2.3] "
            f"for case {case!r}"
        )
    return DevelopmentReport(
        case=case,
        n_values=n_values,
        rescaled_values=tuple(float(v) for v in rescaled),
        limit_value=float(limit),
        fitted_exponent=exponent,
        beta=float(beta),
        remainder_coefficient=float(remainder_coef),
        kinetic_error=float(kin_err),
        r3_values=tuple(float(v) for v in r3_list),
    )


# ---------------------------------------------------------------------------
# finite-dilation diagonal solve (sharpening the embedded profile)


def _diag_gradient_quartic(B: np.ndarray, n: int, a4: float,
                           j_pair: int) -> np.ndarray:
    nb = len(B) - 1
    band = 4 * nb
    mt, mx = field2d.grid_sizes(band, band)
    v_vals = field2d.sine_to_grid(field2d.diagonal_embedding(B, 1), mt, mx)
    cube = v_vals**3
    c4, _ = field2d.grid_to_parity(v_vals**4, band, band)
    tg = fourier.grid(mt)[:, None]
    xg = fourier.grid(mx)[None, :]
    grad = np.zeros(nb + 1)
    for k in range(1, nb + 1):
        phi = 2.0 * np.cos(k * tg) * np.sin(k * xg)
        ck, _ = field2d.grid_to_parity(cube * phi, band, band)
        pair_k = field2d.box_pair_even_bilinear(ck, c4, n, j_pair)
        grad[k] = 4.0 * np.pi**2 * n * n * k * k * B[k] - 4.0 * a4**2 * pair_k
    return grad


def _diag_gradient_cubic(B: np.ndarray, n: int, a2: float, q: np.ndarray,
                         s_star: int, j_pair: int) -> np.ndarray:
    nb = len(B) - 1
    band = 4 * nb
    mt, mx = field2d.grid_sizes(band, band)
    v_vals = field2d.sine_to_grid(field2d.diagonal_embedding(B, 1), mt, mx)
    c2, _ = field2d.grid_to_parity(v_vals**2, 2 * nb, 2 * nb)
    tg = fourier.grid(mt)[:, None]
    xg = fourier.grid(mx)[None, :]
    grad = np.zeros(nb + 1)
    for k in range(1, nb + 1):
        phi = 2.0 * np.cos(k * tg) * np.sin(k * xg)
        ck2, _ = field2d.grid_to_parity(v_vals * phi, 2 * nb, 2 * nb)
        pair_k = field2d.box_pair_even_bilinear(ck2, c2, n, j_pair)
        ck4, _ = field2d.grid_to_parity(v_vals**3 * phi, band, band)
        cubic_term = TWO_PI * np.pi * float(q[0]) * ck4[0, 0]
        for a_idx in range(1, band + 1):
            mode = n * a_idx
            if mode < len(q) and q[mode] != 0.0:
                cubic_term += TWO_PI * 0.5 * np.pi * ck4[0, a_idx] * q[mode]
        grad[k] = (s_star * 4.0 * np.pi**2 * n * n * k * k * B[k]
                   - 2.0 * a2**2 * pair_k + cubic_term)
    return grad


def _diag_hessian_cubic(B: np.ndarray, n: int, a2: float, q: np.ndarray,
                        s_star: int, j_pair: int) -> np.ndarray:
    """Exact second derivative of the diagonal energy, cubic case.

    The nonlocal block needs two pairings per mode pair; the products of two
    test functions expand into four cosine harmonics, so those pairings
    reduce to gathers from two precomputed kernels.
    """
    nb = len(B) - 1
    band2 = 2 * nb
    mt, mx = field2d.grid_sizes(band2, band2)
    v_vals = field2d.sine_to_grid(field2d.diagonal_embedding(B, 1), mt, mx)
    c2, _ = field2d.grid_to_parity(v_vals**2, band2, band2)

    jj = np.arange(j_pair + 1, dtype=float)[:, None]
    aa = n * np.arange(band2 + 1, dtype=float)[None, :]
    parity = 1.0 - (-1.0) ** (jj + aa)
    with np.errstate(divide="ignore", invalid="ignore"):
        tt = (2.0 / np.pi) * jj * parity / (jj * jj - aa * aa)
    tt[np.isnan(tt) | np.isinf(tt)] = 0.0
    tt[0, :] = 0.0

    l_labels = n * np.arange(band2 + 1)
    jsq = np.arange(j_pair + 1, dtype=float)[None, :] ** 2
    denom = jsq - (l_labels.astype(float)[:, None]) ** 2
    with np.errstate(divide="ignore"):
        inv = np.where(denom != 0.0, 1.0 / denom, 0.0)
    w_row = np.where(l_labels == 0, TWO_PI, np.pi) * (np.pi / 2.0)

    proj_c2 = c2 @ tt.T
    kernel = ((proj_c2 * inv) @ tt) * w_row[:, None]

    # x-integrals of the coefficient against cos(n m x)
    q_at = np.zeros(2 * band2 + 1)
    q_at[0] = np.pi * float(q[0])
    for m in range(1, 2 * band2 + 1):
        if n * m < len(q):
            q_at[m] = 0.5 * np.pi * float(q[n * m])
    t_int = np.where(np.arange(band2 + 1) == 0, TWO_PI, np.pi)
    a_prime = np.arange(band2 + 1)
    coeff_kernel = np.zeros((band2 + 1, band2 + 1))
    for ae in range(band2 + 1):
        w_x = 0.5 * (q_at[a_prime + ae] + q_at[np.abs(a_prime - ae)])
        coeff_kernel[:, ae] = t_int * (c2 @ w_x)

    tg = fourier.grid(mt)[:, None]
    xg = fourier.grid(mx)[None, :]
    stacked = np.empty((nb, band2 + 1, j_pair + 1))
    for k in range(1, nb + 1):
        phi = 2.0 * np.cos(k * tg) * np.sin(k * xg)
        ck2, _ = field2d.grid_to_parity(v_vals * phi, band2, band2)
        stacked[k - 1] = ck2 @ tt.T
    weighted = stacked * (w_row[:, None] * inv)[None, :, :]
    p_two = np.einsum("klj,alj->ka", stacked, weighted)

    idx = np.arange(1, nb + 1)
    diff = np.abs(idx[:, None] - idx[None, :])
    summ = idx[:, None] + idx[None, :]
    p_one = (kernel[diff, diff] - kernel[diff, summ]
             + kernel[summ, diff] - kernel[summ, summ])
    a_term = 3.0 * (coeff_kernel[diff, diff] - coeff_kernel[diff, summ]
                    + coeff_kernel[summ, diff] - coeff_kernel[summ, summ])
    hess = -2.0 * a2**2 * (p_one + 2.0 * p_two) + a_term
    hess[np.diag_indices(nb)] += s_star * 4.0 * np.pi**2 * n * n * idx**2
    return hess


def _diag_newton(grad_fn: Callable[[np.ndarray], np.ndarray], b0: np.ndarray,
                 tol: float = 1e-9, max_iter: int = 40,
                 hess_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                 ) -> np.ndarray:
    """Damped Newton on the diagonal-energy gradient.

    The Jacobian is the analytic Hessian when provided, otherwise forward
    differences rebuilt at every iterate.  With an accurate Jacobian the
    Newton direction is a descent direction for the gradient norm, so halving
    the step until the norm drops cannot stall away from a critical point.
    """
    B = b0.copy()
    g = grad_fn(B)
    nrm = float(np.linalg.norm(g[1:]))
    nb = len(B) - 1
    for _ in range(max_iter):
        if nrm < tol:
            return B
        if hess_fn is not None:
            jac = hess_fn(B)
        else:
            jac = np.zeros((nb, nb))
            h = 1e-7 * max(1.0, float(np.max(np.abs(B))))
            for a in range(1, nb + 1):
                bp = B.copy()
                bp[a] += h
                jac[:, a - 1] = (grad_fn(bp)[1:] - g[1:]) / h
        try:
            step = np.linalg.solve(jac, -g[1:])
        except np.linalg.LinAlgError:
            raise ConvergenceError("diagonal-energy Jacobian is singular") from None
        size, accepted = 1.0, False
        for _ in range(25):
            trial = B.copy()
            trial[1:] += size * step
            g_try = grad_fn(trial)
            nrm_try = float(np.linalg.norm(g_try[1:]))
            if nrm_try < nrm:
                B, g, nrm = trial, g_try, nrm_try
                accepted = True
                break
            size *= 0.5
        if not accepted:
            raise ConvergenceError(
                f"diagonal solve stalled at gradient norm {nrm:.3e}"
            )
    raise ConvergenceError(f"diagonal solve: no convergence, gradient {nrm:.3e}")


def solve_zeroth_order(case: str, b_seed: np.ndarray, n: int, *,
                       a4: float = 1.0, a2: float = 1.0,
                       a3_cos: Optional[np.ndarray] = None, s_star: int = -1,
                       n_modes: Optional[int] = None,
                       j_pair: Optional[int] = None) -> np.ndarray:
    """Diagonal coefficients B of the finite-n leading-order field.

    The field is v = sum_k 2 B[k] cos(nkt) sin(nkx).  The seed profile is
    scaled by the case's amplitude law and then corrected by Newton on the
    exact diagonal energy, absorbing the finite-n remainder that the limit
    profile leaves behind.
    """
    b_seed = _clean(b_seed)
    if n < 1:
        raise DomainError("dilation order must be a positive integer")
    scale = float(np.max(np.abs(b_seed)))
    if scale == 0.0:
        raise DomainError("zero seed profile")
    if n_modes is None:
        big = np.nonzero(np.abs(b_seed) > 1e-12 * scale)[0]
        n_modes = int(min(max(big[-1], 8), 32))
    if case == "quartic":
        # The paired source decays like 1/j^5 in the transverse index, so a
        # short cutoff already reproduces the j -> infinity gradient to
        # machine accuracy.
        if j_pair is None:
            j_pair = 1024
        beta = (3.0 / (np.pi**2 * a4**2)) ** (1.0 / 6.0)
        amp = beta * n ** (1.0 / 3.0)
        grad_fn = lambda B: _diag_gradient_quartic(B, n, a4, j_pair)
        hess_fn = None
    elif case == "quadratic_cubic":
        # Slower 1/j^3 tail here, keep a longer cutoff.
        if j_pair is None:
            j_pair = 2048
        q = (np.asarray(a3_cos, dtype=float)
             if a3_cos is not None else np.zeros(1))
        _, _, beta = cubic_reduction_constants(a2, float(q[0]))
        amp = beta * n
        grad_fn = lambda B: _diag_gradient_cubic(B, n, a2, q, s_star, j_pair)
        hess_fn = lambda B: _diag_hessian_cubic(B, n, a2, q, s_star, j_pair)
    else:
        raise DomainError(f"unknown case {case!r}")
    B0 = np.zeros(n_modes + 1)
    m = min(len(b_seed), n_modes + 1)
    B0[:m] = amp * b_seed[:m]
    # B = 0 solves the diagonal system and attracts Newton once the iterate
    # enters the region where the linear term dominates; retry from rescaled
    # seeds rather than return the trivial branch.  At low dilation order the
    # true amplitudes sit well above the asymptotic seed, hence the large
    # factors late in the ladder.
    floor = 0.1 * float(np.linalg.norm(B0[1:]))
    last_error: Optional[ConvergenceError] = None
    B: Optional[np.ndarray] = None
    for factor in (1.0, 1.2, 1.5, 0.8, 1.8, 2.2):
        try:
            cand = _diag_newton(grad_fn, factor * B0, hess_fn=hess_fn)
        except ConvergenceError as err:
            last_error = err
            continue
        if float(np.linalg.norm(cand[1:])) >= floor:
            B = cand
            break
    if B is None:
        if last_error is not None:
            raise last_error
        raise ConvergenceError(
            "diagonal polish collapsed to the trivial solution; the "
            "asymptotic seed is outside the nontrivial basin at this "
            "dilation order"
        )
    # The solved spectrum can be fatter than the seed's.  Enlarge the
    # truncation while the gradient leaks past it, re-solving warm.
    for _ in range(4):
        nb_cur = len(B) - 1
        if nb_cur >= 48:
            break
        ext = np.zeros(min(nb_cur + 8, 48) + 1)
        ext[:len(B)] = B
        tail = float(np.sum(np.abs(grad_fn(ext)[len(B):])))
        if tail < 1e-8:
            break
        B = _diag_newton(grad_fn, ext, hess_fn=hess_fn)
    return B


# ---------------------------------------------------------------------------
# range equation on the cylinder


@dataclass(frozen=True)
class RangeSolveReport:
    """Result of one out-of-resonance solve at fixed amplitude parameter.

    newton_residuals are coefficient 2-norms of the truncated system and must
    decrease monotonically.  range_residual_sup is the sup of the solved
    (truncated) equation's residual field; bifurcation_residual_sup is the sup
    of the diagonal equation's residual with the computed correction
    substituted; projection_defect_sup bounds the forcing content the
    truncation discards (coefficient l1 norm of the leading dropped block).
    """

    case: str
    delta: float
    omega: float
    n: int
    truncation: tuple[int, int]
    min_divisor: float
    min_divisor_mode: tuple[int, int]
    newton_iterations: int
    newton_residuals: tuple[float, ...]
    range_residual_sup: float
    bifurcation_residual_sup: float
    projection_defect_sup: float
    v_diagonal: np.ndarray
    w: field2d.FourierSeries2D

    @property
    def residual_sup(self) -> float:
        return max(self.range_residual_sup, self.bifurcation_residual_sup)

    def as_dict(self) -> dict:
        return {
            "case": self.case,
            "delta": self.delta,
            "omega": self.omega,
            "n": self.n,
            "truncation": list(self.truncation),
            "min_divisor": self.min_divisor,
            "min_divisor_mode": list(self.min_divisor_mode),
            "newton_iterations": self.newton_iterations,
            "newton_residuals": list(self.newton_residuals),
            "range_residual_sup": self.range_residual_sup,
            "bifurcation_residual_sup": self.bifurcation_residual_sup,
            "projection_defect_sup": self.projection_defect_sup,
            "residual_sup": self.residual_sup,
        }


def infer_quadratic_mean(lam: float, a2: float = 1.0) -> float:
    """Mean cubic coefficient reproducing a given reduced ratio (inner branch).

    Inverts lam = gamma / (2 pi |alpha|) with alpha < 0 at fixed a2.
    """
    if lam is None or lam <= 0.0:
        raise DomainError("need a positive reduced ratio")
    return np.pi**2 * a2**2 * lam / (9.0 * lam + 3.0)


def _a3_values(q: np.ndarray, mx: int) -> np.ndarray:
    xg = fourier.grid(mx)
    modes = np.arange(len(q))
    return (q @ np.cos(np.outer(modes, xg)))[None, :]


def _w_mask(l_max: int, j_max: int) -> np.ndarray:
    mask = np.ones((l_max + 1, j_max + 1), dtype=bool)
    mask[:, 0] = False
    idx = np.arange(1, min(l_max, j_max) + 1)
    mask[idx, idx] = False
    return mask


def _project_rows(values: np.ndarray, l_max: int, j_max: int,
                  t_j: np.ndarray) -> np.ndarray:
    """Dirichlet-basis rows (l <= l_max, j <= j_max) of a grid sample array."""
    mx = values.shape[1]
    cos_part, sin_part = field2d.grid_to_parity(values, l_max, mx // 2 - 1)
    return cos_part @ t_j.T + sin_part[:, : j_max + 1]


def _closed_form_w(case: str, B: np.ndarray, n: int, a4: float, a2: float,
                   j_tail: int) -> tuple[field2d.FourierSeries2D, float]:
    """Amplitude-zero correction and the l1 size of its dropped sine tail."""
    power, coef = (4, a4) if case == "quartic" else (2, a2)
    nb = len(B) - 1
    band = power * n * nb
    mt, mx = field2d.grid_sizes(band, band)
    vals = field2d.sine_to_grid(field2d.diagonal_embedding(B, n), mt, mx) ** power
    cos_part, _ = field2d.grid_to_parity(vals, band, band)
    rows = field2d.sine_from_even(cos_part, 2 * j_tail)
    tail = float(np.sum(np.abs(coef * rows[:, j_tail + 1 :])))
    series = field2d.FourierSeries2D(rows[:, : j_tail + 1])
    w = field2d.box_inverse(field2d.project_w(series))
    return field2d.FourierSeries2D(-coef * w.coeffs), tail


def _bifurcation_residual(case: str, B: np.ndarray, n: int, delta: float,
                          w: field2d.FourierSeries2D, *, a4: float, a2: float,
                          q: np.ndarray, s_star: int) -> float:
    """Sup-norm of the diagonal equation residual at the computed correction."""
    nb = len(B) - 1
    lw, jw = w.l_max, w.j_max
    qband = len(q) - 1 if case != "quartic" else 0
    if case == "quartic":
        if delta == 0.0:
            band_t, band_x = 3 * n * nb + lw, 3 * n * nb + jw
        else:
            band_t = max(3 * n * nb + lw, 4 * lw)
            band_x = max(3 * n * nb + jw, 4 * jw)
    else:
        if delta == 0.0:
            band_t = max(n * nb + lw, 3 * n * nb)
            band_x = max(n * nb + jw, 3 * n * nb + qband)
        else:
            band_t = 3 * max(n * nb, lw)
            band_x = 3 * max(n * nb, jw) + qband
    mt, mx = field2d.grid_sizes(band_t, band_x)
    v_vals = field2d.sine_to_grid(field2d.diagonal_embedding(B, n), mt, mx)
    w_vals = field2d.parity_to_grid(None, w.coeffs, mt, mx)
    if case == "quartic":
        d3 = delta**3
        z = a4 * w_vals * (4.0 * v_vals**3 + d3 * w_vals * (
            6.0 * v_vals**2 + d3 * w_vals * (4.0 * v_vals + d3 * w_vals)))
        sign = 1.0
    else:
        a3v = _a3_values(q, mx)
        u = v_vals + delta * w_vals
        z = (2.0 * a2 * v_vals * w_vals + delta * a2 * w_vals**2
             + a3v * u**3)
        sign = float(s_star)
    l_rep = min(n * (2 * nb + 8), mt // 2 - 1, mx // 2 - 1)
    cos_z, sin_z = field2d.grid_to_parity(z, l_rep, mx // 2 - 1)
    t_rows = field2d.coupling_matrix(l_rep, mx // 2 - 1)
    coeffs = np.zeros(l_rep + 1)
    for l in range(1, l_rep + 1):
        zhat = float(cos_z[l] @ t_rows[l]) + float(sin_z[l, l])
        bk = B[l // n] if (l % n == 0 and l // n <= nb) else 0.0
        coeffs[l] = -sign * 4.0 * l * l * bk - zhat
    theta = fourier.grid(1 << 14)
    wave = 0.5 * fourier.eval_sine(coeffs, theta)
    return float(np.max(wave) - np.min(wave))


def _range_newton(case: str, B: np.ndarray, n: int, delta: float, omega: float,
                  truncation: tuple[int, int], *, a4: float, a2: float,
                  q: np.ndarray, newton_tol: float, max_newton: int,
                  ) -> tuple[field2d.FourierSeries2D, list[float], float, float]:
    """Krylov-Newton for the off-diagonal component at delta > 0."""
    l_max, j_max = truncation
    nb = len(B) - 1
    qband = len(q) - 1 if case != "quartic" else 0
    power = 4 if case == "quartic" else 3
    band_t = power * max(n * nb, l_max)
    band_x = power * max(n * nb, j_max) + qband
    mt, mx = field2d.grid_sizes(band_t, band_x)
    v_vals = field2d.sine_to_grid(field2d.diagonal_embedding(B, n), mt, mx)
    a3v = _a3_values(q, mx) if case != "quartic" else None
    t_j = field2d.coupling_matrix(j_max, mx // 2 - 1)
    mask = _w_mask(l_max, j_max)
    mult = field2d.wave_multipliers(l_max, j_max, omega)
    n_dof = int(np.sum(mask))

    def forcing(w_grid: np.ndarray) -> np.ndarray:
        if case == "quartic":
            u = v_vals + delta**3 * w_grid
            p = a4 * u**4
        else:
            u = v_vals + delta * w_grid
            p = a2 * u**2 + delta * a3v * u**3
        return _project_rows(p, l_max, j_max, t_j)

    def synth(wc: np.ndarray) -> np.ndarray:
        return field2d.parity_to_grid(None, wc, mt, mx)

    # amplitude-zero closed form as the seed
    p0 = forcing(np.zeros((mt, mx)))
    wc = np.zeros((l_max + 1, j_max + 1))
    wc[mask] = p0[mask] / mult[mask]
    p_scale = max(1.0, float(np.linalg.norm(p0[mask])))

    residuals: list[float] = []
    for iteration in range(max_newton):
        w_grid = synth(wc)
        p_rows = forcing(w_grid)
        res = np.where(mask, mult * wc - p_rows, 0.0)
        rn = float(np.linalg.norm(res[mask]))
        residuals.append(rn)
        if rn < newton_tol * p_scale:
            break
        if case == "quartic":
            u = v_vals + delta**3 * w_grid
            slope_vals = 4.0 * a4 * delta**3 * u**3
        else:
            u = v_vals + delta * w_grid
            slope_vals = delta * (2.0 * a2 * u + 3.0 * delta * a3v * u**2)

        def matvec(h_flat: np.ndarray) -> np.ndarray:
            hc = np.zeros((l_max + 1, j_max + 1))
            hc[mask] = h_flat
            h_grid = synth(hc)
            rows = _project_rows(slope_vals * h_grid, l_max, j_max, t_j)
            return (mult * hc - rows)[mask]

        op = spla.LinearOperator((n_dof, n_dof), matvec=matvec)
        precond = spla.LinearOperator(
            (n_dof, n_dof), matvec=lambda x: x / mult[mask])
        step, info = spla.gmres(op, -res[mask], M=precond, rtol=1e-12,
                                atol=1e-14 * p_scale, restart=80, maxiter=400)
        if info != 0:
            raise ConvergenceError(
                f"Krylov solve stalled at Newton step {iteration} (info={info})"
            )
        wc = wc.copy()
        wc[mask] += step
    else:
        raise ConvergenceError(
            f"range Newton did not reach tolerance; last residual {residuals[-1]:.3e}"
        )

    # sup of the solved (truncated) system's residual field
    w_grid = synth(wc)
    p_rows = forcing(w_grid)
    res = np.where(mask, mult * wc - p_rows, 0.0)
    mt_s, mx_s = field2d.grid_sizes(l_max, j_max)
    range_sup = float(np.max(np.abs(
        field2d.parity_to_grid(None, res, mt_s, mx_s))))

    # leading forcing content beyond the truncation (l1 bound)
    l_big = min(2 * l_max, mt // 2 - 1)
    j_big = min(2 * j_max, mx // 2 - 1)
    t_big = field2d.coupling_matrix(j_big, mx // 2 - 1)
    if case == "quartic":
        u = v_vals + delta**3 * w_grid
        p_full = a4 * u**4
    else:
        u = v_vals + delta * w_grid
        p_full = a2 * u**2 + delta * a3v * u**3
    rows_big = _project_rows(p_full, l_big, j_big, t_big)
    rows_big[: l_max + 1, : j_max + 1] = 0.0
    defect = float(np.sum(np.abs(rows_big)))

    return field2d.FourierSeries2D(wc), residuals, range_sup, defect


def range_solve(profile, delta: float, n: int = 1,
                truncation: tuple[int, int] = (64, 64), *,
                a4: float = 1.0, a2: float = 1.0,
                a3_cos: Optional[np.ndarray] = None,
                polish_modes: Optional[int] = None, j_tail: int = 2048,
                newton_tol: float = 1e-13, max_newton: int = 12,
                divisor_floor: float = 1e-6) -> RangeSolveReport:
    """Solve the off-diagonal component of the cylinder system at one delta.

    At delta = 0 the correction has the exact closed form (inverse wave
    operator applied to the embedded profile's power) and the solve is a
    substitution; for delta > 0 a preconditioned Krylov-Newton iteration is
    run on the truncated system.  Divisors |omega^2 l^2 - j^2| below
    divisor_floor abort with the offending mode pair: such amplitudes belong
    to the excluded resonant set, and refusing them is the intended outcome.

    The diagonal field is the profile sharpened at finite n by
    solve_zeroth_order, so the reported diagonal-equation residual reflects
    the amplitude terms alone, not limit-profile bias.
    """
    from . import bifurcation

    delta = float(delta)
    if delta < 0.0:
        raise DomainError("delta must be nonnegative")
    if n < 1:
        raise DomainError("dilation order must be a positive integer")
    l_max, j_max = int(truncation[0]), int(truncation[1])
    if l_max < 8 or j_max < 8:
        raise DomainError("truncation must retain at least 8 modes each way")

    case = profile.case
    if case == "quartic":
        omega = bifurcation.frequency_map(delta, "quartic")
        s_star = 1
        q = np.zeros(1)
    elif case == "quadratic_cubic":
        s_star = profile.s_star
        omega = bifurcation.frequency_map(delta, "quadratic_cubic", s_star)
        if a3_cos is not None:
            q = np.asarray(a3_cos, dtype=float)
            if q.ndim != 1 or len(q) < 1:
                raise DomainError("cubic coefficient modes must be a 1D array")
            alpha, gamma, _ = cubic_reduction_constants(a2, float(q[0]))
            lam_implied = gamma / (TWO_PI * abs(alpha)) if alpha != 0.0 else None
            if (profile.lam is not None and lam_implied is not None
                    and abs(lam_implied - profile.lam)
                    > 1e-8 * max(1.0, abs(profile.lam))):
                raise DomainError(
                    f"coefficients imply reduced ratio {lam_implied!r}, "
                    f"profile carries {profile.lam!r}"
                )
        else:
            q = np.array([infer_quadratic_mean(profile.lam, a2)])
    else:
        raise DomainError(
            f"amplitude continuation supports the quartic and quadratic-cubic "
            f"branches, not {case!r}"
        )

    min_div, pair = field2d.min_small_divisor(l_max, j_max, omega)
    if min_div < divisor_floor:
        raise ResonanceError(
            f"divisor {min_div:.3e} at mode (l, j) = {pair} below "
            f"{divisor_floor:.1e}; this amplitude is resonant and excluded",
            pair, min_div,
        )

    b_seed = fourier.sine_coeffs(profile.g(fourier.grid(1024)), 48)
    B = solve_zeroth_order(case, b_seed, n, a4=a4, a2=a2, a3_cos=q,
                           s_star=s_star, n_modes=polish_modes)

    if delta == 0.0:
        w, defect = _closed_form_w(case, B, n, a4, a2, j_tail)
        mult = field2d.wave_multipliers(w.l_max, w.j_max, 1.0)
        coef = a4 if case == "quartic" else a2
        power = 4 if case == "quartic" else 2
        nb = len(B) - 1
        band = power * n * nb
        mt, mx = field2d.grid_sizes(band, band)
        vals = field2d.sine_to_grid(
            field2d.diagonal_embedding(B, n), mt, mx) ** power
        cos_part, _ = field2d.grid_to_parity(vals, band, band)
        rows = coef * field2d.sine_from_even(cos_part, w.j_max)
        res = mult * w.coeffs - np.where(_w_mask(w.l_max, w.j_max), rows, 0.0)
        newton_residuals = [float(np.linalg.norm(res))]
        mt_s, mx_s = field2d.grid_sizes(w.l_max, 256)
        range_sup = float(np.max(np.abs(field2d.parity_to_grid(
            None, res[:, :257], mt_s, mx_s))))
        iterations = 0
    else:
        w, newton_residuals, range_sup, defect = _range_newton(
            case, B, n, delta, omega, (l_max, j_max), a4=a4, a2=a2, q=q,
            newton_tol=newton_tol, max_newton=max_newton)
        iterations = len(newton_residuals) - 1

    bif_sup = _bifurcation_residual(case, B, n, delta, w, a4=a4, a2=a2, q=q,
                                    s_star=s_star)
    return RangeSolveReport(
        case=case,
        delta=delta,
        omega=float(omega),
        n=n,
        truncation=(l_max, j_max),
        min_divisor=float(min_div),
        min_divisor_mode=pair,
        newton_iterations=iterations,
        newton_residuals=tuple(newton_residuals),
        range_residual_sup=range_sup,
        bifurcation_residual_sup=bif_sup,
        projection_defect_sup=float(defect),
        v_diagonal=B,
        w=w,
    )


def divisor_sweep(case: str, delta_max: float, *, s_star: Optional[int] = None,
                  truncation: tuple[int, int] = (64, 64), levels: int = 5,
                  samples: int = 400, seed: int = 0,
                  threshold: float = 1e-3) -> list[dict]:
    """Monte-Carlo fraction of non-resonant amplitudes on shrinking intervals.

    For each level i the amplitude parameter is sampled uniformly on
    (0, delta_max / 2^i] and the fraction whose minimal divisor clears the
    threshold is recorded.  The fractions approach 1 as the interval
    shrinks; nothing quantitative is claimed beyond that trend.
    """
    from . import bifurcation

    if delta_max <= 0.0:
        raise DomainError("delta_max must be positive")
    if levels < 2 or samples < 10:
        raise DomainError("need at least 2 levels and 10 samples per level")
    # validate the largest amplitude up front
    bifurcation.frequency_map(delta_max, case, s_star)

    l_max, j_max = truncation
    l_sq = np.arange(l_max + 1, dtype=float)[None, :, None] ** 2
    j_sq = np.arange(j_max + 1, dtype=float)[None, None, :] ** 2
    mask = _w_mask(l_max, j_max)[None, :, :]

    rng = np.random.default_rng(seed)
    out = []
    for level in range(levels):
        upper = delta_max / 2.0**level
        ds = rng.uniform(0.0, upper, samples)
        if case == "quartic":
            om_sq = 1.0 - 2.0 * ds**6
        else:
            om_sq = 1.0 - 2.0 * float(s_star) * ds**2
        div = np.abs(om_sq[:, None, None] * l_sq - j_sq)
        div = np.where(mask, div, np.inf)
        dmin = div.min(axis=(1, 2))
        out.append({
            "upper": float(upper),
            "fraction": float(np.mean(dmin >= threshold)),
            "samples": int(samples),
            "threshold": float(threshold),
        })
    return out
