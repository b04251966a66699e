"""Spectral fields on the cylinder [0, 2*pi) x (0, pi) with Dirichlet ends.

Everything this package puts on the cylinder is even in time, so the basis
is cos(l t) in t throughout.  In x two pictures coexist:

* the native Dirichlet picture, sin(j x) with j >= 1, in which the wave
  operator d_tt - d_xx acts diagonally with multiplier j^2 - l^2;
* the cosine picture, cos(a x), which is where pointwise products of two
  Dirichlet factors naturally land (sin * sin = cos combinations).

A cosine-picture function vanishing at x = 0 and x = pi re-expands in the
sine basis through the half-range projection

    T[j, a] = (2/pi) * j * (1 - (-1)^(j + a)) / (j^2 - a^2),   T[a, a] = 0,

whose rows decay like 1/j^3 for such functions, so truncated conversions
converge fast.  The quadratic pairing int F * boxinv(F) needed by the
variational developments is evaluated directly from the cosine picture via
`box_pair_even`, which also accepts a dilation factor: dilating a field by n
relabels mode (l, a) to (n l, n a) without changing coefficient values.

Pointwise products are formed by exact collocation: coefficients are
synthesized onto a fine uniform grid of the full torus [0,2pi)^2 (the sine
series is its own odd extension in x), multiplied, and re-analysed.  Grid
sizes must strictly exceed twice the total bandwidth, which the helpers
enforce, so no aliasing error enters at any point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DomainError

TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------------------
# half-range projection


def coupling_matrix(j_max: int, a_max: int) -> np.ndarray:
    """T[j, a] = (2/pi) int_0^pi cos(a x) sin(j x) dx, shape (j_max+1, a_max+1).

    Row j = 0 is zero; so are all entries with j + a even (including j = a).
    """
    j = np.arange(j_max + 1, dtype=float)[:, None]
    a = np.arange(a_max + 1, dtype=float)[None, :]
    parity = 1.0 - (-1.0) ** (j + a)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (2.0 / np.pi) * j * parity / (j * j - a * a)
    # parity zeroes every j = a entry before the division can matter
    t[np.isnan(t) | np.isinf(t)] = 0.0
    t[0, :] = 0.0
    return t


# ---------------------------------------------------------------------------
# Dirichlet (sine-picture) series


@dataclass(frozen=True)
class FourierSeries2D:
    """u(t,x) = sum_{l=0..L, j=1..J} coeffs[l, j] cos(l t) sin(j x).

    coeffs has shape (L+1, J+1); column 0 is unused and must stay zero.
    The V-part of the field is the diagonal l = j, the W-part the rest.
    """

    coeffs: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim != 2 or c.shape[1] < 2:
            raise DomainError("2D series needs a (L+1, J+1) array with J >= 1")
        if np.any(c[:, 0] != 0.0):
            raise DomainError("column j=0 of a Dirichlet series must be zero")
        object.__setattr__(self, "coeffs", c)

    @property
    def l_max(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def j_max(self) -> int:
        return self.coeffs.shape[1] - 1

    def diagonal(self) -> np.ndarray:
        """Coefficients along l = j (the V-direction), index 0 unused."""
        n = min(self.l_max, self.j_max)
        return np.array([0.0] + [self.coeffs[k, k] for k in range(1, n + 1)])

    def evaluate(self, t: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Dense evaluation, result shape (len(t), len(x))."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        x = np.atleast_1d(np.asarray(x, dtype=float))
        lgrid = np.arange(self.l_max + 1)
        jgrid = np.arange(self.j_max + 1)
        ct = np.cos(np.outer(t, lgrid))
        sx = np.sin(np.outer(jgrid, x))
        return ct @ self.coeffs @ sx


def project_w(series: FourierSeries2D) -> FourierSeries2D:
    """Zero out the diagonal l = j."""
    c = series.coeffs.copy()
    n = min(series.l_max, series.j_max)
    idx = np.arange(1, n + 1)
    c[idx, idx] = 0.0
    return FourierSeries2D(c)


def project_v(series: FourierSeries2D) -> FourierSeries2D:
    """Keep only the diagonal l = j."""
    c = np.zeros_like(series.coeffs)
    n = min(series.l_max, series.j_max)
    idx = np.arange(1, n + 1)
    c[idx, idx] = series.coeffs[idx, idx]
    return FourierSeries2D(c)


def box_inverse(series: FourierSeries2D) -> FourierSeries2D:
    """Inverse of d_tt - d_xx on the W-part: divide by j^2 - l^2.

    Rejects input carrying a diagonal component, since the operator has no
    inverse along l = j.
    """
    c = series.coeffs
    scale = max(1.0, float(np.max(np.abs(c))) if c.size else 1.0)
    n = min(series.l_max, series.j_max)
    idx = np.arange(1, n + 1)
    diag = c[idx, idx] if n >= 1 else np.zeros(0)
    if diag.size and float(np.max(np.abs(diag))) > 1e-14 * scale:
        k = int(np.argmax(np.abs(diag))) + 1
        raise DomainError(
            f"input to box_inverse has a diagonal component at (l,j)=({k},{k}) "
            f"of size {abs(diag[k-1]):.3e}; the operator is singular there"
        )
    l = np.arange(series.l_max + 1, dtype=float)[:, None]
    j = np.arange(series.j_max + 1, dtype=float)[None, :]
    denom = j * j - l * l
    out = np.zeros_like(c)
    mask = denom != 0.0
    out[mask] = c[mask] / denom[mask]
    out[:, 0] = 0.0
    return FourierSeries2D(out)


def box_apply(series: FourierSeries2D) -> FourierSeries2D:
    """d_tt - d_xx in coefficients: multiply by j^2 - l^2."""
    l = np.arange(series.l_max + 1, dtype=float)[:, None]
    j = np.arange(series.j_max + 1, dtype=float)[None, :]
    return FourierSeries2D(series.coeffs * (j * j - l * l))


def laplace_apply(series: FourierSeries2D) -> FourierSeries2D:
    """d_tt + d_xx in coefficients: multiply by -(l^2 + j^2)."""
    l = np.arange(series.l_max + 1, dtype=float)[:, None]
    j = np.arange(series.j_max + 1, dtype=float)[None, :]
    return FourierSeries2D(series.coeffs * (-(l * l + j * j)))


def wave_multipliers(l_max: int, j_max: int, omega: float) -> np.ndarray:
    """Multiplier table omega^2 l^2 - j^2 of -omega^2 d_tt + d_xx."""
    l = np.arange(l_max + 1, dtype=float)[:, None]
    j = np.arange(j_max + 1, dtype=float)[None, :]
    return omega * omega * l * l - j * j


def min_small_divisor(
    l_max: int, j_max: int, omega: float
) -> tuple[float, tuple[int, int]]:
    """Smallest |omega^2 l^2 - j^2| over the retained W modes, with its (l, j).

    The diagonal l = j is not part of W and is skipped; column j = 0 does not
    exist in the Dirichlet basis.
    """
    mult = np.abs(wave_multipliers(l_max, j_max, omega))
    mult[:, 0] = np.inf
    n = min(l_max, j_max)
    idx = np.arange(1, n + 1)
    mult[idx, idx] = np.inf
    flat = int(np.argmin(mult))
    l, j = divmod(flat, j_max + 1)
    return float(mult[l, j]), (int(l), int(j))


def diagonal_embedding(b: np.ndarray, n: int, amplitude: float = 1.0) -> FourierSeries2D:
    """The field eta(t+x) - eta(t-x) dilated by n, for eta = sum b_k sin(k t).

    Its modes are purely diagonal: 2 b_k cos(nk t) sin(nk x).
    """
    b = np.asarray(b, dtype=float)
    kmax = len(b) - 1
    size = n * kmax + 1
    c = np.zeros((size, size))
    for k in range(1, kmax + 1):
        c[n * k, n * k] = 2.0 * amplitude * b[k]
    return FourierSeries2D(c)


# ---------------------------------------------------------------------------
# collocation engine (exact products)


def grid_sizes(band_t: int, band_x: int) -> tuple[int, int]:
    """Smallest power-of-two grids strictly resolving the given bandwidths."""

    def up(band: int) -> int:
        m = 8
        while m < 2 * band + 2:
            m *= 2
        return m

    return up(band_t), up(band_x)


def parity_to_grid(
    cos_part: np.ndarray | None,
    sin_part: np.ndarray | None,
    mt: int,
    mx: int,
) -> np.ndarray:
    """Samples on the torus grid (2pi i/mt, 2pi q/mx) of

        sum C[l,a] cos(l t) cos(a x) + sum S[l,a] cos(l t) sin(a x).
    """
    z = np.zeros((mt, mx // 2 + 1), dtype=complex)

    def add(part: np.ndarray, factor: complex) -> None:
        lmax, amax = part.shape[0] - 1, part.shape[1] - 1
        if 2 * lmax + 2 > mt or 2 * amax + 2 > mx:
            raise DomainError("grid too coarse for the requested bandwidth")
        q = factor * part.astype(complex) * (mt * mx / 4.0)
        q[0, :] *= 2.0
        q[:, 0] *= 2.0
        z[: lmax + 1, : amax + 1] += q
        if lmax >= 1:
            z[mt - lmax : mt, : amax + 1] += q[1:, :][::-1, :]

    if cos_part is not None:
        add(np.asarray(cos_part, dtype=float), 1.0)
    if sin_part is not None:
        add(np.asarray(sin_part, dtype=float), -1.0j)
    return np.fft.irfft2(z, s=(mt, mx))


def grid_to_parity(
    values: np.ndarray, l_max: int, a_max: int
) -> tuple[np.ndarray, np.ndarray]:
    """Cosine and sine x-parts of a t-even torus sample array."""
    mt, mx = values.shape
    if 2 * l_max + 2 > mt or 2 * a_max + 2 > mx:
        raise DomainError("requested bandwidth exceeds what the grid resolves")
    z = np.fft.rfft2(values)[: l_max + 1, : a_max + 1] / (mt * mx)
    cos_part = 4.0 * z.real
    sin_part = -4.0 * z.imag
    for part in (cos_part, sin_part):
        part[0, :] /= 2.0
        part[:, 0] /= 2.0
    sin_part[:, 0] = 0.0
    return cos_part, sin_part


def sine_to_grid(series: FourierSeries2D, mt: int, mx: int) -> np.ndarray:
    """Torus samples of a Dirichlet series (x-odd extension is automatic)."""
    return parity_to_grid(None, series.coeffs, mt, mx)


def sine_from_even(cos_part: np.ndarray, j_max: int) -> np.ndarray:
    """Half-range sine coefficients, rows (l, j <= j_max), of a cosine-picture field."""
    cos_part = np.asarray(cos_part, dtype=float)
    t = coupling_matrix(j_max, cos_part.shape[1] - 1)
    return cos_part @ t.T


# ---------------------------------------------------------------------------
# quadratic pairings against the inverse wave operator


def _t_norms(l_labels: np.ndarray) -> np.ndarray:
    """int_0^{2pi} cos^2(l t) dt for each label."""
    return np.where(l_labels == 0, TWO_PI, np.pi)


def box_pair_even_bilinear(
    cos_a: np.ndarray, cos_b: np.ndarray, dilation: int, j_max: int
) -> float:
    """int_Omega F boxinv(G) for two cosine-picture fields dilated by n.

    Both inputs carry undilated labels (l, a); the dilation relabels them to
    (n l, n a).  Fields must vanish at x = 0 and pi and be parity-locked
    ((-1)^a = (-1)^l blockwise), which every product of Dirichlet factors is;
    under that condition the pairing is symmetric in its two arguments.
    """
    cos_a = np.asarray(cos_a, dtype=float)
    cos_b = np.asarray(cos_b, dtype=float)
    if cos_a.shape != cos_b.shape:
        raise DomainError("mismatched coefficient shapes in pairing")
    n = int(dilation)
    if n < 1:
        raise DomainError("dilation must be a positive integer")
    lmax, amax = cos_a.shape[0] - 1, cos_a.shape[1] - 1
    j = np.arange(j_max + 1, dtype=float)[:, None]
    a = n * np.arange(amax + 1, dtype=float)[None, :]
    parity = 1.0 - (-1.0) ** (j + a)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (2.0 / np.pi) * j * parity / (j * j - a * a)
    t[np.isnan(t) | np.isinf(t)] = 0.0
    t[0, :] = 0.0
    ca = cos_a @ t.T  # (lmax+1, j_max+1) sine rows at t-label n*l
    cb = cos_b @ t.T
    l_labels = n * np.arange(lmax + 1)
    tnorm = _t_norms(l_labels)
    total = 0.0
    jsq = np.arange(j_max + 1, dtype=float) ** 2
    for li in range(lmax + 1):
        denom = jsq - float(l_labels[li]) ** 2
        mask = denom != 0.0
        total += tnorm[li] * (np.pi / 2.0) * float(
            np.sum(ca[li, mask] * cb[li, mask] / denom[mask])
        )
    return total


def box_pair_even(
    cos_part: np.ndarray, dilation: int = 1, j_max: int | None = None
) -> float:
    """int_Omega F boxinv(F) for a cosine-picture field, refined in j.

    Doubles the sine cutoff until two consecutive values agree to 1e-12
    relative; the 1/j^3 coefficient decay makes this converge in two or
    three rounds.
    """
    cos_part = np.asarray(cos_part, dtype=float)
    amax = cos_part.shape[1] - 1
    j = j_max if j_max is not None else max(64, 4 * dilation * max(amax, 1))
    prev = box_pair_even_bilinear(cos_part, cos_part, dilation, j)
    for _ in range(12):
        j *= 2
        cur = box_pair_even_bilinear(cos_part, cos_part, dilation, j)
        if abs(cur - prev) <= 1e-12 * max(1.0, abs(cur)):
            return cur
        prev = cur
    raise ConvergenceError("sine-tail refinement failed to settle; field too rough")


def integral_pair_sine(s1: FourierSeries2D, s2: FourierSeries2D) -> float:
    """int_Omega u1 u2 for two Dirichlet series."""
    l_hi = min(s1.l_max, s2.l_max)
    j_hi = min(s1.j_max, s2.j_max)
    c1 = s1.coeffs[: l_hi + 1, : j_hi + 1]
    c2 = s2.coeffs[: l_hi + 1, : j_hi + 1]
    tnorm = _t_norms(np.arange(l_hi + 1))
    return float(np.sum((c1 * c2) @ np.ones(j_hi + 1) * tnorm) * (np.pi / 2.0))


def h1_seminorm_sq(series: FourierSeries2D) -> float:
    """int_Omega (u_t^2 + u_x^2) from coefficients."""
    l = np.arange(series.l_max + 1, dtype=float)
    j = np.arange(series.j_max + 1, dtype=float)
    c2 = series.coeffs**2
    # u_t rides sin(l t): t-norm pi for l >= 1, zero at l = 0
    t_part = np.pi * float(np.sum((l[:, None] ** 2 * c2)[1:, :]))
    # u_x rides cos(l t) cos(j x): t-norm 2pi at l = 0, else pi
    tnorm = _t_norms(np.arange(series.l_max + 1))
    x_part = float(np.sum(tnorm[:, None] * (j[None, :] ** 2) * c2))
    return (np.pi / 2.0) * (t_part + x_part)
