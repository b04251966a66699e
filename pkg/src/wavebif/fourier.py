"""Spectral helpers on a uniform periodic grid over [0, 2*pi).

All routines assume samples of a smooth 2*pi-periodic function taken at
t_j = 2*pi*j/M.  Means, antiderivatives and derivatives computed through the
FFT are then accurate to machine precision once M resolves the function.
"""

from __future__ import annotations

import numpy as np

TWO_PI = 2.0 * np.pi


def grid(m: int) -> np.ndarray:
    """Uniform grid of m points on [0, 2*pi), endpoint excluded."""
    return np.arange(m) * (TWO_PI / m)


def mean(values: np.ndarray) -> float:
    """Period average of a sampled periodic function."""
    return float(np.mean(values))


def zero_mean_antiderivative(values: np.ndarray) -> np.ndarray:
    """Antiderivative of the zero-mean part, itself normalized to zero mean.

    If q(t) = c0 + sum_k q_k e^{ikt}, returns samples of
    sum_{k != 0} q_k e^{ikt} / (ik).
    """
    m = len(values)
    coeffs = np.fft.rfft(values)
    k = np.arange(len(coeffs))
    with np.errstate(divide="ignore", invalid="ignore"):
        coeffs = np.where(k == 0, 0.0, coeffs / (1j * np.maximum(k, 1)))
    return np.fft.irfft(coeffs, n=m)


def cumulative_integral(values: np.ndarray) -> np.ndarray:
    """Samples of t -> integral of q from 0 to t, on the same grid."""
    m = len(values)
    t = grid(m)
    c0 = mean(values)
    anti = zero_mean_antiderivative(values)
    return c0 * t + anti - anti[0]


def cumulative_t_weighted(values: np.ndarray) -> np.ndarray:
    """Samples of t -> integral of s*q(s) from 0 to t.

    Splitting q = c0 + qt with qt zero-mean and integrating by parts keeps
    everything inside the FFT algebra; no quadrature rule is involved.
    """
    m = len(values)
    t = grid(m)
    c0 = mean(values)
    anti = zero_mean_antiderivative(values)
    anti2 = zero_mean_antiderivative(anti)
    return 0.5 * c0 * t**2 + t * anti - (anti2 - anti2[0])


def full_period_integral(values: np.ndarray) -> float:
    """Integral of q over one full period."""
    return TWO_PI * mean(values)


def full_period_t_weighted(values: np.ndarray) -> float:
    """Integral of t*q(t) over [0, 2*pi]."""
    c0 = mean(values)
    anti = zero_mean_antiderivative(values)
    return TWO_PI**2 * c0 + TWO_PI * anti[0]


def derivative(values: np.ndarray, order: int = 1) -> np.ndarray:
    """Spectral derivative of the given order."""
    m = len(values)
    coeffs = np.fft.rfft(values)
    k = np.arange(len(coeffs))
    coeffs *= (1j * k) ** order
    if m % 2 == 0 and order % 2 == 1:
        coeffs[-1] = 0.0  # odd derivative of the unpaired Nyquist mode
    return np.fft.irfft(coeffs, n=m)


def sine_coeffs(values: np.ndarray, nmax: int) -> np.ndarray:
    """Coefficients b[1..nmax] of sum b_k sin(k t), index 0 unused and zero.

    The input need not be exactly odd; only the odd part contributes.
    """
    m = len(values)
    if nmax >= m // 2:
        raise ValueError("nmax too large for grid size")
    coeffs = np.fft.rfft(values)
    b = np.zeros(nmax + 1)
    b[1:] = -2.0 * coeffs[1 : nmax + 1].imag / m
    return b


def cos_coeffs(values: np.ndarray, nmax: int) -> np.ndarray:
    """Coefficients a[0..nmax] of a_0 + sum_{k>=1} a_k cos(k t)."""
    m = len(values)
    if nmax >= m // 2:
        raise ValueError("nmax too large for grid size")
    coeffs = np.fft.rfft(values)
    a = np.zeros(nmax + 1)
    a[0] = coeffs[0].real / m
    a[1:] = 2.0 * coeffs[1 : nmax + 1].real / m
    return a


def eval_sine(b: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Evaluate sum_{k>=1} b_k sin(k t) at arbitrary points."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    for k in range(1, len(b)):
        if b[k] != 0.0:
            out += b[k] * np.sin(k * t)
    return out


def eval_sine_derivative(b: np.ndarray, t: np.ndarray, order: int = 1) -> np.ndarray:
    """Evaluate the order-th derivative of sum b_k sin(k t)."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    for k in range(1, len(b)):
        if b[k] == 0.0:
            continue
        phase = k * t + order * (np.pi / 2.0)
        out += b[k] * k**order * np.sin(phase)
    return out
