"""Scalar special functions for the tomography kernels.

Quadrature convention everywhere: X_phi = (a^dag e^{i phi} + a e^{-i phi})/2,
so the vacuum quadrature distribution is sqrt(2/pi) exp(-2 x^2) with
variance 1/4.
"""

from __future__ import annotations

import math

import numpy as np

from .linalg import ConvergenceError

_MAX_TERMS = 10_000
_ASYMPTOTIC_CUTOFF = 600.0
MAX_OSCILLATOR_INDEX = 4096


def _series_1f1(a: float, b: float, z, rel_tol: float = 1e-16):
    """Taylor series of Kummer's M(a, b, z), vectorized over z >= 0.

    Terms follow t_{k+1} = t_k * (a+k) z / ((b+k)(k+1)); the sum stops once
    two consecutive terms fall below rel_tol relative to the accumulated sum.
    """
    z = np.asarray(z, dtype=float)
    acc = np.ones_like(z)
    term = np.ones_like(z)
    small_streak = 0
    with np.errstate(over="ignore"):  # overflow is detected and raised below
        for k in range(_MAX_TERMS):
            term = term * ((a + k) / ((b + k) * (k + 1))) * z
            acc = acc + term
            if not np.all(np.isfinite(acc)):
                raise ConvergenceError(
                    f"confluent hypergeometric series overflowed for a={a}, "
                    f"b={b}, |z| up to {float(np.max(np.abs(z)))}")
            if np.all(np.abs(term) <= rel_tol * np.maximum(np.abs(acc), 1e-300)):
                small_streak += 1
                if small_streak >= 2:
                    return acc
            else:
                small_streak = 0
    raise ConvergenceError(
        f"confluent hypergeometric series did not converge for a={a}, b={b}")


def _asymptotic_1f1_neg(a: float, b: float, u: float) -> float:
    """Large-argument form of M(a, b, -u) for u >> 1 (exponentially small
    e^{-u} contribution dropped)."""
    try:
        prefactor = math.gamma(b) / math.gamma(b - a)
    except ValueError:  # gamma pole: the algebraic branch vanishes
        return 0.0
    total = 1.0
    term = 1.0
    for k in range(60):
        term *= (a + k) * (a - b + 1 + k) / ((k + 1) * u)
        if abs(term) < 1e-17 * abs(total):
            break
        total += term
    return prefactor * u ** (-a) * total


def chf(a: float, b: float, z: float) -> float:
    """Confluent hypergeometric (Kummer) function M(a, b, z) for real input.

    For negative arguments the series is evaluated through the Kummer
    transformation M(a, b, z) = e^z M(b-a, b, -z), which keeps every term
    of the transformed series on one sign scale and avoids the catastrophic
    cancellation of the directly alternating series.

    Raises:
        ValueError: if b is zero or a negative integer, or |z| > 1e4.
        ConvergenceError: if the series fails to converge.
    """
    if b <= 0 and float(b).is_integer():
        raise ValueError(f"b={b} is a non-positive integer (pole of M)")
    if abs(z) > 1e4:
        raise ValueError(f"|z|={abs(z)} exceeds the supported range 1e4")
    if z == 0.0:
        return 1.0
    if z < 0:
        u = -z
        if u > _ASYMPTOTIC_CUTOFF:
            return _asymptotic_1f1_neg(a, b, u)
        return math.exp(z) * float(_series_1f1(b - a, b, u))
    return float(_series_1f1(a, b, z))


def _chf_neg_vec(a: float, b: float, u: np.ndarray) -> np.ndarray:
    """Vectorized M(a, b, -u) for u >= 0 (Kummer-transformed path)."""
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    big = u > _ASYMPTOTIC_CUTOFF
    if np.any(big):
        out[big] = [_asymptotic_1f1_neg(a, b, ui) for ui in u[big]]
    rest = ~big
    if np.any(rest):
        out[rest] = np.exp(-u[rest]) * _series_1f1(b - a, b, u[rest])
    return out


def f00(x):
    """Pattern function reconstructing the |0><0| population from homodyne
    outcomes: 2 M(1, 1/2; -2 x^2)."""
    x = np.asarray(x, dtype=float)
    return 2.0 * _chf_neg_vec(1.0, 0.5, 2.0 * x * x)


def f01(x):
    """Pattern function reconstructing the 0-1 Fock coherence:
    8 x M(2, 3/2; -2 x^2), normalized so that the weighted overlap
    integral of psi_0 psi_1 equals exactly 1."""
    x = np.asarray(x, dtype=float)
    return 8.0 * x * _chf_neg_vec(2.0, 1.5, 2.0 * x * x)


def f11(x):
    """Pattern function reconstructing the |1><1| population:
    2 [M(1, 1/2; -2 x^2) - 2 M(2, 1/2; -2 x^2)]."""
    x = np.asarray(x, dtype=float)
    u = 2.0 * x * x
    return 2.0 * (_chf_neg_vec(1.0, 0.5, u) - 2.0 * _chf_neg_vec(2.0, 0.5, u))


def oscillator_psi_table(n_max: int, x) -> np.ndarray:
    """Harmonic-oscillator position wavefunctions psi_0..psi_n_max at x.

    Uses the stable three-term recurrence on Hermite functions (never raw
    Hermite polynomials), with the scaling fixed by the vacuum variance 1/4:
    psi_0(x)^2 = sqrt(2/pi) exp(-2 x^2).

    Returns an array of shape (n_max + 1,) + shape(x).
    """
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    if n_max > MAX_OSCILLATOR_INDEX:
        raise ValueError(
            f"n={n_max} exceeds the supported maximum {MAX_OSCILLATOR_INDEX}")
    x = np.asarray(x, dtype=float)
    q = math.sqrt(2.0) * x
    table = np.empty((n_max + 1,) + x.shape, dtype=float)
    table[0] = (2.0 / math.pi) ** 0.25 * np.exp(-x * x)
    if n_max >= 1:
        table[1] = math.sqrt(2.0) * q * table[0]
    for n in range(2, n_max + 1):
        table[n] = (math.sqrt(2.0 / n) * q * table[n - 1]
                    - math.sqrt((n - 1) / n) * table[n - 2])
    return table


def oscillator_psi(n: int, x):
    """Single oscillator eigenfunction psi_n(x); see oscillator_psi_table."""
    if n < 0:
        raise ValueError("n must be non-negative")
    return oscillator_psi_table(n, x)[n]
