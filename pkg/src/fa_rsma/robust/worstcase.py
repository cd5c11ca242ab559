"""Exact extremes of a Hermitian quadratic over a Euclidean error ball.

Used to evaluate the worst-case objective and constraints at a fixed point:
min or max over ||d|| <= eps of (h + d)^H A (h + d) is a trust-region
subproblem, solved here through an eigendecomposition and a scalar secular
equation, including the hard case.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq


@dataclass(frozen=True)
class BallExtreme:
    value: float
    error: np.ndarray  # the minimizing (or maximizing) perturbation d


def _trs_min(A: np.ndarray, g: np.ndarray, eps: float) -> np.ndarray:
    """argmin d^H A d + 2 Re{g^H d} over ||d|| <= eps."""
    lam, U = np.linalg.eigh(A)
    c = U.conj().T @ g
    n = len(lam)
    scale = max(1.0, float(np.max(np.abs(lam))))
    tiny = 1e-12 * scale

    def norm_at(nu):
        return float(np.sqrt(np.sum(np.abs(c) ** 2 / (lam + nu) ** 2)))

    lmin = lam[0]
    if lmin > tiny:
        d = -(U @ (c / lam))
        if np.linalg.norm(d) <= eps:
            return d
    elif lmin >= -tiny:
        # singular PSD: an interior minimizer exists iff g lies in the range
        null = np.abs(lam) <= tiny
        if np.linalg.norm(c[null]) <= 1e-12 * max(1.0, np.linalg.norm(c)):
            y = np.zeros(n, dtype=complex)
            y[~null] = -c[~null] / lam[~null]
            if np.linalg.norm(y) <= eps:
                return U @ y
    # boundary solution with nu > max(0, -lmin)
    lo = max(0.0, -lmin)
    bottom = np.abs(lam - lmin) <= tiny
    if np.linalg.norm(c[bottom]) <= 1e-12 * max(1.0, np.linalg.norm(c)):
        # hard case candidate: nu = -lmin if the remaining part fits inside the ball
        y = np.zeros(n, dtype=complex)
        y[~bottom] = -c[~bottom] / (lam[~bottom] - lmin)
        rest = np.linalg.norm(y)
        if lmin <= 0 and rest <= eps:
            j = int(np.flatnonzero(bottom)[0])
            y[j] = np.sqrt(max(eps**2 - rest**2, 0.0))
            return U @ y
    a = lo + 1e-15 * scale
    while norm_at(a) <= eps:
        # the norm is monotone decreasing; shrink toward the pole when needed
        a = lo + (a - lo) * 1e-3
        if a - lo < 1e-300:
            break
    b = max(2.0 * lo, scale, 1.0)
    while norm_at(b) > eps:
        b *= 2.0
    nu = brentq(lambda v: norm_at(v) - eps, a, b, xtol=1e-15 * max(b, 1.0), rtol=1e-15, maxiter=500)
    return -(U @ (c / (lam + nu)))


def ball_extreme(A: np.ndarray, h: np.ndarray, eps: float, sense: str = "min") -> BallExtreme:
    """Extreme of (h + d)^H A (h + d) over ||d|| <= eps."""
    A = np.asarray(A, dtype=complex)
    A = 0.5 * (A + A.conj().T)
    h = np.asarray(h, dtype=complex)
    sign = 1.0 if sense == "min" else -1.0
    if sense not in ("min", "max"):
        raise ValueError(f"sense must be 'min' or 'max', got {sense!r}")
    if eps <= 0:
        return BallExtreme(float(np.real(np.vdot(h, A @ h))), np.zeros_like(h))
    Ah = sign * A
    d = _trs_min(Ah, Ah @ h, eps)
    x = h + d
    return BallExtreme(float(np.real(np.vdot(x, A @ x))), d)
