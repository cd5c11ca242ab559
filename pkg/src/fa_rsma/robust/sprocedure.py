"""S-procedure certificates for quadratic implications over an error ball.

The implication  f1(x) <= 0  =>  f2(x) <= 0  with
f_i(x) = x^H A_i x + 2 Re{b_i^H x} + c_i  holds iff some o >= 0 makes
o [[A1, b1], [b1^H, c1]] - [[A2, b2], [b2^H, c2]] PSD. In this package f1 is
always the ball ||x||^2 - eps^2, so the certificate constraints are built by
``ball_certificate`` and checked numerically by ``certificate_margin``.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import minimize_scalar

from ..conic import ComplexAffine, ConstructionError, lmi_block


def _as_affine(x):
    return x if isinstance(x, ComplexAffine) else ComplexAffine.const(x)


def s_procedure_certificate(A1, b1, c1, A2, b2, c2, multiplier):
    """cvxpy constraint  o [[A1,b1],[b1^H,c1]] - [[A2,b2],[b2^H,c2]] >= 0.

    The first quadratic is data (numpy); the second may be affine in decision
    variables. ``multiplier`` is a nonnegative cvxpy scalar.
    """
    A1 = np.asarray(A1, dtype=complex)
    b1 = np.asarray(b1, dtype=complex).reshape(-1)
    n = A1.shape[0]
    if A1.shape != (n, n) or b1.shape != (n,):
        raise ConstructionError(f"first quadratic has inconsistent shapes {A1.shape}, {b1.shape}")
    A2, b2 = _as_affine(A2), _as_affine(b2)
    if A2.shape != (n, n) or b2.shape not in ((n,), (n, 1)):
        raise ConstructionError(f"second quadratic has shapes {A2.shape}, {b2.shape}; expected ({n}, {n}) and ({n},)")
    A = ComplexAffine(multiplier * A1.real - A2.re, multiplier * A1.imag - A2.im)
    b = ComplexAffine(multiplier * b1.real - b2.re, multiplier * b1.imag - b2.im)
    return lmi_block(A, b, multiplier * float(np.real(c1)) - c2)


def ball_certificate(A2, b2, c2, eps, multiplier):
    """Certificate that ||x|| <= eps implies x^H A2 x + 2 Re{b2^H x} + c2 <= 0.

    ``eps`` may be a float or a nonnegative cvxpy parameter holding eps^2 when
    passed as ("sq", param).
    """
    A2, b2 = _as_affine(A2), _as_affine(b2)
    n = A2.shape[0]
    eye = np.eye(n)
    A = ComplexAffine(multiplier * eye - A2.re, -A2.im)
    b = -b2
    if isinstance(eps, tuple):
        corner = -multiplier * eps[1] - c2
    else:
        corner = -multiplier * float(eps) ** 2 - c2
    return lmi_block(A, b, corner)


def certificate_matrix(A2, b2, c2, eps: float, multiplier: float) -> np.ndarray:
    """Numeric Hermitian matrix o [[I, 0], [0, -eps^2]] - [[A2, b2], [b2^H, c2]]."""
    A2 = np.asarray(A2, dtype=complex)
    b2 = np.asarray(b2, dtype=complex).reshape(-1)
    n = A2.shape[0]
    M = np.zeros((n + 1, n + 1), dtype=complex)
    M[:n, :n] = multiplier * np.eye(n) - A2
    M[:n, n] = -b2
    M[n, :n] = -b2.conj()
    M[n, n] = -multiplier * eps**2 - float(np.real(c2))
    return 0.5 * (M + M.conj().T)


def certificate_margin(A2, b2, c2, eps: float, multiplier: float) -> float:
    """Smallest eigenvalue of the certificate matrix (>= 0 means certified)."""
    return float(np.linalg.eigvalsh(certificate_matrix(A2, b2, c2, eps, multiplier))[0])


def best_multiplier(A2, b2, c2, eps: float, upper: float | None = None) -> tuple[float, float]:
    """Multiplier o >= 0 maximizing the certificate margin, and that margin.

    The margin is concave in o, so a bounded scalar search suffices. The upper
    end defaults to a value past which the (1,1) block dominates.
    """
    A2 = np.asarray(A2, dtype=complex)
    b2 = np.asarray(b2, dtype=complex).reshape(-1)
    if upper is None:
        lam = np.linalg.eigvalsh(0.5 * (A2 + A2.conj().T))
        reach = max(np.linalg.norm(b2), abs(float(np.real(c2))), 1.0)
        upper = max(lam[-1], 0.0) + reach / max(eps, 1e-12) * 4 + 1.0
    res = minimize_scalar(lambda o: -certificate_margin(A2, b2, c2, eps, o), bounds=(0.0, upper), method="bounded", options={"xatol": 1e-12 * max(upper, 1.0)})
    o = float(res.x)
    return o, certificate_margin(A2, b2, c2, eps, o)
