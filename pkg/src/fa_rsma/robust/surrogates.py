"""Position surrogates for the worst-case constraints of one user.

With h(p) = Phi^H f(p) and an error d in the ball ||d|| <= eps, each robust
quadratic (h(p) + d)^H A (h(p) + d) splits into

* a cross term 2 Re{v(p)^H d} with pairing vector v(p) = (Phi A)^H f(p),
* the estimate part f(p)^H (Phi A Phi^H) f(p),
* the pure error part d^H A d (position independent).

The cross term is replaced by its first-order expansion in p, whose error is
bounded uniformly over the ball by a curvature constant; the estimate part
reuses the constant-diagonal-plus-Taylor upper bound of the perfect-CSI case.
The result is linear in d and convex quadratic in p, ready for an S-procedure
certificate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..channel import ScenarioGeometry
from ..perfect.surrogates import PhaseQuadratic, TaylorSurrogate, lift, path_mixing
from .objective import user_matrices


def pairing_curvature(mixing: np.ndarray, eps: float, wavelength: float) -> float:
    """(16 pi^2 / lambda^2) sum_l eps |mixing[l, :]|.

    Bounds, with a factor-two margin, the Hessian norm in p of the cross term
    2 Re{f(p)^H mixing d} uniformly over ||d|| <= eps.
    """
    return 16.0 * math.pi**2 / wavelength**2 * eps * float(np.sum(np.linalg.norm(mixing, axis=1)))


@dataclass(frozen=True)
class CrossTermBound:
    """2 Re{f(p)^H X d} <= 2 Re{(v + J dp)^H d} + delta/2 |dp|^2 for ||d|| <= eps."""

    mixing: np.ndarray  # X, shape (L, N)
    pairing: np.ndarray  # v = X^H f(p_t)
    jacobian: np.ndarray  # (N, 2): columns X^H (j kappa_i * f(p_t))
    delta: float
    expansion: np.ndarray
    kappa: np.ndarray

    def z_vector(self, p) -> np.ndarray:
        """First-order change of the pairing vector, J (p - p_t)."""
        return self.jacobian @ (np.asarray(p, dtype=float) - self.expansion)

    def bound(self, p, d) -> float:
        dp = np.asarray(p, dtype=float) - self.expansion
        v = self.pairing + self.jacobian @ dp
        return float(2.0 * np.real(np.vdot(v, d)) + 0.5 * self.delta * dp @ dp)

    def exact(self, p, d) -> float:
        f = np.exp(1j * (self.kappa @ np.asarray(p, dtype=float)))
        return float(2.0 * np.real(np.vdot(f, self.mixing @ d)))

    def gradient(self, p, d) -> np.ndarray:
        """Gradient in p of the exact cross term at a fixed error d."""
        f = np.exp(1j * (self.kappa @ np.asarray(p, dtype=float)))
        w = np.conj(f) * (self.mixing @ d)
        return 2.0 * np.real(-1j * w) @ self.kappa


def cross_term_bound(mixing: np.ndarray, angles: np.ndarray, wavelength: float, p_t, eps: float) -> CrossTermBound:
    quad = PhaseQuadratic(np.zeros((len(angles), len(angles))), 0.0, angles, wavelength)
    kappa = quad.kappa
    p_t = np.asarray(p_t, dtype=float)
    f = quad.response(p_t)
    jac = np.stack([mixing.conj().T @ (1j * kappa[:, i] * f) for i in range(2)], axis=1)
    return CrossTermBound(mixing, mixing.conj().T @ f, jac, pairing_curvature(mixing, eps, wavelength), p_t.copy(), kappa)


@dataclass(frozen=True)
class RobustSurrogateParts:
    """Everything the robust position program needs for one user.

    ``matrix`` is the beam-side quadratic of the robust constraint (S for the
    signal, V_k for the interference, M for decodability); ``cross`` bounds the
    error cross term; ``estimate`` bounds the estimate part (its value already
    includes the noise offset of the constraint).
    """

    matrix: np.ndarray
    cross: CrossTermBound
    estimate: TaylorSurrogate
    estimate_target: PhaseQuadratic
    eps: float

    @property
    def curvature(self) -> float:
        """Combined curvature of the p-dependent scalar part."""
        return self.cross.delta + self.estimate.delta

    def scalar_bound(self, p) -> float:
        """Estimate bound plus the cross-term curvature allowance, without the d pairing."""
        dp = np.asarray(p, dtype=float) - self.cross.expansion
        return float(self.estimate(p) + 0.5 * self.cross.delta * dp @ dp)

    def bound(self, p, d) -> float:
        """Upper bound of the robust quadratic (with offset) at position p and error d."""
        d = np.asarray(d, dtype=complex)
        return float(np.real(np.vdot(d, self.matrix @ d)) + self.cross.bound(p, d) + self.estimate(p))

    def exact(self, p, d) -> float:
        d = np.asarray(d, dtype=complex)
        return float(np.real(np.vdot(d, self.matrix @ d)) + self.cross.exact(p, d) + self.estimate_target(p))


def _geometry_parts(geometry: ScenarioGeometry, k: int):
    return path_mixing(geometry, k), np.atleast_2d(geometry.path_angles[k]), geometry.wavelength


def robust_gamma_surrogates(geometry: ScenarioGeometry, k: int, covariances, p_t, eps: float, noise: float = 1.0) -> RobustSurrogateParts:
    """Signal constraint: -(h + d)^H S (h + d) - noise, bounded above.

    Cross-term mixing Phi(-S), estimate matrix Phi(-S)Phi^H.
    """
    S, _, _ = user_matrices(covariances, 0.0)
    phi, ang, lam = _geometry_parts(geometry, k)
    target = PhaseQuadratic(-lift(phi, S), -noise, ang, lam)
    return RobustSurrogateParts(-S, cross_term_bound(phi @ (-S), ang, lam, p_t, eps), target.upper_surrogate(p_t), target, eps)


def robust_u_surrogates(geometry: ScenarioGeometry, k: int, covariances, p_t, eps: float, noise: float = 1.0) -> RobustSurrogateParts:
    """Interference constraint: (h + d)^H V_k (h + d) + noise, bounded above."""
    _, V, _ = user_matrices(covariances, 0.0)
    phi, ang, lam = _geometry_parts(geometry, k)
    target = PhaseQuadratic(lift(phi, V[k]), noise, ang, lam)
    return RobustSurrogateParts(V[k], cross_term_bound(phi @ V[k], ang, lam, p_t, eps), target.upper_surrogate(p_t), target, eps)


def robust_ru_surrogate(geometry: ScenarioGeometry, k: int, covariances, rc: float, p_t, eps: float, noise: float = 1.0) -> RobustSurrogateParts:
    """Decodability constraint: (h + d)^H M (h + d) + (2^Rc - 1) noise, bounded above."""
    _, _, M = user_matrices(covariances, rc)
    phi, ang, lam = _geometry_parts(geometry, k)
    target = PhaseQuadratic(lift(phi, M), (2.0**rc - 1.0) * noise, ang, lam)
    return RobustSurrogateParts(M, cross_term_bound(phi @ M, ang, lam, p_t, eps), target.upper_surrogate(p_t), target, eps)


@dataclass(frozen=True)
class RobustUserSurrogates:
    signal: RobustSurrogateParts
    interference: RobustSurrogateParts
    decodability: RobustSurrogateParts


def robust_position_surrogates(geometry: ScenarioGeometry, covariances, positions, rc: float, eps) -> list[RobustUserSurrogates]:
    eps = np.broadcast_to(np.asarray(eps, dtype=float), (geometry.n_users,))
    out = []
    for k in range(geometry.n_users):
        p_t = positions[k]
        out.append(
            RobustUserSurrogates(
                robust_gamma_surrogates(geometry, k, covariances, p_t, float(eps[k])),
                robust_u_surrogates(geometry, k, covariances, p_t, float(eps[k])),
                robust_ru_surrogate(geometry, k, covariances, rc, p_t, float(eps[k])),
            )
        )
    return out
