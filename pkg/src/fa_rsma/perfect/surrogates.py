"""Position surrogates for quadratic forms in the receive field response.

For user k the channel is h_k(p) = Phi^H f(p) with Phi = Sigma^H G. Any
quadratic h^H W h is then f(p)^H (Phi W Phi^H) f(p). Such forms are bounded
above in two steps: a constant-diagonal majorizer (exact at the expansion point)
leaves a term -2 Re{f(p)^H q}, which is then replaced by its second-order
Taylor expansion with an isotropic curvature constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..channel import ScenarioGeometry, rx_field_response, tx_field_response_matrix, wavevectors


def path_mixing(geometry: ScenarioGeometry, k: int) -> np.ndarray:
    """Phi_k = Sigma_k^H G_k, shape (L_k, N_T); h_k = Phi_k^H f_k(p)."""
    return np.asarray(geometry.path_responses[k]).conj().T @ tx_field_response_matrix(geometry, k)


def lift(phi: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Phi W Phi^H, the path-domain matrix of h^H W h."""
    E = phi @ W @ phi.conj().T
    return 0.5 * (E + E.conj().T)


# ------------------------------------------------------- -2 Re{f(p)^H q} term


def linear_phase_value(q: np.ndarray, kappa: np.ndarray, p) -> float:
    """-2 Re{f(p)^H q} with f_l(p) = exp(j kappa_l . p)."""
    f = np.exp(1j * (kappa @ np.asarray(p, dtype=float)))
    return float(-2.0 * np.real(np.vdot(f, q)))


def linear_phase_gradient(q: np.ndarray, kappa: np.ndarray, p) -> np.ndarray:
    """-2 sum_l |q_l| sin(arg q_l - kappa_l . p) kappa_l."""
    phase = np.angle(q) - kappa @ np.asarray(p, dtype=float)
    return -2.0 * (np.abs(q) * np.sin(phase)) @ kappa


def linear_phase_hessian(q: np.ndarray, kappa: np.ndarray, p) -> np.ndarray:
    phase = np.angle(q) - kappa @ np.asarray(p, dtype=float)
    return 2.0 * np.einsum("l,li,lj->ij", np.abs(q) * np.cos(phase), kappa, kappa)


def curvature_constant(weights: np.ndarray, wavelength: float) -> float:
    """(16 pi^2 / lambda^2) sum_l weights_l.

    Twice the Hessian-norm bound 8 pi^2 / lambda^2 sum |q_l| of -2 Re{f^H q};
    used inside delta/2 |dp|^2, so it bounds the curvature with room to spare.
    """
    return 16.0 * math.pi**2 / wavelength**2 * float(np.sum(weights))


@dataclass(frozen=True)
class TaylorSurrogate:
    """p -> value + gradient . (p - p_t) + delta/2 |p - p_t|^2."""

    value: float
    gradient: np.ndarray
    delta: float
    expansion: np.ndarray

    def __call__(self, p) -> float:
        d = np.asarray(p, dtype=float) - self.expansion
        return float(self.value + self.gradient @ d + 0.5 * self.delta * d @ d)

    def shifted(self, c: float) -> "TaylorSurrogate":
        return TaylorSurrogate(self.value + c, self.gradient, self.delta, self.expansion)


@dataclass(frozen=True)
class MajorizerParts:
    """f^H E f <= lam_max L - 2 Re{f^H q} + f_t^H q for unit-modulus f, with equality at f_t."""

    E: np.ndarray
    lam_max: float
    q: np.ndarray
    constant: float  # lam_max L + f_t^H q
    f_t: np.ndarray

    def bound(self, f: np.ndarray) -> float:
        return float(self.constant - 2.0 * np.real(np.vdot(f, self.q)))


def majorize_quadratic(E: np.ndarray, f_t: np.ndarray) -> MajorizerParts:
    E = 0.5 * (E + E.conj().T)
    lam = float(np.linalg.eigvalsh(E)[-1])
    q = lam * f_t - E @ f_t
    L = len(f_t)
    return MajorizerParts(E, lam, q, float(lam * L + np.real(np.vdot(f_t, q))), f_t)


@dataclass(frozen=True)
class PhaseQuadratic:
    """The target p -> f(p)^H E f(p) + offset on one user's field response."""

    E: np.ndarray
    offset: float
    angles: np.ndarray
    wavelength: float

    @property
    def kappa(self) -> np.ndarray:
        return wavevectors(self.angles, self.wavelength)

    def response(self, p) -> np.ndarray:
        return rx_field_response(p, self.angles, self.wavelength)

    def __call__(self, p) -> float:
        f = self.response(p)
        return float(np.real(np.vdot(f, self.E @ f))) + self.offset

    def gradient(self, p) -> np.ndarray:
        f = self.response(p)
        return 2.0 * np.imag(np.conj(f) * (self.E @ f)) @ self.kappa

    def hessian(self, p) -> np.ndarray:
        f = self.response(p)
        A = np.conj(f)[:, None] * self.E * f[None, :]
        kappa = self.kappa
        D = kappa[None, :, :] - kappa[:, None, :]
        return -np.real(np.einsum("lm,lmi,lmj->ij", A, D, D))

    def majorizer(self, p_t) -> MajorizerParts:
        return majorize_quadratic(self.E, self.response(p_t))

    def upper_surrogate(self, p_t) -> TaylorSurrogate:
        p_t = np.asarray(p_t, dtype=float)
        maj = self.majorizer(p_t)
        kappa = self.kappa
        val = maj.constant + linear_phase_value(maj.q, kappa, p_t) + self.offset
        grad = linear_phase_gradient(maj.q, kappa, p_t)
        return TaylorSurrogate(val, grad, curvature_constant(np.abs(maj.q), self.wavelength), p_t.copy())

    def linear_term(self, p_t):
        """(q, kappa) of the majorizer's -2 Re{f^H q} term, for gradient checks."""
        return self.majorizer(p_t).q, self.kappa


# --------------------------------------------------------- per-user targets


@dataclass(frozen=True)
class UserTargets:
    """The three position-dependent quadratics of one user at fixed beams.

    ``neg_signal``: f^H E1 f with E1 = -Phi (sum_{i<=K} W_i) Phi^H, minus sigma^2.
    ``interference``: f^H E2 f + sigma^2 with E2 = Phi (sum_{i!=k, i<=K} W_i) Phi^H.
    ``decodability``: f^H R f + (2^Rc - 1) sigma^2 with
    R = Phi ((2^Rc - 1) sum_{i<=K} W_i - W_c) Phi^H; nonpositive iff the
    common stream is decodable at rate R_c.
    """

    neg_signal: PhaseQuadratic
    interference: PhaseQuadratic
    decodability: PhaseQuadratic


def user_targets(geometry: ScenarioGeometry, k: int, covariances: np.ndarray, noise: float, rc: float) -> UserTargets:
    phi = path_mixing(geometry, k)
    private = covariances[:-1]
    total = private.sum(axis=0)
    others = total - private[k]
    g = 2.0**rc - 1.0
    ang, lam = np.atleast_2d(geometry.path_angles[k]), geometry.wavelength
    return UserTargets(
        neg_signal=PhaseQuadratic(-lift(phi, total), -noise, ang, lam),
        interference=PhaseQuadratic(lift(phi, others), noise, ang, lam),
        decodability=PhaseQuadratic(lift(phi, g * total - covariances[-1]), g * noise, ang, lam),
    )


def surrogate_J(geometry, k, covariances, p_t, noise: float = 1.0, tau: float | None = None) -> TaylorSurrogate:
    """Upper bound of J(p, tau) = f^H E1 f + 2^tau - sigma^2 (tau term omitted when ``tau`` is None)."""
    sur = user_targets(geometry, k, covariances, noise, 0.0).neg_signal.upper_surrogate(p_t)
    return sur if tau is None else sur.shifted(2.0**tau)


def surrogate_T(geometry, k, covariances, p_t, noise: float = 1.0) -> TaylorSurrogate:
    """Upper bound of the interference-plus-noise term of user k."""
    return user_targets(geometry, k, covariances, noise, 0.0).interference.upper_surrogate(p_t)


def surrogate_D(geometry, k, covariances, rc: float, p_t, noise: float = 1.0) -> TaylorSurrogate:
    """Upper bound of the common-decodability residual; <= 0 keeps the common rate >= R_c."""
    return user_targets(geometry, k, covariances, noise, rc).decodability.upper_surrogate(p_t)


def hessian_fd(fun, p, h: float = 1e-5) -> np.ndarray:
    """Central finite-difference Hessian of a scalar function of a 2-vector."""
    p = np.asarray(p, dtype=float)
    H = np.zeros((2, 2))
    e = np.eye(2) * h
    for i in range(2):
        for j in range(2):
            H[i, j] = (fun(p + e[i] + e[j]) - fun(p + e[i] - e[j]) - fun(p - e[i] + e[j]) + fun(p - e[i] - e[j])) / (4 * h * h)
    return H
