"""Rate, secrecy and sensing metrics plus the log-linearized objective.

Beams are stored as K+1 covariance matrices; index K (the last one) is the
common stream. Every function accepts either a :class:`BeamformerSet` or a raw
``(K+1, N, N)`` array.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelRealization

LN2 = math.log(2.0)


class DomainError(ValueError):
    """A rate or log argument left its domain (nonpositive noise, log of <= 0)."""


@dataclass(frozen=True)
class BeamformerSet:
    covariances: np.ndarray  # (K+1, N, N); last entry is the common stream
    vectors: np.ndarray | None = None  # (K+1, N) extracted beams
    residuals: np.ndarray | None = None  # (K+1,) rank-one residual ratios
    degenerate: np.ndarray | None = None  # (K+1,) zero-beam flags

    @classmethod
    def from_vectors(cls, w: np.ndarray) -> "BeamformerSet":
        w = np.asarray(w, dtype=complex)
        cov = np.einsum("in,im->inm", w, w.conj())
        return cls(cov, w.copy(), np.zeros(len(w)), np.linalg.norm(w, axis=1) == 0)

    @classmethod
    def zeros(cls, n_users: int, n_antennas: int) -> "BeamformerSet":
        return cls(np.zeros((n_users + 1, n_antennas, n_antennas), dtype=complex))

    @property
    def n_users(self) -> int:
        return self.covariances.shape[0] - 1

    @property
    def n_antennas(self) -> int:
        return self.covariances.shape[1]

    @property
    def private(self) -> np.ndarray:
        return self.covariances[:-1]

    @property
    def common(self) -> np.ndarray:
        return self.covariances[-1]

    def total_power(self) -> float:
        return float(np.real(np.einsum("inn->", self.covariances)))

    def scaled(self, c: float) -> "BeamformerSet":
        vec = None if self.vectors is None else self.vectors * math.sqrt(c)
        return BeamformerSet(self.covariances * c, vec, self.residuals, self.degenerate)

    def check(self, power_budget: float | None = None, herm_tol: float = 1e-10, psd_tol: float = 1e-8) -> list[str]:
        """Return a list of violated invariants (empty when valid)."""
        problems = []
        for i, W in enumerate(self.covariances):
            if np.max(np.abs(W - W.conj().T), initial=0.0) > herm_tol * max(1.0, np.max(np.abs(W), initial=0.0)):
                problems.append(f"W_{i} not Hermitian")
            elif np.linalg.eigvalsh(0.5 * (W + W.conj().T))[0] < -psd_tol:
                problems.append(f"W_{i} not PSD")
        if power_budget is not None and self.total_power() > power_budget + 1e-6:
            problems.append("power budget exceeded")
        return problems


def as_covariances(beams) -> np.ndarray:
    return beams.covariances if isinstance(beams, BeamformerSet) else np.asarray(beams)


@dataclass(frozen=True)
class RsmaConfig:
    rc: float
    alpha: np.ndarray
    s0: float
    p0: float
    sdma: bool = False  # forces R_c = 0 and a zero common beam

    def __post_init__(self):
        object.__setattr__(self, "alpha", np.asarray(self.alpha, dtype=float))
        if np.any(self.alpha < 0) or abs(self.alpha.sum() - 1.0) > 1e-9:
            raise ValueError("weights must be nonnegative and sum to 1")
        if self.rc < 0 or self.s0 < 0 or self.p0 <= 0:
            raise ValueError("need R_c >= 0, S_0 >= 0, P_0 > 0")
        if self.sdma and self.rc != 0:
            raise ValueError("SDMA mode requires R_c = 0")

    @classmethod
    def uniform(cls, n_users: int, rc: float, s0: float, p0: float, sdma: bool = False) -> "RsmaConfig":
        return cls(0.0 if sdma else rc, np.full(n_users, 1.0 / n_users), s0, p0, sdma)


@dataclass
class AuxVariables:
    m: np.ndarray
    l: float
    tau3: np.ndarray | None = None
    tau4: np.ndarray | None = None
    beta: float | None = None
    t: np.ndarray | None = None

    def __post_init__(self):
        self.m = np.asarray(self.m, dtype=float)
        if np.any(self.m <= 0) or not self.l > 0:
            raise DomainError("auxiliary variables m_k and l must be strictly positive")
        if self.tau4 is not None and np.any(np.asarray(self.tau4) <= 0):
            raise DomainError("tau4 must be strictly positive")
        if self.beta is not None and not self.beta > 0:
            raise DomainError("beta must be strictly positive")


def quad_forms(h: np.ndarray, beams) -> np.ndarray:
    """Real parts of h^H W_i h for every covariance."""
    W = as_covariances(beams)
    return np.real(np.einsum("n,inm,m->i", np.conj(h), W, h))


def _check_noise(noise: float):
    if not noise > 0:
        raise DomainError(f"noise power must be positive, got {noise}")


def common_rate(h_k: np.ndarray, beams, noise: float) -> float:
    _check_noise(noise)
    q = quad_forms(h_k, beams)
    return math.log2(1.0 + q[-1] / (q[:-1].sum() + noise))


def private_rate(h_k: np.ndarray, beams, noise: float, k: int) -> float:
    """Post-SIC private rate: the common stream is removed before decoding."""
    _check_noise(noise)
    q = quad_forms(h_k, beams)[:-1]
    return math.log2(1.0 + q[k] / (q.sum() - q[k] + noise))


def eve_rates(h_e: np.ndarray, beams, noise_e: float) -> tuple[float, np.ndarray]:
    """Eve's common rate and private rates (common stream counted as interference)."""
    _check_noise(noise_e)
    q = quad_forms(h_e, beams)
    e_c = math.log2(1.0 + q[-1] / (q[:-1].sum() + noise_e))
    total = q.sum()
    e_p = np.log2(1.0 + q[:-1] / (total - q[:-1] + noise_e))
    return e_c, e_p


def sensing_energy(h_e: np.ndarray, beams) -> float:
    return float(max(quad_forms(h_e, beams).sum(), 0.0))


def delivered_common_rate(channels: ChannelRealization, beams, rc: float) -> float:
    rk = [common_rate(channels.h[k], beams, channels.noise_user[k]) for k in range(len(channels.h))]
    return min(rc, min(rk))


def secrecy_sum_rate(channels: ChannelRealization, beams, config: RsmaConfig) -> float:
    """Sum of clamped private secrecy rates plus the weighted clamped common secrecy rate."""
    K = len(channels.h)
    e_c, e_p = eve_rates(channels.h_e, beams, channels.noise_eve)
    r_p = np.array([private_rate(channels.h[k], beams, channels.noise_user[k], k) for k in range(K)])
    r_c = delivered_common_rate(channels, beams, config.rc)
    return float(np.maximum(r_p - e_p, 0.0).sum() + np.sum(config.alpha * max(r_c - e_c, 0.0)))


def neg_log2_lower_bound(m, n):
    """-m n / ln 2 + log2 m + 1 / ln 2, which is at most -log2 n with equality at m = 1/n."""
    m = np.asarray(m, dtype=float)
    return -m * n / LN2 + np.log2(m) + 1.0 / LN2


@dataclass(frozen=True)
class ObjectiveParts:
    """Per-user quadratic forms entering the log-difference objective."""

    signal: np.ndarray  # sum_{i<=K} h_k^H W_i h_k
    interference: np.ndarray  # sum_{i!=k, i<=K} h_k^H W_i h_k
    eve_private: float  # sum_{i<=K} h_e^H W_i h_e
    eve_total: float  # sum_{i<=K+1} h_e^H W_i h_e
    eve_own: np.ndarray  # h_e^H W_k h_e


def objective_parts(channels: ChannelRealization, beams) -> ObjectiveParts:
    K = len(channels.h)
    q = np.array([quad_forms(channels.h[k], beams) for k in range(K)])
    qe = quad_forms(channels.h_e, beams)
    signal = q[:, :-1].sum(axis=1)
    return ObjectiveParts(
        signal=signal,
        interference=signal - np.diag(q[:, :-1]),
        eve_private=float(qe[:-1].sum()),
        eve_total=float(qe.sum()),
        eve_own=qe[:-1].copy(),
    )


def _log2(x, label: str):
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError(f"nonpositive log argument in {label}: {x}")
    return np.log2(x)


def secure_rate_objective(channels: ChannelRealization, beams, config: RsmaConfig) -> np.ndarray:
    """Per-user log-difference secure-rate objective (the sum is maximized by the beam step).

    Each entry is alpha_k (R_c - e_c) + r_{p,k} - e_{p,k} written as a sum of logs.
    """
    P = objective_parts(channels, beams)
    s2, se = channels.noise_user, channels.noise_eve
    a = config.alpha
    return (
        a * (config.rc + _log2(P.eve_private + se, "eve private"))
        + _log2(P.signal + s2, "user signal")
        + _log2(P.eve_total - P.eve_own + se, "eve leakage")
        - _log2(P.interference + s2, "user interference")
        - (a + 1.0) * _log2(P.eve_total + se, "eve total")
    )


@dataclass(frozen=True)
class SurrogateTerms:
    psi1: np.ndarray
    xi1: np.ndarray
    psi2: np.ndarray
    xi2_term: np.ndarray  # -(m_k / ln 2) * interference-plus-noise
    psi3: np.ndarray

    @property
    def per_user(self) -> np.ndarray:
        return self.psi1 + self.xi1 + self.psi2 + self.xi2_term + self.psi3

    @property
    def total(self) -> float:
        return float(self.per_user.sum())


def surrogate_terms(channels: ChannelRealization, beams, aux: AuxVariables, config: RsmaConfig) -> SurrogateTerms:
    P = objective_parts(channels, beams)
    s2, se = channels.noise_user, channels.noise_eve
    a = config.alpha
    m, l = aux.m, aux.l
    psi3 = np.log2(m) + 1.0 / LN2 + (a + 1.0) * (-(l / LN2) * (P.eve_total + se) + math.log2(l) + 1.0 / LN2)
    return SurrogateTerms(
        psi1=a * (config.rc + _log2(P.eve_private + se, "Psi1")),
        xi1=_log2(P.signal + s2, "Xi1"),
        psi2=_log2(P.eve_total - P.eve_own + se, "Psi2"),
        xi2_term=-(m / LN2) * (P.interference + s2),
        psi3=psi3,
    )


def surrogate_objective(channels: ChannelRealization, beams, aux: AuxVariables, config: RsmaConfig):
    """Per-user lower-bound values and their sum; tight when ``aux`` is optimal for ``beams``."""
    terms = surrogate_terms(channels, beams, aux, config)
    return terms.per_user, terms.total


def optimal_aux(channels: ChannelRealization, beams) -> AuxVariables:
    P = objective_parts(channels, beams)
    return AuxVariables(m=1.0 / (P.interference + channels.noise_user), l=1.0 / (P.eve_total + channels.noise_eve))
