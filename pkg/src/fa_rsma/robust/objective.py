"""Worst-case objective and constraint residuals at a fixed point.

Communication errors live in a ball of radius eps_k around each estimate and
Eve's direction ranges over a finite angle grid. Every extreme below is exact:
ball extremes come from the trust-region oracle, grid extremes by enumeration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..channel import FaPlacement
from ..rates import AuxVariables, DomainError, as_covariances
from ..scenario import Scenario
from .worstcase import ball_extreme


@dataclass(frozen=True)
class RobustTerms:
    """Per-user worst cases (noise-normalized units, noise powers are 1)."""

    signal: np.ndarray  # min over the ball of sum_{i<=K} |h^H w_i|^2
    interference: np.ndarray  # max over the ball of sum_{i!=k} |h^H w_i|^2
    decodability: np.ndarray  # max over the ball of h^H M h + (2^Rc - 1)
    eve_private: np.ndarray  # per grid angle, sum_{i<=K} h_e^H W_i h_e
    eve_total: np.ndarray  # per grid angle, all streams
    eve_own: np.ndarray  # (grid, K): h_e^H W_k h_e

    @property
    def beta(self) -> float:
        """Worst Eve received power plus noise over the grid."""
        return float(np.max(self.eve_total) + 1.0)

    def eve_cap(self, rc: float) -> np.ndarray:
        """Per-angle residual of Eve's common-rate cap (<= 0 when satisfied)."""
        return self.eve_total + 1.0 - 2.0**rc * (self.eve_private + 1.0)

    def sensing(self, s0: float) -> np.ndarray:
        """Per-angle sensing shortfall (<= 0 when satisfied)."""
        return s0 - self.eve_total


def user_matrices(covariances: np.ndarray, rc: float):
    """(S, V_k list, M): signal sum, per-user interference sums, decodability matrix."""
    W = np.asarray(covariances)
    S = W[:-1].sum(axis=0)
    V = [S - W[k] for k in range(len(W) - 1)]
    M = (2.0**rc - 1.0) * S - W[-1]
    return S, V, M


def robust_terms(scenario: Scenario, beams, placement: FaPlacement | np.ndarray) -> RobustTerms:
    cov = as_covariances(beams)
    ch = scenario.channels(placement)
    rc = scenario.config.rc
    S, V, M = user_matrices(cov, rc)
    K = scenario.n_users
    sig, intf, dec = np.empty(K), np.empty(K), np.empty(K)
    for k in range(K):
        h, eps = ch.h[k], float(scenario.eps[k])
        sig[k] = ball_extreme(S, h, eps, "min").value
        intf[k] = ball_extreme(V[k], h, eps, "max").value
        dec[k] = ball_extreme(M, h, eps, "max").value + (2.0**rc - 1.0)
    grid = scenario.eve_grid_channels()
    q = np.real(np.einsum("gn,inm,gm->gi", grid.conj(), cov, grid))
    return RobustTerms(sig, intf, dec, q[:, :-1].sum(axis=1), q.sum(axis=1), q[:, :-1])


def robust_objective(scenario: Scenario, beams, placement) -> np.ndarray:
    """Per-user worst-case log-difference objective.

    Each bracket of the secure-rate objective is replaced by its own worst case
    over the error ball and the angle grid, so the sum lower-bounds the
    objective for every admissible error and angle.
    """
    T = robust_terms(scenario, beams, placement)
    return robust_objective_from_terms(T, scenario.config)


def robust_objective_from_terms(T: RobustTerms, config) -> np.ndarray:
    a, rc = config.alpha, config.rc
    if np.any(T.signal + 1.0 <= 0) or np.any(T.eve_total[:, None] - T.eve_own + 1.0 <= 0):
        raise DomainError("nonpositive log argument in the worst-case objective")
    psi1 = a * (rc + np.log2(np.min(T.eve_private) + 1.0))
    psi2 = np.log2(np.min(T.eve_total[:, None] - T.eve_own, axis=0) + 1.0)
    return psi1 + psi2 + np.log2(T.signal + 1.0) - np.log2(T.interference + 1.0) - (a + 1.0) * np.log2(T.beta)


def update_robust_aux(tau4, beta: float) -> AuxVariables:
    """m_k = 1 / tau4_k and l = 1 / beta, the tight log-linearization weights."""
    tau4 = np.asarray(tau4, dtype=float)
    if np.any(tau4 <= 0) or not beta > 0:
        raise DomainError("worst-case interference and leakage bounds must be positive")
    return AuxVariables(m=1.0 / tau4, l=1.0 / float(beta), tau4=tau4, beta=float(beta))


def robust_aux(scenario: Scenario, beams, placement) -> AuxVariables:
    T = robust_terms(scenario, beams, placement)
    return update_robust_aux(T.interference + 1.0, T.beta)


def worst_constraint(T: RobustTerms, config, power: float, sdma: bool) -> float:
    """Largest signed violation among power, decodability, Eve cap and sensing."""
    parts = [power - config.p0, float(np.max(T.sensing(config.s0)))]
    if not sdma:
        parts += [float(np.max(T.decodability)), float(np.max(T.eve_cap(config.rc)))]
    return max(parts)



def certificate_rows(scenario: Scenario, beams, placement, signal_bound, interference_bound) -> dict:
    """Per family and user, (A, b, c) of the quadratic in the error that must stay <= 0 over the ball.

    ``signal_bound`` (a lower bound on worst signal plus noise) and
    ``interference_bound`` (an upper bound on worst interference plus noise)
    are the claimed values; the decodability row has no free bound.
    """
    cov = as_covariances(beams)
    S, V, M = user_matrices(cov, scenario.config.rc)
    g = 2.0**scenario.config.rc
    h = scenario.channels(placement).h
    out = {"signal": [], "interference": [], "decodability": []}
    for k in range(scenario.n_users):
        hk = h[k]
        out["signal"].append((-S, -S @ hk, -float(np.real(np.vdot(hk, S @ hk))) - 1.0 + float(signal_bound[k])))
        out["interference"].append((V[k], V[k] @ hk, float(np.real(np.vdot(hk, V[k] @ hk))) + 1.0 - float(interference_bound[k])))
        if not scenario.sdma:
            out["decodability"].append((M, M @ hk, float(np.real(np.vdot(hk, M @ hk))) + (g - 1.0)))
    return out
