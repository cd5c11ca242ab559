"""Antenna-position subproblem at fixed beams.

Each user's position enters only its own received quadratics, so the program is
block-separable. Per user k it maximizes tau_k - (m_k / ln 2) T_hat_k(p_k) with
2^tau_k + J_hat_k(p_k) <= 0 (J_hat upper-bounds minus the received power plus
noise), D_hat_k(p_k) <= 0 and p_k in the square region. Every surrogate is an
isotropic quadratic in p_k, so the program is a small exponential-cone problem.
"""

from __future__ import annotations

from dataclasses import dataclass

import cvxpy as cp
import numpy as np

from .. import conic
from ..channel import ScenarioGeometry
from ..conic import ConeProgram
from ..rates import LN2
from .surrogates import TaylorSurrogate, user_targets


@dataclass(frozen=True)
class UserPositionSurrogates:
    neg_signal: TaylorSurrogate  # J_hat without the 2^tau term
    interference: TaylorSurrogate  # T_hat
    decodability: TaylorSurrogate  # D_hat
    decodability_now: float  # exact D at the expansion point


def position_surrogates(geometry: ScenarioGeometry, covariances: np.ndarray, positions: np.ndarray, rc: float, noise=None):
    K = geometry.n_users
    noise = np.ones(K) if noise is None else noise
    out = []
    for k in range(K):
        tg = user_targets(geometry, k, covariances, noise[k], rc)
        p_t = positions[k]
        out.append(
            UserPositionSurrogates(
                tg.neg_signal.upper_surrogate(p_t),
                tg.interference.upper_surrogate(p_t),
                tg.decodability.upper_surrogate(p_t),
                tg.decodability(p_t),
            )
        )
    return out


def _log_ratio(tg, p):
    """Value, gradient and Hessian of log2(signal + noise) - log2(interference + noise) at p."""
    a, b = -tg.neg_signal(p), tg.interference(p)
    ga, gb = -tg.neg_signal.gradient(p), tg.interference.gradient(p)
    Ha, Hb = -tg.neg_signal.hessian(p), tg.interference.hessian(p)
    val = (np.log(a) - np.log(b)) / LN2
    grad = (ga / a - gb / b) / LN2
    hess = (Ha / a - np.outer(ga, ga) / a**2 - Hb / b + np.outer(gb, gb) / b**2) / LN2
    return val, grad, hess


def newton_refine(positions: np.ndarray, share, half_side: float, max_step: float, residual=None, cap=None, max_halvings: int = 6) -> np.ndarray:
    """One safeguarded Newton step per user on a separable objective.

    ``share(k, p)`` returns (value, gradient, Hessian) of user k's part of the
    objective at position p; ``residual(k, p)`` is an optional constraint
    function that must stay <= ``cap[k]``. Where the Hessian is negative
    definite the Newton step (capped at ``max_step``) is halved until the share
    increases inside the square region. Users without such a step stay put.
    """
    out = np.array(positions, dtype=float)
    for k in range(len(out)):
        p = out[k]
        val, grad, hess = share(k, p)
        if not np.all(np.isfinite(hess)) or np.linalg.eigvalsh(hess)[-1] >= 0:
            continue
        step = -np.linalg.solve(hess, grad)
        nrm = np.linalg.norm(step)
        if nrm > max_step:
            step *= max_step / nrm
        for j in range(max_halvings + 1):
            trial = np.clip(p + step / 2.0**j, -half_side, half_side)
            if residual is not None and residual(k, trial) > cap[k]:
                continue
            if share(k, trial)[0] > val:
                out[k] = trial
                break
    return out


def rate_share(geometry: ScenarioGeometry, covariances: np.ndarray, rc: float):
    """(share, residual) callables for newton_refine at fixed beams.

    At fixed beams user k's part of the objective that depends on p_k is
    log2(signal + noise) - log2(interference + noise); the residual is its
    common-stream decodability function.
    """
    targets = [user_targets(geometry, k, covariances, 1.0, rc) for k in range(geometry.n_users)]
    return (lambda k, p: _log_ratio(targets[k], p)), (lambda k, p: targets[k].decodability(p))


class PositionProblem:
    """Parameterized position program for K users; rebuilt only when K or the common-rate toggle changes.

    The decision variable is the displacement from the expansion point in a
    per-user length unit, and every surrogate row is divided by its own
    magnitude, so the conic data stay O(1) even though curvature constants are
    large in meters.
    """

    def __init__(self, n_users: int, with_decodability: bool = True):
        K = n_users
        self.K = K
        prog = ConeProgram("position")
        self.program = prog
        self.u = prog.scalar("u", (K, 2))
        self.tau = prog.scalar("tau", K)  # log2 of received power over its current value
        self.sq = prog.scalar("sq", K, nonneg=True)
        self.lo = prog.parameter("lower", (K, 2))
        self.hi = prog.parameter("upper", (K, 2))
        par = {}
        for name in ("j", "t", "d"):
            par[name + "_c"] = prog.parameter(name + "_c", K)
            par[name + "_g"] = prog.parameter(name + "_g", (K, 2))
            par[name + "_h"] = prog.parameter(name + "_h", K, nonneg=True)
        par["d_cap"] = prog.parameter("d_cap", K)
        self.par = par
        obj = 0
        for k in range(K):
            prog.add("proximity", cp.sum_squares(self.u[k]) <= self.sq[k])

            def model(name, curvature_sign=1.0):
                return par[name + "_c"][k] + par[name + "_g"][k] @ self.u[k] + curvature_sign * par[name + "_h"][k] * self.sq[k]

            prog.add("received power", cp.exp(LN2 * self.tau[k]) + model("j") <= 0)
            if with_decodability:
                prog.add("common decodability", model("d") <= par["d_cap"][k])
            # t_* carries the -m_k / ln 2 weight, so its curvature term enters with a minus sign
            obj += self.tau[k] + model("t", -1.0)
        prog.add("region", [self.u <= self.hi, self.u >= self.lo])
        prog.set_objective(obj, "max")
        self.with_decodability = with_decodability
        self.unit = np.ones(K)
        self.positions = np.zeros((K, 2))

    def update(self, surrogates: list[UserPositionSurrogates], m: np.ndarray, positions: np.ndarray, region_side: float, unit: float):
        """Load surrogates expanded at ``positions``.

        Each user's step is measured in its own length scale: the largest
        ratio |gradient| / curvature over its three surrogates, capped at
        ``unit``, which is the length of the longest useful step.
        """
        prog = self.program
        positions = np.asarray(positions, dtype=float)
        scale = np.full(self.K, 1e-6 * unit)
        for k, s in enumerate(surrogates):
            for t in (s.neg_signal, s.interference, s.decodability):
                if t.delta > 0:
                    scale[k] = max(scale[k], np.linalg.norm(t.gradient) / t.delta)
        scale = np.minimum(scale, unit)
        self.unit, self.positions = scale, positions
        half = region_side / 2.0
        # steps beyond a few units are never optimal; the clip keeps the data bounded
        prog.set("lower", np.maximum((-half - positions) / scale[:, None], -1e4))
        prog.set("upper", np.minimum((half - positions) / scale[:, None], 1e4))
        w = -np.asarray(m, dtype=float) / LN2
        rows = {}
        for name, attr in (("j", "neg_signal"), ("t", "interference"), ("d", "decodability")):
            sur = [getattr(s, attr) for s in surrogates]
            rows[name] = [
                np.array([t.value for t in sur]),
                np.array([t.gradient for t in sur]) * scale[:, None],
                np.array([0.5 * t.delta for t in sur]) * scale**2,
            ]
        # J_hat < 0 at the expansion point; dividing by its magnitude shifts tau by a constant
        self.j_scale = -rows["j"][0]
        rows["j"] = [r / (self.j_scale if r.ndim == 1 else self.j_scale[:, None]) for r in rows["j"]]
        rows["t"] = [r * (w if r.ndim == 1 else w[:, None]) for r in rows["t"]]
        c, g, h = rows["d"]
        d_scale = np.maximum.reduce([np.abs(c), np.linalg.norm(g, axis=1), h, np.full_like(c, 1e-12)])
        rows["d"] = [c / d_scale, g / d_scale[:, None], h / d_scale]
        for name, (c, g, h) in rows.items():
            prog.set(name + "_c", c)
            prog.set(name + "_g", g)
            prog.set(name + "_h", np.abs(h))
        prog.set("d_cap", np.array([max(0.0, s.decodability_now) for s in surrogates]) / d_scale)

    def solve(self, tol: float | None = None):
        """Solve and return (report, new positions in meters or None)."""
        report = conic.solve(self.program, tol)
        if not report.ok:
            return report, None
        return report, self.positions + self.unit[:, None] * np.asarray(report.values["u"])


def build_position_problem(
    geometry: ScenarioGeometry,
    covariances: np.ndarray,
    positions: np.ndarray,
    m: np.ndarray,
    rc: float,
    with_decodability: bool = True,
) -> PositionProblem:
    """Position program with surrogates expanded at ``positions``."""
    prob = PositionProblem(geometry.n_users, with_decodability)
    prob.update(position_surrogates(geometry, covariances, positions, rc), m, positions, geometry.region_side, geometry.wavelength)
    return prob
