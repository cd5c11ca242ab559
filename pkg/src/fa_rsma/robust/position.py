"""Worst-case antenna-position program at fixed beams.

Per user three robust quadratics depend on the position: the worst signal
(lower bounded through 2^tau3), the worst interference (upper bounded by
tau4) and, with a common stream, the worst decodability residual. Each is
bounded by a surrogate that is linear in the channel error and convex
quadratic in the displacement; a scalar border variable carries the
position part and a ball certificate covers the error part.

As in the perfect-CSI program the displacement is measured in a per-user
length unit and every row is divided by its own magnitude; rescaling a ball
certificate by a positive constant leaves its feasibility unchanged.
"""

from __future__ import annotations

import cvxpy as cp
import numpy as np

from .. import conic
from ..conic import ComplexAffine, ConeProgram
from ..rates import LN2
from .sprocedure import ball_certificate
from .surrogates import RobustSurrogateParts, RobustUserSurrogates

ROWS = ("signal", "interference", "decodability")


class RobustPositionProblem:
    """Parameterized worst-case position program for K users.

    ``uncertain[k]`` is False for users with a zero error radius; their
    certificates collapse to the scalar conditions of the perfect-CSI program.
    """

    def __init__(self, n_users: int, n_antennas: int, uncertain, with_decodability: bool = True):
        K, N = n_users, n_antennas
        self.K, self.N = K, N
        self.uncertain = tuple(bool(u) for u in uncertain)
        self.with_decodability = with_decodability
        prog = ConeProgram("robust position")
        self.program = prog
        self.u = prog.scalar("u", (K, 2))
        self.sq = prog.scalar("sq", K, nonneg=True)
        self.tau3 = prog.scalar("tau3", K)
        self.tau4 = prog.scalar("tau4", K)
        self.border = {r: prog.scalar(f"{r}_border", K) for r in ROWS}
        self.o = {r: prog.scalar(f"o_{r}", K, nonneg=True) for r in ROWS}
        self.lo = prog.parameter("lower", (K, 2))
        self.hi = prog.parameter("upper", (K, 2))
        self.eps_sq = prog.parameter("eps_sq", K, nonneg=True)
        self.t_weight = prog.parameter("t_weight", K, nonneg=True)
        self.d_cap = prog.parameter("d_cap", K)
        rows = ROWS if with_decodability else ROWS[:2]
        self.par = {}
        obj = 0
        for k in range(K):
            prog.add("proximity", cp.sum_squares(self.u[k]) <= self.sq[k])
            for r in rows:
                par = self._row_parameters(k, r)
                scalar = par["c"] + par["g"] @ self.u[k] + par["h"] * self.sq[k]
                if r == "signal":
                    scalar = scalar + cp.exp(LN2 * self.tau3[k])
                elif r == "interference":
                    scalar = scalar - self.tau4[k]
                border = self.border[r][k]
                prog.add(f"{r} border", scalar <= border)
                c2 = border - self.d_cap[k] if r == "decodability" else border
                if self.uncertain[k]:
                    A = ComplexAffine(par["A_re"], par["A_im"])
                    b = ComplexAffine(par["v_re"] + par["J_re"] @ self.u[k], par["v_im"] + par["J_im"] @ self.u[k])
                    prog.add(f"{r} certificate", ball_certificate(A, b, c2, ("sq", self.eps_sq[k]), self.o[r][k]))
                else:
                    prog.add(f"{r} nominal", c2 <= 0)
                    prog.add("unused multipliers", self.o[r][k] == 0)
            if not with_decodability:
                prog.add("unused", [self.border["decodability"][k] == 0, self.o["decodability"][k] == 0])
            obj += self.tau3[k] - self.t_weight[k] * self.tau4[k]
        prog.add("region", [self.u <= self.hi, self.u >= self.lo])
        prog.set_objective(obj, "max")
        self.unit = np.ones(K)
        self.positions = np.zeros((K, 2))
        self.row_scale = {r: np.ones(K) for r in ROWS}

    def _row_parameters(self, k: int, r: str) -> dict:
        prog, N = self.program, self.N
        tag = f"{r}{k}"
        par = {
            "c": prog.parameter(f"{tag}_c"),
            "g": prog.parameter(f"{tag}_g", 2),
            "h": prog.parameter(f"{tag}_h", nonneg=True),
        }
        if self.uncertain[k]:
            par.update(
                A_re=prog.parameter(f"{tag}_A_re", (N, N)),
                A_im=prog.parameter(f"{tag}_A_im", (N, N)),
                v_re=prog.parameter(f"{tag}_v_re", N),
                v_im=prog.parameter(f"{tag}_v_im", N),
                J_re=prog.parameter(f"{tag}_J_re", (N, 2)),
                J_im=prog.parameter(f"{tag}_J_im", (N, 2)),
            )
        self.par[(k, r)] = par
        return par

    def update(self, surrogates: list[RobustUserSurrogates], m, positions, region_side: float, unit: float, eps, d_cap) -> None:
        """Load surrogates expanded at ``positions``; ``d_cap`` is the allowed worst decodability level."""
        positions = np.asarray(positions, dtype=float)
        eps = np.broadcast_to(np.asarray(eps, dtype=float), (self.K,))
        rows = ROWS if self.with_decodability else ROWS[:2]
        scale = np.full(self.K, 1e-6 * unit)
        for k, s in enumerate(surrogates):
            for r in rows:
                part: RobustSurrogateParts = getattr(s, r)
                if part.curvature > 0:
                    slope = np.linalg.norm(part.estimate.gradient) + 2.0 * part.eps * np.linalg.norm(part.cross.jacobian)
                    scale[k] = max(scale[k], slope / part.curvature)
        scale = np.minimum(scale, unit)
        self.unit, self.positions = scale, positions
        half = region_side / 2.0
        prog = self.program
        prog.set("lower", np.maximum((-half - positions) / scale[:, None], -1e4))
        prog.set("upper", np.minimum((half - positions) / scale[:, None], 1e4))
        prog.set("eps_sq", eps**2)
        t_scale = np.ones(self.K)
        caps = np.zeros(self.K)
        for k, s in enumerate(surrogates):
            for r in rows:
                part = getattr(s, r)
                c = part.estimate.value
                g = part.estimate.gradient * scale[k]
                h = 0.5 * part.curvature * scale[k] ** 2
                if r == "signal":
                    # the estimate bound is negative at the expansion point; this shifts tau3 by a constant
                    div = max(-c, 1e-12)
                elif r == "interference":
                    div = max(abs(c), 1e-12)
                    t_scale[k] = div
                else:
                    div = max(abs(c), np.linalg.norm(g), h, abs(d_cap[k]), 1e-12)
                    caps[k] = d_cap[k] / div
                self.row_scale[r][k] = div
                par = self.par[(k, r)]
                par["c"].value = c / div
                par["g"].value = g / div
                par["h"].value = abs(h) / div
                if self.uncertain[k]:
                    A = part.matrix / div
                    v = part.cross.pairing / div
                    J = part.cross.jacobian * scale[k] / div
                    par["A_re"].value, par["A_im"].value = A.real, A.imag
                    par["v_re"].value, par["v_im"].value = v.real, v.imag
                    par["J_re"].value, par["J_im"].value = J.real, J.imag
        prog.set("t_weight", np.asarray(m, dtype=float) * t_scale / LN2)
        prog.set("d_cap", caps)

    def solve(self, tol: float | None = None):
        """Solve and return (report, new positions in meters or None)."""
        report = conic.solve(self.program, tol)
        if not report.ok:
            return report, None
        return report, self.positions + self.unit[:, None] * np.asarray(report.values["u"])
