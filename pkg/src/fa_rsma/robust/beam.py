"""Worst-case beam program at fixed positions and fixed log-linearization weights.

Channel errors enter through ball certificates: one for each user's worst
signal, one for its worst interference and, with a common stream, one for its
worst common decodability. Eve's angle uncertainty is a finite grid, so every
Eve-side bound is enumerated. The program is built once per user count,
antenna count, grid size, rate target and error pattern; channels, radii and
weights are parameters.
"""

from __future__ import annotations

import cvxpy as cp
import numpy as np

from .. import conic
from ..conic import ComplexAffine, ConeProgram
from ..perfect.beam import BeamStreams
from ..rates import LN2, AuxVariables, BeamformerSet, RsmaConfig
from .sprocedure import ball_certificate


def _times_vector(W: ComplexAffine, h_re, h_im) -> ComplexAffine:
    """W h for a Hermitian affine W and a parameter vector h = h_re + j h_im."""
    return ComplexAffine(W.re @ h_re - W.im @ h_im, W.re @ h_im + W.im @ h_re)


class RobustBeamProblem:
    """Maximizes the sum of worst-case log-linearized rate bounds over the beams.

    ``uncertain[k]`` selects the certificate form for user k; users with a
    zero error radius get the plain scalar constraints, which is what the
    certificates reduce to in that limit.
    """

    def __init__(self, n_users: int, n_antennas: int, n_grid: int, config: RsmaConfig, uncertain):
        K, N, G = n_users, n_antennas, n_grid
        self.K, self.N, self.G = K, N, G
        self.config = config
        self.uncertain = tuple(bool(u) for u in uncertain)
        prog = ConeProgram("robust beam")
        self.program = prog
        self.streams = bs = BeamStreams(prog, K, N, config.sdma)
        Gu = bs.gains("user", K)
        Ge = bs.gains("eve", G)
        self.h_re = prog.parameter("h_re", (K, N))
        self.h_im = prog.parameter("h_im", (K, N))
        self.eps_sq = prog.parameter("eps_sq", K, nonneg=True)
        self.m = prog.parameter("m", K, nonneg=True)
        self.l = prog.parameter("l", nonneg=True)
        self.s0 = prog.parameter("s0", nonneg=True)
        xi = prog.scalar("xi", K, nonneg=True)  # worst signal plus noise
        tau4 = prog.scalar("tau4", K)  # worst interference plus noise
        beta = prog.scalar("beta")  # worst Eve received power plus noise
        a_min = prog.scalar("eve_private_min")  # min over the grid of Eve's private power plus noise
        e_min = prog.scalar("eve_leak_min", K)  # per user, min over the grid of Eve's leakage plus noise
        self.o = {name: prog.scalar(name, K, nonneg=True) for name in ("o1", "o2", "o3")}
        W = bs.streams
        S = conic.hermitian_sum(W[:K])
        g = 2.0**config.rc
        eve_private = [cp.sum(Ge[j, :K]) for j in range(G)]
        eve_total = [cp.sum(Ge[j, :]) for j in range(G)]
        rows = []
        for j in range(G):
            rows += [beta >= eve_total[j] + 1.0, a_min <= eve_private[j] + 1.0]
            rows += [e_min[k] <= eve_total[j] - Ge[j, k] + 1.0 for k in range(K)]
        prog.add("eve grid bounds", rows)
        prog.add("sensing", [eve_total[j] >= self.s0 for j in range(G)])
        if not config.sdma:
            prog.add("eve common cap", [eve_total[j] + 1.0 - g * (eve_private[j] + 1.0) <= 0 for j in range(G)])
        obj = 0
        for k in range(K):
            signal = cp.sum(Gu[k, :K])
            interference = signal - Gu[k, k]
            dec = (g - 1.0) * signal - Gu[k, K] + (g - 1.0)
            if self.uncertain[k]:
                hk = (self.h_re[k], self.h_im[k])
                V = S - W[k]
                M = S.scale(g - 1.0) - W[K]
                eps = ("sq", self.eps_sq[k])
                prog.add("signal certificate", ball_certificate(-S, -_times_vector(S, *hk), -signal - 1.0 + xi[k], eps, self.o["o1"][k]))
                prog.add("interference certificate", ball_certificate(V, _times_vector(V, *hk), interference + 1.0 - tau4[k], eps, self.o["o2"][k]))
                if not config.sdma:
                    prog.add("decodability certificate", ball_certificate(M, _times_vector(M, *hk), dec, eps, self.o["o3"][k]))
            else:
                prog.add("signal bound", xi[k] <= signal + 1.0)
                prog.add("interference bound", tau4[k] >= interference + 1.0)
                if not config.sdma:
                    prog.add("common decodability", dec <= 0)
            a = float(config.alpha[k])
            obj += (
                a * cp.log(a_min) / LN2
                + cp.log(e_min[k]) / LN2
                + cp.log(xi[k]) / LN2
                - (self.m[k] / LN2) * tau4[k]
                - (a + 1.0) * (self.l / LN2) * beta
            )
        prog.set_objective(obj, "max")

    def update(self, estimates: np.ndarray, eps: np.ndarray, grid: np.ndarray, aux: AuxVariables, s0: float, budget: float = 1.0) -> None:
        h = np.asarray(estimates, dtype=complex)
        self.streams.set_channels("user", h)
        self.streams.set_channels("eve", grid)
        self.program.set("h_re", h.real)
        self.program.set("h_im", h.imag)
        self.program.set("eps_sq", np.asarray(eps, dtype=float) ** 2)
        self.program.set("m", np.asarray(aux.m, dtype=float))
        self.program.set("l", float(aux.l))
        self.program.set("s0", float(s0))
        self.program.set("budget", float(budget))

    def solve(self, tol: float | None = None) -> tuple[conic.SolveReport, BeamformerSet | None]:
        report = conic.solve(self.program, tol)
        return report, (self.streams.beams(report) if report.ok else None)

    def surrogate_value(self, report: conic.SolveReport, aux: AuxVariables) -> float:
        """Program objective plus the constant parts of the worst-case bound."""
        a, rc = self.config.alpha, self.config.rc
        const = np.sum(a * rc + np.log2(aux.m) + 1.0 / LN2 + (a + 1.0) * (np.log2(aux.l) + 1.0 / LN2))
        return float(report.objective + const)


def build_robust_beam_problem(estimates, eps, grid, aux: AuxVariables, config: RsmaConfig) -> RobustBeamProblem:
    estimates = np.asarray(estimates)
    eps = np.broadcast_to(np.asarray(eps, dtype=float), (len(estimates),))
    prob = RobustBeamProblem(len(estimates), estimates.shape[1], len(grid), config, eps > 0)
    prob.update(estimates, eps, grid, aux, config.s0, config.p0)
    return prob


def build_robust_feasibility_problem(estimates, eps, grid, config: RsmaConfig) -> BeamStreams:
    """Maximize the smallest slack of the worst-case beam constraints."""
    h = np.asarray(estimates, dtype=complex)
    K, N = h.shape
    G = len(grid)
    eps = np.broadcast_to(np.asarray(eps, dtype=float), (K,))
    prog = ConeProgram("robust beam feasibility")
    bs = BeamStreams(prog, K, N, config.sdma)
    Gu = bs.gains("user", K)
    Ge = bs.gains("eve", G)
    bs.set_channels("user", h)
    bs.set_channels("eve", grid)
    prog.set("budget", config.p0)
    s = prog.scalar("slack")
    o = prog.scalar("o3", K, nonneg=True)
    g = 2.0**config.rc
    W = bs.streams
    S = conic.hermitian_sum(W[:K])
    M = S.scale(g - 1.0) - W[K]
    for j in range(G):
        total, private = cp.sum(Ge[j, :]), cp.sum(Ge[j, :K])
        prog.add("sensing", total - config.s0 >= s)
        if not config.sdma:
            prog.add("eve common cap", total + 1.0 - g * (private + 1.0) + s <= 0)
    if not config.sdma:
        for k in range(K):
            signal = cp.sum(Gu[k, :K])
            dec = (g - 1.0) * signal - Gu[k, K] + (g - 1.0) + s
            if eps[k] > 0:
                prog.add("decodability certificate", ball_certificate(M, M.rmul(h[k]), dec, float(eps[k]), o[k]))
            else:
                prog.add("common decodability", dec <= 0)
    prog.add("slack cap", s <= 1.0)
    prog.set_objective(s, "max")
    return bs
