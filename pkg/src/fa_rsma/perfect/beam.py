"""Beamforming subproblem at fixed antenna positions and fixed log-linearization weights.

The program is built once per (K, N_T, R_c) and re-solved with new channels and
weights through cvxpy parameters, which skips recompilation.
"""

from __future__ import annotations

from dataclasses import dataclass

import cvxpy as cp
import numpy as np

from .. import conic
from ..channel import ChannelRealization
from ..conic import ComplexAffine, ConeProgram, re_inner, trace
from ..rates import LN2, AuxVariables, BeamformerSet, RsmaConfig, quad_forms


def _log2(x):
    return cp.log(x) / LN2


class BeamStreams:
    """K private and one common Hermitian PSD covariance inside a program.

    ``gains(label, n_channels)`` declares a (n_channels, K+1) matrix of real
    variables tied to Re Tr(H_j W_i) for parameter matrices H_j = h_j h_j^H, so
    that objective weights can also be parameters without breaking DPP.
    """

    def __init__(self, program: ConeProgram, n_users: int, n_antennas: int, sdma: bool):
        self.program = program
        self.K, self.N, self.sdma = n_users, n_antennas, sdma
        self.streams, self.names = [], []
        for i in range(n_users + 1):
            if sdma and i == n_users:
                zero = cp.Constant(np.zeros((n_antennas, n_antennas)))
                self.streams.append(ComplexAffine(zero, zero))
                self.names.append(None)
            else:
                name = f"W{i}" if i < n_users else "Wc"
                self.streams.append(program.hermitian_psd(name, n_antennas).affine)
                self.names.append(name)
        self.budget = program.parameter("budget", nonneg=True)
        program.add("power", sum(trace(W) for W in self.streams) <= self.budget)
        self._channels = {}

    def gains(self, label: str, n_channels: int):
        N = self.N
        H_re = [self.program.parameter(f"{label}{j}_re", (N, N)) for j in range(n_channels)]
        H_im = [self.program.parameter(f"{label}{j}_im", (N, N)) for j in range(n_channels)]
        G = self.program.scalar(f"gain_{label}", (n_channels, self.K + 1))
        ties = []
        for j in range(n_channels):
            for i, W in enumerate(self.streams):
                ties.append(G[j, i] == re_inner((H_re[j], H_im[j]), W))
        self.program.add(f"gain ties {label}", ties)
        self._channels[label] = (H_re, H_im)
        return G

    def set_channels(self, label: str, vectors: np.ndarray) -> None:
        H_re, H_im = self._channels[label]
        for j, h in enumerate(vectors):
            H = np.outer(h, np.conj(h))
            H_re[j].value = H.real
            H_im[j].value = H.imag

    def beams(self, report: conic.SolveReport) -> BeamformerSet:
        n = self.N
        cov = [report.values[name] if name else np.zeros((n, n), dtype=complex) for name in self.names]
        return BeamformerSet(np.array(cov))


class BeamProblem:
    """The log-linearized secure-rate beam program.

    Maximizes the sum over users of the surrogate objective (weights m_k and l
    fixed) subject to the power budget, common-stream decodability at every
    user, Eve's common-rate cap R_c and the sensing floor S_0. The rank-one
    requirement is dropped. Noise powers are fixed at construction.
    """

    def __init__(self, n_users: int, n_antennas: int, config: RsmaConfig, noise_user=None, noise_eve: float = 1.0):
        K = n_users
        self.config = config
        prog = ConeProgram("beam")
        self.program = prog
        self.streams = BeamStreams(prog, K, n_antennas, config.sdma)
        s2 = np.ones(K) if noise_user is None else np.asarray(noise_user, dtype=float)
        se = float(noise_eve)
        self.noise_user, self.noise_eve = s2, se
        Gu = self.streams.gains("user", K)
        Ge = self.streams.gains("eve", 1)
        self.m = prog.parameter("m", K, nonneg=True)
        self.l = prog.parameter("l", nonneg=True)
        self.s0 = prog.parameter("s0", nonneg=True)
        eve_private = cp.sum(Ge[0, :K])
        eve_total = cp.sum(Ge[0, :])
        g = 2.0**config.rc
        obj = 0
        for k in range(K):
            signal = cp.sum(Gu[k, :K])
            a = float(config.alpha[k])
            obj += (
                a * _log2(eve_private + se)
                + _log2(signal + s2[k])
                + _log2(eve_total - Ge[0, k] + se)
                - (self.m[k] / LN2) * (signal - Gu[k, k] + s2[k])
                - (a + 1.0) * (self.l / LN2) * (eve_total + se)
            )
            if not config.sdma:
                prog.add("common decodability", -(signal + Gu[k, K]) - s2[k] + g * (signal + s2[k]) <= 0)
        if not config.sdma:
            prog.add("eve common cap", eve_total + se - g * (eve_private + se) <= 0)
        prog.add("sensing", eve_total >= self.s0)
        prog.set_objective(obj, "max")

    def update(self, channels: ChannelRealization, aux: AuxVariables, s0: float | None = None, budget: float | None = None) -> None:
        """Load channels and weights; ``s0`` and ``budget`` default to the construction config."""
        self.streams.set_channels("user", channels.h)
        self.streams.set_channels("eve", [channels.h_e])
        self.program.set("m", np.asarray(aux.m, dtype=float))
        self.program.set("l", float(aux.l))
        self.program.set("s0", float(self.config.s0 if s0 is None else s0))
        self.program.set("budget", float(self.config.p0 if budget is None else budget))

    def solve(self, tol: float | None = None) -> tuple[conic.SolveReport, BeamformerSet | None]:
        report = conic.solve(self.program, tol)
        return report, (self.streams.beams(report) if report.ok else None)


def build_beam_problem(channels: ChannelRealization, aux: AuxVariables, config: RsmaConfig) -> BeamProblem:
    K, N = channels.h.shape
    prob = BeamProblem(K, N, config, channels.noise_user, channels.noise_eve)
    prob.update(channels, aux)
    return prob


def build_feasibility_problem(channels: ChannelRealization, config: RsmaConfig) -> BeamStreams:
    """Maximize the smallest slack of the beam constraints under the power budget."""
    K, N = channels.h.shape
    prog = ConeProgram("beam feasibility")
    bs = BeamStreams(prog, K, N, config.sdma)
    Gu = bs.gains("user", K)
    Ge = bs.gains("eve", 1)
    bs.set_channels("user", channels.h)
    bs.set_channels("eve", [channels.h_e])
    prog.set("budget", config.p0)
    s = prog.scalar("slack")
    s2, se = channels.noise_user, channels.noise_eve
    eve_private = cp.sum(Ge[0, :K])
    eve_total = cp.sum(Ge[0, :])
    g = 2.0**config.rc
    if not config.sdma:
        for k in range(K):
            signal = cp.sum(Gu[k, :K])
            prog.add("common decodability", -(signal + Gu[k, K]) - s2[k] + g * (signal + s2[k]) + s <= 0)
        prog.add("eve common cap", eve_total + se - g * (eve_private + se) + s <= 0)
    prog.add("sensing", eve_total - config.s0 >= s)
    prog.add("slack cap", s <= 1.0)
    prog.set_objective(s, "max")
    return bs


@dataclass(frozen=True)
class ConstraintAudit:
    power: float
    decodability: np.ndarray
    eve_cap: float
    sensing: float

    @property
    def worst(self) -> float:
        """Largest violation (positive means infeasible)."""
        return float(max(self.power, np.max(self.decodability, initial=-np.inf), self.eve_cap, self.sensing))

    def passes(self, tol: float = 1e-6) -> bool:
        return self.worst <= tol


def audit_beam_constraints(channels: ChannelRealization, beams: BeamformerSet, config: RsmaConfig) -> ConstraintAudit:
    """Signed violations of power, decodability, Eve common cap and sensing floor."""
    cov = beams.covariances
    K = len(channels.h)
    g = 2.0**config.rc
    qe = quad_forms(channels.h_e, cov)
    dec = np.empty(K)
    for k in range(K):
        q = quad_forms(channels.h[k], cov)
        signal = q[:K].sum()
        dec[k] = -(signal + q[K]) - channels.noise_user[k] + g * (signal + channels.noise_user[k])
    return ConstraintAudit(
        power=beams.total_power() - config.p0,
        decodability=dec,
        eve_cap=qe.sum() + channels.noise_eve - g * (qe[:K].sum() + channels.noise_eve),
        sensing=config.s0 - qe.sum(),
    )


def mrt_beams(channels: ChannelRealization, budget: float, sdma: bool) -> BeamformerSet:
    """Equal-power matched filters toward every user, and toward Eve for the common stream."""
    K, N = channels.h.shape
    dirs = list(channels.h) + [channels.h_e]
    n_active = K if sdma else K + 1
    w = np.zeros((K + 1, N), dtype=complex)
    for i in range(n_active):
        nrm = np.linalg.norm(dirs[i])
        if nrm > 0:
            w[i] = dirs[i] / nrm * np.sqrt(budget / n_active)
    return BeamformerSet.from_vectors(w)
