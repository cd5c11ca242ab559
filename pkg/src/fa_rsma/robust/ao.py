"""Alternating optimization of beams and positions against norm-bounded channel errors.

Same loop as the perfect-CSI solver, with every quantity replaced by its
worst case: the accepted objective is the exact worst-case value (trust-region
extremes over each error ball, enumeration over Eve's angle grid), so the
trace is monotone by construction.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .. import conic
from ..channel import FaPlacement, rx_field_response
from ..perfect.ao import ACCEPT_SLACK, POSITION_FEAS_SLACK, AoConfig, InfeasibleScenario, SubproblemFailure
from ..perfect.beam import mrt_beams
from ..perfect.position import newton_refine, rate_share
from ..perfect.surrogates import path_mixing
from ..rates import AuxVariables, BeamformerSet, secrecy_sum_rate
from ..scenario import Scenario
from .beam import RobustBeamProblem, build_robust_feasibility_problem
from .objective import RobustTerms, certificate_rows, robust_objective_from_terms, robust_terms, update_robust_aux, user_matrices, worst_constraint
from .position import RobustPositionProblem
from .sprocedure import best_multiplier
from .surrogates import robust_position_surrogates
from .worstcase import ball_extreme


@dataclass
class RobustTraceRecord:
    outer: int
    phase: str  # init, feasibility, beam, position, stretch, newton
    inner: int
    objective: float  # exact worst-case objective
    bound: float  # program value plus constants (beam phase), nan elsewhere
    secrecy: float  # secrecy sum rate at the channel estimates
    accepted: bool
    violation: float  # worst signed worst-case constraint violation


@dataclass
class RobustAoState:
    scenario: Scenario
    config: AoConfig
    beams: BeamformerSet
    placement: FaPlacement
    aux: AuxVariables
    objective: float
    terms: RobustTerms
    outer: int = 0
    n1: int = 0
    n2: int = 0
    history: list = field(default_factory=list)
    trace: list = field(default_factory=list)
    converged: bool = False
    failures: list = field(default_factory=list)

    def record(self, phase, inner, objective, beams, placement, accepted, terms=None, bound=float("nan")):
        sc = self.scenario
        terms = robust_terms(sc, beams, placement) if terms is None else terms
        self.trace.append(
            RobustTraceRecord(
                self.outer,
                phase,
                inner,
                objective,
                bound,
                secrecy_sum_rate(sc.channels(placement), beams, sc.config),
                accepted,
                worst_constraint(terms, sc.config, beams.total_power(), sc.sdma),
            )
        )


def evaluate(scenario: Scenario, beams, placement) -> tuple[float, RobustTerms]:
    T = robust_terms(scenario, beams, placement)
    return float(robust_objective_from_terms(T, scenario.config).sum()), T


_TEMPLATES: dict = {}


def _uncertain(scenario: Scenario) -> tuple:
    return tuple(bool(e > 0) for e in scenario.eps)


def _beam_template(scenario: Scenario) -> RobustBeamProblem:
    cfg = scenario.config
    G = len(scenario.eve_grid_channels())
    key = ("beam", scenario.n_users, scenario.n_antennas, G, cfg.rc, tuple(cfg.alpha), cfg.sdma, _uncertain(scenario))
    if key not in _TEMPLATES:
        _TEMPLATES[key] = RobustBeamProblem(scenario.n_users, scenario.n_antennas, G, cfg, _uncertain(scenario))
    return _TEMPLATES[key]


def _position_template(scenario: Scenario) -> RobustPositionProblem:
    key = ("position", scenario.n_users, scenario.n_antennas, _uncertain(scenario), not scenario.sdma)
    if key not in _TEMPLATES:
        _TEMPLATES[key] = RobustPositionProblem(scenario.n_users, scenario.n_antennas, _uncertain(scenario), not scenario.sdma)
    return _TEMPLATES[key]


def initial_robust_state(scenario: Scenario, config: AoConfig = AoConfig()) -> RobustAoState:
    """Region centres, equal-power matched filters toward the estimates, tight weights."""
    placement = FaPlacement.origin(scenario.n_users)
    ch = scenario.channels(placement)
    cfg = scenario.config
    beams = mrt_beams(ch, cfg.p0, cfg.sdma)
    T = robust_terms(scenario, beams, placement)
    phase = "init"
    if worst_constraint(T, cfg, beams.total_power(), cfg.sdma) > 0:
        bs = build_robust_feasibility_problem(ch.h, scenario.eps, scenario.eve_grid_channels(), cfg)
        rep = conic.solve(bs.program, config.solver_tol)
        if not rep.ok:
            raise InfeasibleScenario(f"worst-case feasibility phase failed with status {rep.status}")
        if rep.values["slack"] < -1e-9:
            raise InfeasibleScenario(f"worst-case beam constraints infeasible at the start (best slack {float(rep.values['slack']):.3e})")
        beams = bs.beams(rep)
        T = robust_terms(scenario, beams, placement)
        phase = "feasibility"
    obj = float(robust_objective_from_terms(T, cfg).sum())
    state = RobustAoState(scenario, config, beams, placement, update_robust_aux(T.interference + 1.0, T.beta), obj, T)
    state.record(phase, 0, obj, beams, placement, True, T)
    return state


def robust_beam_loop(state: RobustAoState) -> RobustAoState:
    sc, cfg = state.scenario, state.config
    prob = _beam_template(sc)
    grid = sc.eve_grid_channels()
    h = sc.channels(state.placement).h
    for it in range(1, cfg.n1_max + 1):
        prob.update(h, sc.eps, grid, state.aux, sc.config.s0, sc.config.p0)
        report, beams = prob.solve(cfg.solver_tol)
        state.n1 += 1
        if beams is None:
            state.failures.append(f"outer {state.outer} robust beam {it}: {report.status} ({report.solver_status})")
            raise SubproblemFailure(state.failures[-1])
        cand, T = evaluate(sc, beams, state.placement)
        accepted = cand >= state.objective - ACCEPT_SLACK
        state.record("beam", it, cand, beams, state.placement, accepted, T, prob.surrogate_value(report, state.aux))
        if not accepted:
            break
        gain = cand - state.objective
        state.beams, state.objective, state.terms = beams, cand, T
        state.aux = update_robust_aux(T.interference + 1.0, T.beta)
        if gain < cfg.zeta1:
            break
    return state


def _worst_decodability(state: RobustAoState, terms: RobustTerms) -> float:
    return -np.inf if state.scenario.sdma else float(np.max(terms.decodability))


class _FixedBeamUsers:
    """Per-user worst-case quantities as functions of one user's position at fixed beams."""

    def __init__(self, scenario: Scenario, covariances):
        self.sc = scenario
        geom = scenario.geometry
        self.S, self.V, self.M = user_matrices(covariances, scenario.config.rc)
        self.g = 2.0**scenario.config.rc
        self.mix = [path_mixing(geom, k).conj().T for k in range(scenario.n_users)]

    def channel(self, k, p):
        geom = self.sc.geometry
        return self.mix[k] @ rx_field_response(p, geom.path_angles[k], geom.wavelength)

    def log_ratio(self, k, p) -> float:
        h, e = self.channel(k, p), float(self.sc.eps[k])
        sig = ball_extreme(self.S, h, e, "min").value
        intf = ball_extreme(self.V[k], h, e, "max").value
        return float(np.log2(sig + 1.0) - np.log2(intf + 1.0))

    def decodability(self, k, p) -> float:
        return ball_extreme(self.M, self.channel(k, p), float(self.sc.eps[k]), "max").value + (self.g - 1.0)

    def fd_share(self, step: float):
        """(value, gradient, Hessian) of log_ratio by central differences."""

        def share(k, p):
            p = np.asarray(p, dtype=float)
            f0 = self.log_ratio(k, p)
            grad, hess = np.zeros(2), np.zeros((2, 2))
            e = np.eye(2) * step
            fp = [self.log_ratio(k, p + e[i]) for i in range(2)]
            fm = [self.log_ratio(k, p - e[i]) for i in range(2)]
            for i in range(2):
                grad[i] = (fp[i] - fm[i]) / (2 * step)
                hess[i, i] = (fp[i] - 2 * f0 + fm[i]) / step**2
            cross = [self.log_ratio(k, p + sx * e[0] + sy * e[1]) for sx, sy in ((1, 1), (1, -1), (-1, 1), (-1, -1))]
            hess[0, 1] = hess[1, 0] = (cross[0] - cross[1] - cross[2] + cross[3]) / (4 * step**2)
            return f0, grad, hess

        return share


def robust_position_loop(state: RobustAoState) -> RobustAoState:
    sc, cfg = state.scenario, state.config
    geom = sc.geometry
    if geom.region_side == 0:
        return state
    prob = _position_template(sc)
    W = state.beams.covariances
    users = _FixedBeamUsers(sc, W)

    def feasible(terms, before):
        return _worst_decodability(state, terms) <= max(before + 1e-9, POSITION_FEAS_SLACK)

    for it in range(1, cfg.n2_max + 1):
        pos = state.placement.positions
        before = max(0.0, _worst_decodability(state, state.terms))
        per_user_cap = np.zeros(sc.n_users) if sc.sdma else np.maximum(state.terms.decodability, 0.0)
        sur = robust_position_surrogates(geom, W, pos, sc.config.rc, sc.eps)
        prob.update(sur, state.aux.m, pos, geom.region_side, geom.wavelength, sc.eps, per_user_cap)
        report, new_pos = prob.solve(cfg.solver_tol)
        state.n2 += 1
        if new_pos is None:
            state.failures.append(f"outer {state.outer} robust position {it}: {report.status} ({report.solver_status})")
            break
        new_pos = np.clip(new_pos, -geom.half_side, geom.half_side)
        start = state.objective
        placement = FaPlacement(new_pos)
        cand, T = evaluate(sc, state.beams, placement)
        accepted = cand >= state.objective - ACCEPT_SLACK and feasible(T, before)
        state.record("position", it, cand, state.beams, placement, accepted, T)
        if accepted:
            step = new_pos - pos
            for j in range(1, cfg.max_stretch + 1):
                trial = FaPlacement(np.clip(pos + 2.0**j * step, -geom.half_side, geom.half_side))
                val, Tt = evaluate(sc, state.beams, trial)
                if val <= cand or not feasible(Tt, before):
                    break
                placement, cand, T = trial, val, Tt
                state.record("stretch", it, cand, state.beams, placement, True, T)
            state.placement, state.objective, state.terms = placement, cand, T
        if cfg.newton_refine:
            cap = np.full(sc.n_users, max(before + 1e-9, POSITION_FEAS_SLACK))
            if np.all(sc.eps == 0):
                share, residual = rate_share(geom, W, sc.config.rc)
            else:
                share, residual = users.fd_share(geom.wavelength * 1e-4), users.decodability
            new = newton_refine(state.placement.positions, share, geom.half_side, geom.wavelength / 4, None if sc.sdma else residual, cap)
            trial = FaPlacement(new)
            val, Tt = evaluate(sc, state.beams, trial)
            ok = val > state.objective and feasible(Tt, before)
            state.record("newton", it, val, state.beams, trial, ok, Tt)
            if ok:
                state.placement, state.objective, state.terms = trial, val, Tt
        if state.objective == start:
            break
        state.aux = update_robust_aux(state.terms.interference + 1.0, state.terms.beta)
        if state.objective - start < cfg.zeta2:
            break
    return state


@dataclass(frozen=True)
class RobustCertificates:
    """Ball-certificate multipliers and worst-case bounds at a final point.

    ``multipliers[family]`` holds one multiplier per user for the signal,
    interference and decodability certificates; a certificate with a margin
    >= 0 proves its bound for every error in the ball. ``signal_bound`` and
    ``interference_bound`` are the certified worst signal plus noise (lower
    bound) and worst interference plus noise (upper bound); ``rate_bounds``
    are the per-user worst-case objective terms.
    """

    multipliers: dict
    margins: dict
    signal_bound: np.ndarray
    interference_bound: np.ndarray
    beta: float
    psi: np.ndarray  # (K, 3): Eve private term, Eve leakage term, Eve total term
    rate_bounds: np.ndarray

    @property
    def worst_margin(self) -> float:
        return float(min(np.min(m) for m in self.margins.values()))


def robust_certificates(scenario: Scenario, beams, placement, terms: RobustTerms | None = None) -> RobustCertificates:
    terms = robust_terms(scenario, beams, placement) if terms is None else terms
    data = certificate_rows(scenario, beams, placement, terms.signal + 1.0, terms.interference + 1.0)
    mult, marg = {}, {}
    for fam, rows in data.items():
        if not rows:
            continue
        res = [best_multiplier(A, b, c, float(e)) if e > 0 else (0.0, -float(np.real(c))) for (A, b, c), e in zip(rows, scenario.eps)]
        mult[fam] = np.array([r[0] for r in res])
        marg[fam] = np.array([r[1] for r in res])
    cfg = scenario.config
    a = cfg.alpha
    psi = np.stack(
        [
            a * (cfg.rc + np.log2(np.min(terms.eve_private) + 1.0)),
            np.log2(np.min(terms.eve_total[:, None] - terms.eve_own, axis=0) + 1.0),
            -(a + 1.0) * np.log2(np.full(scenario.n_users, terms.beta)),
        ],
        axis=1,
    )
    return RobustCertificates(mult, marg, terms.signal + 1.0, terms.interference + 1.0, terms.beta, psi, robust_objective_from_terms(terms, cfg))


@dataclass
class RobustAoResult:
    state: RobustAoState
    beams: BeamformerSet  # watts, with extracted vectors
    placement: FaPlacement
    objective: float
    secrecy: float
    certificates: RobustCertificates
    rank_residuals: np.ndarray
    rank_flag: bool
    outer_iterations: int
    wall_time: float

    @property
    def trace(self):
        return self.state.trace

    @property
    def violation(self) -> float:
        sc = self.state.scenario
        return worst_constraint(self.state.terms, sc.config, self.state.beams.total_power(), sc.sdma)


def run_algorithm2(scenario: Scenario, config: AoConfig = AoConfig()) -> RobustAoResult:
    t0 = time.perf_counter()
    state = initial_robust_state(scenario, config)
    for outer in range(1, config.n3_max + 1):
        state.outer = outer
        prev = state.objective
        try:
            robust_beam_loop(state)
        except SubproblemFailure:
            break
        if config.optimize_positions:
            robust_position_loop(state)
        state.history.append(state.objective)
        if abs(state.objective - prev) <= config.zeta3:
            state.converged = True
            break
    vecs, res, deg = [], [], []
    for W in state.beams.covariances:
        r1 = conic.extract_rank_one(W, config.degenerate_tol)
        vecs.append(r1.vector)
        res.append(r1.residual)
        deg.append(r1.degenerate)
    norm_beams = BeamformerSet(state.beams.covariances, np.array(vecs), np.array(res), np.array(deg))
    return RobustAoResult(
        state=state,
        beams=scenario.physical_beams(norm_beams),
        placement=state.placement,
        objective=state.objective,
        secrecy=secrecy_sum_rate(scenario.channels(state.placement), state.beams, scenario.config),
        certificates=robust_certificates(scenario, state.beams, state.placement, state.terms),
        rank_residuals=np.array(res),
        rank_flag=bool(np.any(np.array(res) > config.rank_tol)),
        outer_iterations=state.outer,
        wall_time=time.perf_counter() - t0,
    )
