"""Alternating optimization of beams and antenna positions with perfect CSI."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .. import conic
from ..channel import FaPlacement
from ..rates import AuxVariables, BeamformerSet, optimal_aux, secrecy_sum_rate, secure_rate_objective
from ..scenario import Scenario
from .beam import BeamProblem, ConstraintAudit, audit_beam_constraints, build_feasibility_problem, mrt_beams
from .position import PositionProblem, newton_refine, position_surrogates, rate_share

# a candidate is kept unless it loses more than this against the current iterate
ACCEPT_SLACK = 1e-9
# solver-level slack allowed on the decodability residual of a position candidate
POSITION_FEAS_SLACK = 1e-7


class InfeasibleScenario(RuntimeError):
    pass


class SubproblemFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class AoConfig:
    zeta1: float = 1e-4
    zeta2: float = 1e-4
    zeta3: float = 1e-4
    n1_max: int = 30
    n2_max: int = 30
    n3_max: int = 50
    optimize_positions: bool = True
    solver_tol: float | None = None
    rank_tol: float = 1e-4
    degenerate_tol: float = 1e-5  # beams below this share of the budget count as switched off
    # accepted position steps are stretched by factors of 2 while the exact objective keeps improving
    max_stretch: int = 6
    # per-user safeguarded Newton step on the exact rate terms after each surrogate step
    newton_refine: bool = True


@dataclass
class TraceRecord:
    outer: int
    phase: str  # init, feasibility, beam, position, stretch, newton
    inner: int
    objective: float  # log-difference secure-rate objective
    secrecy: float  # clamped secrecy sum rate
    accepted: bool
    violation: float  # worst signed constraint violation (normalized units)


@dataclass
class AoState:
    scenario: Scenario
    config: AoConfig
    beams: BeamformerSet
    placement: FaPlacement
    aux: AuxVariables
    objective: float
    outer: int = 0
    n1: int = 0
    n2: int = 0
    history: list = field(default_factory=list)
    trace: list = field(default_factory=list)
    converged: bool = False
    failures: list = field(default_factory=list)

    def channels(self):
        return self.scenario.channels(self.placement)

    def record(self, phase: str, inner: int, objective: float, beams, placement, accepted: bool):
        ch = self.scenario.channels(placement)
        self.trace.append(
            TraceRecord(
                self.outer,
                phase,
                inner,
                objective,
                secrecy_sum_rate(ch, beams, self.scenario.config),
                accepted,
                audit_beam_constraints(ch, beams, self.scenario.config).worst,
            )
        )


_TEMPLATES: dict = {}


def _beam_template(scenario: Scenario) -> BeamProblem:
    cfg = scenario.config
    key = ("beam", scenario.n_users, scenario.n_antennas, cfg.rc, tuple(cfg.alpha), cfg.sdma)
    if key not in _TEMPLATES:
        _TEMPLATES[key] = BeamProblem(scenario.n_users, scenario.n_antennas, cfg)
    return _TEMPLATES[key]


def _position_template(scenario: Scenario) -> PositionProblem:
    key = ("position", scenario.n_users, not scenario.sdma)
    if key not in _TEMPLATES:
        _TEMPLATES[key] = PositionProblem(scenario.n_users, with_decodability=not scenario.sdma)
    return _TEMPLATES[key]


def objective_value(scenario: Scenario, beams, placement) -> float:
    return float(secure_rate_objective(scenario.channels(placement), beams, scenario.config).sum())


def initial_state(scenario: Scenario, config: AoConfig = AoConfig()) -> AoState:
    """Region centres, equal-power matched filters, tight weights.

    When the matched filters violate a beam constraint, a slack-maximizing
    program supplies the starting beams instead.
    """
    placement = FaPlacement.origin(scenario.n_users)
    ch = scenario.channels(placement)
    cfg = scenario.config
    beams = mrt_beams(ch, cfg.p0, cfg.sdma)
    phase = "init"
    if not audit_beam_constraints(ch, beams, cfg).passes(0.0):
        bs = build_feasibility_problem(ch, cfg)
        rep = conic.solve(bs.program, config.solver_tol)
        if not rep.ok:
            raise InfeasibleScenario(f"feasibility phase failed with status {rep.status}")
        if rep.values["slack"] < -1e-9:
            raise InfeasibleScenario(f"beam constraints infeasible at the start (best slack {float(rep.values['slack']):.3e})")
        beams = bs.beams(rep)
        phase = "feasibility"
    state = AoState(scenario, config, beams, placement, optimal_aux(ch, beams), objective_value(scenario, beams, placement))
    state.record(phase, 0, state.objective, beams, placement, True)
    return state


def beam_inner_loop(state: AoState) -> AoState:
    """Beam solves alternating with weight refreshes until the gain drops below zeta1."""
    sc, cfg = state.scenario, state.config
    prob = _beam_template(sc)
    ch = state.channels()
    for it in range(1, cfg.n1_max + 1):
        prob.update(ch, state.aux, sc.config.s0, sc.config.p0)
        report, beams = prob.solve(cfg.solver_tol)
        state.n1 += 1
        if beams is None:
            state.failures.append(f"outer {state.outer} beam {it}: {report.status} ({report.solver_status})")
            raise SubproblemFailure(state.failures[-1])
        cand = objective_value(sc, beams, state.placement)
        accepted = cand >= state.objective - ACCEPT_SLACK
        state.record("beam", it, cand, beams, state.placement, accepted)
        if not accepted:
            break
        gain = cand - state.objective
        state.beams, state.objective = beams, cand
        state.aux = optimal_aux(ch, beams)
        if gain < cfg.zeta1:
            break
    return state


def _worst_decodability(scenario: Scenario, beams, placement) -> float:
    if scenario.sdma:
        return -np.inf
    return float(np.max(audit_beam_constraints(scenario.channels(placement), beams, scenario.config).decodability))


def _position_feasible(scenario: Scenario, beams, placement, before: float) -> bool:
    """The decodability residual may not exceed its level at the expansion point."""
    return _worst_decodability(scenario, beams, placement) <= max(before + 1e-9, POSITION_FEAS_SLACK)


def position_loop(state: AoState) -> AoState:
    """Surrogate position steps, each followed by a weight refresh, until the gain drops below zeta2."""
    sc, cfg = state.scenario, state.config
    geom = sc.geometry
    if geom.region_side == 0:
        return state
    prob = _position_template(sc)
    W = state.beams.covariances
    for it in range(1, cfg.n2_max + 1):
        pos = state.placement.positions
        sur = position_surrogates(geom, W, pos, sc.config.rc)
        if all(s.neg_signal.delta == 0 and s.interference.delta == 0 and s.decodability.delta == 0 for s in sur):
            break
        prob.update(sur, state.aux.m, pos, geom.region_side, geom.wavelength)
        report, new_pos = prob.solve(cfg.solver_tol)
        state.n2 += 1
        if new_pos is None:
            state.failures.append(f"outer {state.outer} position {it}: {report.status} ({report.solver_status})")
            break
        new_pos = np.clip(new_pos, -geom.half_side, geom.half_side)
        before = max(0.0, _worst_decodability(sc, state.beams, state.placement))
        start = state.objective
        placement = FaPlacement(new_pos)
        cand = objective_value(sc, state.beams, placement)
        accepted = cand >= state.objective - ACCEPT_SLACK and _position_feasible(sc, state.beams, placement, before)
        state.record("position", it, cand, state.beams, placement, accepted)
        if accepted:
            step = new_pos - pos
            for j in range(1, cfg.max_stretch + 1):
                trial = FaPlacement(np.clip(pos + 2.0**j * step, -geom.half_side, geom.half_side))
                val = objective_value(sc, state.beams, trial)
                if val <= cand or not _position_feasible(sc, state.beams, trial, before):
                    break
                placement, cand = trial, val
                state.record("stretch", it, cand, state.beams, placement, True)
            state.placement, state.objective = placement, cand
        if cfg.newton_refine:
            cap = None if sc.sdma else np.full(sc.n_users, max(before + 1e-9, POSITION_FEAS_SLACK))
            share, residual = rate_share(geom, W, sc.config.rc)
            new = newton_refine(state.placement.positions, share, geom.half_side, geom.wavelength / 4, None if sc.sdma else residual, cap)
            trial = FaPlacement(new)
            val = objective_value(sc, state.beams, trial)
            ok = val > state.objective and _position_feasible(sc, state.beams, trial, before)
            state.record("newton", it, val, state.beams, trial, ok)
            if ok:
                state.placement, state.objective = trial, val
        if state.objective == start:
            break
        state.aux = optimal_aux(state.channels(), state.beams)
        if state.objective - start < cfg.zeta2:
            break
    return state


@dataclass
class AoResult:
    state: AoState
    beams: BeamformerSet  # watts, with extracted vectors
    placement: FaPlacement
    objective: float
    secrecy: float
    audit: ConstraintAudit
    rank_residuals: np.ndarray
    rank_flag: bool
    outer_iterations: int
    wall_time: float

    @property
    def trace(self):
        return self.state.trace


def finalize(state: AoState, t0: float) -> AoResult:
    sc, cfg = state.scenario, state.config
    vecs, res, deg = [], [], []
    for W in state.beams.covariances:
        r1 = conic.extract_rank_one(W, cfg.degenerate_tol)
        vecs.append(r1.vector)
        res.append(r1.residual)
        deg.append(r1.degenerate)
    norm_beams = BeamformerSet(state.beams.covariances, np.array(vecs), np.array(res), np.array(deg))
    ch = state.channels()
    return AoResult(
        state=state,
        beams=sc.physical_beams(norm_beams),
        placement=state.placement,
        objective=state.objective,
        secrecy=secrecy_sum_rate(ch, state.beams, sc.config),
        audit=audit_beam_constraints(ch, state.beams, sc.config),
        rank_residuals=np.array(res),
        rank_flag=bool(np.any(np.array(res) > cfg.rank_tol)),
        outer_iterations=state.outer,
        wall_time=time.perf_counter() - t0,
    )


def run_algorithm1(scenario: Scenario, config: AoConfig = AoConfig()) -> AoResult:
    t0 = time.perf_counter()
    state = initial_state(scenario, config)
    for outer in range(1, config.n3_max + 1):
        state.outer = outer
        prev = state.objective
        try:
            beam_inner_loop(state)
        except SubproblemFailure:
            break
        if config.optimize_positions:
            position_loop(state)
        state.history.append(state.objective)
        if abs(state.objective - prev) <= config.zeta3:
            state.converged = True
            break
    return finalize(state, t0)
