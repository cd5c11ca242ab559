"""Monte-Carlo drops over the four schemes with paired seeds.

Every scheme sees the same drop (seeded by ``seed + drop``). Fixed-position
schemes never move the antennas, so one run per (drop, power, S0) is reused
for every region size.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..channel import ScenarioConfig, dbm_to_watt, sample_scenario
from ..perfect.ao import AoConfig, run_algorithm1
from ..rates import RsmaConfig
from ..robust.ao import run_algorithm2
from ..robust.audit import robust_feasibility_audit
from ..scenario import Scenario
from .config import ExperimentConfig

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ResultRow:
    scheme: str
    csi: str
    seed: int
    drop: int
    power_dbm: float
    region_lambda: float
    s0_share: float
    rc: float
    secrecy: float  # secrecy sum rate at the final point (at the estimates for imperfect CSI)
    objective: float  # log-difference objective (worst case for imperfect CSI)
    certified: float  # worst-case objective backed by the certificates; nan for perfect CSI
    outer_iterations: int
    converged: bool
    wall_time: float
    feasible: bool
    rank_flag: bool
    status: str  # "ok" or "failed: <reason>"

    @property
    def ok(self) -> bool:
        return self.status == "ok"


@dataclass(frozen=True)
class TracePoint:
    scheme: str
    drop: int
    power_dbm: float
    region_lambda: float
    s0_share: float
    step: int
    outer: int
    phase: str
    objective: float
    secrecy: float
    accepted: bool
    violation: float


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list = field(default_factory=list)
    traces: list = field(default_factory=list)

    @property
    def failures(self) -> list:
        return [r for r in self.rows if not r.ok]

    def mean_secrecy(self, **match) -> float:
        vals = [r.secrecy for r in self.rows if r.ok and all(getattr(r, k) == v for k, v in match.items())]
        return float(np.mean(vals)) if vals else math.nan


def scheme_flags(scheme: str) -> tuple[bool, bool]:
    """(sdma, fixed positions) for a scheme name."""
    return scheme.endswith("sdma"), scheme.startswith("fpa")


def build_scenario(config: ExperimentConfig, drop: int, power_dbm: float, s0_share: float, region_lambda: float, sdma: bool) -> Scenario:
    sc_cfg = ScenarioConfig(
        n_users=config.n_users,
        n_antennas=config.n_antennas,
        n_paths=config.n_paths,
        rel_csi_error=config.rel_csi_error,
    )
    geo, ch = sample_scenario(config.seed + drop, sc_cfg)
    geo = geo.with_region(region_lambda * geo.wavelength)
    p0 = float(dbm_to_watt(power_dbm))
    rc = config.rc_at(power_dbm)
    probe = Scenario.from_physical(geo, ch, RsmaConfig.uniform(config.n_users, rc, 0.0, p0))
    s0 = s0_share * probe.max_sensing() * ch.noise_eve
    return Scenario.from_physical(geo, ch, RsmaConfig.uniform(config.n_users, rc, s0, p0, sdma))


def run_one(config: ExperimentConfig, scenario: Scenario, fixed: bool):
    ao = AoConfig(optimize_positions=not fixed, n3_max=config.max_outer)
    if config.csi == "perfect":
        res = run_algorithm1(scenario, ao)
        feasible = res.audit.passes(1e-6) if config.audit else True
        certified = math.nan
    else:
        res = run_algorithm2(scenario, ao)
        if config.audit:
            rep = robust_feasibility_audit(scenario, res.state.beams, res.placement, res.certificates, config.audit_samples, seed=0)
            feasible = rep.passes
        else:
            feasible = True
        certified = float(np.sum(res.certificates.rate_bounds))
    return res, feasible, certified


def run_drop(config: ExperimentConfig, drop: int):
    rows, traces = [], []
    for power in config.power_dbm:
        for share in config.s0_shares(power):
            for scheme in config.schemes:
                sdma, fixed = scheme_flags(scheme)
                regions = config.region_lambda
                cache = None
                for region in regions:
                    key = dict(scheme=scheme, csi=config.csi, seed=config.seed + drop, drop=drop, power_dbm=float(power), region_lambda=float(region), s0_share=float(share))
                    if fixed and cache is not None:
                        rows.append(ResultRow(**key, **cache))
                        continue
                    try:
                        sc = build_scenario(config, drop, power, share, 0.0 if fixed else region, sdma)
                        res, feasible, certified = run_one(config, sc, fixed)
                    except Exception as exc:  # logged and excluded, never averaged
                        log.warning("drop %d %s P=%g dBm A0=%g: %s", drop, scheme, power, region, exc)
                        vals = dict(rc=config.rc_at(power), secrecy=math.nan, objective=math.nan, certified=math.nan, outer_iterations=0, converged=False, wall_time=0.0, feasible=False, rank_flag=False, status=f"failed: {type(exc).__name__}: {exc}".replace("\n", " "))
                    else:
                        vals = dict(
                            rc=sc.config.rc,
                            secrecy=float(res.secrecy),
                            objective=float(res.objective),
                            certified=certified,
                            outer_iterations=int(res.outer_iterations),
                            converged=bool(res.state.converged),
                            wall_time=float(res.wall_time),
                            feasible=bool(feasible),
                            rank_flag=bool(res.rank_flag),
                            status="ok",
                        )
                        for i, t in enumerate(res.trace):
                            traces.append(TracePoint(scheme, drop, float(power), float(region), float(share), i, t.outer, t.phase, float(t.objective), float(t.secrecy), bool(t.accepted), float(t.violation)))
                    rows.append(ResultRow(**key, **vals))
                    if fixed:
                        cache = vals
    return drop, rows, traces


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """All drops, merged in drop order regardless of worker scheduling."""
    drops = range(config.drops)
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            parts = list(pool.map(run_drop, [config] * config.drops, drops))
    else:
        parts = [run_drop(config, d) for d in drops]
    out = ExperimentResult(config)
    for _, rows, traces in sorted(parts, key=lambda p: p[0]):
        out.rows.extend(rows)
        out.traces.extend(traces)
    if out.failures:
        log.warning("%d of %d runs failed and are excluded from the means", len(out.failures), len(out.rows))
    return out
