"""Experiment configuration and the power-coupled R_c / S_0 schedules."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from ..channel import ConfigurationError

SCHEMES = ("prop-fa", "fa-sdma", "fpa-rsma", "fpa-sdma")
CSI_MODES = ("perfect", "imperfect")

# linear in dBm between these sweep endpoints
SCHEDULE_DBM = (20.0, 40.0)
RC_RANGE = (0.5, 2.0)
# S0 as a share of the best-case sensing energy min_grid ||h_e||^2 P0
S0_RANGE = (0.02, 0.2)


def scheduled(power_dbm, endpoints, dbm=SCHEDULE_DBM) -> np.ndarray:
    """Linear map of the transmit power onto ``endpoints``, clipped at the ends."""
    t = (np.asarray(power_dbm, dtype=float) - dbm[0]) / (dbm[1] - dbm[0])
    return endpoints[0] + np.clip(t, 0.0, 1.0) * (endpoints[1] - endpoints[0])


@dataclass(frozen=True)
class ExperimentConfig:
    schemes: tuple[str, ...] = SCHEMES
    csi: str = "perfect"
    n_users: int = 4
    n_antennas: int = 4
    n_paths: int = 12
    power_dbm: tuple[float, ...] = (30.0,)
    region_lambda: tuple[float, ...] = (3.0,)
    rc: float | None = None  # fixed R_c; None follows the power schedule
    s0: tuple[float, ...] | None = None  # fixed S0 shares (a sweep); None follows the power schedule
    rel_csi_error: float = 0.01
    drops: int = 20
    seed: int = 0
    max_outer: int = 50
    audit: bool = True
    audit_samples: int = 10_000
    workers: int = 1
    out: str = "results"
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        bad = [s for s in self.schemes if s not in SCHEMES]
        if bad or not self.schemes:
            raise ConfigurationError(f"unknown schemes {bad}; choose from {SCHEMES}")
        if self.csi not in CSI_MODES:
            raise ConfigurationError(f"csi must be one of {CSI_MODES}")
        if self.drops < 1:
            raise ConfigurationError("drops must be >= 1")
        if not self.power_dbm or not self.region_lambda or (self.s0 is not None and not self.s0):
            raise ConfigurationError("sweeps must be nonempty")
        if any(a < 0 for a in self.region_lambda):
            raise ConfigurationError("region sides must be >= 0")
        if self.rc is not None and self.rc < 0:
            raise ConfigurationError("R_c must be >= 0")
        if self.max_outer < 1 or self.workers < 1:
            raise ConfigurationError("max_outer and workers must be >= 1")

    def rc_at(self, power_dbm: float) -> float:
        return float(self.rc) if self.rc is not None else float(scheduled(power_dbm, RC_RANGE))

    def s0_shares(self, power_dbm: float) -> tuple[float, ...]:
        return tuple(self.s0) if self.s0 is not None else (float(scheduled(power_dbm, S0_RANGE)),)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("out")
        d.pop("workers")
        return d

    def digest(self) -> str:
        """SHA-256 of the canonical JSON of every field that affects results."""
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()
