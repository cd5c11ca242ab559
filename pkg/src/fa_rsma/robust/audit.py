"""Sampled check of worst-case feasibility and of the ball certificates.

Each user's error sphere is sampled, every grid angle is enumerated, and the
certificate matrices are rebuilt from the supplied multipliers. A margin is
positive when the constraint holds; the audit passes when every margin is at
least ``-tol``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..channel import FaPlacement, sample_error_sphere
from ..rates import as_covariances
from ..scenario import Scenario
from .objective import certificate_rows, user_matrices
from .sprocedure import certificate_margin

FAMILIES = ("power", "signal", "interference", "decodability", "eve_cap", "sensing", "certificates")


@dataclass(frozen=True)
class RobustAuditReport:
    margins: dict  # family -> worst margin (>= 0 means satisfied)
    n_samples: int
    tol: float

    @property
    def worst(self) -> float:
        return float(min(self.margins.values()))

    @property
    def passes(self) -> bool:
        return self.worst >= -self.tol

    def violations(self) -> list[str]:
        return [f for f, m in self.margins.items() if m < -self.tol]


def robust_feasibility_audit(
    scenario: Scenario,
    beams,
    placement: FaPlacement | np.ndarray,
    certificates=None,
    n_samples: int = 10_000,
    seed: int = 0,
    tol: float = 1e-6,
) -> RobustAuditReport:
    """Worst sampled margin of every robust constraint family.

    With ``certificates`` (a :class:`RobustCertificates`), the certified
    signal and interference bounds are checked against the samples and each
    certificate matrix is checked for positive semidefiniteness at the given
    multipliers.
    """
    cov = as_covariances(beams)
    cfg = scenario.config
    K = scenario.n_users
    S, V, M = user_matrices(cov, cfg.rc)
    g = 2.0**cfg.rc
    h = scenario.channels(placement).h
    rng = np.random.default_rng(seed)
    marg = {f: np.inf for f in FAMILIES}
    marg["power"] = cfg.p0 - float(np.real(np.trace(cov.sum(axis=0))))
    for k in range(K):
        eps = float(scenario.eps[k])
        x = h[k] + (sample_error_sphere(n_samples, h.shape[1], eps, rng) if eps > 0 else np.zeros((1, h.shape[1])))
        sig = np.real(np.einsum("sn,nm,sm->s", x.conj(), S, x))
        intf = np.real(np.einsum("sn,nm,sm->s", x.conj(), V[k], x))
        dec = np.real(np.einsum("sn,nm,sm->s", x.conj(), M, x)) + (g - 1.0)
        if not scenario.sdma:
            marg["decodability"] = min(marg["decodability"], float(-dec.max()))
        if certificates is not None:
            marg["signal"] = min(marg["signal"], float(sig.min() + 1.0 - certificates.signal_bound[k]))
            marg["interference"] = min(marg["interference"], float(certificates.interference_bound[k] - intf.max() - 1.0))
    grid = scenario.eve_grid_channels()
    q = np.real(np.einsum("gn,inm,gm->gi", grid.conj(), cov, grid))
    total, private = q.sum(axis=1), q[:, :-1].sum(axis=1)
    marg["sensing"] = float(np.min(total - cfg.s0))
    if not scenario.sdma:
        marg["eve_cap"] = float(np.min(g * (private + 1.0) - total - 1.0))
    if certificates is not None:
        rows = certificate_rows(scenario, cov, placement, certificates.signal_bound, certificates.interference_bound)
        for fam, fam_rows in rows.items():
            mult = certificates.multipliers.get(fam)
            if mult is None:
                continue
            for k, (A2, b2, c2) in enumerate(fam_rows):
                eps = float(scenario.eps[k])
                m = certificate_margin(A2, b2, c2, eps, float(mult[k])) if eps > 0 else -c2
                marg["certificates"] = min(marg["certificates"], m)
    marg = {f: (0.0 if m == np.inf else float(m)) for f, m in marg.items()}
    return RobustAuditReport(marg, n_samples, tol)
