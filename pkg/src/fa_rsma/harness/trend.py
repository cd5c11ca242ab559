"""Paired-drop ordering checks between schemes and across region sizes."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

ORDERINGS = (("prop-fa", "fa-sdma"), ("prop-fa", "fpa-rsma"), ("fpa-rsma", "fpa-sdma"))


@dataclass(frozen=True)
class TrendOutcome:
    name: str
    held: int
    total: int
    pass_rate_needed: float

    @property
    def rate(self) -> float:
        return self.held / self.total if self.total else float("nan")

    @property
    def passes(self) -> bool:
        return self.total > 0 and self.rate >= self.pass_rate_needed

    def line(self) -> str:
        return f"{'PASS' if self.passes else 'FAIL'} {self.name}: {self.held}/{self.total} drops ({self.rate:.0%}, need {self.pass_rate_needed:.0%})"


def trend_check(rows, slack: float = 1e-4, pass_rate: float = 0.95, metric: str = "secrecy") -> list[TrendOutcome]:
    """Per-drop orderings at matched (drop, power, S0, region).

    A drop counts once per ordering; it holds when the ordering holds at every
    matched sweep point of that drop. Failed runs make the comparison count
    as not held.
    """
    by_point = defaultdict(dict)
    for r in rows:
        by_point[(r.drop, r.power_dbm, r.s0_share, r.region_lambda)][r.scheme] = r
    out = []
    for a, b in ORDERINGS:
        verdict = {}
        for (drop, *_), runs in by_point.items():
            if a not in runs or b not in runs:
                continue
            ra, rb = runs[a], runs[b]
            ok = ra.ok and rb.ok and getattr(ra, metric) >= getattr(rb, metric) - slack
            verdict[drop] = verdict.get(drop, True) and ok
        out.append(TrendOutcome(f"{a} >= {b}", sum(verdict.values()), len(verdict), pass_rate))
    series = defaultdict(list)
    for r in rows:
        if r.scheme == "prop-fa":
            series[(r.drop, r.power_dbm, r.s0_share)].append(r)
    verdict = {}
    for (drop, *_), runs in series.items():
        runs = sorted(runs, key=lambda r: r.region_lambda)
        if len(runs) < 2:
            continue
        ok = all(r.ok for r in runs) and all(getattr(y, metric) >= getattr(x, metric) - slack for x, y in zip(runs, runs[1:]))
        verdict[drop] = verdict.get(drop, True) and ok
    out.append(TrendOutcome("prop-fa non-decreasing in region size", sum(verdict.values()), len(verdict), pass_rate))
    return out
