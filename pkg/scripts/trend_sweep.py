"""Four-scheme region sweep at one power level, then the paired-drop ordering checks.

    python3 scripts/trend_sweep.py --drops 20 --out results/trend
"""

import argparse

from fa_rsma.harness.config import ExperimentConfig
from fa_rsma.harness.experiment import run_experiment
from fa_rsma.harness.outputs import emit_outputs
from fa_rsma.harness.trend import trend_check


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--drops", type=int, default=20)
    ap.add_argument("--power-dbm", type=float, default=30.0)
    ap.add_argument("--rc", type=float, default=None)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="results/trend")
    args = ap.parse_args()

    cfg = ExperimentConfig(power_dbm=(args.power_dbm,), region_lambda=(1.0, 3.0, 5.0), drops=args.drops, rc=args.rc, audit=False, workers=args.workers, out=args.out)
    result = run_experiment(cfg)
    emit_outputs(result)
    for t in trend_check(result.rows):
        print(t.line())
    for scheme in cfg.schemes:
        print(scheme, " ".join(f"{a:g}λ {result.mean_secrecy(scheme=scheme, region_lambda=a):.4f}" for a in cfg.region_lambda))


if __name__ == "__main__":
    main()
