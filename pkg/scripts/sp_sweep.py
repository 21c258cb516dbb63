"""Max/Ave/Gap of each algorithm as the team-skill to position ratio varies.

    python scripts/sp_sweep.py --ratios 0.1 0.2 0.3 0.4 --positions 25 --runs 10 --out out/sp
"""

import argparse
from pathlib import Path

from rlgp.bench import SuiteConfig, run_sp_sweep, write_csv
from rlgp.training import TrainConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ratios", type=float, nargs="+", default=[0.1, 0.2, 0.3, 0.4])
    ap.add_argument("--positions", type=int, default=25)
    ap.add_argument("--ids", type=int, nargs="+", default=[1])
    ap.add_argument("--algorithms", nargs="+", default=["RL-GP", "BGP", "CH1", "CH2"])
    ap.add_argument("--runs", type=int, default=10)
    ap.add_argument("--generations", type=int, default=100)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="out/sp_sweep")
    args = ap.parse_args()

    suite = SuiteConfig(
        positions=(), algorithms=tuple(args.algorithms), runs=args.runs,
        train=TrainConfig(generations=args.generations),
        sp_ratios=tuple(args.ratios), sp_positions=args.positions, sp_ids=tuple(args.ids), jobs=args.jobs,
    )
    rows = run_sp_sweep(suite)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "sp_sweep.csv", rows)
    for r in rows:
        print(f"{r['sp_ratio']:>5} {r['instance']:>14} {r['algorithm']:>6}  max {r['max']}  ave {r['ave']}  gap {r['gap_ave']}")


if __name__ == "__main__":
    main()
