"""Wall time of training with and without the surrogate on the same instances.

Writes one row per run plus a per-setting summary; the speedup ratio is
median(on) / median(off).

    python scripts/timing_study.py --positions 50 100 --seeds 0 1 2
"""

import argparse
import statistics
import time
from pathlib import Path

from rlgp.bench import write_csv
from rlgp.problem import GeneratorParams, generate_instance
from rlgp.training import TrainConfig, run_training


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--positions", type=int, nargs="+", default=[50, 100])
    ap.add_argument("--instance-id", type=int, default=1)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--generations", type=int, default=100)
    ap.add_argument("--out", default="out/timing")
    args = ap.parse_args()

    rows, summary = [], []
    for n in args.positions:
        inst = generate_instance(GeneratorParams(num_positions=n), args.instance_id)
        times = {"on": [], "off": []}
        for seed in args.seeds:
            for label, surrogate in (("on", True), ("off", False)):
                t0 = time.perf_counter()
                res = run_training(inst, TrainConfig(generations=args.generations, surrogate=surrogate), seed)
                ms = (time.perf_counter() - t0) * 1000
                times[label].append(ms)
                rows.append({"instance": inst.name, "surrogate": label, "seed": seed, "wall_ms": f"{ms:.1f}",
                             "real_evaluations": res.real_evaluations, "te": f"{res.best_te:.4f}"})
                print(f"{inst.name} surrogate {label:>3} seed {seed}: {ms / 1000:.1f} s, TE {res.best_te:.4f}")
        on, off = statistics.median(times["on"]), statistics.median(times["off"])
        summary.append({"instance": inst.name, "median_on_ms": f"{on:.1f}", "median_off_ms": f"{off:.1f}",
                        "ratio": f"{on / off:.3f}"})
        print(f"{inst.name}: median on/off = {on / off:.3f}")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "timing_runs.csv", rows)
    write_csv(out / "timing_summary.csv", summary)


if __name__ == "__main__":
    main()
