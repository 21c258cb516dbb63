"""Experiment harness: repeated runs over instances and algorithms, CSV reports.

Every CSV written here is a pure function of the suite configuration except
``timing.csv``, which holds wall-clock measurements and is only produced when
``SuiteConfig.timing`` is set.
"""

from __future__ import annotations

import csv
import json
import logging
import multiprocessing as mp
import statistics
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from rlgp.baselines import GA_NAME, VNS_NAME, BaselineConfig, ch1_solve, ch2_solve, ga_solve, vns_solve
from rlgp.evaluator import result_to_dict
from rlgp.problem import GeneratorParams, Instance, generate_instance, load_instance
from rlgp.training import TrainConfig, run_training

log = logging.getLogger(__name__)

REFERENCE = "RL-GP"
ALGORITHMS = ("RL-GP", "BGP", "CH1", "CH2", "GA", "VNS")
DISPLAY = {"GA": GA_NAME, "VNS": VNS_NAME}


def gap(te_other: float, te_rlgp: float) -> Optional[float]:
    """Percentage difference from the RL-GP value; None (reported as NA) when undefined."""
    if te_rlgp <= 0:
        return None
    return (te_other - te_rlgp) / te_rlgp * 100.0


def fmt_gap(g: Optional[float]) -> str:
    return "NA" if g is None else f"{g:.2f}"


def run_seeds(base: int, runs: int) -> list[int]:
    return list(range(base, base + runs))


@dataclass
class RunRecord:
    instance: str
    algorithm: str
    seed: int
    te: float
    result: dict  # export schema; training runs carry the full TrainResult dict
    elapsed_ms: float = 0.0


def run_algorithm(
    name: str,
    inst: Instance,
    seed: int,
    train: Optional[TrainConfig] = None,
    baseline: Optional[BaselineConfig] = None,
) -> RunRecord:
    t0 = time.perf_counter()
    if name in ("RL-GP", "BGP"):
        cfg = train or TrainConfig()
        if name == "BGP":
            cfg = replace(cfg, surrogate=False, mode="p1")
        res = run_training(inst, cfg, seed)
        te, payload = res.best_te, res.to_dict()
    elif name in ("CH1", "CH2"):
        asg = ch1_solve(inst) if name == "CH1" else ch2_solve(inst)
        payload = result_to_dict(inst, asg)
        te = payload["total_efficiency"]
    elif name in ("GA", "VNS"):
        solver = ga_solve if name == "GA" else vns_solve
        asg, te = solver(inst, baseline, seed)
        payload = result_to_dict(inst, asg)
    else:
        raise ValueError(f"unknown algorithm {name!r}; expected one of {ALGORITHMS}")
    elapsed = (time.perf_counter() - t0) * 1000.0
    return RunRecord(inst.name, DISPLAY.get(name, name), int(seed), float(te), payload, elapsed)


@dataclass
class SuiteConfig:
    """What to run. Generated instances are named "P-ID" (positions, seed)."""

    positions: Sequence[int] = (25,)
    instance_ids: Sequence[int] = (1,)
    instance_files: Sequence[str] = ()
    algorithms: Sequence[str] = ("RL-GP", "BGP", "CH1", "CH2")
    runs: int = 10
    base_seed: int = 0
    train: TrainConfig = field(default_factory=TrainConfig)
    baseline: BaselineConfig = field(default_factory=BaselineConfig)
    sp_ratios: Sequence[float] = ()  # S/P sweep; empty skips it
    sp_positions: int = 25
    sp_ids: Sequence[int] = (1,)
    jobs: int = 1
    timing: bool = False

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad:
            raise ValueError(f"unknown algorithms {bad}; expected a subset of {ALGORITHMS}")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")

    def instances(self) -> list[Instance]:
        out = []
        for path in self.instance_files:
            p = Path(path)
            if not p.exists():
                raise FileNotFoundError(f"instance file not found: {p}")
            out.append(load_instance(p))
        for n in self.positions:
            for i in self.instance_ids:
                out.append(generate_instance(GeneratorParams(num_positions=n), i))
        return out


def _task(args) -> RunRecord:
    name, inst, seed, train, baseline = args
    return run_algorithm(name, inst, seed, train, baseline)


def _run_all(tasks: list, jobs: int) -> list[RunRecord]:
    if jobs == 1 or len(tasks) <= 1:
        return [_task(t) for t in tasks]
    with mp.get_context("spawn").Pool(jobs) as pool:
        return list(pool.imap(_task, tasks))  # order preserved


def _grid(cfg: SuiteConfig, instances: list[Instance]) -> list:
    return [
        (alg, inst, seed, cfg.train, cfg.baseline)
        for inst in instances
        for alg in cfg.algorithms
        for seed in run_seeds(cfg.base_seed, cfg.runs)
    ]


def summarize(records: list[RunRecord]) -> list[dict]:
    """Max/Ave per (instance, algorithm) and Gap against RL-GP, in first-seen order."""
    groups: dict[tuple[str, str], list[float]] = {}
    for r in records:
        groups.setdefault((r.instance, r.algorithm), []).append(r.te)
    rows = []
    for (inst, alg), tes in groups.items():
        ref = groups.get((inst, REFERENCE))
        mx, ave = max(tes), statistics.fmean(tes)
        rows.append(
            {
                "instance": inst,
                "algorithm": alg,
                "runs": len(tes),
                "max": f"{mx:.4f}",
                "ave": f"{ave:.4f}",
                "gap_max": fmt_gap(gap(mx, max(ref))) if ref else "NA",
                "gap_ave": fmt_gap(gap(ave, statistics.fmean(ref))) if ref else "NA",
            }
        )
    return rows


def timing_rows(records: list[RunRecord]) -> list[dict]:
    groups: dict[tuple[str, str], list[float]] = {}
    for r in records:
        groups.setdefault((r.instance, r.algorithm), []).append(r.elapsed_ms)
    rows = []
    for (inst, alg), ms in groups.items():
        q = np.percentile(ms, [0, 25, 50, 75, 100])
        rows.append({"instance": inst, "algorithm": alg, "runs": len(ms)}
                    | {k: f"{v:.1f}" for k, v in zip(("min_ms", "q1_ms", "median_ms", "q3_ms", "max_ms"), q)})
    return rows


def write_csv(path: Path, rows: list[dict], header: Optional[list[str]] = None):
    header = header or (list(rows[0]) if rows else [])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=header, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def write_json(path: Path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def run_benchmark(cfg: SuiteConfig, out: Path) -> dict[str, Path]:
    """Run the suite and write its reports into ``out``; returns the files written."""
    out = Path(out)
    (out / "runs").mkdir(parents=True, exist_ok=True)
    records = _run_all(_grid(cfg, cfg.instances()), cfg.jobs)

    for r in records:
        write_json(out / "runs" / f"{r.instance}__{r.algorithm}__{r.seed}.json", r.result)
    files = {
        "runs": out / "runs.csv",
        "summary": out / "summary.csv",
        "suite": out / "suite.json",
    }
    write_csv(files["runs"], [{"instance": r.instance, "algorithm": r.algorithm, "seed": r.seed,
                               "total_efficiency": repr(r.te)} for r in records],
              ["instance", "algorithm", "seed", "total_efficiency"])
    write_csv(files["summary"], summarize(records),
              ["instance", "algorithm", "runs", "max", "ave", "gap_max", "gap_ave"])
    write_json(files["suite"], _suite_echo(cfg))

    if cfg.sp_ratios:
        files["sp_sweep"] = out / "sp_sweep.csv"
        sweep = run_sp_sweep(cfg)
        write_csv(files["sp_sweep"], sweep, ["sp_ratio", "instance", "algorithm", "runs", "max", "ave", "gap_max", "gap_ave"])
    if cfg.timing:
        files["timing"] = out / "timing.csv"
        write_csv(files["timing"], timing_rows(records),
                  ["instance", "algorithm", "runs", "min_ms", "q1_ms", "median_ms", "q3_ms", "max_ms"])
    log.info("benchmark written to %s", out)
    return files


def run_sp_sweep(cfg: SuiteConfig) -> list[dict]:
    """Max/Ave/Gap per S/P ratio on freshly generated instances."""
    rows = []
    for ratio in cfg.sp_ratios:
        insts = [
            generate_instance(GeneratorParams(num_positions=cfg.sp_positions, sp_ratio=ratio), i,
                              name=f"{cfg.sp_positions}-{i}-sp{ratio:g}")
            for i in cfg.sp_ids
        ]
        records = _run_all(_grid(cfg, insts), cfg.jobs)
        rows.extend({"sp_ratio": f"{ratio:g}"} | row for row in summarize(records))
    return rows


def _suite_echo(cfg: SuiteConfig) -> dict:
    d = asdict(cfg)
    d.pop("jobs")  # worker count does not change results
    d["seeds"] = run_seeds(cfg.base_seed, cfg.runs)
    return json.loads(json.dumps(d, default=list))
