"""Command-line entry point: ``rlgp {gen,validate,solve,train,bench,oracle}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from rlgp.baselines import GA_NAME, VNS_NAME, BaselineConfig, ch1_solve, ch2_solve, ga_solve, vns_solve
from rlgp.bench import SuiteConfig, run_benchmark, write_json
from rlgp.evaluator import OracleRefused, brute_force_optimum, result_to_dict
from rlgp.gp.decode import decode
from rlgp.gp.population import VariationConfig
from rlgp.gp.tree import parse
from rlgp.problem import (
    GeneratorParams,
    InstanceParseError,
    InstanceValidationError,
    generate_instance,
    load_instance,
    save_instance,
    validate_instance,
)
from rlgp.rl import RLConfig
from rlgp.training import TrainConfig, run_training

log = logging.getLogger("rlgp")


def _train_args(p: argparse.ArgumentParser):
    g = p.add_argument_group("learning")
    g.add_argument("--generations", type=int, default=100)
    g.add_argument("--pop-size", type=int, default=100)
    g.add_argument("--epsilon", type=float, default=0.2)
    g.add_argument("--alpha", type=float, default=0.01)
    g.add_argument("--discount", type=float, default=0.9)
    g.add_argument("--k", type=int, default=5)
    g.add_argument("--refresh", type=int, default=5)
    g.add_argument("--surrogate", choices=("on", "off"), default=None)
    g.add_argument("--mode", choices=("auto", "p1", "p2", "p3", "p4"), default=None)


def train_config(args, algorithm: str = "RL-GP") -> TrainConfig:
    surrogate = {"on": True, "off": False, None: None}[args.surrogate]
    mode = args.mode
    if algorithm == "BGP":
        if surrogate is True or mode not in (None, "p1"):
            raise SystemExit("BGP fixes --mode p1 and --surrogate off; drop the conflicting flag")
        surrogate, mode = False, "p1"
    return TrainConfig(
        pop_size=args.pop_size,
        generations=args.generations,
        variation=VariationConfig(),
        rl=RLConfig(alpha=args.alpha, gamma_discount=args.discount, epsilon=args.epsilon),
        k=args.k,
        refresh=args.refresh,
        surrogate=True if surrogate is None else surrogate,
        mode=mode or "auto",
    )


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(path: str):
    p = Path(path)
    if not p.is_file():
        raise SystemExit(f"instance file not found: {p}")
    try:
        return load_instance(p)
    except (InstanceParseError, InstanceValidationError) as exc:
        raise SystemExit(f"{p}: {exc}")


def cmd_gen(args) -> int:
    params = GeneratorParams(
        num_positions=args.positions,
        candidate_ratio=args.candidate_ratio,
        sp_ratio=args.sp_ratio,
    )
    inst = generate_instance(params, args.seed)
    path = save_instance(inst, _out_dir(args) / f"{inst.name}.json")
    print(path)
    return 0


def cmd_validate(args) -> int:
    p = Path(args.instance)
    if not p.is_file():
        raise SystemExit(f"instance file not found: {p}")
    try:
        inst = load_instance(p, validate=False)
    except (InstanceParseError, InstanceValidationError) as exc:
        print(f"{p}: {exc}")
        return 1
    problems = validate_instance(inst)
    for v in problems:
        print(v)
    if not problems:
        print(f"{p}: ok ({inst.n_candidates} candidates, {inst.n_positions} positions)")
    return 1 if problems else 0


def cmd_solve(args) -> int:
    inst = _load(args.instance)
    cfg = BaselineConfig()
    name = args.solver
    if name == "CH1":
        asg = ch1_solve(inst)
    elif name == "CH2":
        asg = ch2_solve(inst)
    elif name == "GA":
        asg, _ = ga_solve(inst, cfg, args.seed)
        name = GA_NAME
    elif name == "VNS":
        asg, _ = vns_solve(inst, cfg, args.seed)
        name = VNS_NAME
    else:
        rule_path = Path(name)
        if not rule_path.exists():
            raise SystemExit(f"solver must be CH1, CH2, GA, VNS or a rule file; {rule_path} not found")
        tree = parse(rule_path.read_text(encoding="utf-8").strip())
        asg = decode(tree, inst)
        name = rule_path.stem
    result = result_to_dict(inst, asg)
    path = _out_dir(args) / f"{inst.name}__{name}__{args.seed}.json"
    write_json(path, result)
    print(f"{name} on {inst.name}: TE {result['total_efficiency']:.4f} -> {path}")
    return 0


def cmd_train(args) -> int:
    inst = _load(args.instance)
    cfg = train_config(args, args.algorithm)
    res = run_training(inst, cfg, args.seed)
    out = _out_dir(args)
    stem = f"{inst.name}__{res.algorithm}__{args.seed}"
    write_json(out / f"{stem}.json", res.to_dict())
    if args.trace:
        with open(out / f"{stem}__trace.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["gen", "state", "action", "action_used", "reward", "next_state", "gen_best", "global_best", "real_best"])
            for row in res.trace:
                w.writerow([row["gen"], row["state"], row["mode"], row["mode_used"], repr(row["reward"]), row["next_state"],
                            repr(row["gen_best"]), repr(row["global_best"]),
                            "" if row["real_best"] is None else repr(row["real_best"])])
    print(f"{res.algorithm} on {inst.name} seed {args.seed}: TE {res.best_te:.4f}, "
          f"{res.real_evaluations} real evaluations, {res.timing['total_ms']:.0f} ms")
    print(f"rule: {res.best_rule}")
    return 0


def cmd_bench(args) -> int:
    if args.config:
        doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
    else:
        doc = {}
    suite = SuiteConfig(
        positions=tuple(doc.get("positions", args.positions)),
        instance_ids=tuple(doc.get("instance_ids", args.ids)),
        instance_files=tuple(doc.get("instance_files", args.instance or ())),
        algorithms=tuple(doc.get("algorithms", args.algorithms)),
        runs=doc.get("runs", args.runs),
        base_seed=doc.get("base_seed", args.seed),
        train=train_config(args),
        sp_ratios=tuple(doc.get("sp_ratios", args.sp_ratios or ())),
        sp_positions=doc.get("sp_positions", args.sp_positions),
        jobs=args.jobs,
        timing=args.timing,
    )
    files = run_benchmark(suite, _out_dir(args))
    for name, path in files.items():
        print(f"{name}: {path}")
    return 0


def cmd_oracle(args) -> int:
    inst = _load(args.instance)
    try:
        asg, te = brute_force_optimum(inst)
    except OracleRefused as exc:
        raise SystemExit(str(exc))
    result = result_to_dict(inst, asg)
    path = _out_dir(args) / f"{inst.name}__oracle.json"
    write_json(path, result)
    print(f"optimum on {inst.name}: TE {te:.6f} -> {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default="out")
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="rlgp", description="Team formation with person-job matching via RL-assisted GP.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="generate a seeded instance named P-ID")
    g.add_argument("--positions", type=int, default=25)
    g.add_argument("--candidate-ratio", type=float, default=2.0)
    g.add_argument("--sp-ratio", type=float, default=0.2)
    g.set_defaults(func=cmd_gen)

    v = sub.add_parser("validate", parents=[common], help="check an instance file")
    v.add_argument("--instance", required=True)
    v.set_defaults(func=cmd_validate)

    s = sub.add_parser("solve", parents=[common], help="run CH1, CH2, GA, VNS or a rule file")
    s.add_argument("solver", help="CH1 | CH2 | GA | VNS | path to a rule in prefix notation")
    s.add_argument("--instance", required=True)
    s.set_defaults(func=cmd_solve)

    t = sub.add_parser("train", parents=[common], help="learn a priority rule")
    t.add_argument("algorithm", choices=("RL-GP", "BGP"))
    t.add_argument("--instance", required=True)
    t.add_argument("--trace", action="store_true", help="write the per-generation state/action/reward CSV")
    _train_args(t)
    t.set_defaults(func=cmd_train)

    b = sub.add_parser("bench", parents=[common], help="run a suite and write CSV reports")
    b.add_argument("--config", help="JSON suite file; its keys override the flags below")
    b.add_argument("--instance", action="append", help="instance file (repeatable)")
    b.add_argument("--positions", type=int, nargs="*", default=[25])
    b.add_argument("--ids", type=int, nargs="*", default=[1])
    b.add_argument("--algorithms", nargs="*", default=["RL-GP", "BGP", "CH1", "CH2"])
    b.add_argument("--runs", type=int, default=10)
    b.add_argument("--sp-ratios", type=float, nargs="*")
    b.add_argument("--sp-positions", type=int, default=25)
    b.add_argument("--timing", action="store_true", help="also write timing.csv (wall clock, not reproducible)")
    _train_args(b)
    b.set_defaults(func=cmd_bench)

    o = sub.add_parser("oracle", parents=[common], help="brute-force optimum of a tiny instance")
    o.add_argument("--instance", required=True)
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
