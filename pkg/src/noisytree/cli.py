"""Command-line front end: generate, simulate, sweep, oracle, verify."""
from __future__ import annotations

import argparse
import os
import sys
from fractions import Fraction

from .errors import NoisyTreeError
from .harness import ALGOS, ExperimentSpec, load_specs, run, sweep, to_csv, to_jsonl
from .noise import DEFAULT_ENUM_CAP
from .oracle import exact_expected_cost
from .treekit import CompleteTree, generate, read_tree, serialize


def _q_args(q: str) -> dict:
    """--q takes a number, a degree rule (star:/invdeg:/invsqrt:) or a file of overrides."""
    try:
        return {"q": float(q)}
    except ValueError:
        pass
    if os.path.exists(q):
        return {"q_file": q}
    return {"q_rule": q}


def _spec(a: argparse.Namespace) -> ExperimentSpec:
    return ExperimentSpec(tree=a.tree, algo=a.algo, name=a.name, model=a.model, trials=a.trials,
                          seed=a.seed, epsilon=a.epsilon, lam=a.lam, kappa1=a.kappa1,
                          kappa2=a.kappa2, h=a.h, cap=a.cap,
                          metrics=tuple(a.metrics.split(",")) if a.metrics else (), **_q_args(a.q))


def _emit(rows, out: str, wall: bool) -> None:
    sys.stdout.write(to_jsonl(rows) if out == "json" else to_csv(rows, include_wall_time=wall))


def cmd_generate(a) -> int:
    t = generate(a.spec, budget=a.budget)
    if isinstance(t, CompleteTree):
        t = t.materialize(budget=a.budget)
    text = serialize(t)
    if a.output:
        with open(a.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_simulate(a) -> int:
    _emit([run(_spec(a), a.workers)], a.out, a.wall_time)
    return 0


def cmd_sweep(a) -> int:
    vals = [v for v in a.values.split(",") if v]
    if a.axis in ("q", "epsilon", "lam", "kappa1", "kappa2"):
        vals = [float(v) for v in vals]
    elif a.axis in ("trials", "seed", "h", "cap"):
        vals = [int(v) for v in vals]
    _emit(sweep(a.axis, vals, _spec(a), a.workers), a.out, a.wall_time)
    return 0


def cmd_batch(a) -> int:
    _emit([run(s, a.workers) for s in load_specs(a.config)], a.out, a.wall_time)
    return 0


def cmd_oracle(a) -> int:
    spec = _spec(a)
    t = read_tree(a.tree) if os.path.exists(a.tree) else generate(a.tree)
    if isinstance(t, CompleteTree):
        t = t.materialize()
    metric = a.metrics or spec.default_metrics()[0]
    val = exact_expected_cost(t, spec.build_noise(), a.algo, metric, cap=a.enum_cap,
                              **({"lam": 0.75 if a.lam is None else a.lam} if a.algo == "pf" else {}))
    frac = Fraction(val)
    print(f"{a.algo} {metric} = {frac} ({float(frac):.12g})")
    return 0


def cmd_verify(a) -> int:
    from .verify import run_criteria
    ids = [x.strip() for x in a.only.split(",")] if a.only else None
    ok = True
    for r in run_criteria(ids, scale=a.scale):
        print(r.line(), flush=True)
        ok &= r.passed
    return 0 if ok else 1


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tree", required=True, help="tree file or generator:key=val,...")
    p.add_argument("--algo", required=True, choices=ALGOS)
    p.add_argument("--q", default="0", help="scalar, degree rule (star:F:E, invdeg:C, invsqrt:C) or file")
    p.add_argument("--model", default="random",
                   help="random | semiadv:root | semiadv:first_child | semiadv:<map file>")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--kappa1", type=float, default=None)
    p.add_argument("--kappa2", type=float, default=None)
    p.add_argument("--h", type=int, default=None, help="ball radius override for a_sep")
    p.add_argument("--cap", type=int, default=10**9, help="step cap for pf (censoring)")
    p.add_argument("--metrics", default="", help="comma list of moves,queries")
    p.add_argument("--name", default="exp")
    p.add_argument("--workers", type=int, default=None, help="threads (default: NTS_THREADS or all)")
    p.add_argument("--out", choices=("csv", "json"), default="csv")
    p.add_argument("--wall-time", action="store_true", help="add a wall_time column to CSV")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="noisytree", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("generate", help="write a tree file")
    p.add_argument("spec", help="generator:key=val,...")
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--budget", type=int, default=10**6)
    p.set_defaults(fn=cmd_generate)

    p = sub.add_parser("simulate", help="run one experiment")
    _common(p)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("sweep", help="run one experiment per value of a parameter")
    _common(p)
    p.add_argument("--axis", required=True, help="spec field, or tree.<key> for a generator parameter")
    p.add_argument("--values", required=True, help="comma-separated values")
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("batch", help="run every experiment of a config file")
    p.add_argument("config")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", choices=("csv", "json"), default="csv")
    p.add_argument("--wall-time", action="store_true")
    p.set_defaults(fn=cmd_batch)

    p = sub.add_parser("oracle", help="exact expected cost by enumeration")
    _common(p)
    p.add_argument("--enum-cap", type=int, default=DEFAULT_ENUM_CAP)
    p.set_defaults(fn=cmd_oracle)

    p = sub.add_parser("verify", help="run the acceptance criteria")
    p.add_argument("--only", default="", help="comma list of ids such as AC3,AC7")
    p.add_argument("--scale", type=float, default=1.0, help="trial-count multiplier")
    p.set_defaults(fn=cmd_verify)
    return ap


def main(argv: list[str] | None = None) -> int:
    a = build_parser().parse_args(argv)
    try:
        return a.fn(a)
    except (NoisyTreeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
