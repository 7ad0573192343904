"""Monte-Carlo experiment engine.

A run is a pure function of its :class:`ExperimentSpec`.  Trial ``i`` draws
all of its randomness from ``derive(seed, i)``, and every trial writes into
its own output slot, so the worker count changes wall time only.
"""
from __future__ import annotations

import configparser
import csv
import io
import json
import math
import os
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Iterable, Sequence

import numpy as np

from . import _kernels as K
from ._jit import set_threads
from ._rng import trial_seeds
from .errors import InvalidSpec
from .memoryless import PFConfig, pf_batch
from .noise import EPS_DEFAULT, NoiseModel, read_adversary, read_q_overrides, sample_advice, star_cap
from .oracle import beating_leaves_batch, expected_beating_leaves_complete
from .queriers import a_sep, a_two_layers
from .treekit import CompleteTree, TreeTopology, centroid_decomposition, generate, read_tree
from .walkers import WALK_MODES

ALGOS = ("a_walk", "a_natural", "a_walk_uniform_theta", "a_sep", "a_loop", "a_two_layers", "pf")
METRICS = ("moves", "queries")
_MOVE_ALGOS = set(WALK_MODES) | {"pf"}
_QUERY_ALGOS = set(WALK_MODES) | {"a_sep", "a_loop", "a_two_layers"}


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment: tree, noise, algorithm, trial count and seed.

    ``tree`` is a generator string such as ``regular:delta=4,depth=6`` or a
    tree file path.  ``model`` is ``random``, ``semiadv:root``,
    ``semiadv:first_child`` or ``semiadv:<adversary file>``.  ``q_file``
    holds per-node overrides.
    """

    tree: str
    algo: str
    name: str = "exp"
    q: float = 0.0
    q_rule: str | None = None
    q_file: str | None = None
    model: str = "random"
    trials: int = 1000
    seed: int = 0
    metrics: tuple[str, ...] = ()
    epsilon: float | None = None
    lam: float | None = None
    kappa1: float | None = None
    kappa2: float | None = None
    h: int | None = None
    cap: int = 10**9

    def __post_init__(self):
        if self.algo not in ALGOS:
            raise InvalidSpec(f"unknown algorithm {self.algo!r}; choose from {', '.join(ALGOS)}")
        if self.trials < 1:
            raise InvalidSpec("trials must be at least 1")
        if self.cap < 1:
            raise InvalidSpec("cap must be positive")
        ms = tuple(self.metrics) or self.default_metrics()
        for m in ms:
            if m not in METRICS:
                raise InvalidSpec(f"unknown metric {m!r}")
            if m == "moves" and self.algo not in _MOVE_ALGOS:
                raise InvalidSpec(f"{self.algo} counts queries only")
            if m == "queries" and self.algo not in _QUERY_ALGOS:
                raise InvalidSpec(f"{self.algo} counts moves only")
        object.__setattr__(self, "metrics", tuple(m for m in METRICS if m in ms))
        if self.lam is not None and self.algo != "pf":
            raise InvalidSpec("lam only applies to pf")
        if self.algo == "pf" and self.lam is not None and not 0 <= self.lam <= 1:
            raise InvalidSpec("lam must lie in [0, 1]")
        if (self.kappa1 is not None or self.kappa2 is not None) and self.algo != "a_two_layers":
            raise InvalidSpec("kappa1/kappa2 only apply to a_two_layers")
        if self.h is not None and self.algo != "a_sep":
            raise InvalidSpec("h overrides only apply to a_sep")
        if self.epsilon is not None and not 0 < self.epsilon < 1:
            raise InvalidSpec("epsilon must lie in (0, 1)")

    def default_metrics(self) -> tuple[str, ...]:
        if self.algo == "pf":
            return ("moves",)
        if self.algo in WALK_MODES:
            return ("moves", "queries")
        return ("queries",)

    def build_tree(self, budget: int | None = 10**6):
        if os.path.exists(self.tree):
            return read_tree(self.tree)
        return generate(self.tree, budget=budget)

    def build_noise(self) -> NoiseModel:
        overrides = read_q_overrides(self.q_file) if self.q_file else None
        if self.model == "random":
            return NoiseModel("random", self.q, self.q_rule, overrides)
        kind, _, arg = self.model.partition(":")
        if kind != "semiadv":
            raise InvalidSpec(f"unknown noise model {self.model!r}")
        arg = arg or "root"
        if arg in ("root", "first_child"):
            return NoiseModel("semiadv", self.q, self.q_rule, overrides, adversary=arg)
        return NoiseModel("semiadv", self.q, self.q_rule, overrides, adversary="map",
                          adversary_map=read_adversary(arg))


@dataclass(frozen=True)
class MetricStats:
    mean: float
    stderr: float
    median: float
    p95: float


@dataclass(frozen=True)
class ResultRow:
    spec: ExperimentSpec
    stats: dict[str, MetricStats]
    censored_fraction: float
    wall_time: float = field(compare=False)
    samples: dict[str, np.ndarray] = field(default_factory=dict, compare=False, repr=False)

    def mean(self, metric: str) -> float:
        return self.stats[metric].mean

    def stderr(self, metric: str) -> float:
        return self.stats[metric].stderr


def _stats(x: np.ndarray) -> MetricStats:
    if x.size == 0:
        nan = float("nan")
        return MetricStats(nan, nan, nan, nan)
    x = x.astype(np.float64)
    se = float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0
    return MetricStats(float(x.mean()), se, float(np.median(x)), float(np.percentile(x, 95)))


def _tree_for(spec: ExperimentSpec):
    try:
        return spec.build_tree()
    except ValueError as exc:
        raise InvalidSpec(str(exc)) from exc


def run(spec: ExperimentSpec, workers: int | None = None, keep_samples: bool = False) -> ResultRow:
    """Run every trial of ``spec`` and aggregate."""
    t0 = time.perf_counter()
    nthreads = set_threads(workers)
    tree = _tree_for(spec)
    model = spec.build_noise()
    seeds = trial_seeds(spec.seed, spec.trials)
    out: dict[str, np.ndarray] = {}
    censored = np.zeros(spec.trials, dtype=bool)
    if spec.algo in WALK_MODES:
        qs = np.empty(spec.trials, dtype=np.int64)
        ms = np.empty(spec.trials, dtype=np.int64)
        K.walk_trials(tree.kernel_view(), model.kernel_env(tree), seeds, WALK_MODES[spec.algo], qs, ms)
        out = {"moves": ms, "queries": qs}
    elif spec.algo == "pf":
        steps = pf_batch(tree, model, PFConfig(0.75 if spec.lam is None else spec.lam, spec.cap),
                         spec.seed, spec.trials)
        censored = steps < 0
        out = {"moves": steps}
    else:
        if isinstance(tree, CompleteTree):
            tree = tree.materialize()
        out = {"queries": _query_trials(tree, model, spec, seeds, workers or nthreads)}
    stats = {m: _stats(out[m][~censored]) for m in spec.metrics}
    wall = time.perf_counter() - t0
    return ResultRow(spec, stats, float(censored.mean()), wall,
                     {m: out[m] for m in spec.metrics} if keep_samples else {})


def _query_trials(tree: TreeTopology, model: NoiseModel, spec: ExperimentSpec, seeds: np.ndarray,
                  nthreads: int) -> np.ndarray:
    res = np.empty(seeds.size, dtype=np.int64)
    if spec.algo == "a_loop":
        K.loop_trials(tree.kernel_view(), model.kernel_env(tree), seeds, tree.order, res)
        return res
    seps = centroid_decomposition(tree)
    eps = EPS_DEFAULT if spec.epsilon is None else spec.epsilon

    def one(i: int) -> None:
        adv = sample_advice(tree, model, int(seeds[i]))
        if spec.algo == "a_sep":
            res[i] = a_sep(tree, adv, eps=eps, h=spec.h, seps=seps).queries
        else:
            res[i] = a_two_layers(tree, adv, spec.kappa1, spec.kappa2, eps=eps, seps=seps).queries

    if nthreads <= 1:
        for i in range(seeds.size):
            one(i)
    else:
        with ThreadPoolExecutor(nthreads) as pool:
            list(pool.map(one, range(seeds.size)))
    return res


def sweep(axis: str, values: Iterable[Any], base: ExperimentSpec,
          workers: int | None = None) -> list[ResultRow]:
    """One row per value, in order.  ``tree.<key>`` edits a generator parameter."""
    rows = []
    for v in values:
        if axis.startswith("tree."):
            key = axis[5:]
            kind, _, rest = base.tree.partition(":")
            parts = [p for p in rest.split(",") if p and not p.startswith(key + "=")]
            spec = replace(base, tree=f"{kind}:{','.join(parts + [f'{key}={v}'])}")
        else:
            spec = replace(base, **{axis: v})
        rows.append(run(spec, workers))
    return rows


# output -----------------------------------------------------------------------

SPEC_COLUMNS = ("name", "tree", "algo", "model", "q", "q_rule", "q_file", "trials", "seed",
                "epsilon", "lam", "kappa1", "kappa2", "h", "cap")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def csv_header(include_wall_time: bool = False) -> list[str]:
    cols = list(SPEC_COLUMNS)
    for m in METRICS:
        cols += [f"{m}_mean", f"{m}_stderr", f"{m}_median", f"{m}_p95"]
    cols.append("censored_fraction")
    if include_wall_time:
        cols.append("wall_time")
    return cols


def csv_row(row: ResultRow, include_wall_time: bool = False) -> list[str]:
    vals = [_fmt(getattr(row.spec, c)) for c in SPEC_COLUMNS]
    for m in METRICS:
        s = row.stats.get(m)
        vals += ["", "", "", ""] if s is None else [_fmt(s.mean), _fmt(s.stderr), _fmt(s.median), _fmt(s.p95)]
    vals.append(_fmt(row.censored_fraction))
    if include_wall_time:
        vals.append(_fmt(row.wall_time))
    return vals


def to_csv(rows: Sequence[ResultRow], include_wall_time: bool = False) -> str:
    """CSV text; wall time is left out by default so reruns compare byte-equal."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(csv_header(include_wall_time))
    for r in rows:
        w.writerow(csv_row(r, include_wall_time))
    return buf.getvalue()


def to_jsonl(rows: Sequence[ResultRow]) -> str:
    lines = []
    for r in rows:
        d = {"spec": asdict(r.spec), "censored_fraction": r.censored_fraction,
             "wall_time": r.wall_time}
        d["spec"]["metrics"] = list(r.spec.metrics)
        for m, s in r.stats.items():
            d[m] = asdict(s)
        lines.append(json.dumps(d, sort_keys=True))
    return "\n".join(lines) + ("\n" if lines else "")


_SPEC_TYPES = {f.name: f.type for f in fields(ExperimentSpec)}


def _coerce(key: str, raw: str):
    typ = str(_SPEC_TYPES[key])
    if raw == "" or raw.lower() == "none":
        return None
    if key == "metrics":
        return tuple(x.strip() for x in raw.split(",") if x.strip())
    if typ.startswith("int"):
        return int(float(raw)) if re.fullmatch(r"[\d.eE+]+", raw) else int(raw)
    if typ.startswith("float"):
        return float(raw)
    return raw


def load_specs(path_or_text: str) -> list[ExperimentSpec]:
    """Read ``[section]`` blocks of ``key = value`` lines, one spec each.

    A ``[DEFAULT]`` section supplies shared values.
    """
    cp = configparser.ConfigParser(interpolation=None)
    if os.path.exists(path_or_text):
        cp.read(path_or_text)
    else:
        cp.read_string(path_or_text)
    specs = []
    for sec in cp.sections():
        kw: dict[str, Any] = {"name": sec}
        for k, v in cp.items(sec):
            if k not in _SPEC_TYPES:
                raise InvalidSpec(f"[{sec}] unknown key {k!r}")
            val = _coerce(k, v)
            if val is not None:
                kw[k] = val
        specs.append(ExperimentSpec(**kw))
    return specs


# threshold scan ---------------------------------------------------------------

@dataclass
class ThresholdReport:
    eps: float
    below_ratios: dict[int, list[float]]
    below_depths: list[int]
    below_spread: dict[int, float]
    below_constant: float
    below_pass: bool
    above_delta: int
    above_q: float
    above_depths: list[int]
    above_means: list[float]
    above_exact: list[float]
    above_factor: float
    above_exact_factor: float
    above_target: float
    above_pass: bool
    above_exponential: bool

    @property
    def passed(self) -> bool:
        return self.below_pass and self.above_pass

    def summary(self) -> str:
        lines = [f"below threshold (eps={self.eps}): constant={self.below_constant:.4f}"]
        for d, s in self.below_spread.items():
            lines.append(f"  Delta={d}: max/min ratio over d = {s:.3f}")
        lines.append(f"  -> {'PASS' if self.below_pass else 'FAIL'}")
        lines.append(f"above threshold (Delta={self.above_delta}, q={self.above_q}): fitted factor "
                     f"{self.above_factor:.4f} (exact {self.above_exact_factor:.4f}) vs "
                     f"{self.above_target:.4f} +/-15%")
        lines.append(f"  -> {'PASS' if self.above_pass else 'FAIL'}"
                     f" (exponential growth: {'yes' if self.above_exponential else 'no'})")
        return "\n".join(lines)


def growth_factor(depths: Sequence[int], values: Sequence[float]) -> float:
    """exp of the least-squares slope of log(value) against depth."""
    return float(math.exp(np.polyfit(np.asarray(depths, float), np.log(np.asarray(values, float)), 1)[0]))


def verify_threshold(deltas: Sequence[int] = (9,), depths: Sequence[int] = range(4, 11),
                     eps: float = 0.05, q_below: float | None = None, q_frac: float = 0.8,
                     above_delta: int = 10, above_q: float = 0.5,
                     above_depths: Sequence[int] = range(2, 7), trials: int = 2000,
                     above_trials: int = 2000, seed: int = 0,
                     workers: int | None = None) -> ThresholdReport:
    """Both sides of the noise threshold on degree-regular complete trees.

    Below: mean A_walk moves / (d√Δ) should stay within a factor 2 across d.
    ``q_below`` fixes q; otherwise q = ``q_frac`` × the star-condition bound at Δ.
    Above: the beating-leaves count should grow per level like
    q²(Δ-1)³/Δ² (±15%).
    """
    ratios: dict[int, list[float]] = {}
    spread: dict[int, float] = {}
    for k, delta in enumerate(deltas):
        q = q_frac * star_cap(delta, eps) if q_below is None else q_below
        q = max(0.0, q)
        rs = []
        for j, d in enumerate(depths):
            spec = ExperimentSpec(f"regular:delta={delta},depth={d},implicit=1", "a_walk", q=q,
                                  trials=trials, seed=seed + 1000 * k + j, metrics=("moves",))
            row = run(spec, workers)
            rs.append(row.mean("moves") / (d * math.sqrt(delta)))
        ratios[delta] = rs
        spread[delta] = max(rs) / min(rs)
    const = max(max(v) for v in ratios.values())
    below_pass = all(s <= 2.0 for s in spread.values())

    model = NoiseModel("random", above_q)
    means, exact = [], []
    for j, D in enumerate(above_depths):
        t = generate(f"regular:delta={above_delta},depth={D}", budget=None)
        c = beating_leaves_batch(t, model, seed + 7919 + j, above_trials)
        means.append(float(c.mean()))
        exact.append(expected_beating_leaves_complete(above_delta - 1, D, above_q, above_delta))
    target = above_q**2 * (above_delta - 1) ** 3 / above_delta**2
    fac = growth_factor(above_depths, means)
    efac = growth_factor(above_depths, exact)
    return ThresholdReport(eps, ratios, list(depths), spread, const, below_pass, above_delta, above_q,
                           list(above_depths), means, exact, fac, efac, target,
                           abs(fac / target - 1) <= 0.15, fac >= target * 0.85)
