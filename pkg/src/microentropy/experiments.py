"""End-to-end scenarios: Shannon/Boltzmann, Bowen sofic entropy, sofic dimension.

Each scenario produces an EntropyTable, an EntropyEstimate, a reference value
with its provenance and, when an output directory is given, the files::

    table.csv  estimate.json  series_vs_r.csv  series_vs_eps.csv  result.json
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from typing import Sequence

from .dsl import ExperimentConfig, StructureDoc, load_structure, serialize_config
from .entropy import (
    EntropyEstimate,
    EntropyTable,
    RSpec,
    Schedule,
    TableRow,
    TailStatistic,
    _ambient,
    _as_indices,
    boltzmann_normalization,
    dimension,
    entropy,
    log_count,
    relative_dimension,
    relative_entropy,
    schedule_hash,
)
from .microstates import (
    BudgetExceeded,
    as_fraction,
    bowen_target,
    count_bowen_microstates,
    count_partition_microstates,
    enumerate_partition_microstates,
    estimate_bowen_microstates,
    sample_partition_microstates,
)
from .structures import (
    FiniteStructure,
    SoficMap,
    StructureError,
    build_sym,
    compose,
    fixed_points,
    inverse,
    parse_sofic_map,
)

ORACLE_MAX_MAPS = 1 << 16


@dataclass
class ScenarioResult:
    name: str
    config_hash: str
    estimate: EntropyEstimate
    table: EntropyTable
    reference: float | None
    provenance: str
    table_path: str | None = None
    files: dict[str, str] = field(default_factory=dict)

    @property
    def deviation(self) -> float | None:
        if self.reference is None or not math.isfinite(self.reference):
            if self.reference is not None and self.reference == self.estimate.value:
                return 0.0
            return None
        return abs(self.estimate.value - self.reference)

    @property
    def partial(self) -> bool:
        return self.estimate.partial

    def summary(self) -> dict:
        est = self.estimate.to_json_dict(self.reference, self.deviation)
        return {"scenario": self.name, "config_hash": self.config_hash, "estimate": est,
                "provenance": self.provenance, "table": self.table_path, "files": self.files,
                "partial": self.partial}


def shannon_entropy(p: Sequence, log_base: float | None = None) -> float:
    """-sum p log p, in nats unless a base is given."""
    h = -sum(float(x) * math.log(float(x)) for x in p if x > 0)
    return h if log_base is None else h / math.log(log_base)


# output -----------------------------------------------------------------------

def _sha(path: str) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def emit_plot_data(table: EntropyTable, out_dir: str) -> tuple[str, str]:
    """Two long-format series files: normalized value vs r per (eps, delta,
    F, R) key, and vs eps per (r, delta, F, R) key. Each carries every table
    row exactly once."""
    os.makedirs(out_dir, exist_ok=True)
    by_r = os.path.join(out_dir, "series_vs_r.csv")
    by_eps = os.path.join(out_dir, "series_vs_eps.csv")
    rows = [row for row in table.rows]

    def write(path, head, key, x):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(head)
            for row in sorted(rows, key=lambda row: (key(row), x(row))):
                f = row.csv_fields()
                w.writerow(list(map(str, key(row))) + [str(x(row)), f[7]])

    write(by_r, ("eps", "delta", "F_size", "R_depth", "r", "normalized"),
          lambda row: (row.eps, row.delta, len(row.F), row.R.depth), lambda row: row.r)
    write(by_eps, ("r", "delta", "F_size", "R_depth", "eps", "normalized"),
          lambda row: (row.r, row.delta, len(row.F), row.R.depth), lambda row: row.eps)
    return by_r, by_eps


def _finish(result: ScenarioResult, out_dir: str | None) -> ScenarioResult:
    if out_dir is None:
        return result
    os.makedirs(out_dir, exist_ok=True)
    table_path = os.path.join(out_dir, "table.csv")
    result.table.write_csv(table_path)
    est_path = os.path.join(out_dir, "estimate.json")
    with open(est_path, "w") as fh:
        fh.write(result.estimate.to_json(result.reference, result.deviation))
    paths = [table_path, est_path, *emit_plot_data(result.table, out_dir)]
    result.table_path = table_path
    result.files = {os.path.basename(p): _sha(p) for p in paths}
    # paths inside result.json are relative so the directory can move
    summary = dict(result.summary(), table="table.csv")
    with open(os.path.join(out_dir, "result.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return result


# partition scenarios --------------------------------------------------------------

def _partition_estimate(rows: list[TableRow], deltas, r_schedule, schedule: dict,
                        statistic: str = "last") -> EntropyEstimate:
    """Tail statistic in r per delta, then the min over delta."""
    stat = TailStatistic.parse(statistic)
    best = None
    for d in deltas:
        seq = [row.normalized for row in rows if row.delta == d]
        val = stat.apply(seq)
        if best is None or val < best[0]:
            best = (val, seq, d)
    partial = any(row.n_raw is None for row in rows)
    return EntropyEstimate(best[0], best[1], str(stat), schedule, "upper", "r", partial,
                           stat.oscillation(best[1]), None, {"delta": best[2]})


def _count_kind(eps: Fraction, r: int) -> str:
    # distinct label maps sit at distance >= 1/r, so below that the
    # packing number is the cardinality itself
    return "cardinality" if eps <= Fraction(1, r) else "cardinality_upper"


def _partition_row(r, delta, eps, n, log_base, kind=None) -> TableRow:
    if n is None:
        nan = float("nan")
        return TableRow(r, (0,), RSpec(0), delta, eps, (0,), None, nan, nan, "budget_exhausted")
    lg = log_count(n, log_base)
    return TableRow(r, (0,), RSpec(0), delta, eps, (0,), n, lg,
                    lg / boltzmann_normalization("r", r, log_base), kind or _count_kind(eps, r))


def run_shannon(p: Sequence, r_schedule: Sequence[int], deltas, eps=None, *,
                engine: str = "count", samples: int = 0, seed: int = 0,
                log_base: float | None = None, strict: bool = False,
                out_dir: str | None = None, config_hash: str | None = None) -> ScenarioResult:
    """Partition microstates of a probability vector with N(r) = r; the
    reference is -sum p log p."""
    p = [as_fraction(x) for x in p]
    deltas = _grid(deltas)
    r_schedule = list(r_schedule)
    eps = Fraction(1, max(r_schedule)) if eps is None else as_fraction(eps)
    rows = []
    for d in deltas:
        for r in r_schedule:
            kind = None
            if engine == "count":
                n = count_partition_microstates(p, r, d, strict=strict)
            elif engine == "enumerate":
                try:
                    n = len(enumerate_partition_microstates(p, r, d, strict=strict))
                except BudgetExceeded:
                    n = None
            elif engine == "sample":
                valid, total = sample_partition_microstates(p, r, d, samples, seed, strict=strict)
                n = round(valid / total * len(p) ** r)
                kind = "sampled_estimate"
            else:
                raise ValueError(f"unknown engine {engine!r}")
            rows.append(_partition_row(r, d, eps, n, log_base, kind))
    sched = {"scenario": "shannon", "p": [str(x) for x in p], "r": r_schedule,
             "delta": [str(d) for d in deltas], "eps": str(eps), "N": "r", "engine": engine,
             "log_base": log_base}
    table = EntropyTable(rows, "r", "partition", json.dumps(sched))
    est = _partition_estimate(rows, deltas, r_schedule, sched)
    est.table = table
    return _finish(ScenarioResult("shannon", config_hash or schedule_hash(sched), est, table,
                                  shannon_entropy(p, log_base), "formula: -sum p log p"), out_dir)


def _grid(values) -> list[Fraction]:
    if not isinstance(values, (list, tuple)):
        values = [values]
    return [as_fraction(v) for v in values]


def pmp_action(S: FiniteStructure, cells: Sequence[int], window: Sequence[str],
               identity: str = "e"):
    """Read a finite measure-preserving action off a (dynamical) measure algebra.

    Returns (labels, weights, perms): the cell index of each atom, the atom
    masses, and for each window element the permutation it induces on atoms.
    """
    for sym in ("zero", "intersection"):
        if sym not in S.ops:
            raise StructureError(f"source structure has no {sym!r} symbol")
    if "mu" not in S.states:
        raise StructureError("source structure has no state symbol 'mu'")
    zero, meet, mu = S.ops["zero"](), S.ops["intersection"], S.states["mu"]
    atoms = [a for a in range(S.size) if a != zero
             and all(meet(a, b) in (zero, a) for b in range(S.size))]
    weights = [mu(a) for a in atoms]
    if sum(weights) != 1:
        raise StructureError("atom masses do not sum to 1")
    labels = []
    for a in atoms:
        owners = [i for i, c in enumerate(cells) if meet(a, c) == a]
        if len(owners) != 1:
            raise StructureError("partition cells must be disjoint and cover the space")
        labels.append(owners[0])
    where = {a: i for i, a in enumerate(atoms)}
    perms = []
    for s in window:
        if s == identity and s not in S.ops:
            perms.append(tuple(range(1, len(atoms) + 1)))
            continue
        if s not in S.ops or S.signature.arity(s) != 1:
            raise StructureError(f"window element {s!r} is not a unary symbol of the source")
        img = [S.ops[s](a) for a in atoms]
        if sorted(img) != sorted(atoms):
            raise StructureError(f"{s!r} does not permute the atoms")
        perms.append(tuple(where[b] + 1 for b in img))
    return labels, weights, perms


def bowen_oracle(target: dict, labels: Sequence, perms: Sequence[Sequence[int]], r: int, delta,
                 strict: bool = False) -> int:
    """Count approximating partitions straight from the definition."""
    delta = as_fraction(delta)
    # the join label of x records Q at pi^-1(x) for each pi
    pre = [[next(y for y in range(r) if pi[y] == x + 1) for pi in perms] for x in range(r)]
    # compare r * deviation with r * delta to stay in integers where possible
    scaled = {k: v * r for k, v in target.items()}
    bound = delta * r
    count = 0
    for q in product(list(labels), repeat=r):
        emp: dict = {}
        for ys in pre:
            key = tuple(q[y] for y in ys)
            emp[key] = emp.get(key, 0) + 1
        dev = sum(abs(scaled.get(k, 0) - emp.get(k, 0)) for k in set(emp) | set(scaled))
        if dev < bound or (not strict and dev == bound):
            count += 1
    return count


def run_bowen(source: FiniteStructure | StructureDoc, partition: str | Sequence[int],
              window: Sequence[str], sofic: SoficMap, r_schedule: Sequence[int], deltas,
              eps=None, *, engine: str = "count", samples: int = 0, seed: int = 0,
              log_base: float | None = None, strict: bool = False, budget: int | None = None,
              out_dir: str | None = None, config_hash: str | None = None) -> ScenarioResult:
    """Bowen approximating partitions along a sofic map, N(r) = r."""
    if isinstance(source, StructureDoc):
        cells = source.genset_indices(partition) if isinstance(partition, str) else list(partition)
        S = source.to_structure()
    else:
        S = source
        if isinstance(partition, str):
            raise ValueError("pass partition cells as indices for a FiniteStructure source")
        cells = list(partition)
    window = list(window)
    if not window:
        raise ValueError("window must be nonempty")
    labels, weights, perms = pmp_action(S, cells, window, sofic.identity)
    target = {tuple(k): v for k, v in bowen_target(labels, perms, weights).items()}
    A = list(range(len(cells)))
    deltas = _grid(deltas)
    r_schedule = list(r_schedule)
    eps = Fraction(1, max(r_schedule)) if eps is None else as_fraction(eps)
    rows = []
    for d in deltas:
        for r in r_schedule:
            for s in window:
                if not sofic.has(s, r):
                    raise StructureError(f"sofic map has no permutation for {s!r} at r={r}")
            sperms = [sofic.image(s, r) for s in window]
            kind = None
            try:
                n = count_bowen_microstates(target, A, sperms, r, d, strict=strict, budget=budget)
            except BudgetExceeded:
                if engine == "sample" and samples > 0:
                    n = round(estimate_bowen_microstates(target, A, sperms, r, d, samples, seed,
                                                         strict=strict))
                    kind = "sampled_estimate"
                else:
                    n = None
            row = _partition_row(r, d, eps, n, log_base, kind)
            rows.append(TableRow(row.r, tuple(range(len(window))), row.R, row.delta, row.eps,
                                 row.E, row.n_raw, row.log_n, row.normalized, row.packing_kind))
    sched = {"scenario": "bowen", "window": window, "r": r_schedule,
             "delta": [str(d) for d in deltas], "eps": str(eps), "N": "r", "engine": engine,
             "log_base": log_base, "target": sorted((str(k), str(v)) for k, v in target.items())}
    table = EntropyTable(rows, "r", "partition", json.dumps(sched))
    est = _partition_estimate(rows, deltas, r_schedule, sched)
    est.table = table
    r_top = r_schedule[-1]
    reference, provenance = None, "none: beyond the exhaustive range"
    if len(A) ** r_top <= ORACLE_MAX_MAPS:
        vals = []
        for d in deltas:
            n = bowen_oracle(target, A, [sofic.image(s, r_top) for s in window], r_top, d,
                             strict=strict)
            vals.append(log_count(n, log_base) / boltzmann_normalization("r", r_top, log_base))
        reference = min(vals)
        provenance = f"exhaustive oracle over {len(A)}^{r_top} maps at r={r_top}"
    return _finish(ScenarioResult("bowen", config_hash or schedule_hash(sched), est, table,
                                  reference, provenance), out_dir)


# sofic dimension -----------------------------------------------------------------

def sofic_oracle(group: FiniteStructure, F: Sequence[int], E: Sequence[int], r: int, delta,
                 eps) -> int:
    """Packing number of the Sym(r) microstate space, by brute force.

    Conditions are written out for the group signature directly: identity,
    products and inverses landing in F, and the trace.
    """
    delta, eps = as_fraction(delta), as_fraction(eps)
    perms = build_sym(r).values
    ident = tuple(range(1, r + 1))
    e = group.ops["one"]()
    mult, inv, tau = group.ops["mult"], group.ops["inv"], group.states["tau"]

    def dist(p, q):
        return Fraction(sum(1 for a, b in zip(p, q) if a != b), r)

    F = list(F)
    valid = []
    for imgs in product(perms, repeat=len(F)):
        s = dict(zip(F, imgs))
        ok = all(abs(tau(a) - Fraction(fixed_points(s[a]), r)) <= delta for a in F)
        ok = ok and (e not in s or dist(s[e], ident) <= delta)
        ok = ok and all(dist(s[inv(a)], inverse(s[a])) <= delta for a in F if inv(a) in s)
        ok = ok and all(dist(s[mult(a, b)], compose(s[a], s[b])) <= delta
                        for a in F for b in F if mult(a, b) in s)
        if ok:
            valid.append(s)
    if len(valid) > 20:
        raise BudgetExceeded("too many microstates for the exhaustive packing oracle")

    def sep(x, y):
        return max((dist(x[a], y[a]) for a in E), default=Fraction(0)) >= eps

    for k in range(len(valid), 0, -1):
        for sub in combinations(valid, k):
            if all(sep(x, y) for x, y in combinations(sub, 2)):
                return k
    return 0


def run_sofic_dim(group: FiniteStructure | StructureDoc, generators: Sequence, r_schedule, deltas,
                  eps_grid, *, closure_depth: int = 4, statistic: str = "last",
                  log_base: float | None = None, budget: int | None = None, workers: int = 1,
                  out_dir: str | None = None, config_hash: str | None = None) -> ScenarioResult:
    """Microstates of a finite group in Sym(r) with N(r) = r log r, L = 1."""
    S = group.to_structure() if isinstance(group, StructureDoc) else group
    sched = Schedule(tuple(r_schedule), "sym", tuple(_grid(deltas)), tuple(_grid(eps_grid)),
                     (RSpec(1, ("tau",)),), "r log r", "1", statistic=statistic,
                     log_base=log_base, workers=workers, budget=budget)
    est = dimension(S, generators, sched, closure_depth=closure_depth)
    G = _as_indices(S, generators)
    B = _ambient(S, G, closure_depth)
    r_top = sched.r_schedule[-1]
    reference, provenance = None, "none: beyond the exhaustive range"
    if math.factorial(r_top) ** len(B) <= ORACLE_MAX_MAPS * 16:
        try:
            eps_min = min(sched.eps_grid)
            vals = []
            for d in sched.deltas:
                n = sofic_oracle(S, B, G, r_top, d, eps_min)
                vals.append(log_count(n, log_base)
                            / boltzmann_normalization("r log r", r_top, log_base))
            reference = min(vals)
            provenance = f"exhaustive oracle over all maps into Sym({r_top})"
        except BudgetExceeded:
            pass
    return _finish(ScenarioResult("sofic_dim", config_hash or est.schedule_hash, est, est.table,
                                  reference, provenance), out_dir)


def run_structure_entropy(doc: StructureDoc, cfg: ExperimentConfig, out_dir=None,
                          config_hash=None) -> ScenarioResult:
    """The general pipeline: entropy or dimension of a generating set."""
    S = doc.to_structure()
    sched = Schedule(cfg.r, cfg.model, cfg.delta, cfg.eps,
                     tuple(RSpec(k, cfg.states) for k in cfg.depth), cfg.N, cfg.L, cfg.mode,
                     cfg.statistic, cfg.log_base_value, cfg.workers)
    kw = {"closure_depth": cfg.closure_depth}
    if cfg.scenario == "entropy":
        fn = relative_entropy if cfg.relative else entropy
    else:
        fn = relative_dimension if cfg.relative else dimension
    args = (S, cfg.generators, cfg.relative) if cfg.relative else (S, cfg.generators)
    est = fn(*args, sched, **kw)
    return _finish(ScenarioResult(cfg.scenario, config_hash or est.schedule_hash, est, est.table,
                                  None, "none"), out_dir)


def config_hash(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(serialize_config(cfg).encode()).hexdigest()[:16]


def run_config(cfg: ExperimentConfig, base_dir: str = ".", out_dir: str | None = None,
               seed: int | None = None) -> ScenarioResult:
    """Dispatch a parsed config to its scenario."""
    seed = cfg.seed if seed is None else seed
    out_dir = out_dir or (os.path.join(base_dir, cfg.out) if cfg.out else None)
    h = config_hash(cfg)
    lb = cfg.log_base_value

    def source():
        if not cfg.source:
            raise ValueError(f"scenario {cfg.scenario!r} needs a source structure")
        return load_structure(os.path.join(base_dir, cfg.source))

    if cfg.scenario == "shannon":
        if not cfg.p:
            raise ValueError("shannon scenario needs p")
        return run_shannon(cfg.p, cfg.r, cfg.delta, cfg.eps[0], engine=cfg.engine,
                           samples=cfg.samples, seed=seed, log_base=lb, out_dir=out_dir,
                           config_hash=h)
    if cfg.scenario == "bowen":
        if not cfg.sofic or not cfg.partition:
            raise ValueError("bowen scenario needs sofic and partition")
        with open(os.path.join(base_dir, cfg.sofic), encoding="utf-8") as fh:
            sofic = parse_sofic_map(fh.read())
        window = cfg.window or (sofic.identity,)
        return run_bowen(source(), cfg.partition, window, sofic, cfg.r, cfg.delta, cfg.eps[0],
                         engine=cfg.engine, samples=cfg.samples, seed=seed, log_base=lb,
                         out_dir=out_dir, config_hash=h)
    if cfg.engine == "sample":
        raise ValueError("the sample engine is only available for partition scenarios")
    if cfg.scenario == "sofic_dim":
        doc = source()
        gens = cfg.generators or tuple(doc.carrier)
        return run_sofic_dim(doc, gens, cfg.r, cfg.delta, cfg.eps,
                             closure_depth=cfg.closure_depth, statistic=cfg.statistic,
                             log_base=lb, workers=cfg.workers, out_dir=out_dir, config_hash=h)
    if not cfg.model:
        raise ValueError(f"scenario {cfg.scenario!r} needs a model family")
    return run_structure_entropy(source(), cfg, out_dir, h)
