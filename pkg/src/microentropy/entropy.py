"""Finite-schedule entropy and entropy-dimension estimates.

Every infinite operation of the definitions is replaced by a finite one:
limsup over r by a tail statistic of the computed r-sequence, inf over
(delta, R, F) by a min over declared grids (an upper bound at that
schedule), sup over (E, eps) by a max (a lower bound). The full grid of
rows is always kept so either reading can be audited.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Callable, Sequence

from .microstates import BudgetExceeded, MicrostateSpec, as_fraction, enumerate_microstates
from .packing import packing_number_of_microstates
from .structures import FiniteStructure, model_family as lookup_family
from .terms import closure_to_depth, materialize_terms

NEG_INF = float("-inf")
CSV_HEADER = ("r", "F_size", "R_depth", "delta", "eps", "N_raw", "log_N", "normalized", "packing_kind")

BOLTZMANN = ("r", "r log r", "r^2")
PACKING = ("1", "|log eps|")


def boltzmann_normalization(name: str, r: int, log_base: float | None = None) -> float:
    log = _log(log_base)
    if name == "r":
        value = float(r)
    elif name == "r log r":
        value = r * log(r)
    elif name == "r^2":
        value = float(r * r)
    else:
        raise ValueError(f"unknown normalization {name!r}; choose from {BOLTZMANN}")
    if value <= 0:
        raise ValueError(f"normalization {name!r} vanishes at r = {r}")
    return value


def packing_normalization(name: str, eps, log_base: float | None = None) -> float:
    if name == "1":
        return 1.0
    if name == "|log eps|":
        value = abs(_log(log_base)(float(eps)))
        if value == 0:
            raise ValueError("|log eps| vanishes at eps = 1")
        return value
    raise ValueError(f"unknown packing normalization {name!r}; choose from {PACKING}")


def _log(base):
    if base is None:
        return math.log
    return lambda x: math.log(x) / math.log(base)


def log_count(n: int, log_base: float | None = None) -> float:
    if n == 0:
        return NEG_INF
    return _log(log_base)(n)


@dataclass(frozen=True)
class TailStatistic:
    kind: str = "last"  # last | max | min
    window: int = 1

    def __post_init__(self):
        if self.kind not in ("last", "max", "min"):
            raise ValueError(f"unknown tail statistic {self.kind!r}")
        if self.window < 1:
            raise ValueError("tail window must be positive")

    @classmethod
    def parse(cls, text) -> TailStatistic:
        if isinstance(text, TailStatistic):
            return text
        m = re.fullmatch(r"\s*(last|max|min)\s*(?:\(\s*(\d+)\s*\))?\s*", str(text))
        if not m:
            raise ValueError(f"cannot parse tail statistic {text!r}")
        return cls(m.group(1), int(m.group(2) or 1))

    def __str__(self):
        return "last" if self.kind == "last" else f"{self.kind}({self.window})"

    def apply(self, seq: Sequence[float]) -> float:
        vals = [v for v in seq if not math.isnan(v)]
        if not vals:
            return float("nan")
        if self.kind == "last":
            return vals[-1]
        tail = vals[-self.window:]
        return max(tail) if self.kind == "max" else min(tail)

    def oscillation(self, seq: Sequence[float]) -> float:
        """max - min over the tail window: how far the sequence is from settling."""
        tail = [v for v in seq if not math.isnan(v)][-max(self.window, 2):]
        if not tail:
            return float("nan")
        if all(v == tail[0] for v in tail):
            return 0.0
        return max(tail) - min(tail)


@dataclass(frozen=True)
class RSpec:
    """Intensional R: all terms up to a depth, plus a list of state symbols."""

    depth: int
    states: tuple[str, ...] = ()
    symbols: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        if self.symbols is not None:
            object.__setattr__(self, "symbols", tuple(self.symbols))
        if self.depth < 0:
            raise ValueError("term depth must be nonnegative")

    def __le__(self, other: RSpec) -> bool:
        mine = None if self.symbols is None else set(self.symbols)
        theirs = None if other.symbols is None else set(other.symbols)
        sym_ok = theirs is None or (mine is not None and mine <= theirs)
        return self.depth <= other.depth and set(self.states) <= set(other.states) and sym_ok

    def __str__(self):
        s = f"depth={self.depth};states={','.join(self.states)}"
        if self.symbols is not None:
            s += f";symbols={','.join(self.symbols)}"
        return s


@dataclass(frozen=True)
class TableRow:
    r: int
    F: tuple[int, ...]
    R: RSpec
    delta: Fraction
    eps: Fraction
    E: tuple[int, ...]
    n_raw: int | None
    log_n: float
    normalized: float
    packing_kind: str

    def csv_fields(self) -> list[str]:
        return [str(self.r), str(len(self.F)), str(self.R.depth), str(self.delta), str(self.eps),
                "" if self.n_raw is None else str(self.n_raw), _fmt(self.log_n),
                _fmt(self.normalized), self.packing_kind]


def _fmt(x: float) -> str:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "-inf" if x < 0 else "inf"
    return repr(float(x))


@dataclass
class EntropyTable:
    rows: list[TableRow] = field(default_factory=list)
    normalization: str = "r"
    mode: str = "MS"
    schedule: str = ""

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for row in self.rows:
            w.writerow(row.csv_fields())
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())

    def at(self, **key) -> list[TableRow]:
        return [row for row in self.rows if all(getattr(row, k) == v for k, v in key.items())]


def lattice_violations(rows: Sequence[TableRow]) -> list[tuple[TableRow, TableRow]]:
    """Pairs breaking value(E',F',R',d',e') <= value(E,F,R,d,e) for
    E' <= E, F <= F', R <= R', d' <= d, e <= e' at the same r."""
    bad = []
    by_r: dict[int, list[TableRow]] = {}
    for row in rows:
        if row.n_raw is not None:
            by_r.setdefault(row.r, []).append(row)
    for group in by_r.values():
        for big in group:
            for small in group:
                if (set(small.E) <= set(big.E) and set(big.F) <= set(small.F)
                        and big.R <= small.R and small.delta <= big.delta
                        and big.eps <= small.eps and small.normalized > big.normalized):
                    bad.append((small, big))
    return bad


@dataclass
class EntropyEstimate:
    value: float
    sequence: list[float]
    statistic: str
    schedule: dict
    bound: str  # finite | upper | lower
    axis: str = "r"
    partial: bool = False
    oscillation: float = float("nan")
    table: EntropyTable | None = None
    argbest: dict = field(default_factory=dict)

    @property
    def schedule_hash(self) -> str:
        return schedule_hash(self.schedule)

    def to_json_dict(self, reference=None, deviation=None) -> dict:
        return {
            "value": _json_num(self.value),
            "sequence": [_json_num(v) for v in self.sequence],
            "statistic": self.statistic,
            "schedule_hash": self.schedule_hash,
            "reference": None if reference is None else _json_num(reference),
            "deviation": None if deviation is None else _json_num(deviation),
        }

    def to_json(self, reference=None, deviation=None) -> str:
        return json.dumps(self.to_json_dict(reference, deviation), indent=2, sort_keys=True) + "\n"


def _json_num(x):
    """JSON has no infinities; they travel as the strings "-inf"/"inf"."""
    if isinstance(x, float) and (math.isinf(x) or math.isnan(x)):
        return _fmt(x)
    return x


def schedule_hash(schedule: dict) -> str:
    text = json.dumps(schedule, sort_keys=True, default=str)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class Schedule:
    """The finite grids standing in for the limits of the definitions."""

    r_schedule: tuple[int, ...]
    model_family: str | Callable[[int], FiniteStructure]
    deltas: tuple = (Fraction(1, 20),)
    eps_grid: tuple = (Fraction(1, 2),)
    R_specs: tuple[RSpec, ...] = (RSpec(1),)
    normalization: str = "r"
    packing_normalization: str = "1"
    mode: str = "MS"
    statistic: str = "last"
    log_base: float | None = None
    workers: int = 1
    budget: int | None = None

    def __post_init__(self):
        rs = tuple(int(r) for r in self.r_schedule)
        if not rs or any(b <= a for a, b in zip(rs, rs[1:])):
            raise ValueError("r schedule must be nonempty and strictly increasing")
        object.__setattr__(self, "r_schedule", rs)
        object.__setattr__(self, "deltas", tuple(as_fraction(d) for d in self.deltas))
        object.__setattr__(self, "eps_grid", tuple(as_fraction(e) for e in self.eps_grid))
        object.__setattr__(self, "R_specs", tuple(self.R_specs))
        if not self.deltas or not self.eps_grid or not self.R_specs:
            raise ValueError("delta, eps and R grids must be nonempty")
        if any(d < 0 for d in self.deltas):
            raise ValueError("delta values must be nonnegative")
        if any(e <= 0 for e in self.eps_grid):
            raise ValueError("eps values must be positive")
        for r in rs:
            boltzmann_normalization(self.normalization, r, self.log_base)
        for e in self.eps_grid:
            packing_normalization(self.packing_normalization, e, self.log_base)
        TailStatistic.parse(self.statistic)

    def describe(self) -> dict:
        fam = self.model_family if isinstance(self.model_family, str) else getattr(
            self.model_family, "__name__", "custom")
        return {"r": list(self.r_schedule), "model": fam,
                "delta": [str(d) for d in self.deltas], "eps": [str(e) for e in self.eps_grid],
                "R": [str(R) for R in self.R_specs], "N": self.normalization,
                "L": self.packing_normalization, "mode": self.mode,
                "statistic": str(TailStatistic.parse(self.statistic)),
                "log_base": self.log_base}


class _Evaluator:
    """Computes grid rows, memoizing microstate sets per (r, F, R, delta)."""

    def __init__(self, source: FiniteStructure, schedule: Schedule):
        self.source = source
        self.s = schedule
        fam = schedule.model_family
        self.family = lru_cache(maxsize=None)(lookup_family(fam) if isinstance(fam, str) else fam)
        self.microstates: dict = {}
        self.terms: dict = {}

    def _terms(self, R: RSpec):
        if R not in self.terms:
            self.terms[R] = materialize_terms(self.source.signature, R.depth, R.symbols)
        return self.terms[R]

    def _space(self, key):
        r, F, R, delta = key
        if key not in self.microstates:
            spec = MicrostateSpec(F, self._terms(R), R.states, delta, self.s.mode, R_depth=R.depth)
            try:
                self.microstates[key] = enumerate_microstates(spec, self.source, self.family(r),
                                                              budget=self.s.budget)
            except BudgetExceeded:
                self.microstates[key] = None
        return self.microstates[key]

    def rows(self, E, F_chain, R_specs, deltas, eps_grid, r_schedule) -> list[TableRow]:
        keys = [(r, F, R, d) for r in r_schedule for F in F_chain for R in R_specs for d in deltas]
        todo = [k for k in dict.fromkeys(keys) if k not in self.microstates]
        if self.s.workers > 1 and len(todo) > 1:
            with ThreadPoolExecutor(self.s.workers) as pool:
                list(pool.map(self._space, todo))
        else:
            for k in todo:
                self._space(k)
        out = []
        for key in keys:
            r, F, R, d = key
            space = self.microstates[key]
            for eps in eps_grid:
                out.append(self._row(r, F, R, d, eps, E, space))
        return out

    def _row(self, r, F, R, d, eps, E, space):
        if space is None:
            nan = float("nan")
            return TableRow(r, F, R, d, eps, E, None, nan, nan, "budget_exhausted")
        res = packing_number_of_microstates(space, E, eps, self.family(r), budget=self.s.budget)
        lg = log_count(res.count, self.s.log_base)
        norm = lg / boltzmann_normalization(self.s.normalization, r, self.s.log_base)
        return TableRow(r, F, R, d, eps, E, res.count, lg, norm, res.kind)


def _as_indices(source: FiniteStructure, xs) -> tuple[int, ...]:
    return tuple(source.index(x) if isinstance(x, str) else int(x) for x in xs)


def _per_combo(rows, stat: TailStatistic):
    """Group rows by everything except r and reduce each r-sequence."""
    combos: dict = {}
    for row in rows:
        combos.setdefault((row.F, row.R, row.delta, row.eps), []).append(row)
    out = []
    for key, group in combos.items():
        seq = [row.normalized for row in sorted(group, key=lambda x: x.r)]
        partial = any(row.n_raw is None for row in group)
        out.append((stat.apply(seq), key, seq, partial, stat.oscillation(seq)))
    return out


def h_finite(source: FiniteStructure, E, F, R: RSpec, delta, eps, r_schedule, model_family,
             normalization: str = "r", *, mode: str = "MS", statistic: str = "last",
             log_base: float | None = None, budget: int | None = None) -> EntropyEstimate:
    """log N_{E,eps}(MS(F,R,delta,A_r)) / N(r) along the r schedule."""
    schedule = Schedule(tuple(r_schedule), model_family, (delta,), (eps,), (R,), normalization,
                        mode=mode, statistic=statistic, log_base=log_base, budget=budget)
    return _finite(_Evaluator(source, schedule), _as_indices(source, E), _as_indices(source, F),
                   R, schedule.deltas[0], schedule.eps_grid[0])


def _finite(ev: _Evaluator, E, F, R, delta, eps) -> EntropyEstimate:
    if not set(E) <= set(F):
        raise ValueError("E must be a subset of F")
    stat = TailStatistic.parse(ev.s.statistic)
    rows = ev.rows(E, [F], [R], [delta], [eps], ev.s.r_schedule)
    value, _, seq, partial, osc = _per_combo(rows, stat)[0]
    table = EntropyTable(rows, ev.s.normalization, ev.s.mode, json.dumps(ev.s.describe(), default=str))
    return EntropyEstimate(value, seq, str(stat), ev.s.describe(), "finite", "r", partial, osc, table,
                           {"F": F, "R": R, "delta": delta, "eps": eps})


def _lattice(ev: _Evaluator, E, eps, F_chain) -> EntropyEstimate:
    if not F_chain:
        raise ValueError("F chain must be nonempty")
    for F in F_chain:
        if not set(E) <= set(F):
            raise ValueError("every F in the chain must contain E")
    stat = TailStatistic.parse(ev.s.statistic)
    rows = ev.rows(E, F_chain, ev.s.R_specs, ev.s.deltas, [eps], ev.s.r_schedule)
    combos = _per_combo(rows, stat)
    # the minimizer's sequence is reported; nan (budget) rows never win
    value, key, seq, _, osc = min(combos, key=lambda c: (math.isnan(c[0]), c[0]))
    partial = any(c[3] for c in combos)
    table = EntropyTable(rows, ev.s.normalization, ev.s.mode, json.dumps(ev.s.describe(), default=str))
    return EntropyEstimate(value, seq, str(stat), ev.s.describe(), "upper", "r", partial, osc, table,
                           {"E": E, "F": key[0], "R": key[1], "delta": key[2], "eps": eps})


def h_over_lattice(source: FiniteStructure, E, eps, schedule: Schedule,
                   F_chain: Sequence | None = None, B=None) -> EntropyEstimate:
    """Min of the finite-r values over the delta, R and F grids.

    With no F chain the single set B is used: for finite B the inf over F
    inside B is attained at B itself.
    """
    E = _as_indices(source, E)
    if F_chain is None:
        if B is None:
            raise ValueError("give an F chain or the ambient set B")
        F_chain = [tuple(sorted(_as_indices(source, B)))]
    else:
        F_chain = [_as_indices(source, F) for F in F_chain]
    return _lattice(_Evaluator(source, schedule), E, as_fraction(eps), F_chain)


def finite_rows(source: FiniteStructure, E, F_chain, schedule: Schedule) -> list[TableRow]:
    """All unreduced grid rows for one E against each F of the chain."""
    E = _as_indices(source, E)
    F_chain = [tuple(sorted(_as_indices(source, F))) for F in F_chain]
    for F in F_chain:
        if not set(E) <= set(F):
            raise ValueError("every F in the chain must contain E")
    ev = _Evaluator(source, schedule)
    return ev.rows(E, F_chain, schedule.R_specs, schedule.deltas, schedule.eps_grid,
                   schedule.r_schedule)


def _ambient(source, G, depth):
    B, _ = closure_to_depth(G, source, depth)
    return tuple(sorted(B))


def _E_grid(G, E_grid):
    if E_grid is None:
        G = sorted(G)
        return [tuple(c) for k in range(1, len(G) + 1) for c in combinations(G, k)]
    if not E_grid:
        raise ValueError("E must be a nonempty grid over G")
    return [tuple(E) for E in E_grid]


def _sup(ev, G, B, E_grid) -> EntropyEstimate:
    F_chain = [B]
    best = None
    rows = []
    partial = False
    for E in E_grid:
        if not set(E) <= set(G):
            raise ValueError("E must be drawn from G")
        for eps in ev.s.eps_grid:
            est = _lattice(ev, E, eps, F_chain)
            rows.extend(est.table.rows)
            partial |= est.partial
            if best is None or (not math.isnan(est.value) and (math.isnan(best.value) or est.value > best.value)):
                best = est
    table = EntropyTable(rows, ev.s.normalization, ev.s.mode, json.dumps(ev.s.describe(), default=str))
    return EntropyEstimate(best.value, best.sequence, best.statistic, ev.s.describe(), "lower", "r",
                           partial, best.oscillation, table, best.argbest)


def entropy(source: FiniteStructure, G, schedule: Schedule, *, closure_depth: int = 4,
            E_grid=None) -> EntropyEstimate:
    """Max over the E grid (nonempty subsets of G by default) and the eps
    grid of the lattice minimum against the closure of G."""
    G = _as_indices(source, G)
    E_grid = _E_grid(G, None if E_grid is None else [_as_indices(source, E) for E in E_grid])
    return _sup(_Evaluator(source, schedule), G, _ambient(source, G, closure_depth), E_grid)


def relative_entropy(source: FiniteStructure, G, H, schedule: Schedule, *, closure_depth: int = 4,
                     E_grid=None) -> EntropyEstimate:
    """As entropy, but the ambient set is the closure of G u H; E stays in G."""
    G = _as_indices(source, G)
    H = _as_indices(source, H)
    E_grid = _E_grid(G, None if E_grid is None else [_as_indices(source, E) for E in E_grid])
    B = _ambient(source, tuple(sorted(set(G) | set(H))), closure_depth)
    return _sup(_Evaluator(source, schedule), G, B, E_grid)


def _dim(ev, G, B, eps_statistic) -> EntropyEstimate:
    eps_grid = sorted(ev.s.eps_grid, reverse=True)
    stat = TailStatistic.parse(eps_statistic)
    seq, rows, partial = [], [], False
    for eps in eps_grid:
        est = _lattice(ev, G, eps, [B])
        rows.extend(est.table.rows)
        partial |= est.partial
        L = packing_normalization(ev.s.packing_normalization, eps, ev.s.log_base)
        seq.append(est.value / L)
    table = EntropyTable(rows, ev.s.normalization, ev.s.mode, json.dumps(ev.s.describe(), default=str))
    return EntropyEstimate(stat.apply(seq), seq, str(stat), ev.s.describe(), "lower", "eps",
                           partial, stat.oscillation(seq), table, {"eps": eps_grid})


def dimension(source: FiniteStructure, G, schedule: Schedule, *, closure_depth: int = 4,
              eps_statistic: str = "last") -> EntropyEstimate:
    """Entropy dimension of a finite G, using E = G and the eps grid in
    decreasing order; L = 1 makes it the entropy value at the smallest eps."""
    G = _as_indices(source, G)
    if not G:
        raise ValueError("G must be nonempty")
    return _dim(_Evaluator(source, schedule), G, _ambient(source, G, closure_depth), eps_statistic)


def relative_dimension(source: FiniteStructure, G, H, schedule: Schedule, *,
                       closure_depth: int = 4, eps_statistic: str = "last") -> EntropyEstimate:
    G = _as_indices(source, G)
    H = _as_indices(source, H)
    if not G:
        raise ValueError("G must be nonempty")
    B = _ambient(source, tuple(sorted(set(G) | set(H))), closure_depth)
    return _dim(_Evaluator(source, schedule), G, B, eps_statistic)
