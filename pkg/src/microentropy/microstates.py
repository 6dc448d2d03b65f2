"""Validity checks, enumeration, sampling and exact counting of microstate spaces.

A microstate is a map from an ordered finite subset F of a source structure
into a model structure. Deviations are compared against delta with exact
rational arithmetic, using the non-strict convention (deviation <= delta)
everywhere. The partition and Bowen counters accept ``strict=True`` for the
classical strict inequality.
"""
from __future__ import annotations

import math
import os
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Hashable, Iterator, Mapping, NamedTuple, Sequence

import numpy as np

from .structures import FiniteStructure, StructureError, check_permutation, inverse
from .terms import Signature, Term, _eval, enumerate_term_constraints, materialize_terms

DEFAULT_NODE_BUDGET = 10_000_000


class BudgetExceeded(RuntimeError):
    pass


def node_budget(default: int = DEFAULT_NODE_BUDGET) -> int:
    """Solver budget; the ME_BUDGET_NODES environment variable overrides it."""
    env = os.environ.get("ME_BUDGET_NODES")
    if env:
        return int(env)
    return default


def as_fraction(x) -> Fraction:
    if isinstance(x, float):
        # decimal expansion, so 0.05 means 1/20 rather than the binary float
        return Fraction(repr(x))
    return Fraction(x)


@dataclass(frozen=True)
class Microstate:
    F: tuple[int, ...]
    images: tuple[int, ...]

    def __post_init__(self):
        if len(self.F) != len(self.images):
            raise ValueError("a microstate must be total on F")

    def __getitem__(self, a: int) -> int:
        return self.images[self.F.index(a)]

    def restrict(self, sub: Sequence[int]) -> Microstate:
        return Microstate(tuple(sub), tuple(self[a] for a in sub))


@dataclass(frozen=True)
class MicrostateSpec:
    F: tuple[int, ...]
    R_terms: tuple[Term, ...] = ()
    R_states: tuple[str, ...] = ()
    delta: Fraction = Fraction(0)
    mode: str = "MS"
    domain_preserving: bool = True
    R_depth: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "F", tuple(self.F))
        object.__setattr__(self, "R_terms", tuple(self.R_terms))
        object.__setattr__(self, "R_states", tuple(self.R_states))
        object.__setattr__(self, "delta", as_fraction(self.delta))
        if len(set(self.F)) != len(self.F):
            raise ValueError("F must not repeat elements")
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")
        if self.mode not in ("MS", "CMS"):
            raise ValueError(f"mode must be MS or CMS, not {self.mode!r}")

    @classmethod
    def from_depth(cls, signature: Signature, F: Sequence[int], depth: int,
                   states: Sequence[str] = (), delta=0, mode: str = "MS",
                   symbols: Sequence[str] | None = None, domain_preserving: bool = True):
        """Spec whose term part is every linear term up to ``depth``."""
        for g in states:
            if g not in signature.states:
                raise ValueError(f"{g!r} is not a state symbol")
        return cls(tuple(F), materialize_terms(signature, depth, symbols), tuple(states),
                   delta, mode, domain_preserving, R_depth=depth)


class Violation(NamedTuple):
    kind: str  # morphism | state | domain | contractive
    witness: tuple
    deviation: Fraction | None


def _images(sigma, spec: MicrostateSpec) -> dict[int, int]:
    if isinstance(sigma, Microstate):
        return dict(zip(sigma.F, sigma.images))
    if isinstance(sigma, Mapping):
        return dict(sigma)
    return dict(zip(spec.F, sigma))


def check_morphism(sigma, spec: MicrostateSpec, source: FiniteStructure,
                   model: FiniteStructure) -> list[Violation]:
    img = _images(sigma, spec)
    out = []
    for c in enumerate_term_constraints(spec.F, spec.R_terms, source):
        val = _eval(c.term, [img[a] for a in c.args], model)
        dev = model.metric(img[c.out], val)
        if dev > spec.delta:
            out.append(Violation("morphism", (str(c.term), c.args, c.out), dev))
    return out


def check_states(sigma, spec, source, model) -> list[Violation]:
    img = _images(sigma, spec)
    out = []
    for g in spec.R_states:
        n = source.signature.arity(g)
        for args in product(spec.F, repeat=n):
            dev = abs(source.states[g](*args) - model.states[g](*[img[a] for a in args]))
            if dev > spec.delta:
                out.append(Violation("state", (g, args), dev))
    return out


def check_domains(sigma, spec, source, model) -> list[Violation]:
    img = _images(sigma, spec)
    out = []
    if not spec.domain_preserving:
        return out
    for a in spec.F:
        for lbl in sorted(source.domains_of(a)):
            if lbl not in model.domains:
                raise StructureError(f"model does not interpret domain {lbl!r}")
            if img[a] not in model.domains[lbl]:
                out.append(Violation("domain", (a, lbl), None))
    return out


def _metric_form(spec, source) -> str | None:
    if source.signature.metric_in_states:
        return "two-sided"
    if spec.mode == "CMS":
        return "one-sided"
    return None


def check_contractive(sigma, spec, source, model) -> list[Violation]:
    """One-sided d(sa,sb) <= d(a,b) + delta in CMS mode; two-sided when the
    metric is itself a state symbol (then MS and CMS coincide)."""
    form = _metric_form(spec, source)
    if form is None:
        return []
    img = _images(sigma, spec)
    out = []
    for i, a in enumerate(spec.F):
        for b in spec.F[i + 1:]:
            diff = model.metric(img[a], img[b]) - source.metric(a, b)
            dev = abs(diff) if form == "two-sided" else diff
            if dev > spec.delta:
                out.append(Violation("contractive", (a, b), dev))
    return out


def check_microstate(sigma, spec, source, model) -> list[Violation]:
    """Full violation report; empty exactly when sigma is a valid microstate."""
    return (check_morphism(sigma, spec, source, model) + check_states(sigma, spec, source, model)
            + check_domains(sigma, spec, source, model)
            + check_contractive(sigma, spec, source, model))


def _candidates(spec, source, model) -> list[list[int]]:
    everything = list(range(model.size))
    out = []
    for a in spec.F:
        allowed = None
        if spec.domain_preserving:
            for lbl in source.domains_of(a):
                if lbl not in model.domains:
                    raise StructureError(f"model does not interpret domain {lbl!r}")
                dom = model.domains[lbl]
                allowed = dom if allowed is None else allowed & dom
        out.append(everything if allowed is None else sorted(allowed))
    return out


def _compile(spec, source, model):
    """Group every condition by the F-position at which it becomes decidable."""
    pos = {a: i for i, a in enumerate(spec.F)}
    k = len(spec.F)
    groups: list[list] = [[] for _ in range(k)]
    delta = spec.delta
    terms = []
    for c in enumerate_term_constraints(spec.F, spec.R_terms, source):
        arg_pos = tuple(pos[a] for a in c.args)
        at = max(arg_pos + (pos[c.out],))
        terms.append((c.term.n_vars, c.term_index, at, c.term, arg_pos, pos[c.out]))
    terms.sort(key=lambda x: (x[0], x[1]))
    for _, _, at, term, arg_pos, out_pos in terms:
        groups[at].append(("t", term, arg_pos, out_pos))
    for g in spec.R_states:
        n = source.signature.arity(g)
        for args in product(spec.F, repeat=n):
            arg_pos = tuple(pos[a] for a in args)
            groups[max(arg_pos)].append(("s", g, arg_pos, source.states[g](*args)))
    form = _metric_form(spec, source)
    if form is not None:
        for i, a in enumerate(spec.F):
            for j in range(i + 1, k):
                groups[j].append(("d", form, (i, j), source.metric(a, spec.F[j])))
    mm, ms = model.metric, model.states

    def ok(check, assign):
        kind = check[0]
        if kind == "t":
            _, term, arg_pos, out_pos = check
            val = _eval(term, [assign[p] for p in arg_pos], model)
            return mm(assign[out_pos], val) <= delta
        if kind == "s":
            _, g, arg_pos, target = check
            return abs(ms[g](*[assign[p] for p in arg_pos]) - target) <= delta
        _, form_, (i, j), target = check
        diff = mm(assign[i], assign[j]) - target
        return (abs(diff) if form_ == "two-sided" else diff) <= delta

    return groups, ok


def iter_microstates(spec: MicrostateSpec, source: FiniteStructure, model: FiniteStructure,
                     budget: int | None = None) -> Iterator[tuple[int, ...]]:
    """Valid image tuples in lexicographic order of candidate lists.

    Backtracks along F; a partial map is dropped as soon as any fully
    instantiated condition exceeds delta.
    """
    budget = node_budget() if budget is None else budget
    cands = _candidates(spec, source, model)
    groups, ok = _compile(spec, source, model)
    k = len(spec.F)
    assign = [0] * k
    nodes = 0
    if k == 0:
        yield ()
        return

    def rec(i):
        nonlocal nodes
        for b in cands[i]:
            nodes += 1
            if nodes > budget:
                raise BudgetExceeded(f"microstate enumeration exceeded {budget} nodes")
            assign[i] = b
            if all(ok(c, assign) for c in groups[i]):
                if i + 1 == k:
                    yield tuple(assign)
                else:
                    yield from rec(i + 1)

    yield from rec(0)


def enumerate_microstates(spec: MicrostateSpec, source: FiniteStructure,
                          model: FiniteStructure, budget: int | None = None,
                          prune: bool = True) -> list[Microstate]:
    """All valid microstates. ``prune=False`` filters every map instead
    (slow; kept as a differential check of the pruned search)."""
    if prune:
        return [Microstate(spec.F, imgs) for imgs in iter_microstates(spec, source, model, budget)]
    budget = node_budget() if budget is None else budget
    cands = _candidates(spec, source, model)
    if math.prod(len(c) for c in cands) > budget:
        raise BudgetExceeded("unpruned enumeration exceeds the node budget")
    return [Microstate(spec.F, imgs) for imgs in product(*cands)
            if not check_microstate(imgs, spec, source, model)]


def sample_microstates(spec: MicrostateSpec, source: FiniteStructure, model: FiniteStructure,
                       n: int, seed: int, cap: int = 100) -> tuple[int, int, list[Microstate]]:
    """Monte Carlo: draw n uniform domain-respecting maps, count the valid ones."""
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    cands = _candidates(spec, source, model)
    groups, ok = _compile(spec, source, model)
    draws = [rng.integers(0, len(c), size=n) for c in cands]
    valid, kept = 0, []
    for t in range(n):
        assign = [cands[i][int(draws[i][t])] for i in range(len(cands))]
        if all(ok(c, assign) for g in groups for c in g):
            valid += 1
            if len(kept) < cap:
                kept.append(Microstate(spec.F, tuple(assign)))
    return valid, n, kept


# partition microstates -------------------------------------------------------

def _check_distribution(p) -> list[Fraction]:
    p = [as_fraction(x) for x in p]
    if any(x < 0 for x in p) or sum(p) != 1:
        raise ValueError(f"{[str(x) for x in p]} is not a probability vector")
    return p


def _within(dev: Fraction, delta: Fraction, strict: bool) -> bool:
    return dev < delta if strict else dev <= delta


def _type_class_sum(targets: Sequence[Fraction], r: int, delta: Fraction,
                    offset: Fraction, strict: bool) -> int:
    """Sum of multinomials r!/prod(k!) over compositions k of r with
    offset + sum |target_a - k_a/r| within delta."""
    n = len(targets)
    total = 0

    def rec(i, left, dev, coeff):
        nonlocal total
        if i == n - 1:
            d = dev + abs(targets[i] - Fraction(left, r))
            if _within(d, delta, strict):
                total += coeff
            return
        # |target - k/r| alone must already fit in the remaining slack
        lo = max(0, math.floor((targets[i] - delta) * r))
        hi = min(left, math.ceil((targets[i] + delta) * r))
        for k in range(lo, hi + 1):
            d = dev + abs(targets[i] - Fraction(k, r))
            if d < delta or (not strict and d == delta):
                rec(i + 1, left - k, d, coeff * math.comb(left, k))

    if n == 0:
        return 0
    rec(0, r, offset, 1)
    return total


def count_partition_microstates(p: Sequence, r: int, delta, strict: bool = False) -> int:
    """|{Q: {1..r} -> A : sum_a |p_a - mu_r(Q_a)| < delta}| via type classes."""
    p = _check_distribution(p)
    if r < 1:
        raise ValueError("r must be positive")
    return _type_class_sum(p, r, as_fraction(delta), Fraction(0), strict)


def _partition_ok(labels, p, r, delta, strict):
    counts = Counter(labels)
    dev = sum(abs(pa - Fraction(counts.get(a, 0), r)) for a, pa in enumerate(p))
    return _within(dev, delta, strict)


def enumerate_partition_microstates(p: Sequence, r: int, delta, strict: bool = False,
                                    budget: int | None = None) -> list[tuple[int, ...]]:
    """The label maps themselves, by brute force over all |A|^r maps."""
    p = _check_distribution(p)
    delta = as_fraction(delta)
    budget = node_budget() if budget is None else budget
    if len(p) ** r > budget:
        raise BudgetExceeded(f"{len(p)}^{r} maps exceed the node budget")
    return [q for q in product(range(len(p)), repeat=r) if _partition_ok(q, p, r, delta, strict)]


def sample_partition_microstates(p: Sequence, r: int, delta, n: int, seed: int,
                                 strict: bool = False) -> tuple[int, int]:
    p = _check_distribution(p)
    delta = as_fraction(delta)
    rng = np.random.default_rng(seed)
    draws = rng.integers(0, len(p), size=(n, r))
    valid = sum(1 for row in draws if _partition_ok(row.tolist(), p, r, delta, strict))
    return valid, n


# Bowen approximating partitions ------------------------------------------------

def bowen_target(labels: Sequence[Hashable], perms: Sequence[Sequence[int]],
                 weights: Sequence | None = None) -> dict[tuple, Fraction]:
    """Masses of the join cells of a source partition under the action window."""
    from .structures import cell_masses, make_join_partition
    return cell_masses(make_join_partition(labels, perms), weights)


def _bowen_dev(q, invs, target, r):
    emp = Counter(tuple(q[inv[x] - 1] for inv in invs) for x in range(r))
    keys = set(target) | set(emp)
    return sum(abs(target.get(a, Fraction(0)) - Fraction(emp.get(a, 0), r)) for a in keys)


def count_bowen_microstates(target: Mapping[tuple, Fraction], labels: Sequence[Hashable],
                            sofic_perms: Sequence[Sequence[int]], r: int, delta,
                            strict: bool = False, budget: int | None = None) -> int:
    """Exact count of Q: {1..r} -> labels whose sigma(F)-join distribution is
    within delta (L1) of ``target``.

    When every window permutation is the same, the join of Q is a relabeled
    copy of Q and the count is a type-class sum; otherwise all |A|^r maps are
    enumerated within the node budget.
    """
    delta = as_fraction(delta)
    labels = list(labels)
    perms = [check_permutation(p, r) for p in sofic_perms]
    if not perms:
        raise ValueError("the window needs at least one permutation")
    target = {tuple(k): Fraction(v) for k, v in target.items()}
    width = len(perms)
    if any(len(k) != width for k in target):
        raise StructureError("target cells and window size disagree")
    if all(p == perms[0] for p in perms):
        diag = [target.get((a,) * width, Fraction(0)) for a in labels]
        off = sum((v for k, v in target.items() if len(set(k)) > 1 or k[0] not in labels),
                  Fraction(0))
        return _type_class_sum(diag, r, delta, off, strict)
    budget = node_budget() if budget is None else budget
    if len(labels) ** r > budget:
        raise BudgetExceeded(f"{len(labels)}^{r} maps exceed the node budget")
    invs = [inverse(p) for p in perms]
    return sum(1 for q in product(labels, repeat=r)
               if _within(_bowen_dev(q, invs, target, r), delta, strict))


def estimate_bowen_microstates(target, labels, sofic_perms, r, delta, n: int, seed: int,
                               strict: bool = False) -> float:
    """Sampling estimate of the Bowen count: valid fraction times |A|^r."""
    delta = as_fraction(delta)
    labels = list(labels)
    perms = [check_permutation(p, r) for p in sofic_perms]
    target = {tuple(k): Fraction(v) for k, v in target.items()}
    invs = [inverse(p) for p in perms]
    rng = np.random.default_rng(seed)
    draws = rng.integers(0, len(labels), size=(n, r))
    valid = sum(1 for row in draws
                if _within(_bowen_dev([labels[i] for i in row], invs, target, r), delta, strict))
    return valid / n * float(len(labels)) ** r
