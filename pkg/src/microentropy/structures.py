"""Finite metric structures and the built-in asymptotic model families.

Elements are addressed by carrier index. Operations are callables on
indices, so large built-ins (the measure algebra on 2^r subsets, Sym(r))
never materialize their tables unless asked to. All state values and
distances are exact ``Fraction``s.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import permutations, product
from typing import Callable, Hashable, Mapping, Sequence

from .terms import Signature

MEASURE_SIGNATURE = Signature(
    function_symbols=(("zero", 0), ("one", 0), ("complement", 1), ("union", 2), ("intersection", 2)),
    state_symbols=(("mu", 1),),
    domain_labels=("all",),
)

GROUP_SIGNATURE = Signature(
    function_symbols=(("one", 0), ("mult", 2), ("inv", 1)),
    state_symbols=(("tau", 1),),
    domain_labels=("all",),
)

MAX_MEASURE_ALGEBRA_R = 16
MAX_SYM_R = 8


class StructureError(ValueError):
    pass


class ModelTooLarge(StructureError):
    """The carrier is too large to materialize; use a counting path instead."""


@dataclass(frozen=True, eq=False)
class FiniteStructure:
    signature: Signature
    elements: tuple[str, ...]
    ops: Mapping[str, Callable[..., int]]
    states: Mapping[str, Callable[..., Fraction]]
    metric: Callable[[int, int], Fraction]
    domains: Mapping[str, frozenset[int]]
    name: str = ""
    # underlying python objects per element (bitmask, permutation tuple, ...)
    values: tuple | None = None
    _index: dict = field(default_factory=dict, repr=False)

    @property
    def size(self) -> int:
        return len(self.elements)

    def index(self, name: str) -> int:
        if not self._index:
            self._index.update((n, i) for i, n in enumerate(self.elements))
        try:
            return self._index[name]
        except KeyError:
            raise StructureError(f"{name!r} is not an element of {self.name or 'the structure'}")

    def indices(self, names: Sequence[str]) -> list[int]:
        return [self.index(n) for n in names]

    def domains_of(self, i: int) -> frozenset[str]:
        return frozenset(lbl for lbl, members in self.domains.items() if i in members)

    def op_table(self, symbol: str) -> dict[tuple[int, ...], int]:
        arity = self.signature.arity(symbol)
        op = self.ops[symbol]
        return {args: op(*args) for args in product(range(self.size), repeat=arity)}

    def state_table(self, symbol: str) -> dict[tuple[int, ...], Fraction]:
        arity = self.signature.arity(symbol)
        g = self.states[symbol]
        return {args: g(*args) for args in product(range(self.size), repeat=arity)}

    def metric_matrix(self) -> list[list[Fraction]]:
        return [[self.metric(i, j) for j in range(self.size)] for i in range(self.size)]


def check_structure(S: FiniteStructure) -> list[str]:
    """Human-readable list of invariant violations; empty when S is sound."""
    problems = []
    m = S.size
    sig = S.signature
    if len(set(S.elements)) != m:
        problems.append("duplicate element names")
    for n, _ in sig.function_symbols:
        if n not in S.ops:
            problems.append(f"function symbol {n!r} is not interpreted")
    for n, _ in sig.state_symbols:
        if n not in S.states:
            problems.append(f"state symbol {n!r} is not interpreted")
    for lbl in sig.domain_labels:
        if lbl not in S.domains:
            problems.append(f"domain {lbl!r} is not interpreted")
    covered = set()
    for members in S.domains.values():
        covered |= members
    for i in range(m):
        if i not in covered:
            problems.append(f"element {S.elements[i]!r} lies in no domain")
    D = S.metric_matrix()
    for i in range(m):
        if D[i][i] != 0:
            problems.append(f"d({S.elements[i]},{S.elements[i]}) = {D[i][i]} is not 0")
        for j in range(i + 1, m):
            if D[i][j] < 0:
                problems.append(f"negative distance between {S.elements[i]} and {S.elements[j]}")
            if D[i][j] != D[j][i]:
                problems.append(f"metric is not symmetric at ({S.elements[i]},{S.elements[j]})")
    for i, j, k in product(range(m), repeat=3):
        if D[i][k] > D[i][j] + D[j][k]:
            problems.append("triangle inequality fails for "
                            f"({S.elements[i]},{S.elements[j]},{S.elements[k]})")
            break
    for n, a in sig.function_symbols:
        if n in S.ops:
            for args, v in S.op_table(n).items():
                if not (isinstance(v, int) and 0 <= v < m):
                    problems.append(f"{n}{args} leaves the carrier")
                    break
    if sig.metric_in_states and "d" in S.states:
        for i, j in product(range(m), repeat=2):
            if S.states["d"](i, j) != D[i][j]:
                problems.append("state table for d differs from the metric")
                break
    return problems


def from_tables(signature: Signature, elements: Sequence[str],
                op_tables: Mapping[str, Mapping[tuple, int]],
                state_tables: Mapping[str, Mapping[tuple, Fraction]],
                metric: Sequence[Sequence[Fraction]] | Mapping[tuple[int, int], Fraction],
                domains: Mapping[str, Sequence[int]], name: str = "") -> FiniteStructure:
    """Structure from explicit tables indexed by carrier-index tuples."""
    m = len(elements)
    ops = {}
    for n, a in signature.function_symbols:
        table = dict(op_tables[n])
        missing = [args for args in product(range(m), repeat=a) if args not in table]
        if missing:
            raise StructureError(f"non-total table for {n!r}: missing {missing[0]}")
        ops[n] = _table_op(table)
    states = {}
    for n, a in signature.state_symbols:
        table = {k: Fraction(v) for k, v in state_tables[n].items()}
        missing = [args for args in product(range(m), repeat=a) if args not in table]
        if missing:
            raise StructureError(f"non-total state table for {n!r}: missing {missing[0]}")
        states[n] = _table_op(table)
    if isinstance(metric, Mapping):
        D = [[Fraction(0)] * m for _ in range(m)]
        for (i, j), v in metric.items():
            D[i][j] = D[j][i] = Fraction(v)
    else:
        D = [[Fraction(v) for v in row] for row in metric]
    doms = {lbl: frozenset(domains[lbl]) for lbl in signature.domain_labels}
    return FiniteStructure(signature, tuple(elements), ops, states,
                           lambda i, j: D[i][j], doms, name=name)


def _table_op(table):
    def op(*args):
        return table[args]
    return op


def _popcount(x: int) -> int:
    return bin(x).count("1")


def _subset_name(mask: int, r: int) -> str:
    return "b" + "".join("1" if mask >> i & 1 else "0" for i in range(r))


def subset_mask(points: Sequence[int]) -> int:
    """Bitmask index of a subset of {1..r} in build_measure_algebra(r)."""
    mask = 0
    for x in points:
        mask |= 1 << (x - 1)
    return mask


def _measure_parts(r: int):
    if r < 1:
        raise StructureError("r must be positive")
    if r > MAX_MEASURE_ALGEBRA_R:
        raise ModelTooLarge(f"2^{r} subsets is too many to materialize; "
                            "use count_partition_microstates")
    full = (1 << r) - 1
    weights = [Fraction(k, r) for k in range(r + 1)]
    ops = {
        "zero": lambda: 0,
        "one": lambda: full,
        "complement": lambda x: full ^ x,
        "union": lambda x, y: x | y,
        "intersection": lambda x, y: x & y,
    }
    states = {"mu": lambda x: weights[_popcount(x)]}
    metric = lambda x, y: weights[_popcount(x ^ y)]  # noqa: E731
    elements = tuple(_subset_name(x, r) for x in range(full + 1))
    return ops, states, metric, elements


def build_measure_algebra(r: int) -> FiniteStructure:
    """All subsets of {1..r} with uniform measure and d(P,Q) = mu(P xor Q)."""
    ops, states, metric, elements = _measure_parts(r)
    return FiniteStructure(MEASURE_SIGNATURE, elements, ops, states, metric,
                           {"all": frozenset(range(1 << r))},
                           name=f"measure_algebra({r})", values=tuple(range(1 << r)))


def compose(p: Sequence[int], q: Sequence[int]) -> tuple[int, ...]:
    """(p q)(x) = p(q(x)) for permutations in one-line 1-based notation."""
    return tuple(p[x - 1] for x in q)


def inverse(p: Sequence[int]) -> tuple[int, ...]:
    out = [0] * len(p)
    for x, y in enumerate(p, start=1):
        out[y - 1] = x
    return tuple(out)


def fixed_points(p: Sequence[int]) -> int:
    return sum(1 for x, y in enumerate(p, start=1) if x == y)


def check_permutation(p: Sequence[int], r: int) -> tuple[int, ...]:
    p = tuple(int(x) for x in p)
    if sorted(p) != list(range(1, r + 1)):
        raise StructureError(f"{p} is not a permutation of 1..{r}")
    return p


def _perm_name(p):
    if len(p) <= 9:
        return "p" + "".join(map(str, p))
    return "p" + "_".join(map(str, p))


def build_sym(r: int) -> FiniteStructure:
    """Sym(r) with trace = fixed-point fraction and normalized Hamming metric."""
    if r < 1:
        raise StructureError("r must be positive")
    if r > MAX_SYM_R:
        raise ModelTooLarge(f"{r}! permutations is too many to materialize")
    perms = tuple(permutations(range(1, r + 1)))
    where = {p: i for i, p in enumerate(perms)}
    weights = [Fraction(k, r) for k in range(r + 1)]

    @lru_cache(maxsize=None)
    def mult(i, j):
        return where[compose(perms[i], perms[j])]

    def inv(i):
        return where[inverse(perms[i])]

    def tau(i):
        return weights[fixed_points(perms[i])]

    def metric(i, j):
        p, q = perms[i], perms[j]
        return weights[sum(1 for a, b in zip(p, q) if a != b)]

    return FiniteStructure(GROUP_SIGNATURE, tuple(_perm_name(p) for p in perms),
                           {"one": lambda: 0, "mult": mult, "inv": inv},
                           {"tau": tau}, metric, {"all": frozenset(range(len(perms)))},
                           name=f"sym({r})", values=perms)


def build_group(elements: Sequence[str], mult: Mapping[tuple[str, str], str],
                identity: str | None = None, name: str = "") -> FiniteStructure:
    """Finite group as a source structure: discrete metric, trace = [s == e]."""
    elements = tuple(elements)
    idx = {n: i for i, n in enumerate(elements)}
    try:
        table = {(idx[a], idx[b]): idx[c] for (a, b), c in mult.items()}
    except KeyError as exc:
        raise StructureError(f"multiplication table names unknown element {exc.args[0]!r}")
    m = len(elements)
    if len(table) != m * m:
        raise StructureError("non-total multiplication table")
    units = [x for x in range(m) if all(table[x, b] == b == table[b, x] for b in range(m))]
    if identity is None:
        if not units:
            raise StructureError("multiplication table has no identity")
        identity = elements[units[0]]
    if identity not in idx or idx[identity] not in units:
        raise StructureError(f"{identity!r} is not an identity of the table")
    e = idx[identity]
    inv = {}
    for a in range(m):
        left = [b for b in range(m) if table[a, b] == e == table[b, a]]
        if not left:
            raise StructureError(f"{elements[a]!r} has no inverse")
        inv[(a,)] = left[0]
    for a, b, c in product(range(m), repeat=3):
        if table[table[a, b], c] != table[a, table[b, c]]:
            raise StructureError(f"multiplication is not associative at "
                                 f"({elements[a]}, {elements[b]}, {elements[c]})")
    return from_tables(
        GROUP_SIGNATURE, elements,
        {"one": {(): e}, "mult": table, "inv": inv},
        {"tau": {(a,): Fraction(int(a == e)) for a in range(m)}},
        [[Fraction(int(i != j)) for j in range(m)] for i in range(m)],
        {"all": range(m)}, name=name)


def cyclic_group(n: int) -> FiniteStructure:
    """Z/n with elements e, g, g2, ..., g{n-1}."""
    names = ["e", "g"] + [f"g{k}" for k in range(2, n)]
    names = names[:n]
    mult = {(names[a], names[b]): names[(a + b) % n] for a in range(n) for b in range(n)}
    return build_group(names, mult, identity="e", name=f"Z/{n}")


@dataclass(frozen=True)
class SoficMap:
    """Per group element and model index r, a permutation of {1..r}.

    Elements with no recorded image act trivially.
    """

    group_elements: tuple[str, ...]
    images: Mapping[tuple[str, int], tuple[int, ...]]
    identity: str = "e"

    def __post_init__(self):
        object.__setattr__(self, "group_elements", tuple(self.group_elements))
        clean = {}
        for (s, r), p in self.images.items():
            if s not in self.group_elements:
                raise StructureError(f"sofic map lists unknown element {s!r}")
            clean[(s, int(r))] = check_permutation(p, int(r))
        for (s, r), p in clean.items():
            if s == self.identity and p != tuple(range(1, r + 1)):
                raise StructureError(f"image of the identity at r={r} is not the identity")
        object.__setattr__(self, "images", clean)

    def has(self, s: str, r: int) -> bool:
        return (s, r) in self.images or s == self.identity

    def image(self, s: str, r: int) -> tuple[int, ...]:
        return self.images.get((s, r), tuple(range(1, r + 1)))

    def radii(self) -> list[int]:
        return sorted({r for _, r in self.images})


def parse_sofic_map(text: str, identity: str = "e") -> SoficMap:
    """Lines ``<element> <r> <image of 1> ... <image of r>``; ``#`` comments.

    An optional ``identity <name>`` line names the identity element.
    """
    order, images = [], {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "identity" and len(parts) == 2:
            identity = parts[1]
            continue
        try:
            s, r, img = parts[0], int(parts[1]), [int(x) for x in parts[2:]]
        except (IndexError, ValueError):
            raise StructureError(f"line {lineno}: expected '<element> <r> <permutation>'")
        if len(img) != r:
            raise StructureError(f"line {lineno}: permutation has {len(img)} entries, r = {r}")
        if (s, r) in images:
            raise StructureError(f"line {lineno}: duplicate entry for ({s}, {r})")
        try:
            images[(s, r)] = check_permutation(img, r)
        except StructureError as exc:
            raise StructureError(f"line {lineno}: {exc}")
        if s not in order:
            order.append(s)
    if identity not in order:
        order.insert(0, identity)
    return SoficMap(tuple(order), images, identity=identity)


def format_sofic_map(sofic: SoficMap) -> str:
    lines = [f"identity {sofic.identity}"]
    for s in sofic.group_elements:
        for r in sorted(r for (t, r) in sofic.images if t == s):
            lines.append(f"{s} {r} " + " ".join(map(str, sofic.images[(s, r)])))
    return "\n".join(lines) + "\n"


def image_mask(perm: Sequence[int], mask: int) -> int:
    """Forward image pi(P) of the subset encoded by ``mask``."""
    out = 0
    for x, y in enumerate(perm):
        if mask >> x & 1:
            out |= 1 << (y - 1)
    return out


def build_dyn_measure_algebra(r: int, sofic: SoficMap, group_window: Sequence[str]) -> FiniteStructure:
    """Measure algebra on {1..r} plus one unary symbol per window element s,
    acting as P -> sigma(s)(P)."""
    base = build_measure_algebra(r)
    ops = dict(base.ops)
    extra = []
    for s in group_window:
        if not sofic.has(s, r):
            raise StructureError(f"sofic map has no permutation for {s!r} at r={r}")
        if s in ops:
            raise StructureError(f"group element name {s!r} clashes with a symbol")
        perm = sofic.image(s, r)
        table = [image_mask(perm, x) for x in range(1 << r)]
        ops[s] = table.__getitem__
        extra.append((s, 1))
    return FiniteStructure(MEASURE_SIGNATURE.with_functions(extra), base.elements, ops,
                           base.states, base.metric, base.domains,
                           name=f"dyn_measure_algebra({r})", values=base.values)


def make_join_partition(P: Sequence[Hashable], perms: Sequence[Sequence[int]]) -> tuple[tuple, ...]:
    """Common refinement of the forward images pi(P), pi in perms.

    ``P[x-1]`` is the label of point x. Point x gets the label
    ``(P(pi_1^-1 x), ..., P(pi_k^-1 x))``.
    """
    r = len(P)
    if any(lbl is None for lbl in P):
        raise StructureError("partition is not total")
    if not perms:
        raise StructureError("need at least one permutation")
    invs = [inverse(check_permutation(p, r)) for p in perms]
    return tuple(tuple(P[q[x] - 1] for q in invs) for x in range(r))


def cell_masses(labels: Sequence[Hashable], weights: Sequence[Fraction] | None = None) -> dict:
    """Mass of each label class; uniform weights by default."""
    n = len(labels)
    out: dict = {}
    for i, lbl in enumerate(labels):
        w = Fraction(1, n) if weights is None else Fraction(weights[i])
        out[lbl] = out.get(lbl, Fraction(0)) + w
    return out


MODEL_FAMILIES: dict[str, Callable[[int], FiniteStructure]] = {
    "measure_algebra": build_measure_algebra,
    "sym": build_sym,
}


def model_family(name: str) -> Callable[[int], FiniteStructure]:
    try:
        return MODEL_FAMILIES[name]
    except KeyError:
        raise StructureError(f"unknown model family {name!r}; "
                             f"known: {', '.join(sorted(MODEL_FAMILIES))}")

