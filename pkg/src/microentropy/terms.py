"""Signatures, terms, term evaluation and term closure over finite structures.

Terms are immutable trees. A variable is a node whose ``root`` is an int;
every other node is a function symbol applied to ``arity`` children. Constants
are 0-ary function symbols, so they need no special casing anywhere.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import TYPE_CHECKING, Iterable, NamedTuple, Sequence

if TYPE_CHECKING:
    from .structures import FiniteStructure

NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
VAR_RE = re.compile(r"x(\d+)\Z")


class TermError(ValueError):
    """Raised for arity mismatches, unknown symbols and bad arguments."""


@dataclass(frozen=True)
class Signature:
    function_symbols: tuple[tuple[str, int], ...]
    state_symbols: tuple[tuple[str, int], ...] = ()
    domain_labels: tuple[str, ...] = ("all",)
    metric_in_states: bool = False

    def __post_init__(self):
        object.__setattr__(self, "function_symbols",
                           tuple((str(n), int(a)) for n, a in self.function_symbols))
        object.__setattr__(self, "state_symbols",
                           tuple((str(n), int(a)) for n, a in self.state_symbols))
        object.__setattr__(self, "domain_labels", tuple(self.domain_labels))
        names = [n for n, _ in self.function_symbols] + [n for n, _ in self.state_symbols]
        seen = set()
        for n in names:
            if not NAME_RE.match(n) or VAR_RE.match(n):
                raise TermError(f"invalid symbol name {n!r}")
            if n in seen:
                raise TermError(f"duplicate symbol name {n!r}")
            seen.add(n)
        for n, a in self.function_symbols:
            if a < 0:
                raise TermError(f"function symbol {n!r} has negative arity")
        for n, a in self.state_symbols:
            if a < 1:
                raise TermError(f"state symbol {n!r} must have arity >= 1")
        if not self.domain_labels:
            raise TermError("a signature needs at least one domain label")
        if len(set(self.domain_labels)) != len(self.domain_labels):
            raise TermError("duplicate domain label")

    @property
    def functions(self) -> dict[str, int]:
        return dict(self.function_symbols)

    @property
    def states(self) -> dict[str, int]:
        return dict(self.state_symbols)

    def arity(self, name: str) -> int:
        for n, a in self.function_symbols + self.state_symbols:
            if n == name:
                return a
        raise TermError(f"symbol {name!r} is not in the signature")

    def with_functions(self, extra: Iterable[tuple[str, int]]) -> Signature:
        return Signature(self.function_symbols + tuple(extra), self.state_symbols,
                         self.domain_labels, self.metric_in_states)


@dataclass(frozen=True)
class Term:
    root: str | int
    children: tuple[Term, ...] = ()

    def __post_init__(self):
        if isinstance(self.root, int) and self.children:
            raise TermError("a variable has no children")

    @property
    def is_variable(self) -> bool:
        return isinstance(self.root, int)

    @property
    def depth(self) -> int:
        if self.is_variable:
            return 0
        return 1 + max((c.depth for c in self.children), default=0)

    def variables(self) -> list[int]:
        """Variable indices in left-to-right order of occurrence."""
        if self.is_variable:
            return [self.root]
        out = []
        for c in self.children:
            out.extend(c.variables())
        return out

    @property
    def n_vars(self) -> int:
        vs = self.variables()
        return max(vs) + 1 if vs else 0

    def symbols(self) -> set[str]:
        if self.is_variable:
            return set()
        out = {self.root}
        for c in self.children:
            out |= c.symbols()
        return out

    def __str__(self):
        if self.is_variable:
            return f"x{self.root}"
        return "(" + " ".join([self.root] + [str(c) for c in self.children]) + ")"


def var(i: int) -> Term:
    return Term(int(i))


def app(symbol: str, *children: Term) -> Term:
    return Term(symbol, tuple(children))


def check_term(t: Term, signature: Signature) -> None:
    """Raise TermError unless ``t`` is well formed over ``signature``."""
    fns = signature.functions

    def walk(node):
        if node.is_variable:
            if node.root < 0:
                raise TermError("negative variable index")
            return
        if node.root not in fns:
            raise TermError(f"symbol {node.root!r} is not a function symbol")
        if len(node.children) != fns[node.root]:
            raise TermError(f"{node.root!r} expects {fns[node.root]} arguments, "
                            f"got {len(node.children)}")
        for c in node.children:
            walk(c)

    walk(t)
    vs = set(t.variables())
    if vs != set(range(len(vs))):
        raise TermError(f"variables of {t} are not contiguous from x0")


def parse_term(text: str) -> Term:
    """Parse the prefix form, e.g. ``(union x0 (complement x1))``."""
    tokens = re.findall(r"\(|\)|[^\s()]+", text)
    pos = 0

    def node():
        nonlocal pos
        if pos >= len(tokens):
            raise TermError("unexpected end of term")
        tok = tokens[pos]
        pos += 1
        if tok == "(":
            if pos >= len(tokens) or tokens[pos] in "()":
                raise TermError("expected a symbol after '('")
            head = tokens[pos]
            pos += 1
            kids = []
            while pos < len(tokens) and tokens[pos] != ")":
                kids.append(node())
            if pos >= len(tokens):
                raise TermError("unbalanced parentheses")
            pos += 1
            return Term(head, tuple(kids))
        if tok == ")":
            raise TermError("unexpected ')'")
        m = VAR_RE.match(tok)
        if m:
            return Term(int(m.group(1)))
        return Term(tok)

    t = node()
    if pos != len(tokens):
        raise TermError("trailing input after term")
    return t


def eval_term(t: Term, args: Sequence[int], S: FiniteStructure) -> int:
    """Value of ``t`` at carrier indices ``args`` in ``S``."""
    if len(args) != t.n_vars:
        raise TermError(f"term {t} takes {t.n_vars} arguments, got {len(args)}")
    m = S.size
    for a in args:
        if not (isinstance(a, int) and 0 <= a < m):
            raise TermError(f"argument {a!r} is outside the carrier")
    return _eval(t, args, S)


def _eval(t, args, S):
    if t.is_variable:
        return args[t.root]
    try:
        op = S.ops[t.root]
    except KeyError:
        raise TermError(f"symbol {t.root!r} is not interpreted in {S.name or 'structure'}")
    return op(*[_eval(c, args, S) for c in t.children])


def closure(F: Iterable[int], T: Iterable[Term], S: FiniteStructure) -> frozenset[int]:
    """F together with every value t(a1..an), t in T, ai in F."""
    F = sorted(set(F))
    out = set(F)
    for t in T:
        for args in product(F, repeat=t.n_vars):
            out.add(eval_term(t, args, S))
    return frozenset(out)


def closure_to_depth(F: Iterable[int], S: FiniteStructure, depth: int,
                     symbols: Iterable[str] | None = None) -> tuple[frozenset[int], bool]:
    """Bounded stand-in for the closure under all terms.

    Applies every function symbol (or the given subset) to all argument
    tuples, ``depth`` times. Returns the set and whether a fixed point was
    reached, i.e. one more round would add nothing.
    """
    sig = S.signature
    names = list(symbols) if symbols is not None else [n for n, _ in sig.function_symbols]
    steps = [app(n, *[var(i) for i in range(sig.arity(n))]) for n in names]
    current = frozenset(F)
    for _ in range(depth):
        nxt = closure(current, steps, S)
        if nxt == current:
            return current, True
        current = nxt
    return current, closure(current, steps, S) == current


def _renumber(t: Term, counter: list[int]) -> Term:
    if t.is_variable:
        counter[0] += 1
        return Term(counter[0] - 1)
    return Term(t.root, tuple(_renumber(c, counter) for c in t.children))


def materialize_terms(signature: Signature, depth: int,
                      symbols: Iterable[str] | None = None) -> tuple[Term, ...]:
    """All linear terms of depth 1..depth, interned and in a fixed order.

    A linear term uses each variable once, numbered left to right. Terms with
    repeated variables are covered because constraint instances may repeat
    arguments.
    """
    fns = signature.functions
    names = list(symbols) if symbols is not None else [n for n, _ in signature.function_symbols]
    for n in names:
        if n not in fns:
            raise TermError(f"{n!r} is not a function symbol")
    level = [Term(0)]
    seen = {Term(0)}
    ordered = []
    for _ in range(depth):
        new = []
        for n in names:
            for kids in product(level, repeat=fns[n]):
                t = _renumber(Term(n, kids), [0])
                if t not in seen:
                    seen.add(t)
                    new.append(t)
        ordered.extend(new)
        level = level + new
    return tuple(ordered)


class TermConstraint(NamedTuple):
    term_index: int
    term: Term
    args: tuple[int, ...]
    out: int


def enumerate_term_constraints(F: Sequence[int], T: Sequence[Term],
                               S: FiniteStructure) -> list[TermConstraint]:
    """Every instance out = t(a1..an) with all ai and out inside F."""
    F = list(dict.fromkeys(F))
    members = set(F)
    out = []
    for ti, t in enumerate(T):
        for pos in product(range(len(F)), repeat=t.n_vars):
            args = tuple(F[i] for i in pos)
            val = eval_term(t, args, S)
            if val in members:
                out.append(TermConstraint(ti, t, args, val))
    return out


@dataclass(frozen=True)
class ContinuityModulus:
    """Tabulated uniform-continuity modulus of a symbol on a domain tuple.

    Stored for documentation; finite-r estimation never consumes it.
    """

    symbol: str
    domains: tuple[str, ...]
    breakpoints: tuple[tuple[Fraction, Fraction], ...] = field(default=())

    def __post_init__(self):
        bps = tuple((Fraction(x), Fraction(y)) for x, y in self.breakpoints)
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "domains", tuple(self.domains))
        if not bps:
            raise TermError("a continuity modulus needs at least one breakpoint")
        prev_x, prev_y = Fraction(0), Fraction(0)
        for x, y in bps:
            if not (0 < x <= 1 and 0 < y <= 1):
                raise TermError(f"breakpoint ({x}, {y}) outside (0,1]x(0,1]")
            if x <= prev_x:
                raise TermError("breakpoints must be strictly increasing")
            if y < prev_y:
                raise TermError("continuity modulus must be nondecreasing")
            prev_x, prev_y = x, y

    def __call__(self, x) -> Fraction:
        x = Fraction(x)
        best = None
        for bx, by in self.breakpoints:
            if bx <= x:
                best = by
        if best is None:
            raise TermError(f"{x} is below the first tabulated breakpoint")
        return best
