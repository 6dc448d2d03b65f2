"""Text formats: structure documents and experiment configurations.

Structure documents are block structured::

    format 1
    signature { fn mult/2; state tau/1; metric_in_states false; domains all; }
    carrier { e; g; }
    table mult { (e, e) -> e; (e, g) -> g; (g, e) -> g; (g, g) -> e; }
    state tau { (e) -> 1; (g) -> 0; }
    metric { (e, g) -> 1; }
    domain all { e, g }
    genset G { g }

Numbers in structure files are exact rationals written ``p/q``; decimals are
rejected there. Experiment configs are flat ``key = value`` lines whose
delta and eps grids may use decimals (read as exact decimal fractions).
Every parse error carries a line and column.
"""
from __future__ import annotations

import os
import re
from dataclasses import dataclass, field, fields
from fractions import Fraction
from itertools import product
from typing import Any

from .structures import FiniteStructure, from_tables
from .terms import ContinuityModulus, Signature, TermError

FORMAT_VERSION = 1

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<arrow>->)
  | (?P<decimal>-?\d+\.\d*)
  | (?P<int>-?\d+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[{}();,/\[\]=])
""", re.VERBOSE)


class DSLError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str, line: int = 1, col: int = 1) -> list[Token]:
    """Tokens with 1-based positions; ``line``/``col`` offset the origin."""
    out = []
    start, pos = 1 - col, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise DSLError(f"unexpected character {text[pos]!r}", line, pos - start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            start = m.end()
        elif kind not in ("ws", "comment"):
            out.append(Token(kind, m.group(), line, m.start() - start + 1))
        pos = m.end()
    out.append(Token("eof", "", line, pos - start + 1))
    return out


class _Parser:
    def __init__(self, text: str, line: int = 1, col: int = 1):
        self.toks = tokenize(text, line, col)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        return DSLError(msg, tok.line, tok.col)

    def next(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.i += 1
        return t

    def at(self, text) -> bool:
        return self.tok.text == text and self.tok.kind in ("punct", "arrow", "name")

    def expect(self, text) -> Token:
        if not self.at(text):
            raise self.error(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        return self.next()

    def name(self) -> Token:
        if self.tok.kind != "name":
            raise self.error(f"expected a name, found {self.tok.text or 'end of input'!r}")
        return self.next()

    def integer(self) -> int:
        if self.tok.kind != "int":
            raise self.error(f"expected an integer, found {self.tok.text or 'end of input'!r}")
        return int(self.next().text)

    def rational(self, allow_decimal=False) -> Fraction:
        tok = self.tok
        if tok.kind == "decimal":
            if not allow_decimal:
                raise self.error("decimals are not allowed here; write an exact rational p/q")
            self.next()
            return Fraction(tok.text)
        num = self.integer()
        if self.at("/"):
            self.next()
            den = self.integer()
            if den == 0:
                raise self.error("zero denominator", tok)
            return Fraction(num, den)
        return Fraction(num)

    def names_until(self, close) -> list[Token]:
        """Comma/semicolon separated names up to the closing token."""
        out = []
        while not self.at(close):
            out.append(self.name())
            if self.at(",") or self.at(";"):
                self.next()
            elif not self.at(close):
                raise self.error(f"expected ',' or {close!r}")
        self.next()
        return out

    def arg_tuple(self) -> list[Token]:
        self.expect("(")
        return self.names_until(")")


@dataclass
class StructureDoc:
    signature: Signature
    carrier: tuple[str, ...]
    tables: dict[str, dict[tuple[str, ...], str]]
    states: dict[str, dict[tuple[str, ...], Fraction]]
    metric: dict[tuple[str, str], Fraction]
    domains: dict[str, tuple[str, ...]]
    gensets: dict[str, tuple[str, ...]] = field(default_factory=dict)
    moduli: tuple[ContinuityModulus, ...] = ()

    def distance(self, a: str, b: str) -> Fraction:
        if a == b:
            return Fraction(0)
        return self.metric[(a, b)] if (a, b) in self.metric else self.metric[(b, a)]

    def to_structure(self, name: str = "") -> FiniteStructure:
        idx = {n: i for i, n in enumerate(self.carrier)}

        def key(args):
            return tuple(idx[a] for a in args)

        m = len(self.carrier)
        D = [[self.distance(self.carrier[i], self.carrier[j]) for j in range(m)] for i in range(m)]
        return from_tables(
            self.signature, self.carrier,
            {s: {key(a): idx[v] for a, v in t.items()} for s, t in self.tables.items()},
            {s: {key(a): v for a, v in t.items()} for s, t in self.states.items()},
            D, {lbl: [idx[e] for e in members] for lbl, members in self.domains.items()},
            name=name)

    def genset_indices(self, name: str) -> list[int]:
        if name not in self.gensets:
            raise KeyError(f"no genset named {name!r}")
        idx = {n: i for i, n in enumerate(self.carrier)}
        return [idx[e] for e in self.gensets[name]]


def parse_structure(text: str) -> StructureDoc:
    p = _Parser(text)
    _header(p)
    sig_tok = None
    fns, sts, doms, mis = [], [], [], False
    carrier = None
    tables, tspans, states, sspans = {}, {}, {}, {}
    metric, mspan = None, None
    domains, dspans, gensets, moduli = {}, {}, {}, []
    while p.tok.kind != "eof":
        kw = p.name()
        if kw.text == "signature":
            if sig_tok is not None:
                raise p.error("duplicate signature block", kw)
            sig_tok = kw
            fns, sts, doms, mis = _signature_block(p)
        elif kw.text == "carrier":
            if carrier is not None:
                raise p.error("duplicate carrier block", kw)
            p.expect("{")
            elems = p.names_until("}")
            carrier = [t.text for t in elems]
            seen = set()
            for t in elems:
                if t.text in seen:
                    raise p.error(f"duplicate element {t.text!r}", t)
                seen.add(t.text)
        elif kw.text in ("table", "state"):
            sym = p.name()
            store, spans = (tables, tspans) if kw.text == "table" else (states, sspans)
            if sym.text in store:
                raise p.error(f"duplicate {kw.text} block for {sym.text!r}", sym)
            store[sym.text], spans[sym.text] = _entries(p, kw.text == "state"), sym
        elif kw.text == "metric":
            if metric is not None:
                raise p.error("duplicate metric block", kw)
            mspan = kw
            metric = _metric_block(p)
        elif kw.text in ("domain", "genset"):
            nm = p.name()
            store = domains if kw.text == "domain" else gensets
            if nm.text in store:
                raise p.error(f"duplicate {kw.text} {nm.text!r}", nm)
            p.expect("{")
            store[nm.text] = [t for t in p.names_until("}")]
            if kw.text == "domain":
                dspans[nm.text] = nm
        elif kw.text == "modulus":
            moduli.append(_modulus_block(p))
        else:
            raise p.error(f"unknown block {kw.text!r}", kw)
    end = p.tok
    if sig_tok is None:
        raise p.error("missing signature block", end)
    if carrier is None:
        raise p.error("missing carrier block", end)
    try:
        sig = Signature(tuple((n.text, a) for n, a in fns), tuple((n.text, a) for n, a in sts),
                        tuple(d.text for d in doms), mis)
    except TermError as exc:
        raise p.error(str(exc), sig_tok)
    members = set(carrier)

    def elem(tok):
        if tok.text not in members:
            raise p.error(f"undeclared element {tok.text!r}", tok)
        return tok.text

    out_tables = {}
    fn_arity = sig.functions
    for sym, entries in tables.items():
        if sym not in fn_arity:
            raise p.error(f"table for undeclared function symbol {sym!r}", tspans[sym])
        out_tables[sym] = _check_total(p, sym, entries, fn_arity[sym], carrier, elem, tspans[sym],
                                       value=lambda v: elem(v))
    for sym in fn_arity:
        if sym not in out_tables:
            raise p.error(f"no table for function symbol {sym!r}", end)
    out_states = {}
    st_arity = sig.states
    for sym, entries in states.items():
        if sym not in st_arity:
            raise p.error(f"state table for undeclared state symbol {sym!r}", sspans[sym])
        out_states[sym] = _check_total(p, sym, entries, st_arity[sym], carrier, elem, sspans[sym],
                                       value=lambda v: v)
    for sym in st_arity:
        if sym not in out_states:
            raise p.error(f"no state table for state symbol {sym!r}", end)
    if metric is None:
        if len(carrier) > 1:
            raise p.error("missing metric block", end)
        metric, mspan = [], end
    out_metric = _check_metric(p, metric, carrier, elem, mspan)
    out_domains = {}
    for lbl, toks in domains.items():
        if lbl not in sig.domain_labels:
            raise p.error(f"domain {lbl!r} is not declared in the signature", dspans[lbl])
        out_domains[lbl] = _ordered(carrier, [elem(t) for t in toks])
    for lbl in sig.domain_labels:
        if lbl not in out_domains:
            raise p.error(f"no block for domain {lbl!r}", end)
    covered = set().union(*out_domains.values()) if out_domains else set()
    for e in carrier:
        if e not in covered:
            raise p.error(f"element {e!r} lies in no domain", end)
    out_gensets = {nm: _ordered(carrier, [elem(t) for t in toks]) for nm, toks in gensets.items()}
    for mod, tok in moduli:
        if mod.symbol not in fn_arity and mod.symbol not in st_arity:
            raise p.error(f"modulus for undeclared symbol {mod.symbol!r}", tok)
        for d in mod.domains:
            if d not in sig.domain_labels:
                raise p.error(f"modulus names undeclared domain {d!r}", tok)
    if sig.metric_in_states and "d" in out_states:
        for (a, b), v in out_states["d"].items():
            want = Fraction(0) if a == b else out_metric.get((a, b), out_metric.get((b, a)))
            if v != want:
                raise p.error(f"state d{(a, b)} = {v} differs from the metric", sspans["d"])
    return StructureDoc(sig, tuple(carrier), out_tables, out_states, out_metric, out_domains,
                        out_gensets, tuple(m for m, _ in moduli))


def _ordered(carrier, names):
    chosen = set(names)
    return tuple(e for e in carrier if e in chosen)


def _header(p: _Parser):
    if p.at("format"):
        tok = p.next()
        version = p.integer()
        if version != FORMAT_VERSION:
            raise p.error(f"unsupported format {version}", tok)


def _signature_block(p: _Parser):
    p.expect("{")
    fns, sts, doms, mis = [], [], [], False
    while not p.at("}"):
        kw = p.name()
        if kw.text in ("fn", "state"):
            nm = p.name()
            p.expect("/")
            arity = p.integer()
            (fns if kw.text == "fn" else sts).append((nm, arity))
        elif kw.text == "metric_in_states":
            val = p.name()
            if val.text not in ("true", "false"):
                raise p.error("expected true or false", val)
            mis = val.text == "true"
        elif kw.text == "domains":
            doms.append(p.name())
            while p.at(","):
                p.next()
                doms.append(p.name())
        else:
            raise p.error(f"unknown signature item {kw.text!r}", kw)
        p.expect(";")
    p.next()
    return fns, sts, doms, mis


def _entries(p: _Parser, rational: bool):
    p.expect("{")
    out = []
    while not p.at("}"):
        start = p.tok
        args = p.arg_tuple()
        p.expect("->")
        val = p.rational() if rational else p.name()
        p.expect(";")
        out.append((start, args, val))
    p.next()
    return out


def _check_total(p, sym, entries, arity, carrier, elem, span, value):
    table = {}
    for start, args, val in entries:
        if len(args) != arity:
            raise p.error(f"{sym!r} has arity {arity}, entry has {len(args)} arguments", start)
        key = tuple(elem(a) for a in args)
        if key in table:
            raise p.error(f"duplicate entry {sym}({', '.join(key)})", start)
        table[key] = value(val)
    for key in product(carrier, repeat=arity):
        if key not in table:
            raise p.error(f"non-total table: {sym}({', '.join(key)}) is missing", span)
    return table


def _metric_block(p: _Parser):
    p.expect("{")
    out = []
    while not p.at("}"):
        start = p.tok
        args = p.arg_tuple()
        if len(args) != 2:
            raise p.error("metric entries take two elements", start)
        p.expect("->")
        val = p.rational()
        p.expect(";")
        out.append((start, args, val))
    p.next()
    return out


def _check_metric(p, entries, carrier, elem, span):
    pos = {e: i for i, e in enumerate(carrier)}
    D: dict[tuple[str, str], Fraction] = {}
    for start, (ta, tb), val in entries:
        a, b = elem(ta), elem(tb)
        if val < 0:
            raise p.error(f"negative distance d({a}, {b}) = {val}", start)
        if a == b:
            if val != 0:
                raise p.error(f"d({a}, {a}) must be 0", start)
            continue
        key = (a, b) if pos[a] < pos[b] else (b, a)
        if key in D and D[key] != val:
            raise p.error(f"metric is not symmetric: d({a}, {b}) given twice with different values",
                          start)
        D[key] = val
    m = len(carrier)
    for i in range(m):
        for j in range(i + 1, m):
            if (carrier[i], carrier[j]) not in D:
                raise p.error(f"non-total metric: d({carrier[i]}, {carrier[j]}) is missing", span)

    def d(i, j):
        if i == j:
            return Fraction(0)
        return D[(carrier[i], carrier[j])] if i < j else D[(carrier[j], carrier[i])]

    for i, j, k in product(range(m), repeat=3):
        if d(i, k) > d(i, j) + d(j, k):
            raise p.error("triangle inequality fails for "
                          f"({carrier[i]}, {carrier[j]}, {carrier[k]})", span)
    return D


def _modulus_block(p: _Parser):
    start = p.tok
    sym = p.name()
    p.expect("(")
    doms = [t.text for t in p.names_until(")")]
    p.expect("{")
    bps = []
    while not p.at("}"):
        x = p.rational()
        p.expect("->")
        y = p.rational()
        p.expect(";")
        bps.append((x, y))
    p.next()
    try:
        return ContinuityModulus(sym.text, tuple(doms), tuple(bps)), start
    except TermError as exc:
        raise p.error(str(exc), start)


def structure_to_doc(S: FiniteStructure, gensets: dict[str, list[int]] | None = None,
                     moduli=()) -> StructureDoc:
    """Materialize every table of S into a document."""
    el = S.elements
    tables = {n: {tuple(el[i] for i in args): el[v] for args, v in S.op_table(n).items()}
              for n, _ in S.signature.function_symbols}
    states = {n: {tuple(el[i] for i in args): v for args, v in S.state_table(n).items()}
              for n, _ in S.signature.state_symbols}
    metric = {(el[i], el[j]): S.metric(i, j) for i in range(S.size) for j in range(i + 1, S.size)}
    domains = {lbl: tuple(el[i] for i in sorted(S.domains[lbl])) for lbl in S.signature.domain_labels}
    gs = {nm: _ordered(el, [el[i] for i in members]) for nm, members in (gensets or {}).items()}
    return StructureDoc(S.signature, el, tables, states, metric, domains, gs, tuple(moduli))


def _rat(x: Fraction) -> str:
    return str(Fraction(x))


def serialize_structure(doc: StructureDoc) -> str:
    sig = doc.signature
    pos = {e: i for i, e in enumerate(doc.carrier)}
    lines = [f"format {FORMAT_VERSION}", "", "signature {"]
    lines += [f"  fn {n}/{a};" for n, a in sig.function_symbols]
    lines += [f"  state {n}/{a};" for n, a in sig.state_symbols]
    lines.append(f"  metric_in_states {'true' if sig.metric_in_states else 'false'};")
    lines.append(f"  domains {', '.join(sig.domain_labels)};")
    lines += ["}", "", "carrier {"]
    lines += [f"  {e};" for e in doc.carrier]
    lines.append("}")

    def order(key):
        return tuple(pos[a] for a in key)

    for n, _ in sig.function_symbols:
        lines += ["", f"table {n} {{"]
        for key in sorted(doc.tables[n], key=order):
            lines.append(f"  ({', '.join(key)}) -> {doc.tables[n][key]};")
        lines.append("}")
    for n, _ in sig.state_symbols:
        lines += ["", f"state {n} {{"]
        for key in sorted(doc.states[n], key=order):
            lines.append(f"  ({', '.join(key)}) -> {_rat(doc.states[n][key])};")
        lines.append("}")
    lines += ["", "metric {"]
    for key in sorted(doc.metric, key=order):
        lines.append(f"  ({key[0]}, {key[1]}) -> {_rat(doc.metric[key])};")
    lines.append("}")
    for lbl in sorted(doc.domains):
        lines += ["", f"domain {lbl} {{ {', '.join(doc.domains[lbl])} }}"]
    for nm in sorted(doc.gensets):
        lines += ["", f"genset {nm} {{ {', '.join(doc.gensets[nm])} }}"]
    for mod in doc.moduli:
        lines += ["", f"modulus {mod.symbol} ({', '.join(mod.domains)}) {{"]
        lines += [f"  {_rat(x)} -> {_rat(y)};" for x, y in mod.breakpoints]
        lines.append("}")
    return "\n".join(lines) + "\n"


# experiment configs -------------------------------------------------------------

SCENARIOS = ("shannon", "bowen", "sofic_dim", "entropy", "dimension")
ENGINES = ("enumerate", "count", "sample")


@dataclass
class ExperimentConfig:
    scenario: str
    r: tuple[int, ...]
    delta: tuple[Fraction, ...]
    eps: tuple[Fraction, ...]
    source: str | None = None
    model: str | None = None
    generators: tuple[str, ...] = ()
    relative: tuple[str, ...] = ()
    p: tuple[Fraction, ...] = ()
    depth: tuple[int, ...] = (1,)
    states: tuple[str, ...] = ()
    F_chain: tuple[tuple[str, ...], ...] = ()
    closure_depth: int = 4
    N: str = "r"
    L: str = "1"
    mode: str = "MS"
    engine: str = "enumerate"
    samples: int = 0
    statistic: str = "last"
    log_base: str = "e"
    partition: str | None = None
    window: tuple[str, ...] = ()
    sofic: str | None = None
    seed: int = 0
    workers: int = 1
    out: str | None = None
    notes: list[str] = field(default_factory=list, compare=False)

    @property
    def log_base_value(self) -> float | None:
        return None if self.log_base == "e" else float(self.log_base)


_LIST_KEYS = {"r": "int", "delta": "rat", "eps": "rat", "generators": "name", "relative": "name",
              "p": "rat", "depth": "int", "states": "name", "window": "name", "F_chain": "nested"}
_SCALAR_KEYS = {"scenario", "source", "model", "closure_depth", "N", "L", "mode", "engine",
                "statistic", "log_base", "partition", "sofic", "seed", "workers", "out"}


def _config_value(p: _Parser, kind: str, key: str):
    if kind == "int":
        return p.integer()
    if kind == "rat":
        return p.rational(allow_decimal=True)
    if kind == "name":
        return p.name().text
    p.expect("[")
    return tuple(t.text for t in p.names_until("]"))


def _line_tokens(text: str):
    """Split config text into (line_no, raw value text) per key."""
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        out.append((lineno, line))
    return out


def parse_experiment(text: str, base_dir: str | None = None) -> ExperimentConfig:
    values: dict[str, Any] = {}
    spans: dict[str, tuple[int, int]] = {}
    lines = _line_tokens(text)
    if lines and lines[0][1].split() and lines[0][1].split()[0] == "format":
        lineno, line = lines.pop(0)
        parts = line.split()
        if len(parts) != 2 or parts[1] != str(FORMAT_VERSION):
            raise DSLError("unsupported format header", lineno, 1)
    for lineno, line in lines:
        if "=" not in line:
            raise DSLError("expected 'key = value'", lineno, 1)
        key, _, rest = line.partition("=")
        key = key.strip()
        col = len(line) - len(line.lstrip()) + 1
        if key in values:
            raise DSLError(f"duplicate key {key!r}", lineno, col)
        vcol = line.index("=") + 2
        spans[key] = (lineno, vcol)
        if key in _LIST_KEYS:
            values[key] = _parse_list(rest, _LIST_KEYS[key], lineno, vcol)
        elif key in _SCALAR_KEYS:
            values[key] = rest.strip()
            if not values[key]:
                raise DSLError(f"empty value for {key!r}", lineno, vcol)
        else:
            raise DSLError(f"unknown key {key!r}", lineno, col)
    return _build_config(values, spans, base_dir)


def _parse_list(text, kind, lineno, col):
    p = _Parser(text, lineno, col)
    p.expect("[")
    items = []
    while not p.at("]"):
        items.append(_config_value(p, kind, ""))
        if p.at(","):
            p.next()
        elif not p.at("]"):
            raise p.error("expected ',' or ']'")
    p.next()
    if p.tok.kind != "eof":
        raise p.error("trailing input after list")
    return tuple(items)


def _build_config(values, spans, base_dir) -> ExperimentConfig:
    def fail(key, msg):
        line, col = spans.get(key, (0, 0))
        return DSLError(msg, line, col)

    for key in ("scenario", "r", "delta", "eps"):
        if key not in values:
            raise DSLError(f"missing required key {key!r}", 0, 0)
    if values["scenario"] not in SCENARIOS:
        raise fail("scenario", f"unknown scenario {values['scenario']!r}")
    for key in ("closure_depth", "seed", "workers"):
        if key in values:
            try:
                values[key] = int(values[key])
            except ValueError:
                raise fail(key, f"{key} must be an integer")
    engine = values.get("engine", "enumerate")
    m = re.fullmatch(r"sample\((\d+)\)", engine)
    if m:
        values["engine"], values["samples"] = "sample", int(m.group(1))
        if values["samples"] < 1:
            raise fail("engine", "sample size must be positive")
    elif engine not in ("enumerate", "count"):
        raise fail("engine", f"unknown engine {engine!r}")
    model = values.get("model")
    if model is not None:
        mm = re.fullmatch(r"([A-Za-z_]+)(\(r\))?", model)
        if not mm:
            raise fail("model", f"cannot read model {model!r}")
        values["model"] = mm.group(1)
    cfg = ExperimentConfig(**{k: v for k, v in values.items()})
    for key in ("r", "delta", "eps"):
        if not getattr(cfg, key):
            raise fail(key, f"{key} grid must be nonempty")
    if any(b <= a for a, b in zip(cfg.r, cfg.r[1:])) or cfg.r[0] < 1:
        raise fail("r", "r schedule must be positive and strictly increasing")
    if any(d < 0 for d in cfg.delta):
        raise fail("delta", "delta must be nonnegative")
    if any(e <= 0 for e in cfg.eps):
        raise fail("eps", "eps must be positive")
    for key in ("delta", "eps"):
        grid = getattr(cfg, key)
        if list(grid) != sorted(grid):
            raise fail(key, f"{key} grid must be sorted ascending")
    if cfg.N not in ("r", "r log r", "r^2"):
        raise fail("N", f"unknown normalization {cfg.N!r}")
    if cfg.L not in ("1", "|log eps|"):
        raise fail("L", f"unknown packing normalization {cfg.L!r}")
    if cfg.L == "|log eps|" and any(e == 1 for e in cfg.eps):
        raise fail("eps", "eps = 1 makes |log eps| vanish")
    if cfg.N == "r log r" and cfg.r[0] < 2:
        raise fail("r", "r log r vanishes at r = 1")
    if cfg.mode not in ("MS", "CMS"):
        raise fail("mode", f"mode must be MS or CMS, not {cfg.mode!r}")
    if cfg.log_base not in ("e", "2"):
        raise fail("log_base", "log_base must be e or 2")
    if cfg.p and (any(x < 0 for x in cfg.p) or sum(cfg.p) != 1):
        raise fail("p", "p must be a probability vector")
    if any(d < 0 for d in cfg.depth) or not cfg.depth:
        raise fail("depth", "term depths must be nonnegative")
    if cfg.mode == "CMS" and cfg.source and base_dir is not None:
        path = os.path.join(base_dir, cfg.source)
        if os.path.exists(path):
            with open(path, encoding="utf-8") as fh:
                doc = parse_structure(fh.read())
            if doc.signature.metric_in_states:
                cfg.notes.append("metric_in_states is true, so MS = CMS; CMS adds no condition")
    return cfg


def _fmt_item(x) -> str:
    if isinstance(x, tuple):
        return "[" + ", ".join(x) + "]"
    return str(x)


def serialize_config(cfg: ExperimentConfig) -> str:
    lines = [f"format {FORMAT_VERSION}"]
    for f in fields(ExperimentConfig):
        if f.name in ("notes", "samples"):
            continue
        val = getattr(cfg, f.name)
        if f.name == "engine" and val == "sample":
            val = f"sample({cfg.samples})"
        if val is None:
            continue
        if isinstance(val, tuple):
            if not val and f.name not in ("r", "delta", "eps"):
                continue
            lines.append(f"{f.name} = [{', '.join(_fmt_item(x) for x in val)}]")
        else:
            lines.append(f"{f.name} = {val}")
    return "\n".join(lines) + "\n"


def serialize(obj) -> str:
    """Canonical text for a StructureDoc, FiniteStructure or ExperimentConfig."""
    if isinstance(obj, ExperimentConfig):
        return serialize_config(obj)
    if isinstance(obj, FiniteStructure):
        obj = structure_to_doc(obj)
    if isinstance(obj, StructureDoc):
        return serialize_structure(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def load_structure(path: str) -> StructureDoc:
    with open(path, encoding="utf-8") as fh:
        return parse_structure(fh.read())


def load_experiment(path: str) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_experiment(fh.read(), base_dir=os.path.dirname(os.path.abspath(path)))
