"""Flowgraphs: locations joined by edges labelled with instruction sequences.

Text format::

    program linSrch
    int i r n x
    array A
    start a
    exit g
    error bad          # optional
    edge a -> b : i := 0
    edge b -> c : assume i < n
    edge d -> b : i := i + 1 ; skip

Expressions use ``+ - *``, integer literals, variables and ``A[e]`` reads;
conditions use ``== != < <= > >=``, ``&& || !``, ``true``/``false`` and
parentheses.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

from .symexpr import (
    FALSE,
    TRUE,
    Add,
    And,
    BoolLit,
    Cmp,
    Formula,
    IntLit,
    Mul,
    Not,
    Or,
    Select,
    Sub,
    SymExpr,
    Symbol,
    arrays_of,
    symbols_of,
    to_str,
)

log = logging.getLogger(__name__)

KEYWORDS = {"assume", "skip", "true", "false"}


class FlowgraphError(Exception):
    def __init__(self, msg: str, line: Optional[int] = None, col: Optional[int] = None):
        self.msg, self.line, self.col = msg, line, col
        where = f"{line}:{col}: " if line is not None else ""
        super().__init__(where + msg)


class FlowgraphSyntaxError(FlowgraphError):
    pass


class SemanticError(FlowgraphError):
    pass


class UnknownLocation(KeyError):
    pass


class InvalidPath(ValueError):
    pass


@dataclass(frozen=True)
class Assign:
    var: str
    rhs: SymExpr

    def __str__(self):
        return f"{self.var} := {to_str(self.rhs, program=True)}"


@dataclass(frozen=True)
class Assume:
    cond: Formula

    def __str__(self):
        if self.cond == TRUE:
            return "skip"
        return f"assume {to_str(self.cond, program=True)}"


Instr = Union[Assign, Assume]


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    body: tuple

    def __post_init__(self):
        if not self.body:
            raise ValueError("edge body must not be empty")

    def __str__(self):
        return f"edge {self.src} -> {self.dst} : " + " ; ".join(str(i) for i in self.body)


@dataclass(frozen=True)
class Flowgraph:
    name: str
    locations: tuple
    start: str
    exits: frozenset
    errors: frozenset
    int_vars: tuple
    array_vars: tuple
    edges: tuple

    def __post_init__(self):
        validate(self)

    @property
    def variables(self) -> tuple:
        return self.int_vars + self.array_vars

    def successors(self, loc: str) -> list[Edge]:
        return successors(self, loc)

    def is_terminal(self, loc: str) -> bool:
        return loc in self.exits or loc in self.errors

    def unreachable(self) -> list[str]:
        seen, stack = {self.start}, [self.start]
        while stack:
            l = stack.pop()
            for e in self.edges:
                if e.src == l and e.dst not in seen:
                    seen.add(e.dst)
                    stack.append(e.dst)
        return [l for l in self.locations if l not in seen]

    def pretty(self) -> str:
        return pretty(self)


@dataclass(frozen=True)
class Path:
    """A walk ``l0 l1 ... lk`` through a flowgraph with the edge of every step."""

    start: str
    edges: tuple = ()

    def __post_init__(self):
        here = self.start
        for e in self.edges:
            if e.src != here:
                raise InvalidPath(f"edge {e.src}->{e.dst} does not continue from {here}")
            here = e.dst

    @property
    def locations(self) -> tuple:
        return (self.start,) + tuple(e.dst for e in self.edges)

    @property
    def end(self) -> str:
        return self.edges[-1].dst if self.edges else self.start

    def __len__(self):
        return len(self.edges)

    def __add__(self, other: "Path") -> "Path":
        if other.start != self.end:
            raise InvalidPath(f"cannot join path ending at {self.end} with one starting at {other.start}")
        return Path(self.start, self.edges + other.edges)

    def label(self) -> str:
        return "".join(self.locations)


def successors(fg: Flowgraph, loc: str) -> list[Edge]:
    if loc not in fg.locations:
        raise UnknownLocation(loc)
    return [e for e in fg.edges if e.src == loc]


def _instr_vars(i: Instr):
    node = i.rhs if isinstance(i, Assign) else i.cond
    return symbols_of(node), arrays_of(node)


def validate(fg: Flowgraph) -> None:
    locs = set(fg.locations)
    if fg.start not in locs:
        raise SemanticError(f"start location {fg.start} is not a location")
    for l in fg.exits | fg.errors:
        if l not in locs:
            raise SemanticError(f"unknown location {l}")
    both = fg.exits & fg.errors
    if both:
        raise SemanticError(f"locations both exit and error: {sorted(both)}")
    dup = set(fg.int_vars) & set(fg.array_vars)
    if dup:
        raise SemanticError(f"variables declared twice: {sorted(dup)}")
    ints, arrs = set(fg.int_vars), set(fg.array_vars)
    for e in fg.edges:
        for l in (e.src, e.dst):
            if l not in locs:
                raise SemanticError(f"unknown location {l}")
        if e.src in fg.exits or e.src in fg.errors:
            raise SemanticError(f"edge {e.src} -> {e.dst} leaves a terminal location")
        for i in e.body:
            if isinstance(i, Assign):
                if i.var in arrs:
                    raise SemanticError(f"assignment to array {i.var}")
                if i.var not in ints:
                    raise SemanticError(f"undeclared variable {i.var}")
            scal, used_arrs = _instr_vars(i)
            for v in scal:
                if v in arrs:
                    raise SemanticError(f"array {v} used as a scalar")
                if v not in ints:
                    raise SemanticError(f"undeclared variable {v}")
            for a in used_arrs:
                if a in ints:
                    raise SemanticError(f"scalar {a} indexed as an array")
                if a not in arrs:
                    raise SemanticError(f"undeclared array {a}")


def pretty(fg: Flowgraph) -> str:
    lines = [f"program {fg.name}"]
    if fg.int_vars:
        lines.append("int " + " ".join(fg.int_vars))
    if fg.array_vars:
        lines.append("array " + " ".join(fg.array_vars))
    lines.append(f"start {fg.start}")
    ordered = lambda s: [l for l in fg.locations if l in s]  # noqa: E731
    if fg.exits:
        lines.append("exit " + " ".join(ordered(fg.exits)))
    if fg.errors:
        lines.append("error " + " ".join(ordered(fg.errors)))
    lines += [str(e) for e in fg.edges]
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+)|(?P<id>[A-Za-z_][A-Za-z0-9_]*)|"
    r"(?P<op>:=|->|==|!=|<=|>=|&&|\|\||[-+*<>!()\[\];:]))"
)


@dataclass
class _Tok:
    kind: str
    text: str
    col: int


def _tokenize(s: str, line: int, offset: int = 0) -> list[_Tok]:
    out, i = [], 0
    while i < len(s):
        if s[i:].strip() == "":
            break
        m = _TOKEN.match(s, i)
        if not m or m.end() == i:
            col = i + 1 + offset + (len(s[i:]) - len(s[i:].lstrip()))
            raise FlowgraphSyntaxError(f"unexpected character {s[i:].lstrip()[:1]!r}", line, col)
        kind = m.lastgroup
        out.append(_Tok(kind, m.group(kind), m.start(kind) + 1 + offset))
        i = m.end()
    return out


class _ExprParser:
    def __init__(self, toks: list[_Tok], line: int, end_col: int):
        self.toks, self.i, self.line, self.end_col = toks, 0, line, end_col

    def peek(self, k: int = 0) -> Optional[_Tok]:
        j = self.i + k
        return self.toks[j] if j < len(self.toks) else None

    def error(self, msg: str):
        t = self.peek()
        raise FlowgraphSyntaxError(msg, self.line, t.col if t else self.end_col)

    def take(self, text: Optional[str] = None, kind: Optional[str] = None) -> _Tok:
        t = self.peek()
        if t is None or (text is not None and t.text != text) or (kind is not None and t.kind != kind):
            want = text or kind
            self.error(f"expected {want!r}" + (f", found {t.text!r}" if t else ", found end of line"))
        self.i += 1
        return t

    def at(self, text: str) -> bool:
        t = self.peek()
        return t is not None and t.text == text and t.kind == "op"

    def done(self) -> bool:
        return self.i >= len(self.toks)

    # --- integer expressions
    def expr(self) -> SymExpr:
        e = self.product()
        while self.at("+") or self.at("-"):
            op = self.take().text
            r = self.product()
            e = Add(e, r) if op == "+" else Sub(e, r)
        return e

    def product(self) -> SymExpr:
        e = self.unary()
        while self.at("*"):
            self.take()
            e = Mul(e, self.unary())
        return e

    def unary(self) -> SymExpr:
        if self.at("-"):
            self.take()
            inner = self.unary()
            if isinstance(inner, IntLit):
                return IntLit(-inner.value)
            return Mul(IntLit(-1), inner)
        return self.atom()

    def atom(self) -> SymExpr:
        t = self.peek()
        if t is None:
            self.error("expected an expression")
        if t.kind == "num":
            self.take()
            return IntLit(int(t.text))
        if t.kind == "id":
            if t.text in KEYWORDS:
                self.error(f"unexpected keyword {t.text!r}")
            self.take()
            if self.at("["):
                self.take("[")
                idx = self.expr()
                self.take("]")
                return Select(t.text, idx)
            return Symbol(t.text)
        if self.at("("):
            self.take("(")
            e = self.expr()
            self.take(")")
            return e
        self.error(f"unexpected {t.text!r}")

    # --- conditions
    def cond(self) -> Formula:
        parts = [self.conj()]
        while self.at("||"):
            self.take()
            parts.append(self.conj())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def conj(self) -> Formula:
        parts = [self.bunary()]
        while self.at("&&"):
            self.take()
            parts.append(self.bunary())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def bunary(self) -> Formula:
        if self.at("!"):
            self.take()
            return Not(self.bunary())
        t = self.peek()
        if t is not None and t.kind == "id" and t.text in ("true", "false"):
            self.take()
            return TRUE if t.text == "true" else FALSE
        if self.at("("):
            save = self.i
            try:
                self.take("(")
                f = self.cond()
                self.take(")")
                if self.peek() is None or self.peek().text in ("&&", "||", ")", ";"):
                    return f
            except FlowgraphSyntaxError:
                pass
            self.i = save
        return self.comparison()

    def comparison(self) -> Formula:
        l = self.expr()
        t = self.peek()
        if t is None or t.text not in ("==", "!=", "<", "<=", ">", ">="):
            self.error("expected a comparison operator")
        self.take()
        return Cmp(t.text, l, self.expr())


def _split_instrs(toks: list[_Tok]) -> list[list[_Tok]]:
    out, cur = [], []
    for t in toks:
        if t.kind == "op" and t.text == ";":
            out.append(cur)
            cur = []
        else:
            cur.append(t)
    out.append(cur)
    return out


def _parse_instr(toks: list[_Tok], line: int, end_col: int) -> Instr:
    if not toks:
        raise FlowgraphSyntaxError("empty instruction", line, end_col)
    head = toks[0]
    if head.kind == "id" and head.text == "skip":
        if len(toks) > 1:
            raise FlowgraphSyntaxError("unexpected tokens after skip", line, toks[1].col)
        return Assume(TRUE)
    p = _ExprParser(toks, line, end_col)
    if head.kind == "id" and head.text == "assume":
        p.take()
        c = p.cond()
    elif head.kind == "id" and len(toks) > 1 and toks[1].text == ":=":
        if head.text in KEYWORDS:
            raise FlowgraphSyntaxError(f"cannot assign to keyword {head.text}", line, head.col)
        p.i = 2
        c = Assign(head.text, p.expr())
    else:
        raise FlowgraphSyntaxError("expected 'assume', 'skip' or an assignment", line, head.col)
    if not p.done():
        p.error(f"unexpected {p.peek().text!r}")
    return c if isinstance(c, Assign) else Assume(c)


_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*$")


def parse_flowgraph(text: str) -> Flowgraph:
    """Parse and validate the textual flowgraph format."""
    name = None
    int_vars: list[str] = []
    array_vars: list[str] = []
    start = None
    exits: list[str] = []
    errors: list[str] = []
    edges: list[Edge] = []
    locs: list[str] = []
    declared_at: dict[str, tuple] = {}

    def add_loc(l):
        if l not in locs:
            locs.append(l)

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        indent = len(line) - len(line.lstrip())
        word, _, rest = line.strip().partition(" ")
        rest_col = indent + len(word) + 2
        if word == "edge":
            head, sep, body = rest.partition(":")
            # ':=' inside the head would mean a missing ':' separator
            if not sep:
                raise FlowgraphSyntaxError("expected ':' after edge endpoints", lineno, len(line) + 1)
            m = re.fullmatch(r"\s*([A-Za-z_][A-Za-z0-9_]*)\s*->\s*([A-Za-z_][A-Za-z0-9_]*)\s*", head)
            if not m:
                raise FlowgraphSyntaxError("expected '<loc> -> <loc>'", lineno, rest_col)
            src, dst = m.group(1), m.group(2)
            body_col = rest_col + len(head) + 1
            toks = _tokenize(body, lineno, body_col - 1)
            instrs = tuple(_parse_instr(ts, lineno, len(line) + 1) for ts in _split_instrs(toks))
            add_loc(src)
            add_loc(dst)
            edges.append(Edge(src, dst, instrs))
            continue
        ids = rest.split()
        for k in ids:
            if not _IDENT.match(k):
                raise FlowgraphSyntaxError(f"bad identifier {k!r}", lineno, rest_col)
        if word == "program":
            if len(ids) != 1:
                raise FlowgraphSyntaxError("expected one program name", lineno, rest_col)
            name = ids[0]
        elif word in ("int", "array"):
            if not ids:
                raise FlowgraphSyntaxError(f"expected variable names after {word}", lineno, rest_col)
            for v in ids:
                if v in KEYWORDS:
                    raise FlowgraphSyntaxError(f"{v} is a keyword", lineno, rest_col)
                if v in declared_at:
                    raise SemanticError(f"variable {v} declared twice", lineno, rest_col)
                declared_at[v] = (lineno, rest_col)
                (int_vars if word == "int" else array_vars).append(v)
        elif word == "start":
            if len(ids) != 1:
                raise FlowgraphSyntaxError("expected one start location", lineno, rest_col)
            start = ids[0]
        elif word == "exit":
            exits += ids
        elif word == "error":
            errors += ids
        else:
            raise FlowgraphSyntaxError(f"unknown declaration {word!r}", lineno, indent + 1)

    if name is None:
        raise FlowgraphSyntaxError("missing 'program' line", 1, 1)
    if start is None:
        raise SemanticError("missing 'start' line")
    all_locs = [start] + [l for l in locs if l != start]
    known = set(all_locs)
    for l in exits + errors:
        if l not in known:
            raise SemanticError(f"unknown location {l}")
    fg = Flowgraph(
        name=name,
        locations=tuple(all_locs),
        start=start,
        exits=frozenset(exits),
        errors=frozenset(errors),
        int_vars=tuple(int_vars),
        array_vars=tuple(array_vars),
        edges=tuple(edges),
    )
    unreachable = fg.unreachable()
    if unreachable:
        log.warning("%s: unreachable locations %s", fg.name, " ".join(unreachable))
    return fg


def load_flowgraph(path) -> Flowgraph:
    with open(path, encoding="utf-8") as fh:
        return parse_flowgraph(fh.read())
