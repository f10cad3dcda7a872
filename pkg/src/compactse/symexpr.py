"""Symbolic expressions and formulas.

Integer terms are built over *symbols* (``~v``, the value of program variable
``v`` on entry), *parameters* (``k#n``, non-negative iteration counters) and
*bound variables* (``t0``, introduced only by bounded universal quantifiers).
Arrays are read-only, so an array is always referred to by the name of its
symbol and indexed through :class:`Select`.

The same AST doubles as the expression language of flowgraph instructions:
there a :class:`Symbol` stands for the program variable itself, and executing
an instruction is nothing more than substituting the current memory into it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterator, Mapping, NamedTuple, Optional, Union


class SymExpr:
    """Base class of integer-valued terms."""

    __slots__ = ()

    def __add__(self, other):
        return Add(self, as_expr(other))

    def __radd__(self, other):
        return Add(as_expr(other), self)

    def __sub__(self, other):
        return Sub(self, as_expr(other))

    def __rsub__(self, other):
        return Sub(as_expr(other), self)

    def __mul__(self, other):
        return Mul(self, as_expr(other))

    def __rmul__(self, other):
        return Mul(as_expr(other), self)

    def __neg__(self):
        return Mul(IntLit(-1), self)

    def __str__(self):
        return to_str(self)


class Formula:
    """Base class of boolean-valued formulas."""

    __slots__ = ()

    def __and__(self, other):
        return And((self, other))

    def __or__(self, other):
        return Or((self, other))

    def __invert__(self):
        return Not(self)

    def __str__(self):
        return to_str(self)


@dataclass(frozen=True, eq=True)
class IntLit(SymExpr):
    value: int


@dataclass(frozen=True, eq=True)
class Symbol(SymExpr):
    name: str


@dataclass(frozen=True, eq=True)
class Param(SymExpr):
    id: int


@dataclass(frozen=True, eq=True)
class BoundVar(SymExpr):
    name: str


@dataclass(frozen=True, eq=True)
class Add(SymExpr):
    left: SymExpr
    right: SymExpr


@dataclass(frozen=True, eq=True)
class Sub(SymExpr):
    left: SymExpr
    right: SymExpr


@dataclass(frozen=True, eq=True)
class Mul(SymExpr):
    left: SymExpr
    right: SymExpr


@dataclass(frozen=True, eq=True)
class Pow(SymExpr):
    base: SymExpr
    exp: SymExpr


@dataclass(frozen=True, eq=True)
class Select(SymExpr):
    array: str
    index: SymExpr


@dataclass(frozen=True, eq=True)
class Ite(SymExpr):
    cond: Formula
    then: SymExpr
    orelse: SymExpr


@dataclass(frozen=True, eq=True)
class BoolLit(Formula):
    value: bool


CMP_OPS = ("==", "!=", "<", "<=", ">", ">=")
NEGATED_OP = {"==": "!=", "!=": "==", "<": ">=", ">=": "<", ">": "<=", "<=": ">"}


@dataclass(frozen=True, eq=True)
class Cmp(Formula):
    op: str
    left: SymExpr
    right: SymExpr

    def __post_init__(self):
        if self.op not in CMP_OPS:
            raise ValueError(f"unknown comparison {self.op!r}")


@dataclass(frozen=True, eq=True)
class And(Formula):
    args: tuple


@dataclass(frozen=True, eq=True)
class Or(Formula):
    args: tuple


@dataclass(frozen=True, eq=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True, eq=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, eq=True)
class ForallBounded(Formula):
    """``forall var in [lower, upper) . body``."""

    var: str
    lower: SymExpr
    upper: SymExpr
    body: Formula


Node = Union[SymExpr, Formula]


def _cache_hash(cls):
    # nodes are immutable trees; rehashing a long path condition on every
    # dictionary lookup would make exploration quadratic
    structural = cls.__hash__

    def __hash__(self):
        try:
            return self.__dict__["_h"]
        except KeyError:
            h = structural(self)
            object.__setattr__(self, "_h", h)
            return h

    cls.__hash__ = __hash__


for _cls in (IntLit, Symbol, Param, BoundVar, Add, Sub, Mul, Pow, Select, Ite, BoolLit, Cmp, And, Or, Not, Implies, ForallBounded):
    _cache_hash(_cls)

TRUE = BoolLit(True)
FALSE = BoolLit(False)


def as_expr(x) -> SymExpr:
    if isinstance(x, SymExpr):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not integer terms")
    if isinstance(x, int):
        return IntLit(x)
    raise TypeError(f"cannot convert {x!r} to a symbolic expression")


def sym(name: str) -> Symbol:
    return Symbol(name)


def lit(v: int) -> IntLit:
    return IntLit(v)


def cmp(op: str, a, b) -> Cmp:
    return Cmp(op, as_expr(a), as_expr(b))


def eq(a, b) -> Cmp:
    return cmp("==", a, b)


def ne(a, b) -> Cmp:
    return cmp("!=", a, b)


def lt(a, b) -> Cmp:
    return cmp("<", a, b)


def le(a, b) -> Cmp:
    return cmp("<=", a, b)


def gt(a, b) -> Cmp:
    return cmp(">", a, b)


def ge(a, b) -> Cmp:
    return cmp(">=", a, b)


def conj(*fs: Formula) -> Formula:
    if not fs:
        return TRUE
    if len(fs) == 1:
        return fs[0]
    return And(tuple(fs))


def disj(*fs: Formula) -> Formula:
    if not fs:
        return FALSE
    if len(fs) == 1:
        return fs[0]
    return Or(tuple(fs))


def iff(a: Formula, b: Formula) -> Formula:
    return And((Implies(a, b), Implies(b, a)))


# --------------------------------------------------------------------------
# traversal


def children(x: Node) -> tuple:
    if isinstance(x, (Add, Sub, Mul)):
        return (x.left, x.right)
    if isinstance(x, Pow):
        return (x.base, x.exp)
    if isinstance(x, Select):
        return (x.index,)
    if isinstance(x, Ite):
        return (x.cond, x.then, x.orelse)
    if isinstance(x, Cmp):
        return (x.left, x.right)
    if isinstance(x, (And, Or)):
        return x.args
    if isinstance(x, Not):
        return (x.arg,)
    if isinstance(x, Implies):
        return (x.left, x.right)
    if isinstance(x, ForallBounded):
        return (x.lower, x.upper, x.body)
    return ()


def walk(x: Node) -> Iterator[Node]:
    stack = [x]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(children(n)))


class Facts(NamedTuple):
    symbols: frozenset
    arrays: frozenset
    params: frozenset
    bound: frozenset
    quantified: bool
    pow: bool
    nonlinear: bool


_NO_FACTS = Facts(frozenset(), frozenset(), frozenset(), frozenset(), False, False, False)


@lru_cache(maxsize=500_000)
def facts(x: Node) -> Facts:
    """Summary of the leaves and constructs occurring in ``x`` (memoised per node)."""
    if isinstance(x, (IntLit, BoolLit)):
        return _NO_FACTS
    if isinstance(x, Symbol):
        return _NO_FACTS._replace(symbols=frozenset((x.name,)))
    if isinstance(x, Param):
        return _NO_FACTS._replace(params=frozenset((x.id,)))
    if isinstance(x, BoundVar):
        return _NO_FACTS._replace(bound=frozenset((x.name,)))
    parts = [facts(c) for c in children(x)]
    sy, ar, pa, bo = set(), set(), set(), set()
    q = p = nl = False
    for f in parts:
        sy |= f.symbols
        ar |= f.arrays
        pa |= f.params
        bo |= f.bound
        q, p, nl = q or f.quantified, p or f.pow, nl or f.nonlinear
    if isinstance(x, Select):
        ar.add(x.array)
    elif isinstance(x, ForallBounded):
        bo.add(x.var)
        q = True
    elif isinstance(x, Pow):
        p = True
    elif isinstance(x, Mul) and not isinstance(x.left, IntLit) and not isinstance(x.right, IntLit):
        nl = True
    return Facts(frozenset(sy), frozenset(ar), frozenset(pa), frozenset(bo), q, p, nl)


def symbols_of(x: Node) -> set[str]:
    """Scalar symbol names occurring in ``x``."""
    return set(facts(x).symbols)


def arrays_of(x: Node) -> set[str]:
    return set(facts(x).arrays)


def params_of(x: Node) -> set[int]:
    return set(facts(x).params)


def bound_names(x: Node) -> set[str]:
    return set(facts(x).bound)


def has_quantifier(x: Node) -> bool:
    return facts(x).quantified


def has_pow(x: Node) -> bool:
    return facts(x).pow


def fresh_bound_name(*avoid: Node) -> str:
    taken = set()
    for a in avoid:
        taken |= bound_names(a)
    for i in itertools.count():
        name = f"t{i}"
        if name not in taken:
            return name
    raise AssertionError  # pragma: no cover


# --------------------------------------------------------------------------
# substitution


def substitute(
    x: Node,
    symbols: Optional[Mapping[str, SymExpr]] = None,
    params: Optional[Mapping[int, SymExpr]] = None,
    bound: Optional[Mapping[str, SymExpr]] = None,
) -> Node:
    """Simultaneous replacement of symbols, parameters and bound variables.

    An array select ``A(i)`` is renamed through ``symbols['A']``, which must be
    an array symbol. Bound variables shadowed by an inner quantifier are left
    alone. The result is not simplified.
    """
    symbols = symbols or {}
    params = params or {}
    bound = bound or {}

    def go(n, bnd):
        if isinstance(n, Symbol):
            return symbols.get(n.name, n)
        if isinstance(n, Param):
            return params.get(n.id, n)
        if isinstance(n, BoundVar):
            return bnd.get(n.name, n)
        if isinstance(n, (IntLit, BoolLit)):
            return n
        if isinstance(n, Add):
            return Add(go(n.left, bnd), go(n.right, bnd))
        if isinstance(n, Sub):
            return Sub(go(n.left, bnd), go(n.right, bnd))
        if isinstance(n, Mul):
            return Mul(go(n.left, bnd), go(n.right, bnd))
        if isinstance(n, Pow):
            return Pow(go(n.base, bnd), go(n.exp, bnd))
        if isinstance(n, Select):
            arr = symbols.get(n.array)
            if arr is None:
                name = n.array
            elif isinstance(arr, Symbol):
                name = arr.name
            else:
                raise TypeError(f"array {n.array} mapped to non-array value {arr}")
            return Select(name, go(n.index, bnd))
        if isinstance(n, Ite):
            return Ite(go(n.cond, bnd), go(n.then, bnd), go(n.orelse, bnd))
        if isinstance(n, Cmp):
            return Cmp(n.op, go(n.left, bnd), go(n.right, bnd))
        if isinstance(n, And):
            return And(tuple(go(a, bnd) for a in n.args))
        if isinstance(n, Or):
            return Or(tuple(go(a, bnd) for a in n.args))
        if isinstance(n, Not):
            return Not(go(n.arg, bnd))
        if isinstance(n, Implies):
            return Implies(go(n.left, bnd), go(n.right, bnd))
        if isinstance(n, ForallBounded):
            inner = {k: v for k, v in bnd.items() if k != n.var}
            return ForallBounded(n.var, go(n.lower, bnd), go(n.upper, bnd), go(n.body, inner))
        raise TypeError(f"not a symbolic node: {n!r}")

    return go(x, bound)


def rename_param(x: Node, old: int, new: int) -> Node:
    return substitute(x, params={old: Param(new)})


# --------------------------------------------------------------------------
# concrete evaluation


class EvalError(Exception):
    """Raised when a term has no value under the given environment."""


@dataclass
class Env:
    """A concrete interpretation of symbols, arrays and parameters.

    ``arrays`` maps an array symbol either to a callable or to a dict of
    index -> value (partial models coming back from the solver).
    """

    symbols: Mapping[str, int]
    arrays: Mapping[str, Union[Callable[[int], int], Mapping[int, int]]]
    params: Mapping[int, int]
    max_range: int = 10_000

    def read(self, array: str, index: int) -> int:
        try:
            a = self.arrays[array]
        except KeyError:
            raise EvalError(f"no interpretation for array {array}") from None
        if callable(a):
            return a(index)
        try:
            return a[index]
        except KeyError:
            raise EvalError(f"{array}({index}) not in model") from None


def evaluate(x: Node, env: Env, bound: Optional[Mapping[str, int]] = None):
    """Evaluate ``x`` to an ``int`` (terms) or ``bool`` (formulas)."""
    b = dict(bound or {})

    def go(n):
        if isinstance(n, IntLit):
            return n.value
        if isinstance(n, BoolLit):
            return n.value
        if isinstance(n, Symbol):
            try:
                return env.symbols[n.name]
            except KeyError:
                raise EvalError(f"no value for symbol {n.name}") from None
        if isinstance(n, Param):
            try:
                return env.params[n.id]
            except KeyError:
                raise EvalError(f"no value for parameter k#{n.id}") from None
        if isinstance(n, BoundVar):
            try:
                return b[n.name]
            except KeyError:
                raise EvalError(f"free bound variable {n.name}") from None
        if isinstance(n, Add):
            return go(n.left) + go(n.right)
        if isinstance(n, Sub):
            return go(n.left) - go(n.right)
        if isinstance(n, Mul):
            return go(n.left) * go(n.right)
        if isinstance(n, Pow):
            e = go(n.exp)
            if e < 0:
                raise EvalError("negative exponent")
            return go(n.base) ** e
        if isinstance(n, Select):
            return env.read(n.array, go(n.index))
        if isinstance(n, Ite):
            return go(n.then) if go(n.cond) else go(n.orelse)
        if isinstance(n, Cmp):
            l, r = go(n.left), go(n.right)
            return {
                "==": l == r,
                "!=": l != r,
                "<": l < r,
                "<=": l <= r,
                ">": l > r,
                ">=": l >= r,
            }[n.op]
        if isinstance(n, And):
            return all(go(a) for a in n.args)
        if isinstance(n, Or):
            return any(go(a) for a in n.args)
        if isinstance(n, Not):
            return not go(n.arg)
        if isinstance(n, Implies):
            return (not go(n.left)) or go(n.right)
        if isinstance(n, ForallBounded):
            lo, hi = go(n.lower), go(n.upper)
            if hi - lo > env.max_range:
                raise EvalError("quantifier range too large to enumerate")
            saved = b.get(n.var)
            try:
                for t in range(lo, hi):
                    b[n.var] = t
                    if not go(n.body):
                        return False
                return True
            finally:
                if saved is None:
                    b.pop(n.var, None)
                else:
                    b[n.var] = saved
        raise TypeError(f"not a symbolic node: {n!r}")

    return go(x)


# --------------------------------------------------------------------------
# printing

_PREC_SUM, _PREC_PROD, _PREC_ATOM = 1, 2, 3


def to_str(x: Node, program: bool = False) -> str:
    """Render ``x``.

    With ``program=True`` the flowgraph surface syntax is produced
    (``v``, ``A[i]``); otherwise the symbolic one (``~v``, ``A(i)``,
    ``k#0``, ``forall t0 in [lo,hi) . body``).
    """

    def term(n, ctx):
        if isinstance(n, IntLit):
            s = str(n.value)
            return f"({s})" if n.value < 0 and ctx > _PREC_SUM else s
        if isinstance(n, Symbol):
            return n.name if program else f"~{n.name}"
        if isinstance(n, Param):
            return f"k#{n.id}"
        if isinstance(n, BoundVar):
            return n.name
        if isinstance(n, Select):
            idx = term(n.index, 0)
            return f"{n.array}[{idx}]" if program else f"{n.array}({idx})"
        if isinstance(n, Pow):
            return f"pow({term(n.base, 0)},{term(n.exp, 0)})"
        if isinstance(n, Ite):
            return f"ite({form(n.cond, 0)},{term(n.then, 0)},{term(n.orelse, 0)})"
        if isinstance(n, (Add, Sub)):
            op = "+" if isinstance(n, Add) else "-"
            s = f"{term(n.left, _PREC_SUM)} {op} {term(n.right, _PREC_SUM + 1)}"
            return f"({s})" if ctx > _PREC_SUM else s
        if isinstance(n, Mul):
            s = f"{term(n.left, _PREC_PROD)} * {term(n.right, _PREC_PROD + 1)}"
            return f"({s})" if ctx > _PREC_PROD else s
        raise TypeError(f"not a term: {n!r}")

    # formula precedences: implies/forall 0, or 1, and 2, not/atom 3
    def form(n, ctx):
        if isinstance(n, BoolLit):
            return "true" if n.value else "false"
        if isinstance(n, Cmp):
            return f"{term(n.left, 0)} {n.op} {term(n.right, 0)}"
        if isinstance(n, Not):
            inner = form(n.arg, 3)
            return f"!({inner})" if isinstance(n.arg, Cmp) else f"!{inner}"
        if isinstance(n, And):
            s = " && ".join(form(a, 3) for a in n.args)
            return f"({s})" if ctx > 2 else s
        if isinstance(n, Or):
            s = " || ".join(form(a, 2) for a in n.args)
            return f"({s})" if ctx > 1 else s
        if isinstance(n, Implies):
            s = f"{form(n.left, 1)} ==> {form(n.right, 1)}"
            return f"({s})" if ctx > 0 else s
        if isinstance(n, ForallBounded):
            s = (
                f"forall {n.var} in [{term(n.lower, 0)},{term(n.upper, 0)}) . "
                f"{form(n.body, 0)}"
            )
            return f"({s})" if ctx > 0 else s
        raise TypeError(f"not a formula: {n!r}")

    if isinstance(x, Formula):
        return form(x, 0)
    return term(x, 0)
