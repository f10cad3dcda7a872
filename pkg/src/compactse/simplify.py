"""Semantics-preserving normalisation of terms and formulas.

Integer terms are brought into a canonical polynomial form
``c1*m1 + c2*m2 + ... + c0`` whose monomials are products of *atoms*
(symbols, parameters, bound variables, selects, ite- and pow-terms) in a
fixed order. The template derivation rules match on this form, so
``1 + i`` and ``i + 1`` are recognised alike.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Dict, Tuple

from .symexpr import (
    FALSE,
    NEGATED_OP,
    TRUE,
    Add,
    And,
    BoolLit,
    BoundVar,
    Cmp,
    ForallBounded,
    Formula,
    Implies,
    IntLit,
    Ite,
    Mul,
    Node,
    Not,
    Or,
    Param,
    Pow,
    Select,
    Sub,
    SymExpr,
    Symbol,
    to_str,
)

Monomial = Tuple[SymExpr, ...]
Poly = Dict[Monomial, int]

_ATOM_RANK = {Symbol: 0, Select: 1, Param: 2, BoundVar: 3, Ite: 4, Pow: 5}


def _atom_key(a: SymExpr):
    return (_ATOM_RANK[type(a)], to_str(a))


def _mono_key(m: Monomial):
    return (len(m), tuple(_atom_key(a) for a in m))


def _padd(p: Poly, q: Poly, scale: int = 1) -> Poly:
    out = dict(p)
    for m, c in q.items():
        v = out.get(m, 0) + scale * c
        if v:
            out[m] = v
        else:
            out.pop(m, None)
    return out


def _pmul(p: Poly, q: Poly) -> Poly:
    out: Poly = {}
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            m = tuple(sorted(m1 + m2, key=_atom_key))
            v = out.get(m, 0) + c1 * c2
            if v:
                out[m] = v
            else:
                out.pop(m, None)
    return out


def constant_of(p: Poly):
    """The integer value of ``p`` if it has no non-constant monomial."""
    if all(m == () for m in p):
        return p.get((), 0)
    return None


@lru_cache(maxsize=200_000)
def poly(e: SymExpr) -> Poly:
    """Polynomial view of a term (the returned dict must not be mutated)."""
    if isinstance(e, IntLit):
        return {(): e.value} if e.value else {}
    if isinstance(e, (Symbol, Param, BoundVar)):
        return {(e,): 1}
    if isinstance(e, Add):
        return _padd(poly(e.left), poly(e.right))
    if isinstance(e, Sub):
        return _padd(poly(e.left), poly(e.right), -1)
    if isinstance(e, Mul):
        return _pmul(poly(e.left), poly(e.right))
    if isinstance(e, Select):
        return {(Select(e.array, simplify(e.index)),): 1}
    if isinstance(e, Pow):
        base, exp = simplify(e.base), simplify(e.exp)
        if isinstance(exp, IntLit) and exp.value >= 0:
            if isinstance(base, IntLit):
                return poly(IntLit(base.value**exp.value))
            if exp.value == 0:
                return {(): 1}
            if exp.value == 1:
                return poly(base)
        return {(Pow(base, exp),): 1}
    if isinstance(e, Ite):
        c = simplify(e.cond)
        if c == TRUE:
            return poly(e.then)
        if c == FALSE:
            return poly(e.orelse)
        a, b = simplify(e.then), simplify(e.orelse)
        if a == b:
            return poly(a)
        return {(Ite(c, a, b),): 1}
    raise TypeError(f"not a term: {e!r}")


def _mono_expr(m: Monomial) -> SymExpr:
    out = m[0]
    for a in m[1:]:
        out = Mul(out, a)
    return out


def from_poly(p: Poly) -> SymExpr:
    terms = sorted((m for m in p if m != ()), key=_mono_key)
    const = p.get((), 0)
    out = None
    for m in terms:
        c = p[m]
        body = _mono_expr(m)
        if out is None:
            out = body if c == 1 else Mul(IntLit(c), body)
        elif c > 0:
            out = Add(out, body if c == 1 else Mul(IntLit(c), body))
        else:
            out = Sub(out, body if c == -1 else Mul(IntLit(-c), body))
    if out is None:
        return IntLit(const)
    if const > 0:
        return Add(out, IntLit(const))
    if const < 0:
        return Sub(out, IntLit(-const))
    return out


_CMP = {
    "==": lambda d: d == 0,
    "!=": lambda d: d != 0,
    "<": lambda d: d < 0,
    "<=": lambda d: d <= 0,
    ">": lambda d: d > 0,
    ">=": lambda d: d >= 0,
}


_FLIP = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "==": "=="}


@lru_cache(maxsize=200_000)
def _bounds(c: Cmp):
    """Read ``c`` as ``lo <= P <= hi`` for a sign-normalised linear part ``P``."""
    if c.op == "!=":
        return None
    d = _padd(poly(c.left), poly(c.right), -1)
    k = d.pop((), 0)
    if not d:
        return None
    op = c.op
    lead = min(d, key=_mono_key)
    if d[lead] < 0:
        d = {m: -v for m, v in d.items()}
        k, op = -k, _FLIP[op]
    # P + k op 0
    lo = hi = None
    if op == "<":
        hi = -k - 1
    elif op == "<=":
        hi = -k
    elif op == ">":
        lo = -k + 1
    elif op == ">=":
        lo = -k
    else:
        lo = hi = -k
    return frozenset(d.items()), lo, hi


def _drop_implied(args: list) -> list:
    """Remove comparisons implied by a stronger one over the same linear term.

    Only original conjuncts are kept, so nothing new is introduced; a pair of
    contradictory bounds collapses the conjunction to ``[FALSE]``.
    """
    groups: dict = {}
    for i, a in enumerate(args):
        if isinstance(a, Cmp):
            b = _bounds(a)
            if b is not None:
                groups.setdefault(b[0], []).append((i, b[1], b[2]))
    drop = set()
    for items in groups.values():
        if len(items) < 2:
            continue
        lows = [(lo, -i) for i, lo, _ in items if lo is not None]
        highs = [(-hi, -i) for i, _, hi in items if hi is not None]
        lo = max(lows) if lows else None
        # on a tie prefer the conjunct already kept for the lower bound
        highs = [(h, -i == (-lo[1] if lo else None), i) for h, i in highs]
        hi = max(highs) if highs else None
        if lo is not None and hi is not None and lo[0] > -hi[0]:
            return [FALSE]
        keep = {-lo[1]} if lo else set()
        if hi:
            keep.add(-hi[2])
        drop |= {i for i, _, _ in items if i not in keep}
    if not drop:
        return args
    return [a for i, a in enumerate(args) if i not in drop]


@lru_cache(maxsize=200_000)
def simplify(x: Node) -> Node:
    """Return the canonical form of ``x``; idempotent."""
    if isinstance(x, SymExpr):
        return from_poly(poly(x))
    if isinstance(x, BoolLit):
        return x
    if isinstance(x, Cmp):
        pl, pr = poly(x.left), poly(x.right)
        d = constant_of(_padd(pl, pr, -1))
        if d is not None:
            return BoolLit(_CMP[x.op](d))
        return Cmp(x.op, from_poly(pl), from_poly(pr))
    if isinstance(x, Not):
        a = simplify(x.arg)
        if isinstance(a, BoolLit):
            return BoolLit(not a.value)
        if isinstance(a, Not):
            return a.arg
        if isinstance(a, Cmp):
            return Cmp(NEGATED_OP[a.op], a.left, a.right)
        return Not(a)
    if isinstance(x, (And, Or)):
        unit, zero = (TRUE, FALSE) if isinstance(x, And) else (FALSE, TRUE)
        out, seen = [], set()
        for a in x.args:
            a = simplify(a)
            parts = a.args if type(a) is type(x) else (a,)
            for p in parts:
                if p == zero:
                    return zero
                if p != unit and p not in seen:
                    seen.add(p)
                    out.append(p)
        if isinstance(x, And) and len(out) > 1:
            out = _drop_implied(out)
            if out == [FALSE]:
                return FALSE
        if not out:
            return unit
        if len(out) == 1:
            return out[0]
        return type(x)(tuple(out))
    if isinstance(x, Implies):
        a, b = simplify(x.left), simplify(x.right)
        if a == TRUE:
            return b
        if a == FALSE or b == TRUE:
            return TRUE
        if b == FALSE:
            return simplify(Not(a))
        return Implies(a, b)
    if isinstance(x, ForallBounded):
        lo, hi = simplify(x.lower), simplify(x.upper)
        width = constant_of(_padd(poly(hi), poly(lo), -1))
        if width is not None and width <= 0:
            return TRUE
        body = simplify(x.body)
        if body == TRUE:
            return TRUE
        return ForallBounded(x.var, lo, hi, body)
    raise TypeError(f"not a symbolic node: {x!r}")


def linear_form(e: SymExpr) -> Poly:
    """Public alias of the polynomial view used by pattern matchers."""
    return dict(poly(e))


def unroll_quantifiers(x: Node, max_width: int = 64) -> Node:
    """Replace bounded quantifiers with constant ranges by explicit conjunctions.

    Semantics-preserving; used to hand quantifier-free queries to the solver
    once parameters have been instantiated.
    """
    from .symexpr import substitute

    def go(n):
        if isinstance(n, ForallBounded):
            lo, hi = simplify(n.lower), simplify(n.upper)
            body = go(n.body)
            if isinstance(lo, IntLit) and isinstance(hi, IntLit) and hi.value - lo.value <= max_width:
                parts = [
                    substitute(body, bound={n.var: IntLit(t)})
                    for t in range(lo.value, hi.value)
                ]
                return simplify(And(tuple(parts))) if parts else TRUE
            return ForallBounded(n.var, lo, hi, body)
        if isinstance(n, (And, Or)):
            return type(n)(tuple(go(a) for a in n.args))
        if isinstance(n, Not):
            return Not(go(n.arg))
        if isinstance(n, Implies):
            return Implies(go(n.left), go(n.right))
        return n

    return simplify(go(x))
