"""Symbolic memories, program states, composition and instantiation."""

from __future__ import annotations

import enum
import random
from collections.abc import Mapping
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence, Union

from .simplify import simplify
from .symexpr import (
    TRUE,
    And,
    Cmp,
    Env,
    EvalError,
    Formula,
    IntLit,
    Node,
    Not,
    Symbol,
    SymExpr,
    arrays_of,
    evaluate,
    iff,
    params_of,
    substitute,
    symbols_of,
)


class MismatchedUniverse(ValueError):
    pass


class MissingParameter(KeyError):
    pass


class SymMemory(Mapping):
    """Immutable total map from program variables to symbolic values."""

    __slots__ = ("_d", "_arrays", "_hash")

    def __init__(self, values: Mapping[str, SymExpr], arrays: Iterable[str] = ()):
        self._d = dict(values)
        self._arrays = frozenset(arrays)
        self._hash = None
        for a in self._arrays:
            if not isinstance(self._d.get(a), Symbol):
                raise ValueError(f"array variable {a} must map to an array symbol")

    @classmethod
    def identity(cls, int_vars: Iterable[str], array_vars: Iterable[str] = ()) -> "SymMemory":
        int_vars, array_vars = list(int_vars), list(array_vars)
        return cls({v: Symbol(v) for v in int_vars + array_vars}, array_vars)

    @property
    def arrays(self) -> frozenset:
        return self._arrays

    def __getitem__(self, k: str) -> SymExpr:
        return self._d[k]

    def __iter__(self) -> Iterator[str]:
        return iter(self._d)

    def __len__(self) -> int:
        return len(self._d)

    def __eq__(self, other):
        if not isinstance(other, SymMemory):
            return NotImplemented
        return self._d == other._d and self._arrays == other._arrays

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((frozenset(self._d.items()), self._arrays))
        return self._hash

    def __repr__(self):
        inner = ", ".join(f"{k}: {v}" for k, v in self._d.items())
        return f"SymMemory({{{inner}}})"

    def replace(self, **updates: SymExpr) -> "SymMemory":
        d = dict(self._d)
        d.update(updates)
        return SymMemory(d, self._arrays)

    def map_values(self, fn) -> "SymMemory":
        return SymMemory({k: (v if k in self._arrays else fn(v)) for k, v in self._d.items()}, self._arrays)

    def params(self) -> set[int]:
        out = set()
        for v in self._d.values():
            out |= params_of(v)
        return out


@dataclass(frozen=True)
class ProgState:
    loc: str
    mem: SymMemory
    pc: Formula = TRUE

    @property
    def params(self) -> set[int]:
        return self.mem.params() | params_of(self.pc)


Valuation = Mapping[int, int]


def subst_symbols(mem: Mapping[str, SymExpr], target: Node) -> Node:
    """``mem<target>``: replace every symbol of ``target`` by its value in ``mem``."""
    return substitute(target, symbols=mem)


def compose_mem(m1: SymMemory, m2: SymMemory) -> SymMemory:
    """``(m1 ⋄ m2)(a) = m1<m2(a)>``: the effect of ``m1`` followed by ``m2``."""
    if set(m1) != set(m2):
        raise MismatchedUniverse(f"{sorted(m1)} vs {sorted(m2)}")
    return SymMemory({a: simplify(subst_symbols(m1, m2[a])) for a in m2}, m2.arrays)


def compose_state(s1: ProgState, s2: ProgState) -> ProgState:
    mem = compose_mem(s1.mem, s2.mem)
    pc = simplify(And((s1.pc, subst_symbols(s1.mem, s2.pc))))
    return ProgState(s2.loc, mem, pc)


def _check_valuation(v: Valuation, needed: set[int]) -> None:
    missing = needed - set(v)
    if missing:
        raise MissingParameter(", ".join(f"k#{k}" for k in sorted(missing)))
    for k, n in v.items():
        if n < 0:
            raise ValueError(f"valuation of k#{k} is negative")


def instantiate(x, v: Valuation):
    """Replace every parameter of ``x`` by its value under ``v``."""
    lits = {k: IntLit(n) for k, n in v.items()}
    if isinstance(x, ProgState):
        _check_valuation(v, x.params)
        return ProgState(x.loc, instantiate(x.mem, v), instantiate(x.pc, v))
    if isinstance(x, SymMemory):
        _check_valuation(v, x.params())
        return x.map_values(lambda e: simplify(substitute(e, params=lits)))
    _check_valuation(v, params_of(x))
    return simplify(substitute(x, params=lits))


# --------------------------------------------------------------------------
# equivalence


class Verdict(enum.Enum):
    YES = "yes"
    NO = "no"
    UNKNOWN = "unknown"


def random_env(names: Iterable[str], arrays: Iterable[str], rng: random.Random, span: int = 6) -> Env:
    """A random interpretation; arrays become random functions memoised per index."""
    syms = {n: rng.randint(-span, span) for n in names}
    arrs = {}
    for a in arrays:
        table: dict[int, int] = {}

        def read(i, table=table):
            if i not in table:
                table[i] = rng.randint(-span, span)
            return table[i]

        arrs[a] = read
    return Env(syms, arrs, {}, max_range=200)


def _disagree(s1: ProgState, s2: ProgState, env: Env) -> bool:
    try:
        for a in s1.mem:
            if a in s1.mem.arrays:
                continue
            if evaluate(s1.mem[a], env) != evaluate(s2.mem[a], env):
                return True
        return evaluate(s1.pc, env) != evaluate(s2.pc, env)
    except EvalError:
        return False


def states_equivalent(
    s1: ProgState,
    s2: ProgState,
    solver,
    witnesses: Sequence[Env] = (),
    samples: int = 8,
    seed: int = 0,
) -> Verdict:
    """Decide ``s1 ≡ s2`` for parameter-free states.

    Concrete environments (``witnesses`` plus a few random ones) are tried
    first: any environment under which the states differ refutes the
    equivalence outright. Remaining obligations go to ``solver`` as validity
    queries.
    """
    if s1.loc != s2.loc:
        return Verdict.NO
    if set(s1.mem) != set(s2.mem):
        raise MismatchedUniverse(f"{sorted(s1.mem)} vs {sorted(s2.mem)}")
    if s1.params or s2.params:
        raise ValueError("states_equivalent expects parameter-free states")
    for a in s1.mem.arrays:
        if s1.mem[a] != s2.mem[a]:
            return Verdict.NO

    envs = list(witnesses)
    if samples:
        names, arrs = set(), set()
        for s in (s1, s2):
            names |= symbols_of(s.pc)
            arrs |= set(s.mem.arrays) | arrays_of(s.pc)
            for a, e in s.mem.items():
                names |= symbols_of(e)
                arrs |= arrays_of(e)
        rng = random.Random(seed)
        envs += [random_env(sorted(names), sorted(arrs), rng) for _ in range(samples)]
    for env in envs:
        if _disagree(s1, s2, env):
            return Verdict.NO

    unknown = False
    obligations = [
        simplify(Not(Cmp("==", s1.mem[a], s2.mem[a])))
        for a in s1.mem
        if a not in s1.mem.arrays and s1.mem[a] != s2.mem[a]
    ]
    if s1.pc != s2.pc:
        obligations.append(simplify(Not(iff(s1.pc, s2.pc))))
    from .smt import Status

    for q in obligations:
        r = solver.satisfiable(q)
        if r.status is Status.SAT:
            return Verdict.NO
        if r.status is Status.UNKNOWN:
            unknown = True
    return Verdict.UNKNOWN if unknown else Verdict.YES
