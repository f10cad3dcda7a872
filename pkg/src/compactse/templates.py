"""Templates: closed-form summaries of any number of iterations of a cycle.

For a cycle with entry ``e`` the template holds, per feasible exit edge, a
state parametrised by an iteration count ``k``: the memory and path
condition reached after ``k`` runs around the core followed by the way out.

Integer variables get a closed form by three rules, tried in order:

* ``a -> ~a + c``  gives ``~a + k*c`` (unchanged variables are ``c = 0``),
* ``a -> ~a * c``  gives ``~a * pow(c, k)``,
* ``a -> g`` where every symbol of ``g`` already has a closed form gives
  ``ite(k > 0, g evaluated after k-1 iterations, ~a)``.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Optional, Union

from .classic import execute_path
from .cycles import Cycle, enumerate_cycles, exit_prefix
from .flowgraph import Edge, Flowgraph, Path
from .simplify import poly, simplify
from .smt import Status, as_solver
from .state import ProgState, SymMemory, compose_mem, subst_symbols
from .symexpr import (
    TRUE,
    And,
    BoundVar,
    Cmp,
    ForallBounded,
    Formula,
    IntLit,
    Ite,
    Mul,
    Param,
    Pow,
    Symbol,
    arrays_of,
    fresh_bound_name,
    rename_param,
    substitute,
    symbols_of,
    to_str,
)

log = logging.getLogger(__name__)


class FailureReason(enum.Enum):
    CORE_INFEASIBLE_OR_UNKNOWN = "core infeasible or unknown"
    MEMORY_DERIVATION_INCOMPLETE = "memory derivation incomplete"
    EXIT_FEASIBILITY_UNKNOWN = "exit feasibility unknown"


@dataclass(frozen=True)
class TemplateFailure:
    reason: FailureReason
    cycle: Cycle
    variables: frozenset = frozenset()
    exit: Optional[Edge] = None

    def __str__(self):
        extra = ""
        if self.variables:
            extra = " (" + " ".join(sorted(self.variables)) + ")"
        if self.exit is not None:
            extra = f" ({self.exit.src}->{self.exit.dst})"
        return f"{self.cycle.core_string()}: {self.reason.value}{extra}"


@dataclass(frozen=True)
class TemplateExit:
    loc: str
    mem: SymMemory
    pc: Formula
    edge: Edge
    path: Path

    def state(self) -> ProgState:
        return ProgState(self.loc, self.mem, self.pc)


@dataclass(frozen=True)
class Template:
    entry: str
    param: int
    exits: tuple
    cycle: Cycle
    theta_star: SymMemory = field(repr=False)
    phi_star: Formula = field(repr=False)

    @property
    def applicable(self) -> bool:
        return bool(self.exits)

    @property
    def core_length(self) -> int:
        return len(self.cycle.core)

    def renamed(self, new: int) -> "Template":
        """The same template over parameter ``new`` instead of its own."""
        if new == self.param:
            return self
        ren = lambda x: rename_param(x, self.param, new)  # noqa: E731
        exits = tuple(
            TemplateExit(x.loc, x.mem.map_values(ren), ren(x.pc), x.edge, x.path) for x in self.exits
        )
        return Template(self.entry, new, exits, self.cycle, self.theta_star.map_values(ren), ren(self.phi_star))

    def label(self, i: int, param: Optional[int] = None) -> str:
        """Render exit ``i`` as the paths it covers, e.g. ``(cdb)^k#0 ce``."""
        k = self.param if param is None else param
        inner = "".join(self.cycle.core.locations[1:])
        tail = "".join(self.exits[i].path.locations[1:])
        return f"({inner})^k#{k} {tail}"

    def __str__(self):
        lines = [f"template at {self.entry} from cycle {self.cycle.core_string()} (param k#{self.param})"]
        for v, e in self.theta_star.items():
            lines.append(f"  {v} -> {to_str(e)}")
        for i, x in enumerate(self.exits):
            lines.append(f"  exit {self.label(i)} to {x.loc}: {to_str(x.pc)}")
        return "\n".join(lines)


# --------------------------------------------------------------------------
# closed forms


def _progression(e, a: str):
    """Match ``~a + c`` (kind ``"add"``) or ``~a * c`` (kind ``"mul"``)."""
    p = poly(e)
    me = (Symbol(a),)
    rest = {m: c for m, c in p.items() if m != ()}
    if rest == {me: 1}:
        return "add", p.get((), 0)
    if set(rest) == {me} and () not in p:
        return "mul", rest[me]
    return None


def derive_parametric_memory(theta: SymMemory, fg: Flowgraph, kappa: int = 0) -> Union[SymMemory, frozenset]:
    """Closed form of ``kappa`` iterations, or the set of variables left open."""
    k = Param(kappa)
    star: dict = {a: Symbol(a) for a in fg.array_vars}
    changed = True
    while changed:
        changed = False
        for a in fg.int_vars:
            if a in star:
                continue
            g = theta[a]
            m = _progression(g, a)
            if m is not None and m[0] == "add":
                star[a] = simplify(Symbol(a) + k * IntLit(m[1]))
            elif m is not None:
                star[a] = simplify(Mul(Symbol(a), Pow(IntLit(m[1]), k)))
            elif (symbols_of(g) | arrays_of(g)) <= set(star):
                prev = {b: substitute(v, params={kappa: Param(kappa) - 1}) for b, v in star.items()}
                star[a] = simplify(Ite(Cmp(">", k, IntLit(0)), subst_symbols(prev, g), Symbol(a)))
            else:
                continue
            changed = True
    missing = frozenset(a for a in fg.int_vars if a not in star)
    if missing:
        return missing
    return SymMemory({v: star[v] for v in fg.variables}, fg.array_vars)


def at_iteration(theta_star: SymMemory, kappa: int, value) -> SymMemory:
    """``theta_star`` with its parameter replaced by a term."""
    return theta_star.map_values(lambda e: substitute(e, params={kappa: value}))


def build_parametric_pc(theta_star: SymMemory, phi: Formula, kappa: int = 0) -> Formula:
    """``k >= 0 and forall t in [0, k) . theta_star[t]<phi>``."""
    t = fresh_bound_name(phi, *theta_star.values())
    body = subst_symbols(at_iteration(theta_star, kappa, BoundVar(t)), phi)
    k = Param(kappa)
    return simplify(And((Cmp(">=", k, IntLit(0)), ForallBounded(t, IntLit(0), k, body))))


def compute_template(fg: Flowgraph, c: Cycle, solver=None, param: int = 0) -> Union[Template, TemplateFailure]:
    solver = as_solver(solver)
    one = execute_path(fg, c.core)
    if solver.satisfiable(one.pc).status is not Status.SAT:
        return TemplateFailure(FailureReason.CORE_INFEASIBLE_OR_UNKNOWN, c)
    star = derive_parametric_memory(one.mem, fg, param)
    if not isinstance(star, SymMemory):
        return TemplateFailure(FailureReason.MEMORY_DERIVATION_INCOMPLETE, c, variables=star)
    phi_star = build_parametric_pc(star, one.pc, param)
    exits = []
    for x in c.exits:
        rho = exit_prefix(c, x)
        out = execute_path(fg, rho)
        status = solver.satisfiable(out.pc).status
        if status is Status.UNKNOWN:
            return TemplateFailure(FailureReason.EXIT_FEASIBILITY_UNKNOWN, c, exit=x)
        if status is Status.SAT:
            mem = compose_mem(star, out.mem)
            pc = simplify(And((phi_star, subst_symbols(star, out.pc))))
            exits.append(TemplateExit(x.dst, mem, pc, x, rho))
    return Template(c.entry, param, tuple(exits), c, star, phi_star)


@dataclass
class TemplateSet:
    cycles: list
    templates: list
    failures: list
    truncated: bool = False

    def pool(self) -> list:
        """Templates worth applying: those with at least one exit."""
        return [t for t in self.templates if t.applicable]


def compute_templates(fg: Flowgraph, solver=None, cap: int = 1000) -> TemplateSet:
    """Enumerate cycles and compute a template for each; template ``i`` uses ``k#i``."""
    solver = as_solver(solver)
    cycles = enumerate_cycles(fg, cap)
    ok, bad = [], []
    for c in cycles:
        r = compute_template(fg, c, solver, param=len(ok))
        if isinstance(r, Template):
            ok.append(r)
        else:
            log.info("no template for %s", r)
            bad.append(r)
    return TemplateSet(list(cycles), ok, bad, cycles.truncated)
