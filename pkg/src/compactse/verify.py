"""Bounded differential checks between classic and compact trees.

Parametric states are compared with ordinary ones by instantiating their
parameters with every valuation up to a bound. Three checks are provided:

* :func:`check_template_properties`: each template exit, instantiated at
  ``v``, agrees with running the core ``v`` times and then the exit path,
  and every feasible instance appears in a classic tree grown from the
  entry location;
* :func:`check_soundness`: every leaf of a classic tree matches an instance
  of some compact leaf;
* :func:`check_completeness`: every feasible instance of a compact leaf
  matches some classic leaf.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

from .classic import ExecTree, Limits, TreeNode, execute_path, explore
from .cycles import Cycle
from .flowgraph import Flowgraph, Path
from .simplify import unroll_quantifiers
from .smt import Status, as_solver
from .state import ProgState, SymMemory, Verdict, compose_state, instantiate, states_equivalent
from .templates import Template

log = logging.getLogger(__name__)


class VerificationAborted(RuntimeError):
    """The trees do not meet the preconditions of the checks."""


@dataclass(frozen=True)
class Matched:
    leaf: object
    counterpart: object
    valuation: tuple = ()
    # completeness matches every feasible instance of a leaf
    instances: tuple = ()


@dataclass(frozen=True)
class Unmatched:
    leaf: object
    valuation: tuple = ()


@dataclass(frozen=True)
class Inconclusive:
    leaf: object
    reason: str


LeafVerdict = Union[Matched, Unmatched, Inconclusive]

BOUND_EXHAUSTED = "bound exhausted"
SOLVER_UNKNOWN = "solver unknown"


@dataclass
class MatchReport:
    check: str
    bound: int
    verdicts: list = field(default_factory=list)
    excluded: int = 0
    skipped: int = 0
    notes: list = field(default_factory=list)

    def _count(self, cls) -> int:
        return sum(isinstance(v, cls) for v in self.verdicts)

    @property
    def matched(self) -> int:
        return self._count(Matched)

    @property
    def unmatched(self) -> int:
        return self._count(Unmatched)

    @property
    def inconclusive(self) -> int:
        return self._count(Inconclusive)

    @property
    def ok(self) -> bool:
        return self.unmatched == 0

    @property
    def all_matched(self) -> bool:
        return self.matched == len(self.verdicts)

    def inconclusive_rate(self) -> float:
        return self.inconclusive / len(self.verdicts) if self.verdicts else 0.0

    def summary(self) -> str:
        return (
            f"{self.check}: matched={self.matched} unmatched={self.unmatched} "
            f"inconclusive={self.inconclusive} excluded={self.excluded} "
            f"skipped={self.skipped} bound={self.bound}"
        )


def valuations(params: Sequence[int], bound: int, weights=None, budget: Optional[int] = None):
    """Maps ``params -> {0..bound}`` in lexicographic order.

    With ``weights`` and ``budget`` only valuations whose weighted sum stays
    within ``budget`` are produced.
    """
    params = sorted(params)
    if budget is None:
        for vals in itertools.product(range(bound + 1), repeat=len(params)):
            yield dict(zip(params, vals))
        return
    w = [weights.get(k, 0) for k in params]

    def go(i, left, acc):
        if i == len(params):
            yield dict(zip(params, acc))
            return
        for n in range(bound + 1):
            if n * w[i] > left:
                break
            yield from go(i + 1, left - n * w[i], acc + [n])

    if budget >= 0:
        yield from go(0, budget, [])


def node_valuations(node: TreeNode, bound: int, horizon: Optional[int] = None):
    """Valuations of the parameters introduced on the way to ``node``.

    With ``horizon`` only instances covering at most that many edges are
    produced.
    """
    weights = dict(node.loops)
    params = sorted(set(weights) | node.state.params)
    if horizon is None:
        return valuations(params, bound)
    return valuations(params, bound, weights, horizon - node.steps)


def _as_tuple(v: dict) -> tuple:
    return tuple(sorted(v.items()))


def unrolled_length(node: TreeNode, v: dict) -> int:
    """Number of program edges covered by ``node`` under valuation ``v``."""
    return node.steps + sum(v.get(k, 0) * n for k, n in node.loops)


def ground(state: ProgState, v: dict) -> ProgState:
    """Instantiate and expand the now constant-range quantifiers."""
    s = instantiate(state, v)
    return ProgState(s.loc, s.mem.map_values(unroll_quantifiers), unroll_quantifiers(s.pc))


def bound_binds(node: TreeNode, bound: int, horizon: Optional[int]) -> bool:
    """Whether some instance of ``node`` within ``horizon`` needs a value above ``bound``."""
    if horizon is None:
        return bool(node.loops or node.state.params)
    room = horizon - node.steps
    return any((bound + 1) * w <= room for _, w in node.loops)


def _require_no_failed(*trees: ExecTree) -> None:
    for t in trees:
        bad = t.failed_leaves()
        if bad:
            ids = " ".join(str(n.id) for n in bad[:10])
            raise VerificationAborted(f"tree of {t.program} has {len(bad)} failed leaves (nodes {ids})")


def _witnesses(*nodes: TreeNode) -> list:
    return [n.model for n in nodes if n.model is not None]


def check_soundness(T: ExecTree, Tp: ExecTree, bound: int, cfg=None) -> MatchReport:
    """Every genuine leaf of the classic tree ``T`` matches a compact leaf instance."""
    solver = as_solver(cfg)
    _require_no_failed(T, Tp)
    rep = MatchReport("soundness", bound)
    rep.excluded = sum(1 for n in T.leaves() if n.cut)
    compact_leaves = Tp.genuine_leaves()
    reach = T.horizon()
    if reach is None:
        reach = max((n.depth for n in T), default=0)
    for e in T.genuine_leaves():
        found, unknown, binding = None, False, False
        for ep in compact_leaves:
            if ep.loc != e.loc:
                continue
            binding |= bound_binds(ep, bound, reach)
            # valuations reproducing the same path length are the likely ones
            vs = sorted(node_valuations(ep, bound, reach), key=lambda v: unrolled_length(ep, v) != e.depth)
            for v in vs:
                r = states_equivalent(e.state, ground(ep.state, v), solver, witnesses=_witnesses(e))
                if r is Verdict.YES:
                    found = (ep.id, _as_tuple(v))
                    break
                unknown |= r is Verdict.UNKNOWN
            if found:
                break
        if found:
            rep.verdicts.append(Matched(e.id, found[0], found[1]))
        elif unknown:
            rep.verdicts.append(Inconclusive(e.id, SOLVER_UNKNOWN))
        elif binding or Tp.limit_tripped:
            rep.verdicts.append(Inconclusive(e.id, BOUND_EXHAUSTED))
        else:
            rep.verdicts.append(Unmatched(e.id))
    return rep


def check_completeness(Tp: ExecTree, T: ExecTree, bound: int, cfg=None) -> MatchReport:
    """Every feasible instance (up to ``bound``) of a compact leaf matches a classic leaf.

    Instances longer than the explored horizon of ``T`` cannot have a
    counterpart there and are not generated.
    """
    solver = as_solver(cfg)
    _require_no_failed(T, Tp)
    rep = MatchReport("completeness", bound)
    horizon = T.horizon()
    classic_leaves = T.genuine_leaves()
    for ep in Tp.genuine_leaves():
        instances, verdict, feasible = [], None, 0
        for v in node_valuations(ep, bound, horizon):
            s = ground(ep.state, v)
            r = solver.satisfiable(s.pc, model=True)
            if r.status is Status.UNSAT:
                rep.skipped += 1
                continue
            if r.status is Status.UNKNOWN:
                verdict = verdict or Inconclusive(ep.id, SOLVER_UNKNOWN)
                continue
            feasible += 1
            wit = [r.model] if r.model is not None else []
            length = unrolled_length(ep, v)
            cands = sorted((n for n in classic_leaves if n.loc == s.loc), key=lambda n: n.depth != length)
            hit, unknown = None, False
            for e in cands:
                q = states_equivalent(e.state, s, solver, witnesses=wit + _witnesses(e))
                if q is Verdict.YES:
                    hit = e.id
                    break
                unknown |= q is Verdict.UNKNOWN
            if hit is not None:
                instances.append((_as_tuple(v), hit))
            elif unknown:
                verdict = verdict or Inconclusive(ep.id, SOLVER_UNKNOWN)
            else:
                # every path up to the horizon is in T, so this is a real miss
                verdict = Unmatched(ep.id, _as_tuple(v))
                break
        if verdict is None and not feasible:
            # the leaf was feasible when inserted, so its instances lie
            # beyond the bound or beyond what the classic tree explored
            if not bound_binds(ep, bound, horizon):
                rep.excluded += 1
                continue
            verdict = Inconclusive(ep.id, BOUND_EXHAUSTED)
        if verdict is None:
            v0, c0 = instances[0]
            verdict = Matched(ep.id, c0, v0, tuple(instances))
        rep.verdicts.append(verdict)
    return rep


def entry_state(fg: Flowgraph, loc: str) -> ProgState:
    return ProgState(loc, SymMemory.identity(fg.int_vars, fg.array_vars))


def unrolled_path(c: Cycle, exit_path: Path, nu: int) -> Path:
    """The core taken ``nu`` times, then ``exit_path``."""
    return Path(c.entry, c.core.edges * nu + exit_path.edges)


def check_template_properties(fg: Flowgraph, c: Cycle, t: Template, nu_max: int = 5, cfg=None) -> MatchReport:
    """Check both directions of the template property from a generic entry state.

    Subjects of the report are ``(exit index, v)`` pairs, once for each
    direction: ``("L1", i, v)`` compares with the unrolled path directly,
    ``("L2", i, v)`` looks the instance up in a classic tree grown from the
    entry location.
    """
    solver = as_solver(cfg)
    rep = MatchReport("template", nu_max)
    u = entry_state(fg, t.entry)
    instances = {}
    for i, x in enumerate(t.exits):
        for nu in range(nu_max + 1):
            inst = ground(compose_state(u, x.state()), {t.param: nu})
            instances[i, nu] = inst
            concrete = execute_path(fg, unrolled_path(c, x.path, nu), u.mem, u.pc)
            r = states_equivalent(concrete, inst, solver)
            subject = ("L1", i, nu)
            if r is Verdict.YES:
                rep.verdicts.append(Matched(subject, "path", ((t.param, nu),)))
            elif r is Verdict.UNKNOWN:
                rep.verdicts.append(Inconclusive(subject, SOLVER_UNKNOWN))
            else:
                rep.verdicts.append(Unmatched(subject, ((t.param, nu),)))

    longest = max((len(x.path) for x in t.exits), default=0)
    depth = nu_max * len(c.core) + longest
    tree = explore(fg, solver, Limits(max_depth=max(depth, 1)), root=u)
    for (i, nu), inst in instances.items():
        subject = ("L2", i, nu)
        r = solver.satisfiable(inst.pc, model=True)
        if r.status is Status.UNSAT:
            rep.skipped += 1
            continue
        if r.status is Status.UNKNOWN:
            rep.verdicts.append(Inconclusive(subject, SOLVER_UNKNOWN))
            continue
        want = nu * len(c.core) + len(t.exits[i].path)
        cands = sorted((n for n in tree if n.loc == inst.loc), key=lambda n: n.depth != want)
        wit = [r.model] if r.model is not None else []
        hit, unknown = None, False
        for n in cands:
            q = states_equivalent(n.state, inst, solver, witnesses=wit + _witnesses(n))
            if q is Verdict.YES:
                hit = n.id
                break
            unknown |= q is Verdict.UNKNOWN
        if hit is not None:
            rep.verdicts.append(Matched(subject, hit, ((t.param, nu),)))
        elif unknown or tree.failed_leaves():
            rep.verdicts.append(Inconclusive(subject, SOLVER_UNKNOWN))
        else:
            rep.verdicts.append(Unmatched(subject, ((t.param, nu),)))
    return rep
