"""Classic symbolic execution and the breadth-first tree driver.

The driver :func:`explore` is shared with compact execution: it takes an
optional ``expand`` hook which may replace the classic successor step of a
node (template application), and otherwise behaves exactly like the plain
algorithm. Successors proven SAT are queued, UNKNOWN ones become failed
leaves and UNSAT ones are dropped.
"""

from __future__ import annotations

import enum
import logging
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .flowgraph import Assign, Edge, Flowgraph, Path, successors
from .simplify import simplify
from .smt import Solver, Status, as_solver
from .state import ProgState, SymMemory, subst_symbols
from .symexpr import TRUE, And, Env, Formula

log = logging.getLogger(__name__)


class NodeKind(enum.Enum):
    NORMAL = "normal"
    FAILED = "failed"
    TEMPLATE = "template"


@dataclass(frozen=True)
class Limits:
    max_nodes: int = 100_000
    max_depth: int = 64
    seconds: Optional[float] = None

    def __post_init__(self):
        if self.max_nodes <= 0 or self.max_depth <= 0:
            raise ValueError("limits must be positive")
        if self.seconds is not None and self.seconds <= 0:
            raise ValueError("time budget must be positive")


@dataclass
class TreeNode:
    id: int
    state: ProgState
    kind: NodeKind = NodeKind.NORMAL
    parent: Optional[int] = None
    depth: int = 0
    edge: Optional[Edge] = None
    template: Optional[int] = None
    param: Optional[int] = None
    label: str = ""
    cut: bool = False
    # length of the concrete path this node stands for: steps + sum(k * core)
    steps: int = 0
    loops: tuple = ()
    model: Optional[Env] = field(default=None, repr=False, compare=False)

    @property
    def loc(self) -> str:
        return self.state.loc


@dataclass
class ExecTree:
    program: str
    nodes: list = field(default_factory=list)
    children: dict = field(default_factory=dict)
    limits_hit: set = field(default_factory=set)
    limits: Optional[Limits] = None
    smt_unknown: int = 0
    templates_applied: int = 0

    @property
    def root(self) -> TreeNode:
        return self.nodes[0]

    @property
    def limit_tripped(self) -> bool:
        return bool(self.limits_hit)

    def __len__(self):
        return len(self.nodes)

    def __iter__(self):
        return iter(self.nodes)

    def __getitem__(self, i: int) -> TreeNode:
        return self.nodes[i]

    def add(self, node: TreeNode) -> TreeNode:
        self.nodes.append(node)
        self.children[node.id] = []
        if node.parent is not None:
            self.children[node.parent].append(node.id)
        return node

    def leaves(self) -> list:
        return [n for n in self.nodes if not self.children[n.id]]

    def genuine_leaves(self) -> list:
        """Leaves that end a path for real: not cut by a limit, not failed."""
        return [n for n in self.leaves() if not n.cut and n.kind is not NodeKind.FAILED]

    def failed_leaves(self) -> list:
        return [n for n in self.nodes if n.kind is NodeKind.FAILED]

    def cut_nodes(self) -> list:
        return [n for n in self.nodes if n.cut]

    def path_to(self, i: int) -> list:
        out = []
        node = self.nodes[i]
        while node is not None:
            out.append(node)
            node = self.nodes[node.parent] if node.parent is not None else None
        return out[::-1]

    def locations_reached(self) -> set:
        return {n.loc for n in self.nodes}

    def horizon(self) -> Optional[int]:
        """Longest path length known to be fully explored, ``None`` if all are."""
        if not self.limits_hit:
            return None
        if self.limits_hit == {"depth"}:
            return self.limits.max_depth
        return min((n.depth for n in self.nodes if n.cut), default=0)


# --------------------------------------------------------------------------
# straight-line execution


def execute_instr(instr, mem: SymMemory, pc: Formula):
    if isinstance(instr, Assign):
        return mem.replace(**{instr.var: simplify(subst_symbols(mem, instr.rhs))}), pc
    cond = simplify(subst_symbols(mem, instr.cond))
    return mem, simplify(And((pc, cond)))


def execute_edge(edge: Edge, mem: SymMemory, pc: Formula):
    for instr in edge.body:
        mem, pc = execute_instr(instr, mem, pc)
    return mem, pc


def execute_path(fg: Flowgraph, rho: Path, start_mem: Optional[SymMemory] = None, start_pc: Formula = TRUE) -> ProgState:
    """Run the instructions along ``rho``; no feasibility checks."""
    mem = start_mem if start_mem is not None else SymMemory.identity(fg.int_vars, fg.array_vars)
    pc = start_pc
    for e in rho.edges:
        mem, pc = execute_edge(e, mem, pc)
    return ProgState(rho.end, mem, pc)


def initial_state(fg: Flowgraph) -> ProgState:
    return ProgState(fg.start, SymMemory.identity(fg.int_vars, fg.array_vars), TRUE)


def compute_classic_successors(fg: Flowgraph, s: ProgState) -> list:
    """One unfiltered candidate per outgoing edge, in declaration order."""
    out = []
    for e in successors(fg, s.loc):
        mem, pc = execute_edge(e, s.mem, s.pc)
        out.append(ProgState(e.dst, mem, pc))
    return out


# --------------------------------------------------------------------------
# the driver


@dataclass
class Candidate:
    state: ProgState
    edge: Optional[Edge] = None
    template: Optional[int] = None
    param: Optional[int] = None
    label: str = ""
    steps: int = 1
    loop: Optional[tuple] = None


Expand = Callable[[TreeNode], Optional[Sequence[Candidate]]]


def _classic_candidates(fg: Flowgraph, node: TreeNode) -> list:
    out = []
    for e in successors(fg, node.loc):
        mem, pc = execute_edge(e, node.state.mem, node.state.pc)
        out.append(Candidate(ProgState(e.dst, mem, pc), edge=e, label=e.dst))
    return out


def _decide(solver: Solver, parent: TreeNode, cand: Candidate):
    if cand.state.pc == parent.state.pc:
        return Status.SAT, parent.model
    hints = (parent.model,) if parent.model is not None else ()
    r = solver.satisfiable(cand.state.pc, model=True, hints=hints)
    return r.status, r.model


def explore(
    fg: Flowgraph,
    solver=None,
    limits: Optional[Limits] = None,
    expand: Optional[Expand] = None,
    root: Optional[ProgState] = None,
) -> ExecTree:
    solver = as_solver(solver)
    limits = limits or Limits()
    unknown0 = solver.stats.unknown
    t0 = time.monotonic()
    tree = ExecTree(fg.name, limits=limits)
    tree.add(TreeNode(0, root or initial_state(fg), label=(root or initial_state(fg)).loc))
    queue = deque([0])

    def stop(reason: str, pending):
        tree.limits_hit.add(reason)
        for i in pending:
            tree.nodes[i].cut = True

    while queue:
        if limits.seconds is not None and time.monotonic() - t0 > limits.seconds:
            stop("time", queue)
            break
        node = tree.nodes[queue.popleft()]
        if fg.is_terminal(node.loc):
            continue
        cands = expand(node) if expand is not None else None
        if cands is None:
            cands = _classic_candidates(fg, node)
        if not cands:
            continue
        if node.depth >= limits.max_depth:
            stop("depth", [node.id])
            continue
        decided = [(c, *_decide(solver, node, c)) for c in cands]
        keep = [d for d in decided if d[1] is not Status.UNSAT]
        if len(tree.nodes) + len(keep) > limits.max_nodes:
            stop("nodes", [node.id, *queue])
            break
        if any(c.template is not None for c, _, _ in keep):
            tree.templates_applied += 1
        # SAT successors first, then the undecided ones as failed leaves
        for want, kind in ((Status.SAT, None), (Status.UNKNOWN, NodeKind.FAILED)):
            for c, status, model in keep:
                if status is not want:
                    continue
                k = kind or (NodeKind.TEMPLATE if c.template is not None else NodeKind.NORMAL)
                child = tree.add(
                    TreeNode(
                        len(tree.nodes),
                        c.state,
                        kind=k,
                        parent=node.id,
                        depth=node.depth + 1,
                        edge=c.edge,
                        template=c.template,
                        param=c.param,
                        label=c.label,
                        steps=node.steps + c.steps,
                        loops=node.loops + ((c.loop,) if c.loop else ()),
                        model=model,
                    )
                )
                if k is not NodeKind.FAILED:
                    queue.append(child.id)
    tree.smt_unknown = solver.stats.unknown - unknown0
    log.info(
        "%s: %d nodes, %d failed leaves, limits hit: %s",
        fg.name,
        len(tree.nodes),
        len(tree.failed_leaves()),
        ",".join(sorted(tree.limits_hit)) or "none",
    )
    return tree


def run_classic(fg: Flowgraph, cfg=None, lim: Optional[Limits] = None) -> ExecTree:
    """Breadth-first classic symbolic execution of ``fg``."""
    return explore(fg, cfg, lim)
