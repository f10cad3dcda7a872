"""Compact symbolic execution: the tree driver with template application.

Whenever a dequeued state sits at the entry of a selected template, its
successors are the compositions of the state with every exit of the
template (over a fresh parameter) instead of the classic one-edge steps.
"""

from __future__ import annotations

import itertools
import random
import threading
from dataclasses import dataclass
from typing import Optional, Sequence, Union

from .classic import Candidate, ExecTree, Limits, TreeNode, explore
from .flowgraph import Flowgraph
from .state import compose_state
from .templates import Template


class Never:
    """Never apply a template; compact execution degenerates to classic."""

    def __repr__(self):
        return "Never()"


class First:
    """Apply the first matching template of the pool."""

    def __repr__(self):
        return "First()"


@dataclass(frozen=True)
class Random:
    """Pick uniformly among matching templates, reproducibly from ``seed``."""

    seed: int = 0


SelectionStrategy = Union[Never, First, Random]


def strategy_from_name(name: str, seed: int = 0) -> SelectionStrategy:
    name = name.lower()
    if name == "never":
        return Never()
    if name == "first":
        return First()
    if name == "random":
        return Random(seed)
    raise ValueError(f"unknown strategy {name!r}")


class ParamSupply:
    """Thread-safe source of parameter ids never handed out before."""

    def __init__(self, start: int = 0):
        self._it = itertools.count(start)
        self._lock = threading.Lock()

    def __call__(self) -> int:
        with self._lock:
            return next(self._it)


_global_params = ParamSupply()


def fresh_param() -> int:
    return _global_params()


def choose_template(
    loc: str,
    pool: Sequence[Template],
    strat: SelectionStrategy,
    rng: Optional[random.Random] = None,
) -> Optional[int]:
    """Index into ``pool`` of the template to apply at ``loc``, if any."""
    if isinstance(strat, Never):
        return None
    matches = [i for i, t in enumerate(pool) if t.entry == loc and t.applicable]
    if not matches:
        return None
    if isinstance(strat, First):
        return matches[0]
    if rng is None:
        rng = random.Random(strat.seed)
    return matches[rng.randrange(len(matches))]


def run_compact(
    fg: Flowgraph,
    pool: Sequence[Template],
    strat: SelectionStrategy = First(),
    cfg=None,
    lim: Optional[Limits] = None,
) -> ExecTree:
    """Breadth-first compact symbolic execution of ``fg`` using ``pool``.

    Parameters are numbered from 0 within each run, so the tree does not
    depend on what ran before.
    """
    rng = random.Random(strat.seed) if isinstance(strat, Random) else None
    params = ParamSupply()

    def expand(node: TreeNode):
        i = choose_template(node.loc, pool, strat, rng)
        if i is None:
            return None
        k = params()
        t = pool[i].renamed(k)
        out = []
        for j, x in enumerate(t.exits):
            out.append(
                Candidate(
                    compose_state(node.state, x.state()),
                    template=i,
                    param=k,
                    label=t.label(j),
                    steps=len(x.path),
                    loop=(k, t.core_length),
                )
            )
        return out

    return explore(fg, cfg, lim, expand=expand)
