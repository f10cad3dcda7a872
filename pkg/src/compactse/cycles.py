"""Cycles of a flowgraph: a simple cyclic core, an entry location and exits.

A cycle is a closed path ``e w e`` whose locations ``w e`` are pairwise
distinct, entered through an edge ``(u, e)`` such that ``u e`` is not a suffix of
the core, i.e. ``u`` is not the location the core closes from. Its exits are all edges that start on the core but
are not part of it. Every rotation of an elementary circuit is a candidate
core, so one loop of the program can yield several cycles.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import networkx as nx

from .flowgraph import Edge, Flowgraph, Path

DEFAULT_CAP = 1000


class ExitNotOnCore(ValueError):
    pass


@dataclass(frozen=True)
class Cycle:
    core: Path
    entry: str
    entry_witness: Edge
    exits: tuple

    @property
    def locations(self) -> tuple:
        return self.core.locations

    def core_string(self) -> str:
        return self.core.label()

    def normalized_core(self) -> str:
        return normalize_core(self.core.locations)

    def __len__(self):
        return len(self.core)

    def __str__(self):
        ex = " ".join(f"{e.src}->{e.dst}" for e in self.exits)
        return f"{self.core_string()} entry={self.entry} via {self.entry_witness.src}->{self.entry} exits=[{ex}]"


class CycleList(list):
    """A list of cycles that remembers whether enumeration hit its cap."""

    truncated: bool = False


def normalize_core(locs) -> str:
    """Rotate so the smallest location comes first; used only for ordering."""
    ring = list(locs[:-1])
    k = min(range(len(ring)), key=lambda i: ring[i:] + ring[:i])
    ring = ring[k:] + ring[:k]
    return "".join(ring + ring[:1])


def exits_of(fg: Flowgraph, core_edges) -> tuple:
    on_core = {id(e) for e in core_edges}
    locs = {e.src for e in core_edges}
    return tuple(e for e in fg.edges if e.src in locs and id(e) not in on_core)


def _location_graph(fg: Flowgraph) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_nodes_from(fg.locations)
    g.add_edges_from((e.src, e.dst) for e in fg.edges)
    return g


def _edge_choices(fg: Flowgraph, ring: list):
    """All edge sequences realising the location circuit ``ring``."""
    steps = []
    for a, b in zip(ring, ring[1:] + ring[:1]):
        steps.append([e for e in fg.edges if e.src == a and e.dst == b])
    return itertools.product(*steps)


def enumerate_cycles(fg: Flowgraph, cap: int = DEFAULT_CAP) -> CycleList:
    """All cycles of ``fg``, ordered by normalised core, then entry."""
    if cap <= 0:
        raise ValueError("cap must be positive")
    index = {id(e): i for i, e in enumerate(fg.edges)}
    found = []
    truncated = False
    for ring in nx.simple_cycles(_location_graph(fg)):
        for edges in _edge_choices(fg, ring):
            n = len(edges)
            for k in range(n):
                core = edges[k:] + edges[:k]
                entry = core[0].src
                # the witness (u, e) must not make "u e" a suffix of the core
                last = core[-1].src
                witness = next((e for e in fg.edges if e.dst == entry and e.src != last), None)
                if witness is None:
                    continue
                path = Path(entry, tuple(core))
                key = (normalize_core(path.locations), entry, tuple(index[id(e)] for e in core))
                found.append((key, Cycle(path, entry, witness, exits_of(fg, core))))
        if len(found) > cap:
            truncated = True
            break
    found.sort(key=lambda kc: kc[0])
    out = CycleList(c for _, c in found[:cap])
    out.truncated = truncated or len(found) > cap
    return out


def exit_prefix(c: Cycle, exit: Edge) -> Path:
    """The core prefix from the entry up to ``exit.src``, then ``exit`` itself."""
    if not any(exit is e or exit == e for e in c.exits):
        raise ExitNotOnCore(f"{exit.src}->{exit.dst} is not an exit of {c.core_string()}")
    prefix = []
    for e in c.core.edges:
        if e.src == exit.src:
            break
        prefix.append(e)
    else:
        raise ExitNotOnCore(f"{exit.src} does not lie on {c.core_string()}")
    return Path(c.entry, tuple(prefix) + (exit,))


def find_cycle(cycles, core: str, entry: Optional[str] = None) -> Cycle:
    """Look a cycle up by its core string, e.g. ``"bcdb"``."""
    for c in cycles:
        if c.core_string() == core and (entry is None or c.entry == entry):
            return c
    raise KeyError(core)
