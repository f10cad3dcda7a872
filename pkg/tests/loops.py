"""Small single-loop programs and a concrete interpreter used as an oracle."""

import random

from compactse.cycles import enumerate_cycles
from compactse.flowgraph import Assign, parse_flowgraph
from compactse.symexpr import Env, evaluate


def loop_program(body: str, ints: str = "a b c q s", arrays: str = ""):
    """``s -> h`` then a self loop ``h -> h`` running ``body``, exit ``h -> z``."""
    decl = f"int {ints}\n" + (f"array {arrays}\n" if arrays else "")
    text = (
        f"program loop\n{decl}start s\nexit z\n"
        f"edge s -> h : skip\nedge h -> h : {body}\nedge h -> z : skip\n"
    )
    fg = parse_flowgraph(text)
    (cycle,) = enumerate_cycles(fg)
    return fg, cycle


def run_concrete(edges, store: dict, arrays: dict | None = None) -> dict:
    """Execute assignments on plain integers; conditions are ignored."""
    store = dict(store)
    arrays = arrays or {}
    for e in edges:
        for ins in e.body:
            if isinstance(ins, Assign):
                env = Env(store, arrays, {})
                store[ins.var] = evaluate(ins.rhs, env)
    return store


def random_stores(fg, count: int = 10, seed: int = 0, span: int = 9):
    rng = random.Random(seed)
    return [{v: rng.randint(-span, span) for v in fg.int_vars} for _ in range(count)]


def closed_form_check(body: str, rounds=range(5), stores: int = 10):
    """Derive the closed forms of ``body``'s loop and check them against
    concrete unrolling for every round in ``rounds`` from random stores."""
    from compactse.classic import execute_path
    from compactse.state import SymMemory
    from compactse.symexpr import to_str
    from compactse.templates import derive_parametric_memory

    fg, c = loop_program(body)
    star = derive_parametric_memory(execute_path(fg, c.core).mem, fg)
    assert isinstance(star, SymMemory), f"no closed form for {sorted(star)}"
    for store in random_stores(fg, stores):
        for nu in rounds:
            want = run_concrete(c.core.edges * nu, store)
            env = Env(store, {}, {0: nu})
            for v in fg.int_vars:
                assert evaluate(star[v], env) == want[v], (v, nu, to_str(star[v]))
    return star
