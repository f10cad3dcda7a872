"""Counting loop with an error at s == 6000: classic execution has to walk
2000 iterations to get there, compact execution gets there in one step.

Run with ``python demos/path_explosion.py [node-limit]``.
"""

import sys
import time

from compactse.classic import Limits, run_classic
from compactse.compact import First, run_compact
from compactse.corpus import bundled
from compactse.smt import Solver
from compactse.symexpr import to_str
from compactse.templates import compute_templates

limit = int(sys.argv[1]) if len(sys.argv) > 1 else 2000
fg = bundled("oneloop")
solver = Solver()
lim = Limits(max_nodes=limit, max_depth=10**6)

t0 = time.monotonic()
compact = run_compact(fg, compute_templates(fg, solver).pool(), First(), solver, lim)
t1 = time.monotonic()
classic = run_classic(fg, solver, lim)
t2 = time.monotonic()

for name, tree, secs in (("compact", compact, t1 - t0), ("classic", classic, t2 - t1)):
    hit = "err reached" if "err" in tree.locations_reached() else "err not reached"
    stopped = ", ".join(sorted(tree.limits_hit)) or "finished"
    print(f"{name:8} {len(tree):6} nodes  {secs:6.1f}s  {hit}  ({stopped})")

(err,) = [n for n in compact if n.loc == "err"]
print("\npath condition of the error leaf:")
print(" ", to_str(err.state.pc))
print("a model:", solver.satisfiable(err.state.pc, model=True).model)
