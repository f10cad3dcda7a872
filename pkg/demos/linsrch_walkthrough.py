"""Linear search from source text to a six-node compact tree.

Run with ``python demos/linsrch_walkthrough.py`` (needs z3 on PATH).
"""

from compactse.classic import Limits, run_classic
from compactse.compact import First, run_compact
from compactse.corpus import bundled, bundled_source
from compactse.cycles import enumerate_cycles
from compactse.smt import Solver
from compactse.state import Verdict, states_equivalent
from compactse.symexpr import IntLit, to_str
from compactse.templates import compute_templates
from compactse.verify import ground

fg = bundled("linsrch")
solver = Solver()
print(bundled_source("linsrch"))

(cycle,) = enumerate_cycles(fg)
print(f"one cycle: {cycle}\n")

ts = compute_templates(fg, solver)
(tpl,) = ts.templates
print(tpl, "\n")

compact = run_compact(fg, ts.pool(), First(), solver)
print(f"compact tree, {len(compact)} nodes:")
for node in compact:
    print(f"  {'  ' * node.depth}{node.label or node.loc}   r = {to_str(node.state.mem['r'])}")

classic = run_classic(fg, solver, Limits(max_depth=10))
print(f"\nclassic tree cut at depth 10: {len(classic)} nodes and still growing")

# the leaf that finds the key at index 1, seen both ways
(found,) = [n for n in compact.genuine_leaves() if n.state.mem["r"] != IntLit(-1)]
at_one = ground(found.state, {0: 1})
(second,) = [n for n in classic.genuine_leaves() if n.state.mem["r"] == IntLit(1)]
print(f"\nclassic leaf:     {to_str(second.state.pc)}")
print(f"compact at k#0=1: {to_str(at_one.pc)}")
print("equivalent:", states_equivalent(second.state, at_one, solver) is Verdict.YES)
