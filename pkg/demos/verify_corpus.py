"""Bounded soundness and completeness of compact execution on the bundled
loop programs, as a table.

Run with ``python demos/verify_corpus.py``.
"""

from compactse.classic import Limits, run_classic
from compactse.compact import First, run_compact
from compactse.corpus import bundled
from compactse.cycles import enumerate_cycles
from compactse.smt import Solver
from compactse.templates import compute_templates
from compactse.verify import check_completeness, check_soundness

# classic depth covering four rounds of each program's loops
DEPTHS = {"linsrch": 16, "loopbranch": 18, "isort_outer": 15, "seqloops": 20, "constloop": 12, "nested": 34}

solver = Solver()
print(f"{'program':12} {'depth':>5} {'bound':>5}  {'check':12} {'matched':>7} {'unmatched':>9} {'inconcl.':>8} {'excluded':>8}")
for name, depth in DEPTHS.items():
    fg = bundled(name)
    bound = depth // min(len(c.core) for c in enumerate_cycles(fg))
    lim = Limits(max_depth=depth)
    T = run_classic(fg, solver, lim)
    Tp = run_compact(fg, compute_templates(fg, solver).pool(), First(), solver, lim)
    for rep in (check_soundness(T, Tp, bound, solver), check_completeness(Tp, T, bound, solver)):
        print(
            f"{name:12} {depth:>5} {bound:>5}  {rep.check:12} {rep.matched:>7} {rep.unmatched:>9}"
            f" {rep.inconclusive:>8} {rep.excluded:>8}"
        )
print(f"\n{solver.stats}")
