import itertools

import pytest

from compactse.classic import Limits, TreeNode, run_classic
from compactse.compact import First, run_compact
from compactse.corpus import bundled
from compactse.flowgraph import parse_flowgraph
from compactse.smt import Solver, SolverConfig
from compactse.state import ProgState, SymMemory
from compactse.symexpr import IntLit, Param
from compactse.templates import compute_templates
from compactse.verify import (
    BOUND_EXHAUSTED,
    Inconclusive,
    Matched,
    Unmatched,
    VerificationAborted,
    bound_binds,
    check_completeness,
    check_soundness,
    check_template_properties,
    valuations,
)


def trees(fg, solver, depth, pool=None):
    pool = compute_templates(fg, solver).pool() if pool is None else pool
    lim = Limits(max_depth=depth)
    return run_classic(fg, solver, lim), run_compact(fg, pool, First(), solver, lim)


def test_linsrch_soundness_valuations(linsrch, solver):
    T, Tp = trees(linsrch, solver, 16)
    rep = check_soundness(T, Tp, 4, solver)
    assert rep.all_matched and rep.matched == len(T.genuine_leaves())
    for v in rep.verdicts:
        leaf = T[v.leaf]
        r = leaf.state.mem["r"]
        if r != IntLit(-1):
            # the leaf that found the key at index j matches k#0 = j
            assert v.valuation == ((0, r.value),)


def test_linsrch_completeness(linsrch, solver):
    T, Tp = trees(linsrch, solver, 16)
    rep = check_completeness(Tp, T, 4, solver)
    assert rep.all_matched and rep.matched == 2
    for v in rep.verdicts:
        ks = [dict(val)[0] for val, _ in v.instances]
        assert ks == sorted(ks) and ks[0] == 0


def test_loop_free_program(solver):
    fg = parse_flowgraph(
        "program branch\nint a b\nstart s\nexit z\n"
        "edge s -> t : assume a < b ; a := b\nedge s -> t : assume a >= b\nedge t -> z : b := b + 1\n"
    )
    T, Tp = trees(fg, solver, 10)
    for rep in (check_soundness(T, Tp, 3, solver), check_completeness(Tp, T, 3, solver)):
        assert rep.matched == 2 and rep.all_matched
        assert all(v.valuation == () for v in rep.verdicts)


def test_failed_leaves_abort(linsrch, tmp_path, solver):
    blind = Solver(SolverConfig(replay_dir=str(tmp_path)))
    T = run_classic(linsrch, blind, Limits(max_depth=6))
    _, Tp = trees(linsrch, solver, 6)
    with pytest.raises(VerificationAborted):
        check_soundness(T, Tp, 2, solver)
    with pytest.raises(VerificationAborted):
        check_completeness(Tp, T, 2, solver)


def test_wrong_templates_are_caught(linsrch, solver):
    # templates of a search that skips every other slot
    text = linsrch.pretty().replace("i := i + 1", "i := i + 2")
    skipping = parse_flowgraph(text)
    pool = compute_templates(skipping, solver).pool()
    T, Tp = trees(linsrch, solver, 16, pool)
    sound = check_soundness(T, Tp, 4, solver)
    assert sound.unmatched > 0
    assert not sound.ok
    complete = check_completeness(Tp, T, 4, solver)
    assert complete.unmatched > 0


def test_matches_grow_with_bound(solver):
    fg = bundled("loopbranch")
    T, Tp = trees(fg, solver, 12)
    counts = [check_soundness(T, Tp, b, solver).matched for b in range(0, 4)]
    assert counts == sorted(counts)


def test_template_properties_on_corpus(solver):
    for name in ("linsrch", "loopbranch", "isort_outer", "seqloops"):
        fg = bundled(name)
        for t in compute_templates(fg, solver).templates:
            rep = check_template_properties(fg, t.cycle, t, 4, solver)
            assert rep.all_matched, (name, t.cycle.core_string(), rep.summary())
            assert rep.matched >= len(t.exits) * 5


def test_valuations_enumerate_the_box():
    got = list(valuations([3, 1], 2))
    assert got[0] == {1: 0, 3: 0} and got[-1] == {1: 2, 3: 2}
    assert len(got) == 9
    assert list(valuations([], 5)) == [{}]


def test_valuations_with_budget_match_filter():
    weights = {0: 3, 1: 2}
    got = list(valuations([0, 1], 4, weights, 7))
    want = [
        {0: a, 1: b}
        for a, b in itertools.product(range(5), repeat=2)
        if 3 * a + 2 * b <= 7
    ]
    assert got == want
    assert list(valuations([0], 4, {0: 1}, -1)) == []


def node_with(loops, steps):
    mem = SymMemory.identity(["i"], []).replace(i=Param(loops[0][0]) if loops else IntLit(0))
    return TreeNode(0, ProgState("g", mem), steps=steps, loops=tuple(loops))


def test_bound_binds():
    n = node_with([(0, 3)], 4)
    assert bound_binds(n, 4, None)
    assert not bound_binds(n, 4, 18)  # 5 rounds need 19 edges
    assert bound_binds(n, 4, 19)
    assert not bound_binds(node_with([], 4), 4, None)


def test_depth_capped_compact_tree_is_reported(solver):
    fg = bundled("loopbranch")
    T = run_classic(fg, solver, Limits(max_depth=12))
    Tp = run_compact(fg, compute_templates(fg, solver).pool(), First(), solver, Limits(max_depth=3))
    rep = check_soundness(T, Tp, 2, solver)
    assert rep.unmatched == 0
    assert any(isinstance(v, Inconclusive) and v.reason == BOUND_EXHAUSTED for v in rep.verdicts)


def test_report_summary(linsrch, solver):
    T, Tp = trees(linsrch, solver, 10)
    rep = check_soundness(T, Tp, 3, solver)
    text = rep.summary()
    assert text.startswith("soundness: matched=") and "bound=3" in text
    assert rep.inconclusive_rate() == 0.0
    assert all(isinstance(v, (Matched, Unmatched, Inconclusive)) for v in rep.verdicts)
