import pytest

from compactse.classic import (
    Limits,
    NodeKind,
    compute_classic_successors,
    execute_path,
    initial_state,
    run_classic,
)
from compactse.corpus import bundled
from compactse.export import tree_to_json
from compactse.flowgraph import Path, parse_flowgraph
from compactse.simplify import simplify
from compactse.smt import Solver, SolverConfig
from compactse.state import ProgState, SymMemory
from compactse.symexpr import TRUE, IntLit, Select, Symbol, conj, eq, ge, lt, ne, to_str

i, n, x = Symbol("i"), Symbol("n"), Symbol("x")


def edge(fg, src, dst):
    (e,) = [e for e in fg.edges if e.src == src and e.dst == dst]
    return e


def path(fg, locs):
    return Path(locs[0], tuple(edge(fg, a, b) for a, b in zip(locs, locs[1:])))


def test_core_iteration_effect(linsrch):
    s = execute_path(linsrch, path(linsrch, "bcdb"))
    assert s.loc == "b"
    assert s.mem["i"] == simplify(i + 1)
    assert all(s.mem[v] == Symbol(v) for v in ("r", "n", "x", "A"))
    assert s.pc == conj(lt(i, n), ne(Select("A", i), x))


def test_empty_path(linsrch):
    start = SymMemory.identity(linsrch.int_vars, linsrch.array_vars).replace(i=IntLit(4))
    s = execute_path(linsrch, Path("c"), start, lt(i, n))
    assert s == ProgState("c", start, lt(i, n))


def test_exit_step_condition(linsrch):
    s = execute_path(linsrch, path(linsrch, "bce"))
    assert s.loc == "e"
    assert s.pc == conj(lt(i, n), eq(Select("A", i), x))


def test_successors_at_b(linsrch):
    mem = SymMemory.identity(linsrch.int_vars, linsrch.array_vars).replace(i=IntLit(0))
    out = compute_classic_successors(linsrch, ProgState("b", mem))
    assert [s.loc for s in out] == ["c", "f"]
    assert out[0].pc == lt(0, n)
    assert out[1].pc == ge(0, n)


def test_successors_of_exit_and_of_d(linsrch):
    mem = SymMemory.identity(linsrch.int_vars, linsrch.array_vars)
    assert compute_classic_successors(linsrch, ProgState("g", mem)) == []
    (s,) = compute_classic_successors(linsrch, ProgState("d", mem))
    assert s.loc == "b" and s.mem["i"] == simplify(i + 1)


def test_linsrch_tree_top(linsrch, solver):
    T = run_classic(linsrch, solver, Limits(max_depth=8))
    kids = lambda node: [T[c] for c in T.children[node.id]]  # noqa: E731
    assert T.root.loc == "a" and T.root.state.pc == TRUE
    (b,) = kids(T.root)
    assert b.loc == "b"
    c, f = kids(b)
    assert (c.loc, f.loc) == ("c", "f")
    assert to_str(c.state.pc) == "0 < ~n"
    assert to_str(f.state.pc) == "0 >= ~n"
    e, d = kids(c)
    assert (e.loc, d.loc) == ("e", "d")
    assert to_str(e.state.pc) == "0 < ~n && A(0) == ~x"
    (g,) = kids(f)
    assert g.loc == "g" and g.state.mem["r"] == IntLit(-1)
    assert kids(g) == []
    assert T.limits_hit == {"depth"}
    assert not T.failed_leaves()


def test_single_location(solver):
    T = run_classic(parse_flowgraph("program one\nstart a\nexit a\n"), solver)
    assert len(T) == 1 and not T.limit_tripped


def test_infeasible_edge_pruned(solver):
    fg = parse_flowgraph("program p\nstart a\nexit b\nedge a -> b : assume false\n")
    T = run_classic(fg, solver)
    assert len(T) == 1


def test_path_condition_is_conjunction_of_branch_labels(linsrch, solver):
    T = run_classic(linsrch, solver, Limits(max_depth=12))
    for node in T:
        steps = T.path_to(node.id)
        rho = Path(steps[0].loc, tuple(s.edge for s in steps[1:]))
        assert execute_path(linsrch, rho).pc == node.state.pc
        assert execute_path(linsrch, rho).mem == node.state.mem


def test_bfs_order(linsrch, solver):
    T = run_classic(linsrch, solver, Limits(max_depth=12))
    depths = [node.depth for node in T]
    assert depths == sorted(depths)
    for node in T:
        assert T.children[node.id] == sorted(T.children[node.id])


def test_deterministic(solver):
    fg = bundled("loopbranch")
    a = tree_to_json(run_classic(fg, solver, Limits(max_depth=10)))
    b = tree_to_json(run_classic(fg, Solver(), Limits(max_depth=10)))
    assert a == b


def test_unknown_answers_make_failed_leaves(linsrch, tmp_path):
    # an empty replay log answers every query with UNKNOWN
    s = Solver(SolverConfig(replay_dir=str(tmp_path)))
    T = run_classic(linsrch, s, Limits(max_depth=8))
    failed = T.failed_leaves()
    assert [n.loc for n in failed] == ["c", "f"]
    assert all(not T.children[n.id] for n in failed)
    assert T.smt_unknown == 2


def test_node_limit(linsrch, solver):
    T = run_classic(linsrch, solver, Limits(max_nodes=10, max_depth=1000))
    assert len(T) <= 10
    assert "nodes" in T.limits_hit
    assert T.cut_nodes()


def test_depth_limit_marks_cut_nodes(linsrch, solver):
    T = run_classic(linsrch, solver, Limits(max_depth=5))
    assert max(node.depth for node in T) == 5
    cut = T.cut_nodes()
    assert cut and all(node.depth == 5 for node in cut)
    assert T.horizon() == 5
    assert all(not node.cut for node in T.genuine_leaves())


def test_time_budget(solver):
    T = run_classic(bundled("twoloops"), solver, Limits(max_depth=10**6, seconds=0.3))
    assert T.limits_hit == {"time"}


def test_complete_tree_has_no_horizon(solver):
    T = run_classic(bundled("constloop"), solver)
    assert not T.limit_tripped and T.horizon() is None
    assert {n.loc for n in T.genuine_leaves()} == {"done"}


@pytest.mark.parametrize("kw", [{"max_nodes": 0}, {"max_depth": -1}, {"seconds": 0}])
def test_limits_must_be_positive(kw):
    with pytest.raises(ValueError):
        Limits(**kw)


def test_initial_state(linsrch):
    s = initial_state(linsrch)
    assert s.loc == "a" and s.pc == TRUE
    assert all(s.mem[v] == Symbol(v) for v in linsrch.variables)
