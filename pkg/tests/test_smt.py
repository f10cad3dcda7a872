import os
import subprocess
import sys
import textwrap

import pytest

from compactse.smt import (
    SolverConfig,
    Solver,
    Status,
    UndeclaredSymbol,
    emit,
    parse_sexprs,
    satisfiable,
)
from compactse.symexpr import (
    FALSE,
    TRUE,
    BoundVar,
    ForallBounded,
    IntLit,
    Mul,
    Param,
    Pow,
    Select,
    Symbol,
    conj,
    eq,
    evaluate,
    ge,
    lt,
    ne,
)

i, n, x = Symbol("i"), Symbol("n"), Symbol("x")
k = Param(0)
t = BoundVar("t")
PHI_K = conj(
    ge(k, 0),
    ForallBounded("t", IntLit(0), k, conj(lt(t, n), ne(Select("A", t), x))),
    lt(k, n),
    eq(Select("A", k), x),
)


def test_true_and_false(solver):
    assert solver.satisfiable(TRUE).status is Status.SAT
    assert solver.satisfiable(FALSE).status is Status.UNSAT


def test_contradiction(solver):
    assert solver.satisfiable(conj(lt(i, n), ge(i, n))).status is Status.UNSAT


def test_parametric_pc_sat_with_checked_witness(fresh_solver):
    r = fresh_solver.satisfiable(PHI_K, model=True)
    assert r.status is Status.SAT
    # the model covers the quantifier-free part; check it by evaluation
    m = r.model
    kv = m.params[0]
    assert kv >= 0 and kv < m.symbols["n"]
    assert m.arrays["A"][kv] == m.symbols["x"]


def test_model_satisfies_quantifier_free_formula(fresh_solver):
    phi = conj(lt(i, n), ne(Select("A", i), x), eq(Select("A", Mul(IntLit(2), i)), IntLit(7)), lt(IntLit(3), i))
    r = fresh_solver.satisfiable(phi, model=True)
    assert r.status is Status.SAT
    assert evaluate(phi, r.model) is True


def test_emit_declares_constants():
    script = emit(lt(i, n))
    assert "(declare-const v_i Int)" in script and "(declare-const v_n Int)" in script
    assert "(assert (< v_i v_n))" in script
    assert script.endswith("(check-sat)\n")
    assert script.startswith("(set-logic QF_UFLIA)")


def test_emit_guarded_universal():
    script = emit(ForallBounded("t", IntLit(0), k, lt(t, n)))
    assert "(forall ((b_t Int)) (=> (and (<= 0 b_t) (< b_t k_0)) (< b_t v_n)))" in script
    assert "(declare-const k_0 Int)" in script
    # parameters get no extra side constraint
    assert "(>= k_0 0)" not in script


def test_emit_arrays_as_functions():
    assert "(declare-fun a_A (Int) Int)" in emit(eq(Select("A", i), x))


def test_emit_checks_declarations(linsrch):
    emit(lt(i, n), linsrch)
    with pytest.raises(UndeclaredSymbol):
        emit(lt(Symbol("zz"), n), linsrch)
    with pytest.raises(UndeclaredSymbol):
        emit(eq(Select("B", i), x), linsrch)


def test_pow_axioms_give_two_cubed(solver):
    script = emit(ne(Pow(IntLit(2), IntLit(3)), IntLit(8)))
    assert "(declare-fun pow (Int Int) Int)" in script
    # the literal power is folded by simplify, so go through a parameter
    phi = conj(eq(k, IntLit(3)), ne(Pow(IntLit(2), k), IntLit(8)))
    assert solver.satisfiable(phi).status is Status.UNSAT
    # models through the quantified axioms are out of reach; never a refutation
    phi = conj(eq(k, IntLit(3)), eq(Pow(IntLit(2), k), IntLit(8)))
    quick = Solver(SolverConfig(timeout_ms=1000))
    assert quick.satisfiable(phi).status is not Status.UNSAT


def test_emission_is_deterministic_across_processes():
    code = textwrap.dedent(
        """
        from compactse.smt import emit
        from compactse.symexpr import *
        phi = conj(lt(Symbol("zeta"), Symbol("alpha")), eq(Select("B", Param(3)), Symbol("m")),
                   ForallBounded("t", IntLit(0), Param(1), lt(BoundVar("t"), Select("A", Symbol("q")))))
        print(emit(phi))
        """
    )
    outs = set()
    for seed in ("1", "2", "3"):
        env = dict(os.environ, PYTHONHASHSEED=seed)
        outs.add(subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True).stdout)
    assert len(outs) == 1


def test_missing_solver_is_unknown():
    s = Solver(SolverConfig(path="/nonexistent/solver"))
    r = s.satisfiable(lt(i, n))
    assert r.status is Status.UNKNOWN
    assert r.diagnostic
    assert s.stats.unknown == 1


def test_env_override(monkeypatch):
    monkeypatch.setenv("CSE_SOLVER", "/nonexistent/solver")
    assert Solver(SolverConfig()).satisfiable(lt(i, n)).status is Status.UNKNOWN


def test_garbage_answer_is_unknown(tmp_path):
    fake = tmp_path / "fake"
    fake.write_text("#!/bin/sh\ncat >/dev/null &\necho maybe\n")
    fake.chmod(0o755)
    r = Solver(SolverConfig(path=str(fake))).satisfiable(lt(i, n))
    assert r.status is Status.UNKNOWN


def test_timeout_is_unknown(tmp_path):
    slow = tmp_path / "slow"
    slow.write_text("#!/bin/sh\nsleep 5\n")
    slow.chmod(0o755)
    r = Solver(SolverConfig(path=str(slow), timeout_ms=200)).satisfiable(lt(i, n))
    assert r.status is Status.UNKNOWN
    assert r.diagnostic == "timeout"


def test_timeout_must_be_positive():
    with pytest.raises(ValueError):
        SolverConfig(timeout_ms=0)


def test_cache_and_stats(fresh_solver):
    phi = conj(lt(i, n), lt(n, IntLit(4)))
    fresh_solver.satisfiable(phi)
    fresh_solver.satisfiable(phi)
    assert fresh_solver.stats.solver_calls == 1
    assert fresh_solver.stats.cache_hits == 1


def test_log_and_replay(tmp_path):
    logdir = tmp_path / "log"
    phi = conj(lt(i, n), eq(Select("A", i), x))
    live = Solver(SolverConfig(log_dir=str(logdir))).satisfiable(phi, model=True)
    assert sorted(p.name for p in logdir.iterdir()) == ["q0.out", "q0.smt2"]
    replay = Solver(SolverConfig(path="/nonexistent/solver", replay_dir=str(logdir)))
    again = replay.satisfiable(phi, model=True)
    assert again.status is live.status is Status.SAT
    assert again.model == live.model
    assert replay.satisfiable(lt(n, i)).status is Status.UNKNOWN


def test_module_level_satisfiable():
    assert satisfiable(conj(lt(i, n), lt(n, i))).status is Status.UNSAT


def test_parse_sexprs():
    assert parse_sexprs("((v_i 3) (v_n (- 2)))") == [[["v_i", "3"], ["v_n", ["-", "2"]]]]
