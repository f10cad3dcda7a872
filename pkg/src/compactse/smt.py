"""Tri-state satisfiability through an external SMT-LIB2 solver process.

Every query spawns one solver process, writes a complete script to its
standard input, reads the verdict and reaps the process. Timeouts, crashes
and anything that is not ``sat``/``unsat`` come back as ``UNKNOWN``.
"""

from __future__ import annotations

import enum
import hashlib
import logging
import os
import selectors
import shutil
import subprocess
import threading
import time
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .simplify import simplify
from .symexpr import (
    Add,
    And,
    BoolLit,
    BoundVar,
    Cmp,
    Env,
    EvalError,
    ForallBounded,
    Formula,
    Implies,
    IntLit,
    Ite,
    Mul,
    Node,
    Not,
    Or,
    Param,
    Pow,
    Select,
    Sub,
    Symbol,
    evaluate,
    facts,
    has_pow,
    has_quantifier,
    walk,
)

log = logging.getLogger(__name__)

DEFAULT_TIMEOUT_MS = 5000


class Status(enum.Enum):
    SAT = "sat"
    UNSAT = "unsat"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class SatResult:
    status: Status
    model: Optional[Env] = None
    seconds: float = 0.0
    diagnostic: str = ""

    def __bool__(self):  # pragma: no cover - guard against `if result:`
        raise TypeError("compare SatResult.status explicitly")


class UndeclaredSymbol(ValueError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    path: str = "z3"
    args: tuple = ("-in", "-smt2")
    timeout_ms: int = DEFAULT_TIMEOUT_MS
    logic: Optional[str] = None
    log_dir: Optional[str] = None
    replay_dir: Optional[str] = None

    def __post_init__(self):
        if self.timeout_ms <= 0:
            raise ValueError("timeout must be positive")

    def executable(self) -> str:
        return os.environ.get("CSE_SOLVER") or self.path


# --------------------------------------------------------------------------
# emission


def _name_sym(n: str) -> str:
    return f"v_{n}"


def _name_arr(n: str) -> str:
    return f"a_{n}"


def _name_param(i: int) -> str:
    return f"k_{i}"


def _int(v: int) -> str:
    return str(v) if v >= 0 else f"(- {-v})"


@lru_cache(maxsize=200_000)
def to_smt(x: Node) -> str:
    if isinstance(x, IntLit):
        return _int(x.value)
    if isinstance(x, BoolLit):
        return "true" if x.value else "false"
    if isinstance(x, Symbol):
        return _name_sym(x.name)
    if isinstance(x, Param):
        return _name_param(x.id)
    if isinstance(x, BoundVar):
        return f"b_{x.name}"
    if isinstance(x, Add):
        return f"(+ {to_smt(x.left)} {to_smt(x.right)})"
    if isinstance(x, Sub):
        return f"(- {to_smt(x.left)} {to_smt(x.right)})"
    if isinstance(x, Mul):
        return f"(* {to_smt(x.left)} {to_smt(x.right)})"
    if isinstance(x, Pow):
        return f"(pow {to_smt(x.base)} {to_smt(x.exp)})"
    if isinstance(x, Select):
        return f"({_name_arr(x.array)} {to_smt(x.index)})"
    if isinstance(x, Ite):
        return f"(ite {to_smt(x.cond)} {to_smt(x.then)} {to_smt(x.orelse)})"
    if isinstance(x, Cmp):
        l, r = to_smt(x.left), to_smt(x.right)
        if x.op == "==":
            return f"(= {l} {r})"
        if x.op == "!=":
            return f"(not (= {l} {r}))"
        return f"({x.op} {l} {r})"
    if isinstance(x, And):
        return "(and " + " ".join(to_smt(a) for a in x.args) + ")" if x.args else "true"
    if isinstance(x, Or):
        return "(or " + " ".join(to_smt(a) for a in x.args) + ")" if x.args else "false"
    if isinstance(x, Not):
        return f"(not {to_smt(x.arg)})"
    if isinstance(x, Implies):
        return f"(=> {to_smt(x.left)} {to_smt(x.right)})"
    if isinstance(x, ForallBounded):
        v = f"b_{x.var}"
        return (
            f"(forall (({v} Int)) (=> (and (<= {to_smt(x.lower)} {v}) (< {v} {to_smt(x.upper)})) "
            f"{to_smt(x.body)}))"
        )
    raise TypeError(f"cannot emit {x!r}")


POW_AXIOMS = (
    "(declare-fun pow (Int Int) Int)\n"
    "(assert (forall ((c Int)) (= (pow c 0) 1)))\n"
    "(assert (forall ((c Int) (k Int)) (=> (>= k 0) (= (pow c (+ k 1)) (* c (pow c k))))))\n"
)


def _logic(phi: Node) -> str:
    f = facts(phi)
    quant = f.quantified or f.pow
    nonlin = f.pow or f.nonlinear
    return ("" if quant else "QF_") + "UF" + ("N" if nonlin else "L") + "IA"


def _declared(phi: Node):
    f = facts(phi)
    return sorted(f.symbols), sorted(f.arrays), sorted(f.params)


def emit(phi: Formula, fg=None, logic: Optional[str] = None) -> str:
    """Render a complete solver script asserting ``phi`` followed by ``(check-sat)``.

    With a flowgraph, every symbol must be one of its declared variables.
    """
    scalars, arrays, params = _declared(phi)
    if fg is not None:
        for s in scalars:
            if s not in fg.int_vars:
                raise UndeclaredSymbol(s)
        for a in arrays:
            if a not in fg.array_vars:
                raise UndeclaredSymbol(a)
    lines = [f"(set-logic {logic or _logic(phi)})"]
    lines += [f"(declare-const {_name_sym(s)} Int)" for s in scalars]
    lines += [f"(declare-const {_name_param(p)} Int)" for p in params]
    lines += [f"(declare-fun {_name_arr(a)} (Int) Int)" for a in arrays]
    out = "\n".join(lines) + "\n"
    if has_pow(phi):
        out += POW_AXIOMS
    out += f"(assert {to_smt(phi)})\n(check-sat)\n"
    return out


# --------------------------------------------------------------------------
# s-expressions and models


def parse_sexprs(text: str) -> list:
    tokens, i = [], 0
    while i < len(text):
        c = text[i]
        if c.isspace():
            i += 1
        elif c in "()":
            tokens.append(c)
            i += 1
        elif c == '"':
            j = text.index('"', i + 1)
            tokens.append(text[i : j + 1])
            i = j + 1
        elif c == "|":
            j = text.index("|", i + 1)
            tokens.append(text[i : j + 1])
            i = j + 1
        else:
            j = i
            while j < len(text) and not text[j].isspace() and text[j] not in "()":
                j += 1
            tokens.append(text[i:j])
            i = j
    stack: list = [[]]
    for t in tokens:
        if t == "(":
            stack.append([])
        elif t == ")":
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(t)
    if len(stack) != 1:
        raise ValueError("unbalanced s-expression")
    return stack[0]


def _sexpr_int(v) -> int:
    if isinstance(v, str):
        return int(v)
    if len(v) == 2 and v[0] == "-":
        return -_sexpr_int(v[1])
    if len(v) == 3 and v[0] == "/":  # pragma: no cover - integer logic only
        raise ValueError("non-integer model value")
    raise ValueError(f"unexpected model value {v!r}")


def _value_queries(phi: Node) -> list:
    """Terms whose values make a quantifier-free part of ``phi`` evaluable."""
    scalars, _, params = _declared(phi)
    terms = [_name_sym(s) for s in scalars] + [_name_param(p) for p in params]
    selects = []

    def visit(n, under_binder):
        if isinstance(n, ForallBounded):
            for c in (n.lower, n.upper):
                visit(c, under_binder)
            visit(n.body, True)
            return
        if isinstance(n, Select) and not under_binder:
            selects.append(n)
        from .symexpr import children

        for c in children(n):
            visit(c, under_binder)

    visit(phi, False)
    seen = set()
    for s in selects:
        idx = to_smt(s.index)
        for t in (idx, f"({_name_arr(s.array)} {idx})"):
            if t not in seen:
                seen.add(t)
                terms.append(t)
    return terms


def _model_from_values(phi: Node, pairs: list) -> Env:
    values = {}
    for term, val in pairs:
        key = term if isinstance(term, str) else _unparse(term)
        values[key] = _sexpr_int(val)
    scalars, arrays, params = _declared(phi)
    syms = {s: values[_name_sym(s)] for s in scalars if _name_sym(s) in values}
    ps = {p: values[_name_param(p)] for p in params if _name_param(p) in values}
    arrs: dict = {a: {} for a in arrays}
    for n in walk(phi):
        if isinstance(n, Select):
            idx = to_smt(n.index)
            app = f"({_name_arr(n.array)} {idx})"
            if idx in values and app in values:
                arrs[n.array][values[idx]] = values[app]
    return Env(syms, arrs, ps)


def _unparse(s) -> str:
    if isinstance(s, str):
        return s
    return "(" + " ".join(_unparse(x) for x in s) + ")"


# --------------------------------------------------------------------------
# process


def _read_until(proc, sel, deadline: float, complete) -> Optional[str]:
    buf = b""
    while True:
        text = buf.decode(errors="replace")
        if complete(text):
            return text
        remaining = deadline - time.monotonic()
        if remaining <= 0:
            return None
        events = sel.select(timeout=remaining)
        if not events:
            return None
        chunk = os.read(proc.stdout.fileno(), 65536)
        if not chunk:
            return text if complete(text) else (text or None)
        buf += chunk


def _balanced(text: str) -> bool:
    s = text.strip()
    if not s.startswith("("):
        return bool(s) and "\n" in text
    depth = 0
    for c in s:
        depth += c == "("
        depth -= c == ")"
    return depth == 0


def run_solver_process(script: str, cfg: SolverConfig, value_terms: Sequence[str] = ()):
    """Run one query; returns (first answer token, raw value reply or None, diagnostic)."""
    exe = shutil.which(cfg.executable()) or cfg.executable()
    deadline = time.monotonic() + cfg.timeout_ms / 1000.0
    try:
        proc = subprocess.Popen(
            [exe, *cfg.args],
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL,
        )
    except OSError as exc:
        return "unknown", None, f"cannot start solver: {exc}"
    sel = selectors.DefaultSelector()
    try:
        sel.register(proc.stdout, selectors.EVENT_READ)
        try:
            proc.stdin.write(script.encode())
            proc.stdin.flush()
        except OSError as exc:
            return "unknown", None, f"write failed: {exc}"
        first = _read_until(proc, sel, deadline, lambda t: "\n" in t)
        if first is None:
            return "unknown", None, "timeout"
        answer = first.strip().split("\n")[0].strip()
        values = None
        if answer == "sat" and value_terms:
            try:
                proc.stdin.write(f"(get-value ({' '.join(value_terms)}))\n".encode())
                proc.stdin.flush()
                values = _read_until(proc, sel, deadline + 1.0, _balanced)
            except OSError:
                values = None
        return answer, values, ""
    finally:
        sel.close()
        try:
            proc.stdin.close()
        except OSError:
            pass
        if proc.poll() is None:
            proc.kill()
        proc.wait()
        proc.stdout.close()


@dataclass
class SolverStats:
    queries: int = 0
    solver_calls: int = 0
    cache_hits: int = 0
    witness_hits: int = 0
    unknown: int = 0
    seconds: float = 0.0


class Solver:
    """Stateful front end: caching, query logging, replay and statistics."""

    def __init__(self, cfg: Optional[SolverConfig] = None):
        self.cfg = cfg or SolverConfig()
        self.stats = SolverStats()
        self._cache: dict[str, SatResult] = {}
        self._lock = threading.Lock()
        self._counter = 0
        self._replay: Optional[dict] = None
        if self.cfg.replay_dir:
            self._replay = load_replay(self.cfg.replay_dir)
        if self.cfg.log_dir:
            Path(self.cfg.log_dir).mkdir(parents=True, exist_ok=True)

    def satisfiable(self, phi: Formula, model: bool = False, hints: Iterable[Env] = ()) -> SatResult:
        """Never raises: every failure becomes ``UNKNOWN`` with a diagnostic."""
        t0 = time.monotonic()
        self.stats.queries += 1
        try:
            res = self._satisfiable(phi, model, hints)
        except Exception as exc:  # noqa: BLE001 - tri-state totality
            log.warning("solver front end failure: %s", exc)
            res = SatResult(Status.UNKNOWN, diagnostic=f"internal: {exc}")
        if res.status is Status.UNKNOWN:
            self.stats.unknown += 1
        dt = time.monotonic() - t0
        self.stats.seconds += dt
        return replace(res, seconds=dt)

    def _satisfiable(self, phi, model, hints) -> SatResult:
        phi = simplify(phi)
        if isinstance(phi, BoolLit):
            if phi.value:
                return SatResult(Status.SAT, Env({}, {}, {}) if model else None)
            return SatResult(Status.UNSAT)
        if not has_quantifier(phi) and not has_pow(phi):
            for env in hints:
                try:
                    if evaluate(phi, env):
                        self.stats.witness_hits += 1
                        return SatResult(Status.SAT, env, diagnostic="witness")
                except EvalError:
                    continue
        script = emit(phi, logic=self.cfg.logic)
        key = script
        with self._lock:
            hit = self._cache.get(key)
        if hit is not None and (hit.model is not None or not model or hit.status is not Status.SAT):
            self.stats.cache_hits += 1
            return hit
        terms = _value_queries(phi) if model else ()
        if self._replay is not None:
            entry = self._replay.get(_digest(script))
            if entry is None:
                return SatResult(Status.UNKNOWN, diagnostic="query not in replay log")
            answer, values = entry
            diag = ""
        else:
            self.stats.solver_calls += 1
            answer, values, diag = run_solver_process(script, self.cfg, terms)
            self._log(script, answer, values)
            if diag:
                log.debug("solver: %s", diag)
        if answer == "sat":
            env = None
            if model and values:
                try:
                    parsed = parse_sexprs(values)
                    env = _model_from_values(phi, parsed[0])
                except (ValueError, IndexError, KeyError) as exc:
                    log.debug("could not parse model: %s", exc)
            res = SatResult(Status.SAT, env)
        elif answer == "unsat":
            res = SatResult(Status.UNSAT)
        else:
            res = SatResult(Status.UNKNOWN, diagnostic=diag or answer)
        if res.status is not Status.UNKNOWN or self._replay is not None:
            with self._lock:
                self._cache[key] = res
        return res

    def _log(self, script: str, answer: str, values: Optional[str]) -> None:
        if not self.cfg.log_dir:
            return
        with self._lock:
            n = self._counter
            self._counter += 1
        base = Path(self.cfg.log_dir) / f"q{n}"
        base.with_suffix(".smt2").write_text(script)
        base.with_suffix(".out").write_text(answer + "\n" + (values or ""))


def _digest(script: str) -> str:
    return hashlib.sha256(script.encode()).hexdigest()


def load_replay(directory: str) -> dict:
    """Map script digests to logged (answer, values) replies."""
    out = {}
    for q in sorted(Path(directory).glob("q*.smt2")):
        reply = q.with_suffix(".out")
        if not reply.exists():
            continue
        answer, _, values = reply.read_text().partition("\n")
        out[_digest(q.read_text())] = (answer.strip(), values or None)
    return out


_default_solvers: dict = {}


def satisfiable(phi: Formula, cfg: Optional[SolverConfig] = None, model: bool = False) -> SatResult:
    """Module-level convenience around a per-configuration :class:`Solver`."""
    cfg = cfg or SolverConfig()
    solver = _default_solvers.get(cfg)
    if solver is None:
        solver = _default_solvers[cfg] = Solver(cfg)
    return solver.satisfiable(phi, model=model)


def as_solver(x) -> Solver:
    if isinstance(x, Solver):
        return x
    if x is None or isinstance(x, SolverConfig):
        return Solver(x)
    raise TypeError(f"expected Solver or SolverConfig, got {type(x).__name__}")
