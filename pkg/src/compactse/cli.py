"""Command-line front end: ``compactse <command> [options] <program>``.

Exit codes: 0 success, 1 usage or input error, 2 a run stopped at a limit,
3 a verification check found a mismatch.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Optional

from .classic import Limits, run_classic
from .compact import run_compact, strategy_from_name
from .corpus import load_program
from .cycles import DEFAULT_CAP, enumerate_cycles
from .export import (
    cycles_to_dict,
    dumps,
    report_to_dict,
    templates_to_dict,
    tree_to_dot,
    tree_to_json,
)
from .flowgraph import FlowgraphError
from .smt import DEFAULT_TIMEOUT_MS, Solver, SolverConfig
from .symexpr import to_str
from .templates import compute_templates
from .verify import VerificationAborted, check_completeness, check_soundness, check_template_properties

EXIT_OK, EXIT_USAGE, EXIT_LIMIT, EXIT_MISMATCH = 0, 1, 2, 3


@dataclass
class RunConfig:
    """Everything that determines a run apart from the program text."""

    command: str = "run"
    program: str = ""
    mode: str = "compact"
    strategy: str = "first"
    seed: int = 0
    max_nodes: int = 100_000
    max_depth: int = 64
    bound: int = 4
    compact_depth: Optional[int] = None
    cycles_cap: int = DEFAULT_CAP
    solver: str = "z3"
    timeout_ms: int = DEFAULT_TIMEOUT_MS
    log_queries: Optional[str] = None
    replay: Optional[str] = None
    out: Optional[str] = None
    dot: Optional[str] = None
    verbose: int = 0

    def solver_config(self) -> SolverConfig:
        return SolverConfig(
            path=self.solver, timeout_ms=self.timeout_ms, log_dir=self.log_queries, replay_dir=self.replay
        )

    def limits(self) -> Limits:
        return Limits(max_nodes=self.max_nodes, max_depth=self.max_depth)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown configuration keys: {', '.join(sorted(unknown))}")
        return cls(**d)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("program", help="flowgraph file, or the name of a bundled example")
    p.add_argument("--solver", help="solver executable (default z3; CSE_SOLVER overrides)")
    p.add_argument("--timeout", dest="timeout_ms", type=int, help="per-query timeout in ms")
    p.add_argument("--log-queries", metavar="DIR", help="write every solver query and reply to DIR")
    p.add_argument("--replay", metavar="DIR", help="answer queries from a DIR written by --log-queries")
    p.add_argument("--cycles-cap", type=int, help="stop enumerating cycles after N")
    p.add_argument("--config", metavar="FILE", help="JSON file with default option values")
    p.add_argument("--out", metavar="FILE", help="write a JSON export to FILE")
    p.add_argument("-v", "--verbose", action="count", default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="compactse", description="Classic and compact symbolic execution of flowgraphs.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("parse", help="validate a program and print it back")
    _common(p)
    p = sub.add_parser("cycles", help="list the cycles of a program")
    _common(p)
    p = sub.add_parser("templates", help="compute a template for every cycle")
    _common(p)

    p = sub.add_parser("run", help="build a classic or compact execution tree")
    _common(p)
    p.add_argument("--mode", choices=("classic", "compact"))
    p.add_argument("--strategy", choices=("never", "first", "random"))
    p.add_argument("--seed", type=int)
    p.add_argument("--max-nodes", type=int)
    p.add_argument("--max-depth", type=int)
    p.add_argument("--dot", metavar="FILE", help="write the tree in Graphviz format")

    p = sub.add_parser("verify", help="check compact against classic execution up to a bound")
    _common(p)
    p.add_argument("--bound", type=int)
    p.add_argument("--depth", dest="max_depth", type=int, help="depth of the classic tree")
    p.add_argument("--compact-depth", type=int, help="depth of the compact tree (default: --depth)")
    p.add_argument("--strategy", choices=("never", "first", "random"))
    p.add_argument("--seed", type=int)
    p.add_argument("--max-nodes", type=int)

    p = sub.add_parser("compare", help="print tree statistics of both modes side by side")
    _common(p)
    p.add_argument("--depth", dest="max_depth", type=int)
    p.add_argument("--max-nodes", type=int)
    p.add_argument("--strategy", choices=("never", "first", "random"))
    p.add_argument("--seed", type=int)
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    base = {}
    if getattr(ns, "config", None):
        base = json.loads(Path(ns.config).read_text())
    cfg = RunConfig.from_dict(base)
    for f in fields(RunConfig):
        v = getattr(ns, f.name, None)
        if v is not None and not (f.name == "verbose" and v == 0):
            setattr(cfg, f.name, v)
    return cfg


def _write(path: Optional[str], text: str) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8")


def summary_line(tree, smt_unknown: int) -> str:
    return (
        f"nodes={len(tree)} failed_leaves={len(tree.failed_leaves())} "
        f"smt_unknown={smt_unknown} templates_applied={tree.templates_applied}"
    )


def cmd_parse(cfg: RunConfig, fg, solver) -> int:
    sys.stdout.write(fg.pretty())
    return EXIT_OK


def cmd_cycles(cfg: RunConfig, fg, solver) -> int:
    cycles = enumerate_cycles(fg, cfg.cycles_cap)
    for c in cycles:
        print(c)
    print(f"{len(cycles)} cycles" + (" (truncated)" if cycles.truncated else ""))
    _write(cfg.out, dumps(cycles_to_dict(cycles, cycles.truncated)))
    return EXIT_OK


def cmd_templates(cfg: RunConfig, fg, solver) -> int:
    ts = compute_templates(fg, solver, cfg.cycles_cap)
    for t in ts.templates:
        print(t)
    for f in ts.failures:
        print(f"no template: {f}")
    print(f"{len(ts.templates)} templates, {len(ts.failures)} failures")
    _write(cfg.out, dumps(templates_to_dict(ts.templates, ts.failures)))
    return EXIT_OK


def _build(cfg: RunConfig, fg, solver, mode: str):
    before = solver.stats.unknown
    if mode == "classic":
        tree = run_classic(fg, solver, cfg.limits())
    else:
        pool = compute_templates(fg, solver, cfg.cycles_cap).pool()
        tree = run_compact(fg, pool, strategy_from_name(cfg.strategy, cfg.seed), solver, cfg.limits())
    return tree, solver.stats.unknown - before


def cmd_run(cfg: RunConfig, fg, solver) -> int:
    tree, unknown = _build(cfg, fg, solver, cfg.mode)
    if cfg.verbose:
        for n in tree:
            print(f"{n.id:>5} {'  ' * n.depth}{n.label or n.loc}  [{to_str(n.state.pc)}]")
    print(summary_line(tree, unknown))
    if tree.limit_tripped:
        print(f"limit reached: {', '.join(sorted(tree.limits_hit))}")
    _write(cfg.out, tree_to_json(tree))
    _write(cfg.dot, tree_to_dot(tree))
    return EXIT_LIMIT if tree.limit_tripped else EXIT_OK


def cmd_compare(cfg: RunConfig, fg, solver) -> int:
    rows = []
    for mode in ("compact", "classic"):
        tree, unknown = _build(cfg, fg, solver, mode)
        rows.append((mode, len(tree), len(tree.failed_leaves()), unknown, ",".join(sorted(tree.limits_hit)) or "-"))
    print(f"{'mode':<8} {'nodes':>7} {'failed':>7} {'unknown':>8}  limits")
    for r in rows:
        print(f"{r[0]:<8} {r[1]:>7} {r[2]:>7} {r[3]:>8}  {r[4]}")
    return EXIT_OK


def cmd_verify(cfg: RunConfig, fg, solver) -> int:
    ts = compute_templates(fg, solver, cfg.cycles_cap)
    pool = ts.pool()
    reports = []
    for t in ts.templates:
        reports.append((f"template {t.cycle.core_string()}", check_template_properties(fg, t.cycle, t, cfg.bound, solver)))
    T = run_classic(fg, solver, cfg.limits())
    lim = Limits(max_nodes=cfg.max_nodes, max_depth=cfg.compact_depth or cfg.max_depth)
    Tp = run_compact(fg, pool, strategy_from_name(cfg.strategy, cfg.seed), solver, lim)
    try:
        reports.append(("soundness", check_soundness(T, Tp, cfg.bound, solver)))
        reports.append(("completeness", check_completeness(Tp, T, cfg.bound, solver)))
    except VerificationAborted as exc:
        print(f"verification aborted: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    print(f"{'check':<24} {'matched':>8} {'unmatched':>10} {'inconcl.':>9} {'excluded':>9}  result")
    bad = False
    for name, r in reports:
        bad |= not r.ok
        print(
            f"{name:<24} {r.matched:>8} {r.unmatched:>10} {r.inconclusive:>9} {r.excluded:>9}  "
            + ("pass" if r.ok else "FAIL")
        )
    _write(cfg.out, dumps({"format_version": 1, "reports": [report_to_dict(r, {"name": n}) for n, r in reports]}))
    return EXIT_MISMATCH if bad else EXIT_OK


COMMANDS = {
    "parse": cmd_parse,
    "cycles": cmd_cycles,
    "templates": cmd_templates,
    "run": cmd_run,
    "verify": cmd_verify,
    "compare": cmd_compare,
}


def main(argv=None) -> int:
    try:
        ns = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = config_from_args(ns)
    except (OSError, ValueError, TypeError) as exc:
        print(f"compactse: bad configuration: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.WARNING - 10 * min(cfg.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        fg = load_program(cfg.program)
    except FlowgraphError as exc:
        sep = ":" if exc.line is not None else ": "
        print(f"{cfg.program}{sep}{exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"compactse: cannot read {cfg.program}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        solver = Solver(cfg.solver_config())
    except (OSError, ValueError) as exc:
        print(f"compactse: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return COMMANDS[cfg.command](cfg, fg, solver)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
