import json

from compactse.classic import Limits, run_classic
from compactse.compact import First, run_compact
from compactse.corpus import bundled
from compactse.cycles import enumerate_cycles
from compactse.export import (
    FORMAT_VERSION,
    cycles_to_dict,
    report_to_dict,
    templates_to_dict,
    tree_to_dict,
    tree_to_dot,
    tree_to_json,
)
from compactse.templates import compute_templates
from compactse.verify import Inconclusive, Matched, MatchReport, Unmatched


def test_tree_dict_shape(linsrch, solver):
    T = run_classic(linsrch, solver, Limits(max_depth=4))
    d = tree_to_dict(T)
    assert d["format_version"] == FORMAT_VERSION and d["program"] == "linSrch"
    assert d["summary"] == {"nodes": len(T), "failed_leaves": 0, "templates_applied": 0, "limits_hit": ["depth"]}
    root = d["nodes"][0]
    assert root["parent"] is None and root["pc"] == "true" and root["mem"]["i"] == "~i"
    assert all(n["cut"] == (n["depth"] == 4 and not n["children"] and n["loc"] != "g") for n in d["nodes"])
    assert json.loads(tree_to_json(T)) == d


def test_dot_marks_node_kinds(linsrch, solver):
    pool = compute_templates(linsrch, solver).pool()
    T = run_compact(linsrch, pool, First(), solver)
    dot = tree_to_dot(T, with_pc=True)
    assert dot.startswith('digraph "linSrch" {')
    assert dot.count('style="rounded"') == 2
    assert "n1 -> n2;" in dot and dot.rstrip().endswith("}")
    cut = tree_to_dot(run_compact(linsrch, pool, First(), solver, Limits(max_depth=2)))
    assert 'style="rounded,dashed"' in cut


def test_cycles_and_templates(solver):
    fg = bundled("nested")
    cd = cycles_to_dict(enumerate_cycles(fg))
    assert {c["core"] for c in cd["cycles"]} >= {"cdc", "ceabc"}
    assert not cd["truncated"]
    ts = compute_templates(fg, solver)
    td = templates_to_dict(ts.templates, ts.failures)
    assert [t["core"] for t in td["templates"]] == ["ceabc"]
    by_core = {f["core"]: f for f in td["failures"]}
    assert by_core["cdc"]["variables"] and "exit" not in by_core["cdc"]
    ex = td["templates"][0]["exits"][0]
    assert set(ex) == {"loc", "label", "edge", "pc", "memory"}


def test_report_dict():
    r = MatchReport("soundness", 3, [Matched(4, 9, ((0, 2),)), Unmatched(5, ()), Inconclusive(6, "solver unknown")])
    d = report_to_dict(r, {"name": "x"})
    assert (d["matched"], d["unmatched"], d["inconclusive"]) == (1, 1, 1)
    assert d["verdicts"][0] == {"verdict": "matched", "leaf": 4, "counterpart": 9, "valuation": {"k#0": 2}}
    assert d["verdicts"][2]["reason"] == "solver unknown"
    assert d["name"] == "x"
