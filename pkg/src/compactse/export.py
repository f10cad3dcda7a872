"""JSON and Graphviz renderings of trees, cycles, templates and reports."""

from __future__ import annotations

import json
from typing import Optional

from .classic import ExecTree, NodeKind
from .cycles import Cycle
from .symexpr import to_str
from .templates import Template, TemplateFailure
from .verify import Inconclusive, Matched, MatchReport, Unmatched

FORMAT_VERSION = 1


def _edge(e) -> dict:
    return {"src": e.src, "dst": e.dst, "body": [str(i) for i in e.body]}


def tree_to_dict(tree: ExecTree) -> dict:
    nodes = []
    for n in tree.nodes:
        nodes.append(
            {
                "id": n.id,
                "parent": n.parent,
                "depth": n.depth,
                "kind": n.kind.value,
                "loc": n.loc,
                "label": n.label,
                "template": n.template,
                "param": n.param,
                "cut": n.cut,
                "children": tree.children[n.id],
                "mem": {v: to_str(e) for v, e in n.state.mem.items()},
                "pc": to_str(n.state.pc),
            }
        )
    return {
        "format_version": FORMAT_VERSION,
        "program": tree.program,
        "summary": {
            "nodes": len(tree.nodes),
            "failed_leaves": len(tree.failed_leaves()),
            "templates_applied": tree.templates_applied,
            "limits_hit": sorted(tree.limits_hit),
        },
        "nodes": nodes,
    }


def dumps(obj: dict) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def tree_to_json(tree: ExecTree) -> str:
    return dumps(tree_to_dict(tree))


def _dot_quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def tree_to_dot(tree: ExecTree, with_pc: bool = False) -> str:
    lines = [f"digraph {_dot_quote(tree.program)} {{", "  node [shape=box, fontname=monospace];"]
    for n in tree.nodes:
        text = n.label or n.loc
        if with_pc:
            text += "\\n" + to_str(n.state.pc).replace('"', "'")
        attrs = [f"label={_dot_quote(text)}"]
        style = []
        if n.kind is NodeKind.TEMPLATE:
            style.append("rounded")
        elif n.kind is NodeKind.FAILED:
            attrs.append("color=red")
        if n.cut:
            style.append("dashed")
        if style:
            attrs.append(f'style="{",".join(style)}"')
        lines.append(f"  n{n.id} [{', '.join(attrs)}];")
    for n in tree.nodes:
        for c in tree.children[n.id]:
            lines.append(f"  n{n.id} -> n{c};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def cycle_to_dict(c: Cycle) -> dict:
    return {
        "core": c.core_string(),
        "entry": c.entry,
        "witness": _edge(c.entry_witness),
        "exits": [_edge(e) for e in c.exits],
    }


def cycles_to_dict(cycles, truncated: bool = False) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "truncated": truncated,
        "cycles": [cycle_to_dict(c) for c in cycles],
    }


def template_to_dict(t: Template) -> dict:
    return {
        "entry": t.entry,
        "core": t.cycle.core_string(),
        "param": t.param,
        "memory": {v: to_str(e) for v, e in t.theta_star.items()},
        "pc": to_str(t.phi_star),
        "exits": [
            {"loc": x.loc, "label": t.label(i), "edge": _edge(x.edge), "pc": to_str(x.pc),
             "memory": {v: to_str(e) for v, e in x.mem.items()}}
            for i, x in enumerate(t.exits)
        ],
    }


def failure_to_dict(f: TemplateFailure) -> dict:
    out = {"core": f.cycle.core_string(), "entry": f.cycle.entry, "reason": f.reason.value}
    if f.variables:
        out["variables"] = sorted(f.variables)
    if f.exit is not None:
        out["exit"] = _edge(f.exit)
    return out


def templates_to_dict(templates, failures) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "templates": [template_to_dict(t) for t in templates],
        "failures": [failure_to_dict(f) for f in failures],
    }


def _valuation(v: tuple) -> dict:
    return {f"k#{k}": n for k, n in v}


def _verdict(v) -> dict:
    if isinstance(v, Matched):
        return {"verdict": "matched", "leaf": v.leaf, "counterpart": v.counterpart, "valuation": _valuation(v.valuation)}
    if isinstance(v, Unmatched):
        return {"verdict": "unmatched", "leaf": v.leaf, "valuation": _valuation(v.valuation)}
    if isinstance(v, Inconclusive):
        return {"verdict": "inconclusive", "leaf": v.leaf, "reason": v.reason}
    raise TypeError(v)


def report_to_dict(r: MatchReport, extra: Optional[dict] = None) -> dict:
    out = {
        "format_version": FORMAT_VERSION,
        "check": r.check,
        "bound": r.bound,
        "matched": r.matched,
        "unmatched": r.unmatched,
        "inconclusive": r.inconclusive,
        "excluded": r.excluded,
        "skipped": r.skipped,
        "verdicts": [_verdict(v) for v in r.verdicts],
    }
    if extra:
        out.update(extra)
    return out
