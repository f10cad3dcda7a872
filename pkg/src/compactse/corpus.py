"""Example programs shipped with the package."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .flowgraph import Flowgraph, load_flowgraph, parse_flowgraph


def bundled_names() -> list:
    root = resources.files("compactse") / "programs"
    return sorted(p.name[:-3] for p in root.iterdir() if p.name.endswith(".fg"))


def bundled_source(name: str) -> str:
    return (resources.files("compactse") / "programs" / f"{name}.fg").read_text(encoding="utf-8")


def bundled(name: str) -> Flowgraph:
    return parse_flowgraph(bundled_source(name))


def load_program(spec: str) -> Flowgraph:
    """Load a program from a path, or by name from the bundled examples."""
    p = Path(spec)
    if p.exists():
        return load_flowgraph(p)
    stem = p.name[:-3] if p.name.endswith(".fg") else p.name
    if stem in bundled_names():
        return bundled(stem)
    raise FileNotFoundError(spec)
