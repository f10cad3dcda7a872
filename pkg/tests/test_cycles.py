import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from compactse.corpus import bundled
from compactse.cycles import ExitNotOnCore, enumerate_cycles, exit_prefix, find_cycle, normalize_core
from compactse.flowgraph import Edge, parse_flowgraph


def brute_force_cycles(fg):
    """Definition-level oracle: every simple closed walk from every location,
    kept when some edge ``(u, e)`` exists such that ``u e`` is not a suffix of
    the walk."""
    edges = list(fg.edges)
    out = set()

    def dfs(entry, here, used, seen):
        for idx, e in enumerate(edges):
            if e.src != here:
                continue
            if e.dst == entry:
                core = used + [idx]
                last = edges[core[-1]].src
                if any(w.dst == entry and w.src != last for w in edges):
                    on = set(core)
                    locs = {edges[j].src for j in core}
                    exits = frozenset(j for j, w in enumerate(edges) if w.src in locs and j not in on)
                    out.add((tuple(core), entry, exits))
            elif e.dst not in seen:
                dfs(entry, e.dst, used + [idx], seen | {e.dst})

    for loc in fg.locations:
        dfs(loc, loc, [], {loc})
    return out


def as_keys(fg, cycles):
    index = {id(e): j for j, e in enumerate(fg.edges)}
    return {
        (tuple(index[id(e)] for e in c.core.edges), c.entry, frozenset(index[id(e)] for e in c.exits))
        for c in cycles
    }


def test_linsrch_single_cycle(linsrch):
    (c,) = enumerate_cycles(linsrch)
    assert c.core_string() == "bcdb"
    assert c.entry == "b"
    assert (c.entry_witness.src, c.entry_witness.dst) == ("a", "b")
    assert {(e.src, e.dst) for e in c.exits} == {("b", "f"), ("c", "e")}


def test_branching_loop_has_four_cycles():
    cores = {c.core_string() for c in enumerate_cycles(bundled("loopbranch"))}
    assert cores == {"abcea", "abdea", "eabce", "eabde"}


def test_insertion_sort_has_seven_cycles():
    cycles = enumerate_cycles(bundled("insertion_sort"))
    cores = {c.core_string() for c in cycles}
    assert len(cycles) == 7
    assert cores == {"abcda", "abceda", "cdabc", "cedabc", "cefgc", "dabcd", "dabced"}


@pytest.mark.parametrize("name", ["linsrch", "loopbranch", "insertion_sort", "nested", "twoloops", "isort_outer"])
def test_corpus_matches_oracle(name):
    fg = bundled(name)
    assert as_keys(fg, enumerate_cycles(fg)) == brute_force_cycles(fg)


def test_cores_are_simple_and_closed():
    for name in ("loopbranch", "insertion_sort", "nested"):
        fg = bundled(name)
        for c in enumerate_cycles(fg):
            locs = c.core.locations
            assert locs[0] == locs[-1] == c.entry
            assert len(set(locs[1:])) == len(locs) - 1
            on_core = {id(e) for e in c.core.edges}
            leaving = {id(e) for e in fg.edges if e.src in locs}
            assert leaving == on_core | {id(e) for e in c.exits}
            w = c.entry_witness
            assert w in fg.edges and w.dst == c.entry and w.src != locs[-2]


def test_deterministic_order():
    cycles = enumerate_cycles(bundled("insertion_sort"))
    keys = [(c.normalized_core(), c.entry) for c in cycles]
    assert keys == sorted(keys)


def test_cap_truncates():
    cycles = enumerate_cycles(bundled("insertion_sort"), cap=3)
    assert len(cycles) == 3 and cycles.truncated
    assert not enumerate_cycles(bundled("insertion_sort")).truncated
    with pytest.raises(ValueError):
        enumerate_cycles(bundled("linsrch"), cap=0)


def test_exit_prefixes(linsrch):
    (c,) = enumerate_cycles(linsrch)
    by_dst = {e.dst: e for e in c.exits}
    assert exit_prefix(c, by_dst["f"]).label() == "bf"
    assert len(exit_prefix(c, by_dst["f"])) == 1
    assert exit_prefix(c, by_dst["e"]).label() == "bce"


def test_exit_prefix_rejects_foreign_edge(linsrch):
    (c,) = enumerate_cycles(linsrch)
    with pytest.raises(ExitNotOnCore):
        exit_prefix(c, linsrch.edges[0])
    with pytest.raises(ExitNotOnCore):
        exit_prefix(c, Edge("q", "g", linsrch.edges[0].body))


def test_start_without_predecessor_is_no_entry():
    # the loop a -> b -> a can only be entered at a from nowhere else
    fg = parse_flowgraph("program p\nstart a\nexit z\nedge a -> b : skip\nedge b -> a : skip\nedge b -> z : skip\n")
    assert enumerate_cycles(fg) == []


def test_self_loop():
    fg = parse_flowgraph("program p\nstart s\nexit z\nedge s -> a : skip\nedge a -> a : skip\nedge a -> z : skip\n")
    (c,) = enumerate_cycles(fg)
    assert c.core_string() == "aa" and c.entry_witness.src == "s"


def test_find_cycle():
    cycles = enumerate_cycles(bundled("loopbranch"))
    assert find_cycle(cycles, "eabde").entry == "e"
    with pytest.raises(KeyError):
        find_cycle(cycles, "zz")


def test_normalize_core():
    assert normalize_core(tuple("cdabc")) == "abcda"


LOCS = ["l0", "l1", "l2", "l3", "l4"]


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.sampled_from(LOCS), st.sampled_from(LOCS + ["z"])), min_size=1, max_size=10))
def test_random_graphs_match_oracle(pairs):
    text = "program g\nstart l0\nexit z\nedge l0 -> z : skip\n" + "".join(f"edge {a} -> {b} : skip\n" for a, b in pairs)
    fg = parse_flowgraph(text)
    assert as_keys(fg, enumerate_cycles(fg)) == brute_force_cycles(fg)
