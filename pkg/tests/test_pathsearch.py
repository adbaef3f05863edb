"""Tests for the augmenting-path search and its building blocks."""

import random

import pytest

from degdet.field import DEFAULT_PRIME, PrimeField
from degdet.instance import Block, Instance, random_instance
from degdet.matching import (
    Labeling,
    MatchingState,
    SignedMatching,
    derive_valid_labeling,
    two_color,
    weight,
)
from degdet.pathsearch import (
    INNER,
    OUTER,
    AugmentingPath,
    Infeasible,
    Rearranged,
    SearchForest,
    apply_dual_update,
    build_path,
    check_path,
    dual_step_epsilon,
    find_rearrangeable,
    rearrange,
    search,
)
from degdet.plane import line, mat2, pairing_nonzero
from degdet.potential import PotentialState, dual_value

FLD = PrimeField(DEFAULT_PRIME)

IDENT = [[1, 0], [0, 1]]
LOWRANK = [[1, 0], [0, 0]]


def _grid(rows, cols, cells):
    blocks = {e: Block(mat2(m), d) for e, (m, d) in cells.items()}
    return Instance(FLD, rows, cols, blocks)


def _signed(signs):
    return SignedMatching(frozenset(signs), dict(signs))


# -- path construction --------------------------------------------------------


def test_build_path_doubled_hop_is_one_outer_segment():
    state = MatchingState(_signed({(1, 1): 1}), frozenset([(1, 1)]))
    nodes = [("c", 2, 1), ("r", 1, 1), ("c", 1, 1)]
    path = build_path(state, nodes)
    assert path.nodes == tuple(nodes)
    assert path.segments == ((OUTER, 0, 2),)
    assert path.start == ("c", 2, 1)
    assert path.end == ("c", 1, 1)
    assert path.edge(0) == (1, 2)
    assert path.edges() == [(1, 2), (1, 1)]


def test_build_path_chain_step_is_inner():
    state = MatchingState(_signed({(1, 1): 1}))
    nodes = [("c", 2, 1), ("r", 1, 1), ("c", 1, 1)]
    path = build_path(state, nodes)
    assert path.segments == ((OUTER, 0, 1), (INNER, 1, 2))


def test_build_path_degenerate():
    assert build_path(MatchingState.empty(), [("c", 1, 1)]).segments == (
        (OUTER, 0, 0),)
    with pytest.raises(ValueError):
        build_path(MatchingState.empty(), [])


# -- the search forest ---------------------------------------------------------


def test_forest_links_and_counts():
    f = SearchForest()
    f.add_root(("c", 1, 1))
    f.add_root(("c", 2, -1))
    f.add_child(("c", 1, 1), ("r", 1, 1))
    f.add_child(("r", 1, 1), ("c", 3, 1))
    assert ("r", 1, 1) in f and ("r", 2, 1) not in f
    assert len(f) == 4
    assert set(f.roots()) == {("c", 1, 1), ("c", 2, -1)}
    assert f.parent(("c", 3, 1)) == ("r", 1, 1)
    assert f.parent(("c", 1, 1)) is None
    assert f.path_from_root(("c", 3, 1)) == [
        ("c", 1, 1), ("r", 1, 1), ("c", 3, 1)]
    assert f.side_counts() == (3, 1)


def test_forest_rejects_bad_insertions():
    f = SearchForest()
    f.add_root(("c", 1, 1))
    with pytest.raises(ValueError):
        f.add_root(("c", 1, 1))
    with pytest.raises(ValueError):
        f.add_child(("r", 9, 1), ("c", 2, 1))
    with pytest.raises(ValueError):
        f.add_child(("c", 1, 1), ("c", 1, 1))


# -- rearrangeable chains ------------------------------------------------------


def test_rearrange_single_doubled_edge():
    inst = _grid(1, 1, {(1, 1): (IDENT, 5)})
    m = two_color([(1, 1)])
    state = MatchingState(m)
    ps = PotentialState(c=5)
    comp = find_rearrangeable(inst, state, ps)
    assert comp == [(1, 1)]
    bigger = rearrange(state, comp)
    assert bigger.matching.edges == frozenset([(1, 1)])
    assert bigger.doubled == frozenset([(1, 1)])
    assert bigger.size == 2
    assert weight(inst, bigger) == 10


def test_rank1_edge_is_never_rearrangeable():
    inst = _grid(1, 1, {(1, 1): (LOWRANK, 3)})
    state = MatchingState(two_color([(1, 1)]))
    assert find_rearrangeable(inst, state, PotentialState(c=3)) is None


def test_rearrangeable_needs_both_pairs_tight():
    inst = _grid(1, 1, {(1, 1): (IDENT, 5)})
    state = MatchingState(two_color([(1, 1)]))
    off = PotentialState(c=4, p={("r", 1, 1): 1, ("c", 1, 1): 1})
    # The minus pair has slack 1, so the edge is only single-tight.
    assert find_rearrangeable(inst, state, off) is None


def test_rearrange_three_edge_chain():
    inst = _grid(2, 2, {(1, 1): (IDENT, 0), (2, 1): (IDENT, 0),
                        (2, 2): (IDENT, 0)})
    m = two_color([(1, 1), (2, 1), (2, 2)])
    assert m.sign == {(1, 1): 1, (2, 1): -1, (2, 2): 1}
    state = MatchingState(m)
    ps = PotentialState(c=0)
    comp = find_rearrangeable(inst, state, ps)
    # Listed from the chain end at column 2, the smaller endpoint key.
    assert comp == [(2, 2), (2, 1), (1, 1)]
    bigger = rearrange(state, comp)
    assert bigger.matching.edges == frozenset([(1, 1), (2, 2)])
    assert bigger.doubled == frozenset([(1, 1), (2, 2)])
    assert bigger.size == 4
    assert weight(inst, bigger) == 0


def test_cycles_are_not_rearrangeable():
    cells = {(1, 1): (IDENT, 0), (1, 2): (IDENT, 0),
             (2, 1): (IDENT, 0), (2, 2): (IDENT, 0)}
    inst = _grid(2, 2, cells)
    state = MatchingState(two_color(list(cells)))
    assert find_rearrangeable(inst, state, PotentialState(c=0)) is None


# -- dual adjustment -----------------------------------------------------------


def _rooted(*sides):
    f = SearchForest()
    for s in sides:
        f.add_root(s)
    return f


def test_dual_step_epsilon_without_candidates():
    inst = _grid(1, 1, {})
    lab = Labeling.default(FLD, 1, 1)
    eps = dual_step_epsilon(inst, _rooted(("c", 1, 1)), lab, PotentialState())
    assert eps is None


def test_dual_step_epsilon_single_block():
    inst = _grid(1, 1, {(1, 1): (IDENT, 2)})
    lab = Labeling.default(FLD, 1, 1)
    eps = dual_step_epsilon(inst, _rooted(("c", 1, 1)), lab,
                            PotentialState(c=5))
    assert eps == 3


def test_dual_step_epsilon_takes_the_minimum():
    inst = _grid(2, 1, {(1, 1): (IDENT, 2), (2, 1): (IDENT, 4)})
    lab = Labeling.default(FLD, 2, 1)
    eps = dual_step_epsilon(inst, _rooted(("c", 1, 1)), lab,
                            PotentialState(c=5))
    assert eps == 1


def test_dual_step_epsilon_skips_forest_rows():
    inst = _grid(1, 1, {(1, 1): (IDENT, 2)})
    lab = Labeling.default(FLD, 1, 1)
    forest = _rooted(("c", 1, 1))
    forest.add_child(("c", 1, 1), ("r", 1, 1))
    assert dual_step_epsilon(inst, forest, lab, PotentialState(c=5)) is None


def test_dual_step_epsilon_rejects_leftover_tight_edge():
    inst = _grid(1, 1, {(1, 1): (IDENT, 5)})
    lab = Labeling.default(FLD, 1, 1)
    with pytest.raises(ValueError):
        dual_step_epsilon(inst, _rooted(("c", 1, 1)), lab, PotentialState(c=5))


def test_apply_dual_update_shifts_around_forest():
    lab = Labeling.default(FLD, 1, 1)
    ps = PotentialState(c=5)
    apply_dual_update(_rooted(("c", 1, 1)), lab, ps, 2)
    assert ps.c == 3
    assert ps.p_side(("c", 1, 1)) == 0
    assert ps.p_side(("c", 1, -1)) == 2
    assert ps.p_side(("r", 1, 1)) == 0
    assert ps.p_side(("r", 1, -1)) == 0


def test_apply_dual_update_composes():
    lab = Labeling.default(FLD, 2, 2)
    forest = _rooted(("c", 1, 1), ("c", 2, -1))
    forest.add_child(("c", 1, 1), ("r", 2, 1))
    once = PotentialState(c=9)
    twice = once.clone()
    apply_dual_update(forest, lab, once, 5)
    apply_dual_update(forest, lab, twice, 2)
    apply_dual_update(forest, lab, twice, 3)
    assert once == twice


def test_apply_dual_update_lowers_the_next_objective():
    lab = Labeling.default(FLD, 1, 1)
    ps = PotentialState(c=5)
    before = dual_value(ps, 1)
    apply_dual_update(_rooted(("c", 1, 1), ("c", 1, -1)), lab, ps, 2)
    assert dual_value(ps, 1) == before - 2


def test_apply_dual_update_rejects_nonpositive_shift():
    lab = Labeling.default(FLD, 1, 1)
    for eps in (0, -1):
        with pytest.raises(ValueError):
            apply_dual_update(_rooted(("c", 1, 1)), lab, PotentialState(), eps)


# -- path validation -----------------------------------------------------------


def test_check_path_rejections():
    inst = _grid(1, 1, {(1, 1): (IDENT, 5)})
    lab = Labeling.default(FLD, 1, 1)
    ps = PotentialState.initial(inst)
    empty = MatchingState.empty()
    source = {("c", 1, 1)}
    target = {("r", 1, 1)}

    def check(nodes, state=empty, **kw):
        kw.setdefault("source", source)
        kw.setdefault("target", target)
        check_path(inst, state, lab, ps, build_path(state, nodes), **kw)

    check([("c", 1, 1), ("r", 1, 1)])
    check([("c", 1, 1)], truncated=True)
    with pytest.raises(ValueError, match="start in the source"):
        check([("c", 1, 1), ("r", 1, 1)], source={("c", 1, -1)})
    with pytest.raises(ValueError, match="revisits"):
        check([("c", 1, 1), ("r", 1, 1), ("c", 1, 1)])
    with pytest.raises(ValueError, match="alternate"):
        check([("c", 1, 1), ("c", 1, -1)])
    with pytest.raises(ValueError, match="pairs to zero"):
        check([("c", 1, 1), ("r", 1, -1)], target={("r", 1, -1)})
    with pytest.raises(ValueError, match="end in the target"):
        check([("c", 1, 1), ("r", 1, 1)], target={("r", 1, -1)})
    with pytest.raises(ValueError, match="start at a column"):
        check([("r", 1, 1)])


def test_check_path_rejects_truncation_inside_a_chain():
    inst = _grid(1, 1, {(1, 1): (IDENT, 5)})
    m = two_color([(1, 1)])
    state = MatchingState(m)
    lab = derive_valid_labeling(inst, m)
    ps = PotentialState(c=5)
    path = build_path(state, [("c", 1, 1), ("r", 1, 1)])
    with pytest.raises(ValueError, match="stop inside a chain"):
        check_path(inst, state, lab, ps, path, source={("c", 1, 1)},
                   target=set(), truncated=True)


# -- the search ----------------------------------------------------------------


def test_search_immediate_path_from_empty():
    inst = _grid(1, 1, {(1, 1): (IDENT, 5)})
    lab = Labeling.default(FLD, 1, 1)
    ps = PotentialState.initial(inst)
    events = []
    counters = {}
    out = search(inst, MatchingState.empty(), lab, ps, debug=True,
                 trace=events.append, counters=counters)
    assert isinstance(out, AugmentingPath)
    assert out.path.nodes == (("c", 1, 1), ("r", 1, 1))
    assert out.path.segments == ((OUTER, 0, 1),)
    assert [e["action"] for e in events] == ["path-found"]
    assert counters == {"phases": 1}


def test_search_infeasible_on_rank1_block():
    inst = _grid(1, 1, {(1, 1): (LOWRANK, 3)})
    m = two_color([(1, 1)])
    lab = derive_valid_labeling(inst, m)
    ps = PotentialState(c=3)
    events = []
    out = search(inst, MatchingState(m), lab, ps, debug=True,
                 trace=events.append)
    assert out == Infeasible()
    assert [e["action"] for e in events] == ["infeasible"]


def test_search_dual_step_then_path():
    # The potential starts 2 above the only block weight, so the first
    # phase has nothing tight: one dual shift of 2, no new sources, then
    # the path appears.
    inst = _grid(1, 1, {(1, 1): (IDENT, 5)})
    lab = Labeling.default(FLD, 1, 1)
    ps = PotentialState(c=7)
    events = []
    counters = {}
    out = search(inst, MatchingState.empty(), lab, ps, debug=True,
                 trace=events.append, counters=counters)
    assert isinstance(out, AugmentingPath)
    assert out.path.nodes == (("c", 1, 1), ("r", 1, 1))
    assert [e["action"] for e in events] == [
        "dual-adjust", "sources-extended", "path-found"]
    assert events[0]["eps"] == 2
    assert ps.c == 5
    assert counters["phases"] == 2


def test_search_hops_through_a_doubled_edge():
    # One doubled block; reaching the unmatched row needs a relabeling
    # hop: row 1's minus space is redirected to annihilate the scanned
    # column space, column 1's plus space to annihilate that, and the
    # path then crosses the doubled edge as a single outer segment.
    g = [[1, 0], [1, 0]]
    inst = _grid(2, 2, {(1, 1): (IDENT, 0), (1, 2): (g, 0), (2, 1): (IDENT, 0)})
    m = _signed({(1, 1): 1})
    state = MatchingState(m, frozenset([(1, 1)]))
    lab = Labeling.default(FLD, 2, 2)
    ps = PotentialState(c=0)
    events = []
    counters = {}
    out = search(inst, state, lab, ps, debug=True, trace=events.append,
                 counters=counters)
    assert isinstance(out, AugmentingPath)
    assert out.path.nodes == (
        ("c", 2, 1), ("r", 1, 1), ("c", 1, 1), ("r", 2, 1))
    assert out.path.segments == ((OUTER, 0, 3),)
    assert [e["action"] for e in events] == ["hop-extend", "path-found"]
    assert counters["phases"] == 2
    # The relabeling rewired the two spaces around the doubled edge.
    assert lab.u(1, -1) == line(FLD, 1, DEFAULT_PRIME - 1)
    assert lab.v(1, 1) == line(FLD, 1, 1)
    assert not pairing_nonzero(FLD, inst.mat((1, 2)), lab.u(1, -1),
                               lab.v(2, 1))


def test_search_absorbs_a_chain_then_stops():
    # The free block reaches only the matched minus side of row 1, so the
    # search absorbs the chain edge and then runs out of candidates: with
    # both second rows zero no larger state exists.
    inst = _grid(1, 2, {(1, 1): (LOWRANK, 0), (1, 2): ([[1, 1], [0, 0]], 0)})
    m = _signed({(1, 1): 1})
    lab = Labeling.default(FLD, 1, 2)
    lab.set_u(1, -1, line(FLD, 1, 0))
    lab.set_u(1, 1, line(FLD, 0, 1))
    lab.set_v(1, -1, line(FLD, 1, 0))
    lab.set_v(1, 1, line(FLD, 0, 1))
    ps = PotentialState(c=0)
    events = []
    out = search(inst, MatchingState(m), lab, ps, debug=True,
                 trace=events.append)
    assert out == Infeasible()
    assert [e["action"] for e in events] == ["chain-extend", "infeasible"]
    assert events[0]["row"] == ["r", 1, -1]


def test_search_rearranges_after_dual_steps():
    # A three-edge chain whose end edges are one dual shift short of
    # double-tightness on one end and two on the other.  The first shift
    # extends the sources, the second makes the chain rearrangeable.
    inst = _grid(2, 2, {(1, 1): (IDENT, 0), (2, 1): (LOWRANK, 2),
                        (2, 2): (IDENT, 0)})
    m = _signed({(1, 1): 1, (2, 1): -1, (2, 2): 1})
    state = MatchingState(m)
    lab = Labeling.default(FLD, 2, 2)
    ps = PotentialState(c=0, p={("c", 1, 1): 1, ("r", 2, 1): 1})
    events = []
    counters = {}
    out = search(inst, state, lab, ps, debug=True, trace=events.append,
                 counters=counters)
    assert isinstance(out, Rearranged)
    assert out.state.matching.edges == frozenset([(1, 1), (2, 2)])
    assert out.state.doubled == frozenset([(1, 1), (2, 2)])
    assert out.state.size == 4
    assert [e["action"] for e in events] == [
        "dual-adjust", "sources-extended", "dual-adjust", "rearranged"]
    assert [e.get("eps") for e in events[:3:2]] == [1, 1]
    assert counters["phases"] == 2
    assert ps.c == -2
    assert {s: ps.p_side(s) for s in ps.nonzero_sides()} == {
        ("c", 1, 1): 2, ("c", 1, -1): 2, ("c", 2, -1): 2, ("r", 2, 1): 2}
    # The dual objective at the new size matches the determinant degree
    # of the full matrix, which is 0 for this block-triangular shape.
    assert dual_value(ps, 4) == 0


def test_search_rejects_a_full_state():
    inst = _grid(1, 1, {(1, 1): (IDENT, 5)})
    m = two_color([(1, 1)])
    state = MatchingState(m, frozenset([(1, 1)]))
    with pytest.raises(ValueError, match="spans a full part"):
        search(inst, state, Labeling.default(FLD, 1, 1), PotentialState(c=5))


def test_search_debug_rejects_rearrangeable_entry():
    inst = _grid(1, 1, {(1, 1): (IDENT, 5)})
    m = two_color([(1, 1)])
    lab = derive_valid_labeling(inst, m)
    with pytest.raises(AssertionError, match="rearrangeable"):
        search(inst, MatchingState(m), lab, PotentialState(c=5), debug=True)


def test_search_from_empty_fuzz():
    # From the empty state every column side is a source and every row
    # side a target, so any instance with a block yields a two-node path
    # in the first phase that scans successfully.
    rng = random.Random(20318)
    for _ in range(40):
        inst = random_instance(rng.randint(1, 3), rng.randint(1, 3),
                               density=0.8, dmax=6, rank1_prob=0.3,
                               seed=rng.randrange(10 ** 9))
        if not inst.blocks:
            continue
        lab = Labeling.default(inst.fld, inst.mu, inst.nu)
        ps = PotentialState.initial(inst)
        out = search(inst, MatchingState.empty(), lab, ps, debug=True)
        assert isinstance(out, AugmentingPath)
        assert len(out.path.nodes) == 2
