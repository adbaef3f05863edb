"""Repair loop that turns a found augmenting path into a larger matching.

The search phase hands over a tight path from an unmatched column side to
an unmatched row side.  That path is rarely usable as-is: its tail may
revisit a doubled edge, lean on stale label spaces, or end at a node whose
matching degree forbids attaching a new edge.  This module repairs the
path in rounds.  Each round first normalizes it (restart cuts, end cuts,
end repairs), then either finishes, by rearranging the end component or by
flipping a single-outer-segment path into the matching, or performs one
repair step: rerouting around a non-invariant column side, reorganizing a
repeated doubled edge, splicing an inner detour, or absorbing the last
inner segment's chain component.

Progress is tracked by a two-part measure (outer volume, position depth)
which must strictly decrease lexicographically from round to round.  Any
breach of that measure, or of a structural invariant along the way, means
the state is corrupt and raises :class:`EngineCorruptionError`; callers
never see a silently wrong matching.

The repair primitives are front- and back-propagation of label lines
along a segment, component sign flips (a pure renaming of sides),
truncation of the path tail with absorption of the dropped edges, and the
flip-in of a short fully-normalized outer path.  Potential values are
never changed here, only renamed across sides together with the labels.
"""

from dataclasses import dataclass
from typing import Dict, List, MutableMapping, Optional, Sequence, Set, Tuple

from degdet.auxgraph import (AuxGraph, DOUBLE, build_aux, source_target_sets,
                             tight_component, unmatched_sides)
from degdet.instance import EdgeId, Instance
from degdet.matching import (COL, ROW, Labeling, MatchingState, NodeId,
                             NodeSide, check_cycle_condition, edge_nodes,
                             side_sort_key, verify_valid_labeling)
from degdet.pathsearch import (AugPath, INNER, OUTER, TraceFn, _step_edge,
                               build_path, check_path, component_of,
                               is_rearrangeable, rearrange)
from degdet.plane import FULL_PLANE, Line, left_kernel, orth, right_kernel
from degdet.potential import (PotentialState, check_tight, check_zero_prime,
                              is_c_potential)


class EngineCorruptionError(RuntimeError):
    """An internal invariant of the repair loop was violated."""


@dataclass(frozen=True)
class Propagation:
    """Lines computed along a path segment, one per node."""

    lines: Tuple[Line, ...]


@dataclass
class EngineState:
    """Mutable working state of one repair run.

    exempt is the single row side allowed to carry a nonzero potential
    on an unmatched space; the path end always lies in its tight chain.
    """

    s: MatchingState
    v: Labeling
    ps: PotentialState
    r: AugPath
    exempt: NodeSide


@dataclass(frozen=True)
class Done:
    """The repair run finished with an augmented matching."""

    state: MatchingState
    lab: Labeling


@dataclass(frozen=True)
class Continue:
    """The repair run performed one step and must run another round."""

    state: EngineState


def _emit(trace: Optional[TraceFn], action: str, **extra) -> None:
    if trace is not None:
        payload = {"action": action}
        payload.update(extra)
        trace(payload)


def _annihilator(inst: Instance, e: EdgeId, x: Line, kind: str) -> Line:
    """The line on the ``kind`` part of edge ``e`` pairing to zero with x.

    x lives on the opposite part.  Raises when the pairing degenerates to
    the full plane, which cannot happen on the edges the engine walks.
    """
    out = orth(inst.fld, inst.mat(e), x, "right" if kind == ROW else "left")
    if out is FULL_PLANE:
        raise EngineCorruptionError(f"annihilator on edge {e} is not a line")
    return out


def _build_aux_checked(inst: Instance, st: EngineState) -> AuxGraph:
    try:
        return build_aux(inst, st.s, st.v, st.ps)
    except ValueError as exc:
        raise EngineCorruptionError(str(exc)) from exc


def _tight_checked(g: AuxGraph, side: NodeSide) -> List[NodeSide]:
    try:
        return tight_component(g, side)
    except ValueError as exc:
        raise EngineCorruptionError(str(exc)) from exc


def _sources_targets_checked(g: AuxGraph, state: MatchingState,
                             lab: Labeling) -> Tuple[Set[NodeSide], Set[NodeSide]]:
    try:
        return source_target_sets(g, state, lab)
    except ValueError as exc:
        raise EngineCorruptionError(str(exc)) from exc


def _anchor(g: AuxGraph, state: MatchingState, lab: Labeling, kind: str,
            member: NodeSide) -> NodeSide:
    """The unmatched ``kind`` side whose tight chain contains ``member``."""
    for side in sorted(unmatched_sides(state, lab), key=side_sort_key):
        if side[0] != kind:
            continue
        if member in _tight_checked(g, side):
            return side
    raise EngineCorruptionError(f"no {kind}-side anchor reaches {member}")


def _row_anchor(g: AuxGraph, state: MatchingState, lab: Labeling,
                member: NodeSide) -> NodeSide:
    return _anchor(g, state, lab, ROW, member)


def _col_anchor(g: AuxGraph, state: MatchingState, lab: Labeling,
                member: NodeSide) -> NodeSide:
    return _anchor(g, state, lab, COL, member)


def engine_state(inst: Instance, s: MatchingState, v: Labeling,
                 ps: PotentialState, path: AugPath) -> EngineState:
    """Package a freshly found path into a repair-loop state."""
    g = build_aux(inst, s, v, ps)
    exempt = _row_anchor(g, s, v, path.end)
    return EngineState(s=s, v=v, ps=ps, r=path, exempt=exempt)


# ---------------------------------------------------------------------------
# propagation


def front_propagate(inst: Instance, lab: Labeling,
                    nodes: Sequence[NodeSide]) -> Propagation:
    """Push the start line of an outer segment forward, rewriting labels.

    One line is computed per node, starting from the column space at the
    segment's first node and crossing each edge by annihilation.  Column
    nodes are rewritten on their displayed sign, row nodes on the opposite
    sign; the write at the segment's final row node is skipped since the
    attachment step owns that space.  Writes happen in path order, so on a
    segment that revisits a node the later line wins.
    """
    lines: List[Line] = [lab.v(nodes[0][1], nodes[0][2])]
    for t in range(len(nodes) - 1):
        e = _step_edge(nodes[t], nodes[t + 1])
        lines.append(_annihilator(inst, e, lines[t], nodes[t + 1][0]))
    for t, n in enumerate(nodes):
        if n[0] == COL:
            lab.set_v(n[1], n[2], lines[t])
        elif t < len(nodes) - 1:
            lab.set_u(n[1], -n[2], lines[t])
    return Propagation(tuple(lines))


def _front_prop_path(inst: Instance, st: EngineState) -> None:
    """Front-propagate every outer segment of the current path."""
    for kind, lo, hi in st.r.segments:
        if kind == OUTER and hi > lo:
            front_propagate(inst, st.v, st.r.nodes[lo:hi + 1])


def back_propagate(inst: Instance, lab: Labeling,
                   nodes: Sequence[NodeSide]) -> Propagation:
    """Pull the end line of a segment backward without touching labels.

    The line at the last node is its displayed row space; each earlier
    line annihilates the next one across the connecting edge.
    """
    n = len(nodes)
    last = nodes[-1]
    lines: List[Line] = [None] * n  # type: ignore[list-item]
    lines[-1] = lab.u(last[1], last[2])
    for t in range(n - 2, -1, -1):
        e = _step_edge(nodes[t], nodes[t + 1])
        lines[t] = _annihilator(inst, e, lines[t + 1], nodes[t][0])
    return Propagation(tuple(lines))


def _apply_back_rewrite(lab: Labeling, nodes: Sequence[NodeSide],
                        lines: Sequence[Line], lo: int) -> None:
    """Store back-propagated lines: rows on the displayed sign, columns
    on the opposite sign, from position ``lo`` onward."""
    for t in range(lo, len(nodes)):
        n = nodes[t]
        if n[0] == ROW:
            lab.set_u(n[1], n[2], lines[t])
        else:
            lab.set_v(n[1], -n[2], lines[t])


# ---------------------------------------------------------------------------
# conformance checks


def bp_invariant(inst: Instance, state: EngineState, i: int) -> bool:
    """Whether the flip side of the i-th column node of the last outer
    segment is pinned independently of that segment's tail.

    It is invariant when its two potentials differ, or when its opposite
    space already equals the back-propagated line of the tail.
    """
    pm_lo = state.r.segments[-1][1]
    nodes = state.r.nodes
    beta = nodes[pm_lo + 2 * i]
    if state.ps.p_side((COL, beta[1], 1)) != state.ps.p_side((COL, beta[1], -1)):
        return True
    prop = back_propagate(inst, state.v, nodes[pm_lo + 2 * i:])
    return state.v.v(beta[1], -beta[2]) == prop.lines[0]


def check_N_outer(inst: Instance, state: EngineState) -> bool:
    """The last outer segment repeats no edge, and the flip side of each
    of its column nodes that appears on the path is back-prop invariant."""
    r = state.r
    pm_lo = r.segments[-1][1]
    nodes = r.nodes
    steps = [_step_edge(nodes[t], nodes[t + 1])
             for t in range(pm_lo, len(nodes) - 1)]
    if len(set(steps)) != len(steps):
        return False
    side_set = set(nodes)
    k = (len(nodes) - pm_lo - 2) // 2
    prop: Optional[Propagation] = None
    for i in range(k + 1):
        beta = nodes[pm_lo + 2 * i]
        if (COL, beta[1], -beta[2]) not in side_set:
            continue
        if state.ps.p_side((COL, beta[1], 1)) != state.ps.p_side((COL, beta[1], -1)):
            continue
        if prop is None:
            prop = back_propagate(inst, state.v, nodes[pm_lo:])
        if state.v.v(beta[1], -beta[2]) != prop.lines[2 * i]:
            return False
    return True


def _is_proper(g: AuxGraph, seg: Sequence[NodeSide]) -> bool:
    """Whether an outer segment's final free edge has no twin between the
    penultimate node and the flip side of the end node."""
    last = seg[-1]
    return not g.has_edge(seg[-2], (ROW, last[1], -last[2]))


def _grow_inner(g: AuxGraph, state: MatchingState, start: NodeSide,
                forward: bool) -> List[NodeSide]:
    """The maximal single-signed chain ride through matching edges.

    Grown node by node from ``start``; forward rides row-to-column over
    opposite-signed edges and column-to-row over same-signed double-tight
    edges, backward mirrors that.  The result is returned in forward
    order either way.
    """
    sg = start[2]
    out = [start]
    seen = {start}
    cur = start
    while True:
        base_like = (cur[0] == ROW) if forward else (cur[0] == COL)
        phys = (cur[0], cur[1])
        if base_like:
            e = state.matching.edge_at(phys, -sg)
        else:
            e = state.matching.edge_at(phys, sg)
            if e is not None and g.tags.get(e) != DOUBLE:
                e = None
        if e is None or e in state.doubled:
            break
        far = (COL, e[1], sg) if cur[0] == ROW else (ROW, e[0], sg)
        if not g.has_edge((ROW, e[0], sg), (COL, e[1], sg)):
            break
        if far in seen:
            break
        out.append(far)
        seen.add(far)
        cur = far
    if not forward:
        out.reverse()
    return out


def check_N_inner(inst: Instance, state: EngineState) -> bool:
    """No earlier outer segment may end on the inner chain feeding the
    last outer segment's start, unless it does so properly and with the
    start's sign.  Vacuous for short paths or a pinned start."""
    r = state.r
    outer = [seg for seg in r.segments if seg[0] == OUTER]
    m = len(outer) - 1
    if m < 2:
        return True
    if bp_invariant(inst, state, 0):
        return True
    g = _build_aux_checked(inst, state)
    nodes = r.nodes
    b0 = nodes[r.segments[-1][1]]
    q = _grow_inner(g, state.s, (COL, b0[1], -b0[2]), forward=False)
    qphys = {(n[0], n[1]) for n in q}
    for l in range(m - 1):
        lo, hi = outer[l][1], outer[l][2]
        endn = nodes[hi]
        if (ROW, endn[1]) not in qphys:
            continue
        if endn[2] != b0[2] or not _is_proper(g, nodes[lo:hi + 1]):
            return False
    return True


# ---------------------------------------------------------------------------
# progress measure


def theta(state: EngineState) -> int:
    """Outer volume: edges in outer segments plus the chain edges of the
    components met by the inner segments and the last outer segment."""
    r, s = state.r, state.s
    total = 0
    pool: Set[NodeId] = set()
    for kind, lo, hi in r.segments:
        if kind == OUTER:
            total += hi - lo
        else:
            pool.update((n[0], n[1]) for n in r.nodes[lo:hi + 1])
    lo, hi = r.segments[-1][1], r.segments[-1][2]
    pool.update((n[0], n[1]) for n in r.nodes[lo:hi + 1])
    adj: Dict[NodeId, List[EdgeId]] = {}
    for e in s.matching.edges:
        if e in s.doubled:
            continue
        for n in edge_nodes(e):
            adj.setdefault(n, []).append(e)
    seen_nodes = {n for n in pool if n in adj}
    stack = list(seen_nodes)
    seen_edges: Set[EdgeId] = set()
    while stack:
        n = stack.pop()
        for e in adj[n]:
            if e not in seen_edges:
                seen_edges.add(e)
                for n2 in edge_nodes(e):
                    if n2 not in seen_nodes:
                        seen_nodes.add(n2)
                        stack.append(n2)
    return total + len(seen_edges)


def phi(inst: Instance, state: EngineState) -> int:
    """Position depth: path length plus the distance of the path's start
    from the root of its source chain."""
    g = _build_aux_checked(inst, state)
    anchor = _col_anchor(g, state.s, state.v, state.r.start)
    comp = _tight_checked(g, anchor)
    return (len(state.r.nodes) - 1) + comp.index(state.r.start)


# ---------------------------------------------------------------------------
# state surgery primitives


def _flip_component(st: EngineState, phys: NodeId) -> None:
    """Swap the two sides of every node in a matching component.

    A pure renaming: labels and potentials trade places on each node,
    edge signs inside the component negate, and every occurrence on the
    path (and the exempt side) is renamed accordingly.
    """
    s = st.s
    unit = {phys}
    stack = [phys]
    while stack:
        n = stack.pop()
        for e in s.matching.node_edges(n):
            for n2 in edge_nodes(e):
                if n2 not in unit:
                    unit.add(n2)
                    stack.append(n2)
    changes: Dict[EdgeId, int] = {}
    for e in s.matching.edges:
        a, b = edge_nodes(e)
        ina, inb = a in unit, b in unit
        if ina and inb:
            changes[e] = -s.matching.sign[e]
        elif ina or inb:
            raise EngineCorruptionError("sign flip would split an edge")
    for n in sorted(unit):
        kind, idx = n
        if kind == ROW:
            plus, minus = st.v.u(idx, 1), st.v.u(idx, -1)
            st.v.set_u(idx, 1, minus)
            st.v.set_u(idx, -1, plus)
        else:
            plus, minus = st.v.v(idx, 1), st.v.v(idx, -1)
            st.v.set_v(idx, 1, minus)
            st.v.set_v(idx, -1, plus)
        pp = st.ps.p_side((kind, idx, 1))
        pm = st.ps.p_side((kind, idx, -1))
        if pp != pm:
            st.ps.set_p((kind, idx, 1), pm)
            st.ps.set_p((kind, idx, -1), pp)
    if changes:
        st.s = MatchingState(s.matching.with_changes(add=changes), s.doubled)
    renamed = [(n[0], n[1], -n[2]) if (n[0], n[1]) in unit else n
               for n in st.r.nodes]
    st.r = build_path(st.s, renamed)
    if (st.exempt[0], st.exempt[1]) in unit:
        st.exempt = (st.exempt[0], st.exempt[1], -st.exempt[2])


def _set_doubled_sign(st: EngineState, e: EdgeId, sign: int) -> None:
    """Normalize the stored sign of a doubled edge, a display-only move."""
    if e not in st.s.doubled:
        raise EngineCorruptionError(f"edge {e} is not doubled")
    if st.s.matching.sign[e] != sign:
        st.s = MatchingState(st.s.matching.with_changes(add={e: sign}),
                             st.s.doubled)


def _relabel_component(inst: Instance, st: EngineState, node: NodeId,
                       seed: Line, conv: int) -> None:
    """Rewrite one space per node along a chain, starting from a seed.

    The walk starts at a chain end, writes the seed on the start's
    opposite-convention side, and alternates sides down the chain with
    each value annihilating the previous across the connecting edge.  It
    stops without crossing at the first rank-1 edge, whose kernel pins
    must stay untouched.
    """
    def chain_edges(n: NodeId) -> List[EdgeId]:
        return [e for e in st.s.matching.node_edges(n)
                if e not in st.s.doubled]

    if len(chain_edges(node)) > 1:
        raise EngineCorruptionError("relabel walk must start at a chain end")
    cur, val, prev, j = node, seed, None, 0
    while True:
        sgn = -conv if j % 2 == 0 else conv
        if cur[0] == ROW:
            st.v.set_u(cur[1], sgn, val)
        else:
            st.v.set_v(cur[1], sgn, val)
        nxt = [e for e in chain_edges(cur) if e != prev]
        if not nxt:
            return
        e = nxt[0]
        if inst.rank_of(e) != 2:
            return
        far = (COL, e[1]) if cur[0] == ROW else (ROW, e[0])
        val = _annihilator(inst, e, val, far[0])
        cur, prev, j = far, e, j + 1


def _augment_simple(inst: Instance, st: EngineState,
                    nodes: Sequence[NodeSide], conv: int) -> None:
    """Flip a fully-normalized outer path into the matching.

    The path must alternate column/row on one displayed sign; its free
    edges are absorbed against the convention, its doubled edges become
    plain, both endpoint chains are relabeled from annihilator (or, on a
    rank-1 first edge, kernel) seeds, and finally the first edge joins
    the matching on the opposite sign, matching the displayed sides.
    """
    if len(nodes) < 2 or len(nodes) % 2:
        raise EngineCorruptionError("augmenting run must pair its nodes")
    for t, n in enumerate(nodes):
        if n[0] != (COL if t % 2 == 0 else ROW) or n[2] != conv:
            raise EngineCorruptionError("augmenting run is not normalized")
    steps = [_step_edge(nodes[t], nodes[t + 1]) for t in range(len(nodes) - 1)]
    m = st.s.matching
    for t, e in enumerate(steps):
        if t % 2 == 0:
            if e in m.edges:
                raise EngineCorruptionError(f"step {t} must be a free edge")
        elif e not in st.s.doubled or m.sign[e] != conv:
            raise EngineCorruptionError(f"step {t} must be doubled on {conv}")
    if len(nodes) > 2:
        prop = back_propagate(inst, st.v, nodes)
        _apply_back_rewrite(st.v, nodes, prop.lines, 1)
    add = {steps[t]: -conv for t in range(2, len(steps), 2)}
    undouble = {steps[t] for t in range(1, len(steps), 2)}
    if add or undouble:
        st.s = MatchingState(m.with_changes(add=add),
                             st.s.doubled - undouble)
    a1 = (ROW, nodes[1][1])
    b0 = (COL, nodes[0][1])
    for nd in (a1, b0):
        es = st.s.matching.node_edges(nd)
        if len(es) > 1:
            raise EngineCorruptionError(f"endpoint {nd} is too crowded")
        for e in es:
            if e in st.s.doubled or st.s.matching.sign[e] != conv:
                raise EngineCorruptionError(f"endpoint {nd} carries a bad edge")
    e0 = steps[0]
    if inst.rank_of(e0) == 1:
        x_seed = left_kernel(inst.fld, inst.mat(e0))
        y_seed = right_kernel(inst.fld, inst.mat(e0))
    else:
        x_seed = _annihilator(inst, e0, st.v.v(b0[1], conv), ROW)
        y_seed = _annihilator(inst, e0, st.v.u(a1[1], conv), COL)
    _relabel_component(inst, st, a1, x_seed, conv)
    _relabel_component(inst, st, b0, y_seed, conv)
    st.s = MatchingState(st.s.matching.with_changes(add={e0: -conv}),
                         st.s.doubled)


def _simplify_last(inst: Instance, st: EngineState, pm_lo: int, i_star: int,
                   conv: int, *, front_prop: bool = True) -> None:
    """Truncate the last outer segment after its i_star-th column node.

    The dropped tail is first committed: its labels are rewritten by
    back-propagation in the original frame, its pairs are flipped onto
    the convention sign, its free edges join the matching against the
    convention and its doubled edges become plain.  Back-propagation
    leaves the old end node untouched, so before the absorb its chain is
    relabeled from a fresh seed, exactly as when an edge is added to the
    matching.  The path is then cut so it ends at the following row
    node, which becomes the exempt side.
    """
    nodes = st.r.nodes
    k = (len(nodes) - pm_lo - 2) // 2
    suffix = nodes[pm_lo + 2 * i_star + 1:]
    if len(suffix) > 1:
        prop = back_propagate(inst, st.v, suffix)
        _apply_back_rewrite(st.v, suffix, prop.lines, 0)
    for j in range(i_star + 1, k + 1):
        fresh = st.r.nodes
        e = st.r.edge(pm_lo + 2 * j - 1)
        if fresh[pm_lo + 2 * j - 1][2] != conv:
            _flip_component(st, (ROW, fresh[pm_lo + 2 * j - 1][1]))
        _set_doubled_sign(st, e, conv)
    fresh = st.r.nodes
    if fresh[-1][2] != conv:
        _flip_component(st, (ROW, fresh[-1][1]))
    fresh = st.r.nodes
    add: Dict[EdgeId, int] = {}
    undouble: Set[EdgeId] = set()
    for j in range(i_star + 1, k + 1):
        e = _step_edge(fresh[pm_lo + 2 * j], fresh[pm_lo + 2 * j + 1])
        if e in st.s.matching.edges:
            raise EngineCorruptionError(f"tail edge {e} is not free")
        add[e] = -conv
        undouble.add(_step_edge(fresh[pm_lo + 2 * j - 1], fresh[pm_lo + 2 * j]))
    if add:
        e_end = _step_edge(fresh[-2], fresh[-1])
        if inst.rank_of(e_end) == 1:
            seed = left_kernel(inst.fld, inst.mat(e_end))
        else:
            seed = _annihilator(inst, e_end, st.v.v(fresh[-2][1], conv), ROW)
        _relabel_component(inst, st, (ROW, fresh[-1][1]), seed, conv)
    if add or undouble:
        st.s = MatchingState(st.s.matching.with_changes(add=add),
                             st.s.doubled - undouble)
    st.r = build_path(st.s, list(fresh[:pm_lo + 2 * i_star + 2]))
    st.exempt = st.r.end
    if front_prop:
        _front_prop_path(inst, st)


def _repair_tight_walk(st: EngineState, walk: Sequence[NodeSide],
                       keep: int) -> None:
    """Clear a tight chain for attachment: its edges signed against
    ``keep`` leave the matching, the rest become doubled."""
    remove: Set[EdgeId] = set()
    dbl: Set[EdgeId] = set()
    for t in range(len(walk) - 1):
        a, b = walk[t], walk[t + 1]
        e = (a[1], b[1]) if a[0] == ROW else (b[1], a[1])
        if e in st.s.doubled:
            raise EngineCorruptionError(f"tight walk crosses doubled edge {e}")
        if st.s.matching.sign[e] == -keep:
            remove.add(e)
        else:
            dbl.add(e)
    st.s = MatchingState(st.s.matching.with_changes(remove=remove),
                         st.s.doubled | dbl)


# ---------------------------------------------------------------------------
# the initial stage: finish early or normalize


def initial_stage(inst: Instance, st: EngineState,
                  trace: Optional[TraceFn] = None):
    """Finish via rearrangement if possible, else normalize the path.

    Normalization cuts the path back to its last restart point, cuts it
    off at the first premature meeting with the exempt chain, and repairs
    the end node's matching shape so an edge can attach there.  Labels
    are refreshed by front-propagation at the end of every round.
    """
    comp = component_of(st.s, (st.r.end[0], st.r.end[1]))
    if is_rearrangeable(inst, st.s, st.ps, comp):
        new_s = rearrange(st.s, comp)
        _emit(trace, "rearranged", size=new_s.size)
        return Done(new_s, st.v)

    g = _build_aux_checked(inst, st)
    source, _ = _sources_targets_checked(g, st.s, st.v)
    nodes = st.r.nodes
    for t in range(len(nodes) - 2, 0, -1):
        if nodes[t][0] == COL and nodes[t] in source:
            st.r = build_path(st.s, list(nodes[t:]))
            _emit(trace, "restart-cut", position=t)
            break

    comp_sides = set(_tight_checked(g, st.exempt))
    r = st.r
    outer = [seg for seg in r.segments if seg[0] == OUTER]
    for kind, lo, hi in outer[:-1]:
        endn = r.nodes[hi]
        if endn in comp_sides:
            st.r = build_path(st.s, list(r.nodes[:hi + 1]))
            _emit(trace, "end-cut", position=hi)
            break
        flipped = (ROW, endn[1], -endn[2])
        if not _is_proper(g, r.nodes[lo:hi + 1]) and flipped in comp_sides:
            st.r = build_path(st.s, list(r.nodes[:hi]) + [flipped])
            _emit(trace, "end-cut", position=hi)
            break

    end = st.r.end
    es = st.s.matching.node_edges((ROW, end[1]))
    if len(es) == 2 or (len(es) == 1 and (es[0] in st.s.doubled
                                          or st.s.matching.sign[es[0]] != end[2])):
        walk = _tight_checked(g, st.exempt)
        try:
            walk = walk[:walk.index(end) + 1]
        except ValueError as exc:
            raise EngineCorruptionError("path end left the exempt chain") from exc
        _repair_tight_walk(st, walk, end[2])
        st.r = build_path(st.s, list(st.r.nodes))
        st.exempt = end
        _emit(trace, "end-repair", end=end)

    _front_prop_path(inst, st)
    return Continue(st)


# ---------------------------------------------------------------------------
# the base case: a single simple outer segment


def base_case(inst: Instance, st: EngineState,
              trace: Optional[TraceFn] = None) -> Done:
    """Flip a single-outer-segment path into the matching and finish."""
    if len(st.r.segments) != 1:
        raise EngineCorruptionError("base case needs a single-segment path")
    _simplify_last(inst, st, 0, 0, 1)
    if st.r.nodes[0][2] == -1:
        _flip_component(st, (COL, st.r.nodes[0][1]))
        if st.r.nodes[1][2] != 1:
            raise EngineCorruptionError("start flip disturbed the path end")
    start = st.r.nodes[0]
    es = st.s.matching.node_edges((COL, start[1]))
    if len(es) == 2 or (len(es) == 1 and (es[0] in st.s.doubled
                                          or st.s.matching.sign[es[0]] != start[2])):
        g = _build_aux_checked(inst, st)
        anchor = _col_anchor(g, st.s, st.v, start)
        walk = _tight_checked(g, anchor)
        walk = walk[:walk.index(start) + 1]
        _repair_tight_walk(st, walk, start[2])
        st.r = build_path(st.s, list(st.r.nodes))
    _augment_simple(inst, st, list(st.r.nodes), 1)
    _emit(trace, "base-augment")
    if not check_cycle_condition(inst, st.s.matching):
        raise EngineCorruptionError("augmentation closed a rank-2 cycle")
    return Done(st.s, st.v)


# ---------------------------------------------------------------------------
# repairs for a non-conforming path


def _repeat_split(st: EngineState) -> Tuple[int, Optional[int]]:
    """Locate the repeated doubled edge of the last outer segment.

    Returns (i, j) where the segment's i-th doubled step reappears as its
    j-th, or (0, None) when the segment repeats nothing.
    """
    r = st.r
    pm_lo = r.segments[-1][1]
    nodes = r.nodes
    steps = [_step_edge(nodes[t], nodes[t + 1])
             for t in range(pm_lo, len(nodes) - 1)]
    k = (len(nodes) - pm_lo - 2) // 2
    i_star = None
    for i in range(k + 1):
        tail = steps[2 * i + 1:]
        if len(set(tail)) == len(tail):
            i_star = i
            break
    if i_star is None:
        raise EngineCorruptionError("segment tail never becomes simple")
    if i_star == 0:
        if len(set(steps)) == len(steps):
            return 0, None
        raise EngineCorruptionError("free edge repeats in the last segment")
    e = steps[2 * i_star - 1]
    if e not in st.s.doubled:
        raise EngineCorruptionError("repeated step is not a doubled edge")
    occ = [t for t, e2 in enumerate(steps) if e2 == e]
    if len(occ) != 2 or occ[0] != 2 * i_star - 1 or occ[1] % 2 == 0:
        raise EngineCorruptionError("doubled edge repeats in a bad pattern")
    if steps.count(steps[2 * i_star]) != 1:
        raise EngineCorruptionError("free edge repeats in the last segment")
    j_star = (occ[1] + 1) // 2
    if nodes[pm_lo + 2 * i_star][2] != -nodes[pm_lo + 2 * j_star][2]:
        raise EngineCorruptionError("repeated edge rides one sign twice")
    return i_star, j_star


def _reroute_outer(inst: Instance, st: EngineState, pm_lo: int, i: int,
                   trace: Optional[TraceFn]) -> Continue:
    """Shortcut the path through the flip side of a non-invariant column
    node of the last outer segment."""
    _simplify_last(inst, st, pm_lo, i, 1)
    nodes = st.r.nodes
    beta = nodes[-2]
    target = (COL, beta[1], -beta[2])
    end = nodes[-1]
    g = _build_aux_checked(inst, st)
    if not g.has_edge(end, target):
        raise EngineCorruptionError("shortcut edge is missing")
    try:
        idx = nodes.index(target)
    except ValueError as exc:
        raise EngineCorruptionError("flip side left the path") from exc
    if idx >= len(nodes) - 2:
        raise EngineCorruptionError("shortcut does not shorten the path")
    st.r = build_path(st.s, list(nodes[:idx + 1]) + [end])
    _front_prop_path(inst, st)
    _emit(trace, "outer-reroute", index=i)
    return Continue(st)


def _reorganize_outer(inst: Instance, st: EngineState, pm_lo: int,
                      i_star: int, j_star: int,
                      trace: Optional[TraceFn]) -> Continue:
    """Resolve a doubled edge ridden twice by the last outer segment.

    The repeated edge leaves the matching, the loop between its two
    visits and the following pair are flipped in as two normalized runs,
    and the path is cut back to where the loop's new chain departs it.
    """
    sigma_i = st.r.nodes[pm_lo + 2 * i_star][2]
    _simplify_last(inst, st, pm_lo, j_star, 1)
    e = st.r.edge(pm_lo + 2 * i_star - 1)
    if e not in st.s.doubled:
        raise EngineCorruptionError("repeated step is no longer doubled")
    st.s = MatchingState(st.s.matching.with_changes(remove=[e]),
                         st.s.doubled - {e})
    st.r = build_path(st.s, list(st.r.nodes))
    a_phys, b_phys = e
    if sigma_i == -1:
        _flip_component(st, (ROW, a_phys))
    else:
        _flip_component(st, (COL, b_phys))
    for j in range(i_star + 1, j_star):
        fresh = st.r.nodes
        ej = st.r.edge(pm_lo + 2 * j - 1)
        if fresh[pm_lo + 2 * j - 1][2] == 1:
            _flip_component(st, (ROW, fresh[pm_lo + 2 * j - 1][1]))
        _set_doubled_sign(st, ej, -1)
    nodes = st.r.nodes
    if nodes[pm_lo + 2 * j_star + 1][2] != 1:
        raise EngineCorruptionError("pair after the loop lost its sign")
    if nodes[pm_lo + 2 * i_star - 1] != (ROW, a_phys, 1):
        raise EngineCorruptionError("loop entry lost its sign")
    loop_nodes = list(nodes[pm_lo + 2 * i_star: pm_lo + 2 * j_star])
    last_pair = [nodes[pm_lo + 2 * j_star], nodes[pm_lo + 2 * j_star + 1]]
    endpos = pm_lo + 2 * i_star - 1
    kstar = j_star
    t = 1
    while kstar - 1 >= i_star + 1 and endpos - 2 * t > pm_lo:
        k2 = kstar - 1
        a_k2 = loop_nodes[2 * (k2 - i_star) - 1][1]
        b_k2 = loop_nodes[2 * (k2 - i_star)][1]
        if nodes[endpos - 2 * t] == (ROW, a_k2, 1) and \
                nodes[endpos - 2 * t + 1] == (COL, b_k2, 1):
            kstar = k2
            t += 1
        else:
            break
    cut = endpos - 2 * (j_star - kstar)
    _augment_simple(inst, st, loop_nodes, -1)
    _augment_simple(inst, st, last_pair, 1)
    st.r = build_path(st.s, list(nodes[:cut + 1]))
    st.exempt = (ROW, a_phys, 1)
    _front_prop_path(inst, st)
    _emit(trace, "outer-reorganize", entry=i_star, repeat=j_star)
    return Continue(st)


def _handle_outer_violation(inst: Instance, st: EngineState,
                            trace: Optional[TraceFn]) -> Continue:
    r = st.r
    pm_lo = r.segments[-1][1]
    nodes = r.nodes
    i_star, j_star = _repeat_split(st)
    k = (len(nodes) - pm_lo - 2) // 2
    side_set = set(nodes)
    prop: Optional[Propagation] = None
    for i in range(k, i_star, -1):
        beta = nodes[pm_lo + 2 * i]
        if (COL, beta[1], -beta[2]) not in side_set:
            continue
        if st.ps.p_side((COL, beta[1], 1)) != st.ps.p_side((COL, beta[1], -1)):
            continue
        if prop is None:
            prop = back_propagate(inst, st.v, nodes[pm_lo:])
        if st.v.v(beta[1], -beta[2]) != prop.lines[2 * i]:
            return _reroute_outer(inst, st, pm_lo, i, trace)
    if j_star is not None:
        return _reorganize_outer(inst, st, pm_lo, i_star, j_star, trace)
    raise EngineCorruptionError("outer violation with no applicable repair")


def _inner_reroute(inst: Instance, st: EngineState,
                   trace: Optional[TraceFn]) -> Continue:
    """Splice the path onto the inner chain feeding its last segment.

    The earliest offending outer segment is cut (onto its end's flip
    side when it ended with the wrong twin), continued along the chain
    to the last segment's start, and reattached to the end pair through
    the flip-side edge that the failed invariance guarantees.
    """
    pm_lo = st.r.segments[-1][1]
    _simplify_last(inst, st, pm_lo, 0, 1)
    if bp_invariant(inst, st, 0):
        raise EngineCorruptionError("inner violation vanished under truncation")
    g = _build_aux_checked(inst, st)
    nodes = st.r.nodes
    b0 = nodes[pm_lo]
    q = _grow_inner(g, st.s, (COL, b0[1], -b0[2]), forward=False)
    qphys = {(n[0], n[1]) for n in q}
    outer = [seg for seg in st.r.segments if seg[0] == OUTER]
    m = len(outer) - 1
    for l in range(m - 1):
        lo, hi = outer[l][1], outer[l][2]
        endn = nodes[hi]
        if (ROW, endn[1]) not in qphys:
            continue
        if endn[2] == b0[2] and _is_proper(g, nodes[lo:hi + 1]):
            continue
        if endn[2] != b0[2]:
            prefix = list(nodes[:hi + 1])
        else:
            prefix = list(nodes[:hi]) + [(ROW, endn[1], -b0[2])]
        end = nodes[pm_lo + 1]
        if not g.has_edge(end, (COL, b0[1], -b0[2])):
            raise EngineCorruptionError("flip-side attachment edge is missing")
        splice = q[q.index((ROW, endn[1], -b0[2])):]
        st.r = build_path(st.s, prefix + splice[1:] + [end])
        _front_prop_path(inst, st)
        _emit(trace, "inner-reroute", segment=l)
        return Continue(st)
    raise EngineCorruptionError("no outer segment meets the inner chain")


def handle_violation(inst: Instance, st: EngineState,
                     trace: Optional[TraceFn] = None) -> Continue:
    """Repair one failed conformance check, preferring the outer one."""
    if not check_N_outer(inst, st):
        return _handle_outer_violation(inst, st, trace)
    return _inner_reroute(inst, st, trace)


# ---------------------------------------------------------------------------
# repairs for a conforming path


def _cycle_augment(inst: Instance, st: EngineState, qm_lo: int, pm_lo: int,
                   e_del: EdgeId, alpha_prev: NodeSide,
                   trace: Optional[TraceFn]) -> Continue:
    _simplify_last(inst, st, pm_lo, 0, -1, front_prop=False)
    nodes = st.r.nodes
    pm2 = [nodes[pm_lo], nodes[pm_lo + 1]]
    if pm2[0][2] != -1 or pm2[1][2] != -1:
        raise EngineCorruptionError("last segment resisted normalization")
    st.s = MatchingState(st.s.matching.with_changes(remove=[e_del]),
                         st.s.doubled)
    _augment_simple(inst, st, pm2, -1)
    st.r = build_path(st.s, list(nodes[:qm_lo + 1]))
    st.exempt = (ROW, alpha_prev[1], -1)
    _front_prop_path(inst, st)
    _emit(trace, "cycle-augment")
    return Continue(st)


def _path_augment(inst: Instance, st: EngineState, qm_lo: int, pm_lo: int,
                  e_del: EdgeId, alpha_prev: NodeSide,
                  trace: Optional[TraceFn]) -> Continue:
    b0_phys = st.r.nodes[pm_lo][1]
    if st.r.nodes[pm_lo][2] != -1:
        raise EngineCorruptionError("segment start lost its sign")
    st.s = MatchingState(st.s.matching.with_changes(remove=[e_del]),
                         st.s.doubled)
    st.r = build_path(st.s, list(st.r.nodes))
    _flip_component(st, (COL, b0_phys))
    _simplify_last(inst, st, pm_lo, 0, 1, front_prop=False)
    nodes = st.r.nodes
    if nodes[pm_lo] != (COL, b0_phys, 1) or nodes[pm_lo + 1][2] != 1:
        raise EngineCorruptionError("last segment resisted normalization")
    _augment_simple(inst, st, [nodes[pm_lo], nodes[pm_lo + 1]], 1)
    g = _build_aux_checked(inst, st)
    source, _ = _sources_targets_checked(g, st.s, st.v)
    b_start = st.r.nodes[0]
    if b_start in source:
        rhat = list(st.r.nodes[:qm_lo + 1])
    else:
        if not g.has_edge((ROW, alpha_prev[1], 1), (COL, b0_phys, -1)):
            raise EngineCorruptionError("freed edge lost its flip-side pair")
        q = _grow_inner(g, st.s, (ROW, alpha_prev[1], 1), forward=True)
        if b_start[2] != 1 or b_start not in q:
            raise EngineCorruptionError("path start is not on the freed chain")
        rhat = ([(COL, b0_phys, -1)] + q[:q.index(b_start) + 1]
                + list(st.r.nodes[1:qm_lo + 1]))
    st.r = build_path(st.s, rhat)
    st.exempt = (ROW, alpha_prev[1], -1)
    _front_prop_path(inst, st)
    _emit(trace, "path-augment")
    return Continue(st)


def handle_conforming(inst: Instance, st: EngineState,
                      trace: Optional[TraceFn] = None) -> Continue:
    """Absorb the chain component behind the last outer segment.

    The edge joining the last inner segment to the segment start leaves
    the matching and the freed two-node segment is flipped in; the path
    retreats to the previous outer segment, rerouting over the freed
    chain when the retreat would lose its source certificate.
    """
    segs = st.r.segments
    if len(segs) < 2 or segs[-2][0] != INNER:
        raise EngineCorruptionError("conforming path has no inner segment")
    qm_lo, pm_lo = segs[-2][1], segs[-1][1]
    if st.r.nodes[pm_lo][2] == 1:
        _flip_component(st, (COL, st.r.nodes[pm_lo][1]))
    b0 = st.r.nodes[pm_lo]
    if b0[2] != -1:
        raise EngineCorruptionError("segment start resisted normalization")
    alpha_prev = st.r.nodes[pm_lo - 1]
    e_del = st.r.edge(pm_lo - 1)
    m = st.s.matching
    if e_del not in m.edges or e_del in st.s.doubled or m.sign[e_del] != 1:
        raise EngineCorruptionError("joint edge has a bad shape")
    comp = component_of(st.s, (COL, b0[1]))
    comp_nodes = {n for e in comp for n in edge_nodes(e)}
    if comp and len(comp_nodes) == len(comp):
        return _cycle_augment(inst, st, qm_lo, pm_lo, e_del, alpha_prev, trace)
    return _path_augment(inst, st, qm_lo, pm_lo, e_del, alpha_prev, trace)


# ---------------------------------------------------------------------------
# driver loop


def _verify_state(inst: Instance, st: EngineState) -> None:
    """Check every structural invariant of the working state."""
    g = _build_aux_checked(inst, st)
    if not verify_valid_labeling(inst, st.s.matching, st.v):
        raise EngineCorruptionError("labeling is not valid for the matching")
    if not is_c_potential(inst, st.v, st.ps):
        raise EngineCorruptionError("potential lost feasibility")
    if not check_tight(inst, st.s, st.ps):
        raise EngineCorruptionError("matching edge lost tightness")
    if not check_zero_prime(st.s, st.ps, st.exempt):
        raise EngineCorruptionError("nonzero potential outside the exempt side")
    if not check_cycle_condition(inst, st.s.matching):
        raise EngineCorruptionError("matching closed a rank-2 cycle")
    source, target = _sources_targets_checked(g, st.s, st.v)
    try:
        check_path(inst, st.s, st.v, st.ps, st.r,
                   source=source, target=target)
    except ValueError as exc:
        raise EngineCorruptionError(str(exc)) from exc
    if st.exempt[0] != ROW:
        raise EngineCorruptionError("exempt side is not a row side")
    if st.r.end not in _tight_checked(g, st.exempt):
        raise EngineCorruptionError("path end left the exempt chain")


def augment(inst: Instance, state: EngineState, *, debug: bool = False,
            trace: Optional[TraceFn] = None,
            counters: Optional[MutableMapping[str, int]] = None,
            ) -> Tuple[MatchingState, Labeling]:
    """Repair the path until the matching grows by one, then return it.

    Runs normalization and at most one repair per round, enforcing the
    strict decrease of the progress measure and a hard round bound.  With
    debug set, every round revalidates the full state first.
    """
    entry_size = state.s.size
    limit = 8 * min(inst.mu, inst.nu) ** 2
    iteration = 0
    prev: Optional[Tuple[int, int]] = None
    while True:
        if debug:
            _verify_state(inst, state)
        res = initial_stage(inst, state, trace)
        if isinstance(res, Done):
            break
        state = res.state
        iteration += 1
        if iteration > limit:
            raise EngineCorruptionError("repair loop exceeded its round bound")
        if counters is not None:
            counters["engine_iterations"] = \
                counters.get("engine_iterations", 0) + 1
        measure = (theta(state), phi(inst, state))
        if prev is not None and measure >= prev:
            raise EngineCorruptionError("progress measure failed to decrease")
        prev = measure
        _emit(trace, "engine-iteration", iteration=iteration,
              theta=measure[0], phi=measure[1], size=state.s.size)
        if not check_N_outer(inst, state) or not check_N_inner(inst, state):
            res = handle_violation(inst, state, trace)
        elif sum(1 for seg in state.r.segments if seg[0] == OUTER) == 1:
            res = base_case(inst, state, trace)
        else:
            res = handle_conforming(inst, state, trace)
        if isinstance(res, Done):
            break
        state = res.state
    if res.state.size != entry_size + 1:
        raise EngineCorruptionError("augmentation did not grow the matching")
    if debug:
        if not verify_valid_labeling(inst, res.state.matching, res.lab):
            raise EngineCorruptionError("final labeling is not valid")
        if not is_c_potential(inst, res.lab, state.ps):
            raise EngineCorruptionError("final potential lost feasibility")
        if not check_tight(inst, res.state, state.ps):
            raise EngineCorruptionError("final matching edge lost tightness")
        if not check_cycle_condition(inst, res.state.matching):
            raise EngineCorruptionError("final matching closed a rank-2 cycle")
    return res.state, res.lab
