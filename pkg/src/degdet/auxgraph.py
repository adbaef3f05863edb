"""The auxiliary tightness graph over node sides.

Vertices are the four-per-block-row-and-column node sides; an edge joins
a row side (alpha, sa) to a column side (beta, sb) when the block at
(alpha, beta) pairs their labeled spaces nonzero AND the dual values are
tight there: p + p + c = d.  Restricted to the matching, cross-sign aux
edges are impossible (the labeling annihilates those pairs), a matching
edge of sign s always carries its (-s, -s) aux edge, and carrying the
(s, s) one as well makes it double-tight.

Tight components of unmatched sides are the search structures: each is a
same-sign path leaving the unmatched side, and their unions over
unmatched column and row sides form the source and target sets that the
path search grows between.

Pairing patterns are cached per edge, keyed by the labeling's per-node
version counters, so a rebuild after a dual-only update costs no field
arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Set, Tuple

from degdet.instance import EdgeId, Instance
from degdet.matching import (
    COL,
    ROW,
    Labeling,
    MatchingState,
    NodeSide,
    matched_spaces,
    side_sort_key,
)
from degdet.plane import apply_right
from degdet.potential import PotentialState

SINGLE = "single"
DOUBLE = "double"


def _pattern_bit(sa: int, sb: int) -> int:
    return (2 if sa < 0 else 0) | (1 if sb < 0 else 0)


class PairingCache:
    """Memoized nonzero-pairing patterns of labeled spaces per edge.

    The pattern of an edge is a 4-bit mask over sign pairs (sa, sb).  An
    entry is reused as long as neither endpoint's labels have changed,
    tracked through the Labeling version counters.
    """

    __slots__ = ("_pat",)

    def __init__(self) -> None:
        self._pat: Dict[EdgeId, Tuple[int, int, int]] = {}

    def pattern(self, inst: Instance, lab: Labeling, e: EdgeId) -> int:
        alpha, beta = e
        uver = lab.version((ROW, alpha))
        vver = lab.version((COL, beta))
        hit = self._pat.get(e)
        if hit is not None and hit[0] == uver and hit[1] == vver:
            return hit[2]
        fld = inst.fld
        a = inst.mat(e)
        mask = 0
        for sb in (1, -1):
            w0, w1 = apply_right(fld, a, lab.v(beta, sb))
            for sa in (1, -1):
                u = lab.u(alpha, sa)
                if fld.add(fld.mul(u.x0, w0), fld.mul(u.x1, w1)) != fld.zero:
                    mask |= 1 << _pattern_bit(sa, sb)
        self._pat[e] = (uver, vver, mask)
        return mask

    def nonzero(self, inst: Instance, lab: Labeling, e: EdgeId,
                sa: int, sb: int) -> bool:
        return bool(self.pattern(inst, lab, e) >> _pattern_bit(sa, sb) & 1)


@dataclass
class AuxGraph:
    """A per-phase snapshot of the tightness graph.

    adj/m_adj map each node side to its sorted aux neighbors in the full
    graph and in the restriction to matching edges; tags classify each
    matching edge as single- or double-tight.
    """

    mu: int
    nu: int
    adj: Dict[NodeSide, List[NodeSide]] = field(default_factory=dict)
    m_adj: Dict[NodeSide, List[NodeSide]] = field(default_factory=dict)
    tags: Dict[EdgeId, str] = field(default_factory=dict)
    _edges: Set[Tuple[NodeSide, NodeSide]] = field(default_factory=set)

    def has_edge(self, a: NodeSide, b: NodeSide) -> bool:
        """Whether the aux edge between a row side and a column side exists."""
        if a[0] == ROW:
            return (a, b) in self._edges
        return (b, a) in self._edges

    def neighbors(self, side: NodeSide) -> List[NodeSide]:
        return self.adj.get(side, [])

    def m_neighbors(self, side: NodeSide) -> List[NodeSide]:
        return self.m_adj.get(side, [])

    def _add(self, row_side: NodeSide, col_side: NodeSide,
             in_m: bool) -> None:
        self._edges.add((row_side, col_side))
        self.adj.setdefault(row_side, []).append(col_side)
        self.adj.setdefault(col_side, []).append(row_side)
        if in_m:
            self.m_adj.setdefault(row_side, []).append(col_side)
            self.m_adj.setdefault(col_side, []).append(row_side)


def build_aux(inst: Instance, state: MatchingState, lab: Labeling,
              ps: PotentialState, cache: PairingCache | None = None,
              ) -> AuxGraph:
    """Construct the aux graph for the current primal-dual state.

    Raises ValueError when the state is incoherent: a cross-sign pairing
    on a matching edge is nonzero (the labeling is not valid), or a
    required tight pair of a matching or doubled edge is missing.
    """
    if cache is None:
        cache = PairingCache()
    g = AuxGraph(inst.mu, inst.nu)
    c = ps.c
    for e in sorted(inst.edges):
        alpha, beta = e
        d = inst.weight_of(e)
        mask = cache.pattern(inst, lab, e)
        in_m = e in state.matching.edges
        if in_m:
            s = state.matching.sign[e]
            if (mask >> _pattern_bit(s, -s) & 1) or \
                    (mask >> _pattern_bit(-s, s) & 1):
                raise ValueError(
                    f"cross pairing nonzero on matching edge {e}")
        for sa in (1, -1):
            pa = ps.p_side((ROW, alpha, sa))
            for sb in (1, -1):
                if not mask >> _pattern_bit(sa, sb) & 1:
                    continue
                if pa + ps.p_side((COL, beta, sb)) + c != d:
                    continue
                g._add((ROW, alpha, sa), (COL, beta, sb), in_m)
        if in_m:
            s = state.matching.sign[e]
            base = g.has_edge((ROW, alpha, -s), (COL, beta, -s))
            extra = g.has_edge((ROW, alpha, s), (COL, beta, s))
            if not base:
                raise ValueError(
                    f"matching edge {e} is not tight on its base pair")
            if e in state.doubled and not extra:
                raise ValueError(f"doubled edge {e} is not double-tight")
            g.tags[e] = DOUBLE if extra else SINGLE
    for sides in (g.adj, g.m_adj):
        for side in sides:
            sides[side].sort(key=side_sort_key)
    return g


def unmatched_sides(state: MatchingState, lab: Labeling) -> Set[NodeSide]:
    """All node sides not matched by the matching-pair."""
    matched = matched_spaces(state)
    out: Set[NodeSide] = set()
    for alpha in range(1, lab.mu + 1):
        for s in (1, -1):
            if (ROW, alpha, s) not in matched:
                out.add((ROW, alpha, s))
    for beta in range(1, lab.nu + 1):
        for s in (1, -1):
            if (COL, beta, s) not in matched:
                out.add((COL, beta, s))
    return out


def tight_component(g: AuxGraph, start: NodeSide) -> List[NodeSide]:
    """The matching-restricted tight component of an unmatched side.

    Returned in path order starting at ``start``.  Raises ValueError if
    the component is not a simple same-sign path with ``start`` as an
    endpoint — which cannot happen in coherent non-rearrangeable states.
    """
    first = g.m_neighbors(start)
    if len(first) > 1:
        raise ValueError(f"tight component branches at {start}")
    path = [start]
    prev: NodeSide | None = None
    cur = start
    while True:
        step = [x for x in g.m_neighbors(cur) if x != prev]
        if not step:
            return path
        if len(step) > 1:
            raise ValueError(f"tight component branches at {cur}")
        nxt = step[0]
        if nxt in path:
            raise ValueError(f"tight component closes a cycle at {nxt}")
        if nxt[2] != start[2]:
            raise ValueError("tight component mixes signs")
        path.append(nxt)
        prev, cur = cur, nxt


def source_target_sets(g: AuxGraph, state: MatchingState, lab: Labeling,
                       ) -> Tuple[Set[NodeSide], Set[NodeSide]]:
    """The source set (from unmatched column sides) and target set (rows).

    Each is the union of the tight components of the respective unmatched
    sides.  The two are disjoint whenever no rearrangeable component
    exists; a nonempty intersection raises ValueError.
    """
    source: Set[NodeSide] = set()
    target: Set[NodeSide] = set()
    for side in sorted(unmatched_sides(state, lab), key=side_sort_key):
        comp = tight_component(g, side)
        if side[0] == COL:
            source.update(comp)
        else:
            target.update(comp)
    overlap = source & target
    if overlap:
        raise ValueError(
            f"source and target sets intersect at {sorted(overlap)}")
    return source, target


def to_dot(g: AuxGraph, state: MatchingState) -> str:
    """A DOT rendering of the aux graph for debugging."""
    def name(side: NodeSide) -> str:
        kind, idx, s = side
        return f"{kind}{idx}{'p' if s > 0 else 'm'}"

    lines = ["graph aux {"]
    for (rs, cs) in sorted(g._edges):
        e = (rs[1], cs[1])
        style = ""
        if e in state.matching.edges:
            tag = g.tags.get(e, "")
            style = f' [style=bold, label="{tag}"]'
        lines.append(f"  {name(rs)} -- {name(cs)}{style};")
    lines.append("}")
    return "\n".join(lines)