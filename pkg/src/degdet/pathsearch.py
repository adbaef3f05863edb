"""Search for an augmenting path in the tightness graph.

The search grows a forest rooted at the source set.  A primal step scans
a tight edge from a forest column side to an outside row side and either
finishes (the row side is a target), hops through a doubled edge after a
relabeling that keeps the labeling valid, or absorbs the longest
reachable chain of the matching.  When nothing is scannable, a dual step
shifts the potential by the smallest positive slack; depending on what
that opens up, the search finishes with a rearrangement, finds a path
into the enlarged target set, enlarges the source set, or proves that no
larger matching state exists.

The labeling and the potential are mutated in place; the matching state
itself is never mutated (a rearrangement returns a new one).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, List, MutableMapping, Optional, Set, Tuple, Union

from degdet.auxgraph import (
    DOUBLE,
    AuxGraph,
    PairingCache,
    build_aux,
    source_target_sets,
)
from degdet.instance import EdgeId, Instance, degrees
from degdet.matching import (
    COL,
    ROW,
    Labeling,
    MatchingState,
    NodeId,
    NodeSide,
    edge_nodes,
    side_sort_key,
    verify_valid_labeling,
)
from degdet.plane import FULL_PLANE, orth, pairing_nonzero
from degdet.potential import PotentialState, check_tight, check_zero, is_c_potential

OUTER = "outer"
INNER = "inner"

Segment = Tuple[str, int, int]
TraceFn = Callable[[dict], None]


def _step_edge(a: NodeSide, b: NodeSide) -> EdgeId:
    """The block edge under one path step between a row and a column side."""
    if a[0] == ROW:
        return (a[1], b[1])
    return (b[1], a[1])


@dataclass(frozen=True)
class AugPath:
    """An alternating source-to-target path, split into segments.

    Nodes alternate between column and row sides.  Outer segments step
    across free edges and hop through doubled edges; inner segments walk
    along a chain of the matching.  Each segment is a (kind, first,
    last) triple of node indices; consecutive segments share a boundary
    node, and a complete path starts and ends with an outer segment.
    """

    nodes: Tuple[NodeSide, ...]
    segments: Tuple[Segment, ...]

    @property
    def start(self) -> NodeSide:
        return self.nodes[0]

    @property
    def end(self) -> NodeSide:
        return self.nodes[-1]

    def edge(self, i: int) -> EdgeId:
        """The block edge under the step from nodes[i] to nodes[i + 1]."""
        return _step_edge(self.nodes[i], self.nodes[i + 1])

    def edges(self) -> List[EdgeId]:
        return [self.edge(i) for i in range(len(self.nodes) - 1)]


def build_path(state: MatchingState, nodes: List[NodeSide]) -> AugPath:
    """Group a node sequence into outer/inner segments.

    A step is inner when its block edge is a non-doubled matching edge,
    outer otherwise (free edges and doubled edges).
    """
    if not nodes:
        raise ValueError("empty path")
    segments: List[Segment] = []
    if len(nodes) == 1:
        segments.append((OUTER, 0, 0))
    lo = 0
    kind: Optional[str] = None
    for i in range(len(nodes) - 1):
        e = _step_edge(nodes[i], nodes[i + 1])
        inner = e in state.matching.edges and e not in state.doubled
        step = INNER if inner else OUTER
        if kind is None:
            kind = step
        elif step != kind:
            segments.append((kind, lo, i))
            lo, kind = i, step
    if kind is not None:
        segments.append((kind, lo, len(nodes) - 1))
    return AugPath(tuple(nodes), tuple(segments))


def _check_aux_pair(inst: Instance, lab: Labeling, ps: PotentialState,
                    e: EdgeId, sa: int, sb: int, what: str) -> None:
    alpha, beta = e
    d = inst.weight_of(e)
    total = ps.p_side((ROW, alpha, sa)) + ps.p_side((COL, beta, sb)) + ps.c
    if total != d:
        raise ValueError(f"{what}: pair ({sa}, {sb}) on {e} is not tight")
    if not pairing_nonzero(inst.fld, inst.mat(e), lab.u(alpha, sa),
                           lab.v(beta, sb)):
        raise ValueError(f"{what}: pair ({sa}, {sb}) on {e} pairs to zero")


def check_path(inst: Instance, state: MatchingState, lab: Labeling,
               ps: PotentialState, path: AugPath, *,
               source: Set[NodeSide], target: Set[NodeSide],
               truncated: bool = False) -> None:
    """Verify the structural conditions of an augmenting path.

    Checks simplicity, the segment shapes, per-step tightness and
    pairing, the annihilation condition at every row side that continues
    through a doubled edge, and the endpoint conditions.  A truncated
    path may stop early at a column side.  Raises ValueError on the
    first violation.
    """
    nodes = path.nodes
    if len(set(nodes)) != len(nodes):
        raise ValueError("path revisits a node side")
    for i in range(len(nodes) - 1):
        if nodes[i][0] == nodes[i + 1][0]:
            raise ValueError(f"path does not alternate parts at index {i}")
    if path.start[0] != COL:
        raise ValueError("path must start at a column side")
    if path.start not in source:
        raise ValueError("path does not start in the source set")
    if not truncated:
        if path.end[0] != ROW:
            raise ValueError("complete path must end at a row side")
        if path.end not in target:
            raise ValueError("complete path does not end in the target set")
    elif path.end[0] == ROW and len(nodes) > 1:
        last = _step_edge(nodes[-2], nodes[-1])
        if last in state.matching.edges:
            raise ValueError("truncated path may not stop inside a chain")
    for si, (kind, lo, hi) in enumerate(path.segments):
        if (si == 0) != (lo == 0):
            raise ValueError("segments do not tile the path")
        if si > 0 and path.segments[si - 1][2] != lo:
            raise ValueError("segments do not share boundary nodes")
        if kind == OUTER:
            if si % 2 != 0:
                raise ValueError("outer segment in an inner position")
            _check_outer_segment(inst, state, lab, ps, nodes, lo, hi,
                                 last_of_path=(si == len(path.segments) - 1),
                                 truncated=truncated)
        else:
            if si % 2 != 1:
                raise ValueError("inner segment in an outer position")
            _check_inner_segment(inst, state, lab, ps, nodes, lo, hi)
    if path.segments[-1][2] != len(nodes) - 1:
        raise ValueError("segments do not cover the path")


def _check_outer_segment(inst: Instance, state: MatchingState, lab: Labeling,
                         ps: PotentialState, nodes: Tuple[NodeSide, ...],
                         lo: int, hi: int, *, last_of_path: bool,
                         truncated: bool) -> None:
    if nodes[lo][0] != COL:
        raise ValueError("outer segment must start at a column side")
    if nodes[hi][0] != ROW and not truncated:
        raise ValueError("outer segment must end at a row side")
    for i in range(lo, hi):
        a, b = nodes[i], nodes[i + 1]
        e = _step_edge(a, b)
        free_step = (i - lo) % 2 == 0
        if free_step:
            if e in state.matching.edges:
                raise ValueError(f"expected a free edge at step {i}")
            col, row = a, b
            _check_aux_pair(inst, lab, ps, e, row[2], col[2], "outer step")
            if i + 1 < hi:
                # The path continues through a doubled edge, so the
                # opposite row space must annihilate the column space
                # just left behind.
                if pairing_nonzero(inst.fld, inst.mat(e),
                                   lab.u(row[1], -row[2]), lab.v(col[1], col[2])):
                    raise ValueError(
                        f"opposite row space does not annihilate at step {i}")
        else:
            if e not in state.doubled:
                raise ValueError(f"expected a doubled edge at step {i}")
            if a[2] != b[2]:
                raise ValueError(f"doubled-edge step changes sign at {i}")
            _check_aux_pair(inst, lab, ps, e, a[2], a[2], "doubled step")


def _check_inner_segment(inst: Instance, state: MatchingState, lab: Labeling,
                         ps: PotentialState, nodes: Tuple[NodeSide, ...],
                         lo: int, hi: int) -> None:
    sigma = nodes[lo][2]
    if nodes[lo][0] != ROW:
        raise ValueError("inner segment must start at a row side")
    if nodes[hi][0] != COL:
        raise ValueError("inner segment must end at a column side")
    for i in range(lo, hi):
        a, b = nodes[i], nodes[i + 1]
        if a[2] != sigma or b[2] != sigma:
            raise ValueError("inner segment mixes signs")
        e = _step_edge(a, b)
        if e not in state.matching.edges or e in state.doubled:
            raise ValueError(f"inner step {i} is not on a chain edge")
        sign = state.matching.sign[e]
        if a[0] == ROW:
            if sign != -sigma:
                raise ValueError(f"row-to-column chain edge {e} has sign {sign}")
        else:
            if sign != sigma:
                raise ValueError(f"column-to-row chain edge {e} has sign {sign}")
            if inst.rank_of(e) != 2:
                raise ValueError(f"chain edge {e} must be rank 2")
            _check_aux_pair(inst, lab, ps, e, -sigma, -sigma, "chain step")
        _check_aux_pair(inst, lab, ps, e, sigma, sigma, "chain step")


class SearchForest:
    """A parent-linked forest of node sides, rooted in the source set."""

    __slots__ = ("_parent",)

    def __init__(self) -> None:
        self._parent: Dict[NodeSide, Optional[NodeSide]] = {}

    def __contains__(self, side: NodeSide) -> bool:
        return side in self._parent

    def __len__(self) -> int:
        return len(self._parent)

    def nodes(self):
        return self._parent.keys()

    def roots(self) -> List[NodeSide]:
        return [s for s, par in self._parent.items() if par is None]

    def parent(self, side: NodeSide) -> Optional[NodeSide]:
        return self._parent[side]

    def add_root(self, side: NodeSide) -> None:
        if side in self._parent:
            raise ValueError(f"{side} is already in the forest")
        self._parent[side] = None

    def add_child(self, parent: NodeSide, child: NodeSide) -> None:
        if parent not in self._parent:
            raise ValueError(f"parent {parent} is not in the forest")
        if child in self._parent:
            raise ValueError(f"{child} is already in the forest")
        self._parent[child] = parent

    def path_from_root(self, side: NodeSide) -> List[NodeSide]:
        """The forest path ending at side, root first."""
        out = [side]
        cur = self._parent[side]
        while cur is not None:
            out.append(cur)
            if len(out) > len(self._parent):
                raise ValueError("parent links form a cycle")
            cur = self._parent[cur]
        out.reverse()
        return out

    def side_counts(self) -> Tuple[int, int]:
        """How many column and row sides the forest holds."""
        cols = sum(1 for s in self._parent if s[0] == COL)
        return cols, len(self._parent) - cols


@dataclass(frozen=True)
class AugmentingPath:
    """Search outcome: a path from the source set to the target set."""

    path: AugPath


@dataclass(frozen=True)
class Rearranged:
    """Search outcome: a dual shift made a chain rearrangeable."""

    state: MatchingState


@dataclass(frozen=True)
class Infeasible:
    """Search outcome: every larger matching state pairs to zero."""


SearchOutcome = Union[AugmentingPath, Rearranged, Infeasible]


def _chain_components(state: MatchingState) -> List[List[EdgeId]]:
    """Path components of the non-doubled matching, in path order.

    Each component is listed from its endpoint with the smallest node
    key, and components are ordered by that key.  Cycle components are
    skipped: they have no end edges, so they are never rearrangeable.
    """
    chain = [e for e in sorted(state.matching.edges) if e not in state.doubled]
    at: Dict[Tuple[str, int], List[EdgeId]] = {}
    for e in chain:
        at.setdefault((ROW, e[0]), []).append(e)
        at.setdefault((COL, e[1]), []).append(e)
    deg = degrees(chain)
    seen: Set[EdgeId] = set()
    comps: List[List[EdgeId]] = []
    for node in sorted(n for n, d in deg.items() if d == 1):
        e = at[node][0]
        if e in seen:
            continue
        comp = []
        cur = node
        while True:
            comp.append(e)
            seen.add(e)
            cur = (COL, e[1]) if cur[0] == ROW else (ROW, e[0])
            nxt = [x for x in at[cur] if x not in seen]
            if not nxt:
                break
            e = nxt[0]
        comps.append(comp)
    return comps


def component_of(state: MatchingState, node: NodeId) -> List[EdgeId]:
    """The non-doubled matching component through a node, as an edge list.

    A chain is listed in path order from its endpoint with the smallest
    node key; a cycle is listed in traversal order starting at ``node``.
    A node with no chain edge yields the empty list.
    """
    def chain_at(n: NodeId) -> List[EdgeId]:
        return [e for e in state.matching.node_edges(n)
                if e not in state.doubled]

    if not chain_at(node):
        return []
    comp_nodes = {node}
    stack = [node]
    while stack:
        for e in chain_at(stack.pop()):
            for n in edge_nodes(e):
                if n not in comp_nodes:
                    comp_nodes.add(n)
                    stack.append(n)
    ends = sorted(n for n in comp_nodes if len(chain_at(n)) == 1)
    cur = ends[0] if ends else node
    prev: Optional[EdgeId] = None
    out: List[EdgeId] = []
    while True:
        step = [e for e in chain_at(cur) if e != prev]
        if not step:
            return out
        e = min(step)
        out.append(e)
        cur = (COL, e[1]) if cur[0] == ROW else (ROW, e[0])
        prev = e
        if not ends and cur == node:
            return out


def is_rearrangeable(inst: Instance, state: MatchingState,
                     ps: PotentialState, comp: List[EdgeId]) -> bool:
    """Whether a chain component (as an edge list) is rearrangeable.

    True exactly when the chain has an odd number of edges and every
    edge of the end-edge sign is double-tight.  Cycles, even chains,
    and the empty list never qualify.
    """
    if not comp or len(comp) % 2 == 0:
        return False
    if len({n for e in comp for n in edge_nodes(e)}) == len(comp):
        return False
    sigma = state.matching.sign[comp[0]]
    if state.matching.sign[comp[-1]] != sigma:
        raise ValueError("chain component does not alternate signs")
    return all(_double_tight(inst, ps, e) for e in comp[0::2])


def _double_tight(inst: Instance, ps: PotentialState, e: EdgeId) -> bool:
    if inst.rank_of(e) != 2:
        return False
    alpha, beta = e
    d = inst.weight_of(e)
    return all(
        ps.p_side((ROW, alpha, s)) + ps.p_side((COL, beta, s)) + ps.c == d
        for s in (1, -1))


def find_rearrangeable(inst: Instance, state: MatchingState,
                       ps: PotentialState) -> Optional[List[EdgeId]]:
    """The first rearrangeable chain component, or None.

    A chain is rearrangeable when it has an odd number of edges and all
    its edges of the end-edge sign are double-tight.  Components are
    tried in order of their smallest node, so the pick is deterministic.
    """
    for comp in _chain_components(state):
        if is_rearrangeable(inst, state, ps, comp):
            return comp
    return None


def rearrange(state: MatchingState, comp: List[EdgeId]) -> MatchingState:
    """Trade the off-sign edges of a rearrangeable chain for doublings.

    The end-sign edges become doubled and the edges between them leave
    the matching, growing the size by exactly one.
    """
    new_matching = state.matching.with_changes(remove=comp[1::2])
    return MatchingState(new_matching, state.doubled | frozenset(comp[0::2]))


def dual_step_epsilon(inst: Instance, forest: SearchForest, lab: Labeling,
                      ps: PotentialState,
                      cache: Optional[PairingCache] = None) -> Optional[int]:
    """The smallest slack from a forest column side to an outside row side.

    Considers every pair with a nonzero pairing; returns None when there
    is no candidate at all (the dual can be pushed forever).  A
    nonpositive slack means a scannable edge still exists, which the
    caller must have exhausted, so it raises ValueError.
    """
    if cache is None:
        cache = PairingCache()
    best: Optional[int] = None
    for side in forest.nodes():
        if side[0] != COL:
            continue
        beta, sb = side[1], side[2]
        pb = ps.p_side(side)
        for e in inst.col_edges(beta):
            alpha = e[0]
            d = inst.weight_of(e)
            for sa in (1, -1):
                if (ROW, alpha, sa) in forest:
                    continue
                if not cache.nonzero(inst, lab, e, sa, sb):
                    continue
                slack = ps.p_side((ROW, alpha, sa)) + pb + ps.c - d
                if slack <= 0:
                    raise ValueError(
                        f"scannable edge remains at dual step: {e}")
                if best is None or slack < best:
                    best = slack
    return best


def apply_dual_update(forest: SearchForest, lab: Labeling,
                      ps: PotentialState, eps: int) -> None:
    """Shift the potential by eps around the forest.

    Column sides outside the forest and row sides inside it rise by eps
    while the offset drops by eps, so forest edges stay tight and the
    next-size dual objective falls by exactly eps.
    """
    if eps <= 0:
        raise ValueError("dual shift must be positive")
    for beta in range(1, lab.nu + 1):
        for s in (1, -1):
            if (COL, beta, s) not in forest:
                ps.add_p((COL, beta, s), eps)
    for alpha in range(1, lab.mu + 1):
        for s in (1, -1):
            if (ROW, alpha, s) in forest:
                ps.add_p((ROW, alpha, s), eps)
    ps.c -= eps


def _scan(g: AuxGraph, forest: SearchForest,
          nu: int) -> Optional[Tuple[NodeSide, NodeSide]]:
    """The first tight edge leaving the forest, in (beta, sign, alpha,
    sign) order with plus before minus."""
    for beta in range(1, nu + 1):
        for sb in (1, -1):
            side = (COL, beta, sb)
            if side not in forest:
                continue
            for nb in g.neighbors(side):
                if nb not in forest:
                    return side, nb
    return None


def _extend_through_doubled(inst: Instance, state: MatchingState,
                            lab: Labeling, forest: SearchForest,
                            col: NodeSide, row: NodeSide) -> NodeSide:
    """Relabel around a doubled edge and extend the forest through it.

    The opposite row space becomes the annihilator of the column space
    just scanned from, and the doubled partner's space on the entered
    sign becomes the annihilator of that.  Both rewrites keep the
    labeling valid and leave every forest edge tight.
    """
    alpha, sp = row[1], row[2]
    e = (alpha, col[1])
    doubled_at = [d for d in state.doubled if d[0] == alpha]
    if len(doubled_at) != 1:
        raise ValueError(f"row {alpha} is not on exactly one doubled edge")
    partner = doubled_at[0]
    new_u = orth(inst.fld, inst.mat(e), lab.v(col[1], col[2]), "right")
    if new_u is FULL_PLANE:
        raise ValueError(f"scanned edge {e} pairs to zero")
    lab.set_u(alpha, -sp, new_u)
    new_v = orth(inst.fld, inst.mat(partner), new_u, "left")
    if new_v is FULL_PLANE:
        raise ValueError(f"doubled edge {partner} is not rank 2")
    lab.set_v(partner[1], sp, new_v)
    far = (COL, partner[1], sp)
    forest.add_child(row, far)
    return far


def _absorb_chain(state: MatchingState, g: AuxGraph, forest: SearchForest,
                  row: NodeSide) -> None:
    """Grow the longest inner path from a freshly scanned row side.

    Alternates an opposite-signed chain edge with a double-tight
    same-signed one, stopping before any side already in the forest and
    always after a column side.
    """
    sp = row[2]
    cur = row
    while True:
        back = state.matching.edge_at((ROW, cur[1]), -sp)
        if back is None:
            raise ValueError(
                f"chain absorption expected an opposite edge at row {cur[1]}")
        col = (COL, back[1], sp)
        if col in forest:
            raise ValueError(
                f"chain absorption ran into the forest at {col}")
        forest.add_child(cur, col)
        ahead = state.matching.edge_at((COL, back[1]), sp)
        if ahead is None or g.tags[ahead] != DOUBLE:
            return
        far = (ROW, ahead[0], sp)
        if far in forest:
            return
        forest.add_child(col, far)
        cur = far


def _validate_phase(inst: Instance, state: MatchingState, lab: Labeling,
                    ps: PotentialState, g: AuxGraph, forest: SearchForest,
                    source: Set[NodeSide], target: Set[NodeSide]) -> None:
    """Assert the forest and state invariants at a phase boundary."""
    if not verify_valid_labeling(inst, state.matching, lab):
        raise AssertionError("labeling invalid at phase boundary")
    if not is_c_potential(inst, lab, ps):
        raise AssertionError("potential infeasible at phase boundary")
    if not check_tight(inst, state, ps):
        raise AssertionError("matching tightness lost at phase boundary")
    if not check_zero(state, ps):
        raise AssertionError("unmatched side carries potential")
    roots = set(forest.roots())
    for side in forest.nodes():
        if (side in source) != (side in roots):
            raise AssertionError(f"forest root structure broken at {side}")
        par = forest.parent(side)
        if par is not None and not g.has_edge(par, side):
            raise AssertionError(f"forest edge {par} - {side} is not tight")
        if side in target:
            raise AssertionError(f"forest touches the target set at {side}")
        if side[0] == COL:
            path = build_path(state, forest.path_from_root(side))
            check_path(inst, state, lab, ps, path, source=source,
                       target=target, truncated=True)
    for e in state.matching.edges:
        for s in (1, -1):
            if g.has_edge((ROW, e[0], s), (COL, e[1], s)):
                if (((ROW, e[0], s) in forest)
                        != ((COL, e[1], s) in forest)):
                    raise AssertionError(
                        f"chain edge {e} is split by the forest at sign {s}")
    cols, rows = forest.side_counts()
    if cols - rows != 2 * inst.nu - state.size:
        raise AssertionError("forest side-count balance broken")


def search(inst: Instance, state: MatchingState, lab: Labeling,
           ps: PotentialState, *, debug: bool = False,
           trace: Optional[TraceFn] = None,
           counters: Optional[MutableMapping[str, int]] = None,
           ) -> SearchOutcome:
    """Run the primal-dual search for one augmentation step.

    Requires an optimal compatible potential, a valid labeling, no
    rearrangeable chain, and a matching state smaller than both parts.
    Mutates lab and ps in place.  With debug on, every phase boundary is
    checked against the forest invariants.
    """
    k = state.size
    if k >= min(2 * inst.mu, 2 * inst.nu):
        raise ValueError("matching state already spans a full part")
    if debug and find_rearrangeable(inst, state, ps) is not None:
        raise AssertionError("rearrangeable chain at search entry")
    cache = PairingCache()
    g = build_aux(inst, state, lab, ps, cache)
    source, target = source_target_sets(g, state, lab)
    forest = SearchForest()
    for side in sorted(source, key=side_sort_key):
        forest.add_root(side)
    phases = 0
    limit = 8 * min(inst.mu, inst.nu)

    def emit(action: str, **extra) -> None:
        if trace is not None:
            trace({"action": action, "size": k, "phase": phases, **extra})

    while True:
        if debug:
            _validate_phase(inst, state, lab, ps, g, forest, source, target)
        phases += 1
        if phases > limit:
            raise RuntimeError("search exceeded its phase budget")
        if counters is not None:
            counters["phases"] = counters.get("phases", 0) + 1
        scanned = _scan(g, forest, inst.nu)
        if scanned is not None:
            col, row = scanned
            forest.add_child(col, row)
            if row in target:
                path = build_path(state, forest.path_from_root(row))
                emit("path-found", path=[list(s) for s in path.nodes])
                if debug:
                    check_path(inst, state, lab, ps, path,
                               source=source, target=target)
                return AugmentingPath(path)
            if any(e[0] == row[1] for e in state.doubled):
                far = _extend_through_doubled(inst, state, lab, forest,
                                              col, row)
                g = build_aux(inst, state, lab, ps, cache)
                emit("hop-extend", row=list(row), far=list(far))
                if debug:
                    s2, t2 = source_target_sets(g, state, lab)
                    if (s2, t2) != (source, target):
                        raise AssertionError(
                            "relabeling moved the source or target set")
            else:
                _absorb_chain(state, g, forest, row)
                emit("chain-extend", row=list(row))
            continue
        eps = dual_step_epsilon(inst, forest, lab, ps, cache)
        if eps is None:
            emit("infeasible")
            return Infeasible()
        apply_dual_update(forest, lab, ps, eps)
        emit("dual-adjust", eps=eps)
        g = build_aux(inst, state, lab, ps, cache)
        comp = find_rearrangeable(inst, state, ps)
        if comp is not None:
            emit("rearranged", chain=[list(e) for e in comp])
            return Rearranged(rearrange(state, comp))
        source, target = source_target_sets(g, state, lab)
        hits = sorted((s for s in forest.nodes() if s in target),
                      key=side_sort_key)
        if hits:
            nodes = forest.path_from_root(hits[0])
            i0 = max(i for i, s in enumerate(nodes) if s in source)
            j0 = next(j for j in range(i0 + 1, len(nodes))
                      if nodes[j] in target)
            path = build_path(state, nodes[i0:j0 + 1])
            emit("path-after-dual", path=[list(s) for s in path.nodes])
            if debug:
                check_path(inst, state, lab, ps, path,
                           source=source, target=target)
            return AugmentingPath(path)
        for side in sorted(source, key=side_sort_key):
            if side not in forest:
                forest.add_root(side)
        emit("sources-extended")
