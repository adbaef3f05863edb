"""Pseudo-matchings, signed edges, valid labelings, and matching-pairs.

A pseudo-matching is an edge set in which every node has degree at most
two and, because the block grid is bipartite, it decomposes into simple
paths and even cycles.  Its edges are 2-colored with signs + and - so
that incident edges always differ; the sign of an edge selects which of
the two labeled subspaces at each endpoint it constrains.

A valid labeling assigns two distinct Lines to every row node (U+, U-)
and every column node (V+, V-) such that on every matching edge the
cross pairs annihilate (A(U+, V-) = A(U-, V+) = {0}) and on every
rank-1 matching edge of sign s the s-sides equal the left and right
kernels of the block.

A matching-pair adds the set of isolated rank-2 edges counted twice;
its weight and matched sides are what the optimality theory speaks
about.

Node naming: a node is ('r', alpha) or ('c', beta); a node side is
('r', alpha, sigma) with sigma in {+1, -1}.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, Mapping, Optional, Tuple

from collections import deque

from degdet.field import Field, PrimeField
from degdet.instance import MAX_WEIGHT, EdgeId, Instance, degrees
from degdet.plane import (
    FULL_PLANE,
    Line,
    left_kernel,
    orth,
    pairing_nonzero,
    right_kernel,
)

Sign = int
NodeId = Tuple[str, int]
NodeSide = Tuple[str, int, int]

ROW = "r"
COL = "c"


def edge_nodes(e: EdgeId) -> Tuple[NodeId, NodeId]:
    """The row node and column node of an edge, in that order."""
    return (ROW, e[0]), (COL, e[1])


def side_sort_key(side: NodeSide):
    """Deterministic ordering of node sides: by node, + before -."""
    kind, idx, sigma = side
    return (kind, idx, 0 if sigma > 0 else 1)


class InfeasibleLabelingError(Exception):
    """No valid labeling exists for the given signed matching."""


@dataclass(frozen=True)
class SignedMatching:
    """A pseudo-matching with a proper +/- edge coloring.

    Every node has degree at most 2 in ``edges`` and incident edges
    carry opposite signs, so a node sees at most one edge of each sign.
    """

    edges: frozenset
    sign: Mapping[EdgeId, Sign]

    def __post_init__(self) -> None:
        if set(self.sign) != set(self.edges):
            raise ValueError("sign map must cover exactly the edge set")
        if any(s not in (1, -1) for s in self.sign.values()):
            raise ValueError("signs must be +1 or -1")
        at: Dict[Tuple[NodeId, Sign], EdgeId] = {}
        for e in self.edges:
            s = self.sign[e]
            for node in edge_nodes(e):
                if (node, s) in at:
                    raise ValueError(
                        f"improper coloring: node {node} has two {s:+d} edges")
                at[(node, s)] = e
        for node, d in degrees(self.edges).items():
            if d > 2:
                raise ValueError(f"node {node} has degree {d} > 2")
        object.__setattr__(self, "_at", at)

    @classmethod
    def empty(cls) -> "SignedMatching":
        return cls(frozenset(), {})

    def edge_at(self, node: NodeId, sigma: Sign) -> Optional[EdgeId]:
        """The unique edge of sign sigma at node, or None."""
        return self._at.get((node, sigma))

    def node_edges(self, node: NodeId) -> list[EdgeId]:
        out = []
        for sigma in (1, -1):
            e = self._at.get((node, sigma))
            if e is not None:
                out.append(e)
        return out

    def with_changes(self, add: Optional[Mapping[EdgeId, Sign]] = None,
                     remove: Iterable[EdgeId] = ()) -> "SignedMatching":
        """A new matching with edges removed and signed edges added."""
        gone = set(remove)
        sign = {e: s for e, s in self.sign.items() if e not in gone}
        for e, s in (add or {}).items():
            sign[e] = s
        return SignedMatching(frozenset(sign), sign)


def two_color(edges: Iterable[EdgeId]) -> SignedMatching:
    """Properly 2-color a pseudo-matching, deterministically.

    Each path or cycle component is oriented from its lexicographically
    smallest node side key; the smallest incident edge there gets +, and
    signs alternate outward.  Raises ValueError if a node has degree 3
    or more (the coloring cannot exist) .
    """
    edges = sorted(set(edges))
    adj: Dict[NodeId, list[EdgeId]] = {}
    for e in edges:
        for node in edge_nodes(e):
            adj.setdefault(node, []).append(e)
    for node, es in adj.items():
        if len(es) > 2:
            raise ValueError(f"node {node} has degree {len(es)} > 2")
    sign: Dict[EdgeId, Sign] = {}
    for start in sorted(adj):
        if any(e in sign for e in adj[start]):
            continue
        # Color the whole component by BFS from the smallest node; the
        # graph is bipartite so cycles are even and alternation closes.
        queue: deque = deque()
        for s, e in zip((1, -1), adj[start]):
            sign[e] = s
            queue.append((start, e))
        while queue:
            node, e = queue.popleft()
            rnode, cnode = edge_nodes(e)
            nxt = rnode if cnode == node else cnode
            for f in adj[nxt]:
                if f not in sign:
                    sign[f] = -sign[e]
                    queue.append((nxt, f))
    return SignedMatching(frozenset(sign), sign)


def _components(m: SignedMatching) -> list[list[EdgeId]]:
    """Connected components of m as edge lists, deterministic order."""
    seen: set[EdgeId] = set()
    comps = []
    for e0 in sorted(m.edges):
        if e0 in seen:
            continue
        comp = []
        stack = [e0]
        seen.add(e0)
        while stack:
            e = stack.pop()
            comp.append(e)
            for node in edge_nodes(e):
                for f in m.node_edges(node):
                    if f not in seen:
                        seen.add(f)
                        stack.append(f)
        comps.append(sorted(comp))
    return comps


def _is_cycle(comp: list[EdgeId]) -> bool:
    return all(d == 2 for d in degrees(comp).values())


def check_cycle_condition(inst: Instance, m: SignedMatching) -> bool:
    """Whether every cycle component of m contains a rank-1 edge."""
    for comp in _components(m):
        if _is_cycle(comp) and all(inst.rank_of(e) == 2 for e in comp):
            return False
    return True


class Labeling:
    """Two distinct Lines per node: (U+, U-) on rows, (V+, V-) on columns.

    Mutable; the solver updates sides in place during augmentation.  A
    per-node version counter is bumped on every change so that derived
    caches (pairing patterns) can be invalidated cheaply.
    """

    __slots__ = ("fld", "mu", "nu", "_side", "_ver")

    def __init__(self, fld: Field, mu: int, nu: int) -> None:
        self.fld = fld
        self.mu = mu
        self.nu = nu
        self._side: Dict[NodeSide, Line] = {}
        self._ver: Dict[NodeId, int] = {}

    @classmethod
    def default(cls, fld: Field, mu: int, nu: int) -> "Labeling":
        """The all-canonical labeling: + side span(1,0), - side span(0,1)."""
        lab = cls(fld, mu, nu)
        plus = Line(fld.one, fld.zero)
        minus = Line(fld.zero, fld.one)
        for alpha in range(1, mu + 1):
            lab._side[(ROW, alpha, 1)] = plus
            lab._side[(ROW, alpha, -1)] = minus
        for beta in range(1, nu + 1):
            lab._side[(COL, beta, 1)] = plus
            lab._side[(COL, beta, -1)] = minus
        return lab

    # -- access -------------------------------------------------------------

    def u(self, alpha: int, sigma: Sign) -> Line:
        return self._side[(ROW, alpha, sigma)]

    def v(self, beta: int, sigma: Sign) -> Line:
        return self._side[(COL, beta, sigma)]

    def side(self, s: NodeSide) -> Line:
        return self._side[s]

    def has_side(self, s: NodeSide) -> bool:
        return s in self._side

    def set_side(self, s: NodeSide, value: Line) -> None:
        if not isinstance(value, Line):
            raise TypeError(f"labels must be Lines, got {value!r}")
        self._side[s] = value
        node = s[:2]
        self._ver[node] = self._ver.get(node, 0) + 1

    def set_u(self, alpha: int, sigma: Sign, value: Line) -> None:
        self.set_side((ROW, alpha, sigma), value)

    def set_v(self, beta: int, sigma: Sign, value: Line) -> None:
        self.set_side((COL, beta, sigma), value)

    def version(self, node: NodeId) -> int:
        return self._ver.get(node, 0)

    def sides(self) -> Iterable[Tuple[NodeSide, Line]]:
        return self._side.items()

    def clone(self) -> "Labeling":
        lab = Labeling(self.fld, self.mu, self.nu)
        lab._side = dict(self._side)
        lab._ver = dict(self._ver)
        return lab

    def distinct_everywhere(self) -> bool:
        """Whether U+ != U- and V+ != V- at every labeled node."""
        for kind, idx, sigma in self._side:
            if sigma == 1:
                other = self._side.get((kind, idx, -1))
                if other is not None and other == self._side[(kind, idx, 1)]:
                    return False
        return True

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, Labeling) and other.fld == self.fld
                and other._side == self._side)

    def __repr__(self) -> str:
        return f"Labeling({len(self._side)} sides)"


def _partner_side(e: EdgeId, from_side: NodeSide) -> NodeSide:
    """The side tied to from_side across a rank-2 matching edge.

    The cross-pair annihilation links (alpha, sigma) to (beta, -sigma):
    each label determines the other through the block's pairing.
    """
    kind, idx, sigma = from_side
    return (COL, e[1], -sigma) if kind == ROW else (ROW, e[0], -sigma)


def _propagated_value(inst: Instance, value: Line, e: EdgeId,
                      from_side: NodeSide) -> Line:
    """The label forced at the partner side by ``value`` at from_side."""
    out = orth(inst.fld, inst.mat(e), value,
               "left" if from_side[0] == ROW else "right")
    assert out is not FULL_PLANE, "rank-2 blocks annihilate no Lines"
    return out


def _candidate_lines(fld: Field, preferred: Optional[Line]):
    """Seed candidates for a free label, canonical ones first."""
    if preferred is not None:
        yield preferred
    yield Line(fld.one, fld.zero)
    yield Line(fld.zero, fld.one)
    x = 1
    while True:
        yield Line(fld.one, fld.from_int(x))
        x += 1


def derive_valid_labeling(
    inst: Instance,
    m: SignedMatching,
    seeds: Optional[Mapping[NodeSide, Line]] = None,
) -> Labeling:
    """Construct a valid labeling for m, or raise InfeasibleLabelingError.

    Rank-1 edges of sign s pin the s-sides of their endpoints to the
    block kernels; the cross-pair conditions propagate labels along runs
    of rank-2 matching edges; every remaining side is free and filled
    from ``seeds`` (keyed by the smallest side of its run) or canonical
    defaults, avoiding collisions with the opposite side everywhere.
    """
    fld = inst.fld
    seeds = dict(seeds or {})
    forced: Dict[NodeSide, Line] = {}

    def force(s: NodeSide, value: Line) -> None:
        old = forced.get(s)
        if old is not None and old != value:
            raise InfeasibleLabelingError(
                f"side {s} is over-determined: {old} vs {value}")
        forced[s] = value

    # Pins from rank-1 edges.
    for e in sorted(m.edges):
        if inst.rank_of(e) != 1:
            continue
        sigma = m.sign[e]
        a = inst.mat(e)
        alpha, beta = e
        force((ROW, alpha, sigma), left_kernel(fld, a))
        force((COL, beta, sigma), right_kernel(fld, a))

    # Propagate pins along rank-2 runs until stable.
    def propagate_from(s: NodeSide) -> None:
        frontier = [s]
        while frontier:
            cur = frontier.pop()
            for e in m.node_edges(cur[:2]):
                if inst.rank_of(e) != 2:
                    continue
                to_side = _partner_side(e, cur)
                value = _propagated_value(inst, forced[cur], e, cur)
                if to_side in forced:
                    if forced[to_side] != value:
                        raise InfeasibleLabelingError(
                            f"side {to_side} is over-determined")
                    continue
                forced[to_side] = value
                frontier.append(to_side)

    for s in sorted(forced, key=side_sort_key):
        propagate_from(s)

    # Check pinned distinctness before assigning free sides.
    lab = Labeling(fld, inst.mu, inst.nu)
    for s, value in forced.items():
        kind, idx, sigma = s
        partner = forced.get((kind, idx, -sigma))
        if partner is not None and partner == value:
            raise InfeasibleLabelingError(
                f"node ({kind},{idx}) would have equal + and - labels")
        lab._side[s] = value

    # Enumerate free runs: maximal chains of unfixed sides linked across
    # rank-2 matching edges.  Assign each run from its smallest side.
    all_sides = ([(ROW, a, s) for a in range(1, inst.mu + 1) for s in (1, -1)]
                 + [(COL, b, s) for b in range(1, inst.nu + 1)
                    for s in (1, -1)])
    assigned: Dict[NodeSide, Line] = {}

    def run_of(start: NodeSide) -> list[NodeSide]:
        run = [start]
        seen = {start}
        frontier = [start]
        while frontier:
            cur = frontier.pop()
            for e in m.node_edges(cur[:2]):
                if inst.rank_of(e) != 2:
                    continue
                to_side = _partner_side(e, cur)
                # A free side linked to a forced one would itself have
                # been forced; runs touch only free sides.
                assert to_side not in forced
                if to_side in seen:
                    continue
                seen.add(to_side)
                run.append(to_side)
                frontier.append(to_side)
        return sorted(run, key=side_sort_key)

    def try_candidate(rep: NodeSide, cand: Line):
        """Propagate one seed through a free run; None if it collides."""
        values = {rep: cand}
        frontier = [rep]
        while frontier:
            cur = frontier.pop()
            for e in m.node_edges(cur[:2]):
                if inst.rank_of(e) != 2:
                    continue
                to_side = _partner_side(e, cur)
                value = _propagated_value(inst, values[cur], e, cur)
                if to_side in values:
                    if values[to_side] != value:
                        return None  # the run closes into a cycle badly
                    continue
                values[to_side] = value
                frontier.append(to_side)
        for s, value in values.items():
            kind, idx, sigma = s
            other = forced.get((kind, idx, -sigma),
                               assigned.get((kind, idx, -sigma)))
            if other is not None and other == value:
                return None
        return values

    def fill_run(run: list[NodeSide]) -> None:
        # Every collision with an already-set opposite side rules out at
        # most one candidate (propagation is a bijection on Lines), so
        # len(run) + 2 candidates always suffice; a finite field only
        # has q + 1 Lines in total to try.
        rep = run[0]
        limit = len(run) + 2
        if isinstance(fld, PrimeField):
            limit = min(limit, fld.q + 2)
        for count, cand in enumerate(_candidate_lines(fld, seeds.get(rep))):
            if count >= limit:
                break
            values = try_candidate(rep, cand)
            if values is not None:
                assigned.update(values)
                return
        raise InfeasibleLabelingError(
            f"no Line works for the free run at {rep}")

    for s in sorted(all_sides, key=side_sort_key):
        if s in forced or s in assigned:
            continue
        fill_run(run_of(s))

    for s, value in assigned.items():
        lab._side[s] = value
    return lab


def verify_valid_labeling(inst: Instance, m: SignedMatching,
                          lab: Labeling) -> bool:
    """Check Eq-(5)/(6) validity of a labeling against a signed matching.

    True iff every labeled node has distinct + and - Lines, the cross
    pairs annihilate on every matching edge, and the sign-side labels on
    rank-1 matching edges equal the block kernels.
    """
    fld = inst.fld
    if not lab.distinct_everywhere():
        return False
    for e in m.edges:
        alpha, beta = e
        a = inst.mat(e)
        try:
            up, um = lab.u(alpha, 1), lab.u(alpha, -1)
            vp, vm = lab.v(beta, 1), lab.v(beta, -1)
        except KeyError:
            return False
        if pairing_nonzero(fld, a, up, vm) or pairing_nonzero(fld, a, um, vp):
            return False
        if inst.rank_of(e) == 1:
            sigma = m.sign[e]
            if lab.u(alpha, sigma) != left_kernel(fld, a):
                return False
            if lab.v(beta, sigma) != right_kernel(fld, a):
                return False
    return True


@dataclass(frozen=True)
class MatchingState:
    """A signed pseudo-matching together with its doubled edges.

    Doubled edges are the subset of matching edges counted twice; each
    must be isolated (both endpoints have degree 1 in the matching).
    Rank-2-ness of doubled edges is a property of the instance and is
    checked by the verifiers, not here.
    """

    matching: SignedMatching
    doubled: frozenset = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        object.__setattr__(self, "doubled", frozenset(self.doubled))
        extra = self.doubled - self.matching.edges
        if extra:
            raise ValueError(f"doubled edges not in matching: {sorted(extra)}")
        deg = degrees(self.matching.edges)
        for e in self.doubled:
            for node in edge_nodes(e):
                if deg[node] != 1:
                    raise ValueError(
                        f"doubled edge {e} is not isolated at {node}")

    @classmethod
    def empty(cls) -> "MatchingState":
        return cls(SignedMatching.empty(), frozenset())

    @property
    def size(self) -> int:
        return len(self.matching.edges) + len(self.doubled)


def weight(inst: Instance, state: MatchingState) -> int:
    """Total weight: every matching edge once, doubled edges once more."""
    total = sum(inst.weight_of(e) for e in state.matching.edges)
    total += sum(inst.weight_of(e) for e in state.doubled)
    if abs(total) > MAX_WEIGHT:
        raise OverflowError("matching weight exceeds 64 bits")
    return total


def matched_spaces(state: MatchingState) -> set[NodeSide]:
    """The matched node sides of a matching state.

    A sigma-signed edge matches the (-sigma)-sides of its endpoints; a
    doubled sigma-edge additionally matches the sigma-sides.  Exactly
    size-many sides are matched on each of the row and column parts.
    """
    out: set[NodeSide] = set()
    for e in state.matching.edges:
        sigma = state.matching.sign[e]
        alpha, beta = e
        out.add((ROW, alpha, -sigma))
        out.add((COL, beta, -sigma))
        if e in state.doubled:
            out.add((ROW, alpha, sigma))
            out.add((COL, beta, sigma))
    return out