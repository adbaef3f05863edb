"""Dual variables: node-side potentials and the scalar c.

A potential assigns a nonnegative integer to every labeled subspace and
extends to all other Lines at a node as the maximum of the two labeled
values (the regularity convention).  Together with the scalar c it is
dual-feasible when every nonzero pairing between labeled spaces across a
block satisfies p + p + c >= d; it certifies optimality of a
matching-pair through the tightness and zero conditions checked here.

The representation is sparse: sides with value 0 are simply absent, so
freshly initialized potentials are empty dictionaries.
"""

from __future__ import annotations

from typing import Dict, Iterable, Optional

from degdet.instance import MAX_WEIGHT, Instance
from degdet.matching import (
    COL,
    ROW,
    Labeling,
    MatchingState,
    NodeId,
    NodeSide,
    matched_spaces,
)
from degdet.plane import Line, pairing_nonzero


class PotentialState:
    """The dual state: integer c plus a nonnegative integer per node side.

    Mutable; the search phases shift values in place.  Sides not stored
    have value 0.
    """

    __slots__ = ("c", "_p")

    def __init__(self, c: int = 0,
                 p: Optional[Dict[NodeSide, int]] = None) -> None:
        self.c = c
        self._p = {}
        for side, val in (p or {}).items():
            self.set_p(side, val)

    @classmethod
    def initial(cls, inst: Instance) -> "PotentialState":
        """The starting dual state: p identically 0, c = max weight."""
        c = max((blk.weight for blk in inst.blocks.values()), default=0)
        return cls(c=c)

    def p_side(self, side: NodeSide) -> int:
        return self._p.get(side, 0)

    def set_p(self, side: NodeSide, value: int) -> None:
        if not isinstance(value, int) or isinstance(value, bool):
            raise ValueError(f"potential values must be integers: {value!r}")
        if value < 0:
            raise ValueError(f"potential value at {side} is negative")
        if value:
            self._p[side] = value
        else:
            self._p.pop(side, None)

    def add_p(self, side: NodeSide, delta: int) -> None:
        self.set_p(side, self.p_side(side) + delta)

    def p_total(self) -> int:
        """p summed over every labeled space (absent sides contribute 0)."""
        return sum(self._p.values())

    def nonzero_sides(self) -> Iterable[NodeSide]:
        return self._p.keys()

    def clone(self) -> "PotentialState":
        ps = PotentialState(self.c)
        ps._p = dict(self._p)
        return ps

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, PotentialState) and other.c == self.c
                and other._p == self._p)

    def __repr__(self) -> str:
        return f"PotentialState(c={self.c}, {len(self._p)} nonzero sides)"


def eval_p(ps: PotentialState, lab: Labeling, node: NodeId, L: Line) -> int:
    """p evaluated at an arbitrary Line of a node.

    Equals the stored value when L is one of the node's two labeled
    spaces, and their maximum otherwise (the regularity rule).
    """
    kind, idx = node
    plus = ps.p_side((kind, idx, 1))
    minus = ps.p_side((kind, idx, -1))
    if lab.side((kind, idx, 1)) == L:
        return plus
    if lab.side((kind, idx, -1)) == L:
        return minus
    return max(plus, minus)


def is_c_potential(inst: Instance, lab: Labeling, ps: PotentialState) -> bool:
    """Dual feasibility on labeled spaces.

    For every block and every sign pair, a nonzero pairing of the labeled
    spaces must satisfy p + p + c >= d.  Under the regularity rule this
    is sufficient for feasibility over all Lines: an unlabeled Line
    pairs nonzero with some space only if one of the labeled ones does,
    at a p-value no larger than the regularized maximum.
    """
    fld = inst.fld
    for (alpha, beta), blk in inst.blocks.items():
        need = blk.weight - ps.c
        for sa in (1, -1):
            pa = ps.p_side((ROW, alpha, sa))
            ua = lab.u(alpha, sa)
            for sb in (1, -1):
                if pa + ps.p_side((COL, beta, sb)) >= need:
                    continue
                if pairing_nonzero(fld, blk.mat, ua, lab.v(beta, sb)):
                    return False
    return True


def check_tight(inst: Instance, state: MatchingState,
                ps: PotentialState) -> bool:
    """The tightness equalities on the matching state.

    A matching edge of sign s must satisfy d = p(U^-s) + p(V^-s) + c;
    a doubled edge must additionally satisfy d = p(U^s) + p(V^s) + c.
    """
    for e in state.matching.edges:
        alpha, beta = e
        s = state.matching.sign[e]
        d = inst.weight_of(e)
        if ps.p_side((ROW, alpha, -s)) + ps.p_side((COL, beta, -s)) \
                + ps.c != d:
            return False
        if e in state.doubled:
            if ps.p_side((ROW, alpha, s)) + ps.p_side((COL, beta, s)) \
                    + ps.c != d:
                return False
    return True


def _zero_violations(state: MatchingState,
                     ps: PotentialState) -> Iterable[NodeSide]:
    matched = matched_spaces(state)
    for side in ps.nonzero_sides():
        if side not in matched:
            yield side


def check_zero(state: MatchingState, ps: PotentialState) -> bool:
    """Whether p vanishes on every unmatched node side."""
    return next(iter(_zero_violations(state, ps)), None) is None


def check_zero_prime(state: MatchingState, ps: PotentialState,
                     exempt: NodeSide) -> bool:
    """check_zero with a single designated row side allowed to be nonzero."""
    if exempt[0] != ROW:
        raise ValueError(f"the exempt side must be a row side, got {exempt}")
    return all(side == exempt for side in _zero_violations(state, ps))


def dual_value(ps: PotentialState, k: int) -> int:
    """The dual objective p summed over all labeled spaces, plus k*c."""
    total = ps.p_total() + k * ps.c
    if abs(total) > MAX_WEIGHT:
        raise OverflowError("dual value exceeds 64 bits")
    return total