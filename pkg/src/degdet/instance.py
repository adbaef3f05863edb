"""Problem instances: a grid of weighted 2x2 blocks over an exact field.

An instance is the block matrix whose (alpha, beta) cell holds a nonzero
2x2 matrix together with an integer weight d.  Absent cells are zero
blocks; the present cells define the edge set E of a bipartite graph on
row indices alpha in [1, mu] and column indices beta in [1, nu].

The JSON file format (UTF-8) is::

    { "field": {"prime": q} | "rational",
      "rows": mu, "cols": nu,
      "blocks": [ {"row": a, "col": b,
                   "a": [[a11, a12], [a21, a22]], "d": d}, ... ] }

Scalars are decimal integer strings (reduced mod q in prime mode) or
"num/den" strings in rational mode.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from typing import Iterable, Mapping, Tuple

from degdet.field import DEFAULT_PRIME, Field, PrimeField, RationalField
from degdet.plane import Mat2, is_zero_mat, rank

#: An edge of the bipartite graph G: (row index alpha, column index beta).
EdgeId = Tuple[int, int]

#: Weights must fit a signed 64-bit word; sums of O(mu*nu) of them are
#: checked against the same bound rather than silently wrapped.
MAX_WEIGHT = 2**63 - 1


class ParseError(ValueError):
    """Raised on a malformed instance or certificate document."""


@dataclass(frozen=True)
class Block:
    mat: Mat2
    weight: int


@dataclass(frozen=True)
class Instance:
    """An immutable problem instance.

    Attributes
    ----------
    fld: the exact field all block entries live in.
    mu, nu: the number of row and column block indices.
    blocks: map from (alpha, beta), both 1-based, to the Block there.
    """

    fld: Field
    mu: int
    nu: int
    blocks: Mapping[EdgeId, Block]

    def __post_init__(self) -> None:
        if self.mu < 0 or self.nu < 0:
            raise ParseError("rows and cols must be nonnegative")
        row_adj: dict[int, list[EdgeId]] = {}
        col_adj: dict[int, list[EdgeId]] = {}
        for (alpha, beta), blk in sorted(self.blocks.items()):
            if not (1 <= alpha <= self.mu and 1 <= beta <= self.nu):
                raise ParseError(f"block index ({alpha},{beta}) out of range")
            if is_zero_mat(self.fld, blk.mat):
                raise ParseError(f"zero block at ({alpha},{beta})")
            if abs(blk.weight) > MAX_WEIGHT:
                raise ParseError(f"weight at ({alpha},{beta}) exceeds 64 bits")
            row_adj.setdefault(alpha, []).append((alpha, beta))
            col_adj.setdefault(beta, []).append((alpha, beta))
        object.__setattr__(self, "_row_adj", row_adj)
        object.__setattr__(self, "_col_adj", col_adj)

    # -- graph views --------------------------------------------------------

    @property
    def edges(self) -> Iterable[EdgeId]:
        return self.blocks.keys()

    def mat(self, e: EdgeId) -> Mat2:
        return self.blocks[e].mat

    def weight_of(self, e: EdgeId) -> int:
        return self.blocks[e].weight

    def rank_of(self, e: EdgeId) -> int:
        return rank(self.fld, self.blocks[e].mat)

    def row_edges(self, alpha: int) -> list[EdgeId]:
        """Edges incident to row node alpha, sorted."""
        return self._row_adj.get(alpha, [])

    def col_edges(self, beta: int) -> list[EdgeId]:
        """Edges incident to column node beta, sorted."""
        return self._col_adj.get(beta, [])


def degrees(edges: Iterable[EdgeId]) -> dict[tuple[str, int], int]:
    """Node degrees of an edge set, keyed by ('r', alpha) / ('c', beta)."""
    deg: dict[tuple[str, int], int] = {}
    for alpha, beta in edges:
        deg[("r", alpha)] = deg.get(("r", alpha), 0) + 1
        deg[("c", beta)] = deg.get(("c", beta), 0) + 1
    return deg


# -- (de)serialization -------------------------------------------------------


def _field_from_spec(spec) -> Field:
    if spec == "rational":
        return RationalField()
    if isinstance(spec, dict) and set(spec) == {"prime"}:
        q = spec["prime"]
        if not isinstance(q, int):
            raise ParseError(f"prime modulus must be an integer, got {q!r}")
        try:
            return PrimeField(q)
        except ValueError as exc:
            raise ParseError(str(exc)) from None
    raise ParseError(f"unrecognized field spec: {spec!r}")


def _field_to_spec(fld: Field):
    if isinstance(fld, RationalField):
        return "rational"
    return {"prime": fld.q}


def parse_instance(data: bytes | str) -> Instance:
    """Parse the JSON instance format.  Raises ParseError on bad input."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ParseError("instance document must be a JSON object")
    missing = {"field", "rows", "cols", "blocks"} - set(doc)
    if missing:
        raise ParseError(f"missing keys: {sorted(missing)}")
    fld = _field_from_spec(doc["field"])
    mu, nu = doc["rows"], doc["cols"]
    if not isinstance(mu, int) or not isinstance(nu, int):
        raise ParseError("rows and cols must be integers")
    blocks: dict[EdgeId, Block] = {}
    if not isinstance(doc["blocks"], list):
        raise ParseError("blocks must be a list")
    for entry in doc["blocks"]:
        if not isinstance(entry, dict) or {"row", "col", "a", "d"} - set(entry):
            raise ParseError(f"malformed block entry: {entry!r}")
        alpha, beta, d = entry["row"], entry["col"], entry["d"]
        if not isinstance(alpha, int) or not isinstance(beta, int):
            raise ParseError("block row/col must be integers")
        if not isinstance(d, int) or isinstance(d, bool):
            raise ParseError(f"block weight must be an integer, got {d!r}")
        if (alpha, beta) in blocks:
            raise ParseError(f"duplicate block at ({alpha},{beta})")
        a = entry["a"]
        if (not isinstance(a, list) or len(a) != 2
                or any(not isinstance(r, list) or len(r) != 2 for r in a)):
            raise ParseError(f"block matrix at ({alpha},{beta}) is not 2x2")
        try:
            entries = [fld.parse(str(x)) if isinstance(x, (str, int)) else None
                       for row in a for x in row]
        except ValueError as exc:
            raise ParseError(str(exc)) from None
        if None in entries:
            raise ParseError(f"non-scalar entry in block ({alpha},{beta})")
        blocks[(alpha, beta)] = Block(Mat2(*entries), d)
    try:
        return Instance(fld, mu, nu, blocks)
    except ParseError:
        raise
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def serialize_instance(inst: Instance) -> bytes:
    """Serialize to the JSON instance format; inverse of parse_instance."""
    fld = inst.fld
    doc = {
        "field": _field_to_spec(fld),
        "rows": inst.mu,
        "cols": inst.nu,
        "blocks": [
            {
                "row": alpha,
                "col": beta,
                "a": [[fld.format(blk.mat.a11), fld.format(blk.mat.a12)],
                      [fld.format(blk.mat.a21), fld.format(blk.mat.a22)]],
                "d": blk.weight,
            }
            for (alpha, beta), blk in sorted(inst.blocks.items())
        ],
    }
    return (json.dumps(doc, indent=2) + "\n").encode("utf-8")


def submatrix_support(inst: Instance, edges: Iterable[EdgeId]) -> Instance:
    """The instance restricted to the given edges (blocks elsewhere removed)."""
    keep = set(edges)
    extra = keep - set(inst.blocks)
    if extra:
        raise ValueError(f"edges not in the instance: {sorted(extra)}")
    return Instance(inst.fld, inst.mu, inst.nu,
                    {e: blk for e, blk in inst.blocks.items() if e in keep})


# -- pseudo-random generation -------------------------------------------------


def random_instance(rows: int, cols: int, density: float, dmax: int,
                    rank1_prob: float, seed: int,
                    fld: Field | None = None) -> Instance:
    """A reproducible pseudo-random instance.

    Each cell is present with probability ``density``.  A present block is
    rank-1 with probability ``rank1_prob`` (an outer product u w^T of
    random nonzero vectors), otherwise random entries are drawn until the
    block has rank 2.  Weights are uniform integers in [-dmax, dmax].
    All randomness flows from ``seed``.
    """
    if rows < 0 or cols < 0:
        raise ValueError("rows and cols must be nonnegative")
    if not 0.0 <= density <= 1.0 or not 0.0 <= rank1_prob <= 1.0:
        raise ValueError("density and rank1_prob must lie in [0, 1]")
    if dmax < 0 or dmax > MAX_WEIGHT:
        raise ValueError("dmax must be between 0 and 2**63 - 1")
    if fld is None:
        fld = PrimeField(DEFAULT_PRIME)
    rng = random.Random(seed)

    def rand_scalar():
        if isinstance(fld, PrimeField):
            return rng.randrange(fld.q)
        return fld.from_int(rng.randrange(-9, 10))

    def rand_nonzero_vec():
        while True:
            v = (rand_scalar(), rand_scalar())
            if v[0] != fld.zero or v[1] != fld.zero:
                return v

    blocks: dict[EdgeId, Block] = {}
    for alpha in range(1, rows + 1):
        for beta in range(1, cols + 1):
            if rng.random() >= density:
                continue
            if rng.random() < rank1_prob:
                u = rand_nonzero_vec()
                w = rand_nonzero_vec()
                m = Mat2(fld.mul(u[0], w[0]), fld.mul(u[0], w[1]),
                         fld.mul(u[1], w[0]), fld.mul(u[1], w[1]))
            else:
                while True:
                    m = Mat2(rand_scalar(), rand_scalar(),
                             rand_scalar(), rand_scalar())
                    if rank(fld, m) == 2:
                        break
            d = rng.randint(-dmax, dmax)
            blocks[(alpha, beta)] = Block(m, d)
    return Instance(fld, rows, cols, blocks)
