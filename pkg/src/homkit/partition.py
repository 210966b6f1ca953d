"""Partition functions ``Z_M(G)`` and product-value histograms.

``Z_M(G) = Σ_σ Π_{(u,v) ∈ E} M[σ(u), σ(v)]`` over all maps ``σ: V → [q]``.

The exhaustive evaluator is the reference every other method is checked
against.  It scales ``M`` to an integer matrix, groups parallel edges, and
walks the assignment space vertex by vertex with numpy broadcasting, so each
assignment's product is built incrementally from its prefix.  Large spaces
are cut into chunks by fixing the first few vertices.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import BudgetExceeded, ConsistencyError, PreconditionError
from .matrix import (
    Decomposition,
    RationalMatrix,
    WeightMatrix,
    bipartite_split,
    direct_sum_decompose,
    is_bipartite_rank2,
    rank_exact,
    rank_of_rows,
)
from .multigraph import MultiGraph, bipartition, connected_components, induced_subgraph

DEFAULT_CAP = 10**8
_CHUNK = 1 << 20
_INT64_SAFE = 1 << 62

Oracle = Callable[[RationalMatrix, MultiGraph], Fraction]


# ---------------------------------------------------------------- exhaustive


def _integer_scaling(m: RationalMatrix) -> tuple[list[list[int]], int]:
    lcm = reduce(math.lcm, (x.denominator for x in m.entries()), 1)
    return [[int(x * lcm) for x in row] for row in m.rows], lcm


def _check_budget(q: int, g: MultiGraph, cap: int) -> None:
    cost = q**g.n * max(1, g.edge_count)
    if cost > cap:
        raise BudgetExceeded(f"enumeration needs {q}^{g.n} x {max(1, g.edge_count)} = {cost} products, cap is {cap}")


def _product_chunks(m: RationalMatrix, g: MultiGraph, cap: int) -> Iterator[np.ndarray]:
    """Yield arrays holding the integer-scaled product of every assignment.

    Every assignment appears exactly once across all chunks.
    """
    q, n = m.q, g.n
    _check_budget(q, g, cap)
    mi, _ = _integer_scaling(m)
    biggest = max(1, max(abs(x) for row in mi for x in row))
    safe = biggest ** g.edge_count * q**n < _INT64_SAFE
    dtype = np.int64 if safe else object

    groups = Counter(g.edges)
    tables: dict[tuple[int, int], np.ndarray] = {}
    for (u, v), mult in groups.items():
        tables[(u, v)] = np.array([[x**mult for x in row] for row in mi], dtype=dtype)

    # vertices below `split` are enumerated in Python, the rest vectorised
    split = 0
    while q ** (n - split) > _CHUNK:
        split += 1
    inner = n - split
    by_later: dict[int, list[tuple[int, int]]] = {}
    for (u, v) in groups:
        by_later.setdefault(max(u, v), []).append((u, v))

    for prefix in itertools.product(range(q), repeat=split):
        const = 1
        for w in range(split):
            for (u, v) in by_later.get(w, ()):
                const *= tables[(u, v)][prefix[u], prefix[v]]
        arr = np.array(const, dtype=dtype)
        if const == 0:
            yield np.zeros(q**inner, dtype=dtype)
            continue
        for k in range(split, n):
            axis_k = k - split
            arr = arr[..., np.newaxis] * np.ones((1,) * axis_k + (q,), dtype=dtype)
            for (u, v) in by_later.get(k, ()):
                arr = arr * _factor(tables[(u, v)], u, v, k, split, prefix, q, dtype)
        yield arr.reshape(-1)


def _factor(table, u, v, k, split, prefix, q, dtype):
    """Broadcastable factor for the edge group (u, v) whose later endpoint is k."""
    shape = [1] * (k - split + 1)
    if u == v:
        shape[k - split] = q
        return np.diagonal(table).astype(dtype).reshape(shape)
    other, other_is_first = (u, True) if v == k else (v, False)
    if other < split:
        a = prefix[other]
        vec = table[a, :] if other_is_first else table[:, a]
        shape[k - split] = q
        return vec.reshape(shape)
    t = table if other_is_first else table.T
    shape[other - split] = q
    shape[k - split] = q
    return np.ascontiguousarray(t).reshape(shape)


def eval_bruteforce(m: RationalMatrix, g: MultiGraph, cap: int = DEFAULT_CAP) -> Fraction:
    """Sum over all ``q^|V|`` assignments.

    >>> from homkit.matrix import ones
    >>> eval_bruteforce(ones(2), MultiGraph(2, [(0, 1)]))
    Fraction(4, 1)
    """
    _, lcm = _integer_scaling(m)
    total = 0
    for chunk in _product_chunks(m, g, cap):
        total += int(sum(int(x) for x in chunk)) if chunk.dtype == object else int(chunk.sum(dtype=np.int64))
    return Fraction(total, lcm**g.edge_count)


# ---------------------------------------------------------------- profiles


@dataclass(frozen=True)
class CountProfile:
    """Histogram ``x ↦ #{σ : Π_e M[σ(e)] = x}`` with zero counts dropped."""

    counts: tuple[tuple[Fraction, int], ...]
    total: int

    @classmethod
    def from_mapping(cls, mapping, total: int) -> "CountProfile":
        items = sorted((Fraction(x), int(c)) for x, c in mapping.items() if c)
        if any(c < 0 for _, c in items):
            raise ConsistencyError("negative count in profile")
        if sum(c for _, c in items) != total:
            raise ConsistencyError("profile counts do not sum to the number of assignments")
        return cls(tuple(items), total)

    def as_dict(self) -> dict[Fraction, int]:
        return dict(self.counts)

    def weighted_sum(self) -> Fraction:
        return sum((x * c for x, c in self.counts), Fraction(0))

    def to_json(self) -> dict:
        return {"counts": [[str(x), str(c)] for x, c in self.counts], "total": str(self.total)}


def count_enumerate(m: RationalMatrix, g: MultiGraph, cap: int = DEFAULT_CAP) -> CountProfile:
    _, lcm = _integer_scaling(m)
    scale = lcm**g.edge_count
    hist: Counter = Counter()
    for chunk in _product_chunks(m, g, cap):
        if chunk.dtype == object:
            hist.update(int(x) for x in chunk)
        else:
            values, counts = np.unique(chunk, return_counts=True)
            hist.update({int(v): int(c) for v, c in zip(values, counts)})
    return CountProfile.from_mapping({Fraction(v, scale): c for v, c in hist.items()}, m.q**g.n)


def compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    """All ways to write ``total`` as an ordered sum of ``parts`` non-negative integers."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    for bars in itertools.combinations(range(total + parts - 1), parts - 1):
        prev = -1
        out = []
        for b in bars:
            out.append(b - prev - 1)
            prev = b
        out.append(total + parts - 1 - prev - 1)
        yield tuple(out)


def candidate_values(m: RationalMatrix, edge_count: int) -> list[Fraction]:
    """Every product ``Π_{i<=j} M_ij^{k_ij}`` with ``Σ k = edge_count``, deduplicated."""
    slots = [m[i, j] for i in range(m.q) for j in range(i, m.q)]
    seen = set()
    for k in compositions(edge_count, len(slots)):
        val = Fraction(1)
        for x, e in zip(slots, k):
            if e:
                val *= x**e
        seen.add(val)
    return sorted(seen)


def count_via_vandermonde(
    m: RationalMatrix, g: MultiGraph, oracle: Oracle | None = None
) -> CountProfile:
    """Recover the profile from ``Z_M`` values of thickened copies of ``g``.

    ``Z_M(T_p G) = Σ_x x^p #(G, x)`` for ``p = 1..|X|`` over the nonzero
    candidates ``x``; the count at zero follows from the total ``q^|V|``.
    """
    from .gadgets import replace_edges, thicken
    from .interpolation import vandermonde_solve

    oracle = oracle or eval_bruteforce
    nodes = [x for x in candidate_values(m, g.edge_count) if x != 0]
    values = [Fraction(oracle(m, replace_edges(g, thicken(p)))) for p in range(1, len(nodes) + 1)]
    coeffs = vandermonde_solve(nodes, values)
    total = m.q**g.n
    mapping: dict[Fraction, int] = {}
    for x, c in zip(nodes, coeffs):
        if c.denominator != 1 or c < 0:
            raise ConsistencyError(f"recovered count {c} for value {x} is not a non-negative integer")
        mapping[x] = int(c)
    zero = total - sum(mapping.values())
    if zero < 0:
        raise ConsistencyError("recovered counts exceed the number of assignments")
    mapping[Fraction(0)] = zero
    return CountProfile.from_mapping(mapping, total)


# ---------------------------------------------------------------- tractable cases


def _rank_one_factor(m: RationalMatrix) -> tuple[Fraction, list[Fraction]] | None:
    """Write ``m = c · y yᵀ`` with rational ``c, y``; ``None`` for the zero matrix."""
    r = next((i for i in range(m.q) if m[i, i] != 0), None)
    if r is None:
        return None
    return 1 / m[r, r], [m[r, j] for j in range(m.q)]


def eval_rank1(m: RationalMatrix, g: MultiGraph) -> Fraction:
    """Product formula ``Π_v Σ_i x_i^{deg v}`` for ``M = x xᵀ``.

    The factor is kept rational by writing ``M = c·y yᵀ``, so
    ``Z = c^|E| Π_v Σ_i y_i^{deg v}``.
    """
    if not m.is_symmetric() or rank_exact(m) > 1:
        raise PreconditionError("rank-1 evaluator needs a symmetric matrix of rank at most 1")
    degrees = g.degrees()
    factor = _rank_one_factor(m)
    if factor is None:
        return Fraction(0) if g.edge_count else Fraction(m.q) ** g.n
    c, y = factor
    value = c**g.edge_count
    for d in degrees:
        value *= sum((yi**d for yi in y), Fraction(0))
    return value


def _bipartite_factors(m: RationalMatrix):
    if not is_bipartite_rank2(m):
        checks = []
        if any(x != 0 for x in m.diagonal()):
            checks.append("diagonal is not zero")
        if not m.is_nonnegative():
            checks.append("negative entry")
        else:
            split = bipartite_split(m)
            if split is None:
                checks.append("support graph is not connected and bipartite")
            elif rank_of_rows([[m[i, j] for j in split[1]] for i in split[0]]) != 1:
                checks.append("off-diagonal block does not have rank 1")
        raise PreconditionError("bipartite rank-2 evaluator: " + "; ".join(checks or ["precondition failed"]))
    left, right = bipartite_split(m)
    block = [[m[i, j] for j in right] for i in left]
    r, c = next((r, c) for r in range(len(left)) for c in range(len(right)) if block[r][c] != 0)
    x = [block[i][c] / block[r][c] for i in range(len(left))]
    y = [block[r][j] for j in range(len(right))]
    return x, y


def eval_bipartite_rank2(m: RationalMatrix, g: MultiGraph) -> Fraction:
    """Evaluator for a connected bipartite support with a rank-one cross block.

    With ``B = x yᵀ`` each bipartite component ``(U, W)`` of ``G`` contributes
    ``Π_U Σ x^deg · Π_W Σ y^deg`` plus the same with the sides swapped.
    """
    x, y = _bipartite_factors(m)
    degrees = g.degrees()

    def power_sum(vec, d):
        return sum((v**d for v in vec), Fraction(0))

    value = Fraction(1)
    for comp in connected_components(g):
        sub = induced_subgraph(g, comp)
        sides = bipartition(sub)
        if sides is None:
            return Fraction(0)
        u_side = [comp[i] for i in sides[0]]
        w_side = [comp[i] for i in sides[1]]
        straight = Fraction(1)
        swapped = Fraction(1)
        for v in u_side:
            straight *= power_sum(x, degrees[v])
            swapped *= power_sum(y, degrees[v])
        for v in w_side:
            straight *= power_sum(y, degrees[v])
            swapped *= power_sum(x, degrees[v])
        value *= straight + swapped
    return value


def eval_direct_sum(blocks: Decomposition, g: MultiGraph) -> Fraction:
    """``Π_components Σ_blocks Z_block(component)``.

    Each connected component of ``g`` must land inside a single block.
    """
    value = Fraction(1)
    for comp in connected_components(g):
        sub = induced_subgraph(g, comp)
        value *= sum((_eval_connected_block(b.matrix, sub) for b in blocks.blocks), Fraction(0))
        if value == 0:
            return value
    return value


def _eval_connected_block(m: WeightMatrix, g: MultiGraph) -> Fraction:
    if rank_exact(m) <= 1:
        return eval_rank1(m, g)
    if is_bipartite_rank2(m):
        return eval_bipartite_rank2(m, g)
    return eval_bruteforce(m, g)


@dataclass(frozen=True)
class Evaluation:
    value: Fraction
    strategy: str

    def to_json(self) -> dict:
        return {"value": str(self.value), "strategy": self.strategy}


def choose_strategy(m: RationalMatrix) -> str:
    if not m.is_symmetric():
        return "bruteforce"
    if rank_exact(m) <= 1:
        return "rank1"
    if is_bipartite_rank2(m):
        return "bipartite-rank2"
    if m.is_nonnegative() and len(direct_sum_decompose(m)) > 1:
        return "direct-sum"
    return "bruteforce"


def eval_auto(m: RationalMatrix, g: MultiGraph, cap: int = DEFAULT_CAP) -> Evaluation:
    """Use the fastest applicable evaluator and report which one ran."""
    strategy = choose_strategy(m)
    if strategy == "rank1":
        return Evaluation(eval_rank1(m, g), strategy)
    if strategy == "bipartite-rank2":
        return Evaluation(eval_bipartite_rank2(m, g), strategy)
    if strategy == "direct-sum":
        return Evaluation(eval_direct_sum(direct_sum_decompose(m), g), strategy)
    return Evaluation(eval_bruteforce(m, g, cap), strategy)


def scaled(m: RationalMatrix, c) -> RationalMatrix:
    return m.scale(c)


def total_assignments(q: int, g: MultiGraph) -> int:
    return q**g.n


__all__: Sequence[str] = [
    "CountProfile",
    "Evaluation",
    "candidate_values",
    "choose_strategy",
    "compositions",
    "count_enumerate",
    "count_via_vandermonde",
    "eval_auto",
    "eval_bipartite_rank2",
    "eval_bruteforce",
    "eval_direct_sum",
    "eval_rank1",
]
