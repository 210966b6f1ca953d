"""Dichotomy classification, automorphism orbits and separator search.

Outcomes are three-valued.  Whether two indices can be told apart by a
planar edge gadget is undecidable in general, so a bounded search that
finds nothing reports ``UNKNOWN``; ``PROVEN_NONE`` is issued only when an
automorphism of ``M`` swaps the two indices, which rules out every gadget.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

from .errors import BudgetExceeded, ConsistencyError, DeadlineExceeded, PreconditionError
from .gadgets import (
    EdgeGadget,
    diag_square,
    dress,
    merge_labels,
    parallel,
    point,
    replace_edges,
    series,
    signature,
    signature_edgewise,
    single_edge,
    stretch,
    symmetrize,
)
from .matrix import (
    RationalMatrix,
    as_weight,
    diagonal_matrix,
    identity,
    direct_sum_decompose,
    is_bipartite_rank2,
    phi_diag,
    rank_exact,
    underlying_graph,
    wrap,
)
from .multigraph import bipartition, connected_components
from .partition import DEFAULT_CAP, choose_strategy

TRACTABLE = "TRACTABLE"
HARD = "HARD"
UNKNOWN = "UNKNOWN"

FOUND = "FOUND"
PROVEN_NONE = "PROVEN_NONE"

AUT_CAP = 12


# ---------------------------------------------------------------- automorphisms


@dataclass(frozen=True)
class Orbits:
    orbits: tuple[tuple[int, ...], ...]
    generators: tuple[tuple[int, ...], ...]
    group_order: int

    def orbit_of(self, i: int) -> tuple[int, ...]:
        return next(o for o in self.orbits if i in o)

    def same_orbit(self, i: int, j: int) -> bool:
        return j in self.orbit_of(i)

    def to_json(self) -> dict:
        return {
            "orbits": [list(o) for o in self.orbits],
            "generators": [list(g) for g in self.generators],
            "group_order": str(self.group_order),
        }


def _vertex_keys(m: RationalMatrix) -> list:
    return [(m[i, i], tuple(sorted(m.rows[i]))) for i in range(m.q)]


def find_automorphism(m: RationalMatrix, fixed: dict[int, int]) -> tuple[int, ...] | None:
    """A permutation ``σ`` with ``M[σi, σj] = M[i, j]`` honouring ``fixed``, or ``None``.

    Backtracks over vertices in order; a candidate image must carry the same
    diagonal entry and row multiset, and agree with every earlier choice.
    """
    q = m.q
    keys = _vertex_keys(m)
    for a, b in fixed.items():
        if keys[a] != keys[b]:
            return None
    image = [-1] * q
    used = [False] * q

    def extend(v: int) -> bool:
        if v == q:
            return True
        choices = [fixed[v]] if v in fixed else range(q)
        for c in choices:
            if used[c] or keys[c] != keys[v]:
                continue
            if v not in fixed and c in fixed.values():
                continue
            if any(m[u, v] != m[image[u], c] for u in range(v)):
                continue
            image[v] = c
            used[c] = True
            if extend(v + 1):
                return True
            used[c] = False
            image[v] = -1
        return False

    return tuple(image) if extend(0) else None


def aut_orbits(m: RationalMatrix) -> Orbits:
    """Orbits of ``Aut(M)``, a generating set of witnesses, and ``|Aut(M)|``.

    >>> from homkit.matrix import ones
    >>> aut_orbits(ones(3)).group_order
    6
    """
    q = m.q
    if q > AUT_CAP:
        raise BudgetExceeded(f"automorphism search is capped at q = {AUT_CAP}")
    parent = list(range(q))

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    generators: list[tuple[int, ...]] = []
    for i in range(q):
        for j in range(i + 1, q):
            if find(i) == find(j):
                continue
            sigma = find_automorphism(m, {i: j})
            if sigma is None:
                continue
            generators.append(sigma)
            for a in range(q):
                ra, rb = find(a), find(sigma[a])
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
    groups: dict[int, list[int]] = {}
    for v in range(q):
        groups.setdefault(find(v), []).append(v)
    orbits = tuple(sorted((tuple(g) for g in groups.values()), key=lambda o: o[0]))

    # orbit-stabiliser chain along the base 0, 1, ..., q-1
    order = 1
    fixed: dict[int, int] = {}
    for b in range(q):
        size = sum(1 for c in range(q) if find_automorphism(m, {**fixed, b: c}) is not None)
        order *= size
        fixed[b] = b
    return Orbits(orbits, tuple(generators), order)


# ---------------------------------------------------------------- verdicts


@dataclass(frozen=True)
class Verdict:
    outcome: str
    criterion: str
    strategy: str | None = None
    evidence: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "outcome": self.outcome,
            "criterion": self.criterion,
            "strategy": self.strategy,
            "evidence": self.evidence,
        }


def _block_evidence(m: RationalMatrix) -> list[dict]:
    out = []
    for b in direct_sum_decompose(m).blocks:
        rank = rank_exact(b.matrix)
        out.append(
            {
                "vertices": list(b.vertices),
                "rank": rank,
                "bipartite_rank2": is_bipartite_rank2(b.matrix),
            }
        )
    return out


def _require_nonnegative(m: RationalMatrix) -> None:
    if not m.is_symmetric():
        raise PreconditionError("classification needs a symmetric matrix")
    if not m.is_nonnegative():
        raise PreconditionError("classification needs a non-negative matrix")


def classify_diag_distinct(m: RationalMatrix) -> Verdict:
    """Block-rank criterion for matrices with pairwise distinct diagonal entries."""
    _require_nonnegative(m)
    if phi_diag(m) == 0:
        raise PreconditionError("diagonal entries are not distinct; use classify_general")
    keep = [i for i in range(m.q) if any(x != 0 for x in m.rows[i])]
    stripped = [i for i in range(m.q) if i not in keep]
    if len(stripped) > 1:
        raise ConsistencyError("distinct diagonal allows at most one zero row")
    core = as_weight(m.submatrix(keep)) if keep else None
    blocks = []
    if core is not None:
        for b in direct_sum_decompose(core).blocks:
            verts = [keep[v] for v in b.vertices]
            blocks.append({"vertices": verts, "rank": rank_exact(b.matrix)})
    evidence = {"blocks": blocks, "stripped_zero_rows": stripped}
    bad = [b for b in blocks if b["rank"] > 1]
    if bad:
        evidence["offending_block"] = bad[0]
        return Verdict(HARD, "diag-distinct-block-rank", None, evidence)
    return Verdict(TRACTABLE, "block-rank-at-most-1", choose_strategy(m), evidence)


def _span_ij(m: RationalMatrix) -> tuple[Fraction, Fraction] | None:
    """``(a, b)`` with ``M = a I + b J`` if such a pair exists."""
    q = m.q
    if q < 2:
        return None
    b = m[0, 1]
    if any(m[i, j] != b for i in range(q) for j in range(q) if i != j):
        return None
    d = m[0, 0]
    if any(m[i, i] != d for i in range(q)):
        return None
    return d - b, b


@dataclass(frozen=True)
class Budget:
    depth: int = 6
    bits: int = 4096
    states: int = 4000
    cap: int = DEFAULT_CAP


def classify_general(m: RationalMatrix, budget: Budget | None = None) -> Verdict:
    """Classify ``PlGH(M)`` for non-negative symmetric ``M``.

    Fast paths come first (``span(I, J)`` and distinct diagonals).  A matrix
    whose blocks all have rank at most 1 or are bipartite of rank 2 is
    tractable outright.  Otherwise hardness follows once every pair of
    indices is separated by a planar gadget; any pair left open makes the
    verdict ``UNKNOWN``.
    """
    budget = budget or Budget()
    _require_nonnegative(m)
    span = _span_ij(m)
    if span is not None:
        a, b = span
        if b == 0:
            return Verdict(TRACTABLE, "span-IJ-multiple-of-I", choose_strategy(m), {"a": str(a), "b": str(b)})
        if a == 0:
            return Verdict(TRACTABLE, "span-IJ-multiple-of-J", choose_strategy(m), {"a": str(a), "b": str(b)})
    if phi_diag(m) != 0:
        return classify_diag_distinct(m)
    blocks = _block_evidence(m)
    if all(b["rank"] <= 1 or b["bipartite_rank2"] for b in blocks):
        return Verdict(TRACTABLE, "block-rank-at-most-1-or-bipartite-rank-2", choose_strategy(m), {"blocks": blocks})
    if span is not None:
        a, b = span
        if m.q >= 3:
            return Verdict(HARD, "potts-span-IJ", None, {"a": str(a), "b": str(b)})
        return Verdict(
            TRACTABLE,
            "domain2-equal-diagonal",
            choose_strategy(m),
            {
                "a": str(a),
                "b": str(b),
                "note": "polynomial on planar graphs through a holographic reduction, which is not implemented here",
            },
        )
    pairs = {}
    for i, j in itertools.combinations(range(m.q), 2):
        res = find_separator(m, i, j, budget)
        pairs[f"{i},{j}"] = res.status
    evidence = {"blocks": blocks, "pairs": pairs}
    if all(s == FOUND for s in pairs.values()):
        evidence["offending_block"] = next(b for b in blocks if not (b["rank"] <= 1 or b["bipartite_rank2"]))
        return Verdict(HARD, "separable-block-criterion", None, evidence)
    evidence["reason"] = "some index pairs are inseparable or were not separated within budget"
    return Verdict(UNKNOWN, "separable-block-criterion", None, evidence)


# ---------------------------------------------------------------- separator search


@dataclass
class SeparatorResult:
    status: str
    witness: EdgeGadget | None = None
    witness_signature: RationalMatrix | None = None
    budget_used: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "witness": None if self.witness is None else self.witness.to_json(),
            "signature": None if self.witness_signature is None else self.witness_signature.to_json(),
            "budget_used": self.budget_used,
        }


@dataclass(frozen=True)
class _State:
    sig: RationalMatrix
    binary: bool
    recipe: tuple
    depth: int


def _materialize(states: Sequence[_State], idx: int, cache: dict) -> EdgeGadget:
    if idx in cache:
        return cache[idx]
    r = states[idx].recipe
    op = r[0]
    if op == "edge":
        k = single_edge()
    elif op == "point":
        k = point()
    elif op == "series":
        k = series(_materialize(states, r[1], cache), _materialize(states, r[2], cache))
    elif op == "parallel":
        k = parallel(_materialize(states, r[1], cache), _materialize(states, r[2], cache))
    elif op == "dress":
        k = dress(_materialize(states, r[1], cache))
    elif op == "merge":
        k = merge_labels(_materialize(states, r[1], cache))
    else:  # pragma: no cover
        raise ConsistencyError(f"unknown recipe {op}")
    cache[idx] = k
    return k


def _monoid_states(m: RationalMatrix, budget: Budget) -> Iterator[tuple[list[_State], int]]:
    """Breadth-first enumeration of gadget signatures, deduplicated by value.

    Yields ``(states, index)`` for every newly created state.  Raises
    :class:`BudgetExceeded` once the state budget is spent.
    """
    d = diagonal_matrix(m.diagonal())
    states: list[_State] = []
    seen: set = set()

    def add(sig, binary, recipe, depth):
        key = (sig.rows, binary)
        if key in seen or sig.max_bits() > budget.bits:
            return None
        if len(states) >= budget.states:
            raise BudgetExceeded("separator search state budget exhausted")
        seen.add(key)
        states.append(_State(sig, binary, recipe, depth))
        return len(states) - 1

    for sig, binary, recipe in ((m, False, ("edge",)), (identity(m.q), True, ("point",))):
        idx = add(sig, binary, recipe, 0)
        if idx is not None:
            yield states, idx
    frontier = list(range(len(states)))
    for depth in range(1, budget.depth + 1):
        new: list[int] = []
        for a in frontier:
            sa = states[a]
            candidates = [(d @ sa.sig @ d, sa.binary, ("dress", a))]
            if not sa.binary:
                candidates.append((diagonal_matrix(sa.sig.diagonal()), True, ("merge", a)))
            for b in range(len(states)):
                sb = states[b]
                candidates.append((sa.sig @ sb.sig, sa.binary and sb.binary, ("series", a, b)))
                candidates.append((sb.sig @ sa.sig, sa.binary and sb.binary, ("series", b, a)))
                if sa.binary == sb.binary:
                    candidates.append((sa.sig.hadamard(sb.sig), sa.binary, ("parallel", a, b)))
            for sig, binary, recipe in candidates:
                idx = add(sig, binary, recipe, depth)
                if idx is not None:
                    new.append(idx)
                    yield states, idx
        if not new:
            return
        frontier = new


def _finalize_witness(k: EdgeGadget, sig: RationalMatrix) -> tuple[EdgeGadget, RationalMatrix]:
    """Turn a separating binary or asymmetric gadget into a symmetric edge gadget."""
    if k.is_binary:
        x = sig.diagonal()
        return diag_square(k), wrap([[a * b for b in x] for a in x])
    if not sig.is_symmetric():
        return symmetrize(k), sig.hadamard(sig.transpose())
    return k, sig


def find_separator(m: RationalMatrix, i: int, j: int, budget: Budget | None = None) -> SeparatorResult:
    """Search for a planar edge gadget ``K`` with ``K(M)_ii != K(M)_jj``."""
    budget = budget or Budget()
    _require_nonnegative(m)
    q = m.q
    if i == j:
        raise PreconditionError("separator search needs two different indices")
    if not (0 <= i < q and 0 <= j < q):
        raise PreconditionError(f"indices must lie in [0, {q})")
    if q <= AUT_CAP:
        sigma = find_automorphism(m, {i: j})
        if sigma is not None:
            return SeparatorResult(PROVEN_NONE, budget_used={"automorphism": list(sigma)})
    cache: dict = {}
    explored = 0
    try:
        for states, idx in _monoid_states(m, budget):
            explored += 1
            st = states[idx]
            if st.sig[i, i] == st.sig[j, j]:
                continue
            raw = _materialize(states, idx, cache)
            witness, predicted = _finalize_witness(raw, st.sig)
            if not witness.planar_certified:
                continue
            verified_by = "bruteforce"
            try:
                actual = signature(witness, m, budget.cap)
            except DeadlineExceeded:
                raise
            except BudgetExceeded:
                actual, verified_by = predicted, "composition"
            if actual != predicted:
                raise ConsistencyError("witness signature disagrees with the composed signature")
            if actual[i, i] == actual[j, j]:
                raise ConsistencyError("finalized witness lost the separation")
            used = {"states": explored, "depth": st.depth, "verified_by": verified_by}
            return SeparatorResult(FOUND, witness, actual, used)
    except DeadlineExceeded:
        raise
    except BudgetExceeded as exc:
        return SeparatorResult(UNKNOWN, budget_used={"states": explored, "reason": str(exc)})
    return SeparatorResult(UNKNOWN, budget_used={"states": explored, "reason": "signature monoid exhausted"})


# ---------------------------------------------------------------- combination


@dataclass(frozen=True)
class Combination:
    gadget: EdgeGadget
    signature: RationalMatrix
    multiplicities: dict
    verified_by: str


def positive_walk_threshold(m: RationalMatrix) -> int:
    """Smallest ``k0 >= 2`` with ``(M^k)_ii > 0`` for every ``i`` and every ``k >= k0``.

    Only meaningful for a connected non-bipartite support graph, where the
    positivity pattern becomes all-positive after at most ``(q-1)^2 + 1``
    steps and stays so.
    """
    q = m.q
    pattern = [[m[a, b] > 0 for b in range(q)] for a in range(q)]
    limit = (q - 1) ** 2 + 1 + q
    power = [row[:] for row in pattern]
    diag_ok = []
    for _ in range(limit):
        diag_ok.append(all(power[a][a] for a in range(q)))
        power = [[any(power[a][c] and pattern[c][b] for c in range(q)) for b in range(q)] for a in range(q)]
    k0 = limit
    while k0 > 1 and diag_ok[k0 - 2]:
        k0 -= 1
    return max(2, k0)


def _repair(m: RationalMatrix, k: EdgeGadget, x: int, y: int, budget: Budget) -> tuple[EdgeGadget, RationalMatrix]:
    """Stretch every witness edge by some length in ``[k0, k0 + q]`` to clear zero diagonals."""
    k0 = positive_walk_threshold(m)
    lengths = range(k0, k0 + m.q + 1)
    powers = {n: m.power(n) for n in lengths}
    edges = k.graph.edge_count
    uniform = [(n,) * edges for n in lengths]
    rest = (psi for psi in itertools.product(lengths, repeat=edges) if len(set(psi)) > 1)
    for tried, psi in enumerate(itertools.chain(uniform, rest)):
        if tried > budget.states:
            break
        sig = signature_edgewise(k, [powers[n] for n in psi], m.q, budget.cap)
        if sig[x, x] != sig[y, y] and all(v > 0 for v in sig.diagonal()):
            # untouched edges stay in front, so edge 0 is always the next original edge
            stretched = k
            for e in range(edges):
                stretched = EdgeGadget(replace_edges(stretched.graph, stretch(psi[e]), [0]), stretched.l1, stretched.l2)
            if not sig.is_symmetric():
                return symmetrize(stretched), sig.hadamard(sig.transpose())
            return stretched, sig
    raise BudgetExceeded(f"no path-length assignment repairs the witness for ({x}, {y})")


def combine_separators(
    m: RationalMatrix,
    witnesses: dict[tuple[int, int], EdgeGadget],
    budget: Budget | None = None,
    max_bound: int = 8,
) -> Combination:
    """Merge pairwise separators into one gadget with a distinct diagonal.

    ``z_xy`` parallel copies of each witness give diagonal entries
    ``Π K_xy(M)_ii^{z_xy}``; ``z`` is searched in growing boxes ``[1, B]``.
    """
    budget = budget or Budget()
    _require_nonnegative(m)
    gamma = underlying_graph(m)
    if len(connected_components(gamma)) != 1:
        raise PreconditionError(
            "support graph of M is disconnected; combining separators is only known to work for connected "
            "support (mixed bipartite/non-bipartite components can block it)"
        )
    bip = bipartition(gamma) is not None
    pairs = list(itertools.combinations(range(m.q), 2))
    parts: list[tuple[EdgeGadget, RationalMatrix]] = []
    for x, y in pairs:
        if (x, y) not in witnesses:
            raise PreconditionError(f"missing witness for pair ({x}, {y})")
        k = witnesses[(x, y)]
        sig = signature(k, m, budget.cap)
        if sig[x, x] == sig[y, y]:
            raise PreconditionError(f"witness for ({x}, {y}) does not separate it")
        if any(v <= 0 for v in sig.diagonal()):
            if bip:
                raise ConsistencyError(
                    "a separating witness on a connected bipartite support must have a positive diagonal"
                )
            k, sig = _repair(m, k, x, y, budget)
        parts.append((k, sig))
    if not parts:
        k = single_edge()
        return Combination(k, m, {}, "trivial")
    diags = [p[1].diagonal() for p in parts]
    for bound in range(1, max_bound + 1):
        for z in itertools.product(range(1, bound + 1), repeat=len(parts)):
            if max(z) != bound:
                continue
            values = []
            for i in range(m.q):
                v = Fraction(1)
                for dvec, e in zip(diags, z):
                    v *= dvec[i] ** e
                values.append(v)
            if len(set(values)) == m.q:
                return _build_combination(m, parts, pairs, z, budget)
    raise BudgetExceeded(f"no multiplicity vector with entries <= {max_bound} gives a distinct diagonal")


def _build_combination(m, parts, pairs, z, budget) -> Combination:
    copies = [k for (k, _), e in zip(parts, z) for _ in range(e)]
    gadget = copies[0]
    for k in copies[1:]:
        gadget = parallel(gadget, k)
    predicted = parts[0][1].hadamard_power(z[0])
    for (_, sig), e in zip(parts[1:], z[1:]):
        predicted = predicted.hadamard(sig.hadamard_power(e))
    try:
        actual = signature(gadget, m, budget.cap)
        verified_by = "bruteforce"
    except DeadlineExceeded:
        raise
    except BudgetExceeded:
        actual, verified_by = predicted, "composition"
    if actual != predicted:
        raise ConsistencyError("combined gadget signature disagrees with the product formula")
    if len(set(actual.diagonal())) != m.q:
        raise ConsistencyError("combined gadget is not diagonal distinct")
    return Combination(gadget, actual, {f"{x},{y}": e for (x, y), e in zip(pairs, z)}, verified_by)
