"""Interpolation reductions driven by oracle calls to ``Z_M``.

Each reduction queries ``Z_M`` on a family of transformed graphs
``F_1 G, F_2 G, ...`` whose values are power sums ``Σ_x x^p c(x)`` over a
finite node set, recovers the coefficients ``c(x)`` with an exact
Vandermonde solve, and re-weights them to obtain ``Z_N(G)`` for a new
matrix ``N``.  Everything the reduction did is kept in a
:class:`ReductionTranscript` that :func:`verify_transcript` can replay.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Callable, Sequence

import mpmath

from .errors import ConsistencyError, PreconditionError
from .gadgets import bridge, graph_from_json, graph_to_json, loop, replace_edges, stretch, thicken
from .matrix import (
    RationalMatrix,
    WeightMatrix,
    generating_set,
    is_positive_definite,
    matrix_from_json,
    to_fraction,
    wrap,
)
from .multigraph import MultiGraph
from .partition import candidate_values, compositions, eval_bruteforce

Oracle = Callable[[RationalMatrix, MultiGraph], Fraction]


# ---------------------------------------------------------------- solver


def vandermonde_solve(nodes: Sequence, values: Sequence) -> list[Fraction]:
    """Solve ``Σ_k c_k x_k^p = values[p-1]`` for ``p = 1..n``.

    >>> vandermonde_solve([1, 2], [13, 23])
    [Fraction(3, 1), Fraction(5, 1)]

    Substituting ``c'_k = c_k x_k`` gives a transposed Vandermonde system,
    solved through the Lagrange basis of the node polynomial.  Nodes are
    scaled to integers so the inner loops stay in integer arithmetic.
    """
    xs = [to_fraction(x) for x in nodes]
    vs = [to_fraction(v) for v in values]
    n = len(xs)
    if n != len(vs):
        raise PreconditionError(f"{n} nodes but {len(vs)} values")
    if len(set(xs)) != n:
        raise PreconditionError("Vandermonde nodes must be pairwise distinct")
    if any(x == 0 for x in xs):
        raise PreconditionError("zero node makes the system singular")
    if n == 0:
        return []
    den = reduce(math.lcm, (x.denominator for x in xs), 1)
    ys = [int(x * den) for x in xs]
    rhs = [v * Fraction(den) ** p for p, v in enumerate(vs)]
    rden = reduce(math.lcm, (r.denominator for r in rhs), 1)
    b = [int(r * rden) for r in rhs]

    # master polynomial, highest degree first
    master = [1]
    for y in ys:
        master = [a - y * c for a, c in zip(master + [0], [0] + master)]
    out = []
    for k, y in enumerate(ys):
        # synthetic division of the master polynomial by (t - y)
        quot = [master[0]]
        for a in master[1:-1]:
            quot.append(a + y * quot[-1])
        # quot holds degree n-1 .. 0; coefficient of t^(p-1) is quot[n-p]
        numer = sum(quot[n - 1 - j] * b[j] for j in range(n))
        denom = 1
        for j, other in enumerate(ys):
            if j != k:
                denom *= y - other
        out.append(Fraction(numer, denom * rden) / xs[k])
    return out


# ---------------------------------------------------------------- transcripts


@dataclass(frozen=True)
class Query:
    graph: MultiGraph
    value: Fraction


@dataclass
class ReductionTranscript:
    construction: str
    matrix: WeightMatrix
    target: RationalMatrix | None
    z: tuple[Fraction, ...]
    queries: list[Query] = field(default_factory=list)
    nodes: list[Fraction] = field(default_factory=list)
    solution: list[Fraction] = field(default_factory=list)
    weights: list[Fraction] = field(default_factory=list)
    result: Fraction = Fraction(0)
    scale: Fraction = Fraction(1)

    def to_json(self) -> dict:
        return {
            "construction": self.construction,
            "matrix": self.matrix.to_json(),
            "target": None if self.target is None else self.target.to_json(),
            "z": [str(x) for x in self.z],
            "queries": [{"graph": graph_to_json(q.graph), "value": str(q.value)} for q in self.queries],
            "solve": {
                "nodes": [str(x) for x in self.nodes],
                "solution": [str(x) for x in self.solution],
                "weights": [str(x) for x in self.weights],
            },
            "result": str(self.result),
            "scale": str(self.scale),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, doc: dict) -> "ReductionTranscript":
        solve = doc.get("solve", {})
        target = doc.get("target")
        return cls(
            construction=doc["construction"],
            matrix=matrix_from_json(doc["matrix"]),
            target=None if target is None else matrix_from_json(target),
            z=tuple(Fraction(x) for x in doc.get("z", [])),
            queries=[Query(graph_from_json(q["graph"]), Fraction(q["value"])) for q in doc.get("queries", [])],
            nodes=[Fraction(x) for x in solve.get("nodes", [])],
            solution=[Fraction(x) for x in solve.get("solution", [])],
            weights=[Fraction(x) for x in solve.get("weights", [])],
            result=Fraction(doc["result"]),
            scale=Fraction(doc.get("scale", "1")),
        )


@dataclass(frozen=True)
class Verification:
    ok: bool
    first_bad_query: int | None = None
    message: str = ""
    warnings: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


def verify_transcript(t: ReductionTranscript, oracle: Oracle | None = None) -> Verification:
    """Replay every query, re-solve, and compare the result exactly."""
    oracle = oracle or eval_bruteforce
    if not t.queries:
        return Verification(True, warnings=("transcript has no queries; nothing to check",))
    for idx, q in enumerate(t.queries):
        fresh = Fraction(oracle(t.matrix, q.graph))
        if fresh != q.value:
            return Verification(False, idx, f"query {idx}: recorded {q.value}, replay gives {fresh}")
    if len(t.nodes) != len(t.queries) or len(set(t.nodes)) != len(t.nodes):
        return Verification(False, None, "solve record is not a square system with distinct nodes")
    solution = vandermonde_solve(t.nodes, [q.value for q in t.queries])
    if solution != t.solution:
        return Verification(False, None, "re-solved coefficients differ from the record")
    result = sum((w * c for w, c in zip(t.weights, solution)), Fraction(0))
    if result != t.result:
        return Verification(False, None, f"recomputed result {result} differs from recorded {t.result}")
    return Verification(True)


@dataclass(frozen=True)
class Reduction:
    value: Fraction
    transcript: ReductionTranscript


# ---------------------------------------------------------------- thickening


def _shifted_monomial(sign: int, vec, floor, count: int, z, value) -> Fraction:
    out = Fraction(-1 if sign else 1)
    for zt, e, low in zip(z, vec, floor):
        power = e - count * low
        if power < 0 and zt == 0:
            raise PreconditionError(f"cannot map {value}: zero parameter raised to a negative power")
        out *= zt**power
    return out


def thickening_target(m: RationalMatrix, z: Sequence) -> tuple[RationalMatrix, Fraction]:
    """``T*_M(z)`` and the scale ``c`` with ``T*_M(generators) = c·M``."""
    gs, floor, z = _thickening_setup(m, z)
    q = m.q
    rows = [[_shifted_monomial(*gs.exponents(m[i, j]), floor, 1, z, m[i, j]) for j in range(q)] for i in range(q)]
    return wrap(rows), _scale(gs.generators, floor)


def _thickening_setup(m: RationalMatrix, z):
    if any(x == 0 for x in m.entries()):
        raise PreconditionError("thickening reduction needs all entries nonzero")
    gs = generating_set(set(m.entries()))
    z = tuple(to_fraction(x) for x in z)
    if len(z) != len(gs.generators):
        raise PreconditionError(f"z has {len(z)} coordinates, generating set {list(gs.generators)} has {len(gs.generators)}")
    d = len(gs.generators)
    floor = [min(gs.exponents(x)[1][t] for x in m.entries()) for t in range(d)]
    return gs, floor, z


def _scale(generators, floor) -> Fraction:
    out = Fraction(1)
    for g, low in zip(generators, floor):
        out *= Fraction(g) ** (-low)
    return out


def thicken_reduce(m: WeightMatrix, g: MultiGraph, z: Sequence, oracle: Oracle | None = None) -> Reduction:
    """Compute ``Z_{T*_M(z)}(G)`` from ``Z_M`` values on ``T_p G``."""
    oracle = oracle or eval_bruteforce
    gs, floor, z = _thickening_setup(m, z)
    target, scale = thickening_target(m, z)
    edges = g.edge_count
    nodes = candidate_values(m, edges)
    slots = m.q * (m.q + 1) // 2
    if len(nodes) > math.comb(edges + slots - 1, slots - 1):
        raise ConsistencyError("more nodes than compositions")
    queries = []
    for p in range(1, len(nodes) + 1):
        tg = replace_edges(g, thicken(p))
        queries.append(Query(tg, Fraction(oracle(m, tg))))
    solution = vandermonde_solve(nodes, [q.value for q in queries])
    weights = [_shifted_monomial(*gs.decompose(x), floor, edges, z, x) for x in nodes]
    result = sum((w * c for w, c in zip(weights, solution)), Fraction(0))
    t = ReductionTranscript("thicken", m, target, z, queries, nodes, solution, weights, result, scale)
    return Reduction(result, t)


# ---------------------------------------------------------------- loops


def loop_target(m: RationalMatrix, z: Sequence) -> tuple[RationalMatrix, Fraction]:
    """``D* M D*`` where ``D*_ii`` re-expresses ``M_ii`` over ``z``; plus the scale."""
    gs, floor, z = _loop_setup(m, z)
    q = m.q
    dstar = [_shifted_monomial(*gs.exponents(m[i, i]), floor, 1, z, m[i, i]) for i in range(q)]
    return wrap([[dstar[i] * m[i, j] * dstar[j] for j in range(q)] for i in range(q)]), _scale(gs.generators, floor)


def _loop_setup(m: RationalMatrix, z):
    diag = m.diagonal()
    if any(x <= 0 for x in diag):
        raise PreconditionError("loop reduction needs a positive diagonal")
    gs = generating_set(set(diag))
    z = tuple(to_fraction(x) for x in z)
    if len(z) != len(gs.generators):
        raise PreconditionError(f"z has {len(z)} coordinates, generating set {list(gs.generators)} has {len(gs.generators)}")
    floor = [min(gs.exponents(x)[1][t] for x in diag) for t in range(len(gs.generators))]
    return gs, floor, z


def loop_nodes(m: RationalMatrix, degree_total: int) -> list[Fraction]:
    diag = m.diagonal()
    seen = set()
    for k in compositions(degree_total, m.q):
        val = Fraction(1)
        for a, e in zip(diag, k):
            val *= a**e
        seen.add(val)
    return sorted(seen)


def loop_reduce(m: WeightMatrix, g: MultiGraph, z: Sequence, oracle: Oracle | None = None) -> Reduction:
    """Compute ``Z_{D* M D*}(G)`` from ``Z_M`` values on ``L_n G``.

    ``Z_M(L_n G) = Σ_x x^n c(x)`` where ``x = Π_v A_{σ(v)}^{deg v}`` ranges
    over products of ``2|E|`` diagonal entries (loops count twice) and
    ``c(x)`` collects the edge weights of the assignments producing ``x``.
    """
    oracle = oracle or eval_bruteforce
    gs, floor, z = _loop_setup(m, z)
    target, scale = loop_target(m, z)
    total_degree = 2 * g.edge_count
    nodes = loop_nodes(m, total_degree)
    queries = []
    for n in range(1, len(nodes) + 1):
        lg = replace_edges(g, loop(n))
        queries.append(Query(lg, Fraction(oracle(m, lg))))
    solution = vandermonde_solve(nodes, [q.value for q in queries])
    weights = [_shifted_monomial(*gs.decompose(x), floor, total_degree, z, x) for x in nodes]
    result = sum((w * c for w, c in zip(weights, solution)), Fraction(0))
    t = ReductionTranscript("loop", m, target, z, queries, nodes, solution, weights, result, scale)
    return Reduction(result, t)


# ---------------------------------------------------------------- stretching and bridging


@dataclass(frozen=True)
class FloatResult:
    """Approximate value from the floating mode; never mixed with exact output."""

    value: float
    nodes: int
    exact: bool = False


_MP_DIGITS = 60


def _is_integral(theta) -> bool:
    return isinstance(theta, int) or (isinstance(theta, Fraction) and theta.denominator == 1)


def stretch_reduce(
    m: WeightMatrix,
    g: MultiGraph,
    n: int | None = None,
    *,
    theta=None,
    allow_float: bool = False,
    oracle: Oracle | None = None,
):
    """``Z_{M^n}(G)``, cross-checked through ``S_n G`` and through ``M^n``.

    A non-integral ``theta`` switches to the floating mode, which needs
    ``allow_float=True`` and a positive-definite ``M``.
    """
    oracle = oracle or eval_bruteforce
    if theta is not None and not _is_integral(theta):
        if not allow_float:
            raise PreconditionError("non-integer exponent needs the floating mode (allow_float=True)")
        if not is_positive_definite(m):
            raise PreconditionError("floating stretch needs a positive-definite matrix")
        return _float_stretch(m, g, theta, oracle)
    n = int(theta) if theta is not None else n
    if n is None or n < 1:
        raise PreconditionError("stretch exponent must be an integer >= 1")
    via_gadget = Fraction(oracle(m, replace_edges(g, stretch(n))))
    via_signature = eval_bruteforce(m.power(n), g)
    if via_gadget != via_signature:
        raise ConsistencyError(f"stretch mismatch: {via_gadget} != {via_signature}")
    return via_gadget


def bridge_reduce(
    m: WeightMatrix,
    g: MultiGraph,
    n: int | None = None,
    *,
    theta=None,
    allow_float: bool = False,
    oracle: Oracle | None = None,
):
    """``Z_{M · M^{∘n} · M}(G)`` via ``B_n G`` and via the closed form.

    Floating mode (non-integral ``theta``) needs ``allow_float=True`` and a
    strictly positive ``M``.
    """
    oracle = oracle or eval_bruteforce
    if m.is_zero():
        raise PreconditionError("bridge reduction needs a nonzero matrix")
    if theta is not None and not _is_integral(theta):
        if not allow_float:
            raise PreconditionError("non-integer exponent needs the floating mode (allow_float=True)")
        if any(x <= 0 for x in m.entries()):
            raise PreconditionError("floating bridge needs strictly positive entries")
        return _float_bridge(m, g, theta, oracle)
    n = int(theta) if theta is not None else n
    if n is None or n < 1:
        raise PreconditionError("bridge exponent must be an integer >= 1")
    via_gadget = Fraction(oracle(m, replace_edges(g, bridge(n))))
    via_signature = eval_bruteforce(m @ m.hadamard_power(n) @ m, g)
    if via_gadget != via_signature:
        raise ConsistencyError(f"bridge mismatch: {via_gadget} != {via_signature}")
    return via_gadget


def _mp(x: Fraction):
    return mpmath.mpf(x.numerator) / x.denominator


def _dedupe(values, tol):
    out = []
    for v in sorted(values):
        if not out or abs(v - out[-1]) > tol * max(1, abs(v)):
            out.append(v)
    return out


def _float_solve(nodes, values):
    size = len(nodes)
    mat = mpmath.matrix(size, size)
    for p in range(size):
        for k, x in enumerate(nodes):
            mat[p, k] = x ** (p + 1)
    return mpmath.lu_solve(mat, mpmath.matrix(values))


def _float_stretch(m, g, theta, oracle) -> FloatResult:
    with mpmath.workdps(_MP_DIGITS):
        a = mpmath.matrix([[_mp(x) for x in row] for row in m.rows])
        eigvals, _ = mpmath.eigsy(a)
        lam = [eigvals[i] for i in range(m.q)]
        products = set()
        for k in compositions(g.edge_count, m.q):
            val = mpmath.mpf(1)
            for lv, e in zip(lam, k):
                val *= lv**e
            products.add(val)
        nodes = _dedupe(products, mpmath.mpf(10) ** (-(_MP_DIGITS // 2)))
        values = [_mp(Fraction(oracle(m, replace_edges(g, stretch(p))))) for p in range(1, len(nodes) + 1)]
        coeffs = _float_solve(nodes, values)
        th = mpmath.mpf(theta.numerator) / theta.denominator if isinstance(theta, Fraction) else mpmath.mpf(theta)
        total = sum(coeffs[k] * nodes[k] ** th for k in range(len(nodes)))
        return FloatResult(float(total), len(nodes))


def _float_bridge(m, g, theta, oracle) -> FloatResult:
    with mpmath.workdps(_MP_DIGITS):
        nodes_exact = candidate_values(m, g.edge_count)
        nodes = [_mp(x) for x in nodes_exact]
        values = [_mp(Fraction(oracle(m, replace_edges(g, bridge(p))))) for p in range(1, len(nodes) + 1)]
        coeffs = _float_solve(nodes, values)
        th = mpmath.mpf(theta.numerator) / theta.denominator if isinstance(theta, Fraction) else mpmath.mpf(theta)
        total = sum(coeffs[k] * nodes[k] ** th for k in range(len(nodes)))
        return FloatResult(float(total), len(nodes))
