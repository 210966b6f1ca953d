"""Exact rational matrices, distinctness predicates and support structure.

Entries are :class:`fractions.Fraction`.  :class:`RationalMatrix` is a plain
square matrix (gadget signatures can be asymmetric); :class:`WeightMatrix`
adds the symmetry invariant required of edge-weight matrices.  Arithmetic
helpers return a ``WeightMatrix`` whenever the result happens to be
symmetric, so ``m @ m`` stays a weight matrix.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Iterable, Sequence

from sympy import factorint

from .errors import BudgetExceeded, ParseError, PreconditionError
from .multigraph import MultiGraph, bipartition, connected_components


def to_fraction(x) -> Fraction:
    """Exact conversion; floats are refused so nothing inexact sneaks in."""
    if isinstance(x, bool):
        raise PreconditionError("booleans are not matrix entries")
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"not a rational: {x!r}") from exc
    if hasattr(x, "numerator") and hasattr(x, "denominator") and not isinstance(x, float):
        return Fraction(int(x.numerator), int(x.denominator))
    raise PreconditionError(f"cannot use {type(x).__name__} {x!r} as an exact rational")


def format_fraction(x: Fraction) -> str:
    return str(x)


class RationalMatrix:
    """Square matrix with exact rational entries."""

    __slots__ = ("_rows",)

    def __init__(self, rows: Iterable[Iterable]):
        rows = tuple(tuple(to_fraction(x) for x in row) for row in rows)
        q = len(rows)
        if q == 0:
            raise PreconditionError("matrix must have at least one row")
        for r in rows:
            if len(r) != q:
                raise PreconditionError(f"matrix is not square: a row has {len(r)} entries, expected {q}")
        self._rows = rows

    # ---- basic access
    @property
    def q(self) -> int:
        return len(self._rows)

    @property
    def rows(self) -> tuple[tuple[Fraction, ...], ...]:
        return self._rows

    def __getitem__(self, ij) -> Fraction:
        i, j = ij
        return self._rows[i][j]

    def __eq__(self, other) -> bool:
        return isinstance(other, RationalMatrix) and self._rows == other._rows

    def __hash__(self) -> int:
        return hash(self._rows)

    def __repr__(self) -> str:
        body = ", ".join("[" + ", ".join(str(x) for x in r) + "]" for r in self._rows)
        return f"{type(self).__name__}([{body}])"

    def tolist(self) -> list[list[Fraction]]:
        return [list(r) for r in self._rows]

    def diagonal(self) -> tuple[Fraction, ...]:
        return tuple(self._rows[i][i] for i in range(self.q))

    def entries(self) -> Iterable[Fraction]:
        for r in self._rows:
            yield from r

    def is_symmetric(self) -> bool:
        q = self.q
        return all(self._rows[i][j] == self._rows[j][i] for i in range(q) for j in range(i + 1, q))

    def is_diagonal(self) -> bool:
        return all(self._rows[i][j] == 0 for i in range(self.q) for j in range(self.q) if i != j)

    def is_nonnegative(self) -> bool:
        return all(x >= 0 for x in self.entries())

    def is_zero(self) -> bool:
        return all(x == 0 for x in self.entries())

    def max_bits(self) -> int:
        return max(max(x.numerator.bit_length(), x.denominator.bit_length()) for x in self.entries())

    # ---- algebra
    def __matmul__(self, other: "RationalMatrix") -> "RationalMatrix":
        q = self.q
        if other.q != q:
            raise PreconditionError("dimension mismatch")
        cols = list(zip(*other._rows))
        return wrap([[sum((a * b for a, b in zip(r, c)), Fraction(0)) for c in cols] for r in self._rows])

    def hadamard(self, other: "RationalMatrix") -> "RationalMatrix":
        if other.q != self.q:
            raise PreconditionError("dimension mismatch")
        return wrap([[a * b for a, b in zip(r, s)] for r, s in zip(self._rows, other._rows)])

    def power(self, n: int) -> "RationalMatrix":
        if n < 0:
            raise PreconditionError("negative matrix power")
        result: RationalMatrix = identity(self.q)
        base: RationalMatrix = self
        while n:
            if n & 1:
                result = result @ base
            base = base @ base
            n >>= 1
        return result

    def hadamard_power(self, n: int) -> "RationalMatrix":
        return wrap([[x**n for x in r] for r in self._rows])

    def scale(self, c) -> "RationalMatrix":
        c = to_fraction(c)
        return wrap([[c * x for x in r] for r in self._rows])

    def transpose(self) -> "RationalMatrix":
        return wrap(list(zip(*self._rows)))

    def permute(self, perm: Sequence[int]) -> "RationalMatrix":
        """Return ``P M Pᵀ`` where row ``k`` of the result is row ``perm[k]`` of ``M``."""
        return wrap([[self._rows[a][b] for b in perm] for a in perm])

    def submatrix(self, idx: Sequence[int]) -> "RationalMatrix":
        return self.permute(idx)

    def to_json(self) -> dict:
        return {"q": self.q, "entries": [[format_fraction(x) for x in r] for r in self._rows]}


class WeightMatrix(RationalMatrix):
    """Symmetric rational matrix ``M`` defining a partition function.

    >>> WeightMatrix([[1, 2], [2, 3]]).diagonal()
    (Fraction(1, 1), Fraction(3, 1))
    """

    __slots__ = ()

    def __init__(self, rows, *, nonnegative: bool = False):
        super().__init__(rows)
        q = self.q
        for i in range(q):
            for j in range(i + 1, q):
                if self._rows[i][j] != self._rows[j][i]:
                    raise PreconditionError(f"matrix is not symmetric at ({i}, {j})")
        if nonnegative:
            for i, r in enumerate(self._rows):
                for j, x in enumerate(r):
                    if x < 0:
                        raise PreconditionError(f"negative entry {x} at ({i}, {j})")


def wrap(rows) -> RationalMatrix:
    m = RationalMatrix(rows)
    if m.is_symmetric():
        return as_weight(m)
    return m


def as_weight(m: RationalMatrix) -> WeightMatrix:
    if isinstance(m, WeightMatrix):
        return m
    return WeightMatrix(m.rows)


def identity(q: int) -> WeightMatrix:
    return WeightMatrix([[int(i == j) for j in range(q)] for i in range(q)])


def ones(q: int) -> WeightMatrix:
    return WeightMatrix([[1] * q for _ in range(q)])


def diagonal_matrix(values: Sequence) -> WeightMatrix:
    q = len(values)
    return WeightMatrix([[values[i] if i == j else 0 for j in range(q)] for i in range(q)])


def outer(x: Sequence, y: Sequence) -> RationalMatrix:
    return wrap([[to_fraction(a) * to_fraction(b) for b in y] for a in x])


def matrix_from_json(doc) -> WeightMatrix:
    if not isinstance(doc, dict) or "entries" not in doc:
        raise ParseError('matrix JSON needs an "entries" field')
    entries = doc["entries"]
    if not isinstance(entries, list) or not all(isinstance(r, list) for r in entries):
        raise ParseError('"entries" must be a list of rows')
    m = WeightMatrix([[_json_rational(x) for x in r] for r in entries])
    if "q" in doc and doc["q"] != m.q:
        raise ParseError(f'"q" is {doc["q"]} but entries are {m.q}x{m.q}')
    return m


def _json_rational(x) -> Fraction:
    if isinstance(x, (int, str)) and not isinstance(x, bool):
        return to_fraction(x)
    raise ParseError(f"rational entries must be strings or integers, got {x!r}")


# ---------------------------------------------------------------- linear algebra


def _integer_rows(rows: Sequence[Sequence[Fraction]]) -> list[list[int]]:
    """Clear denominators row by row (positive factors, so signs survive)."""
    out = []
    for r in rows:
        lcm = reduce(math.lcm, (x.denominator for x in r), 1)
        out.append([int(x * lcm) for x in r])
    return out


def _bareiss(a: list[list[int]], pivoting: bool = True) -> tuple[int, list[int]]:
    """Fraction-free elimination in place.

    Returns the rank and the list of pivots.  Without pivoting the k-th pivot
    equals the k-th leading principal minor; elimination stops at the first
    zero pivot.
    """
    n_rows = len(a)
    n_cols = len(a[0]) if a else 0
    prev = 1
    rank = 0
    pivots: list[int] = []
    row = 0
    for col in range(n_cols):
        if row >= n_rows:
            break
        if a[row][col] == 0:
            if not pivoting:
                break
            swap = next((r for r in range(row + 1, n_rows) if a[r][col] != 0), None)
            if swap is None:
                continue
            a[row], a[swap] = a[swap], a[row]
        piv = a[row][col]
        pivots.append(piv)
        for r in range(row + 1, n_rows):
            ar = a[r]
            factor = ar[col]
            for c in range(col + 1, n_cols):
                ar[c] = (piv * ar[c] - factor * a[row][c]) // prev
            ar[col] = 0
        prev = piv
        row += 1
        rank += 1
    return rank, pivots


def rank_exact(m: RationalMatrix) -> int:
    """Rank over the rationals.

    >>> rank_exact(WeightMatrix([[1, 2], [2, 4]]))
    1
    """
    rank, _ = _bareiss(_integer_rows(m.rows))
    return rank


def rank_of_rows(rows: Sequence[Sequence]) -> int:
    if not rows or not rows[0]:
        return 0
    rank, _ = _bareiss(_integer_rows([[to_fraction(x) for x in r] for r in rows]))
    return rank


def determinant(m: RationalMatrix) -> Fraction:
    rows = [list(r) for r in m.rows]
    scale = Fraction(1)
    for r in rows:
        scale /= reduce(math.lcm, (x.denominator for x in r), 1)
    a = _integer_rows(rows)
    q = len(a)
    sign = 1
    prev = 1
    for k in range(q):
        if a[k][k] == 0:
            swap = next((r for r in range(k + 1, q) if a[r][k] != 0), None)
            if swap is None:
                return Fraction(0)
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for r in range(k + 1, q):
            for c in range(k + 1, q):
                a[r][c] = (a[k][k] * a[r][c] - a[r][k] * a[k][c]) // prev
            a[r][k] = 0
        prev = a[k][k]
    return sign * Fraction(a[q - 1][q - 1]) * scale


def is_positive_definite(m: RationalMatrix) -> bool:
    """Sylvester's criterion on exact leading principal minors."""
    if not m.is_symmetric():
        return False
    a = _integer_rows(m.rows)
    _, pivots = _bareiss(a, pivoting=False)
    return len(pivots) == m.q and all(p > 0 for p in pivots)


# ---------------------------------------------------------------- predicates


def _prod(values: Iterable[Fraction]) -> Fraction:
    out = Fraction(1)
    for v in values:
        out *= v
        if out == 0:
            return out
    return out


def phi_mag(m: RationalMatrix) -> Fraction:
    slots = [m[i, j] for i in range(m.q) for j in range(i, m.q)]
    return _prod(a * a - b * b for s, a in enumerate(slots) for t, b in enumerate(slots) if s != t)


def phi_diag(m: RationalMatrix) -> Fraction:
    d = m.diagonal()
    return _prod(d[i] - d[j] for i, j in itertools.combinations(range(m.q), 2))


def psi_diag(m: RationalMatrix) -> Fraction:
    q = m.q
    return _prod(m[i, i] - m[j, k] for i in range(q) for j in range(q) for k in range(q) if (j, k) != (i, i))


def phi_row(m: RationalMatrix) -> Fraction:
    q = m.q
    return _prod(m[i, j] - m[i, k] for i in range(q) for j, k in itertools.combinations(range(q), 2))


def is_diagonal_dominant(m: RationalMatrix) -> bool:
    q = m.q
    off = [abs(m[j, k]) for j in range(q) for k in range(q) if j != k]
    if not off:
        return True
    biggest = max(off)
    return all(m[i, i] > biggest for i in range(q))


def is_i_close(m: RationalMatrix) -> bool:
    third = Fraction(1, 3)
    return all(abs(m[i, j] - (1 if i == j else 0)) < third for i in range(m.q) for j in range(m.q))


@dataclass(frozen=True)
class AlephValue:
    value: float
    exact_zero: bool
    numerically_zero: bool


ALEPH_TOLERANCE = 1e-9


def aleph(m: RationalMatrix) -> AlephValue:
    """Evaluate the four-entry log determinant used by the diagonal-distinct analysis.

    Defined for ``q >= 3`` on the entries ``(1,q), (q,q), (q-1,q-1), (1,1)``
    and ``(q-1,q)`` (1-based), all of which must be positive.
    """
    q = m.q
    if q < 3:
        raise PreconditionError("aleph needs q >= 3")
    a_1q, a_qq = m[0, q - 1], m[q - 1, q - 1]
    a_pp, a_11, a_pq = m[q - 2, q - 2], m[0, 0], m[q - 2, q - 1]
    for name, val in (("(1,q)", a_1q), ("(q,q)", a_qq), ("(q-1,q-1)", a_pp), ("(1,1)", a_11), ("(q-1,q)", a_pq)):
        if val <= 0:
            raise PreconditionError(f"aleph needs a positive entry at {name}, got {val}")
    ratios = [a_1q / a_qq, a_pp / a_qq, a_11 / a_qq, a_pq / a_qq]
    gs = generating_set(ratios)
    v1, v2, v3, v4 = (gs.exponents(r)[1] for r in ratios)
    d = len(gs.generators)
    # ln r = <v, L> with L the logs of the primes; the bilinear form is zero
    # exactly when its symmetrised coefficient matrix vanishes.
    exact_zero = all(
        (v1[s] * v2[t] + v1[t] * v2[s]) == (v3[s] * v4[t] + v3[t] * v4[s]) for s in range(d) for t in range(d)
    )
    logs = [_log_fraction(r) for r in ratios]
    value = 0.0 if exact_zero else logs[0] * logs[1] - logs[2] * logs[3]
    return AlephValue(value=value, exact_zero=exact_zero, numerically_zero=abs(value) < ALEPH_TOLERANCE)


def _log_fraction(x: Fraction) -> float:
    return math.log(x.numerator) - math.log(x.denominator)


@dataclass(frozen=True)
class PredicateReport:
    phi_mag: Fraction
    phi_diag: Fraction
    psi_diag: Fraction
    phi_row: Fraction
    diagonal_dominant: bool
    i_close: bool
    aleph: AlephValue | None
    rank: int
    is_positive_definite: bool
    is_full_rank: bool

    def to_json(self) -> dict:
        out = {
            "phi_mag": str(self.phi_mag),
            "phi_diag": str(self.phi_diag),
            "psi_diag": str(self.psi_diag),
            "phi_row": str(self.phi_row),
            "diagonal_dominant": self.diagonal_dominant,
            "i_close": self.i_close,
            "rank": self.rank,
            "is_positive_definite": self.is_positive_definite,
            "is_full_rank": self.is_full_rank,
            "aleph": None,
        }
        if self.aleph is not None:
            out["aleph"] = {
                "value": repr(self.aleph.value),
                "exact_zero": self.aleph.exact_zero,
                "numerically_zero": self.aleph.numerically_zero,
                "exact": self.aleph.exact_zero,
            }
        return out


def predicates(m: RationalMatrix, *, require_aleph: bool = False) -> PredicateReport:
    """Evaluate every distinctness predicate on ``m``.

    ``aleph`` is left as ``None`` when it is undefined for ``m`` (``q < 3`` or
    a non-positive entry), unless ``require_aleph`` asks for the error.
    """
    try:
        aleph_value = aleph(m)
    except PreconditionError:
        if require_aleph:
            raise
        aleph_value = None
    rank = rank_exact(m)
    return PredicateReport(
        phi_mag=phi_mag(m),
        phi_diag=phi_diag(m),
        psi_diag=psi_diag(m),
        phi_row=phi_row(m),
        diagonal_dominant=is_diagonal_dominant(m),
        i_close=is_i_close(m),
        aleph=aleph_value,
        rank=rank,
        is_positive_definite=is_positive_definite(m),
        is_full_rank=rank == m.q,
    )


# ---------------------------------------------------------------- generating sets


@dataclass(frozen=True)
class GeneratingSet:
    """Primes ``g_1 < ... < g_d`` with a signed exponent vector per input value."""

    generators: tuple[int, ...]
    exponent_map: dict

    def exponents(self, value) -> tuple[int, tuple[int, ...]]:
        value = to_fraction(value)
        try:
            return self.exponent_map[value]
        except KeyError:
            return self.decompose(value)

    def decompose(self, value) -> tuple[int, tuple[int, ...]]:
        """Express any nonzero rational over these generators, or fail."""
        value = to_fraction(value)
        if value == 0:
            raise PreconditionError("zero has no generating-set exponents")
        sign = 1 if value < 0 else 0
        num, den = abs(value.numerator), value.denominator
        vec = []
        for p in self.generators:
            e = 0
            while num % p == 0:
                num //= p
                e += 1
            while den % p == 0:
                den //= p
                e -= 1
            vec.append(e)
        if num != 1 or den != 1:
            raise PreconditionError(f"{value} is not generated by {list(self.generators)}")
        return sign, tuple(vec)

    def rebuild(self, sign: int, vec: Sequence[int]) -> Fraction:
        out = Fraction(-1 if sign else 1)
        for p, e in zip(self.generators, vec):
            out *= Fraction(p) ** e
        return out


def generating_set(values: Iterable) -> GeneratingSet:
    """Prime generating set of a finite set of nonzero rationals.

    >>> gs = generating_set([4, 6, 9])
    >>> gs.generators, gs.exponents(6)
    ((2, 3), (0, (1, 1)))
    """
    vals = [to_fraction(v) for v in values]
    primes: set[int] = set()
    for v in vals:
        if v == 0:
            raise PreconditionError("generating sets need nonzero values")
        for part in (abs(v.numerator), v.denominator):
            if part > 1:
                primes.update(int(p) for p in factorint(part))
    partial = GeneratingSet(tuple(sorted(primes)), {})
    mapping = {v: partial.decompose(v) for v in vals}
    return GeneratingSet(partial.generators, mapping)


def order_profile(m: RationalMatrix, bound: int = 32) -> list[list[int]]:
    """Integer exponents ``x`` with ``M_ij ↦ z^{x_ij}`` preserving the entry order.

    Weights ``w`` over the generating set are tried in increasing max-norm,
    lexicographically within a norm, until ``x = Σ w_t (e_t - e*_t)`` orders
    the entries exactly like ``M``.
    """
    q = m.q
    if any(x <= 0 for x in m.entries()):
        raise PreconditionError("order profile needs a strictly positive matrix")
    gs = generating_set(set(m.entries()))
    d = len(gs.generators)
    exps = {(i, j): gs.exponents(m[i, j])[1] for i in range(q) for j in range(q)}
    floor = [min(v[t] for v in exps.values()) for t in range(d)]
    shifted = {k: [v[t] - floor[t] for t in range(d)] for k, v in exps.items()}
    keys = sorted(exps)
    want = [m[k[0], k[1]] for k in keys]
    for norm in range(1, bound + 1):
        for w in itertools.product(range(1, norm + 1), repeat=d):
            if d and max(w) != norm:
                continue
            x = [sum(wt * e for wt, e in zip(w, shifted[k])) for k in keys]
            if _same_order(want, x):
                low = min(x)
                out = [[0] * q for _ in range(q)]
                for k, val in zip(keys, x):
                    out[k[0]][k[1]] = val - low
                return out
            if not d:
                break
        if not d:
            break
    raise BudgetExceeded(f"no order-preserving weight vector with max-norm <= {bound}")


def _same_order(a: Sequence, b: Sequence) -> bool:
    n = len(a)
    for s in range(n):
        for t in range(s + 1, n):
            if (a[s] < a[t]) != (b[s] < b[t]) or (a[s] == a[t]) != (b[s] == b[t]):
                return False
    return True


# ---------------------------------------------------------------- support graph


def underlying_graph(m: RationalMatrix) -> MultiGraph:
    """Positivity pattern of ``m`` as a simple graph with loops."""
    q = m.q
    if not m.is_nonnegative():
        raise PreconditionError("underlying graph needs a non-negative matrix")
    edges = [(i, j) for i in range(q) for j in range(i, q) if m[i, j] > 0]
    return MultiGraph(q, edges)


@dataclass(frozen=True)
class Block:
    vertices: tuple[int, ...]
    matrix: WeightMatrix

    @property
    def rank(self) -> int:
        return rank_exact(self.matrix)


@dataclass(frozen=True)
class Decomposition:
    blocks: tuple[Block, ...]
    permutation: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.blocks)


def direct_sum_decompose(m: RationalMatrix) -> Decomposition:
    """Split ``m`` along the connected components of its support graph."""
    comps = connected_components(underlying_graph(m))
    blocks = tuple(Block(tuple(c), as_weight(m.submatrix(c))) for c in comps)
    perm = tuple(v for c in comps for v in c)
    return Decomposition(blocks, perm)


def bipartite_split(m: RationalMatrix) -> tuple[list[int], list[int]] | None:
    """Sides of a connected bipartite support graph, else ``None``."""
    gamma = underlying_graph(m)
    if len(connected_components(gamma)) != 1:
        return None
    return bipartition(gamma)


def is_bipartite_rank2(m: RationalMatrix) -> bool:
    """Connected bipartite support, zero diagonal, rank-one off-diagonal block."""
    if m.q < 2 or not m.is_nonnegative() or any(x != 0 for x in m.diagonal()):
        return False
    sides = bipartite_split(m)
    if sides is None:
        return False
    left, right = sides
    if not left or not right:
        return False
    return rank_of_rows([[m[i, j] for j in right] for i in left]) == 1
