"""Edge gadgets, their signatures, compositions and graph transforms.

An :class:`EdgeGadget` is a multigraph with two label vertices.  Its
signature under ``M`` is the matrix of partition functions with the labels
pinned: ``K(M)[i, j] = Σ_{τ: τ(l1)=i, τ(l2)=j} Π_e M[τ(e)]``.  When the two
labels coincide the gadget is *binary* and the signature is diagonal.

Every composition also composes rotation systems.  Gluing works on
*sectors*: the darts around a label listed in rotation order, starting
right after the corner where the chosen outer face touches that label.
Placing a gadget into the slot of an edge (or onto another gadget's label)
amounts to splicing those sectors into the host rotation.  Whether the
result really is planar is never assumed; :attr:`EdgeGadget.planar_certified`
re-checks it with a face trace.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, reduce
from typing import Sequence

import numpy as np

from .errors import BudgetExceeded, ParseError, PreconditionError
from .matrix import RationalMatrix, wrap
from .multigraph import MultiGraph, connected_components, disjoint_union, trace_faces
from .partition import DEFAULT_CAP, _integer_scaling, _product_chunks


@dataclass(frozen=True)
class EdgeGadget:
    graph: MultiGraph
    l1: int
    l2: int

    def __post_init__(self):
        for name, v in (("l1", self.l1), ("l2", self.l2)):
            if not 0 <= v < self.graph.n:
                raise PreconditionError(f"{name} = {v} is not a vertex of the gadget")

    @property
    def is_binary(self) -> bool:
        return self.l1 == self.l2

    @property
    def rotation(self):
        return self.graph.rotation

    def reversed(self) -> "EdgeGadget":
        return EdgeGadget(self.graph, self.l2, self.l1)

    @cached_property
    def _faces(self):
        if self.graph.rotation is None:
            return None
        return trace_faces(self.graph)

    @cached_property
    def outer_face(self) -> int | None:
        """Index of the first traced face touching both labels, if any."""
        trace = self._faces
        if trace is None:
            return None
        for idx, face in enumerate(trace.faces):
            at = {self.graph.dart_vertex(d) for d in face}
            if self.l1 in at and self.l2 in at:
                return idx
        return None

    @cached_property
    def planar_certified(self) -> bool:
        trace = self._faces
        if trace is None or not trace.is_planar:
            return False
        if self.is_binary or self.outer_face is not None:
            return True
        deg = self.graph.degrees()
        if deg[self.l1] == 0 or deg[self.l2] == 0:
            return True
        comp = {v: ci for ci, c in enumerate(connected_components(self.graph)) for v in c}
        return comp[self.l1] != comp[self.l2]

    def sector(self, label: int) -> list[int]:
        """Darts around ``label`` starting just after its outer-face corner."""
        g = self.graph
        if g.rotation is None:
            raise PreconditionError("gadget carries no rotation system")
        cyc = list(g.rotation[label])
        if not cyc:
            return []
        trace = self._faces
        faces = trace.faces
        order = [self.outer_face] if self.outer_face is not None else []
        order += [i for i in range(len(faces)) if i != self.outer_face]
        for idx in order:
            for d in faces[idx]:
                if g.dart_vertex(d) == label:
                    k = cyc.index(d)
                    return cyc[k:] + cyc[:k]
        return cyc

    def to_json(self) -> dict:
        doc = graph_to_json(self.graph)
        doc["l1"] = self.l1
        doc["l2"] = self.l2
        return doc


# ---------------------------------------------------------------- JSON


def graph_to_json(g: MultiGraph) -> dict:
    doc: dict = {"n": g.n, "edges": [[u, v] for u, v in g.edges]}
    if g.rotation is not None:
        doc["rotation"] = {str(v): list(cyc) for v, cyc in enumerate(g.rotation)}
    return doc


def graph_from_json(doc) -> MultiGraph:
    if not isinstance(doc, dict) or "n" not in doc or "edges" not in doc:
        raise ParseError('graph JSON needs "n" and "edges"')
    n = doc["n"]
    edges = doc["edges"]
    if not isinstance(n, int) or not isinstance(edges, list):
        raise ParseError('"n" must be an integer and "edges" a list')
    pairs = []
    for e in edges:
        if not (isinstance(e, list) and len(e) == 2 and all(isinstance(x, int) for x in e)):
            raise ParseError(f"edge {e!r} is not a pair of integers")
        pairs.append((e[0], e[1]))
    rotation = None
    if doc.get("rotation") is not None:
        rot = doc["rotation"]
        if not isinstance(rot, dict):
            raise ParseError('"rotation" must map vertex ids to dart lists')
        rotation = tuple(tuple(rot.get(str(v), [])) for v in range(n))
    return MultiGraph(n, pairs, rotation)


def gadget_from_json(doc) -> EdgeGadget:
    g = graph_from_json(doc)
    if "l1" not in doc or "l2" not in doc:
        raise ParseError('gadget JSON needs "l1" and "l2"')
    return EdgeGadget(g, doc["l1"], doc["l2"])


# ---------------------------------------------------------------- signatures


def signature(k: EdgeGadget, m: RationalMatrix, cap: int = DEFAULT_CAP) -> RationalMatrix:
    """Brute-force signature of ``k`` under ``m``.

    >>> from homkit.matrix import WeightMatrix
    >>> signature(thicken(3), WeightMatrix([[1, 2], [2, 3]]))
    WeightMatrix([[1, 8], [8, 27]])
    """
    g = k.graph
    q = m.q
    _, lcm = _integer_scaling(m)
    chunks = list(_product_chunks(m, g, cap))
    flat = np.concatenate(chunks) if len(chunks) > 1 else chunks[0]
    arr = flat.reshape((q,) * g.n)
    keep = sorted({k.l1, k.l2})
    others = tuple(a for a in range(g.n) if a not in keep)
    marg = arr.sum(axis=others) if others else arr
    scale = lcm**g.edge_count
    if k.is_binary:
        vec = [Fraction(int(marg[i]), scale) for i in range(q)]
        return wrap([[vec[i] if i == j else 0 for j in range(q)] for i in range(q)])
    if k.l1 > k.l2:
        marg = marg.T
    return wrap([[Fraction(int(marg[i, j]), scale) for j in range(q)] for i in range(q)])


def signature_edgewise(
    k: EdgeGadget, mats: Sequence[RationalMatrix], q: int | None = None, cap: int = DEFAULT_CAP
) -> RationalMatrix:
    """Signature of ``k`` when edge ``e`` carries its own matrix ``mats[e]``.

    Replacing edge ``e`` by a gadget with signature ``mats[e]`` yields exactly
    this matrix, so stretched or thickened variants of a small gadget can be
    evaluated without enumerating their (many) internal vertices.
    """
    g = k.graph
    if len(mats) != g.edge_count:
        raise PreconditionError("need one matrix per edge")
    q = mats[0].q if mats else q
    if q is None:
        raise PreconditionError("q is needed for a gadget without edges")
    if q**g.n * max(1, g.edge_count) > cap:
        raise BudgetExceeded("edgewise signature enumeration exceeds the cap")
    out = [[Fraction(0)] * q for _ in range(q)]
    for tau in itertools.product(range(q), repeat=g.n):
        w = Fraction(1)
        for (u, v), mat in zip(g.edges, mats):
            w *= mat[tau[u], tau[v]]
            if w == 0:
                break
        if w:
            out[tau[k.l1]][tau[k.l2]] += w
    return wrap(out)


# ---------------------------------------------------------------- assembly


class _Builder:
    """Accumulates vertices, edges and per-vertex dart lists."""

    def __init__(self, n: int = 0):
        self.n = n
        self.edges: list[tuple[int, int]] = []
        self.rot: list[list[int]] = [[] for _ in range(n)]

    def add_vertex(self) -> int:
        self.rot.append([])
        self.n += 1
        return self.n - 1

    def add_copy(self, k: EdgeGadget, vmap: dict[int, int]) -> tuple[dict[int, int], int]:
        """Append all edges of ``k``; unmapped vertices become fresh ones.

        Returns the completed vertex map and the dart offset of the copy.
        Rotations of fresh vertices are filled in; mapped vertices are left
        to the caller, who splices the relevant sectors.
        """
        vmap = dict(vmap)
        offset = 2 * len(self.edges)
        for v in range(k.graph.n):
            if v not in vmap:
                vmap[v] = self.add_vertex()
                if k.graph.rotation is not None:
                    self.rot[vmap[v]] = [d + offset for d in k.graph.rotation[v]]
        for u, v in k.graph.edges:
            self.edges.append((vmap[u], vmap[v]))
        return vmap, offset

    def build(self, embedded: bool) -> MultiGraph:
        rotation = tuple(tuple(c) for c in self.rot) if embedded else None
        return MultiGraph(self.n, self.edges, rotation)


def series(k1: EdgeGadget, k2: EdgeGadget) -> EdgeGadget:
    """Glue ``k1.l2`` to ``k2.l1``; the signature is the matrix product."""
    b = _Builder(0)
    m1, off1 = b.add_copy(k1, {})
    m2, off2 = b.add_copy(k2, {k2.l1: m1[k1.l2]})
    embedded = k1.graph.rotation is not None and k2.graph.rotation is not None
    if embedded:
        glue = m1[k1.l2]
        cyc = [d + off1 for d in k1.sector(k1.l2)]
        if k1.is_binary:
            cyc = [d + off1 for d in k1.sector(k1.l1)]
        cyc += [d + off2 for d in k2.sector(k2.l1)]
        b.rot[glue] = cyc
    return EdgeGadget(b.build(embedded), m1[k1.l1], m2[k2.l2])


def parallel(k1: EdgeGadget, k2: EdgeGadget) -> EdgeGadget:
    """Identify the two ``l1`` and the two ``l2``; signature is entrywise product."""
    if k1.is_binary != k2.is_binary:
        raise PreconditionError("parallel composition needs both gadgets binary or both with distinct labels")
    b = _Builder(0)
    m1, off1 = b.add_copy(k1, {})
    m2, off2 = b.add_copy(k2, {k2.l1: m1[k1.l1], k2.l2: m1[k1.l2]})
    embedded = k1.graph.rotation is not None and k2.graph.rotation is not None
    if embedded:
        a = m1[k1.l1]
        if k1.is_binary:
            b.rot[a] = [d + off2 for d in k2.sector(k2.l1)] + [d + off1 for d in k1.sector(k1.l1)]
        else:
            c = m1[k1.l2]
            b.rot[a] = [d + off2 for d in k2.sector(k2.l1)] + [d + off1 for d in k1.sector(k1.l1)]
            b.rot[c] = [d + off1 for d in k1.sector(k1.l2)] + [d + off2 for d in k2.sector(k2.l2)]
    return EdgeGadget(b.build(embedded), m1[k1.l1], m1[k1.l2])


def symmetrize(k: EdgeGadget) -> EdgeGadget:
    """Two copies glued crosswise: signature ``K_ij · K_ji``."""
    if k.is_binary:
        raise PreconditionError("symmetrize needs distinct labels")
    return parallel(k, k.reversed())


def diag_square(k: EdgeGadget) -> EdgeGadget:
    """Two disjoint copies of a binary gadget, one label in each: ``x xᵀ``."""
    if not k.is_binary:
        raise PreconditionError("diag_square needs a binary gadget (l1 = l2)")
    g = disjoint_union(k.graph, k.graph)
    return EdgeGadget(g, k.l1, k.l1 + k.graph.n)


def merge_labels(k: EdgeGadget) -> EdgeGadget:
    """Identify ``l2`` with ``l1``; the signature becomes ``diag(K(M))``."""
    if k.is_binary:
        return k
    g = k.graph
    keep = [v for v in range(g.n) if v != k.l2]
    index = {v: i for i, v in enumerate(keep)}
    index[k.l2] = index[k.l1]
    edges = [(index[u], index[v]) for u, v in g.edges]
    rotation = None
    if g.rotation is not None:
        rot = [list(g.rotation[v]) for v in keep]
        rot[index[k.l1]] = k.sector(k.l1) + k.sector(k.l2)
        rotation = rot
    return EdgeGadget(MultiGraph(len(keep), edges, rotation), index[k.l1], index[k.l1])


# ---------------------------------------------------------------- families


def single_edge() -> EdgeGadget:
    return EdgeGadget(MultiGraph(2, [(0, 1)], ((0,), (1,))), 0, 1)


def loop_vertex(n: int = 1) -> EdgeGadget:
    """Binary gadget: one vertex carrying ``n`` loops (signature ``diag(M)^n``)."""
    rotation = (tuple(range(2 * n)),)
    return EdgeGadget(MultiGraph(1, [(0, 0)] * n, rotation), 0, 0)


def point() -> EdgeGadget:
    """Binary gadget with one vertex and no edges; signature ``I``."""
    return EdgeGadget(MultiGraph(1, [], ((),)), 0, 0)


def no_edge_gadget(extra: int, same_label: bool = False) -> EdgeGadget:
    """Labels plus ``extra`` isolated vertices: ``q^extra J`` (or ``q^extra I``)."""
    n = (1 if same_label else 2) + extra
    g = MultiGraph(n, [], tuple(() for _ in range(n)))
    return EdgeGadget(g, 0, 0 if same_label else 1)


def _check_n(n: int) -> None:
    if not isinstance(n, int) or n < 1:
        raise PreconditionError(f"gadget parameter must be a positive integer, got {n!r}")


def thicken(n: int) -> EdgeGadget:
    """``n`` parallel edges between the labels; signature ``M^{∘n}``."""
    _check_n(n)
    return reduce(parallel, [single_edge()] * n)


def stretch(n: int) -> EdgeGadget:
    """Path of length ``n`` between the labels; signature ``M^n``."""
    _check_n(n)
    return reduce(series, [single_edge()] * n)


def bridge(n: int) -> EdgeGadget:
    """Path of length 3 whose middle edge is ``n``-fold; signature ``M · M^{∘n} · M``."""
    _check_n(n)
    return series(series(single_edge(), thicken(n)), single_edge())


def loop(n: int) -> EdgeGadget:
    """One edge with ``n`` loops on each label; signature ``D^n M D^n``."""
    _check_n(n)
    return dress(single_edge(), n)


def dress(k: EdgeGadget, n: int = 1) -> EdgeGadget:
    """Attach ``n`` loops to each label: signature ``D^n K(M) D^n``."""
    return series(series(loop_vertex(n), k), loop_vertex(n))


FAMILIES = {"thicken": thicken, "stretch": stretch, "bridge": bridge, "loop": loop}


def random_gadget(rng, max_vertices: int = 4, steps: int = 6) -> EdgeGadget:
    """A random planar gadget with distinct labels, grown by composition.

    ``rng`` is a :class:`random.Random`.  Every step glues on a small piece
    (edge, loop, parallel branch or path) and is skipped if it would exceed
    ``max_vertices``.
    """
    k = single_edge()
    for _ in range(rng.randint(0, steps)):
        choice = rng.randrange(6)
        if choice == 0:
            cand = series(k, single_edge())
        elif choice == 1:
            cand = series(single_edge(), k)
        elif choice == 2:
            cand = parallel(k, single_edge())
        elif choice == 3:
            cand = parallel(k, stretch(2))
        elif choice == 4:
            cand = series(series(loop_vertex(rng.randint(1, 2)), k), point())
        else:
            cand = k.reversed()
        if cand.graph.n <= max_vertices:
            k = cand
    return k


def random_multigraph_gadget(rng, max_vertices: int = 5, max_edges: int = 6) -> EdgeGadget:
    """A random gadget with no embedding; planarity is not guaranteed."""
    n = rng.randint(2, max_vertices)
    edges = [(rng.randrange(n), rng.randrange(n)) for _ in range(rng.randint(0, max_edges))]
    l1 = rng.randrange(n)
    l2 = rng.choice([v for v in range(n) if v != l1])
    return EdgeGadget(MultiGraph(n, edges), l1, l2)


# ---------------------------------------------------------------- transforms


def replace_edges(g: MultiGraph, k: EdgeGadget, edge_ids: Sequence[int] | None = None) -> MultiGraph:
    """Replace edges of ``g`` (all by default) with fresh copies of ``k``.

    Edge ``(u, v)`` becomes a copy with ``l1 ↦ u`` and ``l2 ↦ v``; a loop
    sends both labels to its vertex.  Kept edges come first in the output,
    in their original order, followed by the gadget copies.

    The composed rotation replaces dart ``2e`` at ``u`` by the ``l1`` sector
    of copy ``e`` and dart ``2e + 1`` at ``v`` by the ``l2`` sector.
    """
    if k.is_binary:
        raise PreconditionError("edge replacement needs a gadget with distinct labels")
    targets = set(range(g.edge_count)) if edge_ids is None else set(edge_ids)
    b = _Builder(g.n)
    new_dart: dict[int, int] = {}
    for e, (u, v) in enumerate(g.edges):
        if e not in targets:
            new_dart[2 * e] = 2 * len(b.edges)
            new_dart[2 * e + 1] = 2 * len(b.edges) + 1
            b.edges.append((u, v))
    copy_of: dict[int, tuple[dict[int, int], int]] = {}
    for e, (u, v) in enumerate(g.edges):
        if e in targets:
            vmap, off = b.add_copy(k, {k.l1: u, k.l2: v})
            copy_of[e] = (vmap, off)
    embedded = g.rotation is not None and k.graph.rotation is not None
    if embedded:
        sec1, sec2 = k.sector(k.l1), k.sector(k.l2)
        for u in range(g.n):
            cyc = []
            for d in g.rotation[u]:
                e = d >> 1
                if e in copy_of:
                    _, off = copy_of[e]
                    cyc.extend(x + off for x in (sec1 if d & 1 == 0 else sec2))
                else:
                    cyc.append(new_dart[d])
            b.rot[u] = cyc
    return b.build(embedded)


def ring_transform(g: MultiGraph, m_param: int, n_param: int) -> MultiGraph:
    """Expand every vertex into a ring of ``deg(v)`` vertices in rotation order.

    Original edges reattach to the ring vertex of their dart.  Each ring
    edge becomes a path of length ``m_param`` whose edges are ``n_param``-fold.
    A ring of length 1 is a loop and of length 2 a digon; isolated vertices
    stay as they are.
    """
    if g.rotation is None:
        raise PreconditionError("ring transform needs a rotation system")
    _check_n(m_param)
    _check_n(n_param)
    ring_of_dart: dict[int, int] = {}
    n = 0
    for v, cyc in enumerate(g.rotation):
        if not cyc:
            n += 1
        for d in cyc:
            ring_of_dart[d] = n
            n += 1
    edges = [(ring_of_dart[2 * e], ring_of_dart[2 * e + 1]) for e in range(g.edge_count)]
    rot: list[list[int]] = [[] for _ in range(n)]
    for e in range(g.edge_count):
        rot[ring_of_dart[2 * e]].append(2 * e)
        rot[ring_of_dart[2 * e + 1]].append(2 * e + 1)
    ring_edges = []
    for v, cyc in enumerate(g.rotation):
        d = len(cyc)
        first = len(edges)
        for i in range(d):
            edges.append((ring_of_dart[cyc[i]], ring_of_dart[cyc[(i + 1) % d]]))
            ring_edges.append(len(edges) - 1)
        for i in range(d):
            here = ring_of_dart[cyc[i]]
            forward = first + i
            backward = first + (i - 1) % d
            # outward edge, then the ring edge to the next ring vertex, then the previous one
            rot[here].extend([2 * forward, 2 * backward + 1])
    base = MultiGraph(n, edges, rot)
    if m_param == 1 and n_param == 1:
        return base
    piece = reduce(series, [thicken(n_param)] * m_param)
    return replace_edges(base, piece, ring_edges)
