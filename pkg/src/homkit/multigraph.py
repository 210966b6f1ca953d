"""Undirected multigraphs with loops, parallel edges and optional embeddings.

Edges are stored as an ordered tuple of endpoint pairs; the position of an
edge is its id.  Each edge ``e = (u, v)`` owns two *darts* (edge-ends):
``2e`` sits at ``u`` and ``2e + 1`` sits at ``v``.  A loop places both darts
at the same vertex, which is why loops count twice toward the degree.

A rotation system lists, for every vertex, the cyclic order of the darts
around it.  Faces are traced with the usual successor ``d -> rot(opp(d))``
where ``opp`` flips a dart to the other end of its edge and ``rot`` advances
one step around the vertex.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import InvalidRotation, PreconditionError

Rotation = tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class MultiGraph:
    """An undirected multigraph on vertices ``0 .. n-1``.

    >>> g = MultiGraph(3, [(0, 1), (1, 2), (2, 0)])
    >>> g.degree(0), g.edge_count
    (2, 3)
    """

    n: int
    edges: tuple[tuple[int, int], ...]
    rotation: Rotation | None = None

    def __init__(self, n: int, edges: Iterable[Sequence[int]] = (), rotation=None):
        if n < 0:
            raise PreconditionError("vertex count must be non-negative")
        edge_tuple = tuple((int(u), int(v)) for u, v in edges)
        for e, (u, v) in enumerate(edge_tuple):
            if not (0 <= u < n and 0 <= v < n):
                raise PreconditionError(f"edge {e} = ({u}, {v}) has an endpoint outside [0, {n})")
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "edges", edge_tuple)
        if rotation is not None:
            rotation = tuple(tuple(int(d) for d in cyc) for cyc in rotation)
            check_rotation(self, rotation)
        object.__setattr__(self, "rotation", rotation)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def dart_count(self) -> int:
        return 2 * len(self.edges)

    def dart_vertex(self, d: int) -> int:
        return self.edges[d >> 1][d & 1]

    def degree(self, v: int) -> int:
        return self.degrees()[v]

    def degrees(self) -> list[int]:
        deg = [0] * self.n
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    def darts_at(self, v: int) -> list[int]:
        """Darts incident to ``v`` in increasing id order (not rotation order)."""
        return [d for d in range(self.dart_count) if self.dart_vertex(d) == v]

    def with_rotation(self, rotation) -> "MultiGraph":
        return MultiGraph(self.n, self.edges, rotation)

    def without_rotation(self) -> "MultiGraph":
        return MultiGraph(self.n, self.edges)

    def loop_count(self) -> int:
        return sum(1 for u, v in self.edges if u == v)


def check_rotation(g: MultiGraph, rotation: Rotation) -> None:
    """Raise :class:`InvalidRotation` unless ``rotation`` is a rotation system of ``g``."""
    if len(rotation) != g.n:
        raise InvalidRotation(len(rotation), f"rotation covers {len(rotation)} vertices, graph has {g.n}")
    seen: set[int] = set()
    degrees = g.degrees()
    for v, cyc in enumerate(rotation):
        if len(cyc) != degrees[v]:
            raise InvalidRotation(v, f"cycle has {len(cyc)} darts but degree is {degrees[v]}")
        for d in cyc:
            if not 0 <= d < g.dart_count:
                raise InvalidRotation(v, f"dart {d} does not exist")
            if d in seen:
                raise InvalidRotation(v, f"dart {d} listed twice")
            if g.dart_vertex(d) != v:
                raise InvalidRotation(v, f"dart {d} belongs to vertex {g.dart_vertex(d)}")
            seen.add(d)


def default_rotation(g: MultiGraph) -> Rotation:
    """Darts around each vertex in id order.  Planar only for simple shapes."""
    cyc: list[list[int]] = [[] for _ in range(g.n)]
    for d in range(g.dart_count):
        cyc[g.dart_vertex(d)].append(d)
    return tuple(tuple(c) for c in cyc)


# ---------------------------------------------------------------- structure


def disjoint_union(g1: MultiGraph, g2: MultiGraph) -> MultiGraph:
    """Place ``g2`` next to ``g1``; vertices and edge ids of ``g2`` are shifted.

    The rotation system survives only when both inputs carry one.
    """
    shift = g1.n
    edges = list(g1.edges) + [(u + shift, v + shift) for u, v in g2.edges]
    rotation = None
    if g1.rotation is not None and g2.rotation is not None:
        offset = g1.dart_count
        rotation = g1.rotation + tuple(tuple(d + offset for d in cyc) for cyc in g2.rotation)
    return MultiGraph(g1.n + g2.n, edges, rotation)


def _union_find(n: int, pairs: Iterable[tuple[int, int]]) -> list[int]:
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in pairs:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[max(ru, rv)] = min(ru, rv)
    return [find(x) for x in range(n)]


def connected_components(g: MultiGraph) -> list[list[int]]:
    """Vertex classes of ``g``, each sorted, listed by smallest member."""
    roots = _union_find(g.n, g.edges)
    groups: dict[int, list[int]] = {}
    for v, r in enumerate(roots):
        groups.setdefault(r, []).append(v)
    return sorted(groups.values(), key=lambda c: c[0])


def bipartition(g: MultiGraph) -> tuple[list[int], list[int]] | None:
    """Two-colour ``g`` component by component, or return ``None``.

    The smallest vertex of every component gets side 0.  Loops make the
    graph non-bipartite.
    """
    adj: list[list[int]] = [[] for _ in range(g.n)]
    for u, v in g.edges:
        if u == v:
            return None
        adj[u].append(v)
        adj[v].append(u)
    colour = [-1] * g.n
    for start in range(g.n):
        if colour[start] >= 0:
            continue
        colour[start] = 0
        stack = [start]
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if colour[y] < 0:
                    colour[y] = 1 - colour[x]
                    stack.append(y)
                elif colour[y] == colour[x]:
                    return None
    left = [v for v in range(g.n) if colour[v] == 0]
    right = [v for v in range(g.n) if colour[v] == 1]
    return left, right


def induced_subgraph(g: MultiGraph, vertices: Sequence[int]) -> MultiGraph:
    """Subgraph on ``vertices`` (relabelled ``0..k-1`` in the given order)."""
    index = {v: i for i, v in enumerate(vertices)}
    edges = [(index[u], index[v]) for u, v in g.edges if u in index and v in index]
    return MultiGraph(len(vertices), edges)


def double_cover(g: MultiGraph) -> MultiGraph:
    """Bipartite double cover: adjacency ``A ⊗ [[0,1],[1,0]]``.

    Vertex ``(h, b)`` is stored at index ``h + b*n``.  A non-loop edge yields
    two edges of the cover, a loop at ``h`` yields the single edge
    ``(h,0)-(h,1)``.
    """
    n = g.n
    edges: list[tuple[int, int]] = []
    for u, v in g.edges:
        edges.append((u, v + n))
        if u != v:
            edges.append((v, u + n))
    return MultiGraph(2 * n, edges)


def cover_vertex(g: MultiGraph, h: int, b: int) -> int:
    return h + b * g.n


# ---------------------------------------------------------------- embeddings


@dataclass(frozen=True)
class FaceTrace:
    faces: tuple[tuple[int, ...], ...]
    faces_per_component: tuple[int, ...]
    components: tuple[tuple[int, ...], ...]
    euler: tuple[int, ...] = field(default=())

    @property
    def face_count(self) -> int:
        return sum(self.faces_per_component)

    @property
    def is_planar(self) -> bool:
        return all(chi == 2 for chi in self.euler)

    @property
    def genus(self) -> int:
        return sum((2 - chi) // 2 for chi in self.euler)


def rotation_successor(rotation: Rotation, g: MultiGraph) -> dict[int, int]:
    succ: dict[int, int] = {}
    for cyc in rotation:
        for k, d in enumerate(cyc):
            succ[d] = cyc[(k + 1) % len(cyc)]
    return succ


def trace_faces(g: MultiGraph, rotation: Rotation | None = None) -> FaceTrace:
    """Trace the faces of the embedding of ``g`` given by ``rotation``.

    A component without edges is counted as having one face, so an isolated
    vertex satisfies Euler's formula like every other planar component.
    """
    rotation = g.rotation if rotation is None else tuple(tuple(c) for c in rotation)
    if rotation is None:
        raise PreconditionError("graph carries no rotation system")
    check_rotation(g, rotation)
    succ = rotation_successor(rotation, g)
    seen = [False] * g.dart_count
    faces: list[tuple[int, ...]] = []
    for start in range(g.dart_count):
        if seen[start]:
            continue
        walk = []
        d = start
        while not seen[d]:
            seen[d] = True
            walk.append(d)
            d = succ[d ^ 1]
        faces.append(tuple(walk))

    comps = connected_components(g)
    comp_of = {}
    for ci, comp in enumerate(comps):
        for v in comp:
            comp_of[v] = ci
    face_counts = [0] * len(comps)
    edge_counts = [0] * len(comps)
    for u, _ in g.edges:
        edge_counts[comp_of[u]] += 1
    for f in faces:
        face_counts[comp_of[g.dart_vertex(f[0])]] += 1
    for ci in range(len(comps)):
        if edge_counts[ci] == 0:
            face_counts[ci] = 1
    euler = tuple(len(comps[ci]) - edge_counts[ci] + face_counts[ci] for ci in range(len(comps)))
    return FaceTrace(
        faces=tuple(faces),
        faces_per_component=tuple(face_counts),
        components=tuple(tuple(c) for c in comps),
        euler=euler,
    )


# ---------------------------------------------------------------- builders


def empty_graph(n: int) -> MultiGraph:
    return MultiGraph(n, [], rotation=tuple(() for _ in range(n)))


def path_graph(k: int) -> MultiGraph:
    """Path with ``k`` edges on vertices ``0..k``."""
    g = MultiGraph(k + 1, [(i, i + 1) for i in range(k)])
    return g.with_rotation(default_rotation(g))


def cycle_graph(k: int) -> MultiGraph:
    """Cycle with ``k`` edges; ``k = 1`` is a loop and ``k = 2`` a digon."""
    if k < 1:
        raise PreconditionError("cycle needs at least one edge")
    g = MultiGraph(k, [(i, (i + 1) % k) for i in range(k)])
    return g.with_rotation(default_rotation(g))


def complete_graph(k: int) -> MultiGraph:
    edges = list(itertools.combinations(range(k), 2))
    g = MultiGraph(k, edges)
    rotation = default_rotation(g) if k <= 3 else None
    if k == 4:
        # vertex 3 in the middle of triangle 0,1,2
        # edges: 0:(0,1) 1:(0,2) 2:(0,3) 3:(1,2) 4:(1,3) 5:(2,3)
        rotation = ((0, 2, 4), (1, 8, 6), (3, 7, 10), (5, 11, 9))
    return MultiGraph(k, edges, rotation)


# ---------------------------------------------------------------- isomorphism


def is_isomorphic(g1: MultiGraph, g2: MultiGraph, max_vertices: int = 8) -> bool:
    """Brute-force multigraph isomorphism; intended for tests on tiny graphs."""
    if g1.n != g2.n or g1.edge_count != g2.edge_count:
        return False
    if g1.n > max_vertices:
        raise PreconditionError(f"isomorphism check capped at {max_vertices} vertices")
    if sorted(g1.degrees()) != sorted(g2.degrees()):
        return False
    target = Counter(tuple(sorted(e)) for e in g2.edges)
    for perm in itertools.permutations(range(g1.n)):
        mapped = Counter(tuple(sorted((perm[u], perm[v]))) for u, v in g1.edges)
        if mapped == target:
            return True
    return False
