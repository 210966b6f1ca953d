import random
from fractions import Fraction

import pytest

from homkit.errors import ParseError, PreconditionError
from homkit.gadgets import (
    EdgeGadget,
    bridge,
    diag_square,
    dress,
    gadget_from_json,
    graph_from_json,
    graph_to_json,
    loop,
    loop_vertex,
    merge_labels,
    no_edge_gadget,
    parallel,
    point,
    random_gadget,
    random_multigraph_gadget,
    replace_edges,
    ring_transform,
    series,
    signature,
    signature_edgewise,
    single_edge,
    stretch,
    symmetrize,
    thicken,
)
from homkit.matrix import WeightMatrix, ones, wrap
from homkit.multigraph import MultiGraph, complete_graph, cycle_graph, trace_faces
from homkit.partition import eval_bruteforce

from oracles import (
    dressed,
    entrywise_power,
    matmul,
    matpow,
    partition_function,
    pinned_matrix,
    random_edges,
    random_matrix,
)

M = WeightMatrix([[1, 2], [2, 3]])


def oracle_signature(k, m):
    return wrap(pinned_matrix(m, k.graph.n, k.graph.edges, k.l1, k.l2))


class TestSignature:
    def test_single_edge(self):
        assert signature(single_edge(), M) == M

    def test_thicken_three(self):
        assert signature(thicken(3), M) == WeightMatrix([[1, 8], [8, 27]])

    def test_no_edges_is_q_times_ones(self):
        m = WeightMatrix([[1, 2, 0], [2, 1, 1], [0, 1, 1]])
        assert signature(no_edge_gadget(1), m) == ones(3).scale(3)

    def test_binary_is_diagonal(self):
        s = signature(loop_vertex(2), M)
        assert s.is_diagonal() and s.diagonal() == (1, 9)

    def test_point_is_identity(self):
        assert signature(point(), M) == WeightMatrix([[1, 0], [0, 1]])

    def test_matches_oracle_on_random_gadgets(self):
        rng = random.Random(0)
        for _ in range(40):
            k = random_multigraph_gadget(rng)
            m = random_matrix(rng, rng.randint(1, 3), lo=-2, hi=3)
            assert signature(k, WeightMatrix(m)) == oracle_signature(k, m)

    def test_reversed_transposes(self):
        k = series(loop_vertex(1), stretch(1))
        m = WeightMatrix([[1, 2], [2, 5]])
        assert signature(k.reversed(), m) == signature(k, m).transpose()

    def test_edgewise_matches_replacement(self):
        rng = random.Random(8)
        m = WeightMatrix(random_matrix(rng, 2, positive=True))
        k = random_gadget(rng)
        lengths = [rng.randint(1, 2) for _ in range(k.graph.edge_count)]
        edgewise = signature_edgewise(k, [m.power(n) for n in lengths])
        g = k.graph
        for n in lengths:
            g = replace_edges(g, stretch(n), [0])
        assert signature(EdgeGadget(g, k.l1, k.l2), m) == edgewise


class TestFamilies:
    def test_stretch_two(self):
        assert signature(stretch(2), M) == WeightMatrix([[5, 8], [8, 13]])

    def test_loop_one(self):
        assert signature(loop(1), M) == WeightMatrix([[1, 6], [6, 27]])

    def test_thicken_one(self):
        assert signature(thicken(1), M) == M

    @pytest.mark.parametrize("family", [thicken, stretch, bridge, loop])
    def test_rejects_zero(self, family):
        with pytest.raises(PreconditionError):
            family(0)

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_closed_forms(self, n):
        rng = random.Random(n)
        for q in (2, 3):
            m = random_matrix(rng, q)
            wm = WeightMatrix(m)
            assert signature(thicken(n), wm) == wrap(entrywise_power(m, n))
            assert signature(stretch(n), wm) == wrap(matpow(m, n))
            assert signature(bridge(n), wm) == wrap(matmul(matmul(m, entrywise_power(m, n)), m))
            assert signature(loop(n), wm) == wrap(dressed(m, n))

    @pytest.mark.parametrize("family", [thicken, stretch, bridge, loop])
    @pytest.mark.parametrize("n", [1, 2, 3, 5])
    def test_planar(self, family, n):
        assert family(n).planar_certified


class TestComposition:
    def test_series_of_stretches(self):
        assert signature(series(stretch(2), stretch(3)), M) == M.power(5)

    def test_parallel_of_thickenings(self):
        assert signature(parallel(thicken(2), thicken(3)), M) == M.hadamard_power(5)

    def test_homomorphism_on_random_gadgets(self):
        rng = random.Random(3)
        for _ in range(40):
            a, b = random_gadget(rng, 3), random_gadget(rng, 3)
            m = WeightMatrix(random_matrix(rng, rng.randint(2, 3), lo=0, hi=3))
            sa, sb = signature(a, m), signature(b, m)
            s = series(a, b)
            p = parallel(a, b)
            assert signature(s, m) == sa @ sb
            assert signature(p, m) == sa.hadamard(sb)
            assert s.planar_certified and p.planar_certified

    def test_parallel_mixed_rejected(self):
        with pytest.raises(PreconditionError):
            parallel(single_edge(), point())

    def test_parallel_copies_product_formula(self):
        rng = random.Random(12)
        m = WeightMatrix(random_matrix(rng, 3, positive=True))
        parts = [random_gadget(rng, 3) for _ in range(3)]
        z = (2, 1, 3)
        k = parts[0]
        for part, e in zip(parts, z):
            for _ in range(e - (1 if part is parts[0] else 0)):
                k = parallel(k, part)
        diag = signature(k, m).diagonal()
        for i in range(3):
            expected = Fraction(1)
            for part, e in zip(parts, z):
                expected *= signature(part, m)[i, i] ** e
            assert diag[i] == expected

    def test_symmetrize(self):
        k = series(loop_vertex(1), stretch(2))
        s = signature(k, M)
        out = signature(symmetrize(k), M)
        assert out == s.hadamard(s.transpose())
        assert out.is_symmetric()

    def test_symmetrize_of_symmetric_squares(self):
        assert signature(symmetrize(stretch(2)), M) == M.power(2).hadamard_power(2)

    def test_diag_square(self):
        assert signature(diag_square(loop_vertex(1)), M) == WeightMatrix([[1, 3], [3, 9]])

    def test_diagonal_squared_on_random(self):
        rng = random.Random(21)
        for _ in range(20):
            k = random_gadget(rng, 3)
            m = WeightMatrix(random_matrix(rng, 2))
            d = signature(k, m).diagonal()
            assert signature(symmetrize(k), m).diagonal() == tuple(x * x for x in d)
            b = merge_labels(k)
            assert signature(diag_square(b), m).diagonal() == tuple(x * x for x in d)
            assert symmetrize(k).planar_certified and diag_square(b).planar_certified

    def test_merge_labels(self):
        assert signature(merge_labels(stretch(2)), M).diagonal() == M.power(2).diagonal()

    def test_dress(self):
        d = [M[0, 0], M[1, 1]]
        s = signature(dress(stretch(2), 1), M)
        sq = M.power(2)
        assert s == wrap([[d[i] * sq[i, j] * d[j] for j in range(2)] for i in range(2)])


class TestReplaceEdges:
    def test_thicken_triangle(self):
        g = replace_edges(cycle_graph(3), thicken(4))
        assert (g.n, g.edge_count) == (3, 12)

    def test_stretch_edge_is_path(self):
        g = replace_edges(MultiGraph(2, [(0, 1)], ((0,), (1,))), stretch(2))
        assert g.n == 3 and sorted(map(sorted, g.edges)) == [[0, 2], [1, 2]]

    def test_binary_rejected(self):
        with pytest.raises(PreconditionError):
            replace_edges(cycle_graph(3), point())

    def test_vertex_count(self):
        k = bridge(2)
        g = cycle_graph(4)
        assert replace_edges(g, k).n == g.n + g.edge_count * (k.graph.n - 2)

    def test_fundamental_identity(self):
        rng = random.Random(5)
        for _ in range(50):
            q = rng.randint(1, 3)
            m = WeightMatrix(random_matrix(rng, q, lo=-1, hi=3))
            n = rng.randint(1, 4)
            g = MultiGraph(n, random_edges(rng, n, rng.randint(0, 3)))
            k = rng.choice([thicken, stretch, bridge, loop])(rng.randint(1, 2))
            kg = replace_edges(g, k)
            assert eval_bruteforce(m, kg) == partition_function(signature(k, m), n, g.edges)

    def test_rotation_composed_and_planar(self):
        g = complete_graph(4)
        for k in (thicken(2), stretch(3), bridge(2), loop(2)):
            assert trace_faces(replace_edges(g, k)).is_planar

    def test_loop_edge_merges_labels(self):
        g = MultiGraph(1, [(0, 0)])
        kg = replace_edges(g, stretch(3))
        assert eval_bruteforce(M, kg) == sum(M.power(3).diagonal())


class TestRing:
    def test_triangle(self):
        r = ring_transform(cycle_graph(3), 1, 1)
        assert (r.n, r.edge_count) == (6, 9)
        assert trace_faces(r).is_planar

    def test_k2(self):
        g = MultiGraph(2, [(0, 1)], ((0,), (1,)))
        r = ring_transform(g, 1, 1)
        assert (r.n, r.edge_count, r.loop_count()) == (2, 3, 2)

    def test_c4_planar(self):
        r = ring_transform(cycle_graph(4), 2, 3)
        assert trace_faces(r).genus == 0
        assert r.n == 8 + 8

    def test_k4_planar(self):
        assert trace_faces(ring_transform(complete_graph(4), 2, 2)).is_planar

    def test_requires_rotation(self):
        with pytest.raises(PreconditionError):
            ring_transform(MultiGraph(2, [(0, 1)]), 1, 1)

    def test_isolated_vertex_kept(self):
        g = MultiGraph(3, [(0, 1)], ((0,), (1,), ()))
        r = ring_transform(g, 1, 1)
        assert r.n == 3 and trace_faces(r).is_planar


class TestJson:
    def test_graph_round_trip(self):
        g = complete_graph(4)
        assert graph_from_json(graph_to_json(g)) == g

    def test_gadget_round_trip(self):
        k = bridge(2)
        back = gadget_from_json(k.to_json())
        assert back == k

    @pytest.mark.parametrize(
        "doc", [{"edges": []}, {"n": 2, "edges": [[0]]}, {"n": "2", "edges": []}, {"n": 2, "edges": [], "rotation": [1]}]
    )
    def test_bad_graphs(self, doc):
        with pytest.raises(ParseError):
            graph_from_json(doc)

    def test_gadget_needs_labels(self):
        with pytest.raises(ParseError):
            gadget_from_json({"n": 2, "edges": [[0, 1]]})


def test_random_gadgets_planar():
    rng = random.Random(99)
    for _ in range(200):
        assert random_gadget(rng).planar_certified
