import numpy as np
import pytest

from hodgereg.graph import (
    DisconnectedGraph,
    ViewingGraph,
    _voxel_set,
    build_by_centroid,
    build_by_iou,
    fundamental_cycles,
    k_cliques,
    shortest_path,
)
from hodgereg.se3 import Pose, Twist, compose, invert, pose_exp


def cube_cloud(offset=(0, 0, 0), n=1200, seed=0):
    rng = np.random.default_rng(seed)
    return rng.uniform(0, 1, (n, 3)) + np.asarray(offset, dtype=float)


class TestConstruction:
    def test_canonical_orientation(self):
        m = pose_exp(Twist([0.1, 0.2, -0.1], [0.5, 0, 0]))
        g = ViewingGraph(3, [(1, 0, m), (1, 2)])
        # stored as (0, 1) with the inverted measurement
        assert g.edges == [(0, 1), (1, 2)]
        got = g.measurement(1, 0)
        assert np.array_equal(got.rotation, m.rotation)
        assert np.array_equal(got.translation, m.translation)

    def test_reverse_query_is_exact_inverse(self):
        m = pose_exp(Twist([0.3, -0.2, 0.1], [1.0, 2.0, 3.0]))
        g = ViewingGraph(2, [(0, 1, m)])
        inv = g.measurement(1, 0)
        expected = invert(m)
        assert np.array_equal(inv.rotation, expected.rotation)
        assert np.array_equal(inv.translation, expected.translation)

    def test_self_loop_rejected(self):
        with pytest.raises(ValueError, match="self-loop"):
            ViewingGraph(2, [(1, 1)])

    def test_duplicate_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            ViewingGraph(3, [(0, 1), (1, 0)])

    def test_neighbors_sorted(self):
        g = ViewingGraph(4, [(2, 0), (0, 3), (0, 1)])
        assert g.neighbors(0) == [1, 2, 3]


class TestCentroidBuilder:
    def test_identical_clouds_linked(self):
        c = cube_cloud()
        g = build_by_centroid([c, c.copy()], 0.2)
        assert g.edges == [(0, 1)]

    def test_chain_distances(self):
        # offsets 0, 0.15, 0.45: only the first pair is below threshold
        clouds = [cube_cloud((x, 0, 0)) for x in (0.0, 0.15, 0.45)]
        with pytest.raises(DisconnectedGraph):
            build_by_centroid(clouds, 0.2)

    def test_three_clique(self):
        clouds = [cube_cloud((0.05 * i, 0, 0)) for i in range(3)]
        g = build_by_centroid(clouds, 0.2)
        assert g.edges == [(0, 1), (0, 2), (1, 2)]

    def test_deterministic(self):
        clouds = [cube_cloud((0.05 * i, 0, 0)) for i in range(4)]
        assert build_by_centroid(clouds, 0.2).edges == build_by_centroid(clouds, 0.2).edges


class TestIouBuilder:
    def test_identical_clouds_iou_one(self):
        c = cube_cloud()
        g = build_by_iou([c, c.copy()], 0.5, 0.1)
        assert g.edges == [(0, 1)]

    def test_disjoint_clouds_no_edge(self):
        a, b = cube_cloud(), cube_cloud((5, 0, 0))
        with pytest.raises(DisconnectedGraph):
            build_by_iou([a, b], 0.5, 0.1)

    def test_half_overlap_is_about_one_third(self):
        # Unit cubes shifted by half: |A & B| = 0.5, |A | B| = 1.5.
        a = cube_cloud(n=20000, seed=1)
        b = cube_cloud((0.5, 0, 0), n=20000, seed=2)
        va, vb = _voxel_set(a, 0.1), _voxel_set(b, 0.1)
        iou = len(va & vb) / len(va | vb)
        assert iou == pytest.approx(1.0 / 3.0, abs=0.05)
        with pytest.raises(DisconnectedGraph):
            build_by_iou([a, b], 0.5, 0.1)

    def test_validation(self):
        c = cube_cloud()
        with pytest.raises(ValueError):
            build_by_iou([c, c], 0.5, -1.0)
        with pytest.raises(ValueError):
            build_by_iou([c, c], 1.5, 0.1)


class TestCliques:
    def test_triangle(self):
        g = ViewingGraph(3, [(0, 1), (1, 2), (0, 2)])
        assert k_cliques(g, 3) == [(0, 1, 2)]

    def test_four_cycle_has_none(self):
        g = ViewingGraph(4, [(0, 1), (1, 2), (2, 3), (0, 3)])
        assert k_cliques(g, 3) == []

    def test_k4(self):
        g = ViewingGraph(4, [(i, j) for i in range(4) for j in range(i + 1, 4)])
        assert k_cliques(g, 3) == [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)]
        assert k_cliques(g, 4) == [(0, 1, 2, 3)]

    def test_k_below_three_rejected(self):
        g = ViewingGraph(3, [(0, 1), (1, 2), (0, 2)])
        with pytest.raises(ValueError):
            k_cliques(g, 2)


class TestFundamentalCycles:
    def test_tree_has_none(self):
        g = ViewingGraph(4, [(0, 1), (1, 2), (1, 3)])
        assert fundamental_cycles(g) == []

    def test_single_cycle(self):
        g = ViewingGraph(5, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)])
        loops = fundamental_cycles(g)
        assert len(loops) == 1
        assert loops[0][0] == loops[0][-1]
        assert len(loops[0]) == 6  # 5 edges

    def test_k4_count(self):
        g = ViewingGraph(4, [(i, j) for i in range(4) for j in range(i + 1, 4)])
        loops = fundamental_cycles(g)
        assert len(loops) == 3  # E - V + 1

    def test_loops_closed_and_cover_chords(self):
        rng = np.random.default_rng(2)
        edges = {(i, i + 1) for i in range(9)} | {(0, 9)}
        while len(edges) < 18:
            i, j = sorted(rng.integers(0, 10, 2))
            if i != j:
                edges.add((int(i), int(j)))
        g = ViewingGraph(10, sorted(edges))
        loops = fundamental_cycles(g)
        assert len(loops) == g.n_edges - g.node_count + 1
        seen_chords = []
        for loop in loops:
            assert loop[0] == loop[-1]
            for a, b in zip(loop[:-1], loop[1:]):
                assert g.has_edge(a, b)
            seen_chords.append((min(loop[0], loop[-2]), max(loop[0], loop[-2])))
        assert len(set(seen_chords)) == len(loops)

    def test_shortest_path_tie_break(self):
        # 0-1-2 and 0-3-2 both have length 2; the smaller-id parent wins.
        g = ViewingGraph(4, [(0, 1), (1, 2), (2, 3), (0, 3)])
        assert shortest_path(g, 0, 2) == [0, 1, 2]


def test_with_measurements_replaces_and_preserves_edges():
    g = ViewingGraph(3, [(0, 1), (1, 2), (0, 2)])
    m = pose_exp(Twist([0, 0, 0.3], [1, 0, 0]))
    g2 = g.with_measurements({(0, 1): m})
    assert g2.edges == g.edges
    assert np.allclose(g2.measurement(0, 1).matrix(), m.matrix())
    assert np.allclose(g2.measurement(1, 2).matrix(), np.eye(4))


def test_consistent_measurements_compose_around_cycle():
    rng = np.random.default_rng(3)
    true = [Pose.identity()] + [pose_exp(Twist(rng.normal(0, 0.3, 3), rng.normal(0, 0.3, 3))) for _ in range(3)]
    items = []
    for (i, j) in [(0, 1), (1, 2), (2, 3), (0, 3)]:
        items.append((i, j, compose(invert(true[i]), true[j])))
    g = ViewingGraph(4, items)
    prod = Pose.identity()
    for a, b in [(0, 1), (1, 2), (2, 3), (3, 0)]:
        prod = compose(prod, g.measurement(a, b))
    assert np.allclose(prod.matrix(), np.eye(4), atol=1e-12)
