import networkx as nx
import numpy as np
import pytest

from interperc.errors import InvalidParameterError
from interperc.graphs import (
    Graph,
    generate,
    generate_er,
    generate_sf,
    generate_square_lattice,
    generate_ws,
    giant_component,
    normalize_edges,
    to_networkx,
)


def _flood_fill_giant(graph: Graph, mask: np.ndarray) -> set[int]:
    g = to_networkx(graph).subgraph(np.flatnonzero(mask).tolist())
    best: set[int] = set()
    for component in nx.connected_components(g):
        if len(component) > len(best) or (
            len(component) == len(best) and min(component) < min(best)
        ):
            best = set(component)
    return best


def _assert_simple_and_symmetric(graph: Graph) -> None:
    edges = graph.edges
    assert np.all(edges[:, 0] < edges[:, 1])
    assert np.unique(edges, axis=0).shape[0] == graph.edge_count
    src = np.repeat(np.arange(graph.node_count), graph.degrees)
    listed = set(zip(src.tolist(), graph.indices.tolist()))
    assert listed == {(v, u) for u, v in listed}
    assert len(listed) == 2 * graph.edge_count


def _loglog_slope(degrees: np.ndarray, k_min: int, k_max: int) -> float:
    bins = np.unique(np.rint(np.logspace(np.log10(k_min), np.log10(k_max), 12)).astype(np.int64))
    counts, _ = np.histogram(degrees, bins=bins)
    widths = np.diff(bins)
    centres = np.sqrt(bins[:-1] * (bins[1:] - 1))
    keep = counts > 0
    return float(np.polyfit(np.log(centres[keep]), np.log(counts[keep] / widths[keep]), 1)[0])


class TestSquareLattice:
    def test_three_by_three_is_rooks_graph(self):
        g = generate_square_lattice(3)
        assert g.node_count == 9
        assert g.edge_count == 18
        assert g.lattice_side == 3
        assert np.all(g.degrees == 4)
        assert sorted(g.neighbors(0).tolist()) == [1, 2, 3, 6]

    def test_large_lattice_has_degree_four_and_no_duplicates(self):
        g = generate_square_lattice(10)
        assert np.all(g.degrees == 4)
        assert len({tuple(e) for e in g.edges.tolist()}) == g.edge_count == 200

    def test_side_two_keeps_duplicate_wrap_neighbours(self):
        g = generate_square_lattice(2)
        assert g.edge_count == 8
        assert np.all(g.degrees == 4)
        assert sorted(g.neighbors(0).tolist()) == [1, 1, 2, 2]

    def test_periodic_wrap(self):
        g = generate_square_lattice(4)
        # (3, 0) wraps to (0, 0); (0, 3) wraps to (0, 0)
        assert 0 in g.neighbors(3)
        assert 0 in g.neighbors(12)

    def test_side_below_two_raises(self):
        with pytest.raises(InvalidParameterError, match="L=1"):
            generate_square_lattice(1)


class TestErdosRenyi:
    def test_small_complete_graph(self):
        g = generate_er(4, 3.0, rng_seed=1)
        assert g.edge_count == 6
        assert np.all(g.degrees == 3)

    def test_mean_degree_close_to_target(self):
        g = generate_er(10_000, 4.0, rng_seed=7)
        assert 3.92 <= g.mean_degree <= 4.08

    def test_same_seed_same_graph(self):
        a = generate_er(300, 4.0, rng_seed=11)
        b = generate_er(300, 4.0, rng_seed=11)
        assert np.array_equal(a.edges, b.edges)

    def test_single_node_raises(self):
        with pytest.raises(InvalidParameterError, match="n >= 2"):
            generate_er(1, 1.0, rng_seed=0)

    def test_mean_degree_out_of_range_raises(self):
        with pytest.raises(InvalidParameterError, match="mean_degree"):
            generate_er(10, 0.0, rng_seed=0)
        with pytest.raises(InvalidParameterError, match="mean_degree"):
            generate_er(10, 12.0, rng_seed=0)


class TestWattsStrogatz:
    def test_ring_without_rewiring(self):
        g = generate_ws(100, 4, 0.0, rng_seed=3)
        assert np.all(g.degrees == 4)

    def test_rewiring_keeps_edge_count(self):
        g = generate_ws(500, 4, 0.1, rng_seed=3)
        assert g.edge_count == 1000

    def test_fully_rewired_clustering_is_random_like(self):
        g = generate_ws(10_000, 4, 1.0, rng_seed=3)
        assert nx.average_clustering(to_networkx(g)) < 0.01

    def test_odd_degree_raises(self):
        with pytest.raises(InvalidParameterError, match="even"):
            generate_ws(100, 3, 0.1, rng_seed=0)

    def test_beta_out_of_range_raises(self):
        with pytest.raises(InvalidParameterError, match="beta"):
            generate_ws(100, 4, 1.5, rng_seed=0)


class TestScaleFree:
    def test_mean_degree_and_heavy_tail(self):
        g = generate_sf(2000, 3.0, 4.0, rng_seed=5)
        assert 3.0 < g.mean_degree < 4.5
        assert g.degrees.max() > 20

    def test_degree_distribution_slope(self):
        g = generate_sf(100_000, 3.0, 4.0, rng_seed=5)
        assert -3.4 <= _loglog_slope(g.degrees, 4, 200) <= -2.6

    def test_no_self_loops(self):
        g = generate_sf(500, 2.5, 4.0, rng_seed=9)
        assert np.all(g.edges[:, 0] != g.edges[:, 1])

    def test_exponent_two_raises(self):
        with pytest.raises(InvalidParameterError, match="lambda=2"):
            generate_sf(1000, 2.0, 4.0, rng_seed=0)

    def test_too_small_raises(self):
        with pytest.raises(InvalidParameterError, match="n >= 100"):
            generate_sf(50, 3.0, 4.0, rng_seed=0)


class TestGenerate:
    def test_lattice_from_node_count(self):
        assert generate("lattice", 25, rng_seed=0).lattice_side == 5

    def test_lattice_needs_perfect_square(self):
        with pytest.raises(InvalidParameterError, match="perfect square"):
            generate("lattice", 10, rng_seed=0)

    def test_unknown_topology_raises(self):
        with pytest.raises(InvalidParameterError, match="Unknown topology"):
            generate("hypercube", 16, rng_seed=0)

    @pytest.mark.parametrize("topology", ["erdos_renyi", "watts_strogatz", "scale_free"])
    def test_random_topologies_have_requested_size(self, topology):
        g = generate(topology, 400, rng_seed=2)
        assert g.node_count == 400
        assert g.topology == topology


class TestGiantComponent:
    def test_intact_lattice(self):
        g = generate_square_lattice(5)
        assert giant_component(g, np.ones(25, dtype=bool)).tolist() == list(range(25))

    def test_empty_mask(self):
        g = generate_square_lattice(3)
        assert giant_component(g, np.zeros(9, dtype=bool)).size == 0

    def test_tie_goes_to_lowest_index(self):
        g = Graph(node_count=6, edges=normalize_edges(np.array([[4, 5], [0, 1]])), topology="custom")
        assert giant_component(g, np.ones(6, dtype=bool)).tolist() == [0, 1]

    def test_below_min_size_is_empty(self):
        g = Graph(node_count=6, edges=normalize_edges(np.array([[4, 5], [0, 1]])), topology="custom")
        assert giant_component(g, np.ones(6, dtype=bool), min_size=3).size == 0
        assert giant_component(g, np.ones(6, dtype=bool), min_size=2).tolist() == [0, 1]

    def test_dead_nodes_break_paths(self):
        g = Graph(node_count=5, edges=normalize_edges(np.array([[0, 1], [1, 2], [2, 3], [3, 4]])), topology="custom")
        mask = np.array([True, True, False, True, True])
        assert giant_component(g, mask).tolist() == [0, 1]

    def test_mask_length_mismatch_raises(self):
        g = generate_square_lattice(3)
        with pytest.raises(InvalidParameterError, match="length 8"):
            giant_component(g, np.ones(8, dtype=bool))

    def test_matches_flood_fill_on_random_masked_graphs(self):
        rng = np.random.default_rng(2024)
        for trial in range(500):
            n = int(rng.integers(2, 201))
            g = generate_er(n, float(rng.uniform(0.5, min(4.0, n - 1))), rng_seed=trial)
            mask = rng.random(n) < rng.uniform(0.2, 1.0)
            expected = _flood_fill_giant(g, mask)
            assert set(giant_component(g, mask).tolist()) == expected


class TestGeneratorInvariants:
    @pytest.mark.parametrize(
        "build",
        [
            lambda seed: generate_square_lattice(30),
            lambda seed: generate_er(2000, 4.0, rng_seed=seed),
            lambda seed: generate_ws(2000, 4, 0.1, rng_seed=seed),
            lambda seed: generate_ws(2000, 4, 1.0, rng_seed=seed),
            lambda seed: generate_sf(2000, 3.0, 4.0, rng_seed=seed),
            lambda seed: generate_sf(2000, 2.5, 4.0, rng_seed=seed),
        ],
        ids=["lattice", "er", "ws", "ws_random", "sf", "sf_heavy"],
    )
    def test_symmetric_without_loops_or_duplicates(self, build):
        for seed in range(5):
            _assert_simple_and_symmetric(build(seed))

    @pytest.mark.parametrize("topology", ["erdos_renyi", "watts_strogatz", "scale_free"])
    def test_symmetric_at_ten_thousand_nodes(self, topology):
        _assert_simple_and_symmetric(generate(topology, 10_000, rng_seed=1))

    @pytest.mark.parametrize("topology", ["erdos_renyi", "watts_strogatz", "scale_free"])
    def test_same_seed_same_graph(self, topology):
        a = generate(topology, 1000, rng_seed=13)
        b = generate(topology, 1000, rng_seed=13)
        c = generate(topology, 1000, rng_seed=14)
        assert np.array_equal(a.edges, b.edges)
        assert not np.array_equal(a.edges, c.edges)
