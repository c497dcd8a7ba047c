import math

import networkx as nx
import numpy as np
import pytest

from errors import UnknownNodeError, InsufficientDataError, DivergentEstimateError
from network import MstGraph
from topology import (degree, betweenness, node_distances, distance_sums, central_node,
                      node_metrics, fit_power_law, log_binned_pdf)


def random_tree(rng, n):
    names = [f'N{i:02d}' for i in range(n)]
    edges = []
    for child in range(1, n):
        parent = int(rng.integers(0, child))
        a, b = sorted((names[parent], names[child]))
        edges.append((a, b, float(rng.uniform(0.1, 1.5))))
    return MstGraph(tuple(names), tuple(sorted(edges)))


def path_walk_betweenness(tree):
    """Count, for every unordered pair, the interior nodes of its tree path."""
    graph = nx.Graph([(a, b) for a, b, _ in tree.edges])
    graph.add_nodes_from(tree.nodes)
    counts = dict.fromkeys(tree.nodes, 0)
    nodes = list(tree.nodes)
    for i, source in enumerate(nodes):
        for target in nodes[i + 1:]:
            for interior in nx.shortest_path(graph, source, target)[1:-1]:
                counts[interior] += 1
    return counts


class TestDegreeAndBetweenness:
    """Test K and C."""

    def test_star(self, star):
        """Test the hub carries every leaf pair."""
        assert degree(star) == {'A': 5, 'B': 1, 'C': 1, 'D': 1, 'E': 1, 'F': 1}
        c = betweenness(star)
        assert c['A'] == math.comb(5, 2)
        assert all(c[leaf] == 0 for leaf in 'BCDEF')

    def test_path(self, path):
        """Test inner nodes of a four-node path."""
        assert betweenness(path) == {'A': 0, 'B': 2, 'C': 2, 'D': 0}

    def test_dual_oracle(self):
        """Test the closed form against path walking and networkx."""
        rng = np.random.default_rng(21)
        for _ in range(100):
            tree = random_tree(rng, int(rng.integers(2, 26)))
            c = betweenness(tree)
            assert c == path_walk_betweenness(tree)

            graph = nx.Graph([(a, b) for a, b, _ in tree.edges])
            reference = nx.betweenness_centrality(graph, normalized=False)
            for node in tree.nodes:
                assert c[node] == pytest.approx(reference[node])

            k = degree(tree)
            assert all(c[node] == 0 for node in tree.nodes if k[node] == 1)


class TestDistances:
    """Test distance-to-center measures."""

    def test_weighted_and_hops(self, path):
        """Test path lengths from one end."""
        assert node_distances(path, 'A') == {'A': 0.0, 'B': 1.0, 'C': 3.0, 'D': 6.0}
        assert node_distances(path, 'A', hops=True) == {'A': 0.0, 'B': 1.0, 'C': 2.0, 'D': 3.0}

    def test_unknown_center(self, path):
        """Test an absent center is a lookup error."""
        with pytest.raises(UnknownNodeError) as info:
            node_distances(path, 'Z')
        assert isinstance(info.value, KeyError)

    def test_rerooted_sums(self):
        """Test rerooting against per-node distance sums."""
        rng = np.random.default_rng(8)
        for _ in range(30):
            tree = random_tree(rng, int(rng.integers(2, 20)))
            sums = distance_sums(tree)
            for node in tree.nodes:
                expected = sum(node_distances(tree, node).values())
                assert sums[node] == pytest.approx(expected, abs=1e-9)


class TestCentralNode:
    """Test the three center criteria."""

    def test_star_center(self, star, corr_for):
        """Test every criterion finds the hub."""
        corr = corr_for(star)
        for criterion in ('degree', 'correlation', 'distance'):
            assert central_node(star, corr, criterion) == 'A'

    def test_path_centers(self, path, corr_for):
        """Test degree ties and the weighted middle of a path."""
        corr = corr_for(path)
        assert central_node(path, corr, 'degree') == 'B'
        # B: 1+2+5 = 8, C: 3+2+3 = 8, tie goes to B
        assert central_node(path, corr, 'distance') == 'B'
        # strengths: A = 0.5, B = 0.5 - 1, C = -1 - 3.5, D = -3.5
        assert central_node(path, corr, 'correlation') == 'A'

    def test_two_node_tie(self, make_tree, corr_for):
        """Test a tie goes to the smallest ticker."""
        tree = make_tree([('Y', 'X', 0.4)])
        assert central_node(tree, corr_for(tree), 'degree') == 'X'

    def test_distance_center_brute_force(self):
        """Test the distance center minimises the mean path length."""
        rng = np.random.default_rng(31)
        for _ in range(50):
            tree = random_tree(rng, 12)
            totals = {node: sum(node_distances(tree, node).values()) for node in tree.nodes}
            brute = min(tree.nodes, key=lambda node: (totals[node], node))
            assert central_node(tree, None, 'distance') == brute

    def test_scaling_keeps_center(self):
        """Test multiplying every weight keeps each center."""
        rng = np.random.default_rng(32)
        for _ in range(30):
            tree = random_tree(rng, 12)
            scaled = MstGraph(tree.nodes, tuple((a, b, 3.7 * w) for a, b, w in tree.edges))
            assert central_node(scaled, None, 'distance') == central_node(tree, None, 'distance')
            assert central_node(scaled, None, 'degree') == central_node(tree, None, 'degree')

    def test_node_metrics(self, star, corr_for):
        """Test the metric bundle of a star."""
        metrics = node_metrics(star, corr_for(star))
        assert metrics.centers == {'degree': 'A', 'correlation': 'A', 'distance': 'A'}
        assert metrics.D_degree['A'] == 0.0
        assert metrics.D_distance['B'] == 0.5
        rows = list(metrics.rows())
        assert rows[0] == ('A', 5, 10, 0.0, 0.0, 0.0)


class TestPowerLaw:
    """Test maximum-likelihood power-law fits."""

    def test_recovers_exponent(self):
        """Test inverse-CDF samples at alpha = 2.5."""
        hits = 0
        for seed in range(100):
            rng = np.random.default_rng(seed)
            samples = (1.0 - rng.random(10_000)) ** (-1.0 / 1.5)
            hits += 2.4 <= fit_power_law(samples, 1.0).alpha <= 2.6
        assert hits >= 95

    def test_scale_covariance(self):
        """Test scaling samples and x_min leaves alpha unchanged."""
        rng = np.random.default_rng(1)
        samples = (1.0 - rng.random(1000)) ** (-1.0 / 1.5)
        base = fit_power_law(samples, 1.0).alpha
        scaled = fit_power_law(samples * 7.5, 7.5).alpha
        assert scaled == pytest.approx(base, abs=1e-12)

    def test_hand_example(self):
        """Test four samples at e with x_min = 1."""
        fit = fit_power_law([math.e] * 4, 1.0, min_samples=4)
        assert fit.alpha == pytest.approx(2.0)
        assert fit.samples == 4

    def test_divergent(self):
        """Test samples all at x_min."""
        with pytest.raises(DivergentEstimateError):
            fit_power_law([1.0] * 20, 1.0)

    def test_too_few(self):
        """Test too few tail samples."""
        with pytest.raises(InsufficientDataError):
            fit_power_law([2.0, 3.0, 0.5], 1.0)

    def test_log_binned_density(self):
        """Test the log-binned density integrates to one."""
        rng = np.random.default_rng(2)
        rows = log_binned_pdf((1.0 - rng.random(500)) ** (-1.0 / 1.5), bins=15)
        assert len(rows) == 15
        assert sum(d * (right - left) for left, right, d in rows) == pytest.approx(1.0)
        assert log_binned_pdf([0.0, -1.0]) == []
