# Node metrics of a spanning tree and power-law fits of their distributions
# Topological Portfolio Strategy

import logging
from collections import deque
from dataclasses import dataclass

import numpy as np

from errors import UnknownNodeError, DivergentEstimateError, InsufficientDataError, ValidationError

logger = logging.getLogger(__name__)

CENTER_CRITERIA = ('degree', 'correlation', 'distance')


@dataclass(frozen=True)
class NodeMetrics:
    """Per-ticker K, C and the three distance-to-center measures of one window."""
    tickers: tuple
    K: dict
    C: dict
    D_degree: dict
    D_correlation: dict
    D_distance: dict
    centers: dict

    def values(self, parameter):
        try:
            return getattr(self, parameter)
        except AttributeError:
            raise ValidationError(f'unknown parameter: {parameter}')

    def rows(self):
        for ticker in self.tickers:
            yield (ticker, self.K[ticker], self.C[ticker], self.D_degree[ticker],
                   self.D_correlation[ticker], self.D_distance[ticker])


@dataclass(frozen=True)
class PowerLawFit:
    alpha: float
    x_min: float
    samples: int

    def to_dict(self):
        return {'alpha': self.alpha, 'x_min': self.x_min, 'samples': self.samples}


def _walk(tree, root):
    """Breadth-first order and parent links of the tree rooted at `root`."""
    parent = {root: None}
    order = [root]
    queue = deque([root])
    while queue:
        node = queue.popleft()
        for other in tree.neighbors(node):
            if other not in parent:
                parent[other] = node
                order.append(other)
                queue.append(other)
    return order, parent


def degree(tree):
    return {node: len(tree.adjacency[node]) for node in tree.nodes}


def betweenness(tree):
    """Unordered pairs {i, j} whose tree path passes through each node.

    Removing v leaves components of sizes s_1..s_k; v lies on every path
    joining two different components, so C(v) = sum over a < b of s_a * s_b.
    """
    n = len(tree.nodes)
    order, parent = _walk(tree, tree.nodes[0])
    size = dict.fromkeys(order, 1)
    for node in reversed(order):
        if parent[node] is not None:
            size[parent[node]] += size[node]

    result = {}
    for node in tree.nodes:
        parts = [size[o] for o in tree.neighbors(node) if parent.get(o) == node]
        if parent[node] is not None:
            parts.append(n - size[node])
        total = sum(parts)
        result[node] = (total * total - sum(p * p for p in parts)) // 2
    return result


def node_distances(tree, center, hops=False):
    """Tree-path length from `center` to every node (edge weights, or hop counts)."""
    if center not in tree.adjacency:
        raise UnknownNodeError(f'unknown node: {center}')
    result = {center: 0.0}
    queue = deque([center])
    while queue:
        node = queue.popleft()
        for other, weight in tree.adjacency[node]:
            if other not in result:
                result[other] = result[node] + (1.0 if hops else weight)
                queue.append(other)
    return {node: result[node] for node in tree.nodes}


def distance_sums(tree, hops=False):
    """Sum of tree-path lengths from each node to all others.

    Computed by rerooting: moving the root across an edge of weight w into
    a subtree of size s changes the sum by w * (n - 2s).
    """
    n = len(tree.nodes)
    root = tree.nodes[0]
    order, parent = _walk(tree, root)
    from_root = node_distances(tree, root, hops)
    size = dict.fromkeys(order, 1)
    for node in reversed(order):
        if parent[node] is not None:
            size[parent[node]] += size[node]

    weight_to_parent = {}
    for node in order[1:]:
        up = parent[node]
        weight_to_parent[node] = 1.0 if hops else dict(tree.adjacency[node])[up]

    sums = {root: float(sum(from_root.values()))}
    for node in order[1:]:
        sums[node] = sums[parent[node]] + weight_to_parent[node] * (n - 2 * size[node])
    return sums


def central_node(tree, corr, criterion, hops=False):
    """Center of the tree under the degree, correlation or distance criterion.

    Ties go to the lexicographically smallest ticker.
    """
    if criterion == 'degree':
        k = degree(tree)
        return min(tree.nodes, key=lambda node: (-k[node], node))
    if criterion == 'correlation':
        strength = {node: sum(corr[node, other] for other in tree.neighbors(node))
                    for node in tree.nodes}
        return min(tree.nodes, key=lambda node: (-strength[node], node))
    if criterion == 'distance':
        sums = distance_sums(tree, hops)
        others = max(len(tree.nodes) - 1, 1)
        return min(tree.nodes, key=lambda node: (sums[node] / others, node))
    raise ValidationError(f'unknown center criterion: {criterion}')


def node_metrics(tree, corr, hops=False):
    centers = {c: central_node(tree, corr, c, hops) for c in CENTER_CRITERIA}
    return NodeMetrics(
        tickers=tuple(tree.nodes),
        K=degree(tree),
        C=betweenness(tree),
        D_degree=node_distances(tree, centers['degree'], hops),
        D_correlation=node_distances(tree, centers['correlation'], hops),
        D_distance=node_distances(tree, centers['distance'], hops),
        centers=centers,
    )


def fit_power_law(samples, x_min, min_samples=10):
    """Continuous maximum-likelihood exponent of P(x) ~ x^-alpha for x >= x_min."""
    if x_min <= 0:
        raise ValidationError('x_min must be positive')
    values = np.asarray(samples, dtype=float)
    tail = values[values >= x_min]
    if tail.size < min_samples:
        raise InsufficientDataError(
            f'{tail.size} sample(s) at or above x_min; at least {min_samples} required')
    log_sum = float(np.sum(np.log(tail / x_min)))
    if log_sum <= 0:
        raise DivergentEstimateError('all samples equal x_min; the exponent diverges')
    return PowerLawFit(alpha=1.0 + tail.size / log_sum, x_min=float(x_min), samples=int(tail.size))


def log_binned_pdf(samples, bins=20):
    """Density of the positive samples over logarithmically spaced bins.

    Returns (left, right, density) rows; empty bins are kept with density 0.
    """
    values = np.asarray(samples, dtype=float)
    values = values[values > 0]
    if values.size == 0:
        return []
    low, high = values.min(), values.max()
    if low == high:
        edges = np.array([low / 2, low * 2])
    else:
        edges = np.geomspace(low, high, bins + 1)
    density, edges = np.histogram(values, bins=edges, density=True)
    return [(float(a), float(b), float(d)) for a, b, d in zip(edges[:-1], edges[1:], density)]
