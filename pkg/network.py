# Rolling-window correlation networks
# Topological Portfolio Strategy
#
# Anchors index the columns of a ReturnPanel. The selection window of
# anchor t is returns {t-window+1, ..., t}; its investment horizon is
# returns {t+1, ..., t+horizon}.

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from errors import (EmptyScheduleError, DegenerateSeriesError, TrivialGraphError,
                    InsufficientTrackError, ValidationError)

logger = logging.getLogger(__name__)

MOMENTS = ('mean', 'variance', 'skewness', 'kurtosis')


@dataclass(frozen=True)
class WindowSchedule:
    window_days: int
    step_days: int
    horizon_days: int
    total_days: int
    anchors: tuple

    def __len__(self):
        return len(self.anchors)

    def selection_window(self, anchor):
        return range(anchor - self.window_days + 1, anchor + 1)

    def investment_window(self, anchor, horizon=None):
        horizon = self.horizon_days if horizon is None else horizon
        return range(anchor + 1, anchor + horizon + 1)


@dataclass(frozen=True, eq=False)
class CorrMatrix:
    tickers: tuple
    values: np.ndarray

    def __getitem__(self, pair):
        i, j = (self.tickers.index(t) for t in pair)
        return float(self.values[i, j])

    def off_diagonal(self):
        return self.values[np.triu_indices(len(self.tickers), k=1)]


@dataclass(frozen=True, eq=False)
class DistMatrix:
    tickers: tuple
    values: np.ndarray

    def __getitem__(self, pair):
        i, j = (self.tickers.index(t) for t in pair)
        return float(self.values[i, j])

    def off_diagonal(self):
        return self.values[np.triu_indices(len(self.tickers), k=1)]


@dataclass(frozen=True)
class MstGraph:
    """Spanning tree over tickers. Edges are (a, b, weight) with a < b."""
    nodes: tuple
    edges: tuple

    def __post_init__(self):
        adjacency = {node: [] for node in self.nodes}
        for a, b, weight in self.edges:
            adjacency[a].append((b, weight))
            adjacency[b].append((a, weight))
        object.__setattr__(self, 'adjacency',
                           {node: tuple(sorted(links)) for node, links in adjacency.items()})

    @property
    def total_weight(self):
        return float(sum(weight for _, _, weight in self.edges))

    def neighbors(self, node):
        return [other for other, _ in self.adjacency[node]]


@dataclass(frozen=True)
class WindowNetwork:
    anchor: int
    date: str
    corr: CorrMatrix
    dist: DistMatrix
    tree: MstGraph


@dataclass(frozen=True)
class MomentTrack:
    """Per-anchor moments of correlation and distance elements."""
    dates: tuple
    corr_moments: dict
    dist_moments: dict
    band_lower: tuple
    band_upper: tuple
    cross_correlations: dict
    flags: tuple

    def cross_correlation(self, moment):
        value = self.cross_correlations.get(moment)
        if value is None:
            raise InsufficientTrackError(f'cross-correlation of {moment} is undefined: '
                                         + ', '.join(self.flags))
        return value


def make_schedule(total_days, window_days, step_days, horizon_days):
    """Anchors for a price panel of `total_days` dates.

    The return panel has total_days - 1 columns; an anchor t is valid when
    its selection window starts at or after column 0 and its investment
    horizon ends on or before the last return column.
    """
    if window_days < 2 or step_days < 1 or horizon_days < 1:
        raise ValidationError('window >= 2, step >= 1 and horizon >= 1 are required')
    n_returns = total_days - 1
    anchors = tuple(range(window_days - 1, n_returns - horizon_days, step_days))
    if not anchors:
        raise EmptyScheduleError(
            f'{total_days} days cannot hold a {window_days}-day window '
            f'followed by a {horizon_days}-day horizon')
    return WindowSchedule(window_days, step_days, horizon_days, total_days, anchors)


def pearson_matrix(returns, window):
    """Pearson coefficients of every ticker pair over the return columns in `window`."""
    block = np.asarray(returns.returns[:, window.start:window.stop], dtype=float)
    if block.shape[1] < 2:
        raise ValidationError('correlation window needs at least 2 days')

    flat = np.flatnonzero(np.ptp(block, axis=1) == 0)
    if flat.size:
        raise DegenerateSeriesError(returns.tickers[flat[0]])

    centred = block - block.mean(axis=1, keepdims=True)
    cov = centred @ centred.T / block.shape[1]
    var = np.diag(cov).copy()

    scale = np.sqrt(var)
    values = cov / np.outer(scale, scale)
    values = np.clip((values + values.T) / 2, -1.0, 1.0)
    np.fill_diagonal(values, 1.0)
    values.setflags(write=False)
    return CorrMatrix(tuple(returns.tickers), values)


def distance_matrix(corr):
    values = np.sqrt(np.clip(2.0 * (1.0 - corr.values), 0.0, 4.0))
    np.fill_diagonal(values, 0.0)
    values.setflags(write=False)
    return DistMatrix(corr.tickers, values)


def build_mst(dist):
    """Prim's algorithm on the dense distance matrix.

    Grows the tree from the lexicographically smallest ticker. Among equal
    distances the edge whose (smaller, larger) ticker pair sorts first wins.
    """
    n = len(dist.tickers)
    if n < 2:
        raise TrivialGraphError('a network needs at least 2 nodes')
    weights = np.asarray(dist.values, dtype=float)
    if not np.all(np.isfinite(weights)):
        raise ValidationError('distances must be finite')

    rank = np.empty(n, dtype=int)
    rank[np.argsort(np.array(dist.tickers, dtype=object), kind='stable')] = np.arange(n)

    def pair(u, v):
        return (min(rank[u], rank[v]), max(rank[u], rank[v]))

    root = int(np.argmin(rank))
    in_tree = np.zeros(n, dtype=bool)
    in_tree[root] = True
    key = weights[root].copy()
    parent = np.full(n, root)
    key[root] = np.inf

    edges = []
    for _ in range(n - 1):
        candidates = np.flatnonzero(~in_tree)
        best = key[candidates].min()
        tied = candidates[key[candidates] == best]
        v = int(min(tied, key=lambda c: pair(parent[c], c)))
        u = int(parent[v])
        in_tree[v] = True
        a, b = sorted((dist.tickers[u], dist.tickers[v]))
        edges.append((a, b, float(weights[u, v])))

        row = weights[v]
        closer = ~in_tree & (row < key)
        parent[closer] = v
        key[closer] = row[closer]
        for c in np.flatnonzero(~in_tree & ~closer & (row == key)):
            if pair(v, c) < pair(parent[c], c):
                parent[c] = v

    return MstGraph(nodes=tuple(dist.tickers), edges=tuple(sorted(edges)))


def build_window(returns, schedule, anchor):
    corr = pearson_matrix(returns, schedule.selection_window(anchor))
    dist = distance_matrix(corr)
    return WindowNetwork(anchor, returns.dates[anchor], corr, dist, build_mst(dist))


def build_networks(returns, schedule, workers=1):
    """Per-anchor networks in schedule order; results do not depend on `workers`."""
    def build(anchor):
        return build_window(returns, schedule, anchor)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            networks = list(pool.map(build, schedule.anchors))
    else:
        networks = [build(anchor) for anchor in schedule.anchors]
    logger.info('Built %d window networks', len(networks))
    return networks


def _describe(sample):
    return (
        float(np.mean(sample)),
        float(np.var(sample)),
        float(stats.skew(sample, bias=True)),
        float(stats.kurtosis(sample, fisher=False, bias=True)),
    )


def _track_correlation(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or np.ptp(x) == 0 or np.ptp(y) == 0 or not (
            np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        return None
    xc, yc = x - x.mean(), y - y.mean()
    value = float(np.sum(xc * yc) / np.sqrt(np.sum(xc ** 2) * np.sum(yc ** 2)))
    return max(-1.0, min(1.0, value))


def moment_track(schedule, returns, workers=1, networks=None):
    """Moment tracks of the off-diagonal correlation and distance elements.

    Also returns the mean correlation +/- one standard deviation band.
    Cross-correlations that cannot be computed are None and flagged.
    """
    if not schedule.anchors:
        raise EmptyScheduleError('schedule has no anchors')
    if networks is None:
        networks = build_networks(returns, schedule, workers)

    corr_rows, dist_rows, lower, upper = [], [], [], []
    for network in networks:
        elements = network.corr.off_diagonal()
        corr_rows.append(_describe(elements))
        dist_rows.append(_describe(network.dist.off_diagonal()))
        spread = float(np.std(elements))
        lower.append(corr_rows[-1][0] - spread)
        upper.append(corr_rows[-1][0] + spread)

    corr_moments = {name: tuple(row[k] for row in corr_rows) for k, name in enumerate(MOMENTS)}
    dist_moments = {name: tuple(row[k] for row in dist_rows) for k, name in enumerate(MOMENTS)}

    flags = []
    cross = {}
    if len(networks) < 2:
        flags.append('insufficient_track')
        cross = {name: None for name in MOMENTS}
    else:
        for name in MOMENTS:
            cross[name] = _track_correlation(corr_moments[name], dist_moments[name])
            if cross[name] is None:
                flags.append(f'insufficient_variation:{name}')
    for flag in flags:
        logger.warning('Moment track: %s', flag)

    return MomentTrack(
        dates=tuple(n.date for n in networks),
        corr_moments=corr_moments,
        dist_moments=dist_moments,
        band_lower=tuple(lower),
        band_upper=tuple(upper),
        cross_correlations=cross,
        flags=tuple(flags),
    )
