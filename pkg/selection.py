# Central, peripheral and random portfolios
# Topological Portfolio Strategy

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from errors import SelectionInfeasibleError, ValidationError

# Parameters ranked high-is-central; the distance parameters rank low-is-central.
DESCENDING = ('K', 'C')


class PortfolioKind(str, Enum):
    CENTRAL = 'central'
    PERIPHERAL = 'peripheral'
    RANDOM = 'random'


@dataclass(frozen=True)
class Portfolio:
    """Equal-weight (1/N) basket selected at one anchor"""
    anchor: str
    parameter: str
    kind: PortfolioKind
    members: tuple
    seed: int = None

    @property
    def weights(self):
        share = 1.0 / len(self.members)
        return {ticker: share for ticker in self.members}

    def to_dict(self):
        return {
            'anchor': self.anchor,
            'parameter': self.parameter,
            'kind': self.kind.value,
            'members': list(self.members),
            'seed': self.seed,
        }


def portfolio_size(universe_size, fraction):
    # tolerance keeps e.g. 0.29 * 100 from flooring to 28
    return max(1, math.floor(fraction * universe_size + 1e-9))


def derive_seed(base_seed, anchor_index):
    return base_seed ^ anchor_index


def _check_fraction(fraction, upper):
    if not 0 < fraction <= upper:
        raise ValidationError(f'fraction must lie in (0, {upper}]')


def _ranked(metrics, parameter, descending):
    values = metrics.values(parameter)
    sign = -1 if descending else 1
    return sorted(metrics.tickers, key=lambda ticker: (sign * values[ticker], ticker))


def select_central(metrics, parameter, fraction, anchor=''):
    """Top share by K or C, or the bottom share by a distance-to-center measure."""
    _check_fraction(fraction, 0.5)
    size = portfolio_size(len(metrics.tickers), fraction)
    ranked = _ranked(metrics, parameter, descending=parameter in DESCENDING)
    return Portfolio(anchor, parameter, PortfolioKind.CENTRAL, tuple(sorted(ranked[:size])))


def select_peripheral(metrics, parameter, fraction, seed, anchor=''):
    """Leaves (K = 1 / C = 0) subsampled with `seed`, or the farthest nodes by distance."""
    _check_fraction(fraction, 0.5)
    size = portfolio_size(len(metrics.tickers), fraction)

    if parameter in DESCENDING:
        values = metrics.values(parameter)
        target = 1 if parameter == 'K' else 0
        eligible = sorted(t for t in metrics.tickers if values[t] == target)
        if len(eligible) < size:
            raise SelectionInfeasibleError(
                f'{len(eligible)} peripheral node(s) by {parameter}, {size} required')
        rng = np.random.default_rng(seed)
        picked = rng.choice(len(eligible), size=size, replace=False)
        members = tuple(sorted(eligible[i] for i in picked))
    else:
        # the tail of the central ranking, so ties never land on both sides
        ranked = _ranked(metrics, parameter, descending=False)
        members = tuple(sorted(ranked[-size:]))

    return Portfolio(anchor, parameter, PortfolioKind.PERIPHERAL, members, seed)


def select_random(universe, fraction, seed, anchor=''):
    if not 0 < fraction < 1:
        raise ValidationError('fraction must lie in (0, 1)')
    universe = sorted(universe)
    size = portfolio_size(len(universe), fraction)
    rng = np.random.default_rng(seed)
    picked = rng.choice(len(universe), size=size, replace=False)
    members = tuple(sorted(universe[i] for i in picked))
    return Portfolio(anchor, 'random', PortfolioKind.RANDOM, members, seed)


def random_draws(universe_size, size, draws, seed):
    """`draws` independent uniform samples without replacement, as index rows."""
    rng = np.random.default_rng(seed)
    base = np.tile(np.arange(universe_size), (draws, 1))
    return rng.permuted(base, axis=1)[:, :size]
