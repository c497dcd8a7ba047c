# Synthetic market generator
# Topological Portfolio Strategy
#
# One market factor drives every stock with the same beta. Block stocks
# carry less idiosyncratic noise, so they correlate tightly with each other
# and more strongly with the rest of the market, which puts them at the core
# of the spanning tree. During drawup segments the block earns an extra
# drift, which is the signal the backtest should recover. Equal betas keep
# market moves out of the difference between any two portfolios.

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from errors import ValidationError

logger = logging.getLogger(__name__)

# probability of an up day for the index in each segment kind
UP_PROBABILITY = {'U': 0.7, 'S': 0.5, 'D': 0.3}


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of a synthetic market"""
    n_stocks: int = 40
    n_days: int = 2400
    block_size: int = 8
    block_rho: float = 0.6
    market_rho: float = 0.1
    volatility: float = 0.002
    index_volatility: float = 0.01
    planted_drift: float = 0.02
    horizon_days: int = 200
    segments: str = 'U:400,D:400'
    start_date: str = '2000-01-04'
    seed: int = 0

    def __post_init__(self):
        if self.n_stocks < 2 or self.n_days < 2:
            raise ValidationError('a synthetic market needs at least 2 stocks and 2 days')
        if not 0 <= self.block_size <= self.n_stocks:
            raise ValidationError('block_size must lie in [0, n_stocks]')
        if not 0 <= self.market_rho <= self.block_rho < 1:
            raise ValidationError('correlations must satisfy 0 <= market_rho <= block_rho < 1')
        if self.block_size and self.market_rho <= 0:
            raise ValidationError('a correlated block needs market_rho > 0')
        if self.volatility <= 0 or self.index_volatility <= 0 or self.horizon_days < 1:
            raise ValidationError('volatilities and horizon_days must be positive')
        parse_segments(self.segments)

    @property
    def tickers(self):
        width = len(str(self.n_stocks - 1))
        return tuple(f'S{i:0{width}d}' for i in range(self.n_stocks))

    def to_dict(self):
        return {name: getattr(self, name) for name in self.__dataclass_fields__}


@dataclass(frozen=True, eq=False)
class SynthMarket:
    dates: tuple
    tickers: tuple
    prices: np.ndarray
    index: np.ndarray
    block: tuple
    conditions: str

    def price_frame(self):
        """Long `date,ticker,adjusted_close` table sorted by date then ticker."""
        frame = pd.DataFrame(self.prices.T, index=list(self.dates), columns=list(self.tickers))
        frame.index.name = 'date'
        frame = frame.reset_index().melt(id_vars='date', var_name='ticker',
                                         value_name='adjusted_close')
        return frame.sort_values(['date', 'ticker'], kind='stable').reset_index(drop=True)

    def index_frame(self):
        return pd.DataFrame({'date': list(self.dates), 'close': self.index})


def parse_segments(text):
    """Parse 'U:400,D:400' into [('U', 400), ('D', 400)]."""
    segments = []
    for part in str(text).split(','):
        kind, _, length = part.strip().partition(':')
        kind = kind.strip().upper()
        if kind not in UP_PROBABILITY:
            raise ValidationError(f'unknown segment kind: {kind!r}')
        try:
            days = int(length)
        except ValueError:
            raise ValidationError(f'segment length must be an integer: {part!r}')
        if days < 1:
            raise ValidationError(f'segment length must be positive: {part!r}')
        segments.append((kind, days))
    if not segments:
        raise ValidationError('at least one segment is required')
    return segments


def segment_conditions(segments, n_days):
    """Per-day condition string, cycling the segments to cover `n_days`."""
    pattern = ''.join(kind * days for kind, days in segments)
    repeats = -(-n_days // len(pattern))
    return (pattern * repeats)[:n_days]


def generate(spec):
    """Prices and index levels for `spec`; identical for identical specs."""
    rng = np.random.default_rng(spec.seed)
    n, days = spec.n_stocks, spec.n_days
    changes = days - 1
    conditions = segment_conditions(parse_segments(spec.segments), changes)

    block = np.sort(rng.choice(n, size=spec.block_size, replace=False))
    beta = spec.volatility * np.sqrt(spec.market_rho)
    idiosyncratic = np.full(n, spec.volatility * np.sqrt(1.0 - spec.market_rho))
    if spec.block_size:
        # corr within the block is beta^2 / (beta^2 + sigma^2) = block_rho
        idiosyncratic[block] = beta * np.sqrt(1.0 / spec.block_rho - 1.0)

    factor = rng.standard_normal(changes)
    noise = rng.standard_normal((n, changes))
    returns = beta * factor[None, :] + idiosyncratic[:, None] * noise

    drawup = np.array([c == 'U' for c in conditions])
    returns[np.ix_(block, np.flatnonzero(drawup))] += spec.planted_drift / spec.horizon_days

    up_chance = np.array([UP_PROBABILITY[c] for c in conditions])
    sign = np.where(rng.random(changes) < up_chance, 1.0, -1.0)
    index_changes = sign * np.abs(rng.normal(0.0, spec.index_volatility, changes))

    start = rng.uniform(10.0, 100.0, n)
    prices = start[:, None] * np.exp(np.concatenate(
        [np.zeros((n, 1)), np.cumsum(returns, axis=1)], axis=1))
    index = 1000.0 * np.exp(np.concatenate([[0.0], np.cumsum(index_changes)]))

    dates = tuple(pd.bdate_range(spec.start_date, periods=days).strftime('%Y-%m-%d'))
    tickers = spec.tickers
    logger.info('Generated %d stocks over %d days, block of %d', n, days, spec.block_size)
    return SynthMarket(
        dates=dates,
        tickers=tickers,
        prices=prices,
        index=index,
        block=tuple(tickers[i] for i in block),
        conditions=conditions,
    )
