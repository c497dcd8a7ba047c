# Price ingest, liquidity filter, returns and summary statistics
# Topological Portfolio Strategy

import logging
import re
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy import stats

from errors import (ParseError, ValidationError, EmptyUniverseError,
                    ContractError, DegenerateSampleError)

logger = logging.getLogger(__name__)

PRICE_COLUMNS = ('date', 'ticker', 'adjusted_close')
# pandas reports tokenizer failures as '... in line N, ...'
PARSER_LINE = re.compile(r'line (\d+)')


@dataclass(frozen=True, eq=False)
class PricePanel:
    """Adjusted closing prices, one row per ticker, one column per date.

    Missing prices are NaN until filter_liquidity fills them; `missing`
    keeps the original no-trade mask either way.
    """
    tickers: tuple
    dates: tuple
    prices: np.ndarray
    missing: np.ndarray

    def __post_init__(self):
        if self.prices.shape != (len(self.tickers), len(self.dates)):
            raise ValidationError('price matrix does not match tickers x dates')
        if self.missing.shape != self.prices.shape:
            raise ValidationError('missing mask does not match price matrix')
        if any(a >= b for a, b in zip(self.dates, self.dates[1:])):
            raise ValidationError('dates must be strictly increasing')
        present = self.prices[~np.isnan(self.prices)]
        if not np.all(np.isfinite(present)) or np.any(present <= 0):
            raise ValidationError('prices must be positive and finite')
        self.prices.setflags(write=False)
        self.missing.setflags(write=False)

    @property
    def n_days(self):
        return len(self.dates)

    @property
    def has_gaps(self):
        return bool(np.isnan(self.prices).any())


@dataclass(frozen=True, eq=False)
class ReturnPanel:
    """Daily log returns; column t is the return into dates[t]."""
    tickers: tuple
    dates: tuple
    returns: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.returns)):
            raise ValidationError('returns must be finite')
        self.returns.setflags(write=False)

    @property
    def n_days(self):
        return len(self.dates)


@dataclass(frozen=True)
class MarketStats:
    market: str
    stocks: int
    records: int
    mean: float
    std: float
    maximum: float
    minimum: float
    skewness: float
    kurtosis: float

    def to_dict(self):
        return {
            'market': self.market,
            'stocks': self.stocks,
            'records': self.records,
            'mean': self.mean,
            'std': self.std,
            'max': self.maximum,
            'min': self.minimum,
            'skewness': self.skewness,
            'kurtosis': self.kurtosis,
        }


@dataclass(frozen=True)
class StatsReport:
    rows: tuple

    def __getitem__(self, market):
        for row in self.rows:
            if row.market == market:
                return row
        raise KeyError(market)

    def merge(self, other):
        return StatsReport(self.rows + other.rows)

    def to_dict(self):
        return {'markets': [row.to_dict() for row in self.rows]}


def load_prices(source):
    """Read `date,ticker,adjusted_close` rows into an aligned PricePanel.

    Dates are aligned on their union; a ticker absent on a date is marked
    missing. Tickers are ordered lexicographically.
    """
    try:
        frame = pd.read_csv(source, dtype=str, keep_default_na=False,
                            skipinitialspace=True, skip_blank_lines=False)
    except pd.errors.EmptyDataError:
        raise ParseError('empty price file', line=1)
    except pd.errors.ParserError as e:
        match = PARSER_LINE.search(str(e))
        raise ParseError(f'malformed price file: {e}',
                         line=int(match.group(1)) if match else None)

    frame.columns = [c.strip().lower() for c in frame.columns]
    absent = [c for c in PRICE_COLUMNS if c not in frame.columns]
    if absent:
        raise ParseError(f'missing column(s): {", ".join(absent)}', line=1)
    frame = frame[list(PRICE_COLUMNS)]

    # header is line 1, first data row is line 2; blank rows still count
    lines = frame.index.to_numpy() + 2
    blank = frame.fillna('').apply(lambda column: column.str.strip()).eq('').all(axis=1).to_numpy()
    frame, lines = frame[~blank].reset_index(drop=True), lines[~blank]
    dates = pd.to_datetime(frame['date'].str.strip(), format='%Y-%m-%d', errors='coerce')
    prices = pd.to_numeric(frame['adjusted_close'].str.strip(), errors='coerce')
    tickers = frame['ticker'].str.strip()

    bad = dates.isna().to_numpy() | prices.isna().to_numpy() | (tickers == '').to_numpy()
    if bad.any():
        line = int(lines[bad.argmax()])
        raise ParseError('expected date (YYYY-MM-DD), ticker and decimal price', line=line)

    invalid = ~np.isfinite(prices.to_numpy()) | (prices.to_numpy() <= 0)
    if invalid.any():
        line = int(lines[invalid.argmax()])
        raise ValidationError(f'line {line}: price must be positive and finite')

    frame = pd.DataFrame({
        'date': dates.dt.strftime('%Y-%m-%d'),
        'ticker': tickers,
        'price': prices.astype(float),
    })
    duplicated = frame.duplicated(subset=['date', 'ticker'])
    if duplicated.any():
        line = int(lines[duplicated.to_numpy().argmax()])
        row = frame[duplicated].iloc[0]
        raise ValidationError(f'line {line}: duplicate row for {row.ticker} on {row.date}')

    table = frame.pivot(index='ticker', columns='date', values='price')
    table = table.sort_index(axis=0).sort_index(axis=1)
    if table.shape[1] < 2:
        raise ValidationError('at least 2 distinct dates are required')

    values = table.to_numpy(dtype=float)
    logger.info('Loaded %d tickers over %d dates', *values.shape)
    return PricePanel(
        tickers=tuple(table.index),
        dates=tuple(table.columns),
        prices=values,
        missing=np.isnan(values),
    )


def filter_liquidity(panel, max_gap_days):
    """Drop tickers missing more than `max_gap_days` days; fill the rest.

    Surviving gaps take the last observed price (zero return). A gap at the
    start of the sample takes the first observed price.
    """
    if max_gap_days < 0:
        raise ValidationError('max_gap_days must be non-negative')

    counts = panel.missing.sum(axis=1)
    keep = counts <= max_gap_days
    dropped = [t for t, k in zip(panel.tickers, keep) if not k]
    if dropped:
        logger.info('Dropped %d illiquid ticker(s): %s', len(dropped), ', '.join(dropped))
    if not keep.any():
        raise EmptyUniverseError(f'no ticker has at most {max_gap_days} missing days')

    table = pd.DataFrame(panel.prices[keep])
    filled = table.ffill(axis=1).bfill(axis=1).to_numpy(dtype=float)

    return PricePanel(
        tickers=tuple(t for t, k in zip(panel.tickers, keep) if k),
        dates=panel.dates,
        prices=filled,
        missing=panel.missing[keep].copy(),
    )


def compute_returns(panel):
    if panel.n_days < 2:
        raise ContractError('at least 2 dates are required to compute returns')
    if panel.has_gaps:
        raise ContractError('price panel has unfilled gaps; run filter_liquidity first')
    logs = np.log(panel.prices)
    return ReturnPanel(
        tickers=panel.tickers,
        dates=panel.dates[1:],
        returns=np.diff(logs, axis=1),
    )


def _moments(sample):
    return (
        float(np.mean(sample)),
        float(np.std(sample, ddof=1)),
        float(stats.skew(sample, bias=True)),
        float(stats.kurtosis(sample, fisher=False, bias=True)),
    )


def summary_stats(returns, market='market', pooling='pooled'):
    """Pooled moments of the return sample.

    Skewness and kurtosis are the standardized third and fourth central
    moments (kurtosis is not excess). With pooling='per_stock' the moments
    are computed per stock and averaged; max/min stay global.
    """
    values = np.asarray(returns.returns, dtype=float)
    pooled = values.ravel()
    if pooled.size < 2:
        raise DegenerateSampleError('at least 2 return observations are required')
    if np.ptp(pooled) == 0:
        raise DegenerateSampleError('pooled return variance is zero')

    if pooling == 'pooled':
        mean, std, skewness, kurtosis = _moments(pooled)
    elif pooling == 'per_stock':
        if values.shape[1] < 2:
            raise DegenerateSampleError('per-stock moments need at least 2 days')
        if np.any(np.ptp(values, axis=1) == 0):
            raise DegenerateSampleError('a stock has zero return variance')
        mean, std, skewness, kurtosis = np.mean([_moments(row) for row in values], axis=0)
    else:
        raise ValueError(f'unknown pooling: {pooling}')

    row = MarketStats(
        market=market,
        stocks=len(returns.tickers),
        records=int(pooled.size),
        mean=float(mean),
        std=float(std),
        maximum=float(pooled.max()),
        minimum=float(pooled.min()),
        skewness=float(skewness),
        kurtosis=float(kurtosis),
    )
    return StatsReport((row,))
