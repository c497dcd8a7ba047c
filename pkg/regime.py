# Market condition classification
# Topological Portfolio Strategy

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
import pandas as pd

from config import CRITERIA
from errors import (InsufficientWindowError, UndefinedRatioError, RegimeContradictionError,
                    ParseError, ValidationError)

logger = logging.getLogger(__name__)


class Condition(str, Enum):
    U = 'U'  # drawup
    S = 'S'  # stable
    D = 'D'  # drawdown


class Combination(str, Enum):
    UU = 'UU'
    US = 'US'
    UD = 'UD'
    SU = 'SU'
    SS = 'SS'
    SD = 'SD'
    DU = 'DU'
    DS = 'DS'
    DD = 'DD'


@dataclass(frozen=True, eq=False)
class IndexSeries:
    """Closing levels of the market index, one per price date."""
    dates: tuple
    levels: np.ndarray

    def __post_init__(self):
        if len(self.dates) != len(self.levels):
            raise ValidationError('index dates and levels differ in length')
        if not np.all(np.isfinite(self.levels)) or np.any(self.levels <= 0):
            raise ValidationError('index levels must be positive and finite')

    def align(self, dates):
        """Restrict to `dates`; every date must be present."""
        position = {d: i for i, d in enumerate(self.dates)}
        absent = [d for d in dates if d not in position]
        if absent:
            raise ValidationError(f'index has no level on {len(absent)} panel date(s), '
                                  f'first {absent[0]}')
        picked = [position[d] for d in dates]
        return IndexSeries(tuple(dates), np.asarray(self.levels)[picked])


@dataclass(frozen=True)
class RegimeConfig:
    theta_plus: float = 0.55
    theta_minus: float = 0.45
    criterion: str = 'trading_day'

    def __post_init__(self):
        if not 0 < self.theta_minus <= self.theta_plus < 1:
            raise ValidationError('thresholds must satisfy 0 < theta_minus <= theta_plus < 1')
        if self.criterion not in CRITERIA:
            raise ValidationError(f'unknown criterion: {self.criterion}')


@dataclass(frozen=True)
class WindowRatios:
    r_d: float
    r_f: float = None


@dataclass(frozen=True)
class AnchorRegime:
    """Index ratios of one anchor's selection window and investment horizon."""
    position: int
    anchor: int
    date: str
    selection: WindowRatios
    investment: WindowRatios

    def combination(self, config):
        """Combination under `config`, or None when a window cannot be labelled."""
        try:
            first = classify(self.selection.r_d, self.selection.r_f, config)
            second = classify(self.investment.r_d, self.investment.r_f, config)
        except (RegimeContradictionError, UndefinedRatioError) as e:
            logger.warning('Anchor %s left unclassified under %s: %s',
                           self.date, config.criterion, e)
            return None
        return combine(first, second)


def load_index(source):
    """Read `date,close` rows of the market index."""
    try:
        frame = pd.read_csv(source, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise ParseError('empty index file', line=1)
    except pd.errors.ParserError as e:
        raise ParseError(f'malformed index file: {e}')
    frame.columns = [c.strip().lower() for c in frame.columns]
    if 'date' not in frame.columns or 'close' not in frame.columns:
        raise ParseError('index file needs date and close columns', line=1)

    dates = pd.to_datetime(frame['date'].str.strip(), format='%Y-%m-%d', errors='coerce')
    levels = pd.to_numeric(frame['close'].str.strip(), errors='coerce')
    bad = dates.isna().to_numpy() | levels.isna().to_numpy()
    if bad.any():
        raise ParseError('expected date (YYYY-MM-DD) and decimal close', line=int(bad.argmax()) + 2)

    series = pd.Series(levels.to_numpy(dtype=float), index=dates.dt.strftime('%Y-%m-%d'))
    if series.index.duplicated().any():
        raise ValidationError(f'duplicate index date {series.index[series.index.duplicated()][0]}')
    series = series.sort_index()
    return IndexSeries(tuple(series.index), series.to_numpy())


def _changes(index, window):
    levels = np.asarray(index.levels[window.start:window.stop], dtype=float)
    if levels.size < 2:
        raise InsufficientWindowError('a ratio window needs at least 2 levels')
    return np.diff(levels)


def ratio_trading_days(index, window):
    """Share of comparable days closing above the previous day (N+ / N)."""
    changes = _changes(index, window)
    return float(np.count_nonzero(changes > 0) / changes.size)


def ratio_amplitude(index, window):
    """Up-day absolute changes over all absolute changes."""
    changes = _changes(index, window)
    total = float(np.sum(np.abs(changes)))
    if total == 0:
        raise UndefinedRatioError('index is constant over the window')
    return float(np.sum(changes[changes > 0]) / total)


def _label(value, config):
    if value > config.theta_plus:
        return Condition.U
    if value < config.theta_minus:
        return Condition.D
    return Condition.S


def classify(r_d, r_f, config):
    if config.criterion == 'trading_day':
        return _label(r_d, config)
    if r_f is None:
        raise UndefinedRatioError(f'criterion {config.criterion} needs the amplitude ratio')
    if config.criterion == 'amplitude':
        return _label(r_f, config)

    up = (r_d > config.theta_plus, r_f > config.theta_plus)
    down = (r_d < config.theta_minus, r_f < config.theta_minus)
    if config.criterion == 'or':
        if any(up) and any(down):
            logger.error('Contradictory ratios under OR criterion: r_d=%.4f r_f=%.4f', r_d, r_f)
            raise RegimeContradictionError(
                f'r_d={r_d:.4f} and r_f={r_f:.4f} point in opposite directions')
        if any(up):
            return Condition.U
        if any(down):
            return Condition.D
        return Condition.S
    if all(up):
        return Condition.U
    if all(down):
        return Condition.D
    return Condition.S


def combine(selection, investment):
    return Combination(Condition(selection).value + Condition(investment).value)


def window_ratios(index, window):
    r_d = ratio_trading_days(index, window)
    try:
        r_f = ratio_amplitude(index, window)
    except UndefinedRatioError:
        r_f = None
    return WindowRatios(r_d, r_f)


def regime_track(index, schedule, horizon=None):
    """Selection and investment ratios of every anchor.

    `index` is aligned to the price dates, so return column j spans index
    levels j and j + 1.
    """
    horizon = schedule.horizon_days if horizon is None else horizon
    if len(index.levels) != schedule.total_days:
        raise ValidationError('index must be aligned to the price panel dates')
    track = []
    for position, anchor in enumerate(schedule.anchors):
        selection = range(anchor - schedule.window_days + 1, anchor + 2)
        investment = range(anchor + 1, anchor + horizon + 2)
        track.append(AnchorRegime(
            position=position,
            anchor=anchor,
            date=index.dates[anchor + 1],
            selection=window_ratios(index, selection),
            investment=window_ratios(index, investment),
        ))
    return track
