# Horizon returns, regime-conditioned comparison and the optimal strategy
# Topological Portfolio Strategy

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from errors import (HorizonRangeError, InsufficientDataError, DegenerateAnovaError,
                    DegenerateSharpeError)
from network import build_window
from regime import Combination, RegimeConfig, regime_track
from selection import (PortfolioKind, Portfolio, select_central, select_peripheral,
                       select_random, random_draws, derive_seed, portfolio_size)
from topology import node_metrics

logger = logging.getLogger(__name__)

TRADED_KINDS = (PortfolioKind.CENTRAL, PortfolioKind.PERIPHERAL)

# independent random streams derived from one anchor seed
RANDOM_PORTFOLIO_STREAM = 1
BENCHMARK_STREAM = 2


@dataclass(frozen=True, eq=False)
class HorizonResult:
    anchor: int
    portfolio: Portfolio
    stock_returns: np.ndarray

    @property
    def mean(self):
        return float(np.mean(self.stock_returns))


@dataclass(frozen=True)
class AnovaResult:
    f_value: float
    p_value: float
    df_between: int
    df_within: int


@dataclass(frozen=True, eq=False)
class AnchorSelection:
    position: int
    anchor: int
    date: str
    metrics: object
    portfolios: dict
    benchmark: np.ndarray
    seed: int


@dataclass(frozen=True, eq=False)
class AnchorOutcome:
    selection: AnchorSelection
    horizon: int
    end_date: str
    results: dict
    benchmark_returns: np.ndarray

    @property
    def position(self):
        return self.selection.position

    @property
    def date(self):
        return self.selection.date

    @property
    def random_mean(self):
        return float(np.mean(self.benchmark_returns))


@dataclass(frozen=True)
class PipelineRun:
    """Selections, realized horizons and index regimes, aligned by anchor position."""
    schedule: object
    dates: tuple
    selections: tuple
    outcomes: tuple
    regimes: tuple

    def subset(self, positions):
        keep = set(positions)
        return PipelineRun(
            schedule=self.schedule,
            dates=self.dates,
            selections=tuple(s for s in self.selections if s.position in keep),
            outcomes=tuple(o for o in self.outcomes if o.position in keep),
            regimes=tuple(r for r in self.regimes if r.position in keep),
        )

    def labelled(self, regime_config):
        """(outcome, combination) pairs; unclassifiable anchors are skipped."""
        by_position = {r.position: r for r in self.regimes}
        pairs = []
        for outcome in self.outcomes:
            combination = by_position[outcome.position].combination(regime_config)
            if combination is not None:
                pairs.append((outcome, combination))
        return pairs


@dataclass(frozen=True)
class ComparisonCell:
    criterion: str
    parameter: str
    combination: Combination
    num: int
    f_value: float
    p_value: float
    central_excess: float
    peripheral_excess: float
    hidden: bool

    def significant_at(self, level):
        return self.p_value is not None and self.p_value < level

    @property
    def significant_5(self):
        return self.significant_at(0.05)

    @property
    def significant_10(self):
        return self.significant_at(0.10)


@dataclass(frozen=True)
class StrategyMap:
    """Optimal portfolio kind per (criterion, parameter, combination); absent means none."""
    choices: dict = field(default_factory=dict)

    def kind_for(self, criterion, parameter, combination):
        return self.choices.get((criterion, parameter, Combination(combination)))

    def to_dict(self, criteria, parameters):
        data = {}
        for criterion in criteria:
            data[criterion] = {}
            for parameter in parameters:
                row = {}
                for combination in Combination:
                    kind = self.kind_for(criterion, parameter, combination)
                    row[combination.value] = kind.value if kind else 'none'
                data[criterion][parameter] = row
        return data

    @classmethod
    def from_dict(cls, data):
        choices = {}
        for criterion, by_parameter in data.items():
            for parameter, by_combination in by_parameter.items():
                for combination, kind in by_combination.items():
                    if kind != 'none':
                        choices[(criterion, parameter, Combination(combination))] = PortfolioKind(kind)
        return cls(choices)


@dataclass(frozen=True)
class HorizonPair:
    date: str
    combination: Combination
    kind: PortfolioKind
    strategy_return: float
    random_return: float


@dataclass(frozen=True)
class StrategyPerformance:
    criterion: str
    parameter: str
    invested: int
    excess_return: float
    win_fraction: float
    pairs: tuple

    @property
    def flags(self):
        return ('no_investment',) if self.invested == 0 else ()

    def to_dict(self):
        return {
            'criterion': self.criterion,
            'parameter': self.parameter,
            'invested': self.invested,
            'excess_return': self.excess_return,
            'win_fraction': self.win_fraction,
            'flags': list(self.flags),
        }


@dataclass(frozen=True)
class EmpiricalReport:
    performances: tuple

    @property
    def invested(self):
        return sum(p.invested for p in self.performances)

    @property
    def flags(self):
        return ('no_investment',) if self.invested == 0 else ()

    def best(self):
        scored = [p for p in self.performances if p.excess_return is not None]
        if not scored:
            return None
        return max(scored, key=lambda p: (p.excess_return, p.criterion, p.parameter))

    def outperforming_share(self):
        scored = [p for p in self.performances if p.excess_return is not None]
        if not scored:
            return None
        return sum(p.excess_return > 0 for p in scored) / len(scored)

    def to_dict(self):
        best = self.best()
        return {
            'strategies': [p.to_dict() for p in self.performances],
            'summary': {
                'invested_horizons': self.invested,
                'best': None if best is None else {
                    'criterion': best.criterion,
                    'parameter': best.parameter,
                    'excess_return': best.excess_return,
                    'win_fraction': best.win_fraction,
                },
                'outperforming_share': self.outperforming_share(),
            },
            'flags': list(self.flags),
        }


@dataclass(frozen=True)
class SweepRow:
    parameter: str
    kind: PortfolioKind
    sharpe: dict
    f_value: float
    p_value: float
    anova_skipped: bool


def cumulative_returns(returns, anchor, horizon, mode='log'):
    """Per-stock return over columns {anchor+1, ..., anchor+horizon}."""
    stop = anchor + horizon + 1
    if anchor < 0 or horizon < 1 or stop > returns.n_days:
        raise HorizonRangeError(
            f'horizon of {horizon} days after column {anchor} exceeds {returns.n_days} return days')
    total = returns.returns[:, anchor + 1:stop].sum(axis=1)
    return np.expm1(total) if mode == 'simple' else total


def horizon_return(portfolio, returns, anchor, horizon, mode='log'):
    cumulative = cumulative_returns(returns, anchor, horizon, mode)
    position = {ticker: i for i, ticker in enumerate(returns.tickers)}
    picked = cumulative[[position[t] for t in portfolio.members]]
    return HorizonResult(anchor, portfolio, picked)


def _pool(values):
    if isinstance(values, np.ndarray):
        return values.astype(float).ravel()
    parts = [np.atleast_1d(np.asarray(v, dtype=float)).ravel() for v in values]
    return np.concatenate(parts) if parts else np.empty(0)


def excess_return(selected, random):
    """Mean of the pooled selected returns minus mean of the pooled random returns."""
    selected, random = _pool(selected), _pool(random)
    if selected.size == 0 or random.size == 0:
        raise InsufficientDataError('excess return needs non-empty groups')
    return float(selected.mean() - random.mean())


def f_survival(f_value, df_between, df_within):
    """Upper tail of the F distribution via the regularized incomplete beta."""
    if f_value <= 0:
        return 1.0
    x = df_within / (df_within + df_between * f_value)
    return float(special.betainc(df_within / 2.0, df_between / 2.0, x))


def anova_oneway(*groups):
    groups = [_pool(g) for g in groups]
    if len(groups) < 2:
        raise InsufficientDataError('one-way ANOVA needs at least 2 groups')
    if any(g.size < 2 for g in groups):
        raise InsufficientDataError('each ANOVA group needs at least 2 values')

    everything = np.concatenate(groups)
    grand = everything.mean()
    ss_between = float(sum(g.size * (g.mean() - grand) ** 2 for g in groups))
    ss_within = float(sum(np.sum((g - g.mean()) ** 2) for g in groups))
    df_between = len(groups) - 1
    df_within = everything.size - len(groups)
    if ss_within <= 0:
        raise DegenerateAnovaError('within-group variance is zero')

    f_value = (ss_between / df_between) / (ss_within / df_within)
    return AnovaResult(f_value, f_survival(f_value, df_between, df_within), df_between, df_within)


def sharpe(excess):
    values = _pool(excess)
    if values.size < 2:
        raise InsufficientDataError('Sharpe ratio needs at least 2 values')
    if np.ptp(values) == 0:
        raise DegenerateSharpeError('excess-return series has zero standard deviation')
    return float(values.mean() / values.std(ddof=1))


def select_anchor(returns, schedule, position, config, network=None):
    """Central, peripheral and random portfolios of one anchor plus its benchmark draws."""
    anchor = schedule.anchors[position]
    if network is None:
        network = build_window(returns, schedule, anchor)
    metrics = node_metrics(network.tree, network.corr, hops=config.distance_mode == 'hops')
    seed = derive_seed(config.base_seed, position)

    portfolios = {}
    for parameter in config.parameters:
        portfolios[(parameter, PortfolioKind.CENTRAL)] = select_central(
            metrics, parameter, config.fraction, anchor=network.date)
        portfolios[(parameter, PortfolioKind.PERIPHERAL)] = select_peripheral(
            metrics, parameter, config.fraction, seed, anchor=network.date)
    portfolios[('random', PortfolioKind.RANDOM)] = select_random(
        returns.tickers, config.fraction, (seed, RANDOM_PORTFOLIO_STREAM), anchor=network.date)

    size = portfolio_size(len(returns.tickers), config.fraction)
    benchmark = random_draws(len(returns.tickers), size, config.random_draws,
                             (seed, BENCHMARK_STREAM))
    return AnchorSelection(position, anchor, network.date, metrics, portfolios, benchmark, seed)


def select_portfolios(returns, schedule, config, networks=None):
    def select(position):
        network = networks[position] if networks is not None else None
        return select_anchor(returns, schedule, position, config, network)

    positions = range(len(schedule.anchors))
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            selections = list(pool.map(select, positions))
    else:
        selections = [select(p) for p in positions]
    logger.info('Selected portfolios at %d anchors', len(selections))
    return selections


def realize(selection, returns, horizon, mode='log'):
    results = {
        key: horizon_return(portfolio, returns, selection.anchor, horizon, mode)
        for key, portfolio in selection.portfolios.items()
        if portfolio.kind in TRADED_KINDS
    }
    cumulative = cumulative_returns(returns, selection.anchor, horizon, mode)
    return AnchorOutcome(
        selection=selection,
        horizon=horizon,
        end_date=returns.dates[selection.anchor + horizon],
        results=results,
        benchmark_returns=cumulative[selection.benchmark],
    )


def run_pipeline(returns, index, schedule, config, networks=None, selections=None):
    """Select at every anchor, realize the investment horizon and label the index."""
    if selections is None:
        selections = select_portfolios(returns, schedule, config, networks)
    outcomes = [realize(s, returns, schedule.horizon_days, config.return_mode) for s in selections]
    regimes = regime_track(index, schedule)
    return PipelineRun(schedule, tuple(returns.dates), tuple(selections),
                       tuple(outcomes), tuple(regimes))


def _groups(bucket, parameter, kind, pooling):
    if pooling == 'anchor':
        return [o.results[(parameter, kind)].mean for o in bucket]
    return [o.results[(parameter, kind)].stock_returns for o in bucket]


def _benchmark(bucket, pooling):
    if pooling == 'anchor':
        return [o.random_mean for o in bucket]
    return [o.benchmark_returns for o in bucket]


def _compare_cell(bucket, criterion, parameter, combination, config):
    num = len(bucket)
    if num == 0:
        return ComparisonCell(criterion, parameter, combination, 0, None, None, None, None, True)

    central = _pool(_groups(bucket, parameter, PortfolioKind.CENTRAL, config.excess_pooling))
    peripheral = _pool(_groups(bucket, parameter, PortfolioKind.PERIPHERAL, config.excess_pooling))
    random_mean = _pool(_benchmark(bucket, config.excess_pooling)).mean()
    central_excess = excess_return(central, [random_mean])
    peripheral_excess = excess_return(peripheral, [random_mean])

    try:
        result = anova_oneway(central - random_mean, peripheral - random_mean)
        f_value, p_value = result.f_value, result.p_value
    except (InsufficientDataError, DegenerateAnovaError) as e:
        logger.info('No ANOVA for %s/%s/%s: %s', criterion, parameter, combination.value, e)
        f_value = p_value = None

    hidden = num < config.min_samples or p_value is None or p_value >= config.significance
    return ComparisonCell(criterion, parameter, combination, num, f_value, p_value,
                          central_excess, peripheral_excess, hidden)


def compare_regimes(run, config):
    """Central vs. peripheral excess returns for every criterion, parameter and combination.

    Cells with fewer than `min_samples` anchors or without a significant
    difference are computed but marked hidden.
    """
    cells = []
    for criterion in config.criteria:
        regime_config = RegimeConfig(config.theta_plus, config.theta_minus, criterion)
        buckets = {combination: [] for combination in Combination}
        for outcome, combination in run.labelled(regime_config):
            buckets[combination].append(outcome)
        for parameter in config.parameters:
            for combination in Combination:
                cells.append(_compare_cell(buckets[combination], criterion, parameter,
                                           combination, config))
    hidden = sum(cell.hidden for cell in cells)
    logger.info('Compared %d cells, %d hidden', len(cells), hidden)
    return cells


def split_period(run, config):
    """Training anchors end their horizon by train_end; test anchors start at test_start."""
    train_end = config.train_end
    if train_end is None:
        train_end = run.dates[int(config.train_fraction * (len(run.dates) - 1))]
    test_start = config.test_start or train_end

    train = [o.position for o in run.outcomes if o.end_date <= train_end]
    test = [o.position for o in run.outcomes if o.date >= test_start]
    logger.info('Split at %s / %s: %d training and %d test anchors',
                train_end, test_start, len(train), len(test))
    return run.subset(train), run.subset(test)


def train_strategy(run, config):
    """Pick the portfolio kind with the higher excess return wherever the
    difference is significant and backed by at least `min_samples` anchors."""
    if not run.outcomes:
        raise InsufficientDataError('training period holds no complete selection and investment horizon')
    choices = {}
    for cell in compare_regimes(run, config):
        if cell.hidden:
            continue
        kind = (PortfolioKind.CENTRAL if cell.central_excess > cell.peripheral_excess
                else PortfolioKind.PERIPHERAL)
        choices[(cell.criterion, cell.parameter, cell.combination)] = kind
    logger.info('Trained strategy map with %d active choice(s)', len(choices))
    return StrategyMap(choices)


def _evaluate(strategy_map, labelled, criterion, parameter, pooling):
    pairs, chosen, benchmark = [], [], []
    for outcome, combination in labelled:
        kind = strategy_map.kind_for(criterion, parameter, combination)
        if kind is None:
            continue
        result = outcome.results[(parameter, kind)]
        pairs.append(HorizonPair(outcome.date, combination, kind, result.mean, outcome.random_mean))
        if pooling == 'anchor':
            chosen.append(result.mean)
            benchmark.append(outcome.random_mean)
        else:
            chosen.append(result.stock_returns)
            benchmark.append(outcome.benchmark_returns)

    if not pairs:
        return StrategyPerformance(criterion, parameter, 0, None, None, ())
    wins = sum(p.strategy_return > p.random_return for p in pairs)
    return StrategyPerformance(
        criterion=criterion,
        parameter=parameter,
        invested=len(pairs),
        excess_return=excess_return(chosen, benchmark),
        win_fraction=wins / len(pairs),
        pairs=tuple(pairs),
    )


def evaluate_strategy(strategy_map, run, config):
    """Invest the mapped portfolio kind at every test anchor whose combination
    has a choice; anchors without one are skipped."""
    performances = []
    for criterion in config.criteria:
        labelled = run.labelled(RegimeConfig(config.theta_plus, config.theta_minus, criterion))
        for parameter in config.parameters:
            performances.append(_evaluate(strategy_map, labelled, criterion, parameter,
                                          config.excess_pooling))
    report = EmpiricalReport(tuple(performances))
    if report.flags:
        logger.warning('Strategy made no investment in the test period')
    return report


def horizon_sweep(selections, returns, config, horizons):
    """Sharpe ratio of per-anchor excess returns for each horizon, and a
    one-way ANOVA across horizons per parameter and portfolio kind."""
    rows = []
    for parameter in config.parameters:
        for kind in TRADED_KINDS:
            series = {}
            for horizon in horizons:
                values = []
                for selection in selections:
                    outcome = realize(selection, returns, horizon, config.return_mode)
                    values.append(outcome.results[(parameter, kind)].mean - outcome.random_mean)
                series[horizon] = np.asarray(values)

            ratios = {}
            for horizon, values in series.items():
                try:
                    ratios[horizon] = sharpe(values)
                except (InsufficientDataError, DegenerateSharpeError):
                    ratios[horizon] = None

            f_value = p_value = None
            skipped = len(horizons) < 2
            if not skipped:
                try:
                    result = anova_oneway(*series.values())
                    f_value, p_value = result.f_value, result.p_value
                except (InsufficientDataError, DegenerateAnovaError):
                    skipped = True
            rows.append(SweepRow(parameter, kind, ratios, f_value, p_value, skipped))
    if len(horizons) < 2:
        logger.warning('Horizon sweep with a single candidate: ANOVA skipped')
    return rows


def return_distributions(run, config, criterion, parameter):
    """Pooled per-stock horizon returns of central and peripheral portfolios per combination."""
    regime_config = RegimeConfig(config.theta_plus, config.theta_minus, criterion)
    groups = {c: {kind: [] for kind in TRADED_KINDS} for c in Combination}
    for outcome, combination in run.labelled(regime_config):
        for kind in TRADED_KINDS:
            groups[combination][kind].append(outcome.results[(parameter, kind)].stock_returns)
    return {c: {kind: _pool(v) for kind, v in by_kind.items()} for c, by_kind in groups.items()}
