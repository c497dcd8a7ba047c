import io
import math

import numpy as np
import pytest

from errors import (ParseError, ValidationError, EmptyUniverseError, ContractError,
                    DegenerateSampleError)
from ingest import (PricePanel, ReturnPanel, load_prices, filter_liquidity,
                    compute_returns, summary_stats)


def csv(text):
    return io.StringIO(text.strip() + '\n')


def panel_with_gaps(gaps, n_days=100):
    """One ticker per entry of `gaps`, each missing that many days starting at day 10."""
    tickers = tuple(f'S{i}' for i in range(len(gaps)))
    dates = tuple(f'2001-{1 + d // 28:02d}-{1 + d % 28:02d}' for d in range(n_days))
    prices = np.tile(np.linspace(10.0, 20.0, n_days), (len(gaps), 1))
    prices[:, ::2] += 1.0
    for row, gap in enumerate(gaps):
        prices[row, 10:10 + gap] = np.nan
    return PricePanel(tickers, dates, prices, np.isnan(prices))


class TestLoadPrices:
    """Test reading price files."""

    def test_complete_panel(self):
        """Test a complete 2 x 3 file aligns without missing days."""
        panel = load_prices(csv('''
date,ticker,adjusted_close
2020-01-02,A,10
2020-01-02,B,20
2020-01-03,A,11
2020-01-03,B,21
2020-01-06,A,12
2020-01-06,B,22
'''))
        assert panel.tickers == ('A', 'B')
        assert panel.dates == ('2020-01-02', '2020-01-03', '2020-01-06')
        assert panel.prices.shape == (2, 3)
        assert not panel.missing.any()

    def test_absent_day_is_missing(self):
        """Test a ticker absent on a date is marked missing."""
        panel = load_prices(csv('''
date,ticker,adjusted_close
2020-01-02,A,10
2020-01-02,B,20
2020-01-03,A,11
2020-01-06,A,12
2020-01-06,B,22
'''))
        assert panel.missing[1, 1]
        assert panel.missing.sum() == 1
        assert panel.has_gaps

    def test_sorted_output(self):
        """Test tickers and dates come out sorted regardless of row order."""
        panel = load_prices(csv('''
date,ticker,adjusted_close
2020-01-03,B,21
2020-01-02,B,20
2020-01-03,A,11
2020-01-02,A,10
'''))
        assert panel.tickers == ('A', 'B')
        assert panel.dates == ('2020-01-02', '2020-01-03')
        assert panel.prices[0].tolist() == [10.0, 11.0]

    def test_negative_price(self):
        """Test a negative price is a validation error."""
        with pytest.raises(ValidationError):
            load_prices(csv('''
date,ticker,adjusted_close
2020-01-02,A,10
2020-01-03,A,-1.0
'''))

    def test_malformed_row_reports_line(self):
        """Test a malformed price carries its line number."""
        with pytest.raises(ParseError) as info:
            load_prices(csv('''
date,ticker,adjusted_close
2020-01-02,A,10
2020-01-03,A,abc
'''))
        assert info.value.line == 3
        assert 'line 3' in str(info.value)

    def test_blank_line_keeps_numbering(self):
        """Test blank lines count toward the reported line."""
        with pytest.raises(ParseError) as info:
            load_prices(csv('''
date,ticker,adjusted_close
2020-01-02,A,10

2020-01-03,A,abc
'''))
        assert info.value.line == 4

    def test_blank_lines_skipped(self):
        """Test blank lines between rows are ignored."""
        panel = load_prices(csv('''
date,ticker,adjusted_close
2020-01-02,A,10

2020-01-03,A,11
'''))
        assert panel.prices.tolist() == [[10.0, 11.0]]

    def test_extra_field_reports_line(self):
        """Test a row with too many fields carries its line number."""
        with pytest.raises(ParseError) as info:
            load_prices(csv('''
date,ticker,adjusted_close
2020-01-02,A,10
2020-01-03,A,11,12
'''))
        assert info.value.line == 3

    def test_bad_date(self):
        """Test an unparsable date is a parse error."""
        with pytest.raises(ParseError):
            load_prices(csv('''
date,ticker,adjusted_close
02/01/2020,A,10
2020-01-03,A,11
'''))

    def test_duplicate_row(self):
        """Test duplicate (date, ticker) rows are rejected."""
        with pytest.raises(ValidationError):
            load_prices(csv('''
date,ticker,adjusted_close
2020-01-02,A,10
2020-01-02,A,10.5
2020-01-03,A,11
'''))

    def test_single_date(self):
        """Test at least two dates are required."""
        with pytest.raises(ValidationError):
            load_prices(csv('''
date,ticker,adjusted_close
2020-01-02,A,10
2020-01-02,B,11
'''))

    def test_missing_column(self):
        """Test a file without the price column is a parse error."""
        with pytest.raises(ParseError):
            load_prices(csv('''
date,ticker
2020-01-02,A
'''))


class TestFilterLiquidity:
    """Test the suspension filter."""

    def test_gap_boundary(self):
        """Test 46 missing days survive and 47 are dropped at max_gap_days=46."""
        panel = filter_liquidity(panel_with_gaps([0, 46, 47]), 46)
        assert panel.tickers == ('S0', 'S1')
        assert not panel.has_gaps

    def test_complete_ticker_unchanged(self):
        """Test a ticker without gaps keeps its prices."""
        source = panel_with_gaps([0, 5])
        panel = filter_liquidity(source, 46)
        assert np.array_equal(panel.prices[0], source.prices[0])

    def test_forward_fill(self):
        """Test gaps take the last observed price."""
        source = panel_with_gaps([46])
        panel = filter_liquidity(source, 46)
        assert np.all(panel.prices[0, 10:56] == source.prices[0, 9])
        assert panel.missing[0, 10:56].all()

    def test_leading_gap_back_filled(self):
        """Test a gap at the start takes the first observed price."""
        prices = np.array([[np.nan, np.nan, 5.0, 6.0]])
        panel = PricePanel(('A',), ('d1', 'd2', 'd3', 'd4'), prices, np.isnan(prices))
        filled = filter_liquidity(panel, 2)
        assert filled.prices[0].tolist() == [5.0, 5.0, 5.0, 6.0]

    def test_empty_universe(self):
        """Test dropping every ticker raises."""
        with pytest.raises(EmptyUniverseError):
            filter_liquidity(panel_with_gaps([47, 50]), 46)

    def test_idempotent(self):
        """Test filtering twice equals filtering once."""
        once = filter_liquidity(panel_with_gaps([0, 20, 60]), 46)
        twice = filter_liquidity(once, 46)
        assert once.tickers == twice.tickers
        assert np.array_equal(once.prices, twice.prices)


class TestComputeReturns:
    """Test log returns."""

    @pytest.mark.parametrize('prices, expected', [
        ([100.0, 110.0], math.log(1.1)),
        ([50.0, 50.0], 0.0),
        ([100.0, 90.0], math.log(0.9)),
    ])
    def test_single_return(self, prices, expected):
        """Test hand-computed log returns."""
        panel = PricePanel(('A',), ('d1', 'd2'), np.array([prices]), np.zeros((1, 2), bool))
        returns = compute_returns(panel)
        assert returns.returns[0, 0] == pytest.approx(expected, abs=1e-12)
        assert returns.dates == ('d2',)

    def test_reconstructs_log_price(self):
        """Test cumulative returns rebuild ln(P(t)/P(0))."""
        rng = np.random.default_rng(3)
        prices = np.exp(np.cumsum(rng.normal(0, 0.02, (4, 300)), axis=1)) * 50
        panel = PricePanel(tuple('ABCD'), tuple(f'{i:04d}' for i in range(300)),
                           prices, np.zeros_like(prices, bool))
        returns = compute_returns(panel)
        rebuilt = np.cumsum(returns.returns, axis=1)
        assert np.allclose(rebuilt, np.log(prices[:, 1:] / prices[:, :1]), atol=1e-12, rtol=0)
        assert returns.returns.shape[1] == panel.n_days - 1

    def test_unfilled_gaps(self):
        """Test unfilled gaps break the contract."""
        with pytest.raises(ContractError):
            compute_returns(panel_with_gaps([3]))


class TestSummaryStats:
    """Test pooled market statistics."""

    def panel(self, values):
        values = np.atleast_2d(np.asarray(values, dtype=float))
        dates = tuple(f'd{i}' for i in range(values.shape[1]))
        return ReturnPanel(tuple(f'S{i}' for i in range(values.shape[0])), dates, values)

    def test_symmetric_sample(self):
        """Test a symmetric sample has zero mean and skewness."""
        row = summary_stats(self.panel([-1, 0, 1])).rows[0]
        assert row.mean == pytest.approx(0.0, abs=1e-15)
        assert row.skewness == pytest.approx(0.0, abs=1e-12)
        assert row.std == pytest.approx(1.0)
        assert (row.minimum, row.maximum) == (-1.0, 1.0)

    def test_constant_sample(self):
        """Test zero variance is degenerate."""
        with pytest.raises(DegenerateSampleError):
            summary_stats(self.panel([0.01] * 4))

    def test_brute_force_moments(self):
        """Test moments against explicit central-moment sums."""
        sample = np.array([1.0, 2.0, 3.0, 4.0, 10.0])
        mean = sample.sum() / 5
        m2 = np.sum((sample - mean) ** 2) / 5
        m3 = np.sum((sample - mean) ** 3) / 5
        m4 = np.sum((sample - mean) ** 4) / 5
        row = summary_stats(self.panel(sample)).rows[0]
        assert row.mean == pytest.approx(4.0)
        assert row.skewness == pytest.approx(m3 / m2 ** 1.5, rel=1e-12)
        assert row.kurtosis == pytest.approx(m4 / m2 ** 2, rel=1e-12)
        assert row.kurtosis == pytest.approx(2.788, rel=1e-12)

    def test_symmetric_skewness_exact(self):
        """Test skewness of a sample symmetric about its mean."""
        row = summary_stats(self.panel([-3.0, -1.0, 0.0, 1.0, 3.0])).rows[0]
        assert abs(row.skewness) < 1e-12

    def test_counts(self, make_returns):
        """Test stock and record counts."""
        report = summary_stats(make_returns(n_stocks=10, n_days=30), market='SZ')
        row = report['SZ']
        assert row.stocks == 10
        assert row.records == 300
        assert row.minimum <= row.mean <= row.maximum

    def test_per_stock_pooling(self):
        """Test per-stock moments are averaged across stocks."""
        values = [[1.0, 2.0, 3.0], [2.0, 4.0, 6.0]]
        row = summary_stats(self.panel(values), pooling='per_stock').rows[0]
        assert row.mean == pytest.approx(3.0)
        assert row.std == pytest.approx(1.5)
        assert row.maximum == 6.0

    def test_merge_markets(self, make_returns):
        """Test reports of two markets merge into one."""
        first = summary_stats(make_returns(seed=1), market='SH')
        second = summary_stats(make_returns(seed=2), market='SZ')
        merged = first.merge(second)
        assert [m['market'] for m in merged.to_dict()['markets']] == ['SH', 'SZ']
