# CLI Commands
# Topological Portfolio Strategy
#
# Run with `flask --app app <command>`. Every command writes its outputs
# and a manifest.json under --out and records the run in the registry.

import json
import os
import sys
from dataclasses import fields
from functools import wraps

import click
from werkzeug.utils import secure_filename

from app import app
from backtest import (run_pipeline, compare_regimes, split_period, train_strategy,
                      evaluate_strategy, select_portfolios, horizon_sweep,
                      return_distributions, RANDOM_PORTFOLIO_STREAM, BENCHMARK_STREAM)
from config import PARAMETERS, RunConfig, load_config
from errors import (PortfolioError, InputError, ConfigError, InsufficientDataError,
                    DivergentEstimateError)
from ingest import load_prices, filter_liquidity, compute_returns, summary_stats
from models import db, Run, Artifact
from network import make_schedule, build_networks, moment_track
from regime import load_index, RegimeConfig
from reports import (write_json, write_csv, write_stats, write_dot, write_metrics,
                     write_moments, write_pdf, write_regimes, write_portfolios,
                     write_comparison, write_horizon_pairs, write_return_pdfs,
                     write_sweep, sha256_file)
from routes import read_version
from selection import derive_seed
from synth import SynthSpec, generate
from topology import node_metrics, fit_power_law, log_binned_pdf

# flags that do not follow the plain kebab-case field name
FLAG_NAMES = {'data_path': '--data', 'index_path': '--index', 'out_dir': '--out'}
# kept out of the manifest so reruns into another directory stay identical
UNRECORDED = ('out_dir',)


# Decorator mapping pipeline errors to exit codes
def handle_errors(f):
    @wraps(f)
    def decorated_function(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except PortfolioError as e:
            app.logger.error('%s failed: %s', f.__name__, e)
            click.echo(f'error: {e}', err=True)
            sys.exit(e.exit_code)
        except Exception as e:
            app.logger.exception('Unexpected error in %s', f.__name__)
            click.echo(f'internal error: {e}', err=True)
            sys.exit(1)
    return decorated_function


# Decorator adding one option per RunConfig field plus --config
def config_options(f):
    for item in reversed(fields(RunConfig)):
        flag = FLAG_NAMES.get(item.name, '--' + item.name.replace('_', '-'))
        f = click.option(flag, item.name, default=None,
                         help=f'{item.name} (default {item.default!r})')(f)
    return click.option('--config', 'config_path', default=None,
                        help='key=value run configuration file')(f)


def _config(config_path, options):
    return load_config(config_path, **options)


def _require_file(path, what):
    if not path:
        raise ConfigError(f'{what} path is required')
    if not os.path.isfile(path):
        raise InputError(f'{what} file not found: {path}')
    return path


def _out_dir(config):
    os.makedirs(config.out_dir, exist_ok=True)
    return config.out_dir


def _load_returns(config):
    path = _require_file(config.data_path, 'data')
    panel = filter_liquidity(load_prices(path), config.max_gap_days)
    return panel, compute_returns(panel)


def _load_index(config, panel):
    path = _require_file(config.index_path, 'index')
    return load_index(path).align(panel.dates)


def _schedule(config, panel, horizon=None):
    horizon = config.horizon_days if horizon is None else horizon
    return make_schedule(panel.n_days, config.window_days, config.step_days, horizon)


def _inputs(config):
    inputs = {}
    for name in ('data_path', 'index_path'):
        path = getattr(config, name)
        if path and os.path.isfile(path):
            inputs[name] = sha256_file(path)
    return inputs


def _seeds(config, anchors):
    return {
        'base_seed': config.base_seed,
        'anchor_seeds': [derive_seed(config.base_seed, k) for k in range(anchors)],
        'random_portfolio_stream': RANDOM_PORTFOLIO_STREAM,
        'benchmark_stream': BENCHMARK_STREAM,
    }


def _record(command, out_dir, config, seeds, inputs, paths):
    """Write manifest.json, then register the run and its artifacts."""
    manifest = {
        'command': command,
        'version': read_version(),
        'config': {k: v for k, v in config.items() if k not in UNRECORDED},
        'seeds': seeds,
        'inputs': inputs,
        'artifacts': {os.path.basename(p): sha256_file(p) for p in paths},
    }
    manifest_path = write_json(os.path.join(out_dir, 'manifest.json'), manifest)
    digest = sha256_file(manifest_path)

    run = Run(
        command=command,
        out_dir=os.path.abspath(out_dir),
        config_json=json.dumps(manifest, sort_keys=True),
        manifest_digest=digest,
    )
    for path in list(paths) + [manifest_path]:
        run.artifacts.append(Artifact(name=os.path.basename(path), sha256=sha256_file(path)))
    try:
        db.session.add(run)
        db.session.commit()
    except Exception as e:
        db.session.rollback()
        app.logger.error('Could not record %s run in the registry: %s', command, e)
    app.logger.info('%s wrote %d file(s) to %s', command, len(paths) + 1, out_dir)
    return manifest_path


def _extra_markets(pairs, primary):
    """Parse repeated LABEL=PATH options into (label, path) pairs."""
    markets, seen = [], {primary}
    for pair in pairs:
        label, sep, path = pair.partition('=')
        label, path = label.strip(), path.strip()
        if not sep or not label or not path:
            raise ConfigError(f'--with-market expects LABEL=PATH, got {pair!r}')
        if label in seen:
            raise ConfigError(f'duplicate market label: {label}')
        seen.add(label)
        markets.append((label, _require_file(path, label)))
    return markets


@app.cli.command('stats')
@config_options
@click.option('--with-market', 'with_markets', multiple=True, metavar='LABEL=PATH',
              help='another price file summarized under LABEL; repeatable')
@handle_errors
def cmd_stats(config_path, with_markets, **options):
    """Summary statistics of the pooled daily returns, one row per market."""
    config = _config(config_path, options)
    extra = _extra_markets(with_markets, config.market)
    _, returns = _load_returns(config)
    report = summary_stats(returns, config.market, config.stats_pooling)
    inputs = _inputs(config)
    for label, path in extra:
        panel = filter_liquidity(load_prices(path), config.max_gap_days)
        report = report.merge(summary_stats(compute_returns(panel), label, config.stats_pooling))
        inputs[f'market:{label}'] = sha256_file(path)
    out_dir = _out_dir(config)
    paths = write_stats(out_dir, report)
    recorded = dict(config.to_dict(), with_markets=[f'{label}={path}' for label, path in extra])
    _record('stats', out_dir, recorded, {'base_seed': config.base_seed}, inputs, paths)


def _fit(samples, x_min):
    try:
        return fit_power_law(samples, x_min).to_dict()
    except (InsufficientDataError, DivergentEstimateError) as e:
        app.logger.warning('No power-law fit: %s', e)
        return None


@app.cli.command('network')
@config_options
@handle_errors
def cmd_network(config_path, **options):
    """Per-anchor spanning trees, node metrics and matrix moment tracks."""
    config = _config(config_path, options)
    panel, returns = _load_returns(config)
    schedule = _schedule(config, panel)
    networks = build_networks(returns, schedule, config.workers)
    out_dir = _out_dir(config)
    hops = config.distance_mode == 'hops'

    paths = []
    pooled = {name: [] for name in PARAMETERS}
    edge_weights = []
    for network in networks:
        name = secure_filename(network.date)
        metrics = node_metrics(network.tree, network.corr, hops=hops)
        paths.append(write_dot(os.path.join(out_dir, f'mst_{name}.dot'), network.tree))
        paths.append(write_metrics(os.path.join(out_dir, f'metrics_{name}.csv'), metrics))
        for parameter, values in pooled.items():
            values.extend(metrics.values(parameter)[t] for t in metrics.tickers)
        edge_weights.extend(weight for _, _, weight in network.tree.edges)

    track = moment_track(schedule, returns, networks=networks)
    paths.extend(write_moments(out_dir, track))

    for parameter, values in pooled.items():
        paths.append(write_pdf(os.path.join(out_dir, f'pdf_{parameter}.csv'),
                               log_binned_pdf(values)))
    paths.append(write_pdf(os.path.join(out_dir, 'pdf_mst_distance.csv'),
                           log_binned_pdf(edge_weights)))

    positive_c = [c for c in pooled['C'] if c > 0]
    fits = {
        'K': _fit(pooled['K'], 1.0),
        'C': _fit(positive_c, min(positive_c)) if positive_c else None,
    }
    paths.append(write_json(os.path.join(out_dir, 'power_laws.json'), fits))

    _record('network', out_dir, config.to_dict(), {'base_seed': config.base_seed},
            _inputs(config), paths)


def _labels(run, config):
    labels = {}
    for criterion in config.criteria:
        regime_config = RegimeConfig(config.theta_plus, config.theta_minus, criterion)
        labels[criterion] = [r.combination(regime_config) for r in run.regimes]
    return labels


@app.cli.command('compare')
@config_options
@handle_errors
def cmd_compare(config_path, **options):
    """Central vs. peripheral excess returns per market-condition combination."""
    config = _config(config_path, options)
    panel, returns = _load_returns(config)
    index = _load_index(config, panel)
    schedule = _schedule(config, panel)
    run = run_pipeline(returns, index, schedule, config)
    cells = compare_regimes(run, config)
    out_dir = _out_dir(config)

    paths = []
    for criterion in config.criteria:
        for parameter in config.parameters:
            group = [c for c in cells if c.criterion == criterion and c.parameter == parameter]
            name = secure_filename(f'comparison_{criterion}_{parameter}.csv')
            paths.append(write_comparison(os.path.join(out_dir, name), group))
            pdf_name = secure_filename(f'return_pdf_{criterion}_{parameter}.csv')
            paths.append(write_return_pdfs(os.path.join(out_dir, pdf_name),
                                           return_distributions(run, config, criterion, parameter)))
    paths.append(write_regimes(os.path.join(out_dir, 'regimes.csv'), run.regimes,
                               _labels(run, config)))
    paths.append(write_portfolios(os.path.join(out_dir, 'portfolios.jsonl'), run.selections))

    hidden = sum(cell.hidden for cell in cells)
    app.logger.info('Comparison: %d of %d cells hidden', hidden, len(cells))
    _record('compare', out_dir, config.to_dict(), _seeds(config, len(schedule)),
            _inputs(config), paths)


@app.cli.command('backtest')
@config_options
@handle_errors
def cmd_backtest(config_path, **options):
    """Train the optimal strategy map, then evaluate it out of sample."""
    config = _config(config_path, options)
    panel, returns = _load_returns(config)
    index = _load_index(config, panel)
    schedule = _schedule(config, panel)
    run = run_pipeline(returns, index, schedule, config)
    train, test = split_period(run, config)
    strategy_map = train_strategy(train, config)
    report = evaluate_strategy(strategy_map, test, config)
    out_dir = _out_dir(config)

    paths = [
        write_json(os.path.join(out_dir, 'strategy_map.json'),
                   strategy_map.to_dict(config.criteria, config.parameters)),
        write_json(os.path.join(out_dir, 'empirical_report.json'), report.to_dict()),
        write_horizon_pairs(os.path.join(out_dir, 'horizon_pairs.csv'), report),
    ]
    seeds = _seeds(config, len(schedule))
    seeds['train_anchors'] = [o.date for o in train.outcomes]
    seeds['test_anchors'] = [o.date for o in test.outcomes]
    _record('backtest', out_dir, config.to_dict(), seeds, _inputs(config), paths)


@app.cli.command('sweep')
@config_options
@handle_errors
def cmd_sweep(config_path, **options):
    """Sharpe ratios per investment horizon and an ANOVA across horizons."""
    config = _config(config_path, options)
    panel, returns = _load_returns(config)
    horizons = tuple(sorted(set(config.horizons)))
    schedule = _schedule(config, panel, horizon=max(horizons))
    selections = select_portfolios(returns, schedule, config)
    rows = horizon_sweep(selections, returns, config, horizons)
    out_dir = _out_dir(config)
    paths = [write_sweep(os.path.join(out_dir, 'horizon_sweep.csv'), rows, horizons)]
    _record('sweep', out_dir, config.to_dict(), _seeds(config, len(schedule)),
            _inputs(config), paths)


def synth_options(f):
    for item in reversed(fields(SynthSpec)):
        f = click.option('--' + item.name.replace('_', '-'), item.name,
                         type=type(item.default), default=item.default,
                         show_default=True)(f)
    return click.option('--out', 'out_dir', default='out', show_default=True)(f)


@app.cli.command('synth')
@synth_options
@handle_errors
def cmd_synth(out_dir, **options):
    """Write a synthetic market: prices.csv and index.csv."""
    spec = SynthSpec(**options)
    market = generate(spec)
    os.makedirs(out_dir, exist_ok=True)
    paths = [
        write_csv(os.path.join(out_dir, 'prices.csv'), market.price_frame()),
        write_csv(os.path.join(out_dir, 'index.csv'), market.index_frame()),
    ]
    config = spec.to_dict()
    config['block'] = list(market.block)
    _record('synth', out_dir, config, {'seed': spec.seed}, {}, paths)
