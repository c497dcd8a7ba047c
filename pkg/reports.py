# Report and plot-data writers
# Topological Portfolio Strategy
#
# Every writer is deterministic: fixed column order, sorted JSON keys and
# no timestamps, so reruns produce identical bytes.

import hashlib
import json
import os

import numpy as np
import pandas as pd

from backtest import TRADED_KINDS
from network import MOMENTS

COMPARISON_COLUMNS = ('Parameter', 'Market condition', 'Num', 'f-value', 'p-value',
                      'central', 'peripheral')


def sha256_file(path):
    digest = hashlib.sha256()
    with open(path, 'rb') as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b''):
            digest.update(chunk)
    return digest.hexdigest()


def _clean(value):
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    return value


def write_json(path, data):
    with open(path, 'w', encoding='utf-8', newline='\n') as handle:
        json.dump(_clean(data), handle, sort_keys=True, indent=2)
        handle.write('\n')
    return path


def write_csv(path, frame):
    frame.to_csv(path, index=False, lineterminator='\n', float_format='%.10g')
    return path


def write_stats(out_dir, report):
    paths = [write_json(os.path.join(out_dir, 'stats.json'), report.to_dict())]
    frame = pd.DataFrame([row.to_dict() for row in report.rows])
    paths.append(write_csv(os.path.join(out_dir, 'stats.csv'), frame))
    return paths


def _quoted(name):
    escaped = str(name).replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}"'


def dot_text(tree):
    """Undirected DOT of the tree; pen width grows as the distance shrinks."""
    lines = ['graph mst {']
    for node in tree.nodes:
        lines.append(f'  {_quoted(node)};')
    for a, b, weight in tree.edges:
        penwidth = min(10.0, 1.0 / max(weight, 0.1))
        lines.append(f'  {_quoted(a)} -- {_quoted(b)} [weight="{weight:.6f}", penwidth="{penwidth:.3f}"];')
    lines.append('}')
    return '\n'.join(lines) + '\n'


def write_dot(path, tree):
    with open(path, 'w', encoding='utf-8', newline='\n') as handle:
        handle.write(dot_text(tree))
    return path


def write_metrics(path, metrics):
    frame = pd.DataFrame(list(metrics.rows()),
                         columns=['ticker', 'K', 'C', 'D_degree', 'D_correlation', 'D_distance'])
    return write_csv(path, frame)


def write_moments(out_dir, track):
    data = {'date': list(track.dates)}
    for name in MOMENTS:
        data[f'corr_{name}'] = list(track.corr_moments[name])
    for name in MOMENTS:
        data[f'dist_{name}'] = list(track.dist_moments[name])
    data['corr_band_lower'] = list(track.band_lower)
    data['corr_band_upper'] = list(track.band_upper)
    paths = [write_csv(os.path.join(out_dir, 'moments.csv'), pd.DataFrame(data))]
    paths.append(write_json(os.path.join(out_dir, 'moment_correlations.json'), {
        'cross_correlations': track.cross_correlations,
        'flags': list(track.flags),
    }))
    return paths


def write_pdf(path, rows):
    frame = pd.DataFrame(rows, columns=['left', 'right', 'density'])
    return write_csv(path, frame)


def write_regimes(path, regimes, labels):
    """One row per anchor; `labels` maps criterion to per-anchor combinations."""
    rows = []
    for k, regime in enumerate(regimes):
        row = {
            'date': regime.date,
            'selection_r_d': regime.selection.r_d,
            'selection_r_f': regime.selection.r_f,
            'investment_r_d': regime.investment.r_d,
            'investment_r_f': regime.investment.r_f,
        }
        for criterion, combinations in labels.items():
            combination = combinations[k]
            row[criterion] = combination.value if combination is not None else ''
        rows.append(row)
    return write_csv(path, pd.DataFrame(rows))


def write_portfolios(path, selections):
    with open(path, 'w', encoding='utf-8', newline='\n') as handle:
        for selection in selections:
            for (parameter, kind), portfolio in sorted(selection.portfolios.items(),
                                                       key=lambda item: (item[0][0], item[0][1].value)):
                handle.write(json.dumps(_clean(portfolio.to_dict()), sort_keys=True) + '\n')
    return path


def comparison_frame(cells):
    rows = []
    for cell in cells:
        rows.append({
            'Parameter': cell.parameter,
            'Market condition': cell.combination.value,
            'Num': cell.num,
            'f-value': cell.f_value,
            'p-value': cell.p_value,
            'central': cell.central_excess,
            'peripheral': cell.peripheral_excess,
            'hidden': cell.hidden,
            'significant_5': cell.significant_5,
            'significant_10': cell.significant_10,
        })
    frame = pd.DataFrame(rows)
    extra = [c for c in frame.columns if c not in COMPARISON_COLUMNS]
    return frame[list(COMPARISON_COLUMNS) + extra]


def write_comparison(path, cells):
    return write_csv(path, comparison_frame(cells))


def write_horizon_pairs(path, report):
    rows = []
    for performance in report.performances:
        for pair in performance.pairs:
            rows.append({
                'criterion': performance.criterion,
                'parameter': performance.parameter,
                'date': pair.date,
                'combination': pair.combination.value,
                'kind': pair.kind.value,
                'strategy_return': pair.strategy_return,
                'random_return': pair.random_return,
            })
    columns = ['criterion', 'parameter', 'date', 'combination', 'kind',
               'strategy_return', 'random_return']
    return write_csv(path, pd.DataFrame(rows, columns=columns))


def write_return_pdfs(path, distributions, bins=30):
    """Linear-bin densities of central and peripheral per-stock returns per combination."""
    rows = []
    for combination, by_kind in distributions.items():
        for kind in TRADED_KINDS:
            values = by_kind[kind]
            if values.size == 0:
                continue
            density, edges = np.histogram(values, bins=bins, density=True)
            for left, right, d in zip(edges[:-1], edges[1:], density):
                rows.append((combination.value, kind.value, float(left), float(right), float(d)))
    frame = pd.DataFrame(rows, columns=['combination', 'kind', 'left', 'right', 'density'])
    return write_csv(path, frame)


def write_sweep(path, rows, horizons):
    records = []
    for row in rows:
        record = {'Parameter': row.parameter, 'kind': row.kind.value}
        for horizon in horizons:
            record[f'sharpe_{horizon}'] = row.sharpe[horizon]
        record['f-value'] = row.f_value
        record['p-value'] = row.p_value
        record['anova_skipped'] = row.anova_skipped
        records.append(record)
    return write_csv(path, pd.DataFrame(records))
