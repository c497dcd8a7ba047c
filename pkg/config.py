# Run Configuration
# Topological Portfolio Strategy

from dataclasses import dataclass, fields, asdict, replace
from dotenv import dotenv_values
from errors import ConfigError

CRITERIA = ('trading_day', 'amplitude', 'or', 'and')
PARAMETERS = ('K', 'C', 'D_degree', 'D_correlation', 'D_distance')

_CHOICES = {
    'stats_pooling': ('pooled', 'per_stock'),
    'return_mode': ('log', 'simple'),
    'excess_pooling': ('stock', 'anchor'),
    'distance_mode': ('weighted', 'hops'),
    'criterion': CRITERIA + ('all',),
    'parameter': PARAMETERS + ('all',),
}


def _int_list(value):
    if isinstance(value, (list, tuple)):
        return tuple(int(v) for v in value)
    return tuple(int(v) for v in str(value).split(',') if v.strip())


def _optional_str(value):
    if value is None:
        return None
    value = str(value).strip()
    return value or None


@dataclass(frozen=True)
class RunConfig:
    """All knobs of a pipeline run. Frozen so it can be shared across workers."""
    data_path: str = None
    index_path: str = None
    out_dir: str = 'out'
    market: str = 'market'

    # ingest
    max_gap_days: int = 46
    stats_pooling: str = 'pooled'

    # network / windows
    window_days: int = 200
    step_days: int = 20
    horizon_days: int = 200
    horizons: tuple = (20, 100, 200, 300)
    distance_mode: str = 'weighted'

    # selection
    fraction: float = 0.10
    base_seed: int = 0
    random_draws: int = 1000

    # regimes
    theta_plus: float = 0.55
    theta_minus: float = 0.45
    criterion: str = 'all'
    parameter: str = 'all'

    # backtest
    min_samples: int = 11
    significance: float = 0.10
    return_mode: str = 'log'
    excess_pooling: str = 'stock'
    train_end: str = None
    test_start: str = None
    train_fraction: float = 0.7

    workers: int = 1

    def __post_init__(self):
        errors = []
        if self.window_days < 2:
            errors.append('window_days must be at least 2')
        if self.step_days < 1:
            errors.append('step_days must be at least 1')
        if self.horizon_days < 1:
            errors.append('horizon_days must be at least 1')
        if not self.horizons or min(self.horizons) < 1:
            errors.append('horizons must be positive day counts')
        if not 0 < self.fraction <= 0.5:
            errors.append('fraction must lie in (0, 0.5]')
        if not 0 < self.theta_minus <= self.theta_plus < 1:
            errors.append('thresholds must satisfy 0 < theta_minus <= theta_plus < 1')
        if self.max_gap_days < 0:
            errors.append('max_gap_days must be non-negative')
        if self.random_draws < 1:
            errors.append('random_draws must be at least 1')
        if self.min_samples < 0:
            errors.append('min_samples must be non-negative')
        if not 0 < self.significance < 1:
            errors.append('significance must lie in (0, 1)')
        if not 0 < self.train_fraction < 1:
            errors.append('train_fraction must lie in (0, 1)')
        if self.workers < 1:
            errors.append('workers must be at least 1')
        if self.train_end and self.test_start and self.test_start < self.train_end:
            errors.append('test_start must not precede train_end')
        for name, allowed in _CHOICES.items():
            if getattr(self, name) not in allowed:
                errors.append(f'{name} must be one of {", ".join(allowed)}')
        if errors:
            raise ConfigError('; '.join(errors))

    @property
    def criteria(self):
        return CRITERIA if self.criterion == 'all' else (self.criterion,)

    @property
    def parameters(self):
        return PARAMETERS if self.parameter == 'all' else (self.parameter,)

    def to_dict(self):
        data = asdict(self)
        data['horizons'] = list(self.horizons)
        return data

    def evolve(self, **changes):
        return replace(self, **changes)


_CONVERTERS = {
    int: int,
    float: float,
    str: _optional_str,
    tuple: _int_list,
}


def _coerce(name, value):
    kind = {f.name: f.type for f in fields(RunConfig)}[name]
    try:
        return _CONVERTERS[kind](value)
    except (TypeError, ValueError):
        raise ConfigError(f'invalid value for {name}: {value!r}')


def _normalise_key(key):
    return key.strip().lower().replace('-', '_')


def load_config(path=None, **overrides):
    """Build a RunConfig from defaults, then a key=value file, then overrides.

    Overrides whose value is None are ignored so click options left unset
    fall through to the file or the default.
    """
    known = {f.name for f in fields(RunConfig)}
    values = {}

    if path:
        try:
            parsed = dotenv_values(path)
        except OSError as e:
            raise ConfigError(f'cannot read config file {path}: {e}')
        if not parsed and not _readable(path):
            raise ConfigError(f'cannot read config file {path}')
        for key, value in parsed.items():
            name = _normalise_key(key)
            if name not in known:
                raise ConfigError(f'unknown config key: {key}')
            if value is not None:
                values[name] = _coerce(name, value)

    for key, value in overrides.items():
        name = _normalise_key(key)
        if name not in known:
            raise ConfigError(f'unknown config key: {key}')
        if value is not None:
            values[name] = _coerce(name, value)

    return RunConfig(**values)


def _readable(path):
    try:
        with open(path, encoding='utf-8'):
            return True
    except OSError:
        return False
