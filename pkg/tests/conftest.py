import pytest
import os
import sys

import numpy as np
import pandas as pd

# Ensure the project root (where app.py lives) is on sys.path
PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if PROJECT_ROOT not in sys.path:
    sys.path.insert(0, PROJECT_ROOT)

# The engine is bound when app.py is imported
os.environ['PORTFOLIO_DATABASE_URI'] = 'sqlite:///:memory:'

from app import app as flask_app
from models import db
from ingest import ReturnPanel
from network import CorrMatrix, MstGraph
from synth import SynthSpec, generate


@pytest.fixture
def app():
    """Create Flask test app with in-memory database."""
    flask_app.config['TESTING'] = True

    with flask_app.app_context():
        db.create_all()
        yield flask_app
        db.session.remove()
        db.drop_all()


@pytest.fixture
def client(app):
    """Create Flask test client."""
    return app.test_client()


@pytest.fixture
def runner(app):
    """Create Flask CLI runner."""
    return app.test_cli_runner()


@pytest.fixture
def db_session(app):
    """Provide database session with automatic rollback."""
    with app.app_context():
        yield db.session
        db.session.rollback()


def business_dates(n, start='2000-01-04'):
    return tuple(pd.bdate_range(start, periods=n).strftime('%Y-%m-%d'))


@pytest.fixture
def make_returns():
    """Factory for iid Gaussian return panels."""
    def factory(n_stocks=6, n_days=60, seed=0, scale=0.01):
        rng = np.random.default_rng(seed)
        tickers = tuple(f'T{i:02d}' for i in range(n_stocks))
        return ReturnPanel(tickers, business_dates(n_days), scale * rng.standard_normal((n_stocks, n_days)))
    return factory


@pytest.fixture
def make_tree():
    """Factory building an MstGraph from (a, b, weight) edges."""
    def factory(edges):
        nodes = sorted({a for a, _, _ in edges} | {b for _, b, _ in edges})
        ordered = tuple(sorted((min(a, b), max(a, b), w) for a, b, w in edges))
        return MstGraph(tuple(nodes), ordered)
    return factory


@pytest.fixture
def corr_for():
    """Correlations consistent with a tree's edge distances; zero off the tree."""
    def factory(tree):
        position = {node: i for i, node in enumerate(tree.nodes)}
        values = np.eye(len(tree.nodes))
        for a, b, weight in tree.edges:
            rho = 1.0 - weight ** 2 / 2.0
            values[position[a], position[b]] = values[position[b], position[a]] = rho
        return CorrMatrix(tree.nodes, values)
    return factory


@pytest.fixture
def star(make_tree):
    """Hub A with leaves B..F."""
    return make_tree([('A', leaf, 0.5) for leaf in 'BCDEF'])


@pytest.fixture
def path(make_tree):
    """A - B - C - D with weights 1, 2, 3."""
    return make_tree([('A', 'B', 1.0), ('B', 'C', 2.0), ('C', 'D', 3.0)])


@pytest.fixture
def small_market():
    """Ten stocks over 421 days; two anchors at the default window sizes."""
    return generate(SynthSpec(n_stocks=10, n_days=421, block_size=3, seed=7))


@pytest.fixture
def market_files(tmp_path):
    """Factory writing a synthetic market to prices.csv and index.csv."""
    def factory(**spec):
        market = generate(SynthSpec(**spec))
        folder = tmp_path / 'data'
        folder.mkdir(exist_ok=True)
        prices, index = folder / 'prices.csv', folder / 'index.csv'
        market.price_frame().to_csv(prices, index=False)
        market.index_frame().to_csv(index, index=False)
        return str(prices), str(index)
    return factory
