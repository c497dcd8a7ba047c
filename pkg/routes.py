# Routes and View Functions
# Topological Portfolio Strategy
#
# Read-only JSON view of the run registry.

import os

from flask import jsonify, request

from app import app
from models import Run

VERSION_FILE = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'version.txt')


def read_version():
    with open(VERSION_FILE, encoding='utf-8') as handle:
        return handle.read().strip()


@app.route('/')
def index():
    return jsonify(service='topological-portfolio', version=read_version())


@app.route('/runs')
def list_runs():
    query = Run.query
    command = request.args.get('command', '').strip()
    if command:
        query = query.filter_by(command=command)
    runs = query.order_by(Run.id.desc()).all()
    return jsonify(runs=[run.to_dict() for run in runs])


@app.route('/runs/<int:id>')
def view_run(id):
    run = Run.query.get_or_404(id)
    return jsonify(run.to_dict(artifacts=True))


@app.route('/runs/<int:id>/manifest')
def run_manifest(id):
    run = Run.query.get_or_404(id)
    return jsonify(run.config)


@app.errorhandler(404)
def not_found(e):
    return jsonify(error='not found'), 404
