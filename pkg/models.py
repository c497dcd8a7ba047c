# Database Models
# Topological Portfolio Strategy

import json
from datetime import datetime

from flask_sqlalchemy import SQLAlchemy

db = SQLAlchemy()


class Run(db.Model):
    """One execution of a CLI command"""
    __tablename__ = 'runs'

    id = db.Column(db.Integer, primary_key=True)
    command = db.Column(db.String(50), nullable=False, index=True)
    out_dir = db.Column(db.String(500), nullable=False)
    config_json = db.Column(db.Text, nullable=False)
    manifest_digest = db.Column(db.String(64))
    status = db.Column(db.String(20), default='success', nullable=False)
    created_at = db.Column(db.DateTime, default=datetime.utcnow)
    artifacts = db.relationship('Artifact', backref='run', lazy=True,
                                cascade='all, delete-orphan', order_by='Artifact.name')

    @property
    def config(self):
        return json.loads(self.config_json)

    def to_dict(self, artifacts=False):
        data = {
            'id': self.id,
            'command': self.command,
            'out_dir': self.out_dir,
            'manifest_digest': self.manifest_digest,
            'status': self.status,
            'created_at': self.created_at.isoformat() if self.created_at else None,
        }
        if artifacts:
            data['artifacts'] = [a.to_dict() for a in self.artifacts]
        return data

    def __repr__(self):
        return f'<Run {self.id}: {self.command}>'


class Artifact(db.Model):
    """Output file written by a run"""
    __tablename__ = 'artifacts'

    id = db.Column(db.Integer, primary_key=True)
    run_id = db.Column(db.Integer, db.ForeignKey('runs.id'), nullable=False)
    name = db.Column(db.String(255), nullable=False)
    sha256 = db.Column(db.String(64), nullable=False)

    def to_dict(self):
        return {'name': self.name, 'sha256': self.sha256}

    def __repr__(self):
        return f'<Artifact {self.name}>'
