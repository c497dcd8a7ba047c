# Topological Portfolio Strategy
# Main Flask Application


import logging
import os

from dotenv import load_dotenv
from flask import Flask

load_dotenv()

app = Flask(__name__)

# Ensure instance folder exists
instance_path = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'instance')
os.makedirs(instance_path, exist_ok=True)

# Run registry database; the instance folder holds the default SQLite file
app.config['SQLALCHEMY_DATABASE_URI'] = os.environ.get(
    'PORTFOLIO_DATABASE_URI', f'sqlite:///{os.path.join(instance_path, "runs.db")}')
app.config['SQLALCHEMY_TRACK_MODIFICATIONS'] = False
app.logger.setLevel(os.environ.get('PORTFOLIO_LOG_LEVEL', 'INFO').upper())

logging.basicConfig(
    level=app.logger.level,
    format='%(asctime)s %(levelname)s %(name)s: %(message)s',
)

# Initialize database
from models import db
db.init_app(app)

# Import routes and commands after db initialization
from routes import *
from commands import *

# Ensure registry tables exist, also when the app is loaded by `flask --app app`
with app.app_context():
    try:
        db.create_all()
    except Exception as e:
        app.logger.error('Error initializing run registry: %s', e)
        raise

if __name__ == '__main__':
    app.run(debug=True, host='127.0.0.1', port=5000)
