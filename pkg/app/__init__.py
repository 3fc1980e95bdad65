import logging
import sys

from flask import Flask, jsonify

from config import Config

LOG_FORMAT = '[%(asctime)s] %(levelname)s %(name)s: %(message)s'
LOG_DATEFMT = '%Y-%m-%d %H:%M:%S'


def configure_logging(level=None):
    """
    Send package logs to stderr with one handler.

    Args:
        level: Level name or number (defaults to Config.LOG_LEVEL)
    """
    level = level or Config.LOG_LEVEL
    if isinstance(level, str):
        level = logging.getLevelName(level.upper())
        if not isinstance(level, int):
            raise ValueError(f"Unknown log level: {level}")

    root = logging.getLogger('app')
    for handler in list(root.handlers):
        if getattr(handler, '_rdna', False):
            root.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT, LOG_DATEFMT))
    handler._rdna = True
    root.addHandler(handler)
    root.setLevel(level)
    return root


def create_app(config_class=Config):
    """
    Create and configure the planning service.

    Args:
        config_class: Configuration class to use

    Returns:
        Flask application instance
    """
    app = Flask(__name__)
    app.config.from_object(config_class)

    from app.api import api_bp
    app.register_blueprint(api_bp)

    @app.errorhandler(404)
    def not_found(error):
        return jsonify({'success': False, 'message': 'Not found'}), 404

    @app.errorhandler(500)
    def internal_error(error):
        return jsonify({'success': False, 'message': 'Internal server error'}), 500

    return app
