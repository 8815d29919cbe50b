# File: pathcg/__init__.py
import logging
import os
from logging.handlers import RotatingFileHandler

import click

from .app_config import config_by_name

__version__ = '0.1.0'

LOG_FORMAT = '%(asctime)s %(levelname)s: %(message)s [in %(pathname)s:%(lineno)d]'


def _configure_logging(config):
    logger = logging.getLogger('pathcg')
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()
    if not config.DEBUG and not config.TESTING:
        os.makedirs(config.LOG_DIR, exist_ok=True)
        handler = RotatingFileHandler(os.path.join(config.LOG_DIR, 'pathcg.log'),
                                      maxBytes=config.LOG_MAX_BYTES, backupCount=config.LOG_BACKUP_COUNT)
    else:
        handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    handler.setLevel(config.LOG_LEVEL)
    logger.addHandler(handler)
    logger.setLevel(config.LOG_LEVEL)
    return logger


# --- CLI Factory ---
def create_cli(config_name=None):
    """Command-line factory: selects the configuration, sets up logging and registers commands."""
    if config_name is None:
        config_name = os.getenv('PATHCG_CONFIG', 'dev')
    if config_name not in config_by_name:
        logging.getLogger(__name__).warning(f"invalid configuration name {config_name!r}; defaulting to 'dev'")
        config_name = 'dev'
    # current_config() reads the selection from the environment
    os.environ['PATHCG_CONFIG'] = config_name
    config = config_by_name[config_name]

    logger = _configure_logging(config)
    logger.info('pathcg startup')

    cli = click.Group('pathcg', help="Path-space coarse-graining of Langevin and overdamped SDEs.")
    # Register commands
    from .cli import cli_group
    for name, command in cli_group.commands.items():
        cli.add_command(command, name)
    cli = click.version_option(__version__, prog_name='pathcg')(cli)

    logger.debug(f"running in {config_name} mode")
    return cli


def main():
    create_cli()()
