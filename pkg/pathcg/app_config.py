# File: pathcg/app_config.py
import os
from dotenv import load_dotenv

# Load environment variables from .env file (optional)
basedir = os.path.abspath(os.path.dirname(__file__))
load_dotenv(os.path.join(basedir, '.env'))


class Config:
    """Base configuration."""
    DEBUG = False
    TESTING = False

    # Numerical rank and identity tolerances
    RANK_TOL = float(os.environ.get('PATHCG_RANK_TOL') or 1e-10)  # relative to the largest singular value
    RIGHT_INVERSE_TOL = 1e-12
    FD_TOL = float(os.environ.get('PATHCG_FD_TOL') or 1e-10)
    FRICTION_RESIDUAL_TOL = 1e-10  # relative to ||Pi_p gamma||
    CG_DIFFUSION_TOL = 1e-10
    MAX_CONDITION = 1e12
    NORMAL_RESIDUAL_TOL = 1e-10
    LYAPUNOV_RESIDUAL_TOL = 1e-12

    # Monte Carlo error bars
    SE_BATCHES = int(os.environ.get('PATHCG_SE_BATCHES') or 32)

    # Simulation engine
    BURN_IN_FRACTION = 0.1
    REPLICA_BLOCK = 256
    NOISE_CHUNK = 64
    THREADS = int(os.environ.get('PATHCG_THREADS') or 1)

    # Descent
    GRAD_TOL = 1e-9
    MAX_ITER = 500

    # Quadrature oracle
    QUAD_HALF_WIDTH = 10.0  # in standard deviations
    QUAD_POINTS = 2001
    QUAD_RTOL = 1e-8
    QUAD_TAIL_MASS = 1e-10

    # Logging
    LOG_DIR = os.environ.get('PATHCG_LOG_DIR') or os.path.join(os.getcwd(), 'logs')
    LOG_LEVEL = os.environ.get('PATHCG_LOG_LEVEL') or 'INFO'
    LOG_MAX_BYTES = 10240
    LOG_BACKUP_COUNT = 10

    # Validation battery sizes
    VALIDATION_SAMPLES = 1_000_000
    VALIDATION_REPLICAS = 10_000
    VALIDATION_SEEDS = 20
    VALIDATION_SEED = int(os.environ.get('PATHCG_VALIDATION_SEED') or 20240501)


class DevelopmentConfig(Config):
    """Development configuration."""
    DEBUG = True
    LOG_LEVEL = os.environ.get('PATHCG_LOG_LEVEL') or 'DEBUG'


class TestingConfig(Config):
    """Testing configuration."""
    TESTING = True
    # Smaller battery so the suite runs at desk scale
    VALIDATION_SAMPLES = 200_000
    VALIDATION_REPLICAS = 4_000
    VALIDATION_SEEDS = 20


class ProductionConfig(Config):
    """Production configuration."""
    DEBUG = False
    TESTING = False

    LOG_LEVEL = os.environ.get('PATHCG_LOG_LEVEL') or 'WARNING'


# Dictionary to access configurations by name
config_by_name = dict(
    dev=DevelopmentConfig,
    test=TestingConfig,
    prod=ProductionConfig
)


def current_config():
    """Returns the configuration class selected by PATHCG_CONFIG (default 'dev')."""
    return config_by_name.get(os.getenv('PATHCG_CONFIG', 'dev'), DevelopmentConfig)


def worker_count():
    """Worker count for replica parallelism, read at call time from PATHCG_THREADS."""
    try:
        return max(1, int(os.environ.get('PATHCG_THREADS') or current_config().THREADS))
    except ValueError:
        return 1
