# File: pathcg/utils/decorators.py
import logging
import time
from functools import wraps

import click
import numpy as np

from ..errors import NumericalError, PathCGError

logger = logging.getLogger(__name__)


# --- Error context decorators ---

def with_context(context):
    """Decorator tagging any PathCGError raised inside with a module context."""
    def decorator(f):
        @wraps(f)
        def decorated_function(*args, **kwargs):
            try:
                return f(*args, **kwargs)
            except PathCGError as exc:
                if exc.context is None:
                    exc.context = context
                raise
        return decorated_function
    return decorator


def returns_finite(what):
    """Decorator rejecting non-finite array results."""
    def decorator(f):
        @wraps(f)
        def decorated_function(*args, **kwargs):
            result = f(*args, **kwargs)
            if not np.all(np.isfinite(result)):
                raise NumericalError(f"{what} returned non-finite values")
            return result
        return decorated_function
    return decorator


def timed(f):
    """Decorator returning (result, seconds) and logging the runtime at debug level."""
    @wraps(f)
    def decorated_function(*args, **kwargs):
        start = time.perf_counter()
        result = f(*args, **kwargs)
        elapsed = time.perf_counter() - start
        logger.debug(f"{f.__name__} finished in {elapsed:.3f} s")
        return result, elapsed
    return decorated_function


# --- CLI decorators ---

def exits_on_error(f):
    """Map PathCGError to the documented process exit codes (1 numerical, 2 config)."""
    @wraps(f)
    def decorated_function(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except PathCGError as exc:
            logger.error(f"{f.__name__} failed: {exc}")
            click.echo(f"error: {exc}", err=True)
            raise SystemExit(exc.exit_code)
        except OSError as exc:
            logger.error(f"{f.__name__} I/O failure: {exc}")
            click.echo(f"error: {exc}", err=True)
            raise SystemExit(1)
    return decorated_function
