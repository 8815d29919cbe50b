# File: pathcg/utils/provenance.py
import hashlib
import platform

import numpy as np


def config_hash(text):
    """sha256 of the canonical configuration text."""
    return hashlib.sha256(text.encode('utf-8')).hexdigest()


def runtime_fields():
    """Environment details that may differ between otherwise identical runs."""
    return {
        'runtime.python': platform.python_version(),
        'runtime.numpy': np.__version__,
    }
