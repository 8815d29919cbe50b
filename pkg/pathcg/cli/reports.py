# File: pathcg/cli/reports.py
# Plain-text reports: ``key = value`` lines, every number paired with ``<key>.se``
# (a standard error or ``exact``), a pass/fail table and provenance.

import logging
import os
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from ..utils.provenance import runtime_fields

logger = logging.getLogger(__name__)

EXACT = 'exact'


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.ndarray):
        return ','.join(_fmt(v) for v in value.ravel())
    return str(value)


@dataclass
class Report:
    """ Result of one CLI command. """
    command: str
    config_hash: str = ''
    seed: Optional[int] = None
    entries: List[Tuple[str, str]] = field(default_factory=list)
    checks: List[Tuple[str, bool, str]] = field(default_factory=list)
    runtime: dict = field(default_factory=dict)

    def add(self, key, value, se=EXACT):
        """Record a number with its standard error; ``se=None`` is rendered as exact."""
        self.entries.append((key, _fmt(value)))
        self.entries.append((f"{key}.se", EXACT if se is None or se == EXACT else _fmt(se)))

    def add_text(self, key, value):
        self.entries.append((key, _fmt(value)))

    def add_fit(self, fit, prefix='fit'):
        names = fit.names or tuple(f"phi_{k}" for k in range(np.size(fit.theta)))
        ses = fit.std_errors if fit.std_errors is not None else [None] * len(names)
        for name, theta, se in zip(names, np.asarray(fit.theta).ravel(), ses):
            self.add(f"{prefix}.theta.{name}", float(theta), None if se is None else float(se))
        self.add(f"{prefix}.objective", fit.objective, fit.objective_se)
        self.add_text(f"{prefix}.method", fit.method.value)
        if fit.condition_number is not None:
            self.add(f"{prefix}.condition_number", fit.condition_number)
        self.add_text(f"{prefix}.degenerate", fit.degenerate)
        self.add_text(f"{prefix}.n_samples", fit.n_samples)

    def add_check(self, name, passed, detail=''):
        self.checks.append((name, bool(passed), detail))

    def time(self, key, seconds):
        """Wall-clock fields are kept apart so reruns compare equal without them."""
        self.runtime[f"runtime.{key}"] = f"{seconds:.3f}"

    @property
    def passed(self):
        return all(ok for _, ok, _ in self.checks)

    def to_text(self, include_runtime=True):
        lines = [f"command = {self.command}", f"provenance.config_hash = {self.config_hash}"]
        if self.seed is not None:
            lines.append(f"provenance.seed = {self.seed}")
        lines += [f"{key} = {value}" for key, value in self.entries]
        for name, ok, detail in self.checks:
            lines.append(f"check.{name} = {'PASS' if ok else 'FAIL'}" + (f"  # {detail}" if detail else ''))
        if self.checks:
            lines.append(f"check.all = {'PASS' if self.passed else 'FAIL'}")
        if include_runtime:
            fields = dict(runtime_fields(), **self.runtime)
            lines += [f"{key} = {fields[key]}" for key in sorted(fields)]
        return '\n'.join(lines) + '\n'

    def write(self, directory, filename='report.txt'):
        os.makedirs(directory, exist_ok=True)
        path = os.path.join(directory, filename)
        with open(path, 'w', encoding='utf-8', newline='') as handle:
            handle.write(self.to_text())
        logger.info(f"wrote {self.command} report to {path}")
        return path


def write_theta_csv(fit, path):
    """One row per basis function: name, theta, se (empty when exact)."""
    names = fit.names or tuple(f"phi_{k}" for k in range(np.size(fit.theta)))
    ses = np.full(len(names), np.nan) if fit.std_errors is None else np.asarray(fit.std_errors, dtype=float)
    frame = pd.DataFrame({'name': list(names), 'theta': np.asarray(fit.theta, dtype=float).ravel(), 'se': ses})
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    frame.to_csv(path, index=False, float_format='%.17g', lineterminator='\n')
    return path


def read_theta_csv(path):
    frame = pd.read_csv(path)
    return frame['theta'].to_numpy(dtype=float)
