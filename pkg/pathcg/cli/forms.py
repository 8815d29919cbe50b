# File: pathcg/cli/forms.py
# Run configuration: flat ``key = value`` text with ``#`` comments and dotted
# section keys, validated field by field like a form.

import os
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, ValidationError
from ..models import BBKConvention, FrictionOption, Scheme
from ..utils.provenance import config_hash

CG_KINDS = ('center_of_mass', 'projection', 'particle_projection', 'general', 'file')
MODEL_NAMES = ('ou', 'harmonic_chain', 'driven_langevin', 'expression')


@dataclass
class RunConfig:
    """ Parsed run configuration; values stay strings until a typed accessor reads them. """
    values: dict = field(default_factory=dict)
    source: str = ''

    # --- Parsing ---

    @classmethod
    def parse(cls, text, source=''):
        values = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split('#', 1)[0].strip()
            if not line:
                continue
            if '=' not in line:
                raise ConfigError(f"{source or 'config'}:{lineno}: expected 'key = value', got {raw.strip()!r}")
            key, value = (part.strip() for part in line.split('=', 1))
            if not key:
                raise ConfigError(f"{source or 'config'}:{lineno}: empty key")
            if key in values:
                raise ConfigError(f"{source or 'config'}:{lineno}: duplicate key {key!r}")
            values[key] = value
        return cls(values=values, source=source)

    @classmethod
    def load(cls, path):
        if not os.path.exists(path):
            raise ConfigError(f"configuration file {path} does not exist")
        with open(path, encoding='utf-8') as handle:
            return cls.parse(handle.read(), source=path)

    def dumps(self):
        return ''.join(f"{key} = {self.values[key]}\n" for key in sorted(self.values))

    def config_hash(self):
        return config_hash(self.dumps())

    # --- Typed accessors ---

    def has(self, key):
        return key in self.values

    def get(self, key, default=None):
        return self.values.get(key, default)

    def _require(self, key, default):
        if key in self.values:
            return self.values[key]
        if default is None:
            raise ConfigError(f"missing configuration key {key!r}")
        return default

    def get_float(self, key, default=None):
        raw = self._require(key, None if default is None else str(default))
        try:
            return float(raw)
        except ValueError:
            raise ValidationError(f"{key} must be a number, got {raw!r}")

    def get_int(self, key, default=None):
        raw = self._require(key, None if default is None else str(default))
        try:
            return int(raw)
        except ValueError:
            raise ValidationError(f"{key} must be an integer, got {raw!r}")

    def get_list(self, key, default=None):
        """Comma-separated floats."""
        raw = self._require(key, default)
        try:
            return np.array([float(v) for v in str(raw).split(',') if v.strip()])
        except ValueError:
            raise ValidationError(f"{key} must be a comma-separated list of numbers, got {raw!r}")

    def get_matrix(self, key, default=None):
        """Rows separated by ';', entries by ','."""
        raw = self._require(key, default)
        try:
            rows = [[float(v) for v in row.split(',')] for row in str(raw).split(';') if row.strip()]
            return np.array(rows, dtype=float)
        except ValueError:
            raise ValidationError(f"{key} must be a matrix like '1,0;0,1', got {raw!r}")

    def get_groups(self, key, default=None):
        """Index groups: '0,1;2' -> [[0, 1], [2]]."""
        raw = self._require(key, default)
        try:
            return [[int(v) for v in group.split(',')] for group in str(raw).split(';') if group.strip()]
        except ValueError:
            raise ValidationError(f"{key} must be index groups like '0,1;2', got {raw!r}")

    def section(self, prefix):
        """Keys under ``prefix.`` with the prefix stripped."""
        start = prefix + '.'
        return {k[len(start):]: v for k, v in self.values.items() if k.startswith(start)}

    # --- Validation ---

    def validate(self, require_input=False):
        """Run every validate_<field> method; raises ValidationError on the first failure."""
        for name in sorted(dir(self)):
            if name.startswith('validate_') and callable(getattr(self, name)):
                getattr(self, name)()
        if require_input and not self.has('input'):
            raise ValidationError("this command needs an 'input' trajectory file")
        return self

    def validate_h(self):
        if self.has('h') and not self.get_float('h') > 0:
            raise ValidationError(f"h must be positive, got {self.get('h')}")

    def validate_steps(self):
        if self.has('steps') and self.get_int('steps') < 1:
            raise ValidationError(f"steps must be at least 1, got {self.get('steps')}")

    def validate_replicas(self):
        if self.has('replicas') and self.get_int('replicas') < 1:
            raise ValidationError(f"replicas must be at least 1, got {self.get('replicas')}")

    def validate_burn_in(self):
        if self.has('burn_in') and self.get_int('burn_in') < 0:
            raise ValidationError(f"burn_in must be non-negative, got {self.get('burn_in')}")

    def validate_seed(self):
        if self.has('seed') and not 0 <= self.get_int('seed') < 2 ** 64:
            raise ValidationError(f"seed must be a 64-bit unsigned integer, got {self.get('seed')}")

    def validate_scheme(self):
        if self.has('scheme'):
            try:
                Scheme(self.get('scheme'))
            except ValueError:
                raise ValidationError(f"unknown scheme {self.get('scheme')!r}")

    def validate_model_name(self):
        if self.get('model.name', 'ou') not in MODEL_NAMES:
            raise ValidationError(f"unknown model {self.get('model.name')!r}; choose from {', '.join(MODEL_NAMES)}")

    def validate_cg_kind(self):
        if self.has('cg.kind') and self.get('cg.kind') not in CG_KINDS:
            raise ValidationError(f"unknown CG map kind {self.get('cg.kind')!r}")

    def validate_fit_friction(self):
        if self.has('fit.friction'):
            try:
                FrictionOption(self.get('fit.friction'))
            except ValueError:
                raise ValidationError(f"fit.friction must be 'a' or 'b', got {self.get('fit.friction')!r}")

    def validate_bbk_convention(self):
        if self.has('bbk.convention'):
            try:
                BBKConvention(self.get('bbk.convention'))
            except ValueError:
                choices = ', '.join(c.value for c in BBKConvention)
                raise ValidationError(f"bbk.convention must be one of {choices}, got {self.get('bbk.convention')!r}")

    def validate_input(self):
        if self.has('input') and not os.path.exists(self.get('input')):
            raise ValidationError(f"input file {self.get('input')} does not exist")

    def validate_cg_file(self):
        if self.get('cg.kind') == 'file' and not os.path.exists(self.get('cg.file', '')):
            raise ValidationError(f"CG map file {self.get('cg.file')!r} does not exist")
