# File: pathcg/bases.py
# Builtin basis families for coarse-grained drifts and forces.

import numpy as np

from .errors import ConfigError, DimensionError
from .models import ParametricDriftFamily


def _linear_function(operator):
    op_t = operator.T.copy()
    return lambda x: np.asarray(x, dtype=float) @ op_t


def _constant_function(vector):
    return lambda x: np.broadcast_to(vector, np.shape(x)).copy()


def affine_family(operators, offsets, names):
    """Family with phi_k(x) = L_k x + c_k; operators are stored for closed-form oracles."""
    operators = np.asarray(operators, dtype=float)
    offsets = np.asarray(offsets, dtype=float)
    basis = []
    for op, c in zip(operators, offsets):
        if np.any(c) and np.any(op):
            lin, const = _linear_function(op), c.copy()
            basis.append(lambda x, lin=lin, const=const: lin(x) + const)
        elif np.any(c):
            basis.append(_constant_function(c.copy()))
        else:
            basis.append(_linear_function(op))
    return ParametricDriftFamily(cg_dim=operators.shape[1], basis=tuple(basis), names=tuple(names),
                                 operators=operators, offsets=offsets)


def linear_basis(m):
    """All m^2 functions xbar_j e_i."""
    ops, names = [], []
    for i in range(m):
        for j in range(m):
            op = np.zeros((m, m))
            op[i, j] = 1.0
            ops.append(op)
            names.append(f"x{j}->e{i}")
    return affine_family(ops, np.zeros((m * m, m)), names)


def isotropic_basis(m):
    """The single function xbar."""
    return affine_family(np.eye(m)[None], np.zeros((1, m)), ['x'])


def constant_basis(m):
    """The m unit vectors e_i."""
    return affine_family(np.zeros((m, m, m)), np.eye(m), [f"e{i}" for i in range(m)])


def affine_basis(m):
    lin, const = linear_basis(m), constant_basis(m)
    return affine_family(np.concatenate([lin.operators, const.operators]),
                         np.concatenate([lin.offsets, const.offsets]),
                         lin.names + const.names)


def cubic_basis(m):
    """xbar_i^3 e_i for every i, followed by the linear family."""
    basis, names = [], []
    for i in range(m):
        def phi(x, i=i):
            x = np.asarray(x, dtype=float)
            out = np.zeros_like(x)
            out[..., i] = x[..., i] ** 3
            return out
        basis.append(phi)
        names.append(f"x{i}^3->e{i}")
    lin = linear_basis(m)
    return ParametricDriftFamily(cg_dim=m, basis=tuple(basis) + lin.basis, names=tuple(names) + lin.names)


def pairwise_distance_basis(n_particles, spatial_dim=3, powers=(0, 2)):
    """Central pair forces between every two CG particles.

    For the pair (i, j) with r = xbar_j - xbar_i and power p, phi pushes particle i
    along r with magnitude |r|^(p+1) and particle j the opposite way. p = 0 is a
    harmonic bond whose theta is the spring constant; p = 2 is the force of a
    quartic pair potential.
    """
    if n_particles < 2:
        raise DimensionError("pairwise_distance basis needs at least two CG particles")
    powers = tuple(int(p) for p in powers)
    if not powers or min(powers) < 0:
        raise ConfigError(f"pair force powers must be non-negative integers, got {powers}")
    basis, names = [], []
    for i in range(n_particles):
        for j in range(i + 1, n_particles):
            for p in powers:
                def phi(x, i=i, j=j, p=p):
                    x = np.asarray(x, dtype=float)
                    q = x.reshape(x.shape[:-1] + (n_particles, spatial_dim))
                    r = q[..., j, :] - q[..., i, :]
                    if p:
                        r = r * np.linalg.norm(r, axis=-1, keepdims=True) ** p
                    out = np.zeros_like(q)
                    out[..., i, :] = r
                    out[..., j, :] = -r
                    return out.reshape(x.shape)
                basis.append(phi)
                names.append(f"pair{i}-{j}^{p + 1}")
    return ParametricDriftFamily(cg_dim=n_particles * spatial_dim, basis=tuple(basis), names=tuple(names))


BASIS_BUILDERS = {
    'linear': lambda m, d: linear_basis(m),
    'isotropic': lambda m, d: isotropic_basis(m),
    'constant': lambda m, d: constant_basis(m),
    'affine': lambda m, d: affine_basis(m),
    'cubic': lambda m, d: cubic_basis(m),
    'pairwise_distance': lambda m, d: pairwise_distance_basis(m // d, d),
}


def get_basis(name, cg_dim, spatial_dim=1):
    """Look up a builtin basis family by name."""
    try:
        builder = BASIS_BUILDERS[name]
    except KeyError:
        raise ConfigError(f"unknown basis '{name}'; choose one of {sorted(BASIS_BUILDERS)}")
    return builder(cg_dim, spatial_dim)
