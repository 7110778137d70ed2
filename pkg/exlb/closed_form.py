"""Explicit critical-point densities of planar isotropic fields.

Densities are per unit area per unit level and are parametrised by
``lam`` in (0, sqrt(2)] and ``eta_sq`` > 0 (see
:func:`exlb.spectral_model.isotropic_params`).  ``lam == sqrt(2)`` (the
random plane wave family) has its own closed form.
"""

import enum
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from exlb import spectral_model
from exlb.module_utils.errors import ConfigError
from exlb.spectral_model import checked_quad


log = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)
CRITICAL_TOL = 1e-12
TAIL_EPSABS = 1e-10

_HEADS = ('m+', 'm-', 's')


def phi(x):
    """Standard normal density."""
    return np.exp(-0.5 * np.square(x)) / math.sqrt(2.0 * math.pi)


def Phi(x):
    """Standard normal distribution function, through erfc."""
    return 0.5 * special.erfc(-np.asarray(x, dtype=float) / SQRT2)


class DensityCase(enum.Enum):
    SUBCRITICAL = 'Subcritical'
    CRITICAL = 'Critical'


@dataclass(frozen=True)
class ClosedFormDensities:
    lam: float
    eta_sq: float

    def __post_init__(self):
        if not 0 < self.lam <= SQRT2 + CRITICAL_TOL:
            raise ConfigError('lambda must lie in (0, sqrt(2)], got {0!r}'.format(self.lam))
        if not self.eta_sq > 0:
            raise ConfigError('eta^2 must be positive, got {0!r}'.format(self.eta_sq))

    @classmethod
    def from_kernel(cls, k):
        lam, eta_sq = spectral_model.isotropic_params(k)
        return cls(lam, eta_sq)

    @classmethod
    def for_model(cls, name):
        return cls.from_kernel(spectral_model.named_kernel(name))

    @property
    def case(self):
        if abs(self.lam - SQRT2) <= CRITICAL_TOL:
            return DensityCase.CRITICAL
        return DensityCase.SUBCRITICAL

    @property
    def det_grad(self):
        return isotropic_det(self.lam, self.eta_sq)


def isotropic_det(lam, eta_sq):
    """det of the Hessian of kappa at 0 for an isotropic kernel, 4 lam^4 / eta^4."""
    return 4.0 * lam ** 4 / eta_sq ** 2


def _scalar(x, values):
    return float(values) if np.ndim(x) == 0 else values


def p_max(x, d):
    x = np.asarray(x, dtype=float)
    lam, eta_sq = d.lam, d.eta_sq
    if d.case is DensityCase.CRITICAL:
        c = SQRT2 / (math.pi ** 1.5 * eta_sq)
        val = c * ((x * x - 1.0) * np.exp(-0.5 * x * x) + np.exp(-1.5 * x * x))
        return _scalar(x, np.where(x >= 0, val, 0.0))
    a = 2.0 - lam * lam
    b = 3.0 - lam * lam
    val = (
        lam * lam * (x * x - 1.0) * phi(x) * Phi(lam * x / math.sqrt(a))
        + lam * x * math.sqrt(a) / (2.0 * math.pi) * np.exp(-x * x / a)
        + SQRT2 / math.sqrt(math.pi * b) * np.exp(-3.0 * x * x / (2.0 * b))
        * Phi(lam * x / math.sqrt(b * a))
    ) / (math.pi * eta_sq)
    return _scalar(x, val)


def p_min(x, d):
    return p_max(-np.asarray(x, dtype=float), d)


def p_saddle(x, d):
    x = np.asarray(x, dtype=float)
    if d.case is DensityCase.CRITICAL:
        val = SQRT2 / (math.pi ** 1.5 * d.eta_sq) * np.exp(-1.5 * x * x)
    else:
        b = 3.0 - d.lam * d.lam
        val = (SQRT2 / math.sqrt(math.pi * b) * np.exp(-3.0 * x * x / (2.0 * b))
               / (math.pi * d.eta_sq))
    return _scalar(x, val)


_DENSITIES = {'m+': p_max, 'm-': p_min, 's': p_saddle}


def _tail(func, level):
    if level == np.inf:
        return 0.0
    what = 'tail from {0:g}'.format(level)
    if level < 0:
        # Split at 0, where the critical p_max has its kink.
        return (checked_quad(func, level, 0.0, what, epsabs=TAIL_EPSABS)
                + checked_quad(func, 0.0, np.inf, what, epsabs=TAIL_EPSABS))
    return checked_quad(func, level, np.inf, what, epsabs=TAIL_EPSABS)


def tail_integral(h, level, d):
    """Integral of p_h over [level, inf); ``level`` may be -inf or an array."""
    if h not in _DENSITIES:
        raise ConfigError('Unknown density "{0}"; expected one of {1}'.format(
            h, ', '.join(_HEADS)))
    density = _DENSITIES[h]

    def func(x):
        return float(density(x, d))

    if np.ndim(level):
        return np.array([_tail(func, float(lv)) for lv in np.ravel(level)]).reshape(
            np.shape(level))
    return _tail(func, float(level))


def total(h, d):
    return tail_integral(h, -np.inf, d)


def euler_tail(level, d):
    """Integral of p_max - p_saddle + p_min over [level, inf)."""
    def func(x):
        return float(p_max(x, d) - p_saddle(x, d) + p_min(x, d))

    if np.ndim(level):
        return np.array([_tail(func, float(lv)) for lv in np.ravel(level)]).reshape(
            np.shape(level))
    return _tail(func, float(level))


def density_table(xs, d):
    """Rows ``(x, p_max, p_min, p_saddle)`` over ``xs``."""
    xs = np.asarray(xs, dtype=float)
    return np.column_stack([xs, p_max(xs, d), p_min(xs, d), p_saddle(xs, d)])


def write_density_csv(path, xs, d):
    from exlb.module_utils.output import write_csv

    log.debug('density table for lambda=%g eta^2=%g', d.lam, d.eta_sq)
    return write_csv(path, 'densities/1', ['x', 'p_max', 'p_min', 'p_saddle'],
                     density_table(xs, d).tolist())
