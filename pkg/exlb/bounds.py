"""Analytic bounds on the excursion-set and level-set component constants."""

import math
from dataclasses import asdict, dataclass

import numpy as np

from exlb.closed_form import Phi, SQRT2, isotropic_det, phi
from exlb.module_utils.errors import ConfigError


# Above this value of lambda^2 the level-set constant has at least two modes.
BIMODAL_LAMBDA_SQ = 6.0 * math.e / (2.0 * math.e + math.pi)

BOUNDS_COLUMNS = ('level', 'ces_diff', 'ces_lower', 'cns_lower', 'cns_upper')


@dataclass(frozen=True)
class BoundsReport:
    level: float
    ces_diff: float
    cns_upper: float
    ces_lower: float
    cns_lower: float

    def as_row(self):
        d = asdict(self)
        return [d[c] for c in BOUNDS_COLUMNS]


def _check_lambda(lam):
    if not 0 < lam <= SQRT2 * (1 + 1e-12):
        raise ConfigError('lambda must lie in (0, sqrt(2)], got {0!r}'.format(lam))


def ces_difference(level, det_grad):
    """c_ES(l) - c_ES(-l) = sqrt(det_grad) * l * phi(l) / (2 pi)."""
    if det_grad < 0:
        raise ConfigError('det_grad must be nonnegative, got {0!r}'.format(det_grad))
    level = np.asarray(level, dtype=float)
    val = math.sqrt(det_grad) * level * phi(level) / (2.0 * math.pi)
    return float(val) if val.ndim == 0 else val


def ces_lower(level, det_grad):
    """Lower bound on c_ES: the difference for l > 0, else 0."""
    return np.maximum(ces_difference(level, det_grad), 0.0)


def cns_lower(level, det_grad):
    return np.maximum(ces_difference(np.abs(level), det_grad), 0.0)


def cns_upper(level, lam, eta_sq):
    """Flip-point upper bound on c_NS, extended to l < 0 by symmetry."""
    _check_lambda(lam)
    level = np.abs(np.asarray(level, dtype=float))
    s = math.sqrt(3.0 - lam * lam)
    u = lam * level / s
    val = (lam * lam / (math.pi * eta_sq) * phi(level)
           * (2.0 * s / lam * phi(u) + level * (2.0 * Phi(u) - 1.0)))
    return float(val) if val.ndim == 0 else val


def is_bimodal_guaranteed(lam):
    _check_lambda(lam)
    return lam * lam > BIMODAL_LAMBDA_SQ


def monotone_threshold(lam):
    """c_NS and c_ES are strictly decreasing beyond this level."""
    if not lam > 0:
        raise ConfigError('lambda must be positive, got {0!r}'.format(lam))
    return SQRT2 / lam


def bimodality_margin(lam, eta_sq):
    """cns_lower(1) - cns_upper(0); positive exactly when bimodality is guaranteed."""
    det = isotropic_det(lam, eta_sq)
    return float(cns_lower(1.0, det) - cns_upper(0.0, lam, eta_sq))


def bounds_table(levels, lam, eta_sq):
    _check_lambda(lam)
    det = isotropic_det(lam, eta_sq)
    return [BoundsReport(
        level=float(lv),
        ces_diff=float(ces_difference(lv, det)),
        cns_upper=float(cns_upper(lv, lam, eta_sq)),
        ces_lower=float(ces_lower(lv, det)),
        cns_lower=float(cns_lower(lv, det)),
    ) for lv in np.asarray(levels, dtype=float)]


def write_bounds_csv(path, reports):
    from exlb.module_utils.output import write_csv

    return write_csv(path, 'bounds/1', list(BOUNDS_COLUMNS),
                     [r.as_row() for r in reports])
