"""Exact constants and densities of the four/five-atom degenerate fields.

The measure ``alpha d_0 + beta/2 (d_K + d_-K) + gamma/2 (d_L + d_-L)`` gives
the field ``X0 + Y1 cos(2 pi <K, x> + t1) + Y2 cos(2 pi <L, x> + t2)`` with
``X0 ~ N(0, alpha)``, ``Y1 ~ Ray(sqrt(beta))`` and ``Y2 ~ Ray(sqrt(gamma))``.
With ``S = Y1 + Y2`` and ``D = |Y1 - Y2|``::

    c_ES(l) = |K x L| P(D <= l + X0 <= S)
    c_NS(l) = |K x L| P(D <= |l + X0| <= S)

Each event is computed as ``F_D(c) - F_S(c)`` (``D <= S`` always) and the
distribution functions of ``S`` and ``D`` come from one-dimensional
quadrature against the Rayleigh densities.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from exlb import spectral_model
from exlb.field_sampler import mix_seed
from exlb.module_utils.errors import ConfigError
from exlb.spectral_model import TWO_PI, MeasureKind, SpectralMeasure, checked_quad


log = logging.getLogger(__name__)

INNER_EPSABS = 1e-11
OUTER_EPSABS = 1e-9
# Rayleigh tails beyond this many scale units are below double precision.
TAIL_SCALES = 12.0

CURVE_COLUMNS = ('level', 'cns_exact', 'ces_exact', 'p_max', 'p_lower_saddle')

FIGURE_ALPHAS = (0.0, 0.1, 0.3, 0.6)
FIGURE_DIFFS = (0.0, 0.5, 0.9)


@dataclass(frozen=True)
class DegenerateModel:
    alpha: float
    beta: float
    gamma: float
    K: tuple = (1.0, 0.0)
    L: tuple = (0.0, 1.0)

    def __post_init__(self):
        if self.alpha < 0 or self.beta <= 0 or self.gamma <= 0:
            raise ConfigError('Need alpha >= 0 and beta, gamma > 0')
        if abs(self.alpha + self.beta + self.gamma - 1.0) > spectral_model.MASS_TOL:
            raise ConfigError('alpha + beta + gamma must be 1, got {0!r}'.format(
                self.alpha + self.beta + self.gamma))
        if not self.cross > spectral_model.MERGE_TOL:
            raise ConfigError('K and L must be linearly independent')

    @property
    def cross(self):
        return abs(self.K[0] * self.L[1] - self.K[1] * self.L[0])

    @property
    def sigma1(self):
        return math.sqrt(self.beta)

    @property
    def sigma2(self):
        return math.sqrt(self.gamma)

    @property
    def reach(self):
        """Beyond this value of S, F_S and F_D are 1 to double precision."""
        return TAIL_SCALES * (self.sigma1 + self.sigma2)

    @property
    def label(self):
        return 'degenerate-a{0:g}-b{1:g}-g{2:g}'.format(self.alpha, self.beta, self.gamma)

    @classmethod
    def from_measure(cls, m):
        """Reads the model back from a (validated) atomic measure."""
        if m.beta is not None:
            return cls(m.alpha or 0.0, m.beta, m.gamma, tuple(m.K), tuple(m.L))
        m = spectral_model.validate_measure(m)
        if m.kind is not MeasureKind.ATOMIC or len(m.atoms) not in (4, 5):
            raise ConfigError('Degenerate model needs four or five atoms')
        t, w = m.locations, m.masses
        zero = np.all(t == 0, axis=1)
        upper = (t[:, 0] > 0) | ((t[:, 0] == 0) & (t[:, 1] > 0))
        if upper.sum() != 2 or zero.sum() != len(t) - 4:
            raise ConfigError('Degenerate model needs atoms at 0, +-K and +-L')
        (k, l) = t[upper] / TWO_PI
        beta, gamma = 2.0 * w[upper]
        return cls(float(w[zero].sum()), float(beta), float(gamma), tuple(k), tuple(l))

    def to_measure(self, label=None):
        return SpectralMeasure.five_atom(self.alpha, self.beta, self.gamma, self.K, self.L,
                                         label=label or self.label)


def _ray_pdf(y, s):
    return y / (s * s) * math.exp(-y * y / (2.0 * s * s)) if y > 0 else 0.0


def _ray_cdf(z, s):
    return -math.expm1(-z * z / (2.0 * s * s)) if z > 0 else 0.0


def cdf_sum(c, m):
    """P(Y1 + Y2 <= c)."""
    if c <= 0:
        return 0.0
    s1, s2 = m.sigma1, m.sigma2
    return checked_quad(lambda y: _ray_pdf(y, s1) * _ray_cdf(c - y, s2), 0.0, c,
                        'F_S({0:g})'.format(c), epsabs=INNER_EPSABS)


def cdf_diff(c, m):
    """P(|Y1 - Y2| <= c)."""
    if c <= 0:
        return 0.0
    s1, s2 = m.sigma1, m.sigma2

    def inner(y):
        return _ray_pdf(y, s1) * (_ray_cdf(y + c, s2) - _ray_cdf(y - c, s2))

    what = 'F_D({0:g})'.format(c)
    hi = TAIL_SCALES * s1
    if c >= hi:
        return checked_quad(inner, 0.0, hi, what, epsabs=INNER_EPSABS)
    return (checked_quad(inner, 0.0, c, what, epsabs=INNER_EPSABS)
            + checked_quad(inner, c, hi, what, epsabs=INNER_EPSABS))


def pdf_sum(s, m):
    if s <= 0:
        return 0.0
    s1, s2 = m.sigma1, m.sigma2
    return checked_quad(lambda y: _ray_pdf(y, s1) * _ray_pdf(s - y, s2), 0.0, s,
                        'p_S({0:g})'.format(s), epsabs=INNER_EPSABS)


def pdf_diff(d, m):
    """Density of |Y1 - Y2|; 0 for d < 0 and positive at d = 0."""
    if d < 0:
        return 0.0
    s1, s2 = m.sigma1, m.sigma2

    def inner(y):
        return (_ray_pdf(y + d, s1) * _ray_pdf(y, s2)
                + _ray_pdf(y, s1) * _ray_pdf(y + d, s2))

    return checked_quad(inner, 0.0, m.reach, 'p_D({0:g})'.format(d), epsabs=INNER_EPSABS)


def _band(c, m):
    return cdf_diff(c, m) - cdf_sum(c, m)


def _smooth(g, x, m, what):
    """Integral over c >= 0 of g(c) times the N(x, alpha) density at c."""
    sd = math.sqrt(m.alpha)
    lo = max(0.0, x - 10.0 * sd)
    hi = min(m.reach, x + 10.0 * sd)
    if hi <= lo:
        return 0.0
    gauss = stats.norm(loc=x, scale=sd)
    points = [x] if lo < x < hi else None
    return checked_quad(lambda c: g(c) * gauss.pdf(c), lo, hi, what,
                        epsabs=OUTER_EPSABS, points=points)


def ces_exact(level, m):
    level = float(level)
    if m.alpha == 0:
        return m.cross * _band(level, m)
    return m.cross * _smooth(lambda c: _band(c, m), level, m,
                             'c_ES({0:g})'.format(level))


def cns_exact(level, m):
    """c_ES(l) + c_ES(-l), the level-set constant."""
    return ces_exact(level, m) + ces_exact(-level, m)


def degenerate_densities(x, m):
    """Returns ``(p_max(x), p_lower_saddle(x))``."""
    x = float(x)
    if m.alpha == 0:
        return m.cross * pdf_sum(x, m), m.cross * pdf_diff(x, m)
    p_max = _smooth(lambda s: pdf_sum(s, m), x, m, 'p_max({0:g})'.format(x))
    p_lower = _smooth(lambda d: pdf_diff(d, m), x, m, 'p_lower_saddle({0:g})'.format(x))
    return m.cross * p_max, m.cross * p_lower


def _draw(m, rng, size):
    x0 = rng.normal(0.0, math.sqrt(m.alpha), size) if m.alpha > 0 else np.zeros(size)
    y1 = stats.rayleigh.rvs(scale=m.sigma1, size=size, random_state=rng)
    y2 = stats.rayleigh.rvs(scale=m.sigma2, size=size, random_state=rng)
    return x0, y1, y2


def nonergodic_limit(level, m, seed, size=None, set_kind='excursion'):
    """Samples the realization-dependent limit of N / Area.

    For excursion sets this is ``|K x L|`` times the indicator of
    ``l - X0`` in ``[|Y1 - Y2|, Y1 + Y2]``; level sets use ``|l - X0|``.
    """
    rng = np.random.default_rng(seed)
    x0, y1, y2 = _draw(m, rng, 1 if size is None else size)
    c = level - x0
    if set_kind == 'level':
        c = np.abs(c)
    elif set_kind != 'excursion':
        raise ConfigError('set_kind must be excursion or level')
    value = m.cross * ((np.abs(y1 - y2) <= c) & (c <= y1 + y2))
    return float(value[0]) if size is None else value


@dataclass
class MonteCarloConstants:
    levels: np.ndarray
    ces: np.ndarray
    ces_se: np.ndarray
    cns: np.ndarray
    cns_se: np.ndarray
    n_samples: int


def mc_constants(levels, m, n_samples, seed, chunk=1000000):
    """Monte Carlo estimates of c_ES and c_NS over (X0, Y1, Y2) with standard errors.

    Samples are drawn in chunks, each from its own seed stream.
    """
    levels = np.atleast_1d(np.asarray(levels, dtype=float))
    hits_es = np.zeros(len(levels))
    hits_ns = np.zeros(len(levels))
    done = 0
    index = 0
    while done < n_samples:
        size = min(chunk, n_samples - done)
        rng = np.random.default_rng(mix_seed(seed, index))
        x0, y1, y2 = _draw(m, rng, size)
        lo, hi = np.abs(y1 - y2), y1 + y2
        for i, level in enumerate(levels):
            c = level + x0
            hits_es[i] += np.count_nonzero((lo <= c) & (c <= hi))
            hits_ns[i] += np.count_nonzero((lo <= np.abs(c)) & (np.abs(c) <= hi))
        done += size
        index += 1

    p_es = hits_es / n_samples
    p_ns = hits_ns / n_samples
    return MonteCarloConstants(
        levels=levels,
        ces=m.cross * p_es,
        ces_se=m.cross * np.sqrt(p_es * (1 - p_es) / n_samples),
        cns=m.cross * p_ns,
        cns_se=m.cross * np.sqrt(p_ns * (1 - p_ns) / n_samples),
        n_samples=n_samples,
    )


def curve_table(levels, m):
    """Rows ``(level, cns_exact, ces_exact, p_max, p_lower_saddle)``."""
    rows = []
    for level in np.asarray(levels, dtype=float):
        ces_pos = ces_exact(level, m)
        ces_neg = ces_exact(-level, m)
        p_max, p_lower = degenerate_densities(level, m)
        rows.append([float(level), ces_pos + ces_neg, ces_pos, p_max, p_lower])
    log.debug('curve table for %s: %d levels', m.label, len(rows))
    return rows


def figure_models(alphas=FIGURE_ALPHAS, diffs=FIGURE_DIFFS, K=(1.0, 0.0), L=(0.0, 1.0)):
    """Models over alpha and beta - gamma; pairs leaving gamma <= 0 are skipped."""
    models = []
    for alpha in alphas:
        for diff in diffs:
            beta = (1.0 - alpha + diff) / 2.0
            gamma = (1.0 - alpha - diff) / 2.0
            if gamma <= 1e-12:
                continue
            models.append(DegenerateModel(alpha, beta, 1.0 - alpha - beta, K, L))
    return models


def write_curve_csv(path, rows):
    from exlb.module_utils.output import write_csv

    return write_csv(path, 'degenerate/1', list(CURVE_COLUMNS), rows)
