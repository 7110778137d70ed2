"""Realizations of stationary planar Gaussian fields on a square grid.

Atomic measures (including the equispaced-direction approximation of the
random plane wave) are sampled exactly; radial densities go through padded
spectral synthesis.  Every sampler is a pure function of (measure, grid,
seed).
"""

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np

from exlb import spectral_model
from exlb.module_utils.errors import ConfigError, ResolutionTooCoarse, ResolutionWarning
from exlb.spectral_model import MeasureKind


log = logging.getLogger(__name__)

MAGIC = b'EXLB'
_HEADER = np.dtype([('magic', 'S4'), ('n', '<u4'), ('spacing', '<f8')])

DEFAULT_POINTS_PER_WAVELENGTH = 6.0
DEFAULT_RPW_DIRECTIONS = 256
MIN_RPW_DIRECTIONS = 16
# Spectral mass allowed outside the Nyquist box of the synthesis grid.
ALIASED_MASS_TOL = 1e-3

_MASK64 = (1 << 64) - 1


def mix_seed(master_seed, index):
    """Seed of realization ``index``: one splitmix64 step on master + index."""
    z = (int(master_seed) + (int(index) + 1) * 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class GridSpec:
    """The square window [0, side_length]^2 sampled at points_per_side^2 points."""

    side_length: float
    points_per_side: int

    def __post_init__(self):
        if not self.side_length > 0:
            raise ConfigError('side_length must be positive')
        if self.points_per_side < 2:
            raise ConfigError('points_per_side must be at least 2')

    @property
    def spacing(self):
        return self.side_length / (self.points_per_side - 1)

    @property
    def area(self):
        return self.side_length ** 2

    @property
    def coordinates(self):
        return np.arange(self.points_per_side) * self.spacing

    @classmethod
    def for_measure(cls, m, side_length, points_per_wavelength=DEFAULT_POINTS_PER_WAVELENGTH):
        """Smallest grid with at least ``points_per_wavelength`` per shortest wavelength."""
        wavelength = 2.0 * math.pi / spectral_model.effective_radius(m)
        n = int(math.ceil(side_length * points_per_wavelength / wavelength)) + 1
        spec = cls(float(side_length), max(n, 3))
        log.debug('grid for %s: %d points, spacing %.4g', m.label, spec.points_per_side,
                  spec.spacing)
        return spec

    def check_resolution(self, m, points_per_wavelength=DEFAULT_POINTS_PER_WAVELENGTH):
        """Warns when the spacing exceeds wavelength / points_per_wavelength."""
        wavelength = 2.0 * math.pi / spectral_model.effective_radius(m)
        limit = wavelength / points_per_wavelength
        if self.spacing > limit * (1 + 1e-12):
            warnings.warn(
                'Grid spacing {0:.4g} exceeds {1:.4g} ({2:g} points per wavelength {3:.4g})'.format(
                    self.spacing, limit, points_per_wavelength, wavelength),
                ResolutionWarning, stacklevel=2)
            return False
        return True


@dataclass
class FieldGrid:
    """A sampled field; ``values[r, c]`` sits at x = c * spacing, y = r * spacing."""

    spec: GridSpec
    values: np.ndarray
    seed: int = 0
    model_label: str = ''

    def __post_init__(self):
        n = self.spec.points_per_side
        self.values = np.asarray(self.values, dtype=np.float64).reshape(n, n)
        if not np.all(np.isfinite(self.values)):
            raise ValueError('Field values must be finite')

    def dump(self, path):
        """Writes the EXLB binary layout: 16-byte header then little-endian f64 values."""
        header = np.zeros(1, dtype=_HEADER)
        header['magic'] = MAGIC
        header['n'] = self.spec.points_per_side
        header['spacing'] = self.spec.spacing
        with open(path, 'wb') as fd:
            fd.write(header.tobytes())
            fd.write(self.values.astype('<f8').tobytes(order='C'))
        return path

    @classmethod
    def load(cls, path, model_label=''):
        with open(path, 'rb') as fd:
            raw = fd.read()
        header = np.frombuffer(raw[:_HEADER.itemsize], dtype=_HEADER)[0]
        if header['magic'] != MAGIC:
            raise ConfigError('"{0}" is not an EXLB field file'.format(path))
        n = int(header['n'])
        values = np.frombuffer(raw[_HEADER.itemsize:], dtype='<f8')
        if values.size != n * n:
            raise ConfigError('"{0}" is truncated: {1} of {2} values'.format(
                path, values.size, n * n))
        spec = GridSpec(float(header['spacing']) * (n - 1), n)
        return cls(spec, values.reshape(n, n).copy(), seed=0, model_label=model_label)


def sample_atomic(m, spec, seed):
    """Exact sample for an atomic measure.

    Each symmetric pair +-t of total mass w contributes
    ``A cos(<t, x>) + B sin(<t, x>)`` with A, B ~ N(0, w), that is an
    amplitude Ray(sqrt(w)) with a uniform phase; an atom at 0 of mass alpha
    contributes a constant N(0, alpha).
    """
    m = spectral_model.validate_measure(m)
    if m.kind is not MeasureKind.ATOMIC:
        raise ConfigError('sample_atomic needs an atomic measure')
    rng = np.random.default_rng(seed)
    t = m.locations
    w = m.masses
    zero = (t[:, 0] == 0) & (t[:, 1] == 0)
    upper = (t[:, 0] > 0) | ((t[:, 0] == 0) & (t[:, 1] > 0))
    freqs = t[upper]
    pair_mass = 2.0 * w[upper]
    alpha = float(w[zero].sum())

    x0 = math.sqrt(alpha) * rng.standard_normal() if alpha > 0 else 0.0
    a = np.sqrt(pair_mass) * rng.standard_normal(len(pair_mass))
    b = np.sqrt(pair_mass) * rng.standard_normal(len(pair_mass))

    xs = spec.coordinates
    # cos(u + v) and sin(u + v) split into row and column factors.
    cx = np.cos(np.outer(freqs[:, 0], xs))
    sx = np.sin(np.outer(freqs[:, 0], xs))
    cy = np.cos(np.outer(freqs[:, 1], xs))
    sy = np.sin(np.outer(freqs[:, 1], xs))
    values = ((cy * a[:, None]).T @ cx - (sy * a[:, None]).T @ sx
              + (sy * b[:, None]).T @ cx + (cy * b[:, None]).T @ sx)
    values += x0
    return FieldGrid(spec, values, seed=seed, model_label=m.label)


def sample_rpw(M, spec, seed, radius=1.0):
    """Random plane wave through ``M`` equispaced directions.

    Covariance (1/M) sum_k cos(<theta_k, x>), which tends to J0(radius |x|).
    """
    if M < MIN_RPW_DIRECTIONS:
        warnings.warn('Only {0} directions; the covariance is far from J0'.format(M),
                      UserWarning, stacklevel=2)
    m = spectral_model.circle_atoms(M, radius=radius)
    return sample_atomic(m, spec, seed)


def _density_on(g, radius):
    try:
        dens = np.asarray(g(radius), dtype=float)
        if dens.shape == radius.shape:
            return dens
    except (TypeError, ValueError):
        pass
    return np.vectorize(g, otypes=[float])(radius)


def sample_spectral_grid(m, spec, seed, padding=2):
    """Spectral synthesis for a radial density on a padded frequency grid.

    The synthesis grid has ``padding * points_per_side`` points per side; the
    returned field is its top-left ``points_per_side`` block.
    """
    if m.kind is not MeasureKind.RADIAL:
        raise ConfigError('sample_spectral_grid needs a radial density')
    if padding < 2:
        raise ConfigError('padding must be at least 2, got {0}'.format(padding))
    n = spec.points_per_side
    N = int(padding * n)
    h = spec.spacing
    dw = 2.0 * math.pi / (N * h)

    omega = 2.0 * math.pi * np.fft.fftfreq(N, d=h)
    radius = np.hypot(omega[:, None], omega[None, :])
    weights = _density_on(m.radial_density, radius) * dw * dw
    captured = weights.sum()
    if abs(captured - 1.0) > ALIASED_MASS_TOL:
        raise ResolutionTooCoarse(
            'Frequency grid captures {0:.6f} of the spectral mass; refine the spacing '
            'or enlarge the window'.format(captured))
    if dw > spectral_model.effective_radius(m) / 8.0:
        raise ResolutionTooCoarse(
            'Frequency step {0:.4g} undersamples the density; enlarge the window'.format(dw))
    weights /= captured

    rng = np.random.default_rng(seed)
    xi = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    field = np.fft.ifft2(np.sqrt(weights) * xi).real * (N * N)
    log.debug('spectral synthesis %dx%d (padding %d)', N, N, padding)
    return FieldGrid(spec, field[:n, :n], seed=seed, model_label=m.label)


def sample(m, spec, seed, rpw_directions=DEFAULT_RPW_DIRECTIONS, padding=2):
    """Dispatches on the measure kind."""
    if m.kind is MeasureKind.ATOMIC:
        return sample_atomic(m, spec, seed)
    if m.kind is MeasureKind.CIRCLE:
        field = sample_rpw(rpw_directions, spec, seed, radius=m.radius)
        field.model_label = m.label
        return field
    return sample_spectral_grid(m, spec, seed, padding=padding)
