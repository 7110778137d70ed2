"""Spectral measures, isotropic kernels and the derivative quantities built on them.

Frequencies are angular inside this package: the covariance of a measure
``rho`` is ``kappa(x) = integral of cos(<t, x>) d rho(t)``.  Atom locations
read from JSON documents, and the ``K`` / ``L`` vectors of the degenerate
five-atom model, are in cycles per unit (an atom pair at +-t contributes
``cos(2 pi <t, x>)``); they are multiplied by 2 pi on the way in and divided
on the way out.
"""

import enum
import json
import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate, optimize, special
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from exlb.module_utils.errors import (
    ConfigError,
    DegenerateSupport,
    InvalidDerivatives,
    MassNotOne,
    NonHermitian,
    QuadratureFailure,
)


log = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
MERGE_TOL = 1e-12
MASS_TOL = 1e-12
RADIAL_MASS_TOL = 1e-9
QUAD_EPSABS = 1e-10


class MeasureKind(enum.Enum):
    ATOMIC = 'AtomicSymmetric'
    RADIAL = 'IsotropicRadial'
    CIRCLE = 'UniformCircle'


@dataclass(frozen=True)
class SpectralMeasure:
    """A Hermitian probability measure on the frequency plane.

    ``atoms`` holds ``(tx, ty, mass)`` triples for atomic measures.
    ``radial_density`` is ``g`` with ``d rho = g(|t|) dt`` for radial
    measures, and ``radius`` is the circle radius for the uniform circle.
    ``alpha``, ``beta``, ``gamma``, ``K`` and ``L`` describe the degenerate
    five-atom model when it was given in that form (``K``, ``L`` in cycles).
    """

    kind: MeasureKind
    atoms: tuple = ()
    radial_density: object = None
    radius: float = None
    alpha: float = None
    beta: float = None
    gamma: float = None
    K: tuple = None
    L: tuple = None
    label: str = ''
    degenerate: bool = False
    validated: bool = False

    @classmethod
    def from_cycles(cls, atoms, **kwargs):
        """Builds an atomic measure from ``(x, y, mass)`` triples in cycles."""
        scaled = tuple((TWO_PI * float(x), TWO_PI * float(y), float(w))
                       for x, y, w in atoms)
        return cls(MeasureKind.ATOMIC, atoms=scaled, **kwargs)

    @classmethod
    def five_atom(cls, alpha, beta, gamma, K=(1.0, 0.0), L=(0.0, 1.0), label=''):
        """The measure alpha d_0 + beta/2 (d_K + d_-K) + gamma/2 (d_L + d_-L)."""
        return cls(MeasureKind.ATOMIC, alpha=float(alpha), beta=float(beta),
                   gamma=float(gamma), K=tuple(map(float, K)),
                   L=tuple(map(float, L)), label=label)

    @property
    def locations(self):
        if not self.atoms:
            return np.zeros((0, 2))
        return np.array([a[:2] for a in self.atoms], dtype=float)

    @property
    def masses(self):
        return np.array([a[2] for a in self.atoms], dtype=float)

    @property
    def is_isotropic(self):
        return self.kind in (MeasureKind.RADIAL, MeasureKind.CIRCLE)


@dataclass
class IsotropicKernel:
    """Derivatives at 0 of ``K`` where ``kappa(x) = K(|x|)``.

    ``lam`` and ``eta_sq`` are filled in (and cached) by
    :func:`isotropic_params`.
    """

    K_second_deriv_at_0: float
    K_fourth_deriv_at_0: float
    name: str = ''
    lam: float = None
    eta_sq: float = None


def checked_quad(func, a, b, what, **kwargs):
    kwargs.setdefault('epsabs', QUAD_EPSABS)
    kwargs.setdefault('limit', 200)
    res = integrate.quad(func, a, b, full_output=1, **kwargs)
    value, abserr = res[0], res[1]
    if len(res) > 3:
        # quad also flags roundoff on integrals that did converge; judge by the error estimate.
        budget = max(kwargs['epsabs'], kwargs.get('epsrel', 1.49e-8) * abs(value))
        if not abserr <= 100.0 * budget or not math.isfinite(value):
            raise QuadratureFailure('{0}: {1}'.format(what, res[3]))
        log.debug('%s: %s (error %.2g)', what, res[3].splitlines()[0], abserr)
    return value


def _five_atom_atoms(m):
    if m.beta is None or m.gamma is None or m.K is None or m.L is None:
        raise ConfigError('Five-atom model needs beta, gamma, K and L')
    alpha = 0.0 if m.alpha is None else m.alpha
    if alpha < 0 or m.beta <= 0 or m.gamma <= 0:
        raise MassNotOne('Five-atom model needs alpha >= 0 and beta, gamma > 0')
    if abs(alpha + m.beta + m.gamma - 1.0) > MASS_TOL:
        raise MassNotOne('alpha + beta + gamma = {0!r}, expected 1'.format(
            alpha + m.beta + m.gamma))
    cross = m.K[0] * m.L[1] - m.K[1] * m.L[0]
    if abs(cross) <= MERGE_TOL:
        raise ConfigError('K and L must be linearly independent')
    kx, ky = TWO_PI * m.K[0], TWO_PI * m.K[1]
    lx, ly = TWO_PI * m.L[0], TWO_PI * m.L[1]
    atoms = [
        (kx, ky, m.beta / 2.0), (-kx, -ky, m.beta / 2.0),
        (lx, ly, m.gamma / 2.0), (-lx, -ly, m.gamma / 2.0),
    ]
    if alpha > 0:
        atoms.insert(0, (0.0, 0.0, alpha))
    return atoms


def _deduplicate(locations, masses):
    """Merges atoms closer than MERGE_TOL and drops massless ones."""
    n = len(masses)
    if n == 0:
        return locations, masses
    pairs = cKDTree(locations).query_pairs(MERGE_TOL, output_type='ndarray')
    if len(pairs):
        graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
        ncomp, labels = connected_components(graph, directed=False)
        merged_locs = np.zeros((ncomp, 2))
        merged_mass = np.zeros(ncomp)
        counts = np.zeros(ncomp)
        np.add.at(merged_locs, labels, locations)
        np.add.at(merged_mass, labels, masses)
        np.add.at(counts, labels, 1)
        locations = merged_locs / counts[:, None]
        masses = merged_mass
    keep = masses > 0
    return locations[keep], masses[keep]


def _symmetrize(locations, masses):
    tree = cKDTree(locations)
    dist, idx = tree.query(-locations, distance_upper_bound=max(MERGE_TOL, 1e-300))
    missing = np.nonzero(idx >= len(masses))[0]
    if missing.size:
        t = locations[missing[0]]
        raise NonHermitian('Atom at ({0:g}, {1:g}) has no mirror atom'.format(*t))
    bad = np.nonzero(np.abs(masses - masses[idx]) > MASS_TOL)[0]
    if bad.size:
        t = locations[bad[0]]
        raise NonHermitian('Atom at ({0:g}, {1:g}) and its mirror differ in mass'.format(*t))
    return (locations - locations[idx]) / 2.0, (masses + masses[idx]) / 2.0


def in_two_lines(points, tol=1e-9):
    """True if the points lie on the union of two lines through the origin.

    Atoms at the origin are ignored; the rest must span at most two
    directions (up to sign).
    """
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    norms = np.hypot(points[:, 0], points[:, 1])
    points = points[norms > tol]
    if len(points) == 0:
        return True
    units = points / np.hypot(points[:, 0], points[:, 1])[:, None]
    for _ in range(2):
        u = units[0]
        off = np.abs(u[0] * units[:, 1] - u[1] * units[:, 0]) > tol
        units = units[off]
        if len(units) == 0:
            return True
    return False


def validate_measure(m, strict=False):
    """Checks the probability-measure assumptions and normalises atoms.

    Atomic measures are deduplicated and made exactly Hermitian.  Support
    contained in two lines sets ``degenerate`` (or raises DegenerateSupport
    when ``strict``).  Validating a validated measure returns it unchanged.
    """
    if m.validated:
        return m

    if m.kind is MeasureKind.ATOMIC:
        atoms = m.atoms
        if m.beta is not None or m.gamma is not None:
            atoms = _five_atom_atoms(m)
        if not atoms:
            raise MassNotOne('Atomic measure has no atoms')
        locations = np.array([a[:2] for a in atoms], dtype=float)
        masses = np.array([a[2] for a in atoms], dtype=float)
        if np.any(masses < 0) or not np.all(np.isfinite(masses)):
            raise MassNotOne('Atom masses must be finite and nonnegative')
        locations, masses = _deduplicate(locations, masses)
        if not len(masses):
            raise MassNotOne('Atomic measure has no mass')
        locations, masses = _symmetrize(locations, masses)
        total = masses.sum()
        if abs(total - 1.0) > MASS_TOL:
            raise MassNotOne('Total mass {0!r}, expected 1'.format(total))
        degenerate = in_two_lines(locations)
        if degenerate:
            if strict:
                raise DegenerateSupport('Support of "{0}" lies in two lines'.format(m.label))
            log.debug('measure %r flagged degenerate', m.label)
        atoms = tuple((float(x), float(y), float(w))
                      for (x, y), w in zip(locations, masses))
        return replace(m, atoms=atoms, degenerate=degenerate, validated=True)

    if m.kind is MeasureKind.RADIAL:
        if not callable(m.radial_density):
            raise ConfigError('Radial measure needs a callable density')
        total = checked_quad(lambda r: TWO_PI * r * m.radial_density(r), 0, np.inf,
                            'radial mass')
        if abs(total - 1.0) > RADIAL_MASS_TOL:
            raise MassNotOne('Total mass {0!r}, expected 1'.format(total))
        return replace(m, validated=True)

    if m.kind is MeasureKind.CIRCLE:
        if m.radius is None or not m.radius > 0:
            raise ConfigError('Circle measure needs a positive radius')
        return replace(m, validated=True)

    raise ConfigError('Unknown measure kind {0!r}'.format(m.kind))


def spectral_moment(m, k):
    """Returns the radial moment, the integral of |t|^k d rho(t)."""
    if m.kind is MeasureKind.ATOMIC:
        r = np.hypot(m.locations[:, 0], m.locations[:, 1])
        return float(np.sum(m.masses * r ** k))
    if m.kind is MeasureKind.CIRCLE:
        return float(m.radius) ** k
    g = m.radial_density
    return checked_quad(lambda r: TWO_PI * r ** (k + 1) * g(r), 0, np.inf,
                        'moment {0}'.format(k), epsrel=0.0)


def gradient_moment_matrix(m):
    """The 2x2 matrix of second spectral moments, the covariance of the gradient."""
    if m.kind is MeasureKind.ATOMIC:
        t = m.locations
        return np.einsum('i,ij,ik->jk', m.masses, t, t)
    return np.eye(2) * spectral_moment(m, 2) / 2.0


def gradient_covariance_det(m):
    return float(np.linalg.det(gradient_moment_matrix(validate_measure(m))))


def isotropic_params(k):
    """Returns ``(lam, eta_sq)``, caching them on the kernel."""
    k2, k4 = k.K_second_deriv_at_0, k.K_fourth_deriv_at_0
    if not (k2 < 0 and k4 > 0):
        raise InvalidDerivatives(
            'Need K\'\'(0) < 0 and K\'\'\'\'(0) > 0, got {0!r} and {1!r}'.format(k2, k4))
    if k.lam is None or k.eta_sq is None:
        lam = -math.sqrt(3.0) * k2 / math.sqrt(k4)
        if lam > math.sqrt(2.0) * (1 + 1e-12):
            raise InvalidDerivatives(
                'lambda = {0!r} exceeds sqrt(2); not a covariance kernel'.format(lam))
        k.lam = min(lam, math.sqrt(2.0))
        k.eta_sq = -6.0 * k2 / k4
    return k.lam, k.eta_sq


def kernel_from_measure(m, name=None):
    """The isotropic kernel of a radial or circle measure via its moments.

    Uses K''(0) = -(1/2) m2 and K''''(0) = (3/8) m4.
    """
    if not m.is_isotropic:
        raise ConfigError('Kernel derivatives need an isotropic measure')
    return IsotropicKernel(
        K_second_deriv_at_0=-0.5 * spectral_moment(m, 2),
        K_fourth_deriv_at_0=0.375 * spectral_moment(m, 4),
        name=name or m.label,
    )


def rpw_kernel():
    # J0(r) = 1 - r^2/4 + r^4/64 - ...
    return IsotropicKernel(-0.5, 0.375, name='rpw')


def bargmann_fock_kernel():
    return IsotropicKernel(-1.0, 3.0, name='bargmann-fock')


def _bargmann_fock_density(r):
    return np.exp(-0.5 * np.square(r)) / TWO_PI


def rpw_measure(radius=1.0):
    return validate_measure(SpectralMeasure(MeasureKind.CIRCLE, radius=float(radius),
                                            label='rpw'))


def bargmann_fock_measure():
    return validate_measure(SpectralMeasure(MeasureKind.RADIAL,
                                            radial_density=_bargmann_fock_density,
                                            label='bargmann-fock'))


def circle_atoms(M, radius=1.0, label='rpw'):
    """``M`` equispaced atoms of mass 1/M on the circle of the given radius."""
    if M < 2 or M % 2:
        raise ConfigError('Direction count must be even and >= 2, got {0}'.format(M))
    theta = TWO_PI * np.arange(M) / M
    atoms = tuple((radius * math.cos(a), radius * math.sin(a), 1.0 / M) for a in theta)
    return validate_measure(SpectralMeasure(MeasureKind.ATOMIC, atoms=atoms, label=label))


_NAMED = {
    'rpw': rpw_measure,
    'bargmann-fock': bargmann_fock_measure,
}


def named_measure(name):
    try:
        return _NAMED[name]()
    except KeyError:
        raise ConfigError('Unknown model "{0}"; expected one of {1} or atomic:<file>'.format(
            name, ', '.join(sorted(_NAMED))))


def named_kernel(name):
    kernels = {'rpw': rpw_kernel, 'bargmann-fock': bargmann_fock_kernel}
    try:
        return kernels[name]()
    except KeyError:
        raise ConfigError('No closed-form kernel for model "{0}"'.format(name))


def effective_radius(m, tail=1e-3):
    """Radius outside which at most ``tail`` of the spectral mass lies."""
    if m.kind is MeasureKind.ATOMIC:
        return float(np.max(np.hypot(m.locations[:, 0], m.locations[:, 1])))
    if m.kind is MeasureKind.CIRCLE:
        return float(m.radius)
    g = m.radial_density

    def excess(r):
        return checked_quad(lambda s: TWO_PI * s * g(s), r, np.inf, 'tail mass') - tail

    hi = 1.0
    while excess(hi) > 0:
        hi *= 2.0
        if hi > 1e8:
            raise QuadratureFailure('Spectral tail does not decay')
    return float(optimize.brentq(excess, 0.0, hi, xtol=1e-10))


def covariance(m, lag):
    """Evaluates kappa at an array of lag vectors (trailing axis of size 2)."""
    lag = np.asarray(lag, dtype=float)
    if m.kind is MeasureKind.ATOMIC:
        phase = np.tensordot(lag, m.locations.T, axes=([-1], [0]))
        return np.cos(phase) @ m.masses
    r = np.hypot(lag[..., 0], lag[..., 1])
    if m.kind is MeasureKind.CIRCLE:
        return special.j0(m.radius * r)
    g = m.radial_density

    def hankel(h):
        return checked_quad(lambda s: TWO_PI * s * g(s) * special.j0(s * h), 0, np.inf,
                            'covariance at {0:g}'.format(h))

    return np.vectorize(hankel, otypes=[float])(r)


def measure_from_dict(doc, label=''):
    """Builds a measure from the JSON document layout (frequencies in cycles)."""
    kind = doc.get('kind', MeasureKind.ATOMIC.value)
    label = doc.get('label', label)
    if kind == MeasureKind.ATOMIC.value:
        if doc.get('beta') is not None:
            return SpectralMeasure.five_atom(
                doc.get('alpha', 0.0), doc['beta'], doc['gamma'],
                K=doc.get('K', (1.0, 0.0)), L=doc.get('L', (0.0, 1.0)), label=label)
        return SpectralMeasure.from_cycles(doc.get('atoms', ()), label=label)
    if kind == MeasureKind.CIRCLE.value:
        return SpectralMeasure(MeasureKind.CIRCLE, radius=TWO_PI * float(doc['radius']),
                               label=label)
    raise ConfigError('Measure kind "{0}" cannot be loaded from JSON'.format(kind))


def load_measure(path):
    """Loads and validates a measure from a JSON file."""
    try:
        with open(path) as fd:
            text = fd.read()
    except (IOError, OSError) as e:
        raise ConfigError('Cannot read measure "{0}": {1}'.format(path, e))
    try:
        doc = json.loads(text)
    except ValueError as e:
        lineno = getattr(e, 'lineno', None)
        context = ''
        if lineno is not None and 0 < lineno <= len(text.splitlines()):
            context = '\n    ' + text.splitlines()[lineno - 1]
        raise ConfigError('Failed to parse "{0}": {1}{2}'.format(path, e, context))
    m = validate_measure(measure_from_dict(doc, label=doc.get('label', '')))
    if not m.label:
        m = replace(m, label='atomic')
    return m


def measure_to_dict(m):
    """The JSON document layout of an atomic or circle measure."""
    if m.kind is MeasureKind.ATOMIC:
        doc = {'kind': m.kind.value}
        doc['atoms'] = [[x / TWO_PI, y / TWO_PI, w] for x, y, w in m.atoms]
        if m.beta is not None:
            doc.update(alpha=m.alpha or 0.0, beta=m.beta, gamma=m.gamma,
                       K=list(m.K), L=list(m.L))
        return doc
    if m.kind is MeasureKind.CIRCLE:
        return {'kind': m.kind.value, 'radius': m.radius / TWO_PI}
    raise ConfigError('Radial measures have no JSON form')
