import math
from dataclasses import replace

import numpy as np
import pytest
from scipy import special

from exlb import spectral_model
from exlb.module_utils.errors import (ConfigError, DegenerateSupport, InvalidDerivatives,
                                      MassNotOne, NonHermitian)
from exlb.spectral_model import MeasureKind, SpectralMeasure


def test_five_atom_is_degenerate(five_atom):
    assert five_atom.validated
    assert five_atom.degenerate
    assert len(five_atom.atoms) == 5
    assert five_atom.masses.sum() == pytest.approx(1.0)


def test_five_atom_strict_raises():
    m = SpectralMeasure.five_atom(0.0, 0.5, 0.5)
    with pytest.raises(DegenerateSupport):
        spectral_model.validate_measure(m, strict=True)


def test_missing_mirror_atom():
    m = SpectralMeasure.from_cycles([(1, 0, 0.5), (0, 1, 0.5)])
    with pytest.raises(NonHermitian):
        spectral_model.validate_measure(m)


def test_symmetry_checked_before_mass():
    with pytest.raises(NonHermitian):
        spectral_model.validate_measure(SpectralMeasure.from_cycles([(1, 0, 0.5)]))


def test_mirror_mass_mismatch():
    m = SpectralMeasure.from_cycles([(1, 0, 0.6), (-1, 0, 0.4)])
    with pytest.raises(NonHermitian):
        spectral_model.validate_measure(m)


def test_mass_not_one():
    m = SpectralMeasure.from_cycles([(1, 0, 0.3), (-1, 0, 0.3)])
    with pytest.raises(MassNotOne):
        spectral_model.validate_measure(m)


def test_duplicate_atoms_merge():
    m = SpectralMeasure.from_cycles([(1, 0, 0.25), (1, 0, 0.25), (-1, 0, 0.5)])
    m = spectral_model.validate_measure(m)
    assert len(m.atoms) == 2
    assert np.allclose(m.masses, 0.5)


def test_radial_mass_checked():
    m = SpectralMeasure(MeasureKind.RADIAL,
                        radial_density=lambda r: 1.01 * np.exp(-0.5 * r * r) / (2 * np.pi))
    with pytest.raises(MassNotOne):
        spectral_model.validate_measure(m)


@pytest.mark.parametrize('M, degenerate', [(4, True), (8, False), (64, False)])
def test_circle_atoms_support(M, degenerate):
    assert spectral_model.circle_atoms(M).degenerate is degenerate


def test_circle_atoms_needs_even_count():
    with pytest.raises(ConfigError):
        spectral_model.circle_atoms(7)


PARALLEL_LINE_SUPPORT = [(0, 1), (0, -1), (1, 1), (-1, -1), (2, 1), (-2, -1)]


def test_three_directions_are_not_degenerate():
    # Two parallel lines, y = 1 and y = -1, but three directions through 0.
    m = SpectralMeasure.from_cycles([(x, y, 1 / 6.0) for x, y in PARALLEL_LINE_SUPPORT])
    m = spectral_model.validate_measure(m, strict=True)
    assert not m.degenerate
    assert spectral_model.gradient_covariance_det(m) > 0


def test_two_lines_through_origin_are_degenerate():
    atoms = [(0, 0, 0.2), (1, 2, 0.1), (-1, -2, 0.1), (3, 6, 0.1), (-3, -6, 0.1),
             (2, -1, 0.2), (-2, 1, 0.2)]
    m = spectral_model.validate_measure(SpectralMeasure.from_cycles(atoms))
    assert m.degenerate
    with pytest.raises(DegenerateSupport):
        spectral_model.validate_measure(SpectralMeasure.from_cycles(atoms), strict=True)


def test_in_two_lines():
    assert spectral_model.in_two_lines([(0, 0)])
    assert spectral_model.in_two_lines([(1, 0), (-2, 0), (0, 3), (0, 0)])
    assert not spectral_model.in_two_lines(PARALLEL_LINE_SUPPORT)
    assert not spectral_model.in_two_lines([(1, 0), (0, 1), (1, 1)])


@pytest.mark.parametrize('kernel, lam, eta_sq', [
    (spectral_model.rpw_kernel, math.sqrt(2.0), 8.0),
    (spectral_model.bargmann_fock_kernel, 1.0, 2.0),
])
def test_isotropic_params(kernel, lam, eta_sq):
    got = spectral_model.isotropic_params(kernel())
    assert got == pytest.approx((lam, eta_sq))


@pytest.mark.parametrize('k2, k4', [(0.5, 1.0), (-1.0, -1.0), (-1.0, 1.0)])
def test_invalid_derivatives(k2, k4):
    with pytest.raises(InvalidDerivatives):
        spectral_model.isotropic_params(spectral_model.IsotropicKernel(k2, k4))


@pytest.mark.parametrize('name', ['rpw', 'bargmann-fock'])
def test_moments_agree_with_kernel_derivatives(name):
    from_moments = spectral_model.kernel_from_measure(spectral_model.named_measure(name))
    kernel = spectral_model.named_kernel(name)
    assert from_moments.K_second_deriv_at_0 == pytest.approx(kernel.K_second_deriv_at_0,
                                                              rel=0, abs=1e-10)
    assert from_moments.K_fourth_deriv_at_0 == pytest.approx(kernel.K_fourth_deriv_at_0,
                                                              rel=0, abs=1e-10)
    got = spectral_model.isotropic_params(from_moments)
    assert got == pytest.approx(spectral_model.isotropic_params(kernel), rel=1e-10)


def test_kernel_from_rpw(rpw):
    k = spectral_model.kernel_from_measure(rpw)
    assert (k.K_second_deriv_at_0, k.K_fourth_deriv_at_0) == pytest.approx((-0.5, 0.375))


def test_kernel_needs_isotropic(five_atom):
    with pytest.raises(ConfigError):
        spectral_model.kernel_from_measure(five_atom)


def test_covariance(rpw, bargmann_fock, five_atom):
    lag = np.array([[1.0, 0.0], [0.0, 2.5]])
    assert np.allclose(spectral_model.covariance(rpw, lag), special.j0([1.0, 2.5]))
    assert np.allclose(spectral_model.covariance(bargmann_fock, lag),
                       np.exp(-0.5 * np.array([1.0, 6.25])), atol=1e-7)
    # 0.1 + 0.6 cos(pi) + 0.3 cos(0)
    assert spectral_model.covariance(five_atom, [0.5, 0.0]) == pytest.approx(-0.2)


def test_gradient_covariance_det(five_atom):
    assert spectral_model.gradient_covariance_det(five_atom) == pytest.approx(
        0.6 * 0.3 * (2 * np.pi) ** 4)


def test_gradient_covariance_det_of_named_models(rpw, bargmann_fock):
    assert spectral_model.gradient_covariance_det(rpw) == pytest.approx(0.25, abs=1e-12)
    assert spectral_model.gradient_covariance_det(bargmann_fock) == pytest.approx(
        1.0, abs=1e-9)


def test_gradient_covariance_det_on_one_axis():
    m = SpectralMeasure.from_cycles([(1, 0, 0.3), (-1, 0, 0.3), (2, 0, 0.2), (-2, 0, 0.2)])
    assert spectral_model.gradient_covariance_det(m) == pytest.approx(0.0, abs=1e-9)


@pytest.mark.parametrize('angle', [0.3, 1.0, 2.5])
def test_gradient_covariance_det_rotation_invariant(angle):
    c, s = math.cos(angle), math.sin(angle)
    base = [(x, y, 1 / 6.0) for x, y in PARALLEL_LINE_SUPPORT]
    turned = [(c * x - s * y, s * x + c * y, w) for x, y, w in base]
    want = spectral_model.gradient_covariance_det(SpectralMeasure.from_cycles(base))
    got = spectral_model.gradient_covariance_det(SpectralMeasure.from_cycles(turned))
    assert got == pytest.approx(want, rel=1e-10)


def test_validation_is_idempotent(five_atom):
    assert spectral_model.validate_measure(five_atom) is five_atom
    m = SpectralMeasure.from_cycles([(x, y, 1 / 6.0) for x, y in PARALLEL_LINE_SUPPORT])
    once = spectral_model.validate_measure(m)
    twice = spectral_model.validate_measure(replace(once, validated=False))
    assert twice.atoms == once.atoms
    assert twice.degenerate == once.degenerate
    assert (spectral_model.gradient_covariance_det(twice)
            == spectral_model.gradient_covariance_det(once))


def test_effective_radius(rpw, bargmann_fock):
    assert spectral_model.effective_radius(rpw) == 1.0
    assert spectral_model.effective_radius(bargmann_fock) == pytest.approx(
        math.sqrt(2 * math.log(1000.0)), rel=1e-6)


def test_load_measure_converts_cycles(measure_file):
    path = measure_file({'kind': 'AtomicSymmetric', 'label': 'pair',
                         'atoms': [[0.5, 0, 0.5], [-0.5, 0, 0.5]]})
    m = spectral_model.load_measure(path)
    assert m.label == 'pair'
    assert np.allclose(np.abs(m.locations[:, 0]), math.pi)
    assert spectral_model.measure_to_dict(m)['atoms'][0][2] == pytest.approx(0.5)


def test_load_five_atom_form(measure_file):
    path = measure_file({'alpha': 0.2, 'beta': 0.5, 'gamma': 0.3, 'K': [1, 0], 'L': [1, 1]})
    m = spectral_model.load_measure(path)
    assert m.degenerate
    assert m.label == 'atomic'


def test_load_measure_parse_error(measure_file, tmp_path):
    path = tmp_path / 'broken.json'
    path.write_text('{"kind": "AtomicSymmetric",\n "atoms": [1, 2,]}')
    with pytest.raises(ConfigError, match='atoms'):
        spectral_model.load_measure(str(path))


def test_named_measure_unknown():
    with pytest.raises(ConfigError):
        spectral_model.named_measure('gaussian')
