import numpy as np
import pytest
from scipy import integrate

from exlb import degenerate, spectral_model
from exlb.degenerate import DegenerateModel
from exlb.module_utils.errors import ConfigError
from exlb.module_utils.output import read_csv


@pytest.fixture
def model():
    return DegenerateModel(0.1, 0.6, 0.3)


def test_model_validation():
    with pytest.raises(ConfigError):
        DegenerateModel(0.5, 0.5, 0.5)
    with pytest.raises(ConfigError):
        DegenerateModel(0.0, 0.5, 0.5, K=(1.0, 1.0), L=(2.0, 2.0))
    with pytest.raises(ConfigError):
        DegenerateModel(0.0, 1.0, 0.0)


def test_cross_product():
    assert DegenerateModel(0.0, 0.5, 0.5, K=(2.0, 0.0), L=(1.0, 3.0)).cross == 6.0


def test_measure_round_trip(model):
    assert DegenerateModel.from_measure(model.to_measure()) == model


def test_from_atoms():
    atoms = [(0, 0, 0.2), (1, 0, 0.25), (-1, 0, 0.25), (0, 1, 0.15), (0, -1, 0.15)]
    m = DegenerateModel.from_measure(spectral_model.SpectralMeasure.from_cycles(atoms))
    assert (m.alpha, m.beta, m.gamma) == pytest.approx((0.2, 0.5, 0.3))
    assert m.K == pytest.approx((1.0, 0.0))
    assert m.L == pytest.approx((0.0, 1.0))


def test_from_general_atoms_fails():
    with pytest.raises(ConfigError):
        DegenerateModel.from_measure(spectral_model.circle_atoms(8))


def test_null_case_at_zero():
    m = DegenerateModel(0.0, 0.5, 0.5)
    assert degenerate.cns_exact(0.0, m) == 0.0
    assert degenerate.cns_exact(0.5, m) > 0.0


def test_positive_at_zero_with_constant_term(model):
    assert degenerate.cns_exact(0.0, model) > 0.0


@pytest.mark.parametrize('level', [-0.8, 0.3, 1.2])
def test_level_constant_is_symmetric_sum(model, level):
    assert degenerate.cns_exact(level, model) == pytest.approx(
        degenerate.ces_exact(level, model) + degenerate.ces_exact(-level, model))


@pytest.mark.parametrize('m', [DegenerateModel(0.0, 0.6, 0.4), DegenerateModel(0.0, 0.5, 0.5)])
def test_distribution_functions(m):
    assert degenerate.cdf_sum(m.reach, m) == pytest.approx(1.0, abs=1e-8)
    assert degenerate.cdf_diff(m.reach, m) == pytest.approx(1.0, abs=1e-8)
    for c in (0.3, 0.9, 1.7):
        assert degenerate.cdf_diff(c, m) >= degenerate.cdf_sum(c, m)
    total, _ = integrate.quad(lambda s: degenerate.pdf_sum(s, m), 0, m.reach, limit=200)
    assert total == pytest.approx(1.0, abs=1e-6)


def test_tail_identity():
    m = DegenerateModel(0.0, 0.6, 0.4)
    level = 0.8

    def gap(x):
        p_max, p_lower = degenerate.degenerate_densities(x, m)
        return p_max - p_lower

    tail, _ = integrate.quad(gap, level, m.reach, limit=200)
    assert tail == pytest.approx(degenerate.ces_exact(level, m), rel=1e-5, abs=1e-8)


def test_densities_without_constant_term():
    m = DegenerateModel(0.0, 0.6, 0.4)
    assert degenerate.degenerate_densities(-0.3, m) == (0.0, 0.0)
    assert degenerate.degenerate_densities(-1e-9, m)[1] == 0.0
    p_max, p_lower = degenerate.degenerate_densities(0.0, m)
    assert p_max == 0.0
    # p_D(0) = 2 / (beta gamma) * integral of y^2 exp(-b y^2), b = (1/beta + 1/gamma) / 2
    b = (1 / 0.6 + 1 / 0.4) / 2.0
    assert p_lower == pytest.approx(2.0 / 0.24 * np.sqrt(np.pi) / (4.0 * b ** 1.5), rel=1e-7)


@pytest.mark.parametrize('level', [-1.0, 0.0, 1.0])
def test_tail_identity_with_constant_term(level):
    m = DegenerateModel(0.3, 0.4, 0.3, K=(2.0, 0.0), L=(1.0, 3.0))
    assert m.cross == 6.0

    def gap(x):
        p_max, p_lower = degenerate.degenerate_densities(x, m)
        return p_max - p_lower

    upper = m.reach + 10.0 * np.sqrt(m.alpha)
    tail, _ = integrate.quad(gap, level, upper, limit=200)
    assert tail == pytest.approx(degenerate.ces_exact(level, m), abs=1e-6)


def test_quadrature_matches_sampling(model):
    levels = [-1.0, 0.0, 0.5, 1.5]
    mc = degenerate.mc_constants(levels, model, 200000, seed=3)
    for i, level in enumerate(levels):
        assert abs(mc.ces[i] - degenerate.ces_exact(level, model)) <= 4 * mc.ces_se[i] + 1e-4
        assert abs(mc.cns[i] - degenerate.cns_exact(level, model)) <= 4 * mc.cns_se[i] + 1e-4


@pytest.mark.slow
@pytest.mark.parametrize('alpha, beta', [(0.0, 0.5), (0.1, 0.6), (0.3, 0.4), (0.5, 0.25),
                                         (0.7, 0.2)])
def test_quadrature_matches_large_sample(alpha, beta):
    m = DegenerateModel(alpha, beta, 1.0 - alpha - beta)
    levels = [-1.0, -0.5, 0.0, 0.5, 1.5]
    mc = degenerate.mc_constants(levels, m, 10 ** 7, seed=17)
    for i, level in enumerate(levels):
        assert abs(mc.ces[i] - degenerate.ces_exact(level, m)) <= 3 * mc.ces_se[i] + 1e-4
        assert abs(mc.cns[i] - degenerate.cns_exact(level, m)) <= 3 * mc.cns_se[i] + 1e-4


def test_sampling_reproducible(model):
    a = degenerate.mc_constants([0.5], model, 5000, seed=11, chunk=1000)
    b = degenerate.mc_constants([0.5], model, 5000, seed=11, chunk=1000)
    assert np.array_equal(a.ces, b.ces)


def test_nonergodic_limit(model):
    draws = degenerate.nonergodic_limit(0.5, model, seed=5, size=100000, set_kind='level')
    assert set(np.unique(draws)) <= {0.0, model.cross}
    se = draws.std() / np.sqrt(len(draws))
    assert abs(draws.mean() - degenerate.cns_exact(0.5, model)) <= 4 * se + 1e-4
    assert degenerate.nonergodic_limit(0.5, model, seed=5) in (0.0, model.cross)
    with pytest.raises(ConfigError):
        degenerate.nonergodic_limit(0.5, model, seed=5, set_kind='nodal')


def test_figure_models():
    models = degenerate.figure_models()
    pairs = {(m.alpha, round(m.beta - m.gamma, 9)) for m in models}
    assert len(models) == 8
    assert {(0.0, 0.0), (0.0, 0.5), (0.0, 0.9)} <= pairs
    assert {(0.1, 0.0), (0.3, 0.0), (0.6, 0.0)} <= pairs
    assert all(m.gamma > 0 for m in models)


def test_curve_csv(tmp_path):
    m = DegenerateModel(0.0, 0.5, 0.5)
    rows = degenerate.curve_table([-0.5, 0.0, 0.5], m)
    schema, header, got = read_csv(degenerate.write_curve_csv(str(tmp_path / 'c.csv'), rows))
    assert schema == 'degenerate/1'
    assert header == ['level', 'cns_exact', 'ces_exact', 'p_max', 'p_lower_saddle']
    assert got[1][:2] == ['0.0', '0.0']
    assert float(got[0][1]) == pytest.approx(float(got[2][1]))
