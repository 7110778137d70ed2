import json

import numpy as np
import pytest

from exlb import spectral_model
from exlb.field_sampler import GridSpec


@pytest.fixture
def rpw():
    return spectral_model.rpw_measure()


@pytest.fixture
def bargmann_fock():
    return spectral_model.bargmann_fock_measure()


@pytest.fixture
def five_atom():
    return spectral_model.validate_measure(
        spectral_model.SpectralMeasure.five_atom(0.1, 0.6, 0.3, label='five'))


@pytest.fixture
def small_spec():
    return GridSpec(10.0, 41)


@pytest.fixture
def ridge():
    """cos(2 pi x) + cos(2 pi y) on [0, 2]^2 with 64 points per side."""
    xs = np.linspace(0.0, 2.0, 64)
    return np.cos(2 * np.pi * xs)[None, :] + np.cos(2 * np.pi * xs)[:, None]


@pytest.fixture
def bump():
    xs = np.arange(21) - 10.0
    return np.exp(-(xs[None, :] ** 2 + xs[:, None] ** 2) / 20.0)


@pytest.fixture
def noise():
    return np.random.default_rng(2024).standard_normal((30, 30))


@pytest.fixture
def measure_file(tmp_path):
    def write(doc):
        path = tmp_path / 'measure.json'
        path.write_text(json.dumps(doc))
        return str(path)
    return write
