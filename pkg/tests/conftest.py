"""
Pytest configuration and fixtures for EllSpin tests.
"""
import os
import pytest
import numpy as np

from ellspin import config
from ellspin.config import Settings
from ellspin.cache.operator_cache import get_operator_cache
from ellspin.chain import ChainParams
from ellspin.elliptic import EllipticParams
from ellspin.qmbs import QmbsParams


@pytest.fixture
def test_settings():
    """Create test settings."""
    return Settings(
        debug=True,
        draws_per_check=3,
        jobs=1,
        log_level="DEBUG",
        log_format="console",
    )


@pytest.fixture
def rng():
    """Seeded random generator."""
    return np.random.default_rng(20240611)


@pytest.fixture
def elliptic_params():
    """Elliptic branch, product over the hyperbolic nome."""
    return EllipticParams(kappa=0.9, period=5.0)


@pytest.fixture
def modular_params():
    """Small kappa N: the modular product is used."""
    return EllipticParams(kappa=0.3, period=4.0)


@pytest.fixture
def trig_params():
    """kappa = 0, theta is a pure sine."""
    return EllipticParams(kappa=0.0, period=4.0)


@pytest.fixture
def chain_params():
    """Generic complex parameters on a short chain."""
    return ChainParams(n_sites=4, kappa=0.8, eta=0.3 + 0.05j, a=0.4 - 0.2j)


@pytest.fixture
def real_spectrum_params():
    """eta imaginary and a real: the chiral spectra are real."""
    return ChainParams(n_sites=5, kappa=0.7, eta=0.4j, a=1.3)


@pytest.fixture
def qmbs_params():
    """Two-site difference operators."""
    return QmbsParams(n_sites=2, kappa=0.8, eta=0.3 + 0.05j, a=0.4 - 0.2j)


@pytest.fixture
def qmbs_params_3():
    """Three-site difference operators."""
    return QmbsParams(n_sites=3, kappa=0.7, eta=0.25 + 0.03j, a=0.3 + 0.1j)


@pytest.fixture(autouse=True)
def reset_env():
    """Reset environment variables and cached settings after each test."""
    original_env = os.environ.copy()
    yield
    os.environ.clear()
    os.environ.update(original_env)
    config._settings = None


@pytest.fixture
def clear_operator_cache():
    """Start from an empty operator cache."""
    cache = get_operator_cache()
    cache.clear()
    yield cache
    cache.clear()
