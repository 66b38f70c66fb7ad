import numpy as np
import pytest

from larmorclock.config import NumericsSpec, RunConfig


@pytest.fixture
def slow_config():
    """Natural units, sigma0=1, u=1, d=5: the marginal-regime workhorse."""
    return RunConfig.natural(sigma0=1.0, k0=1.0, d=5.0, B=1.0, mu=1e-6)


@pytest.fixture
def fast_config():
    """Natural units, sigma0=1, u=3, d=5: clears the no-turning bound."""
    return RunConfig.natural(sigma0=1.0, k0=3.0, d=5.0, B=1.0, mu=1e-6)


@pytest.fixture
def nongaussian_config():
    """Asymmetric packet, beta_shape=4/pi, k0 = 5*sigma_k."""
    return RunConfig.natural(kind="nongaussian", sigma_k=0.5, k0=2.5, d=5.0,
                             B=1.0, mu=1e-6, alpha=0.5)


def gaussian_moments(sigma0, k0, t, span=14.0, n=2 ** 15):
    """Independent mean/variance of |psi|^2 by direct numeric moments."""
    from larmorclock.wavepacket import gaussian_amplitude, packet_width

    sig = float(packet_width(t, sigma0))
    center = k0 * t  # natural units: u = k0
    x = center + np.linspace(-span, span, n) * sig
    rho = np.abs(gaussian_amplitude(x, t, sigma0, k0)) ** 2
    norm = np.trapezoid(rho, x)
    mean = np.trapezoid(x * rho, x) / norm
    var = np.trapezoid((x - mean) ** 2 * rho, x) / norm
    return norm, mean, var
