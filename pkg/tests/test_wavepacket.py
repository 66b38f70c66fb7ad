import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from larmorclock.config import NumericsSpec, PacketSpec
from larmorclock.errors import (ConfigError, GridTooSmallError,
                                OutOfDomainError, PhaseUndefinedError)
from larmorclock.wavepacket import (GaussianField, SpectralField,
                                    continuity_residual, current_from_samples,
                                    evolve_spectral, gaussian_amplitude,
                                    gaussian_current, gaussian_phase,
                                    nongaussian_momentum, nongaussian_norm,
                                    nongaussian_position, packet_width)

from conftest import gaussian_moments


class TestGaussianAmplitude:
    def test_peak_value_at_origin(self):
        # unit-width packet at rest: peak amplitude (2 pi)^(-1/4)
        val = gaussian_amplitude(0.0, 0.0, 1.0, 0.0)
        assert_allclose(val, (2.0 * math.pi) ** -0.25, rtol=1e-14)

    def test_gaussian_shape_at_one_width(self):
        ratio = (abs(gaussian_amplitude(1.0, 0.0, 1.0, 0.0)) ** 2
                 / abs(gaussian_amplitude(0.0, 0.0, 1.0, 0.0)) ** 2)
        assert_allclose(ratio, math.exp(-0.5), rtol=1e-14)

    def test_spread_center_and_variance_by_moments(self):
        # independent oracle: numeric moments of the evolved density
        norm, mean, var = gaussian_moments(sigma0=1.0, k0=1.0, t=2.0)
        assert_allclose(norm, 1.0, atol=1e-12)
        assert_allclose(mean, 2.0, atol=1e-10)
        assert_allclose(var, 2.0, atol=1e-9)

    def test_carrier_momentum_shows_in_phase(self):
        x = np.linspace(-0.2, 0.2, 5)
        psi = gaussian_amplitude(x, 0.0, 1.0, 3.0)
        assert_allclose(np.angle(psi), 3.0 * x, atol=1e-12)

    @given(st.floats(0.5, 3.0), st.floats(-2.0, 2.0), st.floats(0.0, 10.0))
    @settings(max_examples=25, deadline=None)
    def test_norm_preserved(self, sigma0, k0, t):
        x = k0 * t + np.linspace(-14, 14, 2 ** 13) * float(packet_width(t, sigma0))
        rho = np.abs(gaussian_amplitude(x, t, sigma0, k0)) ** 2
        assert_allclose(np.trapezoid(rho, x), 1.0, atol=1e-9)


class TestWidth:
    def test_initial(self):
        assert packet_width(0.0, 1.7) == 1.7

    def test_spread_at_two(self):
        # matches the variance measured from the density itself
        _, _, var = gaussian_moments(sigma0=1.0, k0=1.0, t=2.0)
        assert_allclose(packet_width(2.0, 1.0), math.sqrt(var), rtol=1e-9)
        assert_allclose(packet_width(2.0, 1.0), math.sqrt(2.0), rtol=1e-14)

    def test_asymptotically_linear(self):
        t = 300.0  # beta * t^2 = 22500 > 1e4
        assert_allclose(packet_width(2 * t, 1.0) / packet_width(t, 1.0), 2.0, rtol=1e-2)


class TestDensityCurrent:
    def test_current_at_packet_center(self):
        t, u = 3.0, 1.0
        sig = float(packet_width(t, 1.0))
        expected = u / math.sqrt(2.0 * math.pi * sig * sig)
        assert_allclose(gaussian_current(u * t, t, 1.0, u), expected, rtol=1e-13)

    def test_spot_value_against_finite_difference_current(self):
        # oracle: J = (hbar/m) Im(psi* dpsi/dx) with dpsi by central differences
        x, t, h = 5.0, 3.1390, 1e-6
        psi = gaussian_amplitude(x, t, 1.0, 1.0)
        dpsi = (gaussian_amplitude(x + h, t, 1.0, 1.0)
                - gaussian_amplitude(x - h, t, 1.0, 1.0)) / (2.0 * h)
        oracle = float(np.imag(np.conj(psi) * dpsi))
        assert_allclose(oracle, 0.1848496103, rtol=1e-7)
        assert_allclose(gaussian_current(x, t, 1.0, 1.0), oracle, rtol=1e-9)
        assert_allclose(gaussian_current(x, t, 1.0, 1.0), 0.18486, atol=2e-5)

    def test_plane_wave_flux(self):
        # central differences are exact up to 1 - sinc(k*dx) ~ (k*dx)^2/6
        k, amp = 2.0, 0.7
        x = np.linspace(0.0, 10.0, 40001)
        psi = amp * np.exp(1j * k * x)
        j = current_from_samples(psi, x[1] - x[0])
        assert_allclose(j[5:-5], amp ** 2 * k, rtol=1e-7)

    def test_density_never_negative(self):
        field = GaussianField(1.0, 1.0)
        rho, _ = field.density_current(np.linspace(-30, 30, 101), 2.0)
        assert np.all(rho >= 0)

    def test_current_positive_at_exit_for_sane_regimes(self):
        field = GaussianField(1.0, 3.0)
        ts = np.linspace(1e-6, 50.0, 2000)
        assert np.all(field.current(5.0, ts) > 0)


class TestPhase:
    def test_initial_phase_is_carrier(self):
        x = np.linspace(-3, 3, 7)
        assert_allclose(gaussian_phase(x, 0.0, 1.0, 2.0), 2.0 * x, atol=1e-13)

    def test_zero_momentum_zero_phase(self):
        x = np.linspace(-3, 3, 7)
        assert_allclose(gaussian_phase(x, 0.0, 1.0, 0.0), 0.0, atol=1e-13)

    def test_gradient_matches_flow_velocity(self):
        # (1/m) dS/dx must be J/rho; finite-difference check on a 3-sigma window
        field = GaussianField(1.0, 1.0)
        t = 2.0
        sig = float(field.width(t))
        x = field.u * t + np.linspace(-3, 3, 401) * sig
        h = 1e-6
        ds = (field.phase(x + h, t) - field.phase(x - h, t)) / (2.0 * h)
        rho, j = field.density_current(x, t)
        assert np.max(np.abs(ds - j / rho) / np.abs(j / rho)) < 1e-6

    def test_grid_phase_matches_closed_form(self):
        packet = PacketSpec.gaussian(1.0, 1.5)
        state = evolve_spectral(packet, 1.0, NumericsSpec(x_points=2 ** 13), t_max=2.0)
        s_grid = state.phase_unwrapped()
        window = np.abs(state.x - 1.5) < 3.0
        s_closed = gaussian_phase(state.x[window], 1.0, 1.0, 1.5)
        # unwrapped phases may differ by the same 2*pi*hbar*n everywhere
        diff = s_grid[window] - s_closed
        diff -= 2.0 * math.pi * round(np.mean(diff) / (2.0 * math.pi))
        assert np.max(np.abs(diff)) < 1e-7

    def test_node_raises(self):
        from larmorclock.wavepacket import GridState

        x = np.linspace(-1, 1, 65)
        psi = (x + 0.0j)  # density node at x=0
        state = GridState(x=x, psi=psi, t=0.0)
        with pytest.raises(PhaseUndefinedError):
            state.phase_unwrapped(phase_floor=1e-10)


class TestNonGaussian:
    def test_symmetric_limit_is_unit_normalized(self):
        assert_allclose(nongaussian_norm(0.5, 2.5, 0.0, 4.0 / math.pi), 1.0, atol=1e-12)

    def test_symmetric_limit_reduces_to_gaussian(self):
        packet = PacketSpec.nongaussian(sigma_k=0.5, k0=2.5, alpha=0.0)
        x = np.linspace(-5, 5, 101)
        expected = gaussian_amplitude(x, 0.0, 1.0, 2.5)
        assert np.max(np.abs(nongaussian_position(x, packet) - expected)) < 1e-10

    def test_momentum_norm_by_independent_quadrature(self):
        # oracle: trapezoid on a different grid than the normalizer uses
        packet = PacketSpec.nongaussian(sigma_k=0.5, k0=2.5, alpha=1.0)
        k = np.linspace(2.5 - 9.0, 2.5 + 9.0, 30011)
        norm = np.trapezoid(np.abs(nongaussian_momentum(k, packet)) ** 2, k)
        assert_allclose(norm, 1.0, atol=1e-10)

    def test_asymmetry_shifts_momentum_mean(self):
        for alpha in (0.4, -0.4):
            packet = PacketSpec.nongaussian(sigma_k=0.5, k0=2.5, alpha=alpha)
            k = np.linspace(2.5 - 9.0, 2.5 + 9.0, 20001)
            w = np.abs(nongaussian_momentum(k, packet)) ** 2
            mean = np.trapezoid(k * w, k) / np.trapezoid(w, k)
            assert math.copysign(1.0, mean - 2.5) == math.copysign(1.0, alpha)
            assert abs(mean - 2.5) > 1e-3

    @pytest.mark.parametrize("alpha", [0.25, 0.5, 1.0])
    def test_position_closed_form_vs_spectral_transform(self, alpha):
        packet = PacketSpec.nongaussian(sigma_k=0.5, k0=2.5, alpha=alpha)
        n = 2 ** 15
        x = np.linspace(-20.0, 20.0, n, endpoint=False)
        dx = x[1] - x[0]
        k = 2.0 * math.pi * np.fft.fftfreq(n, d=dx)
        phi = nongaussian_momentum(k, packet)
        psi_dft = math.sqrt(2.0 * math.pi) / dx * np.fft.ifft(phi * np.exp(1j * k * x[0]))
        gap = np.sqrt(np.trapezoid(np.abs(psi_dft - nongaussian_position(x, packet)) ** 2, x))
        assert gap < 1e-8

    def test_parity_structure_at_zero_carrier(self):
        packet = PacketSpec.nongaussian(sigma_k=0.5, k0=0.0, alpha=0.7)
        x = np.linspace(0.1, 3.0, 17)
        assert_allclose(nongaussian_position(-x, packet),
                        np.conj(nongaussian_position(x, packet)), rtol=1e-12)

    def test_closed_form_requires_matching_shape(self):
        packet = PacketSpec.nongaussian(sigma_k=0.5, k0=2.5, alpha=0.5, beta_shape=2.0)
        with pytest.raises(ConfigError, match="4/pi"):
            nongaussian_position(0.0, packet)


class TestSpectralEvolution:
    def test_identity_at_time_zero(self):
        packet = PacketSpec.nongaussian(sigma_k=0.5, k0=2.5, alpha=0.5)
        state = evolve_spectral(packet, 0.0, NumericsSpec(x_points=2 ** 13), t_max=1.0)
        expected = nongaussian_position(state.x, packet)
        assert np.max(np.abs(state.psi - expected)) < 1e-9

    def test_gaussian_pointwise_agreement(self):
        packet = PacketSpec.gaussian(1.0, 1.0)
        state = evolve_spectral(packet, 2.0, NumericsSpec(x_points=2 ** 14), t_max=2.0)
        expected = gaussian_amplitude(state.x, 2.0, 1.0, 1.0)
        assert np.max(np.abs(state.psi - expected)) < 1e-8

    def test_norm_drift_over_hundred_snapshots(self):
        packet = PacketSpec.gaussian(1.0, 1.0)
        field = SpectralField(packet, NumericsSpec(x_points=2 ** 13), t_max=5.0)
        drift = max(abs(field.snapshot(t).norm - 1.0)
                    for t in np.linspace(0.0, 5.0, 100))
        assert drift < 1e-10

    def test_grid_too_small(self):
        packet = PacketSpec.gaussian(1.0, 1.0)
        field = SpectralField(packet, NumericsSpec(x_points=2 ** 12, x_span_sigmas=10.0),
                              t_max=1.0)
        with pytest.raises(GridTooSmallError, match="widen the grid"):
            field.snapshot(200.0)

    def test_out_of_domain(self):
        packet = PacketSpec.gaussian(1.0, 1.0)
        field = SpectralField(packet, NumericsSpec(x_points=2 ** 12), t_max=1.0)
        with pytest.raises(OutOfDomainError):
            field.psi(1e6, 0.5)


class TestContinuity:
    def test_gaussian_residual(self):
        field = GaussianField(1.0, 1.0)
        residual, scale = continuity_residual(field, 2.0, NumericsSpec(x_points=2 ** 13))
        assert residual < 1e-6 * scale

    def test_nongaussian_residual(self):
        packet = PacketSpec.nongaussian(sigma_k=0.5, k0=2.5, alpha=0.5)
        field = SpectralField(packet, NumericsSpec(x_points=2 ** 16, x_span_sigmas=10.0),
                              t_max=2.0)
        residual, scale = continuity_residual(field, 1.0)
        assert residual < 1e-6 * scale
