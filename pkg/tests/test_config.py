import math

import numpy as np
import pytest
from scipy.optimize import brentq

from larmorclock.config import (NumericsSpec, PacketSpec, RotatorSpec,
                                RunConfig, UnitSystem, check_regime,
                                derived_parameters, read_flat_file,
                                spreading_rate)
from larmorclock.bohm import velocity_closed
from larmorclock.errors import ConfigError


class TestDerivedParameters:
    def test_unit_width_packet(self):
        cfg = RunConfig.natural(sigma0=1.0, k0=1.0, d=5.0, B=0.0, mu=0.0)
        assert derived_parameters(cfg).beta_spread == 0.25

    def test_no_field_means_no_precession(self):
        for b, mu in ((0.0, 2.0), (2.0, 0.0)):
            cfg = RunConfig.natural(sigma0=1.0, k0=1.0, d=5.0, B=b, mu=mu)
            assert derived_parameters(cfg).omega == 0.0

    def test_wide_packet_oracle(self):
        # one-line re-evaluation of the spreading rate
        hbar, mass, sigma0 = 1.0, 1.0, 2.0
        expected = hbar ** 2 / (4.0 * mass ** 2 * sigma0 ** 4)
        cfg = RunConfig.natural(sigma0=2.0, k0=1.0, d=5.0, B=0.0, mu=0.0)
        assert derived_parameters(cfg).beta_spread == expected == pytest.approx(1.0 / 64.0)

    def test_scaling_is_exact_inverse_fourth_power(self):
        assert spreading_rate(2.0) == spreading_rate(1.0) / 16.0

    def test_pure_function(self):
        cfg = RunConfig.natural(sigma0=1.3, k0=2.0, d=4.0, B=0.5, mu=1e-5)
        a = derived_parameters(cfg)
        b = derived_parameters(cfg)
        assert (a.beta_spread, a.omega, a.energy_ratio) == (b.beta_spread, b.omega, b.energy_ratio)

    def test_natural_mode_u_equals_k0(self):
        cfg = RunConfig.natural(sigma0=1.0, k0=2.7, d=5.0, B=0.0, mu=0.0)
        assert cfg.packet.u == 2.7

    def test_rejects_nonpositive_width(self):
        with pytest.raises(ConfigError):
            RunConfig.natural(sigma0=-1.0, k0=1.0, d=5.0, B=0.0, mu=0.0)
        with pytest.raises(ConfigError):
            spreading_rate(1.0, hbar=0.0)


class TestCheckRegime:
    def _turning_oracle(self, u, x0, beta):
        """Scan the closed-form velocity for a sign change."""
        ts = np.linspace(0.0, 1e4, 20001)
        v = velocity_closed(x0, ts, u, beta)
        return bool(np.any(v <= 0))

    def test_slow_packet_can_turn(self, slow_config):
        # a trajectory from -5 sigma reverses, so the 5-sigma guarantee fails
        assert self._turning_oracle(1.0, -5.0, 0.25)
        report = check_regime(slow_config)
        assert not report.no_turning_ok
        assert report.turning_bound == pytest.approx(2.5)

    def test_fast_packet_cannot_turn(self, fast_config):
        assert not self._turning_oracle(3.0, -5.0, 0.25)
        assert check_regime(fast_config).no_turning_ok

    def test_no_field_is_larmor_safe(self):
        cfg = RunConfig.natural(sigma0=1.0, k0=3.0, d=5.0, B=0.0, mu=2.0)
        report = check_regime(cfg)
        assert report.larmor_ok
        assert report.energy_ratio == 0.0

    def test_spin_term_small_for_fast_carrier(self):
        cfg = RunConfig.natural(sigma0=1.0, k0=200.0, d=5.0, B=1.0, mu=1e-4)
        report = check_regime(cfg)
        assert report.spin_term_ok
        assert report.all_ok

    def test_spin_term_large_for_slow_carrier(self, slow_config):
        assert not check_regime(slow_config).spin_term_ok


class TestConfigFiles:
    CONTENT = """
    # comment line
    units.mode = natural
    packet.kind = gaussian
    packet.sigma0 = 1.0
    packet.k0 = 3.0   # inline comment
    rotator.d = 5.0
    rotator.B = 1.0
    rotator.mu = 1e-6
    numerics.x_points = 4096
    seed = 7
    """

    def _write(self, tmp_path, text, name="run.cfg"):
        p = tmp_path / name
        p.write_text(text, encoding="utf-8")
        return p

    def test_roundtrip(self, tmp_path):
        cfg = RunConfig.from_file(self._write(tmp_path, self.CONTENT))
        assert cfg.packet.k0 == 3.0
        assert cfg.packet.u == 3.0
        assert cfg.rotator.omega == pytest.approx(1e-6)
        assert cfg.numerics.x_points == 4096
        assert cfg.seed == 7

    def test_unknown_key_is_fatal(self, tmp_path):
        bad = self.CONTENT + "\npacket.sigma_zero = 2.0\n"
        with pytest.raises(ConfigError, match="sigma_zero"):
            RunConfig.from_file(self._write(tmp_path, bad))

    def test_duplicate_key_is_fatal(self, tmp_path):
        bad = self.CONTENT + "\nseed = 9\n"
        with pytest.raises(ConfigError, match="duplicate"):
            RunConfig.from_file(self._write(tmp_path, bad))

    def test_digest_stable_under_reordering(self, tmp_path):
        lines = [l for l in self.CONTENT.strip().splitlines() if l.strip()]
        shuffled = "\n".join(lines[::-1])
        a = RunConfig.from_file(self._write(tmp_path, self.CONTENT, "a.cfg"))
        b = RunConfig.from_file(self._write(tmp_path, shuffled, "b.cfg"))
        assert a.digest == b.digest

    def test_digest_sensitive_to_values(self, tmp_path):
        a = RunConfig.from_file(self._write(tmp_path, self.CONTENT, "a.cfg"))
        b = RunConfig.from_file(self._write(tmp_path,
                                            self.CONTENT.replace("seed = 7", "seed = 8"),
                                            "b.cfg"))
        assert a.digest != b.digest

    def test_missing_required_key(self, tmp_path):
        text = "packet.sigma0 = 1.0\npacket.k0 = 1.0\nrotator.d = 5.0\nrotator.B = 1.0\n"
        with pytest.raises(ConfigError, match="rotator.mu"):
            RunConfig.from_file(self._write(tmp_path, text))

    def test_physical_mode_converts_to_natural(self, tmp_path):
        # arbitrary (not SI) scales; only the conversion algebra is under test
        text = """
        units.mode = physical
        units.hbar = 2.0
        units.mass = 4.0
        packet.sigma0 = 10.0
        packet.k0 = 0.5
        rotator.d = 30.0
        rotator.B = 1.0
        rotator.mu = 0.003
        """
        cfg = RunConfig.from_file(self._write(tmp_path, text))
        assert cfg.units.mode == "natural"
        assert cfg.packet.sigma0 == pytest.approx(1.0)
        assert cfg.packet.k0 == pytest.approx(5.0)      # k0 * L0
        assert cfg.rotator.d == pytest.approx(3.0)      # d / L0
        # muB in energy units E0 = hbar^2/(m L0^2) = 4/400 = 0.01
        assert cfg.rotator.muB == pytest.approx(0.3)
        assert cfg.scales.length == 10.0
        assert cfg.scales.time == pytest.approx(4.0 * 100.0 / 2.0)

    def test_grid_size_floor(self):
        with pytest.raises(ConfigError, match="at least 16"):
            NumericsSpec(x_points=8)

    def test_span_floor(self):
        with pytest.raises(ConfigError, match="x_span_sigmas"):
            NumericsSpec(x_span_sigmas=6.0)

    def test_nongaussian_width_relation_enforced(self):
        with pytest.raises(ConfigError, match="sigma0"):
            PacketSpec(kind="nongaussian", sigma0=1.0, k0=1.0, u=1.0, sigma_k=1.0)
        ok = PacketSpec.nongaussian(sigma_k=0.5, k0=2.5, alpha=0.3)
        assert ok.sigma0 == 1.0
