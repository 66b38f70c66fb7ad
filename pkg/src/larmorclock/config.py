"""Configuration model, unit handling, derived parameters, regime checks.

Everything downstream computes in natural units (hbar = m = 1).  Physical-mode
configs are converted on ingestion using the packet width as the length scale;
the conversion factors are kept on the config so exports can be mapped back.

Config files are flat UTF-8 text with namespaced ``section.key = value`` lines
and ``#`` comments.  Unknown keys are a hard error so typos cannot silently
fall back to defaults.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .errors import ConfigError

GAUSSIAN = "gaussian"
NONGAUSSIAN = "nongaussian"


@dataclass(frozen=True)
class UnitSystem:
    """Action and mass scales plus the unit mode ('natural' or 'physical')."""

    hbar: float = 1.0
    mass: float = 1.0
    mode: str = "natural"

    def __post_init__(self):
        if self.hbar <= 0 or self.mass <= 0:
            raise ConfigError("units.hbar and units.mass must be positive")
        if self.mode not in ("natural", "physical"):
            raise ConfigError(f"units.mode must be 'natural' or 'physical', got {self.mode!r}")
        if self.mode == "natural" and (self.hbar != 1.0 or self.mass != 1.0):
            raise ConfigError("natural mode requires units.hbar = units.mass = 1")


@dataclass(frozen=True)
class Scales:
    """Multiply natural-unit quantities by these to recover input units."""

    length: float = 1.0
    time: float = 1.0
    energy: float = 1.0


@dataclass(frozen=True)
class PacketSpec:
    """Initial wave-packet description.

    For the asymmetric (non-Gaussian) kind the position-space width is tied to
    the momentum width by sigma0 = 1/(2*sigma_k).  The group velocity u is
    always hbar*k0/mass by construction.
    """

    kind: str
    sigma0: float
    k0: float
    u: float
    sigma_k: float = 0.0
    alpha: float = 0.0
    beta_shape: float = 4.0 / math.pi

    def __post_init__(self):
        if self.kind not in (GAUSSIAN, NONGAUSSIAN):
            raise ConfigError(f"packet.kind must be gaussian or nongaussian, got {self.kind!r}")
        if self.sigma0 <= 0:
            raise ConfigError("packet.sigma0 must be positive")
        if self.kind == NONGAUSSIAN:
            if self.sigma_k <= 0:
                raise ConfigError("packet.sigma_k must be positive")
            if abs(self.sigma0 * 2.0 * self.sigma_k - 1.0) > 1e-12:
                raise ConfigError("non-Gaussian packets require sigma0 = 1/(2*sigma_k)")
            if self.beta_shape <= 0:
                raise ConfigError("packet.beta_shape must be positive")

    @classmethod
    def gaussian(cls, sigma0, k0, hbar=1.0, mass=1.0):
        return cls(kind=GAUSSIAN, sigma0=float(sigma0), k0=float(k0),
                   u=hbar * float(k0) / mass)

    @classmethod
    def nongaussian(cls, sigma_k, k0, alpha, beta_shape=4.0 / math.pi,
                    hbar=1.0, mass=1.0):
        sigma_k = float(sigma_k)
        return cls(kind=NONGAUSSIAN, sigma0=1.0 / (2.0 * sigma_k), k0=float(k0),
                   u=hbar * float(k0) / mass, sigma_k=sigma_k,
                   alpha=float(alpha), beta_shape=float(beta_shape))


@dataclass(frozen=True)
class RotatorSpec:
    """Bounded constant-field region [0, d] and its Larmor rate omega = mu*B/hbar."""

    d: float
    B: float
    mu: float
    omega: float

    def __post_init__(self):
        if self.d <= 0:
            raise ConfigError("rotator.d must be positive")

    @classmethod
    def build(cls, d, B, mu, hbar=1.0):
        return cls(d=float(d), B=float(B), mu=float(mu),
                   omega=float(mu) * float(B) / hbar)

    @property
    def muB(self):
        return self.mu * self.B


@dataclass(frozen=True)
class NumericsSpec:
    """Grids, step sizes, and tolerances shared across the pipeline."""

    x_points: int = 16384            # spatial grid size for spectral evolution
    x_span_sigmas: float = 12.0      # grid half-width in units of sigma_t at t_max
    time_points: int = 4096          # support size for time distributions
    ensemble_points: int = 100000    # quantile trajectories per ensemble
    histogram_bins: int = 200
    dt_factor: float = 1e-3          # RK4 step: dt = sigma0*dt_factor/u
    norm_tol: float = 1e-9
    ft_tol: float = 1e-8
    ce_tol: float = 1e-6
    dist_tol: float = 1e-6
    hist_tol: float = 1e-2
    quad_tol: float = 1e-8
    traj_tol: float = 1e-6           # in units of sigma0
    ensemble_tol: float = 1e-9
    phase_floor: float = 1e-30
    energy_ratio_max: float = 1e-6
    turning_sigmas: float = 5.0
    spin_term_max: float = 1e-2
    spin_term_window_sigmas: float = 3.0
    never_arrive_mass_max: float = 0.05
    phi_points_per_turn: int = 256
    theta_points: int = 720

    def __post_init__(self):
        for name in ("x_points", "time_points", "ensemble_points",
                     "histogram_bins", "phi_points_per_turn", "theta_points"):
            if getattr(self, name) < 16:
                raise ConfigError(f"numerics.{name} must be at least 16")
        for f in fields(self):
            if f.type == "float" and getattr(self, f.name) <= 0:
                raise ConfigError(f"numerics.{f.name} must be positive")
        # grid states promise coverage out to 10 widths around the packet mean
        if self.x_span_sigmas < 10.0:
            raise ConfigError("numerics.x_span_sigmas must be at least 10")


@dataclass(frozen=True)
class OutputSpec:
    """What the CLI emits beyond the core tables."""

    times: tuple = (0.0,)            # packet snapshot times
    trajectory_paths: int = 0        # per-trajectory path dumps (0 = none)
    path_samples: int = 256

    def __post_init__(self):
        if self.trajectory_paths < 0 or self.path_samples < 2:
            raise ConfigError("output.trajectory_paths must be >= 0 and output.path_samples >= 2")


@dataclass(frozen=True)
class ScatterSpec:
    """Parameter ranges for the plane-wave scattering scans."""

    energy_points: int = 1000
    energy_decades: float = 3.0
    ratio_min: float = 1e3
    ratio_max: float = 1e9
    ratio_points: int = 13

    def __post_init__(self):
        if self.energy_points < 2 or self.ratio_points < 2:
            raise ConfigError("scatter scan needs at least 2 points per axis")
        if not (0 < self.ratio_min < self.ratio_max):
            raise ConfigError("scatter.ratio_min/ratio_max must satisfy 0 < min < max")


@dataclass(frozen=True)
class DerivedParams:
    beta_spread: float   # packet spreading rate hbar^2/(4 m^2 sigma0^4)
    omega: float         # Larmor rate mu*B/hbar
    energy_ratio: float  # |mu*B| / initial kinetic energy


@dataclass(frozen=True)
class RegimeReport:
    larmor_ok: bool
    no_turning_ok: bool
    spin_term_ok: bool
    energy_ratio: float
    turning_bound: float      # minimum u for the no-turning guarantee
    spin_term_peak: float

    @property
    def all_ok(self):
        return self.larmor_ok and self.no_turning_ok and self.spin_term_ok


@dataclass(frozen=True)
class RunConfig:
    """Validated, immutable run description in natural units."""

    units: UnitSystem
    packet: PacketSpec
    rotator: RotatorSpec
    numerics: NumericsSpec = field(default_factory=NumericsSpec)
    output: OutputSpec = field(default_factory=OutputSpec)
    scatter: ScatterSpec = field(default_factory=ScatterSpec)
    seed: int = 0
    scales: Scales = field(default_factory=Scales)

    @classmethod
    def natural(cls, sigma0=1.0, k0=1.0, d=5.0, B=1.0, mu=0.0, kind=GAUSSIAN,
                sigma_k=None, alpha=0.0, beta_shape=4.0 / math.pi,
                numerics=None, output=None, scatter=None, seed=0):
        """Build a natural-unit config directly (the test and library entry point)."""
        units = UnitSystem()
        if kind == GAUSSIAN:
            packet = PacketSpec.gaussian(sigma0, k0)
        else:
            if sigma_k is None:
                sigma_k = 1.0 / (2.0 * sigma0)
            packet = PacketSpec.nongaussian(sigma_k, k0, alpha, beta_shape)
        rotator = RotatorSpec.build(d, B, mu)
        return cls(units=units, packet=packet, rotator=rotator,
                   numerics=numerics or NumericsSpec(),
                   output=output or OutputSpec(),
                   scatter=scatter or ScatterSpec(), seed=seed)

    @classmethod
    def from_file(cls, path):
        return cls.from_flat(read_flat_file(path))

    @classmethod
    def from_flat(cls, flat):
        """Build from a flat {dotted.key: value} mapping; unknown keys are fatal."""
        unknown = sorted(set(flat) - set(_KEY_TABLE))
        if unknown:
            raise ConfigError("unknown config keys: " + ", ".join(unknown))
        vals = {}
        for key, (typ, default) in _KEY_TABLE.items():
            if key in flat:
                vals[key] = _coerce(key, typ, flat[key])
            elif default is _REQUIRED:
                vals[key] = None
            else:
                vals[key] = default
        return _assemble(vals)

    def to_flat(self):
        """Flat key map of everything that defines this run (natural units)."""
        out = {
            "units.mode": self.units.mode,
            "units.hbar": self.units.hbar,
            "units.mass": self.units.mass,
            "packet.kind": self.packet.kind,
            "packet.sigma0": self.packet.sigma0,
            "packet.k0": self.packet.k0,
            "packet.sigma_k": self.packet.sigma_k,
            "packet.alpha": self.packet.alpha,
            "packet.beta_shape": self.packet.beta_shape,
            "rotator.d": self.rotator.d,
            "rotator.B": self.rotator.B,
            "rotator.mu": self.rotator.mu,
            "seed": self.seed,
        }
        for f in fields(NumericsSpec):
            out[f"numerics.{f.name}"] = getattr(self.numerics, f.name)
        out["output.times"] = ",".join(repr(t) for t in self.output.times)
        out["output.trajectory_paths"] = self.output.trajectory_paths
        out["output.path_samples"] = self.output.path_samples
        for f in fields(ScatterSpec):
            out[f"scatter.{f.name}"] = getattr(self.scatter, f.name)
        return out

    @property
    def digest(self):
        """Hex digest of the canonical flat form; stable under key reordering."""
        lines = [f"{k}={_canon(v)}" for k, v in sorted(self.to_flat().items())]
        return hashlib.sha256("\n".join(lines).encode("utf-8")).hexdigest()

    def with_numerics(self, **kwargs):
        return replace(self, numerics=replace(self.numerics, **kwargs))


def _canon(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


# ---------------------------------------------------------------------------
# flat-file parsing

_REQUIRED = object()

_KEY_TABLE = {
    "units.mode": ("str", "natural"),
    "units.hbar": ("float", 1.0),
    "units.mass": ("float", 1.0),
    "packet.kind": ("str", GAUSSIAN),
    "packet.sigma0": ("float", None),
    "packet.k0": ("float", _REQUIRED),
    "packet.sigma_k": ("float", None),
    "packet.alpha": ("float", 0.0),
    "packet.beta_shape": ("float", 4.0 / math.pi),
    "rotator.d": ("float", _REQUIRED),
    "rotator.B": ("float", _REQUIRED),
    "rotator.mu": ("float", _REQUIRED),
    "seed": ("int", 0),
    "output.times": ("str", "0.0"),
    "output.trajectory_paths": ("int", 0),
    "output.path_samples": ("int", 256),
}
for _f in fields(NumericsSpec):
    _KEY_TABLE[f"numerics.{_f.name}"] = (_f.type, _f.default)
for _f in fields(ScatterSpec):
    _KEY_TABLE[f"scatter.{_f.name}"] = (_f.type, _f.default)


def read_flat_file(path):
    """Parse ``key = value`` lines; '#' starts a comment; blank lines ignored."""
    flat = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if not key or not value:
                raise ConfigError(f"{path}:{lineno}: empty key or value")
            if key in flat:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            flat[key] = value
    return flat


def _coerce(key, typ, value):
    if isinstance(value, str):
        try:
            if typ == "int":
                return int(value)
            if typ == "float":
                return float(value)
        except ValueError:
            raise ConfigError(f"config key {key} expects a {typ}, got {value!r}") from None
        return value
    # programmatic dicts may carry typed values already
    if typ == "int":
        return int(value)
    if typ == "float":
        return float(value)
    return str(value)


def _assemble(vals):
    units = UnitSystem(hbar=vals["units.hbar"], mass=vals["units.mass"],
                       mode=vals["units.mode"])
    kind = vals["packet.kind"]
    hbar, mass = units.hbar, units.mass

    if kind == GAUSSIAN:
        if vals["packet.sigma0"] is None:
            raise ConfigError("packet.sigma0 is required for gaussian packets")
        packet = PacketSpec.gaussian(vals["packet.sigma0"], vals["packet.k0"],
                                     hbar=hbar, mass=mass)
    elif kind == NONGAUSSIAN:
        if vals["packet.sigma_k"] is None:
            raise ConfigError("packet.sigma_k is required for nongaussian packets")
        packet = PacketSpec.nongaussian(vals["packet.sigma_k"], vals["packet.k0"],
                                        vals["packet.alpha"], vals["packet.beta_shape"],
                                        hbar=hbar, mass=mass)
    else:
        raise ConfigError(f"packet.kind must be gaussian or nongaussian, got {kind!r}")

    for req in ("rotator.d", "rotator.B", "rotator.mu", "packet.k0"):
        if vals[req] is None:
            raise ConfigError(f"config key {req} is required")

    rotator = RotatorSpec.build(vals["rotator.d"], vals["rotator.B"],
                                vals["rotator.mu"], hbar=hbar)

    scales = Scales()
    if units.mode == "physical":
        packet, rotator, scales = _to_natural(units, packet, rotator)
        units = UnitSystem(mode="natural")

    numerics = NumericsSpec(**{f.name: vals[f"numerics.{f.name}"]
                               for f in fields(NumericsSpec)})
    scatter = ScatterSpec(**{f.name: vals[f"scatter.{f.name}"]
                             for f in fields(ScatterSpec)})
    try:
        times = tuple(float(t) for t in str(vals["output.times"]).split(",") if t.strip())
    except ValueError:
        raise ConfigError(f"output.times must be a comma list of numbers, got {vals['output.times']!r}") from None
    output = OutputSpec(times=times, trajectory_paths=vals["output.trajectory_paths"],
                        path_samples=vals["output.path_samples"])

    return RunConfig(units=units, packet=packet, rotator=rotator, numerics=numerics,
                     output=output, scatter=scatter, seed=vals["seed"], scales=scales)


def _to_natural(units, packet, rotator):
    """Rescale physical-unit specs so hbar = m = 1 and sigma0 = 1.

    Length unit L0 = sigma0, time unit T0 = m*L0^2/hbar, energy unit
    E0 = hbar/T0.  Only the product mu*B is physical, so it is folded into
    the natural-unit mu with B set to 1.
    """
    L0 = packet.sigma0
    T0 = units.mass * L0 * L0 / units.hbar
    E0 = units.hbar / T0
    if packet.kind == GAUSSIAN:
        nat_packet = PacketSpec.gaussian(packet.sigma0 / L0, packet.k0 * L0)
    else:
        nat_packet = PacketSpec.nongaussian(packet.sigma_k * L0, packet.k0 * L0,
                                            packet.alpha, packet.beta_shape)
    muB_nat = rotator.mu * rotator.B / E0
    nat_rotator = RotatorSpec.build(rotator.d / L0, 1.0, muB_nat)
    return nat_packet, nat_rotator, Scales(length=L0, time=T0, energy=E0)


# ---------------------------------------------------------------------------
# derived parameters and regime checks

def spreading_rate(sigma0, hbar=1.0, mass=1.0):
    """Packet spreading rate: hbar^2 / (4 m^2 sigma0^4)."""
    if sigma0 <= 0 or hbar <= 0 or mass <= 0:
        raise ConfigError("spreading rate needs positive sigma0, hbar, mass")
    return hbar * hbar / (4.0 * mass * mass * sigma0 ** 4)


def derived_parameters(config: RunConfig) -> DerivedParams:
    """Spreading rate, Larmor rate, and the interaction/kinetic energy ratio.

    Pure function of the config: identical input gives bit-identical output.
    """
    hbar, mass = config.units.hbar, config.units.mass
    beta = spreading_rate(config.packet.sigma0, hbar=hbar, mass=mass)
    omega = config.rotator.omega
    e_kin = 0.5 * mass * config.packet.u ** 2
    if e_kin <= 0:
        raise ConfigError("packet kinetic energy must be positive (k0 must be nonzero)")
    energy_ratio = abs(config.rotator.muB) / e_kin
    return DerivedParams(beta_spread=beta, omega=omega, energy_ratio=energy_ratio)


def check_regime(config: RunConfig) -> RegimeReport:
    """Report whether the decoupled-Larmor-clock treatment is trustworthy.

    Three gates, all report-only:

    * ``larmor_ok``: interaction energy is a negligible fraction of kinetic.
    * ``no_turning_ok``: no trajectory launched within +/- turning_sigmas
      standard deviations of the peak can stall (u >= n*sigma0*sqrt(beta)).
    * ``spin_term_ok``: the spin-dependent velocity correction is small on a
      diagnostic window around the packet center over the transit.
    """
    from . import bohm, wavepacket  # local import avoids a module cycle

    num = config.numerics
    derived = derived_parameters(config)
    packet = config.packet

    larmor_ok = derived.energy_ratio < num.energy_ratio_max
    turning_bound = num.turning_sigmas * packet.sigma0 * math.sqrt(derived.beta_spread)
    no_turning_ok = packet.u >= turning_bound

    field = wavepacket.field_for(config)
    t_exit = (config.rotator.d + num.turning_sigmas * packet.sigma0) / packet.u
    ts = np.linspace(0.0, t_exit, 33)
    peak = 0.0
    for t in ts:
        sig_t = wavepacket.packet_width(t, packet.sigma0)
        xs = packet.u * t + np.linspace(-1.0, 1.0, 33) * num.spin_term_window_sigmas * sig_t
        ratio = bohm.spin_term_ratio(xs, t, field)
        peak = max(peak, float(np.max(ratio)))
    spin_term_ok = peak < num.spin_term_max

    return RegimeReport(larmor_ok=larmor_ok, no_turning_ok=no_turning_ok,
                        spin_term_ok=spin_term_ok,
                        energy_ratio=derived.energy_ratio,
                        turning_bound=turning_bound, spin_term_peak=peak)
