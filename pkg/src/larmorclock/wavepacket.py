"""Free wave-packet evolution: closed-form Gaussian fields, the asymmetric
(non-Gaussian) packet, spectral free propagation, and density/current/phase
evaluation.

Two field types provide the same evaluation surface:

* :class:`GaussianField` wraps the analytic freely-spreading Gaussian, with
  closed forms for the amplitude, current, phase, and their x-derivatives.
* :class:`SpectralField` stores the exact momentum spectrum on a grid and
  materializes position-space snapshots with the one-shot free propagator
  exp(-i*hbar*k^2*t/2m); there is no time stepping and hence no stepping error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from functools import lru_cache

import numpy as np

from .config import GAUSSIAN, NONGAUSSIAN, PacketSpec, NumericsSpec
from .errors import (ConfigError, GridTooSmallError, NumericsError,
                     OutOfDomainError, PhaseUndefinedError)

_SQRT_2PI = math.sqrt(2.0 * math.pi)


# ---------------------------------------------------------------------------
# Gaussian closed forms

def packet_width(t, sigma0, hbar=1.0, mass=1.0):
    """Width at time t: sigma0 * sqrt(1 + beta*t^2) with beta the spreading rate."""
    beta = hbar * hbar / (4.0 * mass * mass * sigma0 ** 4)
    t = np.asarray(t, dtype=float)
    return sigma0 * np.sqrt(1.0 + beta * t * t)


def gaussian_amplitude(x, t, sigma0, k0, hbar=1.0, mass=1.0):
    """Freely propagating Gaussian amplitude at (x, t).

    At t=0 this is the minimum-uncertainty packet
    (2*pi*sigma0^2)^(-1/4) * exp(-x^2/(4 sigma0^2) + i k0 x); at later times
    the complex width a_t = sigma0*(1 + i*hbar*t/(2 m sigma0^2)) spreads it
    while the carrier advances with group velocity u = hbar*k0/m.
    """
    x = np.asarray(x, dtype=float)
    u = hbar * k0 / mass
    a_t = sigma0 * (1.0 + 1j * hbar * t / (2.0 * mass * sigma0 * sigma0))
    xc = x - u * t
    pref = (2.0 * math.pi) ** -0.25 * a_t ** -0.5
    return pref * np.exp(-xc * xc / (4.0 * sigma0 * a_t) + 1j * k0 * (x - 0.5 * u * t))


def gaussian_density(x, t, sigma0, k0, hbar=1.0, mass=1.0):
    x = np.asarray(x, dtype=float)
    u = hbar * k0 / mass
    sig = packet_width(t, sigma0, hbar, mass)
    xc = x - u * t
    return np.exp(-xc * xc / (2.0 * sig * sig)) / (_SQRT_2PI * sig)


def gaussian_current(x, t, sigma0, k0, hbar=1.0, mass=1.0):
    """Probability current of the spreading Gaussian.

    J(x,t) = rho(x,t) * [u + (x-u*t) * hbar^2 t / (4 m^2 sigma0^4 + hbar^2 t^2)];
    the bracket is the local flow velocity, which exceeds u ahead of the center
    and lags behind it (front half accelerated, rear half decelerated).
    """
    x = np.asarray(x, dtype=float)
    u = hbar * k0 / mass
    xc = x - u * t
    vel = u + xc * hbar * hbar * t / (4.0 * mass ** 2 * sigma0 ** 4 + hbar ** 2 * t * t)
    return gaussian_density(x, t, sigma0, k0, hbar, mass) * vel


def gaussian_phase(x, t, sigma0, k0, hbar=1.0, mass=1.0):
    """Phase action S(x,t) = hbar*arg(psi), continuous in x (no nodes exist).

    S/hbar = k0*(x - u*t/2) + (x-u*t)^2 * a /(4 sigma0^2 (1+a^2)) - arctan(a)/2
    with a = hbar*t/(2 m sigma0^2).  At t=0 this reduces to hbar*k0*x.
    """
    x = np.asarray(x, dtype=float)
    u = hbar * k0 / mass
    a = hbar * t / (2.0 * mass * sigma0 * sigma0)
    xc = x - u * t
    s = (k0 * (x - 0.5 * u * t)
         + xc * xc * a / (4.0 * sigma0 * sigma0 * (1.0 + a * a))
         - 0.5 * math.atan(a))
    return hbar * s


class GaussianField:
    """Closed-form freely evolving Gaussian packet (peak at x=0 at t=0)."""

    kind = GAUSSIAN

    def __init__(self, sigma0, k0, hbar=1.0, mass=1.0):
        if sigma0 <= 0:
            raise ConfigError("sigma0 must be positive")
        self.sigma0 = float(sigma0)
        self.k0 = float(k0)
        self.hbar = float(hbar)
        self.mass = float(mass)
        self.u = self.hbar * self.k0 / self.mass
        self.beta = hbar * hbar / (4.0 * mass * mass * sigma0 ** 4)

    @classmethod
    def from_packet(cls, packet: PacketSpec, hbar=1.0, mass=1.0):
        if packet.kind != GAUSSIAN:
            raise ConfigError("GaussianField requires a gaussian packet spec")
        return cls(packet.sigma0, packet.k0, hbar, mass)

    def psi(self, x, t):
        return gaussian_amplitude(x, t, self.sigma0, self.k0, self.hbar, self.mass)

    def density(self, x, t):
        return gaussian_density(x, t, self.sigma0, self.k0, self.hbar, self.mass)

    def current(self, x, t):
        return gaussian_current(x, t, self.sigma0, self.k0, self.hbar, self.mass)

    def density_current(self, x, t):
        return self.density(x, t), self.current(x, t)

    def phase(self, x, t):
        return gaussian_phase(x, t, self.sigma0, self.k0, self.hbar, self.mass)

    def velocity(self, x, t):
        """Flow velocity J/rho, finite everywhere (Gaussian has no nodes)."""
        x = np.asarray(x, dtype=float)
        bt2 = self.beta * t * t
        return self.u + (x - self.u * t) * self.beta * t / (1.0 + bt2)

    def dphase_dx(self, x, t):
        return self.mass * self.velocity(x, t)

    def dlog_density_dx(self, x, t):
        x = np.asarray(x, dtype=float)
        sig = packet_width(t, self.sigma0, self.hbar, self.mass)
        return -(x - self.u * t) / (sig * sig)

    def width(self, t):
        return packet_width(t, self.sigma0, self.hbar, self.mass)

    def norm_on_grid(self, t, numerics: NumericsSpec | None = None):
        num = numerics or NumericsSpec()
        sig = float(self.width(t))
        xs = self.u * t + np.linspace(-1.0, 1.0, num.x_points) * num.x_span_sigmas * sig
        return float(np.trapezoid(self.density(xs, t), xs))


# ---------------------------------------------------------------------------
# asymmetric (non-Gaussian) packet, momentum and position space

@lru_cache(maxsize=64)
def nongaussian_norm(sigma_k, k0, alpha, beta_shape):
    """Normalization of the asymmetric momentum packet, by quadrature.

    Computed numerically rather than trusting any closed constant; the
    integrand is the unit Gaussian envelope times (1 + alpha*sin(...))^2.
    """
    from scipy.integrate import simpson

    k = k0 + np.linspace(-16.0, 16.0, 2 ** 14 + 1) * sigma_k
    raw = _nongaussian_momentum_unnorm(k, sigma_k, k0, alpha, beta_shape)
    return 1.0 / math.sqrt(simpson(np.abs(raw) ** 2, x=k))


def _nongaussian_momentum_unnorm(k, sigma_k, k0, alpha, beta_shape):
    k = np.asarray(k, dtype=float)
    env = np.exp(-(k - k0) ** 2 / (4.0 * sigma_k * sigma_k)) / (2.0 * math.pi * sigma_k * sigma_k) ** 0.25
    return env * (1.0 + alpha * np.sin((k - k0) / (beta_shape * sigma_k)))


def nongaussian_momentum(k, packet: PacketSpec):
    """Momentum-space amplitude of the asymmetric packet (real for real k)."""
    if packet.kind != NONGAUSSIAN:
        raise ConfigError("nongaussian_momentum requires a nongaussian packet spec")
    norm = nongaussian_norm(packet.sigma_k, packet.k0, packet.alpha, packet.beta_shape)
    return norm * _nongaussian_momentum_unnorm(k, packet.sigma_k, packet.k0,
                                               packet.alpha, packet.beta_shape)


def nongaussian_position(x, packet: PacketSpec):
    """Closed-form initial position amplitude of the asymmetric packet.

    Only valid for beta_shape = 4/pi, whose transform constants are
    exp(-pi^2/16) and sinh(pi*x/(4*sigma)); other shape values must go through
    the spectral path.
    """
    if packet.kind != NONGAUSSIAN:
        raise ConfigError("nongaussian_position requires a nongaussian packet spec")
    if abs(packet.beta_shape - 4.0 / math.pi) > 1e-12:
        raise ConfigError("closed-form position amplitude requires beta_shape = 4/pi; "
                          "use the spectral path for other shape values")
    x = np.asarray(x, dtype=float)
    sigma = packet.sigma0
    norm = nongaussian_norm(packet.sigma_k, packet.k0, packet.alpha, packet.beta_shape)
    env = np.exp(-x * x / (4.0 * sigma * sigma) + 1j * packet.k0 * x)
    env = env / (2.0 * math.pi * sigma * sigma) ** 0.25
    asym = 1.0 + 1j * packet.alpha * math.exp(-math.pi ** 2 / 16.0) * np.sinh(math.pi * x / (4.0 * sigma))
    return norm * env * asym


def momentum_amplitude(k, packet: PacketSpec):
    """Momentum-space amplitude for either packet kind (unit L2 norm)."""
    if packet.kind == GAUSSIAN:
        sigma_k = 1.0 / (2.0 * packet.sigma0)
        k = np.asarray(k, dtype=float)
        return (np.exp(-(k - packet.k0) ** 2 / (4.0 * sigma_k * sigma_k))
                / (2.0 * math.pi * sigma_k * sigma_k) ** 0.25).astype(complex)
    return nongaussian_momentum(k, packet).astype(complex)


# ---------------------------------------------------------------------------
# grids and spectral evolution

def current_from_samples(psi, dx, hbar=1.0, mass=1.0):
    """Probability current from amplitude samples via central differences.

    Endpoints use one-sided differences, so only interior values carry the
    O(dx^2) accuracy.
    """
    dpsi = np.gradient(psi, dx)
    return (hbar / mass) * np.imag(np.conj(psi) * dpsi)


@dataclass(frozen=True)
class GridState:
    """Amplitude samples on a uniform grid at one instant."""

    x: np.ndarray
    psi: np.ndarray
    t: float
    hbar: float = 1.0
    mass: float = 1.0
    rho: np.ndarray = dc_field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "rho", np.abs(self.psi) ** 2)

    @property
    def dx(self):
        return float(self.x[1] - self.x[0])

    @property
    def norm(self):
        return float(np.trapezoid(self.rho, self.x))

    def current(self):
        return current_from_samples(self.psi, self.dx, self.hbar, self.mass)

    def phase_unwrapped(self, phase_floor=1e-30):
        """S = hbar * arg(psi), unwrapped outward from the density maximum.

        Unwrapping runs over the contiguous region where rho > phase_floor
        around the peak; far tails are constant-extended.  An interior node
        separating two supported regions makes the phase discontinuable and
        raises.
        """
        ok = self.rho > phase_floor
        i0 = int(np.argmax(self.rho))
        if not ok[i0]:
            raise PhaseUndefinedError("density everywhere below the phase floor")
        n = len(self.rho)
        left_bad = np.nonzero(~ok[:i0])[0]
        lo = int(left_bad[-1]) + 1 if left_bad.size else 0
        right_bad = np.nonzero(~ok[i0:])[0]
        hi = i0 + int(right_bad[0]) - 1 if right_bad.size else n - 1
        if np.any(ok[:lo]) or np.any(ok[hi + 1:]):
            raise PhaseUndefinedError(
                "interior density node; the phase cannot be continued across it")
        ang = np.angle(self.psi)
        out = np.empty_like(ang)
        out[i0:hi + 1] = np.unwrap(ang[i0:hi + 1])
        out[lo:i0 + 1] = np.unwrap(ang[i0:lo - 1 if lo else None:-1])[::-1]
        out[:lo] = out[lo]
        out[hi + 1:] = out[hi]
        return self.hbar * out


class SpectralField:
    """Exact momentum-spectrum representation of a freely evolving packet.

    The spectrum is sampled on the grid conjugate to a uniform x-grid wide
    enough to hold the packet out to ``t_max``.  Snapshots at any t come from
    one inverse FFT; there is no accumulation of stepping error.
    """

    def __init__(self, packet: PacketSpec, numerics: NumericsSpec | None = None,
                 t_max=None, hbar=1.0, mass=1.0):
        self.packet = packet
        self.numerics = numerics or NumericsSpec()
        self.hbar = float(hbar)
        self.mass = float(mass)
        if t_max is None:
            t_max = 10.0 * packet.sigma0 / max(packet.u, 1e-12)
        self.t_max = float(t_max)

        sig_max = float(packet_width(self.t_max, packet.sigma0, hbar, mass))
        span = self.numerics.x_span_sigmas * sig_max
        x_lo = min(0.0, packet.u * self.t_max) - span
        x_hi = max(0.0, packet.u * self.t_max) + span
        n = self.numerics.x_points
        self.x = x_lo + (x_hi - x_lo) * np.arange(n) / n  # endpoint-free uniform grid
        self.dx = float(self.x[1] - self.x[0])
        self.k = 2.0 * math.pi * np.fft.fftfreq(n, d=self.dx)
        kmax = math.pi / self.dx
        if abs(packet.k0) + 8.0 / (2.0 * packet.sigma0) > 0.9 * kmax:
            raise GridTooSmallError(
                f"momentum grid tops out at {kmax:.3g}, too close to the packet "
                f"spectrum around k0={packet.k0:.3g}; increase numerics.x_points",
            )
        self.spectrum = momentum_amplitude(self.k, packet)
        self._phase0 = np.exp(1j * self.k * self.x[0])

    def snapshot(self, t) -> GridState:
        """Position-space state at time t (one-shot free propagation)."""
        if t < 0:
            raise NumericsError("free propagation is evaluated for t >= 0 only")
        prop = np.exp(-0.5j * self.hbar * self.k * self.k * t / self.mass)
        psi = _SQRT_2PI / self.dx * np.fft.ifft(self.spectrum * self._phase0 * prop)
        state = GridState(x=self.x, psi=psi, t=float(t), hbar=self.hbar, mass=self.mass)
        self._check_boundary(state)
        return state

    def _check_boundary(self, state: GridState):
        peak = float(np.max(state.rho))
        edge = float(max(state.rho[0], state.rho[-1]))
        if peak <= 0 or edge > 1e-12 * peak:
            halfwidth = 0.5 * (self.x[-1] - self.x[0])
            raise GridTooSmallError(
                f"boundary density {edge:.3e} exceeds 1e-12 of peak {peak:.3e} "
                f"at t={state.t:.4g}; widen the grid (current half-width {halfwidth:.4g}, "
                f"try {2.0 * halfwidth:.4g})",
                suggested_halfwidth=2.0 * halfwidth)

    def _snapshot_pair(self, t):
        """psi and its exact spatial derivative on the grid at time t."""
        prop = np.exp(-0.5j * self.hbar * self.k * self.k * t / self.mass)
        base = self.spectrum * self._phase0 * prop
        psi = _SQRT_2PI / self.dx * np.fft.ifft(base)
        dpsi = _SQRT_2PI / self.dx * np.fft.ifft(1j * self.k * base)
        return psi, dpsi

    def psi(self, x, t):
        """Amplitude at arbitrary positions by linear interpolation of a snapshot."""
        x = np.asarray(x, dtype=float)
        self._require_in_domain(x)
        state = self.snapshot(t)
        re = np.interp(x, state.x, state.psi.real)
        im = np.interp(x, state.x, state.psi.imag)
        return re + 1j * im

    def density_current(self, x, t):
        x = np.asarray(x, dtype=float)
        self._require_in_domain(x)
        state = self.snapshot(t)
        j = state.current()
        rho = np.interp(x, state.x, state.rho)
        cur = np.interp(x, state.x, j)
        return rho, cur

    def density(self, x, t):
        return self.density_current(x, t)[0]

    def current(self, x, t):
        return self.density_current(x, t)[1]

    def velocity_table(self, t_nodes):
        """rho and J sampled on (t_nodes, x) for trajectory integration."""
        rho = np.empty((len(t_nodes), len(self.x)))
        cur = np.empty_like(rho)
        for i, t in enumerate(t_nodes):
            state = self.snapshot(t)
            rho[i] = state.rho
            cur[i] = state.current()
        return rho, cur

    def at_fixed_position(self, x0, t_values, chunk=256):
        """(rho, J) at one position over many times by direct mode summation."""
        t_values = np.asarray(t_values, dtype=float)
        dk = 2.0 * math.pi / (len(self.x) * self.dx)
        coef = self.spectrum * np.exp(1j * self.k * x0) * dk / _SQRT_2PI
        rho = np.empty(len(t_values))
        cur = np.empty(len(t_values))
        for start in range(0, len(t_values), chunk):
            ts = t_values[start:start + chunk]
            phases = np.exp(-0.5j * self.hbar * np.outer(ts, self.k * self.k) / self.mass)
            psi = phases @ coef
            dpsi = phases @ (1j * self.k * coef)
            rho[start:start + chunk] = np.abs(psi) ** 2
            cur[start:start + chunk] = (self.hbar / self.mass) * np.imag(np.conj(psi) * dpsi)
        return rho, cur

    def phase(self, x, t):
        x = np.asarray(x, dtype=float)
        self._require_in_domain(x)
        state = self.snapshot(t)
        rho_at = np.interp(x, state.x, state.rho)
        if np.any(rho_at <= self.numerics.phase_floor):
            raise PhaseUndefinedError("phase requested at a density node")
        s = state.phase_unwrapped(self.numerics.phase_floor)
        return np.interp(x, state.x, s)

    def _require_in_domain(self, x):
        if np.any(x < self.x[0]) or np.any(x > self.x[-1]):
            raise OutOfDomainError(
                f"position outside the stored grid [{self.x[0]:.4g}, {self.x[-1]:.4g}]")


def evolve_spectral(packet: PacketSpec, t, numerics: NumericsSpec | None = None,
                    t_max=None, hbar=1.0, mass=1.0) -> GridState:
    """Freely evolve a packet spectrum to time t and return the grid state.

    The grid is sized from ``numerics`` to hold the packet out to
    max(t, t_max); a boundary-mass violation raises GridTooSmallError with a
    suggested extent, and a norm drift beyond norm_tol raises NumericsError.
    """
    num = numerics or NumericsSpec()
    field = SpectralField(packet, num, t_max=max(t, t_max or 0.0) or None,
                          hbar=hbar, mass=mass)
    state = field.snapshot(t)
    if abs(state.norm - 1.0) > num.norm_tol:
        raise NumericsError(f"norm drifted to {state.norm!r} at t={t:.4g}")
    return state


def field_for(config, t_max=None):
    """Evaluation field for a run config: closed-form Gaussian or spectral."""
    packet = config.packet
    hbar, mass = config.units.hbar, config.units.mass
    if packet.kind == GAUSSIAN:
        return GaussianField.from_packet(packet, hbar, mass)
    if t_max is None:
        t_max = 2.0 * (config.rotator.d + 10.0 * packet.sigma0) / max(packet.u, 1e-12)
    return SpectralField(packet, config.numerics, t_max=t_max, hbar=hbar, mass=mass)


# ---------------------------------------------------------------------------
# dispatching op surface and diagnostics

def density_current(x, t, field):
    """(rho, J) at (x, t) for any field type."""
    return field.density_current(x, t)


def phase(x, t, field):
    """Phase action S = hbar*arg(psi), continuous in x."""
    return field.phase(x, t)


def continuity_residual(field, t, numerics: NumericsSpec | None = None, dt=1e-3):
    """Max |d(rho)/dt + d(J)/dx| on interior grid points, and max |dJ/dx|.

    Both derivatives are finite differences: centered in t with step dt for
    rho, centered in x on the evaluation grid for J.  Needs t >= dt.
    """
    if t < dt:
        raise NumericsError("centered time difference needs t >= dt")
    num = numerics or NumericsSpec()
    if isinstance(field, GaussianField):
        sig = float(field.width(t))
        xs = field.u * t + np.linspace(-1.0, 1.0, num.x_points) * num.x_span_sigmas * sig
        dx = xs[1] - xs[0]
        rho_p = field.density(xs, t + dt)
        rho_m = field.density(xs, t - dt)
        j = field.current(xs, t)
    else:
        state = field.snapshot(t)
        xs, dx = state.x, state.dx
        rho_p = field.snapshot(t + dt).rho
        rho_m = field.snapshot(t - dt).rho
        j = state.current()
    drho_dt = (rho_p - rho_m) / (2.0 * dt)
    dj_dx = np.gradient(j, dx)
    residual = np.abs(drho_dt + dj_dx)[2:-2]
    return float(np.max(residual)), float(np.max(np.abs(dj_dx)))
