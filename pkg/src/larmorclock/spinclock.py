"""Larmor clock readout: spin-state evolution in the field region, the
interaction-time to rotation-angle map phi = 2*omega*tau, the pushforward of a
time density to a rotation-angle density, and the spin-measurement
probabilities along a tilted axis that constitute the observable signal.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.integrate import simpson

from .errors import CoverageError, DegenerateMappingError, NumericsError
from .timedist import TimeDistribution


@dataclass(frozen=True)
class SpinState:
    """Two-component spinor in the z-basis, unit norm."""

    up: complex
    down: complex

    def __post_init__(self):
        if abs(self.norm_sq - 1.0) > 1e-12:
            raise NumericsError(f"spin state norm^2 = {self.norm_sq!r}, expected 1")

    @property
    def norm_sq(self):
        return abs(self.up) ** 2 + abs(self.down) ** 2

    @classmethod
    def from_amplitudes(cls, up, down):
        scale = math.sqrt(abs(up) ** 2 + abs(down) ** 2)
        if scale == 0:
            raise NumericsError("cannot normalize the zero spinor")
        return cls(up / scale, down / scale)

    @classmethod
    def x_polarized(cls):
        r = 1.0 / math.sqrt(2.0)
        return cls(r, r)

    def fidelity(self, other: "SpinState"):
        """Squared overlap |<self|other>|^2."""
        ov = self.up.conjugate() * other.up + self.down.conjugate() * other.down
        return abs(ov) ** 2

    def xy_angle(self):
        """In-plane polarization angle: arg of the up-down coherence."""
        return cmath.phase(self.down * self.up.conjugate())


def spin_evolve(tau, omega) -> SpinState:
    """Spin state after precessing for time tau at Larmor rate omega.

    Starting from +x polarization, the z-field splits the components by
    -/+ omega*tau phases: e^{-i omega tau}/sqrt(2) * (|up> + e^{2i omega tau} |down>).
    """
    if tau < 0:
        raise NumericsError("interaction time must be non-negative")
    phase = cmath.exp(-1j * omega * tau)
    return SpinState(phase / math.sqrt(2.0),
                     phase * cmath.exp(2j * omega * tau) / math.sqrt(2.0))


def rotation_angle(tau, omega):
    """Polarization rotation angle phi = 2*omega*tau, unwrapped (no modulo)."""
    return 2.0 * omega * np.asarray(tau, dtype=float)


def projection_probs(phi, theta):
    """Probabilities of finding the spin along +/- the theta direction.

    For polarization rotated by phi in the xy-plane and a measurement axis at
    theta: p_plus = cos^2((theta-phi)/2), p_minus = sin^2((theta-phi)/2).
    Depends only on theta - phi; the pair sums to 1.
    """
    half = 0.5 * (np.asarray(theta, dtype=float) - np.asarray(phi, dtype=float))
    return np.cos(half) ** 2, np.sin(half) ** 2


@dataclass(frozen=True)
class SpinDistribution:
    """Density over the unwrapped rotation angle, plus an optional atom at 0.

    The atom carries never-interacting weight (particles that never see the
    field keep phi = 0 exactly); whether it is included is a policy choice
    surfaced by the pushforward.
    """

    phi: np.ndarray
    density: np.ndarray
    atom_at_zero: float = 0.0
    turns: int = 1
    meta: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        if np.any(self.density < 0):
            raise NumericsError("angle densities must be non-negative")
        if not (0.0 <= self.atom_at_zero < 1.0):
            raise NumericsError("atom mass must lie in [0, 1)")

    @property
    def integral(self):
        return float(np.trapezoid(self.density, self.phi))

    @property
    def total_mass(self):
        return self.integral + self.atom_at_zero

    def mean(self):
        """Mean angle of the continuous part plus the atom at zero."""
        return float(np.trapezoid(self.phi * self.density, self.phi))

    def wrapped(self, bins=360):
        """Density folded onto [0, 2*pi); a plotting convenience only."""
        edges = np.linspace(0.0, 2.0 * math.pi, bins + 1)
        fine = np.linspace(self.phi[0], self.phi[-1], max(8 * len(self.phi), 4096))
        dens = np.interp(fine, self.phi, self.density)
        folded, _ = np.histogram(np.mod(fine, 2.0 * math.pi), bins=edges,
                                 weights=dens * (fine[1] - fine[0]))
        centers = 0.5 * (edges[1:] + edges[:-1])
        width = edges[1] - edges[0]
        out = folded / width
        out[0] += self.atom_at_zero / width
        return centers, out


def pushforward_phi(time_dist: TimeDistribution, omega,
                    zero_atom_policy="include") -> SpinDistribution:
    """Map a normalized time density to a rotation-angle density via phi = 2*omega*t.

    The linear change of variables gives density(phi) = density_t(phi/2w)/(2w).
    Policy 'include' places the distribution's excluded (never-interacting)
    mass as an atom at phi = 0 and scales the continuous part to match;
    'drop' renormalizes over the interacting subset only.
    """
    if omega == 0:
        raise DegenerateMappingError(
            "Larmor rate omega = mu*B/hbar is zero (check rotator.mu and rotator.B); "
            "all mass would collapse to phi = 0")
    if zero_atom_policy not in ("include", "drop"):
        raise NumericsError(f"unknown zero_atom_policy {zero_atom_policy!r}")
    if abs(time_dist.integral - 1.0) > 1e-3:
        raise NumericsError("pushforward needs a normalized time distribution")
    scale = 2.0 * abs(omega)
    phi = scale * time_dist.t
    dens = time_dist.density / scale
    atom = time_dist.excluded_mass if zero_atom_policy == "include" else 0.0
    if atom:
        dens = dens * (1.0 - atom)
    turns = max(1, int(math.ceil(float(phi[-1]) / (2.0 * math.pi))))
    return SpinDistribution(phi=phi, density=dens, atom_at_zero=atom, turns=turns,
                            meta={"source": time_dist.kind,
                                  "policy": zero_atom_policy,
                                  "omega": float(omega)})


@dataclass(frozen=True)
class ObservableCurve:
    """P_plus/P_minus versus the measurement-axis angle theta."""

    theta: np.ndarray
    p_plus: np.ndarray
    p_minus: np.ndarray
    meta: dict = dc_field(default_factory=dict)


def observable_curve(spin_dist: SpinDistribution, theta=None,
                     points_per_turn=256, mass_tol=1e-6) -> ObservableCurve:
    """Measurement probabilities P_+/-(theta) against the angle density.

    Integrates the projection probabilities over the full angle support
    (composite Simpson on a uniform grid) and adds the phi = 0 atom's
    contribution exactly.  The density mass is re-anchored after resampling
    so P_+ + P_- = 1 holds to roundoff.
    """
    if theta is None:
        theta = np.linspace(0.0, 2.0 * math.pi, 720, endpoint=False)
    theta = np.asarray(theta, dtype=float)

    if abs(spin_dist.total_mass - 1.0) > mass_tol:
        raise CoverageError(
            f"angle support carries {spin_dist.total_mass!r} of the mass; "
            "raise the turn coverage n' or fix the upstream normalization")

    phi, dens = spin_dist.phi, spin_dist.density
    spacing = np.diff(phi)
    if spacing.size and not np.allclose(spacing, spacing[0], rtol=1e-9, atol=0.0):
        n = max(points_per_turn * spin_dist.turns, 4 * len(phi))
        phi_u = np.linspace(phi[0], phi[-1], n)
        dens = np.interp(phi_u, phi, dens)
        phi = phi_u
    target = 1.0 - spin_dist.atom_at_zero
    got = simpson(dens, x=phi)
    if got > 0:
        dens = dens * (target / got)

    half = 0.5 * (theta[:, None] - phi[None, :])
    p_plus = simpson(np.cos(half) ** 2 * dens[None, :], x=phi, axis=1)
    p_minus = simpson(np.sin(half) ** 2 * dens[None, :], x=phi, axis=1)
    if spin_dist.atom_at_zero:
        ap, am = projection_probs(0.0, theta)
        p_plus = p_plus + spin_dist.atom_at_zero * ap
        p_minus = p_minus + spin_dist.atom_at_zero * am
    return ObservableCurve(theta=theta, p_plus=p_plus, p_minus=p_minus,
                           meta={"turns": spin_dist.turns,
                                 "atom_at_zero": spin_dist.atom_at_zero,
                                 "source": spin_dist.meta.get("source", "")})
