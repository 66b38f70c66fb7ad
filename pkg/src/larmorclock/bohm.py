"""Bohmian kinematics: the guidance velocity J/rho, closed-form trajectories of
the freely spreading Gaussian, numeric trajectory integration, arrival-time
inversion, and the turning-point / spin-term diagnostics.

Closed forms (natural or explicit units, peak at x=0 at t=0):

    x(t) = u*t + x0*sqrt(1 + beta*t^2)
    v(t) = u + x0*beta*t/sqrt(1 + beta*t^2)

with beta the spreading rate.  Particles launched at the peak move uniformly;
the front half is accelerated and the rear half decelerated.  A rear particle
turns around iff u < |x0|*sqrt(beta); at the boundary |x0| = u/sqrt(beta) it
stalls asymptotically, so x0 = -u/sqrt(beta) separates arriving from
never-arriving trajectories for any threshold right of the packet.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .config import RunConfig
from .errors import (AlreadyPastError, NodeCrossingError, NumericsError,
                     UnsupportedRegimeError)
from .wavepacket import GaussianField


def trajectory_closed(x0, t, u, beta):
    """Closed-form Gaussian trajectory x(t) for initial position x0."""
    x0 = np.asarray(x0, dtype=float)
    t = np.asarray(t, dtype=float)
    return u * t + x0 * np.sqrt(1.0 + beta * t * t)


def velocity_closed(x0, t, u, beta):
    """Closed-form Gaussian trajectory velocity; sign(v - u) = sign(x0) for t > 0."""
    x0 = np.asarray(x0, dtype=float)
    t = np.asarray(t, dtype=float)
    return u + x0 * beta * t / np.sqrt(1.0 + beta * t * t)


@dataclass(frozen=True)
class TurningPoint:
    exists: bool
    time: float | None = None


def turning_point(x0, u, beta):
    """Whether the trajectory from x0 stalls, and when its velocity vanishes.

    Only rear-half particles (x0 < 0) can turn, and only when the asymptotic
    deceleration beats the drift: u < |x0|*sqrt(beta).  The zero-velocity
    instant solves |x0|*beta*t/sqrt(1+beta*t^2) = u.
    """
    if x0 >= 0 or u >= abs(x0) * math.sqrt(beta):
        return TurningPoint(False)
    t_turn = u / math.sqrt(beta * (beta * x0 * x0 - u * u))
    return TurningPoint(True, t_turn)


def stall_boundary(u, beta):
    """Initial position below which trajectories never arrive at any x > x0."""
    return -u / math.sqrt(beta)


def inverse_arrival(T, X, u, beta):
    """The unique initial position whose trajectory sits at X at time T."""
    T = np.asarray(T, dtype=float)
    return (X - u * T) / np.sqrt(1.0 + beta * T * T)


def arrival_time_closed(x0, X, u, beta):
    """First time the closed-form trajectory from x0 reaches X.

    Solves (u^2 - beta*x0^2) T^2 - 2*X*u*T + (X^2 - x0^2) = 0 with a
    cancellation-safe root pair and validates the branch choice by direct
    substitution (squaring introduces a spurious root of the opposite
    x0-sign branch).  Scalar or array x0.
    """
    scalar = np.isscalar(x0)
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if u <= 0:
        raise UnsupportedRegimeError("arrival inversion requires u > 0")
    if np.any(x0 >= X):
        raise AlreadyPastError(f"initial position at or beyond the threshold X={X}")
    turning = (x0 < 0) & (u <= np.abs(x0) * math.sqrt(beta))
    if np.any(turning):
        raise UnsupportedRegimeError(
            "turning/stalling trajectories cannot be inverted for an arrival time")

    a = u * u - beta * x0 * x0
    b = -2.0 * X * u
    c = X * X - x0 * x0
    disc = x0 * x0 * (u * u + beta * (X * X - x0 * x0))
    sqrt_disc = 2.0 * np.sqrt(disc)
    q = 0.5 * (-b + np.where(b <= 0, sqrt_disc, -sqrt_disc))

    out = np.full_like(x0, np.nan)
    tol = 1e-9 * (abs(X) + np.abs(x0) + 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        cand1 = np.where(a != 0, q / a, np.inf)
        cand2 = np.where(q != 0, c / q, np.inf)
    for cand in (cand1, cand2):
        good = (cand > 0) & np.isfinite(cand)
        resid = np.abs(trajectory_closed(x0, np.where(good, cand, 0.0), u, beta) - X)
        good &= resid <= tol
        # keep the smallest validated positive root
        take = good & (np.isnan(out) | (cand < out))
        out[take] = cand[take]
    if np.any(np.isnan(out)):
        raise NumericsError("no root of the arrival quadratic survived substitution")
    return float(out[0]) if scalar else out


def arrival_time_derivative(x0, X, u, beta):
    """dT/dx0 along the arrival map: -sqrt(1 + beta*T^2) / v(x0, T)."""
    T = arrival_time_closed(x0, X, u, beta)
    return -np.sqrt(1.0 + beta * np.asarray(T) ** 2) / velocity_closed(x0, T, u, beta)


# ---------------------------------------------------------------------------
# numeric integration of dx/dt = J/rho

@dataclass(frozen=True)
class Trajectory:
    """One integrated path: strictly increasing times, positions, velocities."""

    x0: float
    t: np.ndarray
    x: np.ndarray
    v: np.ndarray

    def first_crossing(self, X):
        """Linearly interpolated first-crossing time of x = X, or nan."""
        return first_crossing_time(self.t, self.x, X)


def first_crossing_time(ts, xs, X):
    if xs[0] >= X:
        return 0.0
    hit = np.nonzero(xs >= X)[0]
    if hit.size == 0:
        return math.nan
    i = hit[0]
    frac = (X - xs[i - 1]) / (xs[i] - xs[i - 1])
    return float(ts[i - 1] + frac * (ts[i] - ts[i - 1]))


class FieldVelocity:
    """Guidance velocity v = J/rho evaluated straight from a field."""

    def __init__(self, field, phase_floor=1e-30):
        self.field = field
        self.phase_floor = phase_floor
        self._closed = isinstance(field, GaussianField)

    def __call__(self, x, t):
        if self._closed:
            return self.field.velocity(x, t)
        rho, cur = self.field.density_current(x, t)
        bad = rho <= self.phase_floor
        if np.any(bad):
            raise NodeCrossingError("trajectory entered a density node",
                                    indices=np.nonzero(np.atleast_1d(bad))[0])
        return cur / rho


class TableVelocity:
    """Guidance velocity from precomputed (t, x) tables, bilinear interpolation.

    Grid-field trajectory runs would otherwise cost one FFT per RK4 substage;
    the table amortizes that to one FFT per time node.
    """

    def __init__(self, field, t0, t1, nt, phase_floor=1e-30):
        self.t_nodes = np.linspace(t0, t1, nt)
        rho, cur = field.velocity_table(self.t_nodes)
        self.x = field.x
        self.phase_floor = phase_floor
        self._rho = rho
        self._v = cur / np.maximum(rho, phase_floor)

    def __call__(self, x, t):
        tn = self.t_nodes
        i = min(max(int(np.searchsorted(tn, t) - 1), 0), len(tn) - 2)
        w = (t - tn[i]) / (tn[i + 1] - tn[i])
        v_lo = np.interp(x, self.x, self._v[i])
        v_hi = np.interp(x, self.x, self._v[i + 1])
        rho_lo = np.interp(x, self.x, self._rho[i])
        rho_hi = np.interp(x, self.x, self._rho[i + 1])
        rho = (1.0 - w) * rho_lo + w * rho_hi
        bad = rho <= self.phase_floor
        if np.any(bad):
            raise NodeCrossingError("trajectory entered a density node",
                                    indices=np.nonzero(np.atleast_1d(bad))[0])
        return (1.0 - w) * v_lo + w * v_hi


def _rk4_step(velocity, x, t, dt):
    k1 = velocity(x, t)
    k2 = velocity(x + 0.5 * dt * k1, t + 0.5 * dt)
    k3 = velocity(x + 0.5 * dt * k2, t + 0.5 * dt)
    k4 = velocity(x + dt * k3, t + dt)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_trajectory(field, x0, t_span, dt, phase_floor=1e-30) -> Trajectory:
    """Fixed-step 4th-order integration of dx/dt = J(x,t)/rho(x,t).

    The final step is shortened to land exactly on t_span[1].  Entering a
    density node aborts with NodeCrossingError.
    """
    velocity = FieldVelocity(field, phase_floor)
    t0, t1 = float(t_span[0]), float(t_span[1])
    if t1 <= t0:
        raise NumericsError("t_span must be increasing")
    n = max(1, int(math.ceil((t1 - t0) / dt)))
    ts = np.empty(n + 1)
    xs = np.empty(n + 1)
    ts[0], xs[0] = t0, float(x0)
    t = t0
    for i in range(n):
        step = min(dt, t1 - t)
        xs[i + 1] = _rk4_step(velocity, xs[i], t, step)
        t += step
        ts[i + 1] = t
    vs = np.array([float(velocity(x, tt)) for x, tt in zip(xs, ts)])
    return Trajectory(x0=float(x0), t=ts, x=xs, v=vs)


def integrate_crossings(velocity, x0s, thresholds, t_span, dt):
    """Vectorized RK4 over many trajectories, recording first crossings only.

    Returns {threshold: times}, with nan where a trajectory never crossed
    inside t_span.  Memory stays O(n) because paths are not stored.
    """
    x = np.array(x0s, dtype=float)
    t0, t1 = float(t_span[0]), float(t_span[1])
    crossings = {}
    for thr in thresholds:
        times = np.full(x.shape, math.nan)
        times[x >= thr] = 0.0
        crossings[thr] = times
    t = t0
    while t < t1 - 1e-15:
        step = min(dt, t1 - t)
        x_new = _rk4_step(velocity, x, t, step)
        for thr, times in crossings.items():
            hit = np.isnan(times) & (x_new >= thr)
            if np.any(hit):
                frac = (thr - x[hit]) / (x_new[hit] - x[hit])
                times[hit] = t + frac * step
        x = x_new
        t += step
    return crossings, x


def positions_at(x0s, t, u, beta):
    """Closed-form ensemble positions at one instant (Gaussian fields)."""
    return trajectory_closed(np.asarray(x0s, dtype=float), t, u, beta)


# ---------------------------------------------------------------------------
# spin-dependent velocity-term diagnostic

def spin_term_ratio(x, t, field, hbar=1.0):
    """Magnitude ratio (hbar/2)|d(log rho)/dx| / |dS/dx| of the spin correction.

    This is the 1D scalar diagnostic for the spin-dependent addition to the
    guidance law; the guidance used everywhere else is the plain J/rho, valid
    while this ratio stays small.  Where dS/dx vanishes the ratio is +inf.
    """
    x = np.asarray(x, dtype=float)
    if isinstance(field, GaussianField):
        dlr = field.dlog_density_dx(x, t)
        ds = field.dphase_dx(x, t)
    else:
        state = field.snapshot(t)
        rho_g = np.maximum(state.rho, field.numerics.phase_floor)
        dlr_grid = np.gradient(np.log(rho_g), state.dx)
        dlr = np.interp(x, state.x, dlr_grid)
        rho, cur = field.density_current(x, t)
        rho = np.maximum(rho, field.numerics.phase_floor)
        ds = field.mass * cur / rho
    num = 0.5 * hbar * np.abs(dlr)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(ds != 0.0, num / np.abs(ds), np.inf)
    return ratio


# ---------------------------------------------------------------------------
# quantile ensembles

@dataclass(frozen=True)
class TrajectoryEnsemble:
    """Deterministic equal-weight ensemble at Born-rule quantiles of |psi(.,0)|^2."""

    x0: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.x0) <= 0):
            raise NumericsError("ensemble initial positions must be strictly increasing")

    @property
    def n(self):
        return len(self.x0)

    def check_weights(self, tol=1e-9):
        return abs(float(np.sum(self.weights)) - 1.0) <= tol


def quantile_positions(config: RunConfig, n=None, field=None):
    """Initial positions at the (i+1/2)/n probability quantiles of the t=0 density."""
    num = config.numerics
    n = n or num.ensemble_points
    q = (np.arange(n) + 0.5) / n
    if config.packet.kind == "gaussian":
        x0 = config.packet.sigma0 * ndtri(q)
    else:
        from .wavepacket import field_for

        field = field or field_for(config)
        state = field.snapshot(0.0)
        pdf = state.rho / state.norm
        cdf = np.concatenate(([0.0], np.cumsum(0.5 * (pdf[1:] + pdf[:-1]) * np.diff(state.x))))
        cdf /= cdf[-1]
        keep = np.concatenate(([True], np.diff(cdf) > 0))
        x0 = np.interp(q, cdf[keep], state.x[keep])
    return x0


def build_ensemble(config: RunConfig, n=None, field=None) -> TrajectoryEnsemble:
    x0 = quantile_positions(config, n=n, field=field)
    w = np.full(len(x0), 1.0 / len(x0))
    return TrajectoryEnsemble(x0=x0, weights=w)
