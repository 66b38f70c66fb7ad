"""The rival time distributions and their comparison metrics.

Three constructions over the same run config:

* ``arrival_dist_bohmian``: change-of-variables density over first-arrival
  times at a threshold X, transported from the Born weight of the initial
  positions through the trajectory map.
* ``arrival_dist_pcd``: the probability-current density J(X, t), normalized
  over a window.  For freely spreading Gaussians the two agree identically;
  quantifying that equivalence (and where it breaks) is the point.
* ``transit_time_dist``: density over the time actually spent inside the
  field region [entry, entry+d] while the field is on, which differs from the
  arrival-time density whenever the packet starts with mass inside the region.

All densities carry both a raw (sub-normalized, excluded mass removed) and a
renormalized variant; ``excluded_mass`` records what the construction dropped
(mass already past the target, and mass that can never arrive).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.special import erfc, ndtri

from . import bohm, wavepacket
from .config import GAUSSIAN, RunConfig, derived_parameters
from .errors import NumericsError, RegimeError, UnsupportedRegimeError

ARRIVAL_BOHM = "arrival_bohm"
ARRIVAL_PCD = "arrival_pcd"
TRANSIT_BOHM = "transit_bohm"


@dataclass(frozen=True)
class TimeDistribution:
    """Normalized density over time on an increasing (possibly nonuniform) grid."""

    t: np.ndarray
    density: np.ndarray          # renormalized: integrates to 1 on the support
    density_raw: np.ndarray      # sub-normalized: carries only the included mass
    kind: str
    excluded_mass: float
    excluded_parts: dict = dc_field(default_factory=dict)
    normalized: bool = True
    meta: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        if np.any(self.density < 0) or np.any(self.density_raw < 0):
            raise NumericsError("time densities must be non-negative")
        if not (0.0 <= self.excluded_mass < 1.0):
            raise NumericsError("excluded_mass must lie in [0, 1)")

    @property
    def integral(self):
        return float(np.trapezoid(self.density, self.t))

    @property
    def raw_integral(self):
        return float(np.trapezoid(self.density_raw, self.t))

    def cdf(self):
        inc = np.concatenate(([0.0], np.cumsum(
            0.5 * (self.density[1:] + self.density[:-1]) * np.diff(self.t))))
        return inc

    def mean(self):
        return float(np.trapezoid(self.t * self.density, self.t))

    def at(self, t):
        """Renormalized density linearly interpolated at arbitrary times."""
        return np.interp(t, self.t, self.density, left=0.0, right=0.0)


@dataclass(frozen=True)
class DistanceReport:
    l1: float
    kolmogorov_smirnov: float
    mean_gap: float


def _gaussian_tail(z):
    """P(standard normal > z)."""
    return 0.5 * erfc(z / math.sqrt(2.0))


def _gaussian_exclusions(config, X):
    """(ahead, never_arrive) masses for a threshold X right of the packet."""
    packet = config.packet
    beta = derived_parameters(config).beta_spread
    stall = bohm.stall_boundary(packet.u, beta)
    ahead = _gaussian_tail(X / packet.sigma0)
    never = _gaussian_tail(-stall / packet.sigma0)
    return ahead, never, stall


def _require_arrivals(config, never_mass):
    if never_mass > config.numerics.never_arrive_mass_max:
        raise UnsupportedRegimeError(
            f"{never_mass:.3g} of the initial mass lies behind the stall boundary "
            "and would turn around or never arrive; this is a turning-point "
            "dominated configuration")


def _arrival_time_grid(config, X, n=None):
    """Time grid for arrival densities at X: quantile-adaptive plus a linear head.

    Quantile-mapped arrival times concentrate points where the density is
    large; the linear head resolves the early-arrival region fed by initial
    mass close to the threshold.  The rear cut keeps the omitted arriving
    mass below a tenth of dist_tol.
    """
    num = config.numerics
    n = n or num.time_points
    packet = config.packet
    beta = derived_parameters(config).beta_spread
    ahead, never, stall = _gaussian_exclusions(config, X)
    _require_arrivals(config, never)

    p_lo = never + min(0.1 * num.dist_tol, 0.25 * (1.0 - never - ahead))
    x0_hi = min(X - 1e-12 * (abs(X) + packet.sigma0), 8.5 * packet.sigma0)
    p_hi = 1.0 - _gaussian_tail(x0_hi / packet.sigma0)
    ps = np.linspace(p_lo, p_hi, 3 * n // 4)
    x0s = packet.sigma0 * ndtri(ps)
    x0s = np.minimum(x0s, x0_hi)
    times = bohm.arrival_time_closed(x0s, X, packet.u, beta)
    head = np.linspace(0.0, X / packet.u, n // 4)
    grid = np.unique(np.concatenate(([0.0], head, times)))
    return grid


def _bohmian_raw_density(config, X, t_grid):
    """rho0(x0(T)) * |dx0/dT| from the closed trajectory map."""
    packet = config.packet
    beta = derived_parameters(config).beta_spread
    u = packet.u
    T = np.asarray(t_grid, dtype=float)
    x0 = bohm.inverse_arrival(T, X, u, beta)
    one = 1.0 + beta * T * T
    dx0_dT = -(u * one + (X - u * T) * beta * T) / one ** 1.5
    rho0 = wavepacket.gaussian_density(x0, 0.0, packet.sigma0, packet.k0,
                                       config.units.hbar, config.units.mass)
    return rho0 * np.abs(dx0_dT)


def arrival_dist_bohmian(X, config: RunConfig, n=None) -> TimeDistribution:
    """Arrival-time density at X from the Born-weight change of variables.

    Gaussian packets use the exact inverse of the closed trajectory map;
    non-Gaussian packets integrate the quantile ensemble through the guidance
    field and differentiate the resulting monotone x0 -> T table.
    """
    if config.packet.kind == GAUSSIAN:
        t_grid = _arrival_time_grid(config, X, n)
        raw = _bohmian_raw_density(config, X, t_grid)
        ahead, never, _ = _gaussian_exclusions(config, X)
        parts = {"ahead_of_target": ahead, "never_arrive": never}
        return _finish(t_grid, raw, ARRIVAL_BOHM, parts, meta={"X": X})
    return _arrival_bohm_numeric(X, config, n)


def arrival_dist_pcd(X, config: RunConfig, n=None) -> TimeDistribution:
    """Arrival-time density at X proportional to the probability current J(X, t).

    The window is wide enough that the truncated current mass stays below
    dist_tol; a genuinely negative current on the window means the density
    interpretation fails and raises a regime error.
    """
    if config.packet.kind == GAUSSIAN:
        t_grid = _arrival_time_grid(config, X, n)
        packet = config.packet
        raw = wavepacket.gaussian_current(X, t_grid, packet.sigma0, packet.k0,
                                          config.units.hbar, config.units.mass)
        ahead, never, _ = _gaussian_exclusions(config, X)
        parts = {"ahead_of_target": ahead, "never_arrive": never}
    else:
        t_grid, field = _numeric_time_window(X, config, n)
        _, raw = field.at_fixed_position(X, t_grid)
        included = float(np.trapezoid(np.clip(raw, 0.0, None), t_grid))
        parts = {"outside_window": max(0.0, 1.0 - included)}
    if np.min(raw) < -1e-12 * max(np.max(raw), 1e-300):
        raise RegimeError(
            f"current at X={X} goes negative on the window (min {np.min(raw):.3e}); "
            "the flux is not interpretable as an arrival density here")
    raw = np.clip(raw, 0.0, None)
    return _finish(t_grid, raw, ARRIVAL_PCD, parts, meta={"X": X})


def transit_time_dist(config: RunConfig, entry=0.0, n=None) -> TimeDistribution:
    """Density over the time spent inside [entry, entry+d] while the field is on.

    Particles starting left of the region get exit-minus-entry time; particles
    already inside at switch-on get their exit time; particles beyond the far
    edge never interact and are excluded (their weight lands in
    excluded_parts['never_interact'] for the spin stage to place).
    """
    if config.packet.kind != GAUSSIAN:
        return _transit_numeric(config, entry, n)

    num = config.numerics
    n = n or num.time_points
    packet = config.packet
    beta = derived_parameters(config).beta_spread
    u, sigma0 = packet.u, packet.sigma0
    exit_pos = entry + config.rotator.d

    ahead = _gaussian_tail(exit_pos / sigma0)
    stall = bohm.stall_boundary(u, beta)
    never_enter = _gaussian_tail(-stall / sigma0) if entry >= stall else 0.0
    _require_arrivals(config, never_enter)

    # rear branch: starts left of the region, enters and leaves it
    p_lo = never_enter + min(0.1 * num.dist_tol, 0.25)
    p_entry = 1.0 - _gaussian_tail(entry / sigma0)
    eps = 1e-10
    ps_rear = np.linspace(p_lo, max(p_entry - eps, p_lo + eps), n // 2)
    x0_rear = np.minimum(sigma0 * ndtri(ps_rear), entry - 1e-12 * sigma0)
    t_exit = bohm.arrival_time_closed(x0_rear, exit_pos, u, beta)
    t_entry = bohm.arrival_time_closed(x0_rear, entry, u, beta)
    tau_rear = t_exit - t_entry
    dtau_rear = np.abs(bohm.arrival_time_derivative(x0_rear, exit_pos, u, beta)
                       - bohm.arrival_time_derivative(x0_rear, entry, u, beta))

    # inside branch: already in the region at switch-on, leaves at t_exit
    x0_in = np.linspace(entry + 1e-12 * sigma0, exit_pos - 1e-9 * sigma0, n // 2)
    tau_in = bohm.arrival_time_closed(x0_in, exit_pos, u, beta)
    dtau_in = np.abs(bohm.arrival_time_derivative(x0_in, exit_pos, u, beta))

    x0_all = np.concatenate([x0_rear, x0_in])
    tau_all = np.concatenate([tau_rear, tau_in])
    dtau_all = np.concatenate([dtau_rear, dtau_in])
    order = np.argsort(tau_all)
    tau_sorted = tau_all[order]
    rho0 = wavepacket.gaussian_density(x0_all[order], 0.0, sigma0, packet.k0,
                                       config.units.hbar, config.units.mass)
    raw = rho0 / dtau_all[order]

    parts = {"never_interact": ahead, "never_enter": never_enter}
    return _finish(tau_sorted, raw, TRANSIT_BOHM, parts,
                   meta={"entry": entry, "exit": exit_pos})


def _finish(t_grid, raw, kind, parts, meta):
    t_grid = np.asarray(t_grid, dtype=float)
    raw = np.asarray(raw, dtype=float)
    keep = np.concatenate(([True], np.diff(t_grid) > 0))
    t_grid, raw = t_grid[keep], raw[keep]
    total = float(np.trapezoid(raw, t_grid))
    if total <= 0:
        raise NumericsError(f"{kind} density integrated to {total!r}")
    excluded = float(min(sum(parts.values()), 1.0 - 1e-15))
    return TimeDistribution(t=t_grid, density=raw / total, density_raw=raw,
                            kind=kind, excluded_mass=excluded,
                            excluded_parts=dict(parts), normalized=True,
                            meta=dict(meta))


# ---------------------------------------------------------------------------
# numeric (non-Gaussian) routes

def _numeric_time_window(X, config, n=None):
    """Shared t-window and spectral field for numeric arrival constructions."""
    num = config.numerics
    n = n or num.time_points
    packet = config.packet
    # the envelope spreads like the matched Gaussian; use its stall estimate
    beta = derived_parameters(config).beta_spread
    ahead, never, stall = _gaussian_exclusions(config, X)
    _require_arrivals(config, never)
    p_lo = never + min(0.1 * num.dist_tol, 0.25 * (1.0 - never - ahead))
    x0_lo = packet.sigma0 * ndtri(p_lo)
    t_hi = bohm.arrival_time_closed(x0_lo, X, packet.u, beta) * 1.2
    field = wavepacket.field_for(config, t_max=t_hi)
    t_grid = np.linspace(0.0, t_hi, n)
    return t_grid, field

def _arrival_bohm_numeric(X, config, n=None):
    num = config.numerics
    n_tr = min(num.ensemble_points, 4096)
    t_grid, field = _numeric_time_window(X, config)
    ens = bohm.build_ensemble(config, n=n_tr, field=field)
    dt = config.packet.sigma0 * num.dt_factor / max(config.packet.u, 1e-12)
    dt = max(dt, t_grid[-1] / 200000.0)  # keep ensemble runs tractable
    vel = bohm.TableVelocity(field, 0.0, t_grid[-1], min(n or num.time_points, 2048),
                             phase_floor=num.phase_floor)
    crossings, _ = bohm.integrate_crossings(vel, ens.x0, [X], (0.0, t_grid[-1]), dt)
    times = crossings[X]
    included = np.isfinite(times) & (ens.x0 < X)
    if not np.any(included):
        raise NumericsError("no trajectory reached the threshold inside the window")
    excluded = 1.0 - included.sum() / ens.n
    tau, raw = _map_density(times[included], ens.x0[included], field)
    return _finish(tau, raw, ARRIVAL_BOHM,
                   {"never_or_outside": excluded}, meta={"X": X})


def _transit_numeric(config, entry, n=None):
    num = config.numerics
    n_tr = min(num.ensemble_points, 4096)
    exit_pos = entry + config.rotator.d
    t_grid, field = _numeric_time_window(exit_pos, config)
    ens = bohm.build_ensemble(config, n=n_tr, field=field)
    dt = config.packet.sigma0 * num.dt_factor / max(config.packet.u, 1e-12)
    dt = max(dt, t_grid[-1] / 200000.0)
    vel = bohm.TableVelocity(field, 0.0, t_grid[-1], min(n or num.time_points, 2048),
                             phase_floor=num.phase_floor)
    crossings, _ = bohm.integrate_crossings(vel, ens.x0, [entry, exit_pos],
                                            (0.0, t_grid[-1]), dt)
    t_in, t_out = crossings[entry], crossings[exit_pos]
    inside_at_start = (ens.x0 >= entry) & (ens.x0 <= exit_pos)
    tau = np.where(inside_at_start, t_out, t_out - t_in)
    included = np.isfinite(tau) & (ens.x0 <= exit_pos)
    if not np.any(included):
        raise NumericsError("no trajectory completed a transit inside the window")
    excluded = 1.0 - included.sum() / ens.n
    tau_grid, raw = _map_density(tau[included], ens.x0[included], field)
    return _finish(tau_grid, raw, TRANSIT_BOHM,
                   {"never_or_outside": excluded},
                   meta={"entry": entry, "exit": exit_pos})


def _map_density(times, x0s, field):
    """Change-of-variables density from a monotone x0 -> time table."""
    order = np.argsort(times)
    tau = times[order]
    x0 = x0s[order]
    state = field.snapshot(0.0)
    rho0 = np.interp(x0, state.x, state.rho)
    dx0_dtau = np.gradient(x0, tau)
    return tau, rho0 * np.abs(dx0_dtau)


# ---------------------------------------------------------------------------
# histogram cross-check and distances

def empirical_dist(events, weights, bins, excluded_mass=0.0,
                   kind="empirical") -> TimeDistribution:
    """Weighted histogram density over event times.

    The raw density integrates to the included weight (1 - excluded_mass);
    an empty included set is a degenerate input.
    """
    events = np.asarray(events, dtype=float)
    weights = np.asarray(weights, dtype=float)
    good = np.isfinite(events)
    if not np.any(good):
        raise NumericsError("empirical distribution over an empty event set")
    counts, edges = np.histogram(events[good], bins=bins, weights=weights[good])
    widths = np.diff(edges)
    centers = 0.5 * (edges[1:] + edges[:-1])
    raw = counts / widths
    total = float(np.sum(counts))
    return TimeDistribution(t=centers, density=raw / total, density_raw=raw,
                            kind=kind, excluded_mass=float(excluded_mass),
                            excluded_parts={"given": float(excluded_mass)},
                            normalized=True, meta={"bins": int(np.size(widths))})


def dist_distance(p: TimeDistribution, q: TimeDistribution,
                  norm_tol=1e-3) -> DistanceReport:
    """L1, Kolmogorov-Smirnov, and mean-gap distances on a common grid.

    Both inputs must be normalized; they are resampled onto the union of
    their supports (zero outside their own).
    """
    for dist in (p, q):
        if abs(dist.integral - 1.0) > norm_tol:
            raise NumericsError(
                f"dist_distance needs normalized inputs; {dist.kind} integrates "
                f"to {dist.integral!r}")
    grid = np.unique(np.concatenate([p.t, q.t]))
    pd = p.at(grid)
    qd = q.at(grid)
    l1 = float(np.trapezoid(np.abs(pd - qd), grid))
    steps = np.diff(grid)
    cp = np.concatenate(([0.0], np.cumsum(0.5 * (pd[1:] + pd[:-1]) * steps)))
    cq = np.concatenate(([0.0], np.cumsum(0.5 * (qd[1:] + qd[:-1]) * steps)))
    ks = float(np.max(np.abs(cp - cq)))
    mean_gap = abs(float(np.trapezoid(grid * pd, grid)) - float(np.trapezoid(grid * qd, grid)))
    return DistanceReport(l1=l1, kolmogorov_smirnov=ks, mean_gap=mean_gap)
