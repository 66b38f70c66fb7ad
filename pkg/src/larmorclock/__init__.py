"""Quantum arrival/transit-time distributions read out through a Larmor spin
clock: Bohmian-trajectory and probability-current predictions for a wave
packet crossing a bounded constant-magnetic-field region, mapped to the
spin-measurement probabilities a Stern-Gerlach analyzer would see.
"""

__version__ = "0.1.0"

from .config import (DerivedParams, NumericsSpec, PacketSpec, RegimeReport,
                     RotatorSpec, RunConfig, Scales, UnitSystem,
                     check_regime, derived_parameters, spreading_rate)
from .errors import (AlreadyPastError, ConfigError, CoverageError,
                     DegenerateMappingError, GridTooSmallError,
                     LarmorClockError, NodeCrossingError, NumericsError,
                     OutOfDomainError, PhaseUndefinedError, RegimeError,
                     UnsupportedRegimeError)
from .wavepacket import (GaussianField, GridState, SpectralField,
                         continuity_residual, current_from_samples,
                         density_current, evolve_spectral, field_for,
                         gaussian_amplitude, gaussian_current,
                         gaussian_density, gaussian_phase,
                         nongaussian_momentum, nongaussian_position,
                         packet_width, phase)
from .bohm import (Trajectory, TrajectoryEnsemble, arrival_time_closed,
                   build_ensemble, integrate_trajectory, inverse_arrival,
                   quantile_positions, spin_term_ratio, stall_boundary,
                   trajectory_closed, turning_point, velocity_closed)
from .timedist import (DistanceReport, TimeDistribution, arrival_dist_bohmian,
                       arrival_dist_pcd, dist_distance, empirical_dist,
                       transit_time_dist)
from .spinclock import (ObservableCurve, SpinDistribution, SpinState,
                        observable_curve, projection_probs, pushforward_phi,
                        rotation_angle, spin_evolve)
from .scatter1d import (LarmorLimitReport, ScatteringInputs,
                        ScatteringSolution, larmor_limit_prediction,
                        limit_deviation_sweep, re_im_larmor_reduced,
                        solve_branch, transmission_scan, transmitted_re_im,
                        transmitted_spin_state)
