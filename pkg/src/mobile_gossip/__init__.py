"""Gossip spreading in mobile random geometric networks."""

__version__ = "0.1.0"

from .errors import ConfigError, InvalidParameterError, NumericalError
from .geometry import (CutSet, SpatialIndex, WorldConfig, build_index, crossing_edges,
                       default_radius, distance, is_connected, neighbors)
from .mobility import MobilityKind, MobilitySpec, Snapshot, init_stationary, step
from .gossip import (GossipMode, SpreadTrajectory, gossip_round, increment_estimate,
                     run_spread, spreading_time)
from .theory import (contact_pairs_integral, density_profile, spreading_time_bound,
                     static_phi, table1_phi, velocity_phi)
from .conductance import (BISECTION, AxisBisection, CutFamily, LineCut, brute_force_min,
                          edge_count_quotient, estimate_cut_quotient, minimize_over_family)

__all__ = [
    "ConfigError", "InvalidParameterError", "NumericalError",
    "CutSet", "SpatialIndex", "WorldConfig", "build_index", "crossing_edges",
    "default_radius", "distance", "is_connected", "neighbors",
    "MobilityKind", "MobilitySpec", "Snapshot", "init_stationary", "step",
    "GossipMode", "SpreadTrajectory", "gossip_round", "increment_estimate",
    "run_spread", "spreading_time",
    "contact_pairs_integral", "density_profile", "spreading_time_bound",
    "static_phi", "table1_phi", "velocity_phi",
    "BISECTION", "AxisBisection", "CutFamily", "LineCut", "brute_force_min",
    "edge_count_quotient", "estimate_cut_quotient", "minimize_over_family",
]
