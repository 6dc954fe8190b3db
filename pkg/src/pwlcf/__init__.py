"""Piecewise-linear car-following models on ring and open roads."""

__version__ = "0.1.0"

from .pwl_law import (AffinePiece, DiagramPoint, PwlLaw, argmin_argmax, check_connected,
                      check_stability, evaluate, fit_concave, flow_diagram, from_min_pieces,
                      kerner_law, min_plus_law, shape_bound_check, table_law)
from .ring_dynamics import (RingConfig, RingState, check_nonexpansive_empirical, connectedness,
                            growth_rate, simulate_ring, step_ring)
from .stationary import (EigenPair, eigen_residual, eigen_solution_ring, empirical_diagram,
                         speed_diagram)
from .open_dynamics import (LeadProfile, OpenState, StationaryHeadway, eigen_solution_open,
                            hysteresis_series, simulate_open, stationary_headway, step_open)
from .eulerian_dual import (CountField, SegmentGrid, TimeField, duality_check, step_count,
                            step_time)
