"""Random billiard Markov chains with thermostatted boundaries."""

from .geometry import (Arc, BoundaryComponent, CornerHitError, GrazingError,
                       PhasePoint, Plate, PreCollisionPoint, Segment, Table,
                       component_area, disc_union, equilateral_triangle,
                       inward_normal, polygon, specular, trace, two_plates,
                       unit_square)
from .rng import RngStream
from .sampling import (MomentTable, ReflectionLaw, moment_table,
                       reciprocity_test, sample_knudsen_cosine,
                       sample_maxwellian, speed_cdf, speed_ppf)
from .chain import (CollisionRecord, InvalidSegmentError, TrajectorySummary,
                    proper_time_reversal, run, sample_initial, step)
from .stationary import (IllPosedError, SpeedLawMixture, TransitionMatrix,
                         build_linear_system, component_energies,
                         estimate_transition_matrix, exact_transition_matrix,
                         solve_stationary, stationary_mixture)
from .entropy import (EntropyReport, entropy_production, potential_term,
                      three_temperature_heats, two_plates_entropy)
from .engine import (EngineParams, EngineRecord, UndefinedEfficiencyError,
                     belt_collision, collision_matrix, drift_rate, efficiency,
                     engine_run, run_ensemble)
from .kernels import BACKEND

__version__ = "0.1.0"
