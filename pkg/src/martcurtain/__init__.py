"""Discrete martingale optimal transport on the real line.

Left-curtain couplings via shadow measures, the martingale transport LP and
its dual, and finite checks of the structural results around them.
"""

from .config import Tolerances, configure, using
from .costs import CostError, Grid, LeftCurtainProbe, PowerSpread, SeparableBound, Summed, cost_from_json
from .coupling import (Coupling, DualTriple, MotSolution, NotConvexOrder, NotMartingale, check_martingale,
                       i_functional, j_functional, solve_mot, solve_mot_dual, transport_cost)
from .lp import LinearProgram, LpStatus, solve_lp
from .measures import (DiscreteMeasure, MeasureError, PiecewiseLinearConvex, check_convex_order,
                       check_extended_convex_order, potential)
from .shadow import ExtendedOrderViolated, left_curtain, shadow_atom, shadow_measure
from .verify import (SupportSet, check_finite_optimality, check_left_monotone, check_partial_sum_convex_order,
                     irreducible_components, verify_dual_splitting, verify_uniqueness)

__version__ = "0.1.0"
