"""Exact minimizers and solution paths for 1-D total-variation denoising
with L^p fidelity on piecewise constant data."""

from .closed_form import (K2Solution, lambda_threshold, lambda_threshold_p1, merged_value,
                          solve_k2, solve_k2_p1)
from .energy import (EnergyBreakdown, OptimalityReport, check_optimality, energy_exact, energy_G,
                     fidelity, fidelity_gradient, total_variation)
from .oracle import OracleResult, exhaustive_p1, solve_oracle_p1, solve_oracle_pgt1
from .path import (EventRecord, Group, PathSegment, PathSolverError, SolutionPath, compute_path,
                   constant_solution, group_value, initial_partition_and_lambda, merge_groups,
                   next_event, path_from_dict, path_to_dict, safe_lambda_floor, solve_at)
from .signal_core import (Signal, SignalError, SolutionVector, SolverParams, make_signal,
                          signal_from_samples, staircase_points)

__version__ = "0.1.0"
