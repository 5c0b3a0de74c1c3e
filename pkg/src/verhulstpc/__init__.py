"""Discretized Verhulst power-rate allocation for multirate DS/CDMA uplinks."""
from .analytic import (InfeasibleSystemError, InterferenceSystem, OptimalPower, build_system,
                       solve_optimal, spectral_radius)
from .channel import ErrorModel, GainMatrix, build_gain_matrix, perturb
from .linkmath import CirTargets, achieved_rate, cir, cir_targets, snir
from .metrics import ConvergenceReport, NseSeries, detect_convergence, nse, nser
from .scenario import Scenario, ScenarioError, load_scenario, loads_scenario
from .verhulst import AlphaStrategy, OpCounter, PowerState, RunTrace, alpha_next, init_state, run, step

__version__ = "0.1.0"
