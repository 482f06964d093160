"""Load frequency control workbench for the two-area reheat-thermal system.

Integral (swarm-tuned), LQR-PI and swarm-optimized full state-feedback
controllers are tuned, simulated under 1% load steps and compared.
"""
__version__ = "0.1.0"

from .errors import (AgcError, ConfigError, DimensionError, IntegrationError, OutputError,
                     SingularMatrixError, SolverError, ValidationError)
from .plant import PlantParams, TwoAreaModel, area_swap, from_params, paper_model
from .simkit import (FeedbackGain, ResponseMetrics, Scenario, Trajectory, closed_loop_matrix,
                     ise, metrics, quadratic_cost, simulate)
from .lqrsyn import CareSolution, care_residual, lqr, lqr_gain, paper_lqr_pi_gain, solve_care
from .psoopt import PsoResult, SwarmConfig, fitness, optimize

__all__ = [
    "AgcError", "ConfigError", "DimensionError", "IntegrationError", "OutputError",
    "SingularMatrixError", "SolverError", "ValidationError",
    "PlantParams", "TwoAreaModel", "area_swap", "from_params", "paper_model",
    "FeedbackGain", "ResponseMetrics", "Scenario", "Trajectory", "closed_loop_matrix",
    "ise", "metrics", "quadratic_cost", "simulate",
    "CareSolution", "care_residual", "lqr", "lqr_gain", "paper_lqr_pi_gain", "solve_care",
    "PsoResult", "SwarmConfig", "fitness", "optimize",
]
