"""Nonsynchronous covolatility estimation and moderate-deviation experiments."""

__version__ = "0.1.0"

from .asymptotics import (SpeedSpec, abs_moment, c1_statistic, check_speed, gaussian_functional,
                          integrated_covolatility, isserlis_variance_oracle, nu, nu_ell,
                          rate_function, sigma_bipower, variance_Vn)
from .design import ReducedDesign, build_reduced_design, dual_reduced_design
from .estimators import (EstimateResult, FunctionSpec, abs_power, bipower_general, bipower_power,
                         drift_free_estimator, hayashi_yoshida, realized_covolatility)
from .mdp_lab import (MdpExperimentConfig, MdpReport, MDepSequenceSpec, block_decompose,
                      blocking_variance_gap, chen_ledoux_statistic, chen_ledoux_verdict,
                      clt_check, generate_mdependent, run_mdp_experiment)
from .paths import ModelSpec, constant_model, piecewise_model, simulate_paths, sine_model
from .quadrature import Quadrature, QuadratureError
from .sampling import (Interval, ObservationGrid, alternating_grids, poisson_grids,
                       synchronous_grid)

__all__ = [
    "abs_moment",
    "abs_power",
    "alternating_grids",
    "bipower_general",
    "bipower_power",
    "block_decompose",
    "blocking_variance_gap",
    "build_reduced_design",
    "c1_statistic",
    "check_speed",
    "chen_ledoux_statistic",
    "chen_ledoux_verdict",
    "clt_check",
    "constant_model",
    "drift_free_estimator",
    "dual_reduced_design",
    "EstimateResult",
    "FunctionSpec",
    "gaussian_functional",
    "generate_mdependent",
    "hayashi_yoshida",
    "integrated_covolatility",
    "Interval",
    "isserlis_variance_oracle",
    "MDepSequenceSpec",
    "MdpExperimentConfig",
    "MdpReport",
    "ModelSpec",
    "nu",
    "nu_ell",
    "ObservationGrid",
    "piecewise_model",
    "poisson_grids",
    "Quadrature",
    "QuadratureError",
    "rate_function",
    "realized_covolatility",
    "ReducedDesign",
    "run_mdp_experiment",
    "sigma_bipower",
    "simulate_paths",
    "sine_model",
    "SpeedSpec",
    "synchronous_grid",
    "variance_Vn",
]
