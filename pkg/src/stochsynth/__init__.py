"""Interval-MDP abstraction and robust controller synthesis for
discrete-time stochastic systems with Gaussian noise."""

from .abstraction import (
    Imdp,
    RefRecord,
    ReferenceKernel,
    SparseRow,
    build_imdp,
    overapprox_transition_set,
    row_bounds,
    snap_reference,
)
from .certificate import CompletenessCertificate, check_certificate, suggest_parameters
from .engine import (
    SynthesisResult,
    extremal_distribution,
    interval_value_iteration,
    satisfaction_interval,
    validate,
)
from .expr import ExprAST, eval_interval, eval_point, parse_expression
from .gaussian import DiagGauss, GaussSet, rect_mass, rect_mass_bounds, std_normal_cdf
from .intervals import Box, Interval
from .metrics import discrete_w1, gauss_w1_bounds, ws_radius
from .partition import ControlGrid, Partition, build_control_grid, build_partition
from .properties import PropertySpec, parse_property
from .simulate import (
    Controller,
    McEstimate,
    Trajectory,
    evaluate_property,
    monte_carlo,
    run_trajectory,
    simulate_step,
    soundness_check,
)
from .system import SystemSpec, SynthesisParams, load_config, parse_config

__version__ = "0.1.0"

__all__ = [
    "Box",
    "CompletenessCertificate",
    "Controller",
    "ControlGrid",
    "DiagGauss",
    "ExprAST",
    "GaussSet",
    "Imdp",
    "Interval",
    "McEstimate",
    "Partition",
    "PropertySpec",
    "RefRecord",
    "ReferenceKernel",
    "SparseRow",
    "SynthesisParams",
    "SynthesisResult",
    "SystemSpec",
    "Trajectory",
    "build_control_grid",
    "build_imdp",
    "build_partition",
    "check_certificate",
    "discrete_w1",
    "eval_interval",
    "eval_point",
    "evaluate_property",
    "extremal_distribution",
    "gauss_w1_bounds",
    "interval_value_iteration",
    "load_config",
    "monte_carlo",
    "overapprox_transition_set",
    "parse_config",
    "parse_expression",
    "parse_property",
    "rect_mass",
    "rect_mass_bounds",
    "row_bounds",
    "run_trajectory",
    "satisfaction_interval",
    "simulate_step",
    "snap_reference",
    "soundness_check",
    "std_normal_cdf",
    "suggest_parameters",
    "validate",
    "ws_radius",
]
