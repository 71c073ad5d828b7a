"""Kinetostatic design workbench for flexure-based decoupled XYZ stages."""

from .kinetostatics import ALUMINIUM, Material, SpatialFrame, section_properties, transfer_matrix
from .mcpf import McpfParams, StiffnessReport, parameter_sweep, stiffness_report
from .motion import FfPidController, PathSpec, Plant2, plant_from_axis, plant_from_tf, simulate_tracking
from .optimize import optimize, select_design, xy_problem, z_problem
from .stage import StageConfig, build_chain_model, natural_frequencies

__version__ = "0.1.0"

__all__ = [
    "ALUMINIUM", "Material", "SpatialFrame", "section_properties", "transfer_matrix",
    "McpfParams", "StiffnessReport", "parameter_sweep", "stiffness_report",
    "FfPidController", "PathSpec", "Plant2", "plant_from_axis", "plant_from_tf", "simulate_tracking",
    "optimize", "select_design", "xy_problem", "z_problem",
    "StageConfig", "build_chain_model", "natural_frequencies",
]
