"""Piecewise-constant-strain rod model with quasi-static shape and tip control."""

from .control import (StrainGains, TaskCoordinates, TaskGains, strain_control,
                      strain_effort, task_control, task_coordinates,
                      task_matrices)
from .errors import (ConfigError, NearSingular, NotConverged, OutOfRange,
                     PcsError, RankDeficient, RotationNearPi, SingularJacobian)
from .ik import IkResult, IkSettings, solve_ik, solve_ik_tracking
from .kinematics import (SectionProducts, ShapeSample, body_velocity, fk_pose,
                         fk_shape, jacobian)
from .liegroup import (Ad, Ad_inverse, Pose, ad, exp_se3, exp_so3, log_se3,
                       log_so3, tangent_T, tangent_T_quadrature, W_map)
from .rod import (REFERENCE_STRAIN, RodSpec, SectionMatrices, cross_section,
                  generalized_matrices, potential_energy, section_matrices,
                  strain_energy_density)
from .sim import (CircleTrajectory, IkExperimentReport, ShapeRegulationResult,
                  SimConfig, TipTrackingResult, Trace, rk4_step,
                  run_ik_experiment, run_shape_regulation, run_tip_tracking)
from .statics import (StaticsTerms, StaticsWorkspace, gravity_matrix,
                      stacked_jacobian, strain_rhs_distributed, strain_rhs_tip,
                      wrench_from_effort)

__version__ = "0.1.0"

__all__ = [
    "Ad", "Ad_inverse", "CircleTrajectory", "ConfigError", "IkExperimentReport",
    "IkResult", "IkSettings", "NearSingular", "NotConverged", "OutOfRange",
    "PcsError", "Pose", "REFERENCE_STRAIN", "RankDeficient", "RodSpec",
    "RotationNearPi", "SectionMatrices", "SectionProducts",
    "ShapeRegulationResult", "ShapeSample", "SimConfig", "SingularJacobian",
    "StaticsTerms", "StaticsWorkspace", "StrainGains", "TaskCoordinates",
    "TaskGains", "TipTrackingResult", "Trace", "W_map", "ad", "body_velocity",
    "cross_section", "exp_se3", "exp_so3", "fk_pose", "fk_shape",
    "generalized_matrices", "gravity_matrix", "jacobian", "log_se3", "log_so3",
    "potential_energy", "rk4_step", "run_ik_experiment", "run_shape_regulation",
    "run_tip_tracking", "section_matrices", "solve_ik", "solve_ik_tracking",
    "stacked_jacobian", "strain_control", "strain_effort",
    "strain_energy_density",
    "strain_rhs_distributed", "strain_rhs_tip", "tangent_T",
    "tangent_T_quadrature", "task_control",
    "task_coordinates", "task_matrices", "wrench_from_effort",
]
