"""Distributed camera network localization with unit dual quaternions."""

from .algebra import (
    DQ_IDENTITY,
    DegenerateInputError,
    Pose,
    dq_compose,
    dq_conjugate,
    dq_from_pose,
    dq_project_to_unit,
    dq_to_pose,
    quat_compose,
    quat_conjugate,
)
from .ddql import DdqlConfig, DivergenceError, ddql_cost, ddql_round, ddql_run, ddql_run_multisample, local_gradient
from .estimators import DDQLocalizer, TVLocalizer
from .metrics import SolverTrace, error_rotation, error_translation, gauge_note
from .scene import CameraNetwork, MeasurementSet, NoiseParams, build_planar_network, gen_measurements
from .tv import TvConfig, tv_run

__version__ = "0.1.0"
