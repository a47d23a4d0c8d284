"""Model-free adaptive-dynamic-programming output-feedback LQR.

Learn the optimal discrete-time LQR gain from input/output data alone:
a dynamic output-feedback controller built on companion-form internal
models, with value-iteration, policy-iteration, and switched learning
schemes, plus model-based Riccati ground truth for verification.
"""

from .adp import (
    IterationTrace,
    LearnerState,
    RegressorBatch,
    collect,
    pi_step,
    run_pi,
    run_si,
    run_vi,
    stability_criterion,
    vi_step,
)
from .exceptions import OfbLqrError
from .harness import (
    ExperimentConfig,
    compare_controllers,
    emit_outputs,
    run_experiment,
    sim1_config,
    sim2_config,
)
from .internal_model import (
    CharPoly,
    InternalModel,
    ParameterizationMap,
    adjugate_coefficients,
    build_parameterization,
    check_rank_M,
    companion_from_poly,
    identify_parameterization,
    step_internal,
)
from .lti import (
    LtiSystem,
    NoiseSpec,
    SinusoidNoise,
    Trajectory,
    build_reconstructor,
    exploration_noise,
    luenberger_step,
    place_observer_poles,
    reconstruct_state,
    simulate,
)
from .matops import delta_v, delta_vw, lstsq, unvech, unvec, vec, vech
from .riccati import AreSolution, are_pi, are_vi, compare_value_functions, dlyap

__version__ = "0.1.0"

__all__ = [
    "AreSolution", "CharPoly", "ExperimentConfig", "InternalModel",
    "IterationTrace", "LearnerState", "LtiSystem", "NoiseSpec", "OfbLqrError",
    "ParameterizationMap", "RegressorBatch", "SinusoidNoise", "Trajectory",
    "adjugate_coefficients", "are_pi", "are_vi", "build_parameterization",
    "build_reconstructor", "check_rank_M", "collect", "companion_from_poly",
    "compare_controllers", "compare_value_functions", "delta_v", "delta_vw",
    "dlyap", "emit_outputs", "exploration_noise", "identify_parameterization",
    "lstsq", "luenberger_step", "pi_step", "place_observer_poles",
    "reconstruct_state", "run_experiment", "run_pi", "run_si", "run_vi", "sim1_config",
    "sim2_config", "simulate", "stability_criterion", "step_internal",
    "unvec", "unvech", "vec", "vech", "vi_step",
]
