"""Adaptive optimal output regulation for linear systems.

Learns the optimal output-regulating controller of a continuous-time linear
plant from trajectory data alone (state, input and exosystem signals), using
integral reinforcement learning in two variants: the original full-size
formulation and a decoupled one that splits each policy-iteration solve into
two much smaller ones.  A model-based oracle (Kleinman policy iteration plus
an exact regulator-equation solver) verifies every learned quantity.
"""

from .basis import BasisSet, build_basis, null_basis, sylvester_images, sylvester_map
from .config import ExperimentConfig, load_config, parse_config, save_config
from .excitation import (
    DataMatrices,
    ExcitationSpec,
    SampleSchedule,
    TrajectoryLog,
    build_data_matrices,
    check_rank_original,
    check_rank_refined,
    error_state,
    export_trajectory,
    simulate,
    simulate_closed_loop,
    tracking_error,
)
from .experiment import ExperimentResult, compare_report, run_experiment
from .kernels import backend_name
from .learner import (
    LearnedModelData,
    LearnerConfig,
    LearnResult,
    assemble_regression,
    assemble_regulator_lsq,
    learn_original,
    learn_refined,
    learned_controller,
    refined_identify,
    refined_iterate,
    refined_sylvester,
)
from .oracle import (
    Controller,
    CostWeights,
    Exosystem,
    OracleSolution,
    Plant,
    PolicyIterate,
    RegulatorSolution,
    check_assumptions,
    initial_gain_for_stable_plant,
    is_hurwitz,
    lyapunov_solve,
    solve_are_kleinman,
    solve_regulator,
    synthesize_controller,
)
from .tensorops import (
    LsqResult,
    duplication_matrix,
    kron,
    lsq_solve,
    numerical_rank,
    quad_form_identity_check,
    sym_from_vecs,
    vec,
    vecs,
    vecv,
)

__version__ = "0.1.0"
