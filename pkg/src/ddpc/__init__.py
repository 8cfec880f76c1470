"""Data-driven predictive control for regular discrete-time descriptor systems."""

from .behavior import (
    HankelRepresentation,
    PEReport,
    build_hankel_representation,
    generate_pe_input,
    hankel,
    is_persistently_exciting,
    membership,
    required_pe_order,
    synthesize,
    vectorize,
)
from .descriptor import (
    DescriptorSystem,
    QuasiWeierstrass,
    Trajectory,
    check_regularity,
    is_consistent_initial,
    observability_index,
    quasi_weierstrass,
    r_controllable,
    r_observable,
    reconstruct_state,
    simulate,
)
from .errors import (
    DdpcError,
    DomainError,
    GenerationError,
    InconsistentWindowError,
    InfeasibleError,
    InputError,
    NumericalError,
    StepError,
)
from .mpc import ClosedLoopLog, MpcConfig, mpc_step, run_closed_loop, stability_diagnostics
from .ocp import (
    OcpSolution,
    OcpSpec,
    build_data_driven_ocp,
    build_model_based_ocp,
    solve_data_driven_ocp,
    solve_model_based_ocp,
)
from .qp import solve_equality_qp

__version__ = "0.1.0"
