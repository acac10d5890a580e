"""Verification of weighted graph states by random sampling tests."""

from .errors import CapabilityError, ConfigError, InputError, SourceError, StateError, WgvError
from .graph import (
    IndependenceCover,
    WeightedGraph,
    chromatic_number_exact,
    greedy_cover,
    neighbors,
    parse_graph,
    singleton_cover,
    validate_cover,
)
from .operators import (
    TestOperator,
    build_omega_adaptive,
    build_omega_adaptive_h,
    build_omega_nonadaptive,
    build_omega_nonadaptive_h,
    build_projector_Q,
    discretize_angle,
    operator_norm,
    spectral_gap,
)
from .protocols import (
    ProtocolConfig,
    ProtocolReport,
    Verifier,
    certificate_bound,
    copies_required,
    run_random_sampling_test,
)
from .sources import SourceSpec, make_source
from .state import (
    DensityMatrix,
    PlaneBasis,
    StateVector,
    alpha_expected,
    apply_local_phase_frame,
    build_weighted_graph_state,
    fidelity,
    measure_plane,
    measure_z,
)

__version__ = "0.1.0"
