"""Karcher-mean ergodic averaging on Hadamard spaces.

Model spaces (Euclidean, river plane, Poincare disk), certified Karcher
means, nonexpansive-map orbits with mean-sequence diagnostics, contraction
semigroups from monotone fields, and a config-driven experiment CLI.
"""

from .geometry import (
    ConvexSetSpec,
    MembershipError,
    Point,
    Space,
    SpaceMismatchError,
    UnsupportedSetError,
    ViolationReport,
    check_cat0_sample,
    check_cauchy_schwarz_sample,
    check_four_point_sample,
    check_quasi_inner_identities,
    estimate_asymptotic_center,
    project_convex,
    quasi_inner,
    sample_in_set,
    set_contains,
)
from .spaces import (
    CircleChordArcSpace,
    EuclideanSpace,
    PoincareDisk,
    RiverPath,
    RiverPlane,
    parse_space,
)
from .frechet import (
    CertificateError,
    FrechetProblem,
    MeanCertificate,
    SolverError,
    certify_mean,
    frechet_value,
    incremental_prox_mean,
    karcher_mean,
    mean_distance_slack,
)
from .mappings import (
    FixedSetUnknownError,
    MappingSpec,
    PiecewiseLinear,
    apply,
    check_nonexpansive,
    compose_maps,
    custom_map,
    identity_map,
    parse_mapping,
    project_fixed_set,
    projection_map,
    residual,
    river_product_map,
    rotation_map,
)
from .ergodic import (
    DiagnosticsRecord,
    DiagnosticsTrace,
    MeanTrace,
    OrbitTrace,
    ProjectionTrace,
    Verdict,
    generate_orbit,
    geometric_schedule,
    halfspace_membership_check,
    mean_sequence,
    projection_trace,
    verdict,
)
from .semigroup import (
    CoarseGridError,
    CurveTrace,
    FieldSpec,
    FlowInstabilityError,
    SemigroupDiagnostics,
    SemigroupSpec,
    check_field_monotone,
    check_semigroup_axioms,
    continuous_mean,
    evolve,
    final_state_distance,
    flow,
    parse_field,
    semigroup_diagnostics,
    semigroup_verdict,
)
from .config import ConfigError, ExperimentConfig, parse_config, serialize_config

__version__ = "0.1.0"
