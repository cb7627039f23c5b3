"""Generalized n-metric spaces, certified fixed-point iteration, and a
Bellman-type functional equation solver built on top of them."""

from .constructions import (
    ABS,
    EUCLIDEAN,
    SUP,
    BaseMetric,
    BoundedFunctionPoint,
    k1_sum,
    k2_max,
    rho_max,
    sup_metric_gn,
)
from .core import (
    AxiomVerdict,
    GnMetric,
    NumericalFailure,
    UsageError,
    ball_contains,
    derived_metric,
    evaluate,
    is_symmetric_at,
    points_equal,
)
from .dp import (
    AffineAggregator,
    CallbackAggregator,
    DpProblem,
    ValueFunction,
    bellman_apply,
    brute_force_horizon,
    load_problem,
    solve,
    verify_M_lipschitz,
)
from .fixed_point import (
    ContractionCertificate,
    IterationTrace,
    SuzukiReport,
    check_suzuki,
    estimate_contraction_modulus,
    picard_iterate,
    solve_with_certificate,
    theta,
    theta_suzuki,
)
from .verifier import (
    Sampler,
    VerificationReport,
    check_axioms,
    check_convergence_equivalence,
    check_propositions,
    check_symmetry,
    constant_sampler,
    random_tables,
    uniform_reals,
    uniform_vectors,
)

__version__ = "0.1.0"
