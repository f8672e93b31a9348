"""Decay-bound certification for quadratic difference inequalities, plus a
self-verifying regularized Newton-type iteration for monotone operator
equations in R^d.

Layout
------
:mod:`ineqsolve.certify`
    Discrete and continuous decay certificates, worst-case trajectories,
    independent bound verification.
:mod:`ineqsolve.operators`
    Monotone operator problems, monotonicity and derivative-bound audits,
    the shifted-system resolvent.
:mod:`ineqsolve.solver`
    The regularized iteration, its a_n = 4*a0/(4+n) schedule, and the run
    preconditions.
:mod:`ineqsolve.diagnostics`
    Regularized-path oracle, per-step bound checks, and the mapping of a
    run onto a certifiable instance (:func:`verify_chain` ties it together).
:mod:`ineqsolve.cli`
    File-driven workflows (certify / certify-ode / solve / diagnose /
    sweep) with CSV and JSON artifacts.
"""

from .certify import (
    BoundCheck,
    CertificateReport,
    ContinuousCertificate,
    ContinuousInstance,
    Majorant,
    Schedule,
    Violation,
    certify_continuous,
    certify_corollary,
    certify_discrete,
    inequality_from_dict,
    inequality_to_dict,
    verify_bound,
    worst_case_trajectory,
)
from .diagnostics import (
    ChainReport,
    ChainStage,
    InequalityMap,
    RegularizedPathPoint,
    attach_g,
    map_to_inequality,
    solve_regularized,
    trace_regularized_path,
    verify_chain,
)
from .errors import (
    ConsistencyError,
    InputError,
    OracleError,
    SolveError,
    UnsupportedMapError,
)
from .operators import (
    JacobianCheck,
    OperatorProblem,
    RegularizedSystem,
    SpotcheckReport,
    check_jacobian_consistency,
    cubic_problem,
    estimate_M2,
    evaluate,
    linear_problem,
    polynomial_problem,
    psd_spotcheck,
    resolvent_apply,
    rotation_problem,
)
from .solver import (
    LAMBDA_FLOOR,
    IterationTrace,
    PrecondCheck,
    PreconditionReport,
    SolverConfig,
    TraceStep,
    check_preconditions,
    schedule_a,
    schedule_drop,
    schedule_ratio,
    solve,
    step,
)

__version__ = "0.1.0"

__all__ = [
    "BoundCheck",
    "CertificateReport",
    "ChainReport",
    "ChainStage",
    "ConsistencyError",
    "ContinuousCertificate",
    "ContinuousInstance",
    "InequalityMap",
    "InputError",
    "IterationTrace",
    "JacobianCheck",
    "LAMBDA_FLOOR",
    "Majorant",
    "OperatorProblem",
    "OracleError",
    "PrecondCheck",
    "PreconditionReport",
    "RegularizedPathPoint",
    "RegularizedSystem",
    "Schedule",
    "SolveError",
    "SolverConfig",
    "SpotcheckReport",
    "TraceStep",
    "UnsupportedMapError",
    "Violation",
    "attach_g",
    "certify_continuous",
    "certify_corollary",
    "certify_discrete",
    "check_jacobian_consistency",
    "check_preconditions",
    "cubic_problem",
    "estimate_M2",
    "evaluate",
    "inequality_from_dict",
    "inequality_to_dict",
    "linear_problem",
    "map_to_inequality",
    "polynomial_problem",
    "psd_spotcheck",
    "resolvent_apply",
    "rotation_problem",
    "schedule_a",
    "schedule_drop",
    "schedule_ratio",
    "solve",
    "solve_regularized",
    "step",
    "trace_regularized_path",
    "verify_bound",
    "verify_chain",
    "worst_case_trajectory",
]
