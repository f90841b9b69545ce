"""Extragradient methods with relative-Lipschitzness certificates.

Mirror prox and dual extrapolation over Bregman geometries, accelerated
smooth minimization through a primal-dual reformulation, a randomized
coordinate variant with O(1) implicit iterate maintenance, and a
box-simplex bilinear game solver, plus numerical certification of the
inequalities the convergence guarantees rest on.
"""

from ._kernels import USING_NUMBA
from .core import (
    TAU_NUM,
    TAU_REL,
    TAU_FEAS,
    Point,
    DomainError,
    ConvergenceError,
    FeasibleSet,
    Everywhere,
    Box,
    Simplex,
    ProductSet,
    ConjugateOracle,
    grad_conjugate,
    BlockRegularizer,
    ScaledEuclidean,
    NegativeEntropy,
    ConjugateRegularizer,
    ProductRegularizer,
    divergence,
    prox,
)
from .operators import (
    make_rng,
    SmoothnessProfile,
    lambda_fenchel,
    lambda_coord,
    lambda_minimax,
    FenchelGameOperator,
    BoxSimplexInstance,
    MinimaxProfile,
    MinimaxInstance,
    AliasTable,
    CoordinateEstimatorState,
)
from .problems import (
    ParseError,
    QuadraticProblem,
    gen_quadratic,
    gen_box_simplex,
    gen_minimax,
    exact_solution,
    save_instance,
    load_instance,
)
from .solvers import (
    SolverConfig,
    SolverTrace,
    NonFiniteIterateError,
    mirror_prox,
    dual_extrapolation,
    mirror_prox_sm,
    baseline_unaccelerated,
    eg_accel,
    general_norm_accel,
    EuclideanOmega,
    ImplicitIterate,
    eg_coord_accel,
)
from .boxsimplex import (
    LAMBDA_BOX_SIMPLEX,
    AlternatingProxConfig,
    ShermanRegularizer,
    sherman_prox,
    preprocess,
    linf_regression_reduction,
    duality_gap,
    iteration_budget,
    solve_box_simplex,
)
from .verify import (
    TripleSampler,
    CertificateReport,
    check_relative_lipschitzness,
    check_relative_smoothness_implies,
    check_strong_monotonicity,
    check_regret_certificate,
    check_estimator_conditions,
    coord_trajectory,
    finite_diff_gradient,
)

__version__ = "0.1.0"
