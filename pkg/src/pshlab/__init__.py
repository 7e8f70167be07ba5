"""Numerical laboratory for equivariant plurisubharmonic potentials on C^d.

Builds and differentiates real-valued potentials symbolically (Wirtinger
calculus on an expression tree), certifies strict plurisubharmonicity by
Levi-eigenvalue sampling, averages objectives over compact group actions
with Haar quadrature, integrates the gradient flow with convergence and
decay-exponent certificates, and verifies at desk scale the moment-map
degree, gradient-fiber finiteness, and critical-locus confinement
properties of circle- and SU(2)-symmetric potentials.
"""

from .expr import (
    EvalDomainError, ExprError, ParseError, PotentialField, RealnessCertificate,
    RealnessError, evaluate, is_real_valued, parse_expression, to_string,
    wirtinger_diff,
)
from .geometry import (
    BallSampler, LeviForm, PSHCertificate, RadialProfile, RealHessian,
    WirtingerGradient, check_strict_psh, complex_gradient,
    levi_hessian_identity_residual, levi_form, radial_profile, real_hessian,
)
from .symmetry import (
    ConfinementReport, GroupAction, MultistartConfig, OrbitInfo,
    PreconditionError, QuadratureRule, apply, critical_confinement_experiment,
    equivariance_check, haar_average, invariance_residual, orbit_dimension,
)
from .flow import (
    ConvergenceReport, FlowConfig, FlowTrajectory, InsufficientTailError,
    LojasiewiczEstimate, SingularMetricError, convergence_report,
    estimate_lojasiewicz, integrate_flow, velocity,
)
from .moment import (
    DegreeCertificate, FiberReport, MomentMapField, QuotientPoint,
    chordal_distance, compute_degree, degree_certificate_for_level,
    gradient_fiber, homotopy_positivity, induced_map, moment_map,
    sample_level_set, verify_hamiltonian,
)
from .verify import CheckResult, verify_suite

__version__ = "0.1.0"
