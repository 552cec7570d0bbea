"""Second domain variations of p-capacity, q-torsional rigidity and their product at the ball."""
from ._version import __version__
from .closed_forms import (
    BallConstants,
    OmegaConvention,
    ProblemParams,
    ball_capacity,
    ball_constants,
    ball_torsion,
    boundary_gradients,
    capacity_potential,
    steklov_exterior,
    steklov_interior,
    torsion_function,
)
from .errors import (
    DomainError,
    EvaluationError,
    InputError,
    PreconditionError,
    ShapeVarError,
    SolverError,
)
from .harmonics import (
    HarmonicIndex,
    SphereQuadrature,
    harmonic_multiplicity,
    integrate,
    laplace_beltrami_eigenvalue,
    make_quadrature,
    real_harmonic,
    real_harmonics,
)
from .oracle import (
    PerturbedBall,
    SpectralSolveConfig,
    check_aij_lemma,
    check_jacobian_coefficients,
    exterior_capacity_p2,
    fd_second_derivative,
    perturbed_area,
    perturbed_volume,
    torsion_q2,
)
from .regimes import (
    RegimeClassification,
    Verdict,
    capacity_threshold,
    capacity_unstable_modes,
    classify_grid,
    classify_product,
    find_product_thresholds,
    verify_Z_monotone_in_p,
)
from .reports import ReportEnvelope
from .variations import (
    ModeSpectrum,
    VariationReport,
    check_jacobian_expansion,
    first_variation_capacity,
    first_variation_torsion,
    perimeter_variation,
    product_coefficients,
    second_variation_capacity,
    second_variation_product,
    second_variation_torsion,
    volume_variation,
)
