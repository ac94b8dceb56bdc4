"""mfland: the critical-point landscape of J(W, S) = 0.5 ||X - W S||_F^2.

Construct canonical / balanced / zero-family critical points from the SVD of
X, read off closed-form Hessian spectra, move points along GL(k) orbits,
integrate gradient flow, and cross-check everything against a dense
numerical Hessian.
"""

from .calculus import (
    gradient,
    gradient_norm,
    hessian_apply,
    is_critical,
    second_derivative,
)
from .canonical import (
    CanonicalPoint,
    ClassificationResult,
    Selection,
    build_balanced,
    build_canonical,
    build_zero_family,
    classify_canonical,
    first_defect,
    is_maximal,
    reduce_to_canonical,
    strict_saddle_test,
    zero_family_point,
)
from .errors import (
    DimensionError,
    InvalidInput,
    InvalidSelection,
    MflandError,
    NotASaddle,
    NotCritical,
    NumericalFailure,
    RankAmbiguous,
    SingularGroupElement,
    StiffnessFailure,
    TooLarge,
)
from .flow import (
    FlowSample,
    FlowTrajectory,
    LimitDiagnosis,
    classify_limit,
    integrate_flow,
    random_balanced_pair,
    random_pair,
)
from .model import (
    DataMatrixSVD,
    FactorPair,
    TangentPair,
    evaluate_J,
    inner,
    load_data_matrix,
    read_matrix_csv,
    residual,
    to_user_orientation,
    write_matrix_csv,
)
from .oracle import (
    DenseHessian,
    FDReport,
    dense_hessian,
    fd_validate,
    flatten_tangent,
    inertia_from_values,
    numeric_spectrum,
    unflatten_tangent,
)
from .orbit import (
    GroupElement,
    action_matrix,
    apply_group_action,
    balance_residual,
    induced_norm,
    inertia_of,
    intersect_M0,
    push_gradient,
    push_tangent,
    transported_lambda_min_bound,
)
from .spectrum import (
    EigPair,
    SpectrumReport,
    lambda_min_balanced,
    lambda_min_closed_form,
    spectrum_balanced,
    spectrum_deficient_rank,
    spectrum_full_rank_scaled,
    spectrum_zero_family,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
