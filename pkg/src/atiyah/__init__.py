"""Certified computation for Atiyah's conjecture on point configurations."""

from .arith import (
    CertifiedScalar,
    CirclePoint,
    Order,
    PrecisionPolicy,
    Status,
    Verdict,
    compare_certified,
    det_certified,
    working_precision,
)
from .dihedral import (
    DihedralConfig,
    build_dihedral_config,
    c_coefficients,
    closed_form_abs_det,
    cross_check_proportionality,
    elementary_symmetric,
    f_values,
    lambda_of,
    closed_form_matrix,
    tilde_E,
)
from .forms import (
    BinaryForm,
    CoefficientMatrix,
    atiyah_polynomial,
    coefficient_matrix_generic,
    dehomogenize,
    multiply_forms,
)
from .geometry import (
    Configuration,
    LinearForm,
    Point3,
    SpinorLift,
    hopf_project,
    lambda_pair,
    linear_form,
    normalize_configuration,
)

__version__ = "0.1.0"
