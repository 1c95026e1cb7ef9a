"""Capacity functionals, closed forms and the constrained search."""

from .closed_forms import (
    DepolarizingForms,
    QECForms,
    depolarizing_closed_forms,
    qec_chi_integrand,
    qec_closed_forms,
)
from .functionals import (
    ENCODINGS,
    EncodingEnsemble,
    F_functional,
    chi_covariant_inner,
    covariant_evaluator,
    entropy_gain,
    extended_entropy_gain,
    holevo,
    hsw_chi,
    identity_encoding,
    product_ensemble,
    reset_encoding,
    weyl_encoding,
)
from .search import (
    BellDiagonalFamily,
    BinMax,
    CapacityResult,
    Clause,
    ConstraintSpec,
    ProductFamily,
    TenParamFamily,
    bin_maxima,
    eve_bound,
    get_family,
    mc_scan,
    optimize_constrained,
)
