"""Schur-Agler norms of homogeneous polynomials: SDP solvers, Hankel bounds and
exactly verified cone certificates."""

from .bounds import (MethodBound, Method5Violation, all_bounds, best_bound, method1, method2,
                     method3, method4, method5_verify)
from .certify import (GradedOperator, MembershipReport, certified_dual_upper_bound,
                      certified_sa_lower_bound, check_cone_membership, repair_certificate)
from .dixon import DixonResult, dixon_construct
from .exact import GaussianRational, rational_psd
from .fixtures import FIXTURE_NAMES, fixture, fixture_tuple
from .norms import (NormResult, SolverFailure, dual_sa_norm, evaluate_on_tuple, sa_norm,
                    sampled_lower_bound, sup_norm, triple_norm_1, triple_norm_2,
                    weak_product_norm)
from .polycore import (HomogeneousPolynomial, basis, dim, format_poly, kvh_polynomial,
                       parse_poly)

__version__ = "0.1.0"

__all__ = [
    "HomogeneousPolynomial", "parse_poly", "format_poly", "basis", "dim", "kvh_polynomial",
    "GaussianRational", "rational_psd",
    "GradedOperator", "MembershipReport", "check_cone_membership", "certified_sa_lower_bound",
    "certified_dual_upper_bound", "repair_certificate",
    "NormResult", "SolverFailure", "sa_norm", "dual_sa_norm", "weak_product_norm",
    "triple_norm_1", "triple_norm_2", "sup_norm", "sampled_lower_bound", "evaluate_on_tuple",
    "MethodBound", "Method5Violation", "method1", "method2", "method3", "method4",
    "method5_verify", "all_bounds", "best_bound",
    "fixture", "fixture_tuple", "FIXTURE_NAMES", "DixonResult", "dixon_construct",
]
