"""Constructive VARMA covariance matching by homotopy continuation."""
from .covdata import CovSequence, build_toeplitz, build_U, check_pd, normalize, denormalize_solution, theorem1_check
from .errors import (DataError, FactorizationError, InputError, NearBoundaryError, NewtonError,
                     PathStalled, VarmatchError, VerificationFailed)
from .matpoly import (MatPoly, PseudoPoly, SchurClassSpec, eval_on_circle, is_schur, min_eig_on_grid,
                      outer_square, poly_product_full, sym_outer, trunc_product)
from .matchmap import f_map, f_white, homotopy_map, jacobian_apply, jacobian_matrix, vectorize, devectorize
from .factor import FactorConfig, solve_symmetric_eq, spectral_factor

__version__ = "0.1.0"
