"""Damped Newton iteration for ``f_data(A) = P`` restricted to the Schur class."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .covdata import CovSequence
from .errors import NewtonError
from .matchmap import devectorize, f_map, jacobian_matrix, vectorize, vectorize_residual
from .matpoly import MatPoly, PseudoPoly, SchurClassSpec, is_schur


@dataclass
class NewtonResult:
    A: MatPoly
    iters: int
    residual: float  # relative, ||f(A) - P|| / ||P||


def newton(A0: MatPoly, data: CovSequence, P: PseudoPoly, *, tol: float, max_iter: int,
           spec: SchurClassSpec, max_backtracks: int = 30,
           stall_factor: float = 10.0) -> NewtonResult:
    """Newton with step halving until the iterate stays Schur and the residual drops.

    Raises :class:`NewtonError` with message "newton diverged" when ``max_iter``
    steps do not reach ``tol``, and "left Schur class" when no step length is
    admissible.  If the residual stops decreasing (rounding floor) within
    ``stall_factor * tol`` the current iterate is returned.
    """
    m, n = A0.m, A0.n
    pnorm = P.norm() or 1.0
    A = A0
    x = vectorize(A)
    res = (P - f_map(A, data)).norm()
    for it in range(max_iter + 1):
        if res <= tol * pnorm:
            return NewtonResult(A, it, res / pnorm)
        if it == max_iter:
            break
        J = jacobian_matrix(A, data)
        r = vectorize_residual(P - f_map(A, data))
        try:
            dx = np.linalg.solve(J, r)
        except np.linalg.LinAlgError:
            raise NewtonError("singular Jacobian") from None
        alpha = 1.0
        saw_schur = False
        for _ in range(max_backtracks + 1):
            A_try = devectorize(x + alpha * dx, m, n)
            if is_schur(A_try, spec):
                saw_schur = True
                res_try = (P - f_map(A_try, data)).norm()
                if res_try < res:
                    break
            alpha *= 0.5
        else:
            if saw_schur:
                if res <= stall_factor * tol * pnorm:
                    return NewtonResult(A, it, res / pnorm)
                raise NewtonError(
                    f"newton diverged: residual stagnated at {res / pnorm:.3g}")
            raise NewtonError("left Schur class")
        A, x, res = A_try, x + alpha * dx, res_try
    raise NewtonError(f"newton diverged: residual {res / pnorm:.3g} after {max_iter} iterations")
