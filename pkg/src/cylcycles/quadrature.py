"""Quadrature helpers.

``integrate`` wraps QUADPACK's adaptive Gauss–Kronrod rule and turns a missed
tolerance into :class:`QuadratureFailure`. ``gauss_legendre`` supplies the
fixed rule used for short sub-panel integrals in the cached propagators.
"""
from __future__ import annotations

import warnings
from functools import lru_cache

import numpy as np
from scipy import integrate as _sint

from .config import TOL
from .errors import QuadratureFailure


def integrate(f, a: float, b: float, atol: float | None = None, limit: int | None = None) -> float:
    """Adaptive Gauss–Kronrod integral of scalar ``f`` over ``[a, b]``."""
    atol = TOL.quad_atol if atol is None else atol
    limit = TOL.quad_limit if limit is None else limit
    if a == b:
        return 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", _sint.IntegrationWarning)
        value, err, info = _sint.quad(f, a, b, epsabs=atol, epsrel=0.0, limit=limit, full_output=1)[:3]
    # roundoff-limited results are accepted when the estimate is still inside 10x the budget
    if not np.isfinite(value) or err > 10.0 * atol:
        raise QuadratureFailure(
            f"quadrature on [{a}, {b}] stopped at error estimate {err:.3e} "
            f"(target {atol:.1e}, {info['last']} subintervals)"
        )
    return float(value)


@lru_cache(maxsize=None)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the ``order``-point Gauss–Legendre rule on [-1, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w
