"""Phase-field approximation of Euclidean Steiner trees.

Fields are numpy arrays of shape (ny, nx); row j, column i is the node at
(x0 + i*h, y0 + j*h).
"""

from ._steiner_pf import (
    ParseError,
    SolverInvariantError,
    adjoint_gradient,
    fast_march,
    i_lambda,
    mm_energy,
    mm_gradient,
    mst_length,
    p_slack,
    solve,
    steiner_exact,
)

__all__ = [
    "ParseError",
    "SolverInvariantError",
    "adjoint_gradient",
    "fast_march",
    "i_lambda",
    "mm_energy",
    "mm_gradient",
    "mst_length",
    "p_slack",
    "solve",
    "steiner_exact",
]
