"""Hermitian matrix functions used for whitening and pre-whitening.

Both functions accept a single matrix or a stack of matrices with shape
``(..., n, n)`` and work through the Hermitian eigendecomposition.
"""

import numpy as np

from .exceptions import NonHermitian
from .validation import check_square

EIG_FLOOR = 1e-12
HERMITIAN_TOL = 1e-10


def _eigh_checked(M, floor, tol):
    M = check_square(M, "M")
    asym = np.abs(M - np.conj(np.swapaxes(M, -1, -2)))
    if asym.size and asym.max() > tol:
        raise NonHermitian(f"matrix asymmetry {asym.max():.3e} exceeds {tol:g}")
    M = 0.5 * (M + np.conj(np.swapaxes(M, -1, -2)))
    w, V = np.linalg.eigh(M)
    return np.maximum(w, floor), V


def _recompose(w, V):
    # V diag(w) V^H, batched
    return (V * w[..., None, :]) @ np.conj(np.swapaxes(V, -1, -2))


def hermitian_sqrt(M, floor=EIG_FLOOR, tol=HERMITIAN_TOL):
    """Principal square root W of a Hermitian PSD matrix, so that W @ W = M.

    Eigenvalues below `floor` are raised to `floor` first.
    """
    w, V = _eigh_checked(M, floor, tol)
    return _recompose(np.sqrt(w), V)


def hermitian_inv_sqrt(M, floor=EIG_FLOOR, tol=HERMITIAN_TOL):
    """Inverse principal square root W of a Hermitian PSD matrix.

    W is Hermitian and satisfies W @ M @ W^H = I (up to the eigenvalue floor).
    """
    w, V = _eigh_checked(M, floor, tol)
    return _recompose(1.0 / np.sqrt(w), V)
