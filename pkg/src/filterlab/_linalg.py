"""Small shared linear-algebra helpers."""

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import NumericalError


def sym(M: np.ndarray) -> np.ndarray:
    return (M + M.T) / 2.0


def spectral_norm(M: np.ndarray) -> float:
    return float(np.linalg.norm(M, 2))


def spectral_radius(M: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(M))))


def min_eig_sym(M: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(sym(M))[0])


def spd_solve(M: np.ndarray, B: np.ndarray, what: str = "matrix") -> np.ndarray:
    """Solve M X = B for symmetric positive-definite M via Cholesky.

    Raises NumericalError instead of falling back to a pseudo-inverse: loss
    of positive definiteness signals a broken model invariant upstream.
    """
    try:
        factor = cho_factor(sym(M), lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"{what} is not positive definite") from exc
    return cho_solve(factor, B)


def spd_inverse(M: np.ndarray, what: str = "matrix") -> np.ndarray:
    return sym(spd_solve(M, np.eye(M.shape[0]), what=what))
