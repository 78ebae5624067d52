"""
Central finite differences for gradient and Hessian checks
"""

from typing import Callable

import numpy as np

GRADIENT_STEP = 1e-6
HESSIAN_STEP = 1e-4


def numerical_gradient(fn: Callable[[np.ndarray], float], u: np.ndarray, eps: float = GRADIENT_STEP) -> np.ndarray:
    """Centered-difference gradient of fn at u"""
    u = np.asarray(u, dtype=float)
    grad = np.zeros_like(u)
    for j in range(u.size):
        step = np.zeros_like(u)
        step[j] = eps
        grad[j] = (fn(u + step) - fn(u - step)) / (2.0 * eps)
    return grad


def numerical_hessian(fn: Callable[[np.ndarray], float], u: np.ndarray, eps: float = HESSIAN_STEP) -> np.ndarray:
    """Centered-difference Hessian of fn at u, symmetrised"""
    u = np.asarray(u, dtype=float)
    m = u.size
    hess = np.zeros((m, m))
    basis = np.eye(m) * eps
    for i in range(m):
        for j in range(i, m):
            ei, ej = basis[i], basis[j]
            hess[i, j] = (
                fn(u + ei + ej) - fn(u + ei - ej) - fn(u - ei + ej) + fn(u - ei - ej)
            ) / (4.0 * eps * eps)
            hess[j, i] = hess[i, j]
    return hess


def relative_error(approx: np.ndarray, exact: np.ndarray) -> float:
    """||approx - exact|| / (1 + ||exact||)"""
    approx, exact = np.asarray(approx, dtype=float), np.asarray(exact, dtype=float)
    return float(np.linalg.norm(approx - exact) / (1.0 + np.linalg.norm(exact)))
