"""
Kernel Mean Embeddings

Empirical embeddings mu(p) = sum_i w_i k(x_i, .) are kept lazy (kernel +
weighted sample); every quantity reduces to weighted Gram sums.

Usage:
    a = embed(k, SampleSet.uniform(X))
    b = embed(k, SampleSet.uniform(Y))
    mmd_sq_biased(a, b)
"""

from dataclasses import dataclass

import numpy as np

from kfbd.core.kernels import Kernel, as_point, as_points
from kfbd.utils.exceptions import InputError

WEIGHT_TOLERANCE = 1e-12
CLAMP_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Weighted finite collection of points in R^d (an empirical measure)"""
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        points = as_points(self.points, "points")
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if weights.shape[0] != points.shape[0]:
            raise InputError(f"{points.shape[0]} points but {weights.shape[0]} weights")
        if not np.all(np.isfinite(weights)) or np.any(weights < 0):
            raise InputError("weights must be finite and nonnegative")
        total = float(np.sum(weights))
        if abs(total - 1.0) > WEIGHT_TOLERANCE:
            raise InputError(f"weights must sum to 1, got {total!r}")
        points.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def uniform(cls, points) -> "SampleSet":
        """Equal weights 1/n"""
        points = as_points(points, "points")
        n = points.shape[0]
        return cls(points, np.full(n, 1.0 / n))

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def is_uniform(self) -> bool:
        return bool(np.all(self.weights == self.weights[0]))

    def mixture(self, other: "SampleSet", alpha: float) -> "SampleSet":
        """alpha * self + (1 - alpha) * other as a single weighted sample set"""
        if not 0.0 <= alpha <= 1.0:
            raise InputError(f"mixture weight must lie in [0, 1], got {alpha}")
        if other.dim != self.dim:
            raise InputError(f"Dimension mismatch: {self.dim} vs {other.dim}")
        points = np.vstack([self.points, other.points])
        weights = np.concatenate([alpha * self.weights, (1.0 - alpha) * other.weights])
        return SampleSet(points, weights / np.sum(weights))


@dataclass(frozen=True, eq=False)
class Embedding:
    """Lazy mean embedding of a sample set under a kernel"""
    kernel: Kernel
    sample: SampleSet


def embed(k: Kernel, s: SampleSet) -> Embedding:
    """Wrap a sample set as an embedding; no computation is performed"""
    if not isinstance(s, SampleSet):
        s = SampleSet.uniform(s)
    return Embedding(kernel=k, sample=s)


def inner(a: Embedding, b: Embedding) -> float:
    """<mu(p), mu(q)>_H = sum_ij w_i v_j k(x_i, y_j)"""
    _check_compatible(a, b)
    return a.kernel.weighted_sum(a.sample.points, a.sample.weights, b.sample.points, b.sample.weights)


def norm_sq(a: Embedding) -> float:
    """||mu(p)||_H^2"""
    return max(inner(a, a), 0.0)


def norm(a: Embedding) -> float:
    return float(np.sqrt(norm_sq(a)))


def eval_at(a: Embedding, x) -> float:
    """mu(p)(x) = sum_i w_i k(x_i, x) (reproducing property)"""
    x = as_point(x, "x")
    if x.shape[0] != a.sample.dim:
        raise InputError(f"Dimension mismatch: {a.sample.dim} vs {x.shape[0]}")
    return float(a.kernel.evaluate_embedding(a.sample.points, a.sample.weights, x[None, :])[0])


def eval_on(a: Embedding, Z) -> np.ndarray:
    """mu(p) evaluated at every row of Z"""
    Z = as_points(Z, "Z")
    return a.kernel.evaluate_embedding(a.sample.points, a.sample.weights, Z)


def clamp_tiny_negative(value: float) -> float:
    """Round values in (-1e-12, 0) up to 0; leave everything else untouched"""
    return 0.0 if -CLAMP_TOLERANCE < value < 0.0 else value


def mmd_sq_from_gram(nf2: float, ng2: float, cross: float) -> float:
    """||mu(p) - mu(q)||^2 from the three Gram sums, clamped at 0 within 1e-12"""
    return clamp_tiny_negative(nf2 - 2.0 * cross + ng2)


def mmd_sq_biased(a: Embedding, b: Embedding) -> float:
    """MMD_k^2(p, q) = ||mu(p) - mu(q)||_H^2 (V-statistic)"""
    return mmd_sq_from_gram(inner(a, a), inner(b, b), inner(a, b))


def mmd_sq_unbiased(k: Kernel, X: SampleSet, Y: SampleSet) -> float:
    """
    U-statistic estimate of MMD^2 (diagonal terms excluded)

    Requires uniform weights and at least two points per sample. The value
    may be negative and is never clamped.
    """
    for name, s in (("X", X), ("Y", Y)):
        if s.size < 2:
            raise InputError(f"{name} needs at least 2 points for the unbiased estimator, got {s.size}")
        if not s.is_uniform:
            raise InputError(f"{name} must carry uniform weights for the unbiased estimator")
    if X.dim != Y.dim:
        raise InputError(f"Dimension mismatch: {X.dim} vs {Y.dim}")

    n, m = X.size, Y.size
    ones_n, ones_m = np.ones(n), np.ones(m)
    sxx = k.weighted_sum(X.points, ones_n, X.points, ones_n) - float(np.sum(k.diag(X.points)))
    syy = k.weighted_sum(Y.points, ones_m, Y.points, ones_m) - float(np.sum(k.diag(Y.points)))
    sxy = k.weighted_sum(X.points, ones_n, Y.points, ones_m)
    return sxx / (n * (n - 1)) - 2.0 * sxy / (n * m) + syy / (m * (m - 1))


def _check_compatible(a: Embedding, b: Embedding) -> None:
    if a.kernel != b.kernel:
        raise InputError(f"Kernel mismatch: {a.kernel} vs {b.kernel}")
    if a.sample.dim != b.sample.dim:
        raise InputError(f"Dimension mismatch: {a.sample.dim} vs {b.sample.dim}")
