"""
Kernels

Bounded, stationary, positive semidefinite kernels on R^d with pairwise
evaluation and blocked Gram / cross-Gram computation.

Every supplied family is bounded by 1, so empirical mean embeddings live in
the unit KME ball.

Usage:
    k = get_kernel(KernelSpec(family="gaussian", bandwidth=1.0))
    G = k.gram(X)
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import gamma

from kfbd.utils.config import KernelSpec
from kfbd.utils.exceptions import InputError
from kfbd.utils.logger import get_logger
from kfbd.utils.parallel import map_tiles

logger = get_logger(__name__)


def as_points(X, name: str = "points") -> np.ndarray:
    """
    Coerce a point collection to a float (n, d) array

    A flat sequence of scalars is read as n points in R^1.
    """
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    elif arr.ndim != 2:
        raise InputError(f"{name} must be a list of points, got array of shape {arr.shape}")
    if arr.shape[0] == 0:
        raise InputError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains non-finite coordinates")
    return arr


def as_point(x, name: str = "point") -> np.ndarray:
    """Coerce a single point to a float (d,) array"""
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1:
        raise InputError(f"{name} must be a vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains non-finite coordinates")
    return arr


@dataclass(frozen=True)
class Kernel(ABC):
    """Stationary kernel k(x, y) = kappa(||x - y||^2), bounded by `bound`"""

    bound = 1.0

    @property
    @abstractmethod
    def family(self) -> str:
        pass

    @property
    @abstractmethod
    def length(self) -> float:
        """Length parameter (bandwidth / scale / c)"""
        pass

    @abstractmethod
    def profile(self, sqdist: np.ndarray) -> np.ndarray:
        """kappa as a function of squared Euclidean distance"""
        pass

    @abstractmethod
    def normalising_constant(self, dim: int) -> float:
        """Integral of kappa over R^dim"""
        pass

    def eval(self, x, y) -> float:
        """k(x, y) for two points of equal dimension"""
        x, y = as_point(x, "x"), as_point(y, "y")
        if x.shape != y.shape:
            raise InputError(f"Dimension mismatch: {x.shape[0]} vs {y.shape[0]}")
        return float(self.profile(cdist(x[None, :], y[None, :], "sqeuclidean"))[0, 0])

    def gram(self, X) -> np.ndarray:
        """Symmetric n x n matrix G[i, j] = k(x_i, x_j)"""
        X = as_points(X, "X")
        return self._fill(X, X)

    def cross_gram(self, X, Y) -> np.ndarray:
        """n x m matrix C[i, j] = k(x_i, y_j)"""
        X, Y = as_points(X, "X"), as_points(Y, "Y")
        _check_dims(X, Y)
        return self._fill(X, Y)

    def diag(self, X) -> np.ndarray:
        """k(x_i, x_i) for every row"""
        X = as_points(X, "X")
        return self.profile(np.zeros(X.shape[0]))

    def weighted_sum(self, X: np.ndarray, wx: np.ndarray, Y: np.ndarray, wy: np.ndarray) -> float:
        """
        sum_ij wx_i wy_j k(x_i, y_j) without materialising the full matrix

        Row tiles are reduced with math.fsum in tile order, so the result does
        not depend on the thread count.
        """
        _check_dims(X, Y)

        def partial(start: int, stop: int) -> float:
            block = self.profile(cdist(X[start:stop], Y, "sqeuclidean"))
            return float(wx[start:stop] @ (block @ wy))

        return math.fsum(map_tiles(partial, X.shape[0]))

    def evaluate_embedding(self, X: np.ndarray, wx: np.ndarray, Z: np.ndarray) -> np.ndarray:
        """sum_i wx_i k(x_i, z) for every row z of Z"""
        _check_dims(X, Z)

        def partial(start: int, stop: int) -> np.ndarray:
            return self.profile(cdist(Z[start:stop], X, "sqeuclidean")) @ wx

        return np.concatenate(map_tiles(partial, Z.shape[0]))

    def noise_density(self, t) -> np.ndarray:
        """kappa(t) / integral(kappa): the noise law convolved with p in mu(p)"""
        t = as_points(t, "t")
        return self.profile(np.sum(t * t, axis=1)) / self.normalising_constant(t.shape[1])

    def _fill(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        out = np.empty((X.shape[0], Y.shape[0]))

        def fill(start: int, stop: int) -> None:
            out[start:stop] = self.profile(cdist(X[start:stop], Y, "sqeuclidean"))

        map_tiles(fill, X.shape[0])
        return out


@dataclass(frozen=True)
class GaussianKernel(Kernel):
    """k(x, y) = exp(-||x - y||^2 / (2 bandwidth^2)); characteristic"""
    bandwidth: float = 1.0

    def __post_init__(self):
        _check_positive("bandwidth", self.bandwidth)

    @property
    def family(self) -> str:
        return "gaussian"

    @property
    def length(self) -> float:
        return self.bandwidth

    def profile(self, sqdist: np.ndarray) -> np.ndarray:
        return np.exp(-sqdist / (2.0 * self.bandwidth ** 2))

    def normalising_constant(self, dim: int) -> float:
        return (2.0 * math.pi * self.bandwidth ** 2) ** (dim / 2.0)


@dataclass(frozen=True)
class LaplaceKernel(Kernel):
    """k(x, y) = exp(-||x - y|| / scale)"""
    scale: float = 1.0

    def __post_init__(self):
        _check_positive("scale", self.scale)

    @property
    def family(self) -> str:
        return "laplace"

    @property
    def length(self) -> float:
        return self.scale

    def profile(self, sqdist: np.ndarray) -> np.ndarray:
        return np.exp(-np.sqrt(sqdist) / self.scale)

    def normalising_constant(self, dim: int) -> float:
        # scale^d * Gamma(d + 1) * volume of the unit d-ball
        unit_ball = math.pi ** (dim / 2.0) / gamma(dim / 2.0 + 1.0)
        return float(self.scale ** dim * gamma(dim + 1.0) * unit_ball)


@dataclass(frozen=True)
class InverseMultiquadricKernel(Kernel):
    """k(x, y) = (1 + ||x - y||^2 / c^2)^(-1/2)"""
    c: float = 1.0

    def __post_init__(self):
        _check_positive("c", self.c)

    @property
    def family(self) -> str:
        return "inverse_multiquadric"

    @property
    def length(self) -> float:
        return self.c

    def profile(self, sqdist: np.ndarray) -> np.ndarray:
        return 1.0 / np.sqrt(1.0 + sqdist / self.c ** 2)

    def normalising_constant(self, dim: int) -> float:
        raise InputError("inverse_multiquadric kernel is not integrable; no noising reading")


def get_kernel(spec: KernelSpec | dict | str | None = None) -> Kernel:
    """Factory: build a kernel from a spec, a dict or a 'family:length' string"""
    from kfbd.utils.config import _validated, parse_kernel_spec

    if spec is None:
        spec = KernelSpec()
    elif isinstance(spec, str):
        spec = parse_kernel_spec(spec)
    elif isinstance(spec, dict):
        spec = _validated(KernelSpec, spec)

    if spec.family == "gaussian":
        return GaussianKernel(spec.length)
    elif spec.family == "laplace":
        return LaplaceKernel(spec.length)
    elif spec.family == "inverse_multiquadric":
        return InverseMultiquadricKernel(spec.length)
    else:
        raise InputError(f"Unknown kernel family: {spec.family}")


def _check_dims(X: np.ndarray, Y: np.ndarray) -> None:
    if X.shape[1] != Y.shape[1]:
        raise InputError(f"Dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")


def _check_positive(name: str, value: float) -> None:
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise InputError(f"Kernel {name} must be a positive real, got {value!r}")
