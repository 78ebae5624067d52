"""
Radial Generator - Profile-Agnostic Interface

A deformed generator Phi(f) = phi(||mu(f)||) is fixed by its scalar profile
phi. Each profile supplies phi, phi', phi'' and (when known) closed-form
sandwich constants; the base class derives the Hessian eigenvalue maps and
the numerical sup/inf.

Usage:
    g = get_generator("exp_centered")
    g.sandwich_constants(1.0)
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from kfbd.utils.exceptions import InputError
from kfbd.utils.logger import get_logger

logger = get_logger(__name__)

PERP_SWITCH = 1e-12
GRID_POINTS = 10_000
REFINE_TOLERANCE = 1e-10


@dataclass(frozen=True)
class SandwichConstants:
    """m_phi(R) <= Hessian eigenvalues <= L_phi(R) on [0, R]"""
    R: float
    m: float
    L: float

    def __post_init__(self):
        if self.R <= 0:
            raise InputError(f"R must be positive, got {self.R}")
        if not 0.0 <= self.m <= self.L:
            raise InputError(f"Sandwich constants must satisfy 0 <= m <= L, got m={self.m}, L={self.L}")

    @property
    def comparable(self) -> bool:
        """True when the lower bound is informative (m > 0)"""
        return self.m > 0.0


class RadialGenerator(ABC):
    """Abstract base class for radial profiles phi: [0, inf) -> R"""

    name: str = "radial"

    def __init__(self):
        slope = float(self.dphi(np.asarray(0.0)))
        if abs(slope) > 1e-14:
            raise InputError(f"Profile {self.name} has phi'(0) = {slope}; phi'(0) = 0 is required")
        logger.debug(f"Initialized {self.__class__.__name__} profile")

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}({self.label})"

    @property
    def label(self) -> str:
        """Profile name including parameters"""
        return self.name

    @abstractmethod
    def phi(self, r):
        """Profile value"""
        pass

    @abstractmethod
    def dphi(self, r):
        """First derivative"""
        pass

    @abstractmethod
    def d2phi(self, r):
        """Second derivative"""
        pass

    def closed_form_constants(self, R: float) -> Optional[SandwichConstants]:
        """Closed-form (m, L) on [0, R] when the profile admits them"""
        return None

    def phi_of_sq(self, r2: float) -> float:
        """phi evaluated from a squared radius"""
        return float(self.phi(np.sqrt(max(r2, 0.0))))

    def divergence_from_gram(self, nf2: float, ng2: float, cross: float) -> float:
        """
        d(f, g) = phi(|f|) - phi(|g|) - (phi'(|g|)/|g|) <g, f - g>

        Works from the squared norms and the cross inner product only.
        """
        coef = float(self.lambda_perp(np.sqrt(max(ng2, 0.0))))
        return self.phi_of_sq(nf2) - self.phi_of_sq(ng2) - coef * (cross - ng2)

    def lambda_perp(self, r):
        """phi'(r)/r, continued to phi''(0) at r = 0"""
        r = np.asarray(r, dtype=float)
        small = r <= PERP_SWITCH
        safe = np.where(small, 1.0, r)
        out = np.where(small, self.d2phi(np.zeros_like(r)), self.dphi(safe) / safe)
        return out if out.ndim else float(out)

    def lambda_par(self, r):
        """phi''(r)"""
        r = np.asarray(r, dtype=float)
        out = np.asarray(self.d2phi(r), dtype=float)
        return out if out.ndim else float(out)

    def sandwich_constants(self, R: float) -> SandwichConstants:
        """Closed form when available, numerical sup/inf otherwise"""
        _check_radius(R)
        closed = self.closed_form_constants(R)
        return closed if closed is not None else self.numerical_constants(R)

    def numerical_constants(self, R: float) -> SandwichConstants:
        """
        sup/inf of the eigenvalue maps over a uniform grid on [0, R]

        The grid extremum is refined with bounded Brent search on the
        neighbouring cells.
        """
        _check_radius(R)
        grid = np.linspace(0.0, R, GRID_POINTS)
        par, perp = self.lambda_par(grid), self.lambda_perp(grid)
        upper = np.maximum(par, perp)
        lower = np.minimum(par, perp)

        def top(r: float) -> float:
            return -max(self.lambda_par(r), self.lambda_perp(r))

        def bottom(r: float) -> float:
            return min(self.lambda_par(r), self.lambda_perp(r))

        L = max(float(np.max(upper)), -_refine(top, grid, int(np.argmax(upper))))
        m = min(float(np.min(lower)), _refine(bottom, grid, int(np.argmin(lower))))
        return SandwichConstants(R=R, m=max(m, 0.0), L=L)


def _refine(fn, grid: np.ndarray, index: int) -> float:
    lo = grid[max(index - 1, 0)]
    hi = grid[min(index + 1, grid.size - 1)]
    if hi <= lo:
        return float(fn(lo))
    result = minimize_scalar(fn, bounds=(lo, hi), method="bounded", options={"xatol": REFINE_TOLERANCE})
    return float(min(result.fun, fn(grid[index])))


def _check_radius(R: float) -> None:
    if not R > 0:
        raise InputError(f"R must be positive, got {R}")


def get_generator(spec=None) -> RadialGenerator:
    """Factory: build a radial generator from a GeneratorSpec, dict or 'profile[:param]' string"""
    from kfbd.generators import profiles
    from kfbd.utils.config import GeneratorSpec, _validated, parse_generator_spec

    if spec is None:
        spec = GeneratorSpec()
    elif isinstance(spec, str):
        spec = parse_generator_spec(spec)
    elif isinstance(spec, dict):
        spec = _validated(GeneratorSpec, spec)

    if spec.profile == "square":
        return profiles.SquareProfile()
    elif spec.profile == "exp_centered":
        return profiles.ExpCenteredProfile()
    elif spec.profile == "logcosh":
        return profiles.LogCoshProfile()
    elif spec.profile == "sqrtplus":
        return profiles.SqrtPlusProfile()
    elif spec.profile == "quartic":
        return profiles.QuarticProfile(0.0 if spec.lam is None else spec.lam)
    elif spec.profile == "power":
        if spec.p is None:
            raise InputError("power profile requires an exponent p > 2")
        return profiles.PowerProfile(spec.p)
    else:
        raise InputError(
            f"Unknown profile: {spec.profile}. "
            f"Must be one of: square, exp_centered, logcosh, sqrtplus, quartic, power"
        )
