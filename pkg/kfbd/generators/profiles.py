"""Radial profile implementations with closed-form sandwich constants"""

import math

import numpy as np

from kfbd.generators.base import RadialGenerator, SandwichConstants
from kfbd.utils.exceptions import InputError


class SquareProfile(RadialGenerator):
    """phi(r) = r^2; the k-FBD is exactly the squared MMD"""

    name = "square"

    def phi(self, r):
        r = np.asarray(r, dtype=float)
        return r * r

    def dphi(self, r):
        return 2.0 * np.asarray(r, dtype=float)

    def d2phi(self, r):
        return np.full_like(np.asarray(r, dtype=float), 2.0)

    def closed_form_constants(self, R: float) -> SandwichConstants:
        return SandwichConstants(R=R, m=2.0, L=2.0)

    def phi_of_sq(self, r2: float) -> float:
        return float(r2)

    def divergence_from_gram(self, nf2: float, ng2: float, cross: float) -> float:
        # same arithmetic as mmd_sq_from_gram, so both serialize identically
        return nf2 - 2.0 * cross + ng2


class ExpCenteredProfile(RadialGenerator):
    """phi(r) = e^r - 1 - r"""

    name = "exp_centered"

    def phi(self, r):
        r = np.asarray(r, dtype=float)
        return np.expm1(r) - r

    def dphi(self, r):
        return np.expm1(np.asarray(r, dtype=float))

    def d2phi(self, r):
        return np.exp(np.asarray(r, dtype=float))

    def closed_form_constants(self, R: float) -> SandwichConstants:
        return SandwichConstants(R=R, m=1.0, L=math.exp(R))


class LogCoshProfile(RadialGenerator):
    """phi(r) = 2 log cosh r"""

    name = "logcosh"

    def phi(self, r):
        r = np.abs(np.asarray(r, dtype=float))
        # log cosh r = r + log1p(exp(-2r)) - log 2, stable for large r
        return 2.0 * (r + np.log1p(np.exp(-2.0 * r)) - math.log(2.0))

    def dphi(self, r):
        return 2.0 * np.tanh(np.asarray(r, dtype=float))

    def d2phi(self, r):
        return 2.0 / np.cosh(np.asarray(r, dtype=float)) ** 2

    def closed_form_constants(self, R: float) -> SandwichConstants:
        return SandwichConstants(R=R, m=2.0 / math.cosh(R) ** 2, L=2.0)


class SqrtPlusProfile(RadialGenerator):
    """phi(r) = sqrt(1 + r^2) - 1"""

    name = "sqrtplus"

    def phi(self, r):
        r = np.asarray(r, dtype=float)
        # r^2 / (sqrt(1 + r^2) + 1) avoids cancellation near 0
        return r * r / (np.sqrt(1.0 + r * r) + 1.0)

    def dphi(self, r):
        r = np.asarray(r, dtype=float)
        return r / np.sqrt(1.0 + r * r)

    def d2phi(self, r):
        r = np.asarray(r, dtype=float)
        return (1.0 + r * r) ** -1.5

    def closed_form_constants(self, R: float) -> SandwichConstants:
        return SandwichConstants(R=R, m=(1.0 + R * R) ** -1.5, L=1.0)


class QuarticProfile(RadialGenerator):
    """phi(r) = r^2 + lambda r^4, lambda >= 0"""

    name = "quartic"

    def __init__(self, lam: float = 0.0):
        if not (math.isfinite(lam) and lam >= 0.0):
            raise InputError(f"quartic profile requires lambda >= 0, got {lam}")
        self.lam = float(lam)
        super().__init__()

    @property
    def label(self) -> str:
        return f"quartic(lambda={self.lam:g})"

    def phi(self, r):
        r2 = np.asarray(r, dtype=float) ** 2
        return r2 + self.lam * r2 * r2

    def dphi(self, r):
        r = np.asarray(r, dtype=float)
        return 2.0 * r + 4.0 * self.lam * r ** 3

    def d2phi(self, r):
        r = np.asarray(r, dtype=float)
        return 2.0 + 12.0 * self.lam * r * r

    def closed_form_constants(self, R: float) -> SandwichConstants:
        return SandwichConstants(R=R, m=2.0, L=2.0 + 12.0 * self.lam * R * R)


class PowerProfile(RadialGenerator):
    """phi(r) = r^p, p > 2 (m_phi = 0: the lower sandwich bound is vacuous)"""

    name = "power"

    def __init__(self, p: float):
        if not (math.isfinite(p) and p > 2.0):
            if 1.0 < p <= 2.0:
                raise InputError(f"power profile with p={p} is not covered: phi is not C^2 on [0, inf) (need p > 2)")
            raise InputError(f"power profile requires p > 2, got {p}")
        self.p = float(p)
        super().__init__()

    @property
    def label(self) -> str:
        return f"power(p={self.p:g})"

    def phi(self, r):
        return np.asarray(r, dtype=float) ** self.p

    def dphi(self, r):
        return self.p * np.asarray(r, dtype=float) ** (self.p - 1.0)

    def d2phi(self, r):
        return self.p * (self.p - 1.0) * np.asarray(r, dtype=float) ** (self.p - 2.0)

    def closed_form_constants(self, R: float) -> SandwichConstants:
        return SandwichConstants(R=R, m=0.0, L=self.p * (self.p - 1.0) * R ** (self.p - 2.0))
