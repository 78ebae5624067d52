"""
Finite-dimensional Bregman geometry

A desk-scale surrogate for the Hilbert-space statements: generators on R^m
with gradient, Hessian and convex conjugate, and the identities that the
function-space theory predicts (three-point identity, duality, bias-variance
decomposition, means, symmetry, metricisation).

Usage:
    gen = get_findim_generator("neg_entropy")
    bregman(gen, f, g)
    conjugate(gen, gen.grad(f)).argmax  # recovers f
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.special import logsumexp, softmax, xlogy

from kfbd.core.findiff import numerical_gradient, relative_error
from kfbd.generators.base import RadialGenerator, get_generator
from kfbd.utils.exceptions import DomainError, InputError, NumericError
from kfbd.utils.logger import get_logger
from kfbd.utils.rng import trial_stream

logger = get_logger(__name__)

NEWTON_TOLERANCE = 1e-10
NEWTON_MAX_ITER = 200
DESCENT_TOLERANCE = 1e-12
DESCENT_ACCEPT = 1e-8
DESCENT_MAX_ITER = 20_000
ARMIJO = 1e-4
MAX_BACKTRACKS = 60
ENTROPY_FLOOR = 1e-4
TRIANGLE_TOLERANCE = 1e-9
SCHUR_TOLERANCE = 1e-8

Family = Sequence[Tuple[float, Sequence[float]]]


class FinDimGenerator(ABC):
    """Differentiable strictly convex Phi on (a subset of) R^m"""

    name: str = "findim"
    is_quadratic: bool = False

    def __repr__(self) -> str:
        return f"{self.__class__.__name__}({self.name})"

    @abstractmethod
    def value(self, u: np.ndarray) -> float:
        pass

    @abstractmethod
    def grad(self, u: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def hess(self, u: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def sample(self, rng: np.random.Generator, m: int) -> np.ndarray:
        """Random interior point of the domain"""
        pass

    def centroid(self, m: int) -> np.ndarray:
        """Starting point for the conjugate solver"""
        return np.zeros(m)

    def in_domain(self, u: np.ndarray) -> bool:
        return bool(np.all(np.isfinite(u)))

    def in_dual_domain(self, z: np.ndarray) -> bool:
        """Whether z lies in the range of grad"""
        return bool(np.all(np.isfinite(z)))

    def check_domain(self, u: np.ndarray, label: str = "point") -> np.ndarray:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        if u.ndim != 1:
            raise InputError(f"{label} must be a vector, got shape {u.shape}")
        if not self.in_domain(u):
            raise DomainError(f"{label} {u.tolist()} is outside the domain of {self.name}")
        return u

    def divergence(self, f: np.ndarray, g: np.ndarray) -> float:
        """Phi(f) - Phi(g) - <grad Phi(g), f - g>"""
        return self.value(f) - self.value(g) - float(self.grad(g) @ (f - g))

    def newton_hessian(self, u: np.ndarray) -> np.ndarray:
        """Hessian used for Newton steps on the conjugate problem"""
        return self.hess(u)

    def gauge(self, u: np.ndarray, reference: np.ndarray) -> np.ndarray:
        """Representative of u in the gauge of reference (identity unless Phi is flat along a direction)"""
        return u

    def flat_directions(self, m: int) -> np.ndarray:
        """Orthonormal basis of directions along which Phi is affine (rows)"""
        return np.zeros((0, m))

    def conjugate_closed_form(self, z: np.ndarray) -> Optional[Tuple[float, np.ndarray]]:
        """(Phi*(z), grad Phi*(z)) when known in closed form"""
        return None


class QuadraticGenerator(FinDimGenerator):
    """Phi(u) = 1/2 <u, T u> + <b, u> + c with T symmetric positive definite"""

    name = "quadratic"
    is_quadratic = True

    def __init__(self, T, b=None, c: float = 0.0):
        T = np.atleast_2d(np.asarray(T, dtype=float))
        if T.shape[0] != T.shape[1]:
            raise InputError(f"T must be square, got {T.shape}")
        if not np.allclose(T, T.T, atol=1e-12):
            raise InputError("T must be symmetric")
        T = 0.5 * (T + T.T)
        try:
            self._chol = cho_factor(T)
        except LinAlgError as e:
            raise InputError("T must be positive definite") from e
        self.T = T
        self.b = np.zeros(T.shape[0]) if b is None else np.asarray(b, dtype=float)
        self.c = float(c)
        if self.b.shape != (T.shape[0],):
            raise InputError(f"b must have length {T.shape[0]}")

    @classmethod
    def random(cls, rng: np.random.Generator, m: int) -> "QuadraticGenerator":
        """T = A A^T / m + I with Gaussian A, b and c"""
        A = rng.normal(size=(m, m))
        return cls(A @ A.T / m + np.eye(m), rng.normal(size=m), float(rng.normal()))

    @property
    def dim(self) -> int:
        return self.T.shape[0]

    def value(self, u):
        return float(0.5 * u @ (self.T @ u) + self.b @ u + self.c)

    def grad(self, u):
        return self.T @ u + self.b

    def hess(self, u):
        return self.T.copy()

    def sample(self, rng, m):
        if m != self.dim:
            raise InputError(f"quadratic generator has dimension {self.dim}, asked for {m}")
        return rng.normal(size=m)

    def divergence(self, f, g):
        d = f - g
        return float(0.5 * d @ (self.T @ d))

    def conjugate_closed_form(self, z):
        shifted = z - self.b
        argmax = cho_solve(self._chol, shifted)
        return float(0.5 * shifted @ argmax - self.c), argmax


class RadialFinDimGenerator(FinDimGenerator):
    """Phi(u) = phi(||u||) for a radial profile phi"""

    def __init__(self, profile: RadialGenerator):
        self.profile = profile
        self.name = f"radial({profile.label})"
        with np.errstate(over="ignore"):
            self._slope_limit = float(profile.dphi(np.asarray(1e6)))

    def value(self, u):
        return float(self.profile.phi(np.linalg.norm(u)))

    def grad(self, u):
        return float(self.profile.lambda_perp(np.linalg.norm(u))) * u

    def hess(self, u):
        r = float(np.linalg.norm(u))
        m = u.size
        perp = float(self.profile.lambda_perp(r))
        if r <= 1e-12:
            return perp * np.eye(m)
        par = float(self.profile.lambda_par(r))
        unit = u / r
        return perp * np.eye(m) + (par - perp) * np.outer(unit, unit)

    def sample(self, rng, m):
        return rng.normal(size=m) / math.sqrt(m)

    def in_dual_domain(self, z):
        return super().in_dual_domain(z) and float(np.linalg.norm(z)) < self._slope_limit


class NegEntropyGenerator(FinDimGenerator):
    """Phi(u) = sum u_i log u_i on the positive orthant; d_Phi is the generalised KL divergence"""

    name = "neg_entropy"

    def value(self, u):
        return float(np.sum(xlogy(u, u)))

    def grad(self, u):
        return np.log(u) + 1.0

    def hess(self, u):
        return np.diag(1.0 / u)

    def sample(self, rng, m):
        # interior of the simplex with every coordinate >= ENTROPY_FLOOR
        return ENTROPY_FLOOR + (1.0 - m * ENTROPY_FLOOR) * rng.dirichlet(np.ones(m))

    def centroid(self, m):
        return np.full(m, 1.0 / m)

    def in_domain(self, u):
        return bool(np.all(np.isfinite(u)) and np.all(u > 0))

    def divergence(self, f, g):
        return float(np.sum(xlogy(f, f / g) - f + g))

    def conjugate_closed_form(self, z):
        argmax = np.exp(z - 1.0)
        return float(np.sum(argmax)), argmax


class LogSumExpGenerator(FinDimGenerator):
    """
    Phi(u) = log sum exp(u_i)

    Affine along the all-ones direction; its conjugate is the negative
    entropy restricted to the simplex.
    """

    name = "log_sum_exp"

    def value(self, u):
        return float(logsumexp(u))

    def grad(self, u):
        return softmax(u)

    def hess(self, u):
        s = softmax(u)
        return np.diag(s) - np.outer(s, s)

    def sample(self, rng, m):
        return rng.normal(size=m)

    def newton_hessian(self, u):
        m = u.size
        return self.hess(u) + np.full((m, m), 1.0 / m)

    def gauge(self, u, reference):
        return u + (np.mean(reference) - np.mean(u))

    def flat_directions(self, m):
        return np.full((1, m), 1.0 / math.sqrt(m))

    def in_dual_domain(self, z):
        return bool(np.all(np.isfinite(z)) and np.all(z > 0) and abs(np.sum(z) - 1.0) <= 1e-10)


def get_findim_generator(
    kind: str,
    m: int = 2,
    rng: Optional[np.random.Generator] = None,
    profile: str = "exp_centered",
) -> FinDimGenerator:
    """Factory for the four generator kinds; quadratic draws a random T, b, c from rng"""
    if kind == "quadratic":
        return QuadraticGenerator.random(rng if rng is not None else np.random.default_rng(0), m)
    elif kind == "radial":
        return RadialFinDimGenerator(get_generator(profile))
    elif kind == "neg_entropy":
        return NegEntropyGenerator()
    elif kind == "log_sum_exp":
        return LogSumExpGenerator()
    else:
        raise InputError(f"Unknown generator kind: {kind}. Must be one of: quadratic, radial, neg_entropy, log_sum_exp")


# Divergence and identities

def bregman(gen: FinDimGenerator, f, g) -> float:
    """d_Phi(f, g) = Phi(f) - Phi(g) - <grad Phi(g), f - g>"""
    f = gen.check_domain(f, "f")
    g = gen.check_domain(g, "g")
    _same_length(f, g)
    return gen.divergence(f, g)


def three_point(gen: FinDimGenerator, f, g, h) -> float:
    """Residual of d(f,g) = d(f,h) + d(h,g) - <grad(g) - grad(h), f - h>"""
    f, g, h = (gen.check_domain(v, name) for v, name in ((f, "f"), (g, "g"), (h, "h")))
    _same_length(f, g, h)
    return (
        gen.divergence(f, g) - gen.divergence(f, h) - gen.divergence(h, g)
        + float((gen.grad(g) - gen.grad(h)) @ (f - h))
    )


@dataclass
class ConjugateResult:
    value: float
    argmax: np.ndarray
    residual: float
    iterations: int


def conjugate(
    gen: FinDimGenerator,
    z,
    x0=None,
    tol: float = NEWTON_TOLERANCE,
    max_iter: int = NEWTON_MAX_ITER,
) -> ConjugateResult:
    """
    Phi*(z) = sup_u <z, u> - Phi(u) by damped Newton with Armijo backtracking

    Starts from the domain centroid unless x0 is given.

    Raises:
        DomainError: z outside the range of grad
        NumericError: no convergence within max_iter (carries the residual)
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if not gen.in_dual_domain(z):
        raise DomainError(f"{z.tolist()} is outside the range of grad {gen.name}")
    u = gen.centroid(z.size) if x0 is None else gen.check_domain(x0, "x0").copy()

    def objective(v: np.ndarray) -> float:
        return gen.value(v) - float(z @ v)

    def residual_at(v: np.ndarray) -> np.ndarray:
        return gen.grad(v) - z

    r = residual_at(u)
    residual = float(np.linalg.norm(r))
    iterations = 0
    while residual > tol:
        if iterations >= max_iter:
            raise NumericError(
                f"Conjugate Newton for {gen.name} did not converge in {max_iter} iterations "
                f"(residual {residual:.3e})",
                residual=residual,
                best=u,
            )
        step = _newton_step(gen.newton_hessian(u), r)
        u = _backtrack(gen, objective, residual_at, u, step, r, residual)
        r = residual_at(u)
        residual = float(np.linalg.norm(r))
        iterations += 1

    logger.debug(f"Conjugate of {gen.name} converged in {iterations} iterations (residual {residual:.2e})")
    return ConjugateResult(float(z @ u) - gen.value(u), u, residual, iterations)


def fenchel_young_gap(gen: FinDimGenerator, f, z, conj: Optional[ConjugateResult] = None) -> float:
    """Phi(f) + Phi*(z) - <f, z>  (>= 0, zero iff z = grad Phi(f))"""
    f = gen.check_domain(f, "f")
    z = np.atleast_1d(np.asarray(z, dtype=float))
    conj = conj if conj is not None else conjugate(gen, z)
    return gen.value(f) + conj.value - float(f @ z)


def dual_divergence_check(gen: FinDimGenerator, f, g, solver: str = "auto") -> float:
    """
    Residual of d_Phi(g, f) = d_Phi*(grad Phi(f), grad Phi(g))

    Args:
        solver: "auto" uses a closed-form conjugate when the generator has
            one, "newton" always solves numerically
    """
    f = gen.check_domain(f, "f")
    g = gen.check_domain(g, "g")
    _same_length(f, g)
    zf, zg = gen.grad(f), gen.grad(g)
    value_f, _ = _conjugate_pair(gen, zf, solver)
    value_g, grad_g = _conjugate_pair(gen, zg, solver)
    dual = value_f - value_g - float(grad_g @ (zf - zg))
    return gen.divergence(g, f) - dual


def _conjugate_pair(gen: FinDimGenerator, z: np.ndarray, solver: str) -> Tuple[float, np.ndarray]:
    if solver not in ("auto", "newton"):
        raise InputError(f"solver must be 'auto' or 'newton', got {solver!r}")
    if solver == "auto":
        closed = gen.conjugate_closed_form(z)
        if closed is not None:
            return closed
    result = conjugate(gen, z)
    return result.value, result.argmax


def as_family(gen: FinDimGenerator, family: Family) -> Tuple[np.ndarray, np.ndarray]:
    """Split [(weight, vector), ...] into weights (k,) and members (k, m)"""
    if len(family) == 0:
        raise InputError("family must contain at least one member")
    weights = np.array([float(w) for w, _ in family])
    members = np.array([gen.check_domain(v, "family member") for _, v in family])
    if members.ndim != 2:
        raise InputError("family members must share one dimension")
    if np.any(weights < 0) or abs(float(np.sum(weights)) - 1.0) > 1e-12:
        raise InputError("family weights must be nonnegative and sum to 1")
    return weights, members


def bias_variance_check(gen: FinDimGenerator, family: Family, g) -> float:
    """Residual of E[d(F, g)] = E[d(F, mean)] + d(mean, g)"""
    weights, members = as_family(gen, family)
    g = gen.check_domain(g, "g")
    mean = gen.check_domain(weights @ members, "family mean")
    total = math.fsum(w * gen.divergence(f, g) for w, f in zip(weights, members))
    spread = math.fsum(w * gen.divergence(f, mean) for w, f in zip(weights, members))
    return total - spread - gen.divergence(mean, g)


def expected_risk(gen: FinDimGenerator, weights: np.ndarray, members: np.ndarray, g: np.ndarray) -> float:
    """sum_i w_i d(f_i, g)"""
    return math.fsum(w * gen.divergence(f, g) for w, f in zip(weights, members))


def mean_minimiser(gen: FinDimGenerator, family: Family) -> np.ndarray:
    """
    argmin_g sum_i w_i d(f_i, g) by gradient descent with backtracking

    Starts from the first member (moved into the gauge of the arithmetic
    mean for generators that are flat along a direction).
    """
    weights, members = as_family(gen, family)
    mean = weights @ members

    def risk(g: np.ndarray) -> float:
        return expected_risk(gen, weights, members, g)

    def risk_grad(g: np.ndarray) -> np.ndarray:
        # d/dg d(f, g) = -Hess Phi(g) (f - g)
        return -gen.hess(g) @ (weights @ (members - g))

    start = gen.gauge(members[0].copy(), mean)
    return _descend(gen, risk, risk_grad, start, f"mean minimiser ({gen.name})")


def risk_perturbation_probe(
    gen: FinDimGenerator,
    family: Family,
    argmin,
    rng: np.random.Generator,
    directions: int = 20,
    size: float = 1e-3,
) -> float:
    """Smallest risk increase over random perturbations of the minimiser (> 0 when the minimiser is unique)"""
    weights, members = as_family(gen, family)
    argmin = gen.check_domain(argmin, "argmin")
    base = expected_risk(gen, weights, members, argmin)
    flat = gen.flat_directions(argmin.size)
    smallest = math.inf
    for _ in range(directions):
        d = rng.normal(size=argmin.size)
        d -= flat.T @ (flat @ d)
        d /= np.linalg.norm(d)
        step = size
        while not gen.in_domain(argmin + step * d):
            step *= 0.5
        smallest = min(smallest, expected_risk(gen, weights, members, argmin + step * d) - base)
    return smallest


@dataclass
class QuasiMeanResult:
    mean: np.ndarray
    direct: np.ndarray
    gap: float


def quasi_arithmetic_mean(gen: FinDimGenerator, family: Family) -> QuasiMeanResult:
    """
    (grad Phi)^{-1}(sum_i w_i grad Phi(f_i)) through the conjugate solver

    Cross-checked by direct minimisation of g -> sum_i w_i d(g, f_i).
    """
    weights, members = as_family(gen, family)
    z_bar = weights @ np.array([gen.grad(f) for f in members])
    mean = conjugate(gen, z_bar).argmax

    def risk(g: np.ndarray) -> float:
        return math.fsum(w * gen.divergence(g, f) for w, f in zip(weights, members))

    def risk_grad(g: np.ndarray) -> np.ndarray:
        return gen.grad(g) - z_bar

    start = gen.gauge(members[0].copy(), mean)
    direct = _descend(gen, risk, risk_grad, start, f"quasi-arithmetic mean ({gen.name})")
    return QuasiMeanResult(mean=mean, direct=direct, gap=float(np.linalg.norm(direct - mean)))


@dataclass
class SymmetryReport:
    max_asymmetry: float
    is_quadratic: bool
    witness_f: Optional[list]
    witness_g: Optional[list]
    trials: int


def symmetry_probe(gen: FinDimGenerator, trials: int, seed: int = 0, m: int = 2) -> SymmetryReport:
    """max |d(f, g) - d(g, f)| over random pairs, with the maximising pair"""
    if trials < 1:
        raise InputError(f"trials must be >= 1, got {trials}")
    worst, witness = -1.0, (None, None)
    for i in range(trials):
        rng = trial_stream(seed, i, "symmetry")
        f, g = gen.sample(rng, m), gen.sample(rng, m)
        gap = abs(gen.divergence(f, g) - gen.divergence(g, f))
        if gap > worst:
            worst, witness = gap, (f.tolist(), g.tolist())
    return SymmetryReport(worst, gen.is_quadratic, witness[0], witness[1], trials)


# Metricisation

@dataclass(frozen=True, eq=False)
class MetricisationSpec:
    """Operators A, B of the symmetrised square-root divergence"""
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        if A.shape != B.shape or A.shape[0] != A.shape[1]:
            raise InputError(f"A and B must be square of equal size, got {A.shape} and {B.shape}")
        for name, M in (("A", A), ("B", B)):
            if not np.allclose(M, M.T, atol=1e-12):
                raise InputError(f"{name} must be symmetric")
        object.__setattr__(self, "A", 0.5 * (A + A.T))
        object.__setattr__(self, "B", 0.5 * (B + B.T))

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    @property
    def schur_ok(self) -> bool:
        return schur_check(self)


def block_operator(spec: MetricisationSpec) -> np.ndarray:
    """M = [[A, I], [I, B]]"""
    eye = np.eye(spec.dim)
    return np.block([[spec.A, eye], [eye, spec.B]])


def schur_check(spec: MetricisationSpec) -> bool:
    """
    B - A^{-1} PSD (within -1e-8) and A strongly positive (min eigenvalue >= 1e-8)

    Raises:
        NumericError: A is singular
    """
    cond = np.linalg.cond(spec.A)
    if not np.isfinite(cond) or cond > 1e12:
        raise NumericError(f"A is singular (condition number {cond:.3e})", residual=float(cond))
    schur = spec.B - np.linalg.inv(spec.A)
    schur = 0.5 * (schur + schur.T)
    return bool(
        np.min(np.linalg.eigvalsh(schur)) >= -SCHUR_TOLERANCE
        and np.min(np.linalg.eigvalsh(spec.A)) >= SCHUR_TOLERANCE
    )


def block_min_eigenvalue(spec: MetricisationSpec) -> float:
    return float(np.min(np.linalg.eigvalsh(block_operator(spec))))


def gsb(gen: FinDimGenerator, spec: MetricisationSpec, f, g) -> float:
    """d(f,g) + d(g,f) + 1/2 ||f - g||_A^2 + 1/2 ||grad(f) - grad(g)||_B^2"""
    f, g = gen.check_domain(f, "f"), gen.check_domain(g, "g")
    _same_length(f, g)
    _check_spec_dim(spec, f)
    u = f - g
    v = gen.grad(f) - gen.grad(g)
    return (gen.divergence(f, g) + gen.divergence(g, f)) + 0.5 * float(u @ (spec.A @ u)) + 0.5 * float(v @ (spec.B @ v))


def gsb_block_form(gen: FinDimGenerator, spec: MetricisationSpec, f, g) -> float:
    """1/2 <b(f) - b(g), M (b(f) - b(g))> with b(f) = (f, grad Phi(f))"""
    f, g = gen.check_domain(f, "f"), gen.check_domain(g, "g")
    _same_length(f, g)
    _check_spec_dim(spec, f)
    diff = np.concatenate([f - g, gen.grad(f) - gen.grad(g)])
    return 0.5 * float(diff @ (block_operator(spec) @ diff))


@dataclass
class FuzzReport:
    trials: int
    violations: int
    worst_slack: float
    schur_ok: bool


def triangle_fuzz(gen: FinDimGenerator, spec: MetricisationSpec, trials: int, seed: int = 0) -> FuzzReport:
    """Count triples with sqrt(gsb(f,h)) > sqrt(gsb(f,g)) + sqrt(gsb(g,h)) + 1e-9"""
    schur_ok = schur_check(spec)
    if not schur_ok:
        logger.info("Metricisation spec fails the Schur condition; triangle violations are not excluded")
    m = spec.dim
    violations, worst = 0, -math.inf
    for i in range(trials):
        rng = trial_stream(seed, i, "triangle")
        f, g, h = gen.sample(rng, m), gen.sample(rng, m), gen.sample(rng, m)
        slack = (
            math.sqrt(max(gsb(gen, spec, f, h), 0.0))
            - math.sqrt(max(gsb(gen, spec, f, g), 0.0))
            - math.sqrt(max(gsb(gen, spec, g, h), 0.0))
        )
        worst = max(worst, slack)
        if slack > TRIANGLE_TOLERANCE:
            violations += 1
    return FuzzReport(trials, violations, worst, schur_ok)


def radial_gradient_check(g: RadialGenerator, u) -> float:
    """Relative gap between (phi'(|u|)/|u|) u and central differences of phi(|u|)"""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    r = float(np.linalg.norm(u))
    if r <= 1e-8:
        raise InputError(f"radial gradient check needs ||u|| > 1e-8, got {r}")
    closed = float(g.lambda_perp(r)) * u
    approx = numerical_gradient(lambda v: float(g.phi(np.linalg.norm(v))), u)
    return relative_error(approx, closed)


# Solvers

def _newton_step(H: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Solve H step = -r, regularising H until it is positive definite"""
    tau = 0.0
    scale = max(1.0, float(np.max(np.abs(H))))
    for _ in range(40):
        try:
            factor = cho_factor(H + tau * np.eye(H.shape[0]))
            return cho_solve(factor, -r)
        except LinAlgError:
            tau = 1e-10 * scale if tau == 0.0 else 10.0 * tau
    raise NumericError("Newton system could not be regularised", residual=float(np.linalg.norm(r)))


def _backtrack(
    gen: FinDimGenerator,
    objective: Callable[[np.ndarray], float],
    residual_at: Callable[[np.ndarray], np.ndarray],
    u: np.ndarray,
    step: np.ndarray,
    r: np.ndarray,
    residual: float,
) -> np.ndarray:
    """Armijo backtracking; near round-off, accept any step that shrinks the residual"""
    f0 = objective(u)
    slope = float(r @ step)
    t = 1.0
    for _ in range(MAX_BACKTRACKS):
        candidate = u + t * step
        if gen.in_domain(candidate):
            fc = objective(candidate)
            if fc <= f0 + ARMIJO * t * slope:
                return candidate
            if fc - f0 <= 1e-13 * (1.0 + abs(f0)) and np.linalg.norm(residual_at(candidate)) < residual:
                return candidate
        t *= 0.5
    raise NumericError(f"Line search failed for {gen.name}", residual=residual, best=u)


def _descend(
    gen: FinDimGenerator,
    risk: Callable[[np.ndarray], float],
    risk_grad: Callable[[np.ndarray], np.ndarray],
    start: np.ndarray,
    label: str,
) -> np.ndarray:
    """Gradient descent with Barzilai-Borwein trial steps and Armijo backtracking"""
    g = start
    grad = risk_grad(g)
    t = 1.0
    for _ in range(DESCENT_MAX_ITER):
        gnorm = float(np.linalg.norm(grad))
        if gnorm <= DESCENT_TOLERANCE:
            break
        f0 = risk(g)
        step, accepted = t, None
        for _ in range(MAX_BACKTRACKS):
            candidate = g - step * grad
            if gen.in_domain(candidate):
                fc = risk(candidate)
                if fc <= f0 - ARMIJO * step * gnorm * gnorm:
                    accepted = candidate
                    break
                if fc - f0 <= 1e-13 * (1.0 + abs(f0)) and np.linalg.norm(risk_grad(candidate)) < gnorm:
                    accepted = candidate
                    break
            step *= 0.5
        if accepted is None:
            break
        new_grad = risk_grad(accepted)
        s, y = accepted - g, new_grad - grad
        sy = float(s @ y)
        t = float(s @ s) / sy if sy > 0 else 2.0 * step
        g, grad = accepted, new_grad

    gnorm = float(np.linalg.norm(grad))
    if gnorm > DESCENT_ACCEPT:
        raise NumericError(f"{label} did not converge (gradient norm {gnorm:.3e})", residual=gnorm, best=g)
    return g


def _same_length(*vectors: np.ndarray) -> None:
    sizes = {v.size for v in vectors}
    if len(sizes) != 1:
        raise InputError(f"Dimension mismatch: {sorted(sizes)}")


def _check_spec_dim(spec: MetricisationSpec, f: np.ndarray) -> None:
    if spec.dim != f.size:
        raise InputError(f"Metricisation spec has dimension {spec.dim}, vectors have {f.size}")
