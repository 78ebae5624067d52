"""
Estimation Service

Minimum-divergence location fits under contamination and dependence, and the
Monte Carlo audits of the estimation bounds.

p_theta is represented by one fixed antithetic base sample shifted by theta
(common random numbers across theta). For a stationary kernel the self term
of a shifted sample does not depend on theta, so every objective evaluation
only costs one cross sum.

Usage:
    service = EstimationService(get_kernel("gaussian:1.0"), get_generator("square"), LocationModel(ModelSpec()))
    fit = service.fit(data, theta0=0.0)
    rows = service.bound_audit(AuditConfig(n_grid=[100, 1000]))
"""

import math
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy import stats
from scipy.optimize import minimize

from kfbd.core.embedding import SampleSet, clamp_tiny_negative, mmd_sq_from_gram
from kfbd.core.kernels import Kernel
from kfbd.generators.base import RadialGenerator, SandwichConstants
from kfbd.utils.config import (
    AuditConfig,
    ContaminationConfig,
    DependenceConfig,
    ModelSpec,
    settings,
)
from kfbd.utils.exceptions import InputError, NumericError
from kfbd.utils.logger import get_logger
from kfbd.utils.parallel import map_indices
from kfbd.utils.rng import substream

logger = get_logger(__name__)

KME_RADIUS = 1.0
RESTARTS = 3
MAX_LAG = 50
TRUNCATION_SE = 2.0
AUDIT_SE = 3.0
THETA_GRID_HALF_WIDTH = 3.0
TRIANGLE_TOLERANCE = 1e-9
RHO_PATH_LENGTH = 200


class LocationModel:
    """Location family p_theta = law of theta + scale * noise on R^d"""

    def __init__(self, spec: ModelSpec | None = None):
        self.spec = spec or ModelSpec()
        self.family = self.spec.family
        self.scale = self.spec.scale
        self.dim = self.spec.dim
        self.bound = self.spec.bound

    def __repr__(self) -> str:
        return f"LocationModel({self.family}, scale={self.scale}, dim={self.dim})"

    @property
    def marginal(self):
        """Coordinate law of the noise as a frozen scipy.stats distribution"""
        if self.family == "gaussian_location":
            return stats.norm(loc=0.0, scale=self.scale)
        return stats.laplace(loc=0.0, scale=self.scale)

    def theta(self, value) -> np.ndarray:
        """Broadcast a scalar or vector parameter to shape (d,)"""
        theta = np.asarray(value, dtype=float).reshape(-1)
        if theta.size == 1:
            theta = np.full(self.dim, float(theta[0]))
        if theta.size != self.dim:
            raise InputError(f"theta must have {self.dim} coordinates, got {theta.size}")
        return theta

    def noise(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.family == "gaussian_location":
            return self.scale * rng.standard_normal((n, self.dim))
        return rng.laplace(loc=0.0, scale=self.scale, size=(n, self.dim))

    def ar1_noise(self, rng: np.random.Generator, n: int, coefficient: float) -> np.ndarray:
        """
        Stationary AR(1) noise with the model's marginal

        A Gaussian AR(1) path drives each coordinate; non-Gaussian marginals
        are obtained through the Gaussian copula.
        """
        z = np.empty((n, self.dim))
        innovation = math.sqrt(1.0 - coefficient * coefficient)
        z[0] = rng.standard_normal(self.dim)
        for t in range(1, n):
            z[t] = coefficient * z[t - 1] + innovation * rng.standard_normal(self.dim)
        if self.family == "gaussian_location":
            return self.scale * z
        return self.marginal.ppf(stats.norm.cdf(z))

    def sample(self, theta, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.theta(theta) + self.noise(rng, n)

    def logpdf(self, x, theta) -> np.ndarray:
        """log p_theta at every row of x"""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.sum(self.marginal.logpdf(x - self.theta(theta)), axis=1)

    def ks_pvalue(self, rng: np.random.Generator, draws: int = 10_000) -> float:
        """Kolmogorov-Smirnov p-value of the sampler against the density (d = 1)"""
        if self.dim != 1:
            raise InputError("the sampler check is defined for d = 1")
        return float(stats.kstest(self.sample(0.0, rng, draws).ravel(), self.marginal.cdf).pvalue)


class ModelEmbedding:
    """Embeddings of p_theta from one fixed base sample (common random numbers)"""

    def __init__(self, model: LocationModel, k: Kernel, size: int, seed: int):
        if size < 100:
            raise InputError(f"model_sample_size must be >= 100, got {size}")
        half = model.noise(substream(seed, "model-sample"), (size + 1) // 2)
        self.model = model
        self.kernel = k
        self.noise = np.vstack([half, -half])[:size]
        self.weights = np.full(size, 1.0 / size)
        self.self_term = k.weighted_sum(self.noise, self.weights, self.noise, self.weights)

    def sample(self, theta) -> SampleSet:
        return SampleSet(self.model.theta(theta) + self.noise, self.weights)

    def cross(self, theta, other: SampleSet) -> float:
        return self.kernel.weighted_sum(self.model.theta(theta) + self.noise, self.weights, other.points, other.weights)

    def mmd_sq(self, theta, other: SampleSet, other_norm_sq: float) -> float:
        return mmd_sq_from_gram(self.self_term, other_norm_sq, self.cross(theta, other))

    def divergence(self, g: RadialGenerator, theta, other: SampleSet, other_norm_sq: float) -> float:
        """d_Phi(p_theta, other)"""
        return clamp_tiny_negative(g.divergence_from_gram(self.self_term, other_norm_sq, self.cross(theta, other)))


def generate_data(
    model: LocationModel,
    n: int,
    rng: np.random.Generator,
    contamination: ContaminationConfig | None = None,
    dependence: DependenceConfig | None = None,
) -> SampleSet:
    """n draws from (1 - eps) p_theta0 + eps delta_offset, iid or AR(1)"""
    if n < 1:
        raise InputError(f"n must be >= 1, got {n}")
    contamination = contamination or ContaminationConfig()
    dependence = dependence or DependenceConfig()
    if dependence.kind == "ar1":
        noise = model.ar1_noise(rng, n, dependence.coefficient)
    else:
        noise = model.noise(rng, n)
    points = model.theta(contamination.theta0) + noise
    if contamination.epsilon > 0:
        replaced = rng.random(n) < contamination.epsilon
        points[replaced] = contamination.offset
    return SampleSet.uniform(points)


def reference_sample(
    model: LocationModel,
    size: int,
    rng: np.random.Generator,
    contamination: ContaminationConfig | None = None,
) -> SampleSet:
    """Large-sample surrogate for p0 with the contamination weight carried exactly"""
    contamination = contamination or ContaminationConfig()
    clean = SampleSet.uniform(model.sample(contamination.theta0, rng, size))
    if contamination.epsilon == 0:
        return clean
    atom = SampleSet.uniform(np.full((1, model.dim), contamination.offset))
    return clean.mixture(atom, 1.0 - contamination.epsilon)


def self_inner(k: Kernel, s: SampleSet) -> float:
    return k.weighted_sum(s.points, s.weights, s.points, s.weights)


# Fitting

@dataclass
class FitResult:
    theta_hat: List[float]
    objective: float
    objective_at_theta0: Optional[float]
    converged: bool
    evaluations: int
    starts: int

    @property
    def sane(self) -> bool:
        """objective(theta_hat) <= objective(theta0) + 1e-3"""
        return self.objective_at_theta0 is None or self.objective <= self.objective_at_theta0 + 1e-3

    def to_dict(self) -> dict:
        data = asdict(self)
        data["sane"] = self.sane
        return data


def min_divergence_fit(
    model: LocationModel,
    data: SampleSet,
    g: RadialGenerator,
    k: Kernel,
    model_sample_size: int = 500,
    seed: int = 0,
    theta0=None,
    embedding: ModelEmbedding | None = None,
    restarts: int = RESTARTS,
) -> FitResult:
    """
    theta_hat = argmin_theta d_Phi(p_theta, p_hat_n) by Nelder-Mead

    Starts from the coordinatewise data median plus `restarts` uniform draws
    in the parameter box; the best converged run wins.

    Raises:
        NumericError: no run converged (carries the best iterate)
    """
    if data.dim != model.dim:
        raise InputError(f"Data dimension {data.dim} does not match model dimension {model.dim}")
    embedding = embedding or ModelEmbedding(model, k, model_sample_size, seed)
    data_norm_sq = self_inner(k, data)
    bounds = [(-model.bound, model.bound)] * model.dim

    def objective(theta: np.ndarray) -> float:
        return embedding.divergence(g, theta, data, data_norm_sq)

    rng = substream(seed, "fit-restarts")
    starts = [np.clip(np.median(data.points, axis=0), -model.bound, model.bound)]
    starts += [rng.uniform(-model.bound, model.bound, model.dim) for _ in range(restarts)]

    runs = []
    for start in starts:
        result = minimize(
            objective,
            start,
            method="Nelder-Mead",
            bounds=bounds,
            options={"xatol": 1e-6, "fatol": 1e-12, "maxfev": 2000 * model.dim},
        )
        if not result.success:
            logger.warning(f"Nelder-Mead start {start.tolist()} did not converge: {result.message}")
        runs.append(result)

    converged = [r for r in runs if r.success]
    best = min(converged or runs, key=lambda r: r.fun)
    evaluations = sum(int(r.nfev) for r in runs)
    if not converged:
        raise NumericError(
            f"Nelder-Mead did not converge from any of {len(starts)} starts",
            residual=float(best.fun),
            best=best.x.tolist(),
        )

    at_theta0 = None if theta0 is None else objective(model.theta(theta0))
    fit = FitResult(
        theta_hat=[float(v) for v in best.x],
        objective=float(best.fun),
        objective_at_theta0=at_theta0,
        converged=True,
        evaluations=evaluations,
        starts=len(starts),
    )
    if not fit.sane:
        logger.warning(f"Fit objective {fit.objective:.3e} exceeds objective at theta0 {at_theta0:.3e} by > 1e-3")
    logger.debug(f"Fitted theta_hat={fit.theta_hat} ({evaluations} evaluations, {g.label})")
    return fit


# Dependence

@dataclass
class RhoEstimate:
    value: float
    standard_error: float
    lags: List[float]
    lag_standard_errors: List[float]
    truncation_lag: int

    @property
    def bound(self) -> float:
        """rho entering (1 + rho)/n: dominates 2 sum_t (1 - t/n) rho_t"""
        return 2.0 * max(self.value, 0.0)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["bound"] = self.bound
        return data


def rho_estimate(
    k: Kernel,
    model: LocationModel,
    process: DependenceConfig,
    theta0=0.0,
    n: int = RHO_PATH_LENGTH,
    replicates: int = 100,
    seed: int = 0,
    reference_size: int | None = None,
) -> RhoEstimate:
    """
    Monte Carlo estimate of sum_i rho_i with rho_i = E<k(X_i,.) - mu, k(X_0,.) - mu>

    Each lag is averaged along `replicates` independent paths of length n.
    Lag 1 is always kept; summation stops before the first lag i >= 2 with
    |rho_hat_i| < 2 standard errors.
    """
    if n < 3 or replicates < 2:
        raise InputError("rho estimation needs n >= 3 and at least 2 replicates")
    reference_size = reference_size or settings.REFERENCE_SAMPLE_SIZE
    contamination = ContaminationConfig(theta0=float(model.theta(theta0)[0]))
    reference = reference_sample(model, reference_size, substream(seed, "rho-reference"), contamination)
    ref_sq = _u_statistic_norm_sq(k, reference)
    max_lag = min(n - 1, MAX_LAG)

    def replicate(r: int) -> np.ndarray:
        path = generate_data(model, n, substream(seed, "rho-path", r), contamination, process).points
        mu_at = k.evaluate_embedding(reference.points, reference.weights, path)
        means = np.empty(max_lag)
        for lag in range(1, max_lag + 1):
            products = k.profile(np.sum((path[lag:] - path[:-lag]) ** 2, axis=1))
            means[lag - 1] = np.mean(products - mu_at[lag:] - mu_at[:-lag] + ref_sq)
        return means

    per_replicate = np.array(map_indices(replicate, replicates))
    lags = per_replicate.mean(axis=0)
    lag_se = per_replicate.std(axis=0, ddof=1) / math.sqrt(replicates)

    kept = 1
    for i in range(1, max_lag):
        if abs(lags[i]) < TRUNCATION_SE * lag_se[i]:
            break
        kept = i + 1

    totals = per_replicate[:, :kept].sum(axis=1)
    estimate = RhoEstimate(
        value=float(np.mean(totals)),
        standard_error=float(np.std(totals, ddof=1) / math.sqrt(replicates)),
        lags=[float(v) for v in lags[: kept + 1]],
        lag_standard_errors=[float(v) for v in lag_se[: kept + 1]],
        truncation_lag=kept,
    )
    logger.info(f"rho_hat={estimate.value:.4f} (se {estimate.standard_error:.4f}, lags 1..{kept}, {process.kind})")
    return estimate


def _u_statistic_norm_sq(k: Kernel, s: SampleSet) -> float:
    """Unbiased ||mu(p)||^2 from a uniform sample (diagonal excluded)"""
    n = s.size
    ones = np.ones(n)
    total = k.weighted_sum(s.points, ones, s.points, ones) - float(np.sum(k.diag(s.points)))
    return total / (n * (n - 1))


# Audits

@dataclass
class AuditRow:
    n: int
    lhs: float
    lhs_se: float
    rhs: float
    rhs_mmd_variant: float
    inf_term: float
    inf_term_mmd_variant: float
    rho_hat: float
    rho_bound: float
    passed: bool
    grid_inf: bool = True

    def to_dict(self) -> dict:
        data = asdict(self)
        data["pass"] = data.pop("passed")
        return data


@dataclass
class TriangleRecord:
    lhs: float
    rhs: float
    slack: float
    violated: bool
    theta: List[float]
    theta_hat: List[float]
    used_fit: bool
    mmd_model_reference: float
    mmd_data_reference: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TriangleSummary:
    profile: str
    instances: int
    violations: int
    worst_slack: float
    records: List[TriangleRecord] = field(default_factory=list)

    def to_dict(self) -> dict:
        data = asdict(self)
        data.pop("records")
        return data


@dataclass
class EnvelopeRow:
    n: int
    mean_sqrt_mmd_sq: float
    se: float
    envelope: float
    rho_bound: float
    ok: bool

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SweepResult:
    epsilons: List[float]
    inf_terms: List[float]
    inf_terms_mmd_variant: List[float]
    slope: float
    intercept: float
    r_squared: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class RobustnessReport:
    n: int
    epsilon: float
    median_error_fit: float
    median_error_mean: float

    @property
    def fit_wins(self) -> bool:
        return self.median_error_fit < self.median_error_mean

    def to_dict(self) -> dict:
        data = asdict(self)
        data["fit_wins"] = self.fit_wins
        return data


class EstimationService:
    """Fits and bound audits for one (kernel, profile, location model) triple"""

    def __init__(
        self,
        k: Kernel,
        g: RadialGenerator,
        model: LocationModel,
        seed: int = 0,
        model_sample_size: int | None = None,
        reference_size: int | None = None,
    ):
        self.kernel = k
        self.generator = g
        self.model = model
        self.seed = seed
        self.model_sample_size = model_sample_size or settings.MODEL_SAMPLE_SIZE
        self.reference_size = reference_size or settings.REFERENCE_SAMPLE_SIZE
        self.embedding = ModelEmbedding(model, k, self.model_sample_size, seed)

    def constants(self) -> SandwichConstants:
        """Sandwich constants on the unit KME ball (all supplied kernels are bounded by 1)"""
        return self.generator.sandwich_constants(KME_RADIUS)

    def require_comparable(self) -> SandwichConstants:
        constants = self.constants()
        if not constants.comparable:
            raise InputError(f"Profile {self.generator.label} has m = 0 on the unit ball; the bound is vacuous")
        return constants

    def fit(self, data: SampleSet, theta0=None, seed: int | None = None) -> FitResult:
        return min_divergence_fit(
            self.model, data, self.generator, self.kernel,
            seed=self.seed if seed is None else seed,
            theta0=theta0,
            embedding=self.embedding,
        )

    def reference(self, contamination: ContaminationConfig | None = None) -> SampleSet:
        return reference_sample(self.model, self.reference_size, substream(self.seed, "reference"), contamination)

    def theta_grid(self, theta0, points: int) -> np.ndarray:
        """Grid around theta0 +- 3 (along the diagonal when d > 1)"""
        offsets = np.linspace(-THETA_GRID_HALF_WIDTH, THETA_GRID_HALF_WIDTH, points)
        return self.model.theta(theta0) + offsets[:, None] * np.ones(self.model.dim)

    def inf_terms(self, reference: SampleSet, ref_sq: float, theta0, points: int) -> tuple[float, float]:
        """
        Grid infimum of (L / sqrt(2m)) sqrt(MMD(p_theta, p0)) and of its MMD^2 variant

        A grid infimum over-estimates the true infimum.
        """
        constants = self.require_comparable()
        factor = constants.L / math.sqrt(2.0 * constants.m)
        mmds = np.array([
            math.sqrt(max(self.embedding.mmd_sq(theta, reference, ref_sq), 0.0))
            for theta in self.theta_grid(theta0, points)
        ])
        return factor * float(np.min(np.sqrt(mmds))), factor * float(np.min(mmds))

    def bound_audit(self, config: AuditConfig) -> List[AuditRow]:
        """
        Audit E[sqrt(d_Phi(p_theta_hat, p0))] <= inf term + sqrt((1 + rho)/n)(sqrt(L/2) + L/sqrt(2m))

        The left side is averaged over replicated fits; a row passes when
        lhs <= rhs + 3 standard errors.

        Raises:
            InputError: the profile has m = 0 (vacuous bound)
        """
        constants = self.require_comparable()
        L, m = constants.L, constants.m
        contamination = config.contamination
        theta0 = contamination.theta0

        reference = self.reference(contamination)
        ref_sq = self_inner(self.kernel, reference)
        inf_term, inf_term_mmd = self.inf_terms(reference, ref_sq, theta0, config.grid_points)
        rho = rho_estimate(
            self.kernel, self.model, config.dependence, theta0,
            replicates=config.rho_replicates, seed=self.seed, reference_size=self.reference_size,
        )
        sample_factor = math.sqrt(L / 2.0) + L / math.sqrt(2.0 * m)

        rows = []
        for n in config.n_grid:
            def replicate(r: int, n: int = n) -> float:
                rng = substream(self.seed, f"audit-data-{n}", r)
                data = generate_data(self.model, n, rng, contamination, config.dependence)
                fit = self.fit(data, seed=self.seed + r)
                return math.sqrt(max(self.embedding.divergence(self.generator, fit.theta_hat, reference, ref_sq), 0.0))

            values = np.array(map_indices(replicate, config.replicates))
            lhs = float(np.mean(values))
            lhs_se = float(np.std(values, ddof=1) / math.sqrt(config.replicates))
            tail = math.sqrt((1.0 + rho.bound) / n) * sample_factor
            row = AuditRow(
                n=n,
                lhs=lhs,
                lhs_se=lhs_se,
                rhs=inf_term + tail,
                rhs_mmd_variant=inf_term_mmd + tail,
                inf_term=inf_term,
                inf_term_mmd_variant=inf_term_mmd,
                rho_hat=rho.value,
                rho_bound=rho.bound,
                passed=lhs <= inf_term + tail + AUDIT_SE * lhs_se,
            )
            logger.info(f"Audit n={n}: lhs={lhs:.4f} (se {lhs_se:.4f}), rhs={row.rhs:.4f}, pass={row.passed}")
            rows.append(row)
        return rows

    def triangle_audit(self, theta, data: SampleSet, reference: SampleSet, ref_sq: float | None = None) -> TriangleRecord:
        """
        Per-instance check of

            sqrt(D'(p_theta_hat, p0)) <= (L/sqrt(2m)) MMD(p_theta, p0) + (sqrt(L/2) + L/sqrt(2m)) MMD(p_hat, p0)

        with D' = d_Phi. theta_hat is the fit unless theta itself has the
        smaller divergence to the data, which the inequality requires.
        """
        constants = self.require_comparable()
        L, m = constants.L, constants.m
        ref_sq = self_inner(self.kernel, reference) if ref_sq is None else ref_sq
        data_sq = self_inner(self.kernel, data)
        theta = self.model.theta(theta)

        fit = self.fit(data)
        fitted = np.asarray(fit.theta_hat)
        used_fit = fit.objective <= self.embedding.divergence(self.generator, theta, data, data_sq)
        theta_hat = fitted if used_fit else theta

        lhs = math.sqrt(max(self.embedding.divergence(self.generator, theta_hat, reference, ref_sq), 0.0))
        mmd_model = math.sqrt(max(self.embedding.mmd_sq(theta, reference, ref_sq), 0.0))
        mmd_data = math.sqrt(max(mmd_sq_from_gram(
            data_sq, ref_sq, self.kernel.weighted_sum(data.points, data.weights, reference.points, reference.weights)
        ), 0.0))
        rhs = (L / math.sqrt(2.0 * m)) * mmd_model + (math.sqrt(L / 2.0) + L / math.sqrt(2.0 * m)) * mmd_data
        slack = rhs - lhs
        return TriangleRecord(
            lhs=lhs,
            rhs=rhs,
            slack=slack,
            violated=slack < -TRIANGLE_TOLERANCE,
            theta=theta.tolist(),
            theta_hat=[float(v) for v in theta_hat],
            used_fit=bool(used_fit),
            mmd_model_reference=mmd_model,
            mmd_data_reference=mmd_data,
        )

    def triangle_corpus(
        self,
        instances: int = 200,
        n: int = 100,
        contamination: ContaminationConfig | None = None,
    ) -> TriangleSummary:
        """Triangle audit over random (theta, dataset) instances drawn around theta0"""
        contamination = contamination or ContaminationConfig()
        reference = self.reference(contamination)
        ref_sq = self_inner(self.kernel, reference)
        theta0 = self.model.theta(contamination.theta0)

        def instance(i: int) -> TriangleRecord:
            rng = substream(self.seed, "triangle-instance", i)
            theta = theta0 + rng.uniform(-THETA_GRID_HALF_WIDTH, THETA_GRID_HALF_WIDTH, self.model.dim)
            data = generate_data(self.model, n, rng, contamination)
            return self.triangle_audit(theta, data, reference, ref_sq)

        records = map_indices(instance, instances)
        summary = TriangleSummary(
            profile=self.generator.label,
            instances=instances,
            violations=sum(r.violated for r in records),
            worst_slack=min(r.slack for r in records),
            records=records,
        )
        logger.info(f"Triangle audit ({summary.profile}): {summary.violations} violations in {instances} instances")
        return summary

    def sqrt_n_envelope(
        self,
        n_grid: Sequence[int],
        replicates: int = 20,
        dependence: DependenceConfig | None = None,
        rho: RhoEstimate | None = None,
    ) -> List[EnvelopeRow]:
        """E sqrt(MMD^2(p_hat_n, p0)) against sqrt((1 + rho)/n) for clean data"""
        dependence = dependence or DependenceConfig()
        reference = self.reference()
        ref_sq = self_inner(self.kernel, reference)
        if rho is None:
            rho = rho_estimate(self.kernel, self.model, dependence, seed=self.seed, reference_size=self.reference_size)

        rows = []
        for n in n_grid:
            def replicate(r: int, n: int = n) -> float:
                data = generate_data(self.model, n, substream(self.seed, f"envelope-{n}", r), dependence=dependence)
                cross = self.kernel.weighted_sum(data.points, data.weights, reference.points, reference.weights)
                return math.sqrt(max(mmd_sq_from_gram(self_inner(self.kernel, data), ref_sq, cross), 0.0))

            values = np.array(map_indices(replicate, replicates))
            mean = float(np.mean(values))
            se = float(np.std(values, ddof=1) / math.sqrt(replicates))
            envelope = math.sqrt((1.0 + rho.bound) / n)
            rows.append(EnvelopeRow(n, mean, se, envelope, rho.bound, mean <= envelope + AUDIT_SE * se))
        return rows

    def contamination_sweep(
        self,
        epsilons: Sequence[float] = (0.0, 0.05, 0.1, 0.2),
        offset: float = 10.0,
        theta0: float = 0.0,
        grid_points: int = 101,
    ) -> SweepResult:
        """Infimum term against epsilon with a least-squares line through the MMD^2 variant"""
        if len(epsilons) < 3:
            raise InputError("a contamination sweep needs at least three epsilon values")
        terms, variants = [], []
        for eps in epsilons:
            contamination = ContaminationConfig(epsilon=eps, offset=offset, theta0=theta0)
            reference = self.reference(contamination)
            ref_sq = self_inner(self.kernel, reference)
            inf_term, inf_term_mmd = self.inf_terms(reference, ref_sq, theta0, grid_points)
            terms.append(inf_term)
            variants.append(inf_term_mmd)
        line = stats.linregress(np.asarray(epsilons, dtype=float), np.asarray(variants))
        return SweepResult(
            epsilons=[float(e) for e in epsilons],
            inf_terms=terms,
            inf_terms_mmd_variant=variants,
            slope=float(line.slope),
            intercept=float(line.intercept),
            r_squared=float(line.rvalue ** 2),
        )

    def robustness_study(self, contamination: ContaminationConfig, n: int = 500, replicates: int = 50) -> RobustnessReport:
        """Median |theta_hat - theta0| of the fit against the sample mean"""
        theta0 = self.model.theta(contamination.theta0)

        def replicate(r: int) -> tuple[float, float]:
            data = generate_data(self.model, n, substream(self.seed, f"robustness-{n}", r), contamination)
            fit = self.fit(data, seed=self.seed + r)
            mean = data.weights @ data.points
            return float(np.linalg.norm(np.asarray(fit.theta_hat) - theta0)), float(np.linalg.norm(mean - theta0))

        errors = np.array(map_indices(replicate, replicates))
        report = RobustnessReport(
            n=n,
            epsilon=contamination.epsilon,
            median_error_fit=float(np.median(errors[:, 0])),
            median_error_mean=float(np.median(errors[:, 1])),
        )
        logger.info(
            f"Robustness n={n}, eps={contamination.epsilon}: fit {report.median_error_fit:.4f} "
            f"vs mean {report.median_error_mean:.4f}"
        )
        return report
