"""
Verification Service

Property suites over the finite-dimensional lab, the MMD sandwich and a
small estimation smoke test. Each property yields a PropertyResult; the
report is deterministic for a fixed seed (no timings, sorted keys).

Usage:
    service = VerificationService(seed=42, trials=1000)
    report = service.run("findim")
    print(report.passed)
"""

import math
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from kfbd.core.divergence import deformed_divergence
from kfbd.core.embedding import SampleSet, embed
from kfbd.core.findiff import numerical_gradient, numerical_hessian, relative_error
from kfbd.core.findim import (
    FinDimGenerator,
    MetricisationSpec,
    NegEntropyGenerator,
    RadialFinDimGenerator,
    bias_variance_check,
    bregman,
    dual_divergence_check,
    fenchel_young_gap,
    get_findim_generator,
    gsb,
    gsb_block_form,
    mean_minimiser,
    quasi_arithmetic_mean,
    radial_gradient_check,
    risk_perturbation_probe,
    symmetry_probe,
    three_point,
    triangle_fuzz,
)
from kfbd.core.kernels import GaussianKernel
from kfbd.generators.base import RadialGenerator, get_generator
from kfbd.generators.table import table_profiles
from kfbd.services.estimation_service import (
    EstimationService,
    LocationModel,
    generate_data,
    rho_estimate,
)
from kfbd.utils.config import ContaminationConfig, DependenceConfig, ModelSpec
from kfbd.utils.exceptions import InputError
from kfbd.utils.logger import get_logger
from kfbd.utils.rng import substream, trial_stream

logger = get_logger(__name__)

SUITES = ("findim", "sandwich", "estimation-smoke")
FINDIM_KINDS = ("quadratic", "radial", "neg_entropy", "log_sum_exp")
IDENTITY_TOLERANCE = 1e-10
DUAL_TOLERANCE = 1e-7
MEAN_TOLERANCE = 1e-6
QUASI_TOLERANCE = 1e-5
DERIVATIVE_TOLERANCE = 1e-4
SANDWICH_TOLERANCE = 1e-10
SPECTRAL_RADII = (0.1, 0.5, 0.9)
SPECTRAL_DIMS = (2, 5, 10)
DUAL_PAIRS = 100
MEAN_FAMILIES = 20
MAX_FAMILY = 10


@dataclass
class PropertyResult:
    """Outcome of one property over its randomized instances"""
    name: str
    generator: str
    passed: bool
    worst: float
    tolerance: float
    instances: int
    note: str = ""
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class VerificationReport:
    suite: str
    seed: int
    properties: List[PropertyResult]

    @property
    def passed(self) -> bool:
        return all(p.passed for p in self.properties)

    @property
    def failures(self) -> List[str]:
        return [f"{p.name}[{p.generator}]" for p in self.properties if not p.passed]

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "seed": self.seed,
            "passed": self.passed,
            "failures": self.failures,
            "properties": [p.to_dict() for p in self.properties],
        }


class VerificationService:
    """Runs one named property suite"""

    def __init__(
        self,
        seed: int = 0,
        trials: int = 1000,
        dims: Sequence[int] = (2, 5),
        generators: Optional[List[RadialGenerator]] = None,
    ):
        if trials < 1:
            raise InputError(f"trials must be >= 1, got {trials}")
        if not dims or any(m < 2 for m in dims):
            raise InputError(f"dims must be a nonempty list of dimensions >= 2, got {list(dims)}")
        self.seed = seed
        self.trials = trials
        self.dims = list(dims)
        self.generators = generators

    def run(self, suite: str) -> VerificationReport:
        runners = {
            "findim": self.findim_suite,
            "sandwich": self.sandwich_suite,
            "estimation-smoke": self.estimation_smoke_suite,
        }
        if suite not in runners:
            raise InputError(f"Unknown suite: {suite}. Must be one of: {', '.join(SUITES)}")
        logger.info(f"Running suite {suite} (seed={self.seed}, trials={self.trials})")
        report = VerificationReport(suite, self.seed, runners[suite]())
        level = "passed" if report.passed else f"failed: {report.failures}"
        logger.info(f"Suite {suite} {level}")
        return report

    # findim

    def findim_suite(self) -> List[PropertyResult]:
        results: List[PropertyResult] = []
        for m in self.dims:
            for kind in FINDIM_KINDS:
                gen = get_findim_generator(kind, m, substream(self.seed, f"quadratic-{m}"))
                results += [
                    self._three_point(gen, m),
                    self._bias_variance(gen, m),
                    self._fenchel_young(gen, m),
                    self._derivatives(gen, m),
                    self._dual(gen, m),
                    self._means(gen, m),
                    self._symmetry(gen, m),
                    self._gsb_agreement(gen, m),
                ]
                if kind in ("quadratic", "neg_entropy"):
                    results.append(self._triangle(gen, m))
        results += self._radial_calculus()
        return results

    def _instances(self, name: str, count: int) -> List[np.random.Generator]:
        return [trial_stream(self.seed, i, name) for i in range(count)]

    def _three_point(self, gen: FinDimGenerator, m: int) -> PropertyResult:
        worst = 0.0
        for rng in self._instances(f"three-point-{m}", self.trials):
            f, g, h = gen.sample(rng, m), gen.sample(rng, m), gen.sample(rng, m)
            scale = 1.0 + abs(bregman(gen, f, g)) + abs(bregman(gen, f, h)) + abs(bregman(gen, h, g))
            worst = max(worst, abs(three_point(gen, f, g, h)) / scale)
        return _result(f"three_point[m={m}]", gen.name, worst, IDENTITY_TOLERANCE, self.trials)

    def _bias_variance(self, gen: FinDimGenerator, m: int) -> PropertyResult:
        worst = 0.0
        for rng in self._instances(f"bias-variance-{m}", self.trials):
            family = _random_family(gen, rng, m)
            g = gen.sample(rng, m)
            residual = bias_variance_check(gen, family, g)
            scale = 1.0 + sum(w * bregman(gen, f, g) for w, f in family)
            worst = max(worst, abs(residual) / scale)
        return _result(f"bias_variance[m={m}]", gen.name, worst, IDENTITY_TOLERANCE, self.trials)

    def _fenchel_young(self, gen: FinDimGenerator, m: int) -> PropertyResult:
        """Gap >= 0 for arbitrary (f, z) and = 0 at z = grad(f)"""
        count = min(self.trials, DUAL_PAIRS)
        lowest, equality = math.inf, 0.0
        for rng in self._instances(f"fenchel-young-{m}", count):
            f, other = gen.sample(rng, m), gen.sample(rng, m)
            lowest = min(lowest, fenchel_young_gap(gen, f, gen.grad(other)))
            equality = max(equality, abs(fenchel_young_gap(gen, f, gen.grad(f))) / (1.0 + abs(gen.value(f))))
        return PropertyResult(
            name=f"fenchel_young[m={m}]",
            generator=gen.name,
            passed=lowest >= -IDENTITY_TOLERANCE and equality <= DUAL_TOLERANCE,
            worst=max(-lowest, equality, 0.0),
            tolerance=IDENTITY_TOLERANCE,
            instances=count,
            detail={"min_gap": lowest, "max_gap_at_gradient": equality},
        )

    def _derivatives(self, gen: FinDimGenerator, m: int) -> PropertyResult:
        """grad and hess against central differences"""
        count = min(self.trials, DUAL_PAIRS)
        worst = 0.0
        for rng in self._instances(f"derivatives-{m}", count):
            u = gen.sample(rng, m)
            step = 1e-3 * float(np.min(u)) if isinstance(gen, NegEntropyGenerator) else 1e-4
            grad_error = relative_error(numerical_gradient(gen.value, u, min(step, 1e-6)), gen.grad(u))
            hess_error = relative_error(numerical_hessian(gen.value, u, step), gen.hess(u))
            psd = float(np.min(np.linalg.eigvalsh(gen.hess(u))))
            worst = max(worst, grad_error, hess_error, -psd)
        return _result(f"derivatives[m={m}]", gen.name, worst, DERIVATIVE_TOLERANCE, count)

    def _dual(self, gen: FinDimGenerator, m: int) -> PropertyResult:
        count = min(self.trials, DUAL_PAIRS)
        solver = "auto" if gen.is_quadratic else "newton"
        worst = 0.0
        for rng in self._instances(f"dual-{m}", count):
            f, g = gen.sample(rng, m), gen.sample(rng, m)
            worst = max(worst, abs(dual_divergence_check(gen, f, g, solver=solver)))
        tolerance = IDENTITY_TOLERANCE if gen.is_quadratic else DUAL_TOLERANCE
        return _result(f"dual_divergence[m={m}]", gen.name, worst, tolerance, count, note=f"solver={solver}")

    def _means(self, gen: FinDimGenerator, m: int) -> PropertyResult:
        """Arithmetic mean minimises the expected risk; quasi-arithmetic mean agrees with direct minimisation"""
        count = min(self.trials, MEAN_FAMILIES)
        worst_mean, worst_quasi, smallest_increase = 0.0, 0.0, math.inf
        for rng in self._instances(f"means-{m}", count):
            family = _random_family(gen, rng, m)
            weights = np.array([w for w, _ in family])
            members = np.array([f for _, f in family])
            arithmetic = weights @ members
            argmin = mean_minimiser(gen, family)
            worst_mean = max(worst_mean, float(np.linalg.norm(argmin - arithmetic)))
            smallest_increase = min(smallest_increase, risk_perturbation_probe(gen, family, argmin, rng))
            quasi = quasi_arithmetic_mean(gen, family)
            direct_gap = quasi.gap
            inverse_gap = float(np.linalg.norm(
                gen.grad(quasi.mean) - weights @ np.array([gen.grad(f) for f in members])
            ))
            worst_quasi = max(worst_quasi, direct_gap, inverse_gap)
        passed = worst_mean <= MEAN_TOLERANCE and worst_quasi <= QUASI_TOLERANCE and smallest_increase > 0
        return PropertyResult(
            name=f"means[m={m}]",
            generator=gen.name,
            passed=passed,
            worst=max(worst_mean, worst_quasi),
            tolerance=QUASI_TOLERANCE,
            instances=count,
            detail={
                "arithmetic_gap": worst_mean,
                "quasi_gap": worst_quasi,
                "min_risk_increase": smallest_increase,
            },
        )

    def _symmetry(self, gen: FinDimGenerator, m: int) -> PropertyResult:
        report = symmetry_probe(gen, self.trials, self.seed, m)
        if gen.is_quadratic:
            return _result(f"symmetry[m={m}]", gen.name, report.max_asymmetry, IDENTITY_TOLERANCE, self.trials,
                           note="quadratic: symmetric")
        return PropertyResult(
            name=f"symmetry[m={m}]",
            generator=gen.name,
            passed=report.max_asymmetry > 1e-6,
            worst=report.max_asymmetry,
            tolerance=1e-6,
            instances=self.trials,
            note="non-quadratic: asymmetry witness expected",
            detail={"witness_f": report.witness_f, "witness_g": report.witness_g},
        )

    def _gsb_agreement(self, gen: FinDimGenerator, m: int) -> PropertyResult:
        spec = MetricisationSpec(np.eye(m), np.eye(m))
        worst = 0.0
        asymmetric = 0
        for rng in self._instances(f"gsb-{m}", self.trials):
            f, g = gen.sample(rng, m), gen.sample(rng, m)
            direct = gsb(gen, spec, f, g)
            worst = max(worst, abs(direct - gsb_block_form(gen, spec, f, g)) / (1.0 + abs(direct)))
            asymmetric += direct != gsb(gen, spec, g, f)
        return PropertyResult(
            name=f"gsb_agreement[m={m}]",
            generator=gen.name,
            passed=worst <= IDENTITY_TOLERANCE and asymmetric == 0,
            worst=worst,
            tolerance=IDENTITY_TOLERANCE,
            instances=self.trials,
            detail={"asymmetric_pairs": asymmetric},
        )

    def _triangle(self, gen: FinDimGenerator, m: int) -> PropertyResult:
        spec = MetricisationSpec(np.eye(m), np.eye(m))
        report = triangle_fuzz(gen, spec, self.trials, self.seed)
        return PropertyResult(
            name=f"triangle[m={m}]",
            generator=gen.name,
            passed=report.schur_ok and report.violations == 0,
            worst=report.worst_slack,
            tolerance=1e-9,
            instances=report.trials,
            detail={"violations": report.violations, "schur_ok": report.schur_ok},
        )

    def _radial_calculus(self) -> List[PropertyResult]:
        """Gradient formula and the Hessian spectrum {lambda_par} + {lambda_perp} x (m - 1) for every profile"""
        results = []
        for g in table_profiles():
            worst_grad, worst_spectrum = 0.0, 0.0
            gen = RadialFinDimGenerator(g)
            for m in SPECTRAL_DIMS:
                for r in SPECTRAL_RADII:
                    rng = substream(self.seed, f"spectral-{g.label}-{m}", int(r * 10))
                    direction = rng.normal(size=m)
                    u = r * direction / np.linalg.norm(direction)
                    worst_grad = max(worst_grad, radial_gradient_check(g, u))
                    eigen = np.sort(np.linalg.eigvalsh(numerical_hessian(gen.value, u)))
                    expected = np.sort([float(g.lambda_par(r))] + [float(g.lambda_perp(r))] * (m - 1))
                    worst_spectrum = max(worst_spectrum, float(np.max(np.abs(eigen - expected))))
            instances = len(SPECTRAL_DIMS) * len(SPECTRAL_RADII)
            results.append(_result("radial_gradient", g.label, worst_grad, 1e-6, instances))
            results.append(_result("hessian_spectrum", g.label, worst_spectrum, DERIVATIVE_TOLERANCE, instances))
        return results

    # sandwich

    def sandwich_pairs(self, g: RadialGenerator) -> List[dict]:
        """One row (value, lower, upper, ok) per random weighted sample pair in the unit KME ball"""
        rows = []
        for i in range(self.trials):
            rng = trial_stream(self.seed, i, "sandwich")
            k = GaussianKernel(bandwidth=float(rng.uniform(0.5, 2.0)))
            d = int(rng.integers(1, 4))
            a, b = embed(k, _random_sample_set(rng, d)), embed(k, _random_sample_set(rng, d))
            report = deformed_divergence(g, a, b, R=1.0)
            excess = max(report.lower - report.value, report.value - report.upper)
            rows.append({
                "profile": g.label,
                "trial": i,
                "value": report.value,
                "mmd_sq": report.mmd_sq,
                "lower": report.lower,
                "upper": report.upper,
                "excess": excess,
                "ok": bool(excess <= SANDWICH_TOLERANCE),
            })
        return rows

    def sandwich_summary(self, g: RadialGenerator, rows: List[dict]) -> PropertyResult:
        constants = g.sandwich_constants(1.0)
        violations = sum(not row["ok"] for row in rows)
        detail = {"m": constants.m, "L": constants.L, "violations": violations}
        if g.name == "square":
            detail["rows_not_equal"] = sum(
                not (row["value"] == row["mmd_sq"] == row["lower"] == row["upper"]) for row in rows
            )
        return PropertyResult(
            name="sandwich",
            generator=g.label,
            passed=violations == 0 and detail.get("rows_not_equal", 0) == 0,
            worst=max(row["excess"] for row in rows),
            tolerance=SANDWICH_TOLERANCE,
            instances=len(rows),
            note="" if constants.comparable else "lower bound vacuous (m = 0)",
            detail=detail,
        )

    def sandwich_suite(self) -> List[PropertyResult]:
        """m/2 MMD^2 <= d_Phi <= L/2 MMD^2 over random weighted sample pairs in the unit KME ball"""
        generators = self.generators or table_profiles()
        return [self.sandwich_summary(g, self.sandwich_pairs(g)) for g in generators]

    # estimation smoke

    def estimation_smoke_suite(self) -> List[PropertyResult]:
        model = LocationModel(ModelSpec())
        k = GaussianKernel(bandwidth=1.0)
        service = EstimationService(k, get_generator("square"), model, seed=self.seed,
                                    model_sample_size=200, reference_size=1000)
        results = []

        pvalue = model.ks_pvalue(substream(self.seed, "ks"))
        results.append(PropertyResult("sampler_density_ks", model.family, pvalue > 0.01, pvalue, 0.01, 10_000))

        data = generate_data(model, 200, substream(self.seed, "smoke-data"))
        fit = service.fit(data, theta0=0.0)
        error = abs(fit.theta_hat[0])
        results.append(PropertyResult("clean_fit", "square", error <= 0.3 and fit.sane, error, 0.3, 1,
                                      detail=fit.to_dict()))

        rho = rho_estimate(k, model, DependenceConfig(), n=50, replicates=20, seed=self.seed, reference_size=1000)
        results.append(PropertyResult(
            "rho_iid", "square", abs(rho.value) <= 3.0 * rho.standard_error + 1e-12, abs(rho.value),
            3.0 * rho.standard_error, 20, detail=rho.to_dict(),
        ))

        summary = service.triangle_corpus(instances=10, n=50, contamination=ContaminationConfig(epsilon=0.1))
        results.append(PropertyResult(
            "triangle_audit", "square", summary.violations == 0, -summary.worst_slack, 1e-9, summary.instances,
            detail=summary.to_dict(),
        ))
        return results


def _result(name: str, generator: str, worst: float, tolerance: float, instances: int,
            note: str = "", detail: Optional[dict] = None) -> PropertyResult:
    return PropertyResult(name, generator, bool(worst <= tolerance), float(worst), tolerance, instances,
                          note, detail or {})


def _random_family(gen: FinDimGenerator, rng: np.random.Generator, m: int) -> list:
    size = int(rng.integers(1, MAX_FAMILY + 1))
    weights = rng.dirichlet(np.ones(size))
    weights /= weights.sum()
    return [(float(w), gen.sample(rng, m)) for w in weights]


def _random_sample_set(rng: np.random.Generator, d: int) -> SampleSet:
    n = int(rng.integers(1, 21))
    points = 2.0 * rng.normal(size=(n, d))
    weights = rng.dirichlet(np.ones(n))
    return SampleSet(points, weights / weights.sum())

