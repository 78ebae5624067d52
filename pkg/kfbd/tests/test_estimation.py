import math

import numpy as np
import pytest
from scipy import stats

from kfbd.core.embedding import SampleSet
from kfbd.core.kernels import GaussianKernel
from kfbd.generators.base import get_generator
from kfbd.services.estimation_service import (
    EstimationService,
    LocationModel,
    ModelEmbedding,
    RhoEstimate,
    generate_data,
    min_divergence_fit,
    reference_sample,
    rho_estimate,
)
from kfbd.utils.config import AuditConfig, ContaminationConfig, DependenceConfig, ModelSpec
from kfbd.utils.exceptions import InputError


@pytest.fixture
def model():
    return LocationModel(ModelSpec())


@pytest.fixture
def service(gaussian, model):
    return EstimationService(gaussian, get_generator("exp_centered"), model, seed=7,
                             model_sample_size=200, reference_size=1000)


def test_theta_broadcast():
    model = LocationModel(ModelSpec(dim=3))
    np.testing.assert_array_equal(model.theta(0.5), [0.5, 0.5, 0.5])
    with pytest.raises(InputError):
        model.theta([0.0, 1.0])


@pytest.mark.parametrize("family", ["gaussian_location", "laplace_location"])
def test_sampler_matches_density(family, rng):
    model = LocationModel(ModelSpec(family=family, scale=0.7))
    assert model.ks_pvalue(rng) > 0.01


def test_logpdf_matches_scipy():
    model = LocationModel(ModelSpec(family="laplace_location", scale=2.0, dim=2))
    x = np.array([[0.5, -1.0]])
    expected = stats.laplace(scale=2.0).logpdf(x - 1.0).sum()
    assert model.logpdf(x, 1.0)[0] == pytest.approx(expected)


def test_ks_check_is_one_dimensional(rng):
    with pytest.raises(InputError):
        LocationModel(ModelSpec(dim=2)).ks_pvalue(rng)


def test_ar1_noise_keeps_the_marginal(rng):
    model = LocationModel(ModelSpec(scale=2.0))
    path = model.ar1_noise(rng, 20_000, 0.5).ravel()
    assert np.std(path) == pytest.approx(2.0, rel=0.05)
    assert np.corrcoef(path[1:], path[:-1])[0, 1] == pytest.approx(0.5, abs=0.05)


def test_model_embedding_is_antithetic(model, gaussian):
    embedding = ModelEmbedding(model, gaussian, 200, seed=1)
    assert float(np.mean(embedding.noise)) == pytest.approx(0.0, abs=1e-12)
    assert embedding.sample(2.0).size == 200


def test_model_embedding_size_floor(model, gaussian):
    with pytest.raises(InputError):
        ModelEmbedding(model, gaussian, 50, seed=0)


def test_contaminated_data_hits_the_offset(model, rng):
    data = generate_data(model, 500, rng, ContaminationConfig(epsilon=0.2, offset=10.0))
    outliers = np.sum(data.points[:, 0] == 10.0)
    assert 50 < outliers < 150


def test_reference_carries_exact_contamination_weight(model, rng):
    reference = reference_sample(model, 1000, rng, ContaminationConfig(epsilon=0.1, offset=5.0))
    assert reference.size == 1001
    assert reference.weights[-1] == pytest.approx(0.1, abs=1e-12)
    np.testing.assert_array_equal(reference.points[-1], [5.0])


def test_generate_data_rejects_empty(model, rng):
    with pytest.raises(InputError):
        generate_data(model, 0, rng)


def test_clean_fit_recovers_location(model, gaussian):
    data = generate_data(model, 200, np.random.default_rng(3), ContaminationConfig(theta0=1.5))
    fit = min_divergence_fit(model, data, get_generator("square"), gaussian, model_sample_size=200, seed=0, theta0=1.5)
    assert abs(fit.theta_hat[0] - 1.5) <= 0.3
    assert fit.converged
    assert fit.sane
    assert fit.to_dict()["sane"] is True


def test_fit_dimension_mismatch(model, gaussian):
    with pytest.raises(InputError):
        min_divergence_fit(model, SampleSet.uniform([[0.0, 1.0]]), get_generator("square"), gaussian)


def test_rho_bound_is_twice_the_positive_part():
    assert RhoEstimate(0.3, 0.01, [0.3], [0.01], 1).bound == pytest.approx(0.6)
    assert RhoEstimate(-0.2, 0.01, [-0.2], [0.01], 1).bound == 0.0


def test_rho_is_zero_for_iid(model, gaussian):
    rho = rho_estimate(gaussian, model, DependenceConfig(), n=50, replicates=20, seed=0, reference_size=1000)
    assert abs(rho.value) <= 3.0 * rho.standard_error + 1e-12
    assert rho.truncation_lag >= 1


def test_rho_is_positive_for_ar1(model, gaussian):
    rho = rho_estimate(gaussian, model, DependenceConfig(kind="ar1", coefficient=0.8),
                       n=100, replicates=30, seed=0, reference_size=1000)
    assert rho.value > 0.1
    assert rho.lags[0] > 0


def test_rho_input_validation(model, gaussian):
    with pytest.raises(InputError):
        rho_estimate(gaussian, model, DependenceConfig(), n=2)


def test_power_profile_is_not_comparable(gaussian, model):
    service = EstimationService(gaussian, get_generator("power:3"), model, model_sample_size=100, reference_size=100)
    with pytest.raises(InputError, match="vacuous"):
        service.require_comparable()


def test_theta_grid_runs_along_the_diagonal(gaussian):
    service = EstimationService(gaussian, get_generator("square"), LocationModel(ModelSpec(dim=2)),
                                model_sample_size=100, reference_size=100)
    grid = service.theta_grid(1.0, 7)
    assert grid.shape == (7, 2)
    np.testing.assert_allclose(grid[:, 0], grid[:, 1])
    assert grid[0, 0] == pytest.approx(-2.0)
    assert grid[-1, 0] == pytest.approx(4.0)


def test_triangle_corpus_has_no_violations(service):
    summary = service.triangle_corpus(instances=5, n=50, contamination=ContaminationConfig(epsilon=0.1))
    assert summary.instances == 5
    assert summary.violations == 0
    assert all(record.slack >= -1e-9 for record in summary.records)


def test_sweep_needs_three_epsilons(service):
    with pytest.raises(InputError):
        service.contamination_sweep([0.0, 0.1])


@pytest.mark.slow
def test_sweep_grows_with_contamination(service):
    sweep = service.contamination_sweep([0.0, 0.05, 0.1, 0.2], grid_points=31)
    assert sweep.inf_terms_mmd_variant[0] < sweep.inf_terms_mmd_variant[-1]
    assert sweep.slope > 0
    assert sweep.r_squared > 0.9


@pytest.mark.slow
def test_fit_beats_the_mean_under_contamination(service):
    report = service.robustness_study(ContaminationConfig(epsilon=0.1, offset=10.0), n=200, replicates=5)
    assert report.fit_wins
    assert report.median_error_mean > 0.5


@pytest.mark.slow
def test_bound_audit_passes_for_clean_data(service):
    config = AuditConfig(n_grid=[50, 200], replicates=4, model_sample_size=200,
                         reference_sample_size=1000, rho_replicates=10, grid_points=31)
    rows = service.bound_audit(config)
    assert [row.n for row in rows] == [50, 200]
    assert all(row.passed for row in rows)
    assert all(row.rhs_mmd_variant >= row.rhs - row.inf_term for row in rows)
    assert "pass" in rows[0].to_dict()


@pytest.mark.slow
def test_envelope_holds_for_iid_data(service):
    rho = RhoEstimate(0.0, 0.0, [0.0], [0.0], 1)
    rows = service.sqrt_n_envelope([50, 200], replicates=5, rho=rho)
    assert all(row.ok for row in rows)
    assert rows[0].mean_sqrt_mmd_sq > rows[1].mean_sqrt_mmd_sq
    assert math.isclose(rows[1].envelope, math.sqrt(1 / 200))


def test_inf_terms_tolerate_rounding_below_zero(service, monkeypatch):
    reference = service.reference()
    monkeypatch.setattr(ModelEmbedding, "mmd_sq", lambda self, theta, other, other_norm_sq: -1e-9)
    assert service.inf_terms(reference, 1.0, 0.0, 5) == (0.0, 0.0)


def test_triangle_audit_tolerates_rounding_below_zero(service, monkeypatch):
    reference = service.reference()
    data = generate_data(service.model, 50, np.random.default_rng(2))
    monkeypatch.setattr(ModelEmbedding, "mmd_sq", lambda self, theta, other, other_norm_sq: -1e-9)
    record = service.triangle_audit(0.0, data, reference)
    assert record.mmd_model_reference == 0.0
    assert math.isfinite(record.slack)


@pytest.mark.slow
def test_rho_grows_with_ar1_coefficient(model, gaussian):
    values = [
        rho_estimate(gaussian, model, DependenceConfig(kind="ar1", coefficient=c),
                     n=100, replicates=50, seed=0, reference_size=1000).value
        for c in (0.2, 0.5, 0.8)
    ]
    assert values[0] < values[1] < values[2]


@pytest.mark.slow
def test_ar1_lag_weights_decrease(model, gaussian):
    rho = rho_estimate(gaussian, model, DependenceConfig(kind="ar1", coefficient=0.8),
                       n=100, replicates=50, seed=0, reference_size=1000)
    leading = rho.lags[:min(3, rho.truncation_lag)]
    assert len(leading) >= 2
    assert all(earlier > later for earlier, later in zip(leading, leading[1:]))


@pytest.mark.slow
def test_bound_audit_passes_under_ar1_dependence(service):
    config = AuditConfig(dependence=DependenceConfig(kind="ar1", coefficient=0.5), n_grid=[100, 400],
                         replicates=5, model_sample_size=200, reference_sample_size=1000,
                         rho_replicates=30, grid_points=31)
    rows = service.bound_audit(config)
    assert all(row.passed for row in rows)
    assert all(row.rho_hat > 0 for row in rows)


@pytest.mark.slow
def test_fit_error_shrinks_at_root_n(model, gaussian):
    g = get_generator("exp_centered")
    embedding = ModelEmbedding(model, gaussian, 500, seed=0)

    def median_error(n):
        errors = []
        for r in range(100):
            data = generate_data(model, n, np.random.default_rng(1000 * n + r))
            fit = min_divergence_fit(model, data, g, gaussian, seed=r, embedding=embedding)
            errors.append(abs(fit.theta_hat[0]))
        return float(np.median(errors))

    ratio = median_error(100) / median_error(400)
    assert 1.4 <= ratio <= 2.8


@pytest.mark.slow
def test_fit_beats_the_mean_at_full_size(gaussian, model):
    service = EstimationService(gaussian, get_generator("exp_centered"), model, seed=7,
                                model_sample_size=500, reference_size=1000)
    report = service.robustness_study(ContaminationConfig(epsilon=0.1, offset=10.0), n=500, replicates=50)
    assert report.fit_wins
    assert report.median_error_fit < 0.25
