import math

import numpy as np
import pytest
from hypothesis import given, settings as hsettings
from hypothesis import strategies as st
from scipy.special import softmax

from kfbd.core.findim import (
    LogSumExpGenerator,
    MetricisationSpec,
    NegEntropyGenerator,
    QuadraticGenerator,
    as_family,
    bias_variance_check,
    block_min_eigenvalue,
    bregman,
    conjugate,
    dual_divergence_check,
    fenchel_young_gap,
    get_findim_generator,
    gsb,
    gsb_block_form,
    mean_minimiser,
    quasi_arithmetic_mean,
    radial_gradient_check,
    risk_perturbation_probe,
    schur_check,
    symmetry_probe,
    three_point,
    triangle_fuzz,
)
from kfbd.core.findiff import numerical_hessian
from kfbd.generators.table import table_profiles
from kfbd.utils.exceptions import DomainError, InputError, NumericError

KINDS = ["quadratic", "radial", "neg_entropy", "log_sum_exp"]


def make(kind, m, rng):
    return get_findim_generator(kind, m=m, rng=rng)


def family_of(gen, rng, m, size=4):
    weights = rng.uniform(0.1, 1.0, size=size)
    weights /= weights.sum()
    return [(w, gen.sample(rng, m)) for w in weights]


def test_kl_example():
    gen = NegEntropyGenerator()
    expected = 0.5 * math.log(5 / 9) + 0.5 * math.log(5)
    assert bregman(gen, [0.5, 0.5], [0.9, 0.1]) == pytest.approx(expected, abs=1e-12)


def test_kl_outside_domain():
    with pytest.raises(DomainError):
        bregman(NegEntropyGenerator(), [-0.1, 1.1], [0.5, 0.5])


def test_dimension_mismatch():
    with pytest.raises(InputError):
        bregman(LogSumExpGenerator(), [0.0, 1.0], [0.0, 1.0, 2.0])


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("m", [2, 5])
def test_three_point_identity(kind, m, rng):
    gen = make(kind, m, rng)
    for _ in range(100):
        f, g, h = (gen.sample(rng, m) for _ in range(3))
        assert abs(three_point(gen, f, g, h)) <= 1e-9


@pytest.mark.parametrize("kind", KINDS)
def test_bias_variance_decomposition(kind, rng):
    m = 3
    gen = make(kind, m, rng)
    for _ in range(50):
        assert abs(bias_variance_check(gen, family_of(gen, rng, m), gen.sample(rng, m))) <= 1e-9


@pytest.mark.parametrize("kind", ["quadratic", "radial", "neg_entropy"])
def test_fenchel_young(kind, rng):
    m = 3
    gen = make(kind, m, rng)
    for _ in range(20):
        f = gen.sample(rng, m)
        z = gen.grad(gen.sample(rng, m))
        assert fenchel_young_gap(gen, f, z) >= -1e-10
        assert abs(fenchel_young_gap(gen, f, gen.grad(f))) <= 1e-7


def test_conjugate_recovers_the_point(rng):
    gen = NegEntropyGenerator()
    f = gen.sample(rng, 4)
    result = conjugate(gen, gen.grad(f))
    np.testing.assert_allclose(result.argmax, f, rtol=1e-8)
    assert result.residual <= 1e-10


def test_log_sum_exp_conjugate_matches_softmax(rng):
    gen = LogSumExpGenerator()
    p = softmax(rng.normal(size=4))
    result = conjugate(gen, p)
    np.testing.assert_allclose(softmax(result.argmax), p, atol=1e-10)
    # the conjugate is the negative entropy on the simplex
    assert result.value == pytest.approx(float(np.sum(p * np.log(p))), abs=1e-9)


def test_log_sum_exp_rejects_off_simplex_dual_points():
    with pytest.raises(DomainError):
        conjugate(LogSumExpGenerator(), [0.5, 0.6])


def test_conjugate_reports_non_convergence():
    gen = NegEntropyGenerator()
    with pytest.raises(NumericError) as excinfo:
        conjugate(gen, [5.0, -5.0], max_iter=1)
    assert excinfo.value.residual > 0


def test_quadratic_closed_form_matches_newton(rng):
    gen = QuadraticGenerator.random(rng, 4)
    z = rng.normal(size=4)
    closed_value, closed_argmax = gen.conjugate_closed_form(z)
    result = conjugate(gen, z)
    assert result.value == pytest.approx(closed_value, abs=1e-9)
    np.testing.assert_allclose(result.argmax, closed_argmax, atol=1e-9)


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("solver", ["auto", "newton"])
def test_dual_divergence(kind, solver, rng):
    m = 3
    gen = make(kind, m, rng)
    for _ in range(10):
        f, g = gen.sample(rng, m), gen.sample(rng, m)
        scale = 1.0 + abs(bregman(gen, g, f))
        assert abs(dual_divergence_check(gen, f, g, solver=solver)) <= 1e-7 * scale


def test_dual_divergence_rejects_unknown_solver(rng):
    gen = NegEntropyGenerator()
    f = gen.sample(rng, 2)
    with pytest.raises(InputError):
        dual_divergence_check(gen, f, f, solver="bfgs")


@pytest.mark.parametrize("kind", ["quadratic", "radial", "neg_entropy"])
def test_mean_minimiser_is_arithmetic_mean(kind, rng):
    m = 3
    gen = make(kind, m, rng)
    family = family_of(gen, rng, m)
    weights, members = as_family(gen, family)
    argmin = mean_minimiser(gen, family)
    np.testing.assert_allclose(argmin, weights @ members, atol=1e-6)
    assert risk_perturbation_probe(gen, family, argmin, rng) > 0


def test_mean_minimiser_log_sum_exp_up_to_gauge(rng):
    gen = LogSumExpGenerator()
    family = family_of(gen, rng, 3)
    weights, members = as_family(gen, family)
    offset = mean_minimiser(gen, family) - weights @ members
    np.testing.assert_allclose(offset - offset.mean(), 0.0, atol=1e-6)


def test_quasi_arithmetic_mean_is_geometric_for_entropy(rng):
    gen = NegEntropyGenerator()
    family = family_of(gen, rng, 3)
    weights, members = as_family(gen, family)
    result = quasi_arithmetic_mean(gen, family)
    np.testing.assert_allclose(result.mean, np.exp(weights @ np.log(members)), rtol=1e-8)
    assert result.gap <= 1e-6


def test_family_validation():
    gen = NegEntropyGenerator()
    with pytest.raises(InputError):
        as_family(gen, [])
    with pytest.raises(InputError):
        as_family(gen, [(0.7, [0.5, 0.5]), (0.7, [0.2, 0.8])])
    with pytest.raises(InputError):
        as_family(gen, [(1.5, [0.5, 0.5]), (-0.5, [0.2, 0.8])])


def test_symmetry_separates_quadratic_from_entropy(rng):
    quadratic = symmetry_probe(QuadraticGenerator.random(rng, 2), trials=200, seed=3)
    assert quadratic.is_quadratic
    assert quadratic.max_asymmetry <= 1e-12
    entropy = symmetry_probe(NegEntropyGenerator(), trials=200, seed=3)
    assert not entropy.is_quadratic
    assert entropy.max_asymmetry > 1e-3
    assert entropy.witness_f is not None


def test_schur_condition():
    assert schur_check(MetricisationSpec(np.eye(3), np.eye(3)))
    failing = MetricisationSpec(0.5 * np.eye(3), np.eye(3))
    assert not failing.schur_ok
    assert block_min_eigenvalue(failing) < 0


def test_schur_singular_operator():
    with pytest.raises(NumericError):
        schur_check(MetricisationSpec(np.zeros((2, 2)), np.eye(2)))


def test_metricisation_spec_validation():
    with pytest.raises(InputError):
        MetricisationSpec(np.eye(2), np.eye(3))
    with pytest.raises(InputError):
        MetricisationSpec([[1.0, 2.0], [0.0, 1.0]], np.eye(2))


@pytest.mark.parametrize("kind", KINDS)
def test_gsb_block_form_agrees(kind, rng):
    m = 3
    gen = make(kind, m, rng)
    spec = MetricisationSpec(2.0 * np.eye(m), np.eye(m))
    for _ in range(20):
        f, g = gen.sample(rng, m), gen.sample(rng, m)
        direct, block = gsb(gen, spec, f, g), gsb_block_form(gen, spec, f, g)
        assert abs(direct - block) <= 1e-10 * max(1.0, abs(direct))


@pytest.mark.parametrize("kind", ["quadratic", "neg_entropy"])
def test_triangle_inequality_under_schur(kind, rng):
    m = 3
    gen = make(kind, m, rng)
    report = triangle_fuzz(gen, MetricisationSpec(np.eye(m), np.eye(m)), trials=500, seed=11)
    assert report.schur_ok
    assert report.violations == 0


def test_radial_gradient_matches_finite_differences():
    for g in table_profiles():
        for r in (0.1, 0.5, 0.9):
            u = np.full(4, r / 2.0)
            assert radial_gradient_check(g, u) <= 1e-6


def test_radial_gradient_check_needs_nonzero_point():
    with pytest.raises(InputError):
        radial_gradient_check(table_profiles()[0], np.zeros(3))


def test_unknown_kind():
    with pytest.raises(InputError):
        get_findim_generator("hinge")


@hsettings(max_examples=100, deadline=None)
@given(
    f=st.lists(st.floats(min_value=1e-3, max_value=10.0), min_size=2, max_size=6),
    seed=st.integers(min_value=0, max_value=2**16),
)
def test_generalised_kl_nonnegative(f, seed):
    g = np.random.default_rng(seed).uniform(1e-3, 10.0, size=len(f))
    assert bregman(NegEntropyGenerator(), f, g) >= -1e-12


@pytest.mark.parametrize("kind", ["quadratic", "radial", "log_sum_exp"])
def test_hessian_of_divergence_in_first_argument(kind, rng):
    m = 3
    gen = make(kind, m, rng)
    for _ in range(5):
        f, g = gen.sample(rng, m), gen.sample(rng, m)
        approx = numerical_hessian(lambda u: bregman(gen, u, g), f)
        assert np.allclose(approx, gen.hess(f), rtol=1e-4, atol=1e-5)


def test_gsb_with_identity_blocks_is_twice_squared_distance(rng):
    gen = QuadraticGenerator(np.eye(4))
    spec = MetricisationSpec(np.eye(4), np.eye(4))
    f, g = rng.normal(size=4), rng.normal(size=4)
    assert gsb(gen, spec, f, g) == pytest.approx(2.0 * float(np.sum((f - g) ** 2)), rel=1e-12)


def test_schur_condition_with_dominant_diagonal():
    spec = MetricisationSpec(2.0 * np.eye(3), np.eye(3))
    assert schur_check(spec)
    assert block_min_eigenvalue(spec) >= 0
