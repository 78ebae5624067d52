import math

import numpy as np
import pytest
from scipy.special import kl_div

from kfbd.core.divergence import (
    OperatorG,
    QuadratureGrid,
    deformed_divergence,
    divergence_from_gram,
    generator_value,
    operator_g_divergence,
    sandwich_check,
    sqrt_divergence,
)
from kfbd.core.embedding import SampleSet, embed, eval_on, mmd_sq_biased, norm_sq
from kfbd.core.kernels import GaussianKernel, LaplaceKernel
from kfbd.generators.base import get_generator
from kfbd.generators.table import table_profiles
from kfbd.utils.exceptions import DomainError, InputError


def random_pair(rng, k, d=1):
    P = SampleSet.uniform(rng.normal(size=(int(rng.integers(1, 20)), d)))
    Q = SampleSet.uniform(rng.normal(loc=rng.uniform(-2, 2), size=(int(rng.integers(1, 20)), d)))
    return embed(k, P), embed(k, Q)


def test_square_profile_equals_mmd_exactly(gaussian, rng):
    g = get_generator("square")
    for _ in range(50):
        a, b = random_pair(rng, gaussian, d=2)
        report = deformed_divergence(g, a, b)
        assert report.value == report.mmd_sq
        assert report.value == mmd_sq_biased(a, b)


def test_divergence_of_two_diracs(gaussian):
    a = embed(gaussian, SampleSet.uniform([0.0]))
    b = embed(gaussian, SampleSet.uniform([1.0]))
    report = deformed_divergence(get_generator("exp_centered"), a, b)
    # both norms are 1 and the cross term is exp(-1/2)
    expected = -(math.e - 1.0) * (math.exp(-0.5) - 1.0)
    assert report.value == pytest.approx(expected, abs=1e-12)
    assert report.norm_f == pytest.approx(1.0, abs=1e-15)
    assert report.within_bounds


def test_divergence_of_a_measure_with_itself_is_zero(gaussian, rng):
    for g in table_profiles():
        a, _ = random_pair(rng, gaussian)
        assert deformed_divergence(g, a, a).value == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("kernel", [GaussianKernel(1.0), LaplaceKernel(0.5)], ids=["gaussian", "laplace"])
def test_sandwich_on_random_pairs(kernel, rng):
    for g in table_profiles():
        for _ in range(100):
            a, b = random_pair(rng, kernel)
            check = sandwich_check(g, a, b, R=1.0)
            assert check.ok, (g.label, check)
            assert check.value >= 0.0


def test_power_profile_lower_bound_is_vacuous(gaussian, rng):
    a, b = random_pair(rng, gaussian)
    check = sandwich_check(get_generator("power:3"), a, b)
    assert check.lower == 0.0
    assert check.m == 0.0


def test_default_radius_covers_both_norms():
    report = divergence_from_gram(get_generator("exp_centered"), 0.25, 0.16, 0.1)
    assert report.R == 1.0
    assert report.tight_R == pytest.approx(0.5)
    assert divergence_from_gram(get_generator("exp_centered"), 4.0, 0.16, 0.1).R == pytest.approx(2.0)


def test_sqrt_divergence(gaussian):
    a = embed(gaussian, SampleSet.uniform([0.0]))
    b = embed(gaussian, SampleSet.uniform([1.0]))
    assert sqrt_divergence(get_generator("square"), a, b) == pytest.approx(math.sqrt(0.7869386806), abs=1e-10)


def test_identity_operator_is_mmd(gaussian, rng):
    a, b = random_pair(rng, gaussian)
    value = operator_g_divergence(OperatorG.identity(), gaussian, a.sample, b.sample)
    assert value == mmd_sq_biased(a, b)
    assert generator_value(OperatorG.identity(), a) == norm_sq(a)


def test_profile_operator_matches_closed_form(gaussian, rng):
    for g in table_profiles():
        G = OperatorG.from_profile(g)
        for _ in range(10):
            a, b = random_pair(rng, gaussian)
            expected = deformed_divergence(g, a, b).value
            assert operator_g_divergence(G, gaussian, a.sample, b.sample) == pytest.approx(expected, abs=1e-10)


def test_kernel_entropy_is_nonnegative(gaussian, rng):
    G = OperatorG.kernel_entropy()
    for _ in range(10):
        P = SampleSet.uniform(rng.normal(size=(8, 1)))
        Q = SampleSet.uniform(rng.normal(loc=0.5, size=(8, 1)))
        assert operator_g_divergence(G, gaussian, P, Q) >= -1e-10
        assert operator_g_divergence(G, gaussian, P, P) == pytest.approx(0.0, abs=1e-12)


def test_kernel_entropy_matches_dense_grid_sum(gaussian, rng):
    G = OperatorG.kernel_entropy()
    for _ in range(5):
        P = SampleSet.uniform(rng.uniform(-1.0, 1.0, size=(6, 1)))
        Q = SampleSet.uniform(rng.uniform(-0.5, 1.5, size=(9, 1)))
        grid = QuadratureGrid.covering(gaussian, P, Q, size=10_000)
        up = eval_on(embed(gaussian, P), grid.points[:, None])
        uq = eval_on(embed(gaussian, Q), grid.points[:, None])
        # Bregman divergence of sum_x w(x) u(x) log u(x): generalised KL
        expected = float(np.sum(grid.weights * kl_div(up, uq)))
        assert operator_g_divergence(G, gaussian, P, Q) == pytest.approx(expected, abs=1e-4)


def test_kernel_entropy_detects_vanishing_embedding(gaussian):
    P = SampleSet.uniform([0.0, 100.0])
    Q = SampleSet.uniform([0.0, 1.0])
    with pytest.raises(DomainError, match="kernel_entropy"):
        operator_g_divergence(OperatorG.kernel_entropy(), gaussian, P, Q)


def test_pointwise_operator_needs_one_dimension(gaussian, rng):
    P = SampleSet.uniform(rng.normal(size=(4, 2)))
    with pytest.raises(InputError):
        operator_g_divergence(OperatorG.kernel_entropy(), gaussian, P, P)


def test_quadrature_must_cover_support(gaussian):
    G = OperatorG.kernel_entropy(QuadratureGrid(-1.0, 1.0, 101))
    P = SampleSet.uniform([0.0, 0.5])
    with pytest.raises(InputError, match="does not cover"):
        operator_g_divergence(G, gaussian, P, P)


def test_quadrature_weights_integrate_constants():
    grid = QuadratureGrid(-2.0, 3.0, 11)
    assert float(np.sum(grid.weights)) == pytest.approx(5.0, abs=1e-14)
    with pytest.raises(InputError):
        QuadratureGrid(1.0, 0.0)


def test_operator_requires_sigma():
    with pytest.raises(InputError):
        OperatorG("deformed")


def test_divergence_is_linear_in_the_generator(gaussian, rng):
    square = get_generator("square")
    quartic = get_generator({"profile": "quartic", "lambda": 0.5})
    fourth = get_generator("power:4")
    for _ in range(20):
        a, b = random_pair(rng, gaussian)
        combined = deformed_divergence(square, a, b).value + 0.5 * deformed_divergence(fourth, a, b).value
        assert deformed_divergence(quartic, a, b).value == pytest.approx(combined, rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("profile", ["exp_centered", "logcosh", "sqrtplus"])
def test_divergence_is_strictly_convex_in_first_argument(gaussian, rng, profile):
    g = get_generator(profile)
    for _ in range(20):
        P1 = SampleSet.uniform(rng.normal(size=(5, 1)))
        P2 = SampleSet.uniform(rng.normal(loc=2.0, size=(7, 1)))
        Q = SampleSet.uniform(rng.normal(loc=-1.0, size=(6, 1)))
        b = embed(gaussian, Q)
        d1 = deformed_divergence(g, embed(gaussian, P1), b).value
        d2 = deformed_divergence(g, embed(gaussian, P2), b).value
        for t in (0.25, 0.5, 0.75):
            mixed = deformed_divergence(g, embed(gaussian, P1.mixture(P2, t)), b).value
            assert t * d1 + (1.0 - t) * d2 - mixed > 1e-12


def test_exp_centered_is_asymmetric(gaussian):
    g = get_generator("exp_centered")
    a = embed(gaussian, SampleSet.uniform([0.0]))
    b = embed(gaussian, SampleSet.uniform([[0.0], [3.0]]))
    forward = deformed_divergence(g, a, b).value
    backward = deformed_divergence(g, b, a).value
    assert forward > 0 and backward > 0
    assert abs(forward - backward) > 1e-6
