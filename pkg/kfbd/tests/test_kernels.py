import math

import numpy as np
import pytest
from hypothesis import given, settings as hsettings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.integrate import quad

from kfbd.core.kernels import (
    GaussianKernel,
    InverseMultiquadricKernel,
    LaplaceKernel,
    get_kernel,
)
from kfbd.utils import parallel
from kfbd.utils.config import KernelSpec
from kfbd.utils.exceptions import ConfigurationError, InputError

KERNELS = [GaussianKernel(1.0), GaussianKernel(0.3), LaplaceKernel(1.0), InverseMultiquadricKernel(2.0)]

coordinates = st.floats(min_value=-50, max_value=50, allow_nan=False, allow_infinity=False)


def test_gaussian_values():
    k = GaussianKernel(1.0)
    assert k.eval([0.0], [0.0]) == 1.0
    assert k.eval([0.0], [1.0]) == pytest.approx(0.6065306597, abs=1e-10)


def test_laplace_value():
    assert LaplaceKernel(1.0).eval([0.0], [2.0]) == pytest.approx(0.1353352832, abs=1e-10)


def test_inverse_multiquadric_value():
    assert InverseMultiquadricKernel(1.0).eval([0.0], [1.0]) == pytest.approx(1 / math.sqrt(2), abs=1e-15)


def test_eval_dimension_mismatch():
    with pytest.raises(InputError):
        GaussianKernel(1.0).eval([0.0], [0.0, 1.0])


def test_gram_examples():
    k = GaussianKernel(1.0)
    np.testing.assert_array_equal(k.gram([0.0]), [[1.0]])
    e = math.exp(-0.5)
    np.testing.assert_allclose(k.gram([0.0, 1.0]), [[1.0, e], [e, 1.0]], atol=1e-15)
    np.testing.assert_allclose(k.cross_gram([0.0], [1.0]), [[e]], atol=1e-15)


def test_empty_input_rejected():
    with pytest.raises(InputError):
        GaussianKernel(1.0).gram(np.zeros((0, 2)))
    with pytest.raises(InputError):
        GaussianKernel(1.0).cross_gram([[0.0]], np.zeros((0, 1)))


def test_cross_gram_transpose(rng):
    k = LaplaceKernel(0.7)
    X, Y = rng.normal(size=(7, 3)), rng.normal(size=(4, 3))
    np.testing.assert_array_equal(k.cross_gram(X, Y), k.cross_gram(Y, X).T)


@pytest.mark.parametrize("k", KERNELS, ids=lambda k: f"{k.family}:{k.length}")
def test_gram_psd_on_random_sets(k, rng):
    for _ in range(200):
        n, d = int(rng.integers(1, 51)), int(rng.integers(1, 6))
        G = k.gram(rng.normal(scale=2.0, size=(n, d)))
        G = 0.5 * (G + G.T)
        assert np.min(np.linalg.eigvalsh(G)) >= -1e-8 * n


@pytest.mark.parametrize("k", KERNELS, ids=lambda k: f"{k.family}:{k.length}")
@hsettings(max_examples=100, deadline=None)
@given(x=arrays(np.float64, (3,), elements=coordinates), y=arrays(np.float64, (3,), elements=coordinates))
def test_symmetric_and_bounded(k, x, y):
    assert k.eval(x, y) == k.eval(y, x)
    assert 0.0 <= k.eval(x, y) <= 1.0 + 1e-12


def test_gram_is_bitwise_symmetric(rng):
    G = GaussianKernel(1.3).gram(rng.normal(size=(40, 4)))
    np.testing.assert_array_equal(G, G.T)


def test_tiling_and_threads_do_not_change_results(rng):
    k = GaussianKernel(1.0)
    X, Y = rng.normal(size=(700, 2)), rng.normal(size=(300, 2))
    wx, wy = np.full(700, 1 / 700), np.full(300, 1 / 300)
    reference_gram = k.gram(X)
    reference_sum = k.weighted_sum(X, wx, Y, wy)
    parallel.set_thread_count(4)
    np.testing.assert_array_equal(k.gram(X), reference_gram)
    assert k.weighted_sum(X, wx, Y, wy) == reference_sum


def test_gaussian_noise_density_integrates_to_one():
    k = GaussianKernel(0.8)
    total, _ = quad(lambda t: float(k.noise_density([[t]])[0]), -20, 20)
    assert total == pytest.approx(1.0, abs=1e-6)


def test_laplace_noise_density_integrates_to_one():
    k = LaplaceKernel(0.5)
    total, _ = quad(lambda t: float(k.noise_density([[t]])[0]), -30, 30, points=[0.0])
    assert total == pytest.approx(1.0, abs=1e-6)


def test_inverse_multiquadric_has_no_noise_density():
    with pytest.raises(InputError):
        InverseMultiquadricKernel(1.0).noise_density([[0.0]])


def test_invalid_parameters():
    with pytest.raises(InputError):
        GaussianKernel(0.0)
    with pytest.raises(InputError):
        LaplaceKernel(-1.0)


def test_factory():
    assert get_kernel() == GaussianKernel(1.0)
    assert get_kernel("laplace:0.5") == LaplaceKernel(0.5)
    assert get_kernel({"family": "inverse_multiquadric", "c": 2.0}) == InverseMultiquadricKernel(2.0)
    assert get_kernel(KernelSpec(family="gaussian", bandwidth=2.0)).length == 2.0
    with pytest.raises(ConfigurationError):
        get_kernel("cosine:1.0")
    with pytest.raises(ConfigurationError):
        get_kernel({"family": "gaussian", "scale": 1.0})
