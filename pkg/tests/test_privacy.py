import math

import numpy as np
import pytest

from conftest import random_params
from privnet.core.errors import (
    DimensionMismatchError,
    InvalidParameterError,
    NotRescalableError,
    UndefinedPreferenceError,
)
from privnet.core.model import DcMsbmParams, MultiLayerNetwork, generate_synthetic, probability_tensor, sample_network
from privnet.core.privacy import (
    BudgetMatrix,
    DebiasedTensor,
    FlipMatrix,
    PrivacyProfile,
    constant_profile,
    debias,
    expected_debiased,
    flip_matrix,
    flip_network,
    likelihood_ratio,
    polarized_profile,
    preference_from_budgets,
    privacy_budget,
    profile_from_epsilon,
    randomized_response,
    recover_profile,
    rescale_debias,
    uniform_profile,
    uniform_theta,
)
from privnet.core.rng import substream
from privnet.core.tensor_ops import Tensor3


def test_profile_validation():
    with pytest.raises(InvalidParameterError):
        PrivacyProfile([0.5, 1.2])
    with pytest.raises(DimensionMismatchError):
        PrivacyProfile(np.ones((2, 2)))


def test_flip_matrix_entries():
    theta = flip_matrix(PrivacyProfile([0.0, 1.0, 0.5])).theta
    np.testing.assert_allclose(theta, [[0.5, 0.5, 0.5], [0.5, 1.0, 0.75], [0.5, 0.75, 0.625]])
    with pytest.raises(InvalidParameterError):
        FlipMatrix(np.array([[0.6, 0.7], [0.8, 0.6]]))
    with pytest.raises(InvalidParameterError):
        FlipMatrix(np.array([[0.4, 0.5], [0.5, 0.4]]))


def test_likelihood_ratio_analytic():
    assert likelihood_ratio(0.75) == 3.0
    assert likelihood_ratio(0.5) == 1.0
    assert math.isinf(likelihood_ratio(1.0))
    np.testing.assert_allclose(likelihood_ratio(np.array([0.75, 0.8])), [3.0, 4.0])


def test_likelihood_ratio_monte_carlo():
    rng = substream(2024)
    ones = randomized_response(np.ones(1_000_000, dtype=np.uint8), 0.75, rng)
    zeros = randomized_response(np.zeros(1_000_000, dtype=np.uint8), 0.75, rng)
    ratio = ones.mean() / zeros.mean()
    assert 2.85 <= ratio <= 3.15


def test_budget_matches_likelihood_ratio():
    profile = PrivacyProfile([0.5, 1.0, 0.0, 1.0])
    eps = privacy_budget(profile).eps
    theta = flip_matrix(profile).theta
    assert eps[0, 1] == pytest.approx(math.log(3.0))
    assert math.exp(eps[0, 1]) == pytest.approx(likelihood_ratio(theta[0, 1]))
    assert math.isinf(eps[1, 3])
    assert eps[2, 1] == 0.0
    np.testing.assert_array_equal(eps, eps.T)
    assert math.isinf(privacy_budget(profile).max_budget())
    assert BudgetMatrix(np.array([[0.1, 0.4], [0.4, 0.2]])).max_budget() == 0.4


def test_uniform_theta():
    assert uniform_theta(math.log(3.0)) == pytest.approx(0.75)
    assert uniform_theta(0.0) == 0.5
    with pytest.raises(InvalidParameterError):
        uniform_theta(-0.1)


def test_profile_from_epsilon_gives_constant_budget():
    for eps in (0.1, 0.5, 2.0):
        profile = profile_from_epsilon(7, eps)
        np.testing.assert_allclose(privacy_budget(profile).eps, eps, rtol=1e-12)
        theta = flip_matrix(profile).theta[0, 1]
        assert theta == pytest.approx(uniform_theta(eps), rel=1e-12)


def test_preference_from_budgets_single_node():
    f = np.array([0.5, 0.8, 0.6])
    eps = privacy_budget(PrivacyProfile(f)).eps
    assert preference_from_budgets(eps[0, 1], eps[0, 2], eps[1, 2]) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(UndefinedPreferenceError):
        preference_from_budgets(0.3, 0.2, 0.0)
    with pytest.raises(InvalidParameterError):
        preference_from_budgets(-1.0, 0.2, 0.3)


def test_budget_round_trip_on_random_profiles():
    rng = np.random.default_rng(99)
    for _ in range(1000):
        f = rng.uniform(0.1, 0.99, size=6)
        recovered = recover_profile(privacy_budget(PrivacyProfile(f)))
        np.testing.assert_allclose(recovered.f, f, rtol=0, atol=1e-10)


def test_recover_profile_handles_public_nodes():
    f = np.array([1.0, 1.0, 0.3, 0.7])
    recovered = recover_profile(privacy_budget(PrivacyProfile(f)))
    np.testing.assert_allclose(recovered.f, f, atol=1e-10)
    with pytest.raises(UndefinedPreferenceError):
        recover_profile(privacy_budget(PrivacyProfile([0.5, 0.5])))


def test_flip_network_keeps_everything_without_privacy():
    net, _ = generate_synthetic(30, 2, 3, seed=4)
    flipped = flip_network(net, flip_matrix(constant_profile(30, 1.0)), seed=1)
    np.testing.assert_array_equal(flipped.values, net.values)


def test_flip_network_is_symmetric_and_reproducible():
    net, _ = generate_synthetic(30, 2, 3, seed=4)
    theta = flip_matrix(constant_profile(30, 0.3))
    a = flip_network(net, theta, seed=8)
    b = flip_network(net, theta, seed=8)
    assert a.adjacency.is_semi_symmetric()
    np.testing.assert_array_equal(a.values, b.values)
    assert not np.array_equal(a.values, net.values)
    with pytest.raises(DimensionMismatchError):
        flip_network(net, flip_matrix(constant_profile(10, 0.3)), seed=8)


def test_debias_is_unbiased_monte_carlo():
    # one node pair observed in 1e5 independent layers
    L = 100_000
    params = DcMsbmParams(labels=[0, 0], degrees=[1.0, 1.0], core=Tensor3(np.full((1, 1, L), 0.5)))
    net = sample_network(probability_tensor(params), seed=21)
    profile = PrivacyProfile([0.8, 0.8])
    flipped = flip_network(net, flip_matrix(profile), seed=22)
    samples = debias(flipped, profile).values.values[0, 1, :]
    se = samples.std(ddof=1) / math.sqrt(L)
    assert abs(samples.mean() - 0.32) <= 4 * se


def test_expected_debiased_and_rescale(rng):
    params = random_params(rng, 12, 3, 2)
    f = rng.uniform(0.2, 1.0, size=12)
    profile = PrivacyProfile(f)
    expected = expected_debiased(params, profile).values
    P = probability_tensor(params).values
    np.testing.assert_allclose(expected, np.outer(f, f)[:, :, None] * P, atol=1e-14)

    rescaled = rescale_debias(DebiasedTensor(values=Tensor3(expected), profile=profile))
    np.testing.assert_allclose(rescaled.values, P, atol=1e-12)

    with pytest.raises(NotRescalableError):
        rescale_debias(DebiasedTensor(values=Tensor3(expected), profile=PrivacyProfile(np.r_[0.0, f[1:]])))


def test_debias_shift_and_shape_check():
    net, _ = generate_synthetic(10, 2, 2, seed=3)
    profile = constant_profile(10, 0.6)
    debiased = debias(net, profile)
    shift = 0.5 * (0.36 - 1.0)
    np.testing.assert_allclose(debiased.values.values, net.values + shift)
    with pytest.raises(DimensionMismatchError):
        debias(net, constant_profile(9, 0.6))


def test_preference_builders():
    u = uniform_profile(500, 0.2, 0.4, seed=1)
    assert u.f.min() >= 0.2 and u.f.max() <= 0.4
    np.testing.assert_array_equal(u.f, uniform_profile(500, 0.2, 0.4, seed=1).f)
    with pytest.raises(InvalidParameterError):
        uniform_profile(5, 0.6, 0.4)

    profile, chosen = polarized_profile(50, 7, 0.05, 0.98, seed=3)
    assert chosen.size == 7 and np.all(np.diff(chosen) > 0)
    assert np.all(profile.f[chosen] == 0.05)
    assert np.sum(profile.f == 0.98) == 43

    _, everyone = polarized_profile(5, 9, 0.0, seed=3)
    assert everyone.size == 5


@pytest.mark.parametrize("fill", [0, 1])
def test_flip_network_half_theta_ignores_input(fill):
    n, L = 20, 500
    net = MultiLayerNetwork(Tensor3(np.full((n, n, L), fill, dtype=np.uint8)))
    flipped = flip_network(net, flip_matrix(constant_profile(n, 0.0)), seed=31)
    rows, cols = np.triu_indices(n)
    out = flipped.values[rows, cols, :]
    assert out.size > 100_000
    assert abs(out.mean() - 0.5) <= 4 * math.sqrt(0.25 / out.size)


def test_flip_network_layers_flip_independently():
    n = 300
    net = MultiLayerNetwork(Tensor3(np.zeros((n, n, 2), dtype=np.uint8)))
    flipped = flip_network(net, flip_matrix(constant_profile(n, math.sqrt(0.5))), seed=32)
    rows, cols = np.triu_indices(n)
    first, second = flipped.values[rows, cols, 0], flipped.values[rows, cols, 1]
    # keep probability 0.75, so each layer flips a quarter of the pairs
    both = np.mean(first & second)
    assert abs(both - 0.0625) <= 4 * math.sqrt(0.0625 * 0.9375 / first.size)
    assert not np.array_equal(first, second)


def test_rescale_debias_is_unbiased_monte_carlo():
    L = 100_000
    params = DcMsbmParams(labels=[0, 0], degrees=[1.0, 1.0], core=Tensor3(np.full((1, 1, L), 0.5)))
    net = sample_network(probability_tensor(params), seed=23)
    profile = PrivacyProfile([0.8, 0.8])
    flipped = flip_network(net, flip_matrix(profile), seed=24)
    samples = rescale_debias(debias(flipped, profile)).values[0, 1, :]
    se = samples.std(ddof=1) / math.sqrt(L)
    assert abs(samples.mean() - 0.5) <= 4 * se
