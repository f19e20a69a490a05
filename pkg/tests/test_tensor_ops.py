import numpy as np
import pytest
from scipy.linalg import subspace_angles

from conftest import noiseless_tensor
from privnet.core import tensor_ops
from privnet.core.errors import DimensionMismatchError, InvalidParameterError, NonFiniteError
from privnet.core.tensor_ops import (
    Tensor3,
    fold,
    matricize,
    mode_product,
    numerical_rank,
    reconstruct,
    truncated_svd,
    tucker,
)

EINSUM = {1: "ai,ijl->ajl", 2: "aj,ijl->ial", 3: "al,ijl->ija"}


def _orthonormal(rng, rows, cols):
    q, _ = np.linalg.qr(rng.standard_normal((rows, cols)))
    return q


def test_tensor3_rejects_bad_input():
    with pytest.raises(DimensionMismatchError):
        Tensor3(np.zeros((3, 3)))
    with pytest.raises(DimensionMismatchError):
        Tensor3(np.zeros((3, 0, 2)))
    with pytest.raises(NonFiniteError):
        Tensor3(np.full((2, 2, 2), np.nan))
    with pytest.raises(InvalidParameterError):
        Tensor3(np.zeros((2, 2, 2), dtype=complex))


def test_tensor3_is_mode1_contiguous():
    t = Tensor3(np.arange(24.0).reshape(2, 3, 4))
    assert t.values.flags["F_CONTIGUOUS"]
    assert t.dims == (2, 3, 4)


def test_matricize_column_order():
    arr = np.arange(24.0).reshape(2, 3, 4)
    M1, M2, M3 = (matricize(arr, m) for m in (1, 2, 3))
    assert M1.shape == (2, 12) and M2.shape == (3, 8) and M3.shape == (4, 6)
    for i in range(2):
        for j in range(3):
            for l in range(4):
                assert M1[i, j + 3 * l] == arr[i, j, l]
                assert M2[j, i + 2 * l] == arr[i, j, l]
                assert M3[l, i + 2 * j] == arr[i, j, l]


def test_fold_inverts_matricize(rng):
    arr = rng.standard_normal((4, 5, 3))
    for mode in (1, 2, 3):
        np.testing.assert_array_equal(fold(matricize(arr, mode), mode, arr.shape), arr)
    with pytest.raises(DimensionMismatchError):
        fold(np.zeros((4, 14)), 1, arr.shape)


def test_mode_product_matches_einsum(rng):
    for _ in range(100):
        dims = tuple(rng.integers(1, 6, size=3))
        arr = rng.standard_normal(dims)
        for mode in (1, 2, 3):
            m = rng.standard_normal((int(rng.integers(1, 5)), dims[mode - 1]))
            out = mode_product(arr, m, mode)
            np.testing.assert_allclose(out.values, np.einsum(EINSUM[mode], m, arr), rtol=0, atol=1e-12)
            np.testing.assert_allclose(matricize(out, mode), m @ matricize(arr, mode), rtol=0, atol=1e-12)


def test_mode_product_rejects_wrong_width(rng):
    with pytest.raises(DimensionMismatchError):
        mode_product(rng.standard_normal((3, 4, 5)), np.ones((2, 3)), 2)
    with pytest.raises(InvalidParameterError):
        mode_product(rng.standard_normal((3, 4, 5)), np.ones((2, 3)), 4)


def test_truncated_svd_properties(rng):
    a = rng.standard_normal((9, 6))
    U, s, V = truncated_svd(a, 4)
    assert U.shape == (9, 4) and V.shape == (6, 4) and s.shape == (4,)
    np.testing.assert_allclose(U.T @ U, np.eye(4), atol=1e-12)
    np.testing.assert_allclose(V.T @ V, np.eye(4), atol=1e-12)
    assert np.all(np.diff(s) <= 0)
    np.testing.assert_allclose(s, np.linalg.svd(a, compute_uv=False)[:4], rtol=1e-12)
    for k in range(4):
        assert U[np.argmax(np.abs(U[:, k])), k] > 0

    U6, s6, V6 = truncated_svd(a, 6)
    np.testing.assert_allclose(U6 @ np.diag(s6) @ V6.T, a, atol=1e-12)


def test_truncated_svd_errors():
    with pytest.raises(InvalidParameterError):
        truncated_svd(np.ones((3, 2)), 3)
    with pytest.raises(InvalidParameterError):
        truncated_svd(np.ones((3, 2)), 0)
    bad = np.ones((3, 2))
    bad[0, 0] = np.inf
    with pytest.raises(NonFiniteError):
        truncated_svd(bad, 1)


def test_tucker_recovers_exact_low_rank(rng):
    for _ in range(5):
        core = rng.standard_normal((3, 2, 2))
        U, V, W = _orthonormal(rng, 8, 3), _orthonormal(rng, 7, 2), _orthonormal(rng, 6, 2)
        t = mode_product(mode_product(mode_product(core, U, 1), V, 2), W, 3)
        factors = tucker(t, (3, 2, 2))
        assert factors.converged
        assert factors.ranks == (3, 2, 2)
        err = np.linalg.norm(reconstruct(factors).values - t.values)
        assert err <= 1e-8 * np.linalg.norm(t.values)


def test_semi_symmetric_tucker_shares_factor(rng):
    U = _orthonormal(rng, 10, 3)
    core = rng.standard_normal((3, 3, 4))
    core = core + core.transpose(1, 0, 2)
    W = _orthonormal(rng, 4, 4)
    t = mode_product(mode_product(mode_product(core, U, 1), U, 2), W, 3)
    assert t.is_semi_symmetric(atol=1e-12)

    factors = tucker(t, (3, 3, 4), shared_mode12=True)
    assert factors.U is factors.V
    assert factors.shared_mode12
    err = np.linalg.norm(reconstruct(factors).values - t.values)
    assert err <= 1e-8 * np.linalg.norm(t.values)


def test_tucker_residuals_never_increase(rng):
    t = rng.standard_normal((12, 12, 5))
    factors = tucker(t, (3, 3, 2), shared_mode12=True, max_iter=30)
    residuals = np.array(factors.residuals)
    assert residuals.size >= 1
    assert np.all(np.diff(residuals) <= 1e-10 * residuals[0])
    assert factors.residual == residuals[-1]


def test_tucker_rank_validation(rng):
    t = rng.standard_normal((4, 5, 3))
    with pytest.raises(InvalidParameterError):
        tucker(t, (5, 2, 2))
    with pytest.raises(InvalidParameterError):
        tucker(t, (2, 2))
    with pytest.raises(DimensionMismatchError):
        tucker(t, (2, 2, 2), shared_mode12=True)


def test_tucker_max_iter_zero_is_hosvd(rng):
    factors = tucker(rng.standard_normal((6, 6, 3)), (2, 2, 2), max_iter=0)
    assert factors.iterations == 0
    assert len(factors.residuals) == 1


def test_numerical_rank():
    assert numerical_rank(np.array([3.0, 1.0, 1e-14])) == 2
    assert numerical_rank(np.array([0.0, 0.0])) == 0
    assert numerical_rank(np.array([])) == 0


def test_tucker_spans_weighted_memberships(rng):
    t, params, profile = noiseless_tensor(rng, 60, 3, 8)
    factors = tucker(t, (3, 3, 6), shared_mode12=True)
    # columns of diag(f d) Z, up to the per-community scaling
    weighted = (profile.f * params.degrees)[:, None] * params.membership()
    assert np.max(subspace_angles(factors.U, weighted)) <= 1e-6


def test_model_tensor_multilinear_rank(rng):
    K = 3
    t, _, _ = noiseless_tensor(rng, 40, K, 10)
    for mode, bound in ((1, K), (2, K), (3, K * (K + 1) // 2)):
        s = np.linalg.svd(matricize(t, mode), compute_uv=False)
        assert s[bound] <= 1e-8 * s[0]


def test_tucker_stops_on_rising_residual(rng, monkeypatch):
    U, V, W = _orthonormal(rng, 12, 2), _orthonormal(rng, 11, 2), _orthonormal(rng, 5, 2)
    t = mode_product(mode_product(mode_product(10 * rng.standard_normal((2, 2, 2)), U, 1), V, 2), W, 3)
    t = Tensor3(t.values + 0.1 * rng.standard_normal(t.dims))

    original = tensor_ops._leading_left
    calls = []

    def worse_after_hosvd(matrix, rank):
        calls.append(rank)
        if len(calls) <= 3:
            return original(matrix, rank)
        return _orthonormal(rng, matrix.shape[0], rank)

    monkeypatch.setattr(tensor_ops, "_leading_left", worse_after_hosvd)
    factors = tucker(t, (2, 2, 2), max_iter=10)
    assert factors.stopped_early
    assert not factors.converged
    assert factors.iterations == 1
    assert len(factors.residuals) == 1


def test_tucker_exact_input_is_not_stopped_early(rng):
    core = rng.standard_normal((2, 2, 2))
    t = mode_product(mode_product(mode_product(core, _orthonormal(rng, 6, 2), 1), _orthonormal(rng, 6, 2), 2),
                     _orthonormal(rng, 4, 2), 3)
    factors = tucker(t, (2, 2, 2))
    assert factors.converged
    assert not factors.stopped_early
