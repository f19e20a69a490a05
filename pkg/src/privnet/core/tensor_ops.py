"""
Tensor Operations
Dense order-3 tensors: matricization, mode products, truncated SVD and
Tucker decomposition (HOSVD start, HOOI refinement), including the
semi-symmetric variant where modes 1 and 2 share one factor.

Index convention: mode-1 fibers are contiguous (Fortran order), and the
mode-j matricization places entry (i1, i2, i3) in column
1 + sum_{l != j} (i_l - 1) * prod_{m < l, m != j} I_m.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple, Union

import numpy as np
from scipy import linalg
from sklearn.utils.extmath import svd_flip

from privnet.core.errors import DimensionMismatchError, InvalidParameterError, NonFiniteError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Tensor3:
    """Dense I1 x I2 x I3 tensor stored with mode-1 fibers contiguous."""
    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values)
        if arr.ndim != 3:
            raise DimensionMismatchError(f"Tensor3 needs 3 modes, got shape {arr.shape}")
        if min(arr.shape) < 1:
            raise DimensionMismatchError(f"Tensor3 dims must be positive, got {arr.shape}")
        if arr.dtype.kind not in "buif":
            raise InvalidParameterError(f"Tensor3 values must be real, got dtype {arr.dtype}")
        if arr.dtype.kind == "f" and not np.all(np.isfinite(arr)):
            raise NonFiniteError("Tensor3 values must be finite")
        object.__setattr__(self, "values", np.asfortranarray(arr))

    @property
    def dims(self) -> Tuple[int, int, int]:
        return tuple(int(d) for d in self.values.shape)

    def as_float(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64, order="F")

    def is_semi_symmetric(self, atol: float = 0.0) -> bool:
        """True when t(i, j, l) == t(j, i, l) for every layer."""
        if self.dims[0] != self.dims[1]:
            return False
        if atol == 0.0:
            return bool(np.array_equal(self.values, self.values.transpose(1, 0, 2)))
        return bool(np.allclose(self.values, self.values.transpose(1, 0, 2), rtol=0.0, atol=atol))


TensorLike = Union[Tensor3, np.ndarray]


@dataclass(eq=False)
class TuckerFactors:
    """Core tensor plus orthonormal factors; U is V when shared_mode12 is set."""
    core: Tensor3
    U: np.ndarray
    V: np.ndarray
    W: np.ndarray
    shared_mode12: bool = False
    converged: bool = False
    stopped_early: bool = False
    iterations: int = 0
    residuals: List[float] = field(default_factory=list)

    @property
    def ranks(self) -> Tuple[int, int, int]:
        return self.core.dims

    @property
    def residual(self) -> float:
        return self.residuals[-1] if self.residuals else float("nan")


def _as_array(t: TensorLike) -> np.ndarray:
    if isinstance(t, Tensor3):
        return t.values
    return Tensor3(np.asarray(t)).values


def _axis(mode: int) -> int:
    if mode not in (1, 2, 3):
        raise InvalidParameterError(f"mode must be 1, 2 or 3, got {mode}")
    return mode - 1


def matricize(t: TensorLike, mode: int) -> np.ndarray:
    """Mode-`mode` unfolding: I_mode rows, product of the other dims as columns."""
    arr = _as_array(t)
    axis = _axis(mode)
    return np.reshape(np.moveaxis(arr, axis, 0), (arr.shape[axis], -1), order="F")


def fold(matrix: np.ndarray, mode: int, dims: Sequence[int]) -> np.ndarray:
    """Inverse of `matricize` for a tensor of shape `dims`."""
    axis = _axis(mode)
    dims = tuple(int(d) for d in dims)
    if len(dims) != 3:
        raise DimensionMismatchError(f"dims must have 3 entries, got {dims}")
    rest = tuple(d for i, d in enumerate(dims) if i != axis)
    matrix = np.asarray(matrix)
    if matrix.shape != (dims[axis], rest[0] * rest[1]):
        raise DimensionMismatchError(
            f"cannot fold a {matrix.shape} matrix into mode {mode} of {dims}"
        )
    arr = np.reshape(matrix, (dims[axis],) + rest, order="F")
    return np.asfortranarray(np.moveaxis(arr, 0, axis))


def mode_product(t: TensorLike, m: np.ndarray, mode: int) -> Tensor3:
    """t x_mode m: replaces I_mode by the row count of m."""
    arr = _as_array(t)
    axis = _axis(mode)
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[1] != arr.shape[axis]:
        raise DimensionMismatchError(
            f"mode-{mode} product needs {arr.shape[axis]} columns, got matrix {m.shape}"
        )
    dims = list(arr.shape)
    dims[axis] = m.shape[0]
    return Tensor3(fold(m @ matricize(arr, mode), mode, dims))


def truncated_svd(matrix: np.ndarray, rank: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Leading `rank` singular triplets.

    Returns (U, s, V) with U rows x rank, V cols x rank, both with
    orthonormal columns, and s nonincreasing. Signs are fixed so the
    largest-magnitude entry of every column of U is positive.
    """
    a = np.asarray(matrix, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionMismatchError(f"expected a matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonFiniteError("truncated_svd input contains non-finite values")
    if rank < 1 or rank > min(a.shape):
        raise InvalidParameterError(f"rank {rank} outside [1, {min(a.shape)}] for shape {a.shape}")
    try:
        u, s, vt = linalg.svd(a, full_matrices=False, check_finite=False)
    except linalg.LinAlgError:
        logger.warning("gesdd did not converge, retrying with gesvd")
        u, s, vt = linalg.svd(a, full_matrices=False, check_finite=False, lapack_driver="gesvd")
    u, vt = svd_flip(u, vt)
    return u[:, :rank], s[:rank], vt[:rank].T


def _leading_left(matrix: np.ndarray, rank: int) -> np.ndarray:
    return truncated_svd(matrix, rank)[0]


def tucker_core(t: TensorLike, U: np.ndarray, V: np.ndarray, W: np.ndarray) -> Tensor3:
    core = mode_product(t, U.T, 1)
    core = mode_product(core, V.T, 2)
    return mode_product(core, W.T, 3)


def reconstruct(factors: TuckerFactors) -> Tensor3:
    out = mode_product(factors.core, factors.U, 1)
    out = mode_product(out, factors.V, 2)
    return mode_product(out, factors.W, 3)


def _validate_ranks(dims: Tuple[int, int, int], ranks: Sequence[int]) -> Tuple[int, int, int]:
    ranks = tuple(int(r) for r in ranks)
    if len(ranks) != 3:
        raise InvalidParameterError(f"ranks must have 3 entries, got {ranks}")
    for j, (r, d) in enumerate(zip(ranks, dims), start=1):
        if r < 1 or r > d:
            raise InvalidParameterError(f"mode-{j} rank {r} outside [1, {d}]")
    return ranks


def tucker(
    t: TensorLike,
    ranks: Sequence[int],
    shared_mode12: bool = False,
    tol: float = 1e-6,
    max_iter: int = 50,
) -> TuckerFactors:
    """
    Rank-(r1, r2, r3) Tucker approximation by HOSVD followed by HOOI.

    With shared_mode12 the input is symmetrized once over modes 1 and 2 and a
    single factor is fitted for both. Iteration stops when the relative change
    of the residual drops below `tol`. An update that would raise the residual
    ends the run with the best iterate and sets `stopped_early`; unless the
    residual was already at round-off level, such a run is not `converged`.
    Hitting `max_iter` is reported through `converged`, not raised.
    """
    arr = np.asarray(_as_array(t), dtype=np.float64, order="F")
    dims = tuple(arr.shape)
    r1, r2, r3 = _validate_ranks(dims, ranks)
    if tol <= 0:
        raise InvalidParameterError(f"tol must be positive, got {tol}")
    if max_iter < 0:
        raise InvalidParameterError(f"max_iter must be nonnegative, got {max_iter}")
    if shared_mode12:
        if dims[0] != dims[1] or r1 != r2:
            raise DimensionMismatchError(
                f"shared mode-1/2 factor needs I1 == I2 and r1 == r2, got {dims} / {(r1, r2)}"
            )
        arr = np.asfortranarray(0.5 * (arr + arr.transpose(1, 0, 2)))

    U = _leading_left(matricize(arr, 1), r1)
    V = U if shared_mode12 else _leading_left(matricize(arr, 2), r2)
    W = _leading_left(matricize(arr, 3), r3)

    def residual_of(U_, V_, W_):
        core_ = tucker_core(arr, U_, V_, W_)
        approx = reconstruct(TuckerFactors(core_, U_, V_, W_))
        return core_, float(np.linalg.norm(arr - approx.values))

    core, res = residual_of(U, V, W)
    residuals = [res]
    norm = float(np.linalg.norm(arr))
    converged = res <= 1e-14 * max(norm, 1.0)
    iterations = 0
    stopped_early = False

    while not converged and iterations < max_iter:
        if shared_mode12:
            y = mode_product(mode_product(arr, W.T, 3), U.T, 2)
            U_new = _leading_left(matricize(y, 1), r1)
            V_new = U_new
        else:
            y = mode_product(mode_product(arr, V.T, 2), W.T, 3)
            U_new = _leading_left(matricize(y, 1), r1)
            y = mode_product(mode_product(arr, U_new.T, 1), W.T, 3)
            V_new = _leading_left(matricize(y, 2), r2)
        y = mode_product(mode_product(arr, U_new.T, 1), V_new.T, 2)
        W_new = _leading_left(matricize(y, 3), r3)

        core_new, res_new = residual_of(U_new, V_new, W_new)
        iterations += 1
        previous = residuals[-1]
        if res_new > previous * (1.0 + 1e-12) + 1e-15:
            logger.debug(f"HOOI step {iterations} raised the residual ({previous:.6g} -> {res_new:.6g}); keeping best iterate")
            converged = previous <= 1e-10 * max(norm, 1.0)
            stopped_early = not converged
            break
        U, V, W, core = U_new, V_new, W_new, core_new
        residuals.append(res_new)
        if previous == 0.0 or res_new <= 1e-14 * max(norm, 1.0) or (previous - res_new) / previous < tol:
            converged = True

    if stopped_early:
        logger.warning(f"Tucker decomposition stopped after {iterations} iterations on a rising residual ({residuals[-1]:.6g})")
    elif not converged:
        logger.warning(f"Tucker decomposition did not converge in {max_iter} iterations (residual {residuals[-1]:.6g})")

    return TuckerFactors(
        core=core,
        U=U,
        V=V,
        W=W,
        shared_mode12=shared_mode12,
        converged=converged,
        stopped_early=stopped_early,
        iterations=iterations,
        residuals=residuals,
    )


def numerical_rank(singular_values: np.ndarray, rtol: float = 1e-10) -> int:
    s = np.asarray(singular_values, dtype=np.float64)
    if s.size == 0 or s[0] <= 0:
        return 0
    return int(np.sum(s > rtol * s[0]))
