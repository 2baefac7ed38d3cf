"""Dense tensor substrate: element ordering, reshaping, QR, and SVD oracles.

Dense tensors are plain ``numpy.ndarray`` objects of dtype float64 stored in
C (row-major) order.  Row-major order realizes the 1-based multi-index
linearization of :func:`multi_index`: enumerating index tuples
lexicographically walks the flat buffer front to back.  All reshaping in this
library therefore only touches metadata, never the buffer.

All functions are pure; randomness enters only through explicit seeds.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError, NumericError, ShapeError

__all__ = [
    "multi_index",
    "linear_to_multi",
    "as_tensor",
    "reshape",
    "matricize_core",
    "householder_qr",
    "reflectors_to_frame",
    "orthonormalize",
    "power_iteration_sigma_max",
    "svd_full",
]


def _check_dims(dims) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if len(dims) == 0:
        raise ShapeError("dims must be non-empty")
    if any(d < 1 for d in dims):
        raise ShapeError(f"dims must all be >= 1, got {dims}")
    return dims


def multi_index(dims, idx) -> int:
    """Map a 1-based multi-index to its 1-based linear position.

    The position is ``1 + sum_p (idx_p - 1) * prod_{q > p} dims_q``, i.e.
    the last axis varies fastest.  This is a bijection between the index box
    and ``1..prod(dims)``.
    """
    dims = _check_dims(dims)
    idx = tuple(int(i) for i in idx)
    if len(idx) != len(dims):
        raise ShapeError(f"index arity {len(idx)} != tensor arity {len(dims)}")
    pos = 0
    for p, (i, d) in enumerate(zip(idx, dims)):
        if not 1 <= i <= d:
            raise DomainError(f"index {i} out of range [1, {d}] on axis {p}")
        pos = pos * d + (i - 1)
    return pos + 1


def linear_to_multi(dims, pos: int) -> tuple[int, ...]:
    """Inverse of :func:`multi_index`: 1-based position to 1-based tuple."""
    dims = _check_dims(dims)
    total = math.prod(dims)
    if not 1 <= pos <= total:
        raise DomainError(f"position {pos} out of range [1, {total}]")
    rem = pos - 1
    idx = []
    for d in reversed(dims):
        idx.append(rem % d + 1)
        rem //= d
    return tuple(reversed(idx))


def as_tensor(data, dims) -> np.ndarray:
    """Validate and view flat ``data`` as a float64 tensor of shape ``dims``."""
    dims = _check_dims(dims)
    arr = np.ascontiguousarray(data, dtype=np.float64).ravel()
    if arr.size != math.prod(dims):
        raise ShapeError(
            f"data length {arr.size} != prod(dims) = {math.prod(dims)}"
        )
    return arr.reshape(dims)


def reshape(t: np.ndarray, new_dims) -> np.ndarray:
    """Reshape without touching the buffer; element order is preserved."""
    new_dims = _check_dims(new_dims)
    if t.size != math.prod(new_dims):
        raise ShapeError(
            f"cannot reshape {t.size} elements into dims {new_dims} "
            f"({math.prod(new_dims)} elements)"
        )
    return np.ascontiguousarray(t, dtype=np.float64).reshape(new_dims)


def matricize_core(t: np.ndarray) -> np.ndarray:
    """Flatten a 3-D core (a, b, c) to the (a*b, c) matrix, fusing (a, b)."""
    if t.ndim != 3:
        raise ShapeError(f"matricize_core expects a 3-D core, got ndim={t.ndim}")
    a, b, c = t.shape
    return reshape(t, (a * b, c))


def householder_qr(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Householder QR of a d x r matrix with d >= r.

    Returns ``(reflectors, R)`` where column ``i`` of ``reflectors`` is the
    unit reflector vector of step ``i`` (zero above row ``i``) and ``R`` is
    upper triangular.  The cancellation-avoiding sign is used, so
    ``R[i, i] = -sign(x_1) * ||x||`` at each step ``i`` (``sign(0)`` taken as
    ``+1``).  A zero subcolumn yields a zero reflector column, read as "no
    reflection"; this keeps the factorization defined for rank-deficient
    input.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeError("householder_qr expects a matrix")
    d, r = m.shape
    if d < r:
        raise DomainError(f"householder_qr needs d >= r, got {d} x {r}")
    a = m.copy()
    reflectors = np.zeros((d, r))
    for i in range(r):
        x = a[i:, i]
        norm_x = float(np.linalg.norm(x))
        if norm_x == 0.0:
            continue  # zero reflector, R[i, i] stays 0
        sign = -1.0 if x[0] < 0 else 1.0
        alpha = -sign * norm_x
        v = x.copy()
        v[0] -= alpha
        norm_v = float(np.linalg.norm(v))
        if norm_v == 0.0:
            continue
        u = v / norm_v
        a[i:, :] -= 2.0 * np.outer(u, u @ a[i:, :])
        a[i, i] = alpha  # exact by construction of the reflector
        a[i + 1 :, i] = 0.0
        reflectors[i:, i] = u
    return reflectors, np.triu(a[:r, :])


def reflectors_to_frame(reflectors: np.ndarray, r: int | None = None) -> np.ndarray:
    """Apply the reflector product to a truncated identity, giving Q (d x r)."""
    d, k = reflectors.shape
    if r is None:
        r = k
    q = np.eye(d, r)
    for i in range(k - 1, -1, -1):
        u = reflectors[:, i]
        if not u.any():
            continue
        q -= 2.0 * np.outer(u, u @ q)
    return q


def orthonormalize(m: np.ndarray) -> np.ndarray:
    """Orthonormal frame spanning the columns of ``m`` (d x r, d >= r).

    Computed from the Householder QR; the result is sign-fixed so that the
    triangular factor has a non-negative diagonal, which makes
    ``orthonormalize(I + eps*N)`` land next to ``I`` rather than ``-I``.
    """
    reflectors, rmat = householder_qr(m)
    q = reflectors_to_frame(reflectors, m.shape[1])
    flip = np.where(np.diag(rmat) < 0, -1.0, 1.0)
    return q * flip


def power_iteration_sigma_max(
    m: np.ndarray, seed: int, tol: float = 1e-12, max_iter: int = 500
) -> float:
    """Largest singular value of ``m`` by power iteration on ``m^T m``.

    Deterministic for a given seed; stops when the estimate's relative change
    drops below ``tol`` or after ``max_iter`` sweeps.  The zero matrix maps
    to 0.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeError("power_iteration_sigma_max expects a matrix")
    if not np.any(m):
        return 0.0
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(m.shape[1])
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(max_iter):
        w = m @ v
        sigma_new = float(np.linalg.norm(w))
        if sigma_new == 0.0:
            # v landed in the null space; restart from a fresh direction
            v = rng.standard_normal(m.shape[1])
            v /= np.linalg.norm(v)
            continue
        v = m.T @ w
        v /= np.linalg.norm(v)
        if abs(sigma_new - sigma) <= tol * max(sigma_new, 1e-300):
            return sigma_new
        sigma = sigma_new
    return sigma


def svd_full(m: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Singular value decomposition ``m = U @ diag(s) @ V.T``.

    Returns ``(U, s, V)`` with ``s`` non-negative and descending and the
    frames orthonormal.  Serves as the test oracle and the best-rank-k
    baseline throughout the library.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeError("svd_full expects a matrix")
    if not np.all(np.isfinite(m)):
        raise DomainError("svd_full requires finite entries")
    try:
        u, s, vh = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericError(f"SVD did not converge: {exc}") from exc
    return u, s, vh.T
