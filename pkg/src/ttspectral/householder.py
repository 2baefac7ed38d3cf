"""Differentiable parameterizations of orthonormal frames.

A d x r frame with orthonormal columns is produced from a matrix of reflector
parameters laid out LAPACK-style: column ``j`` holds reflector ``j`` with a
structural 1 on the diagonal and structural zeros above it.  The decoded
frame is the product of the reflections applied to a truncated identity,

    Q = H(1) H(2) ... H(r) I_{d x r},      H(i) = I - 2 u_i u_i^T,

with ``u_i`` the normalized ``i``-th column of the layout.  The structural
diagonal 1 keeps every column norm >= 1, so normalization never divides by
zero.

Three layout variants exist:

* ``full`` - free cells strictly below the diagonal; dof = d*r - r*(r+1)/2.
* ``reduced`` - additionally zeroes rows ``j+1..r`` of column ``j``; the
  decoded frame then has an upper-triangular leading r x r block (the
  gauge-fixed subset of frames); dof = d*r - r**2.
* padded - either variant embedded in a ``d_pad x r_pad`` canvas whose extra
  cells are structural zeros with a structural 1 on the diagonal of columns
  ``j > r``.  Padding lets frames of different sizes share one batched
  reflector sweep without changing any decoded value.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .dense import orthonormalize
from .errors import DomainError, EncodeError, ShapeError

__all__ = [
    "HouseholderLayout",
    "FULL",
    "REDUCED",
    "layout_mask",
    "dof",
    "make_layout",
    "layout_from_dense",
    "decode",
    "decode_batch",
    "encode",
    "init_layout",
    "check_frame",
    "INIT_SCHEMES",
]

FULL = "full"
REDUCED = "reduced"
_VARIANTS = (FULL, REDUCED)

INIT_SCHEMES = ("identity", "random_orthogonal", "noisy_identity")


def layout_mask(d: int, r: int, variant: str, d_pad: int | None = None,
                r_pad: int | None = None) -> np.ndarray:
    """Boolean canvas marking the free parameter cells of a layout."""
    d_pad = d if d_pad is None else d_pad
    r_pad = r if r_pad is None else r_pad
    _check_layout_dims(d, r, variant, d_pad, r_pad)
    mask = np.zeros((d_pad, r_pad), dtype=bool)
    for j in range(r):
        lo = r if variant == REDUCED else j + 1
        mask[lo:d, j] = True
    return mask


def _check_layout_dims(d, r, variant, d_pad, r_pad):
    if variant not in _VARIANTS:
        raise DomainError(f"unknown layout variant {variant!r}")
    if not (1 <= r <= d):
        raise DomainError(f"layout needs 1 <= r <= d, got d={d}, r={r}")
    if d_pad < d or r_pad < r:
        raise DomainError(
            f"padded dims ({d_pad}, {r_pad}) must cover frame dims ({d}, {r})"
        )
    if r_pad > d_pad:
        raise DomainError(f"padding needs r_pad <= d_pad, got ({d_pad}, {r_pad})")


def dof(d: int, r: int, variant: str) -> int:
    """Number of free scalars in a layout (padding adds none).

    ``full`` has ``d*r - r*(r+1)/2`` (the dimension of the frame manifold);
    ``reduced`` has ``d*r - r**2``, saving ``r*(r-1)/2`` by fixing the gauge.
    """
    _check_layout_dims(d, r, variant, d, r)
    if variant == FULL:
        return d * r - r * (r + 1) // 2
    return d * r - r * r


@dataclass(frozen=True)
class HouseholderLayout:
    """Reflector parameters for one orthonormal frame.

    ``params`` stores the free cells column-major by reflector: all free
    cells of column 0 (top to bottom), then column 1, and so on.  Instances
    are immutable; use :func:`make_layout` or ``with_params``.
    """

    d: int
    r: int
    variant: str
    params: np.ndarray
    d_pad: int
    r_pad: int

    @property
    def is_padded(self) -> bool:
        return (self.d_pad, self.r_pad) != (self.d, self.r)

    @property
    def padded_shape(self) -> tuple[int, int]:
        return (self.d_pad, self.r_pad)

    def with_params(self, params) -> "HouseholderLayout":
        params = np.asarray(params, dtype=np.float64).ravel()
        if params.size != self.params.size:
            raise ShapeError(
                f"expected {self.params.size} free parameters, got {params.size}"
            )
        return replace(self, params=params)

    def free_cells(self) -> tuple[np.ndarray, np.ndarray]:
        """(rows, cols) of the free cells, column-major by reflector."""
        mask = layout_mask(self.d, self.r, self.variant, self.d_pad, self.r_pad)
        cols, rows = np.nonzero(mask.T)
        return rows, cols

    def dense(self) -> np.ndarray:
        """Materialize the d_pad x r_pad canvas with structural cells."""
        mat = np.zeros((self.d_pad, self.r_pad))
        mat[np.arange(self.r_pad), np.arange(self.r_pad)] = 1.0
        rows, cols = self.free_cells()
        mat[rows, cols] = self.params
        return mat


def make_layout(d: int, r: int, variant: str = FULL, params=None,
                d_pad: int | None = None, r_pad: int | None = None
                ) -> HouseholderLayout:
    """Construct a layout; ``params`` defaults to all zeros."""
    d_pad = d if d_pad is None else d_pad
    r_pad = r if r_pad is None else r_pad
    n_free = int(layout_mask(d, r, variant, d_pad, r_pad).sum())
    if params is None:
        params = np.zeros(n_free)
    params = np.asarray(params, dtype=np.float64).ravel()
    if params.size != n_free:
        raise ShapeError(f"expected {n_free} free parameters, got {params.size}")
    return HouseholderLayout(d, r, variant, params, d_pad, r_pad)


def layout_from_dense(mat: np.ndarray, d: int, r: int, variant: str = FULL,
                      d_pad: int | None = None, r_pad: int | None = None
                      ) -> HouseholderLayout:
    """Extract the free cells of a raw canvas; structural cells are ignored."""
    d_pad = d if d_pad is None else d_pad
    r_pad = r if r_pad is None else r_pad
    mat = np.asarray(mat, dtype=np.float64)
    if mat.shape != (d_pad, r_pad):
        raise ShapeError(f"canvas shape {mat.shape} != ({d_pad}, {r_pad})")
    layout = make_layout(d, r, variant, None, d_pad, r_pad)
    rows, cols = layout.free_cells()
    return layout.with_params(mat[rows, cols])


def _reflect_sweep(canvases: np.ndarray) -> np.ndarray:
    """Apply the reflector product of each stacked canvas to I_{dp x rp}.

    ``canvases`` has shape (batch, d_pad, r_pad).  The reflector index runs
    in lockstep across the batch, and every item goes through the exact same
    sequence of elementwise/matmul operations, so a batch of one is bitwise
    identical to a member of a larger batch.
    """
    b, dp, rp = canvases.shape
    q = np.tile(np.eye(dp, rp), (b, 1, 1))
    for j in range(rp - 1, -1, -1):
        h = canvases[:, :, j]
        norms = np.sqrt(np.sum(h * h, axis=1, keepdims=True))
        u = h / norms  # norms >= 1 thanks to the structural diagonal 1
        proj = u[:, None, :] @ q  # (b, 1, rp)
        q = q - 2.0 * u[:, :, None] * proj
    return q


def decode(layout: HouseholderLayout) -> np.ndarray:
    """Decode a layout into its d x r orthonormal frame."""
    q = _reflect_sweep(layout.dense()[None])
    return q[0, : layout.d, : layout.r]


def decode_batch(layouts) -> list[np.ndarray]:
    """Decode several layouts sharing padded dims in one reflector sweep.

    Bitwise identical to ``[decode(la) for la in layouts]``.
    """
    layouts = list(layouts)
    if not layouts:
        return []
    shapes = {la.padded_shape for la in layouts}
    if len(shapes) != 1:
        raise DomainError(f"batch mixes padded dims: {sorted(shapes)}")
    q = _reflect_sweep(np.stack([la.dense() for la in layouts]))
    return [q[i, : la.d, : la.r] for i, la in enumerate(layouts)]


def check_frame(q: np.ndarray, tol: float = 1e-8) -> None:
    """Raise unless ``q`` has orthonormal columns to within ``tol``."""
    q = np.asarray(q, dtype=np.float64)
    if q.ndim != 2 or q.shape[0] < q.shape[1]:
        raise ShapeError(f"frame must be d x r with d >= r, got {q.shape}")
    gram = q.T @ q
    resid = float(np.linalg.norm(gram - np.eye(q.shape[1])))
    if resid > tol:
        raise DomainError(f"columns not orthonormal: Gram residual {resid:.3e}")


def encode(q: np.ndarray) -> tuple[HouseholderLayout, np.ndarray]:
    """Recover a full layout and column signs from an orthonormal frame.

    ``decode(layout) @ diag(signs)`` reproduces ``q``.  The signs are the
    diagonal of the triangular QR factor, which for orthonormal input is
    ``diag(+-1)``; the parameterization cannot represent them itself, so they
    are returned for the caller to absorb (e.g. into a spectrum).
    """
    q = np.asarray(q, dtype=np.float64)
    check_frame(q)
    d, r = q.shape
    a = q.copy()
    canvas = np.zeros((d, r))
    signs = np.empty(r)
    for i in range(r):
        x = a[i:, i]
        norm_x = float(np.linalg.norm(x))
        if norm_x < 1e-12:
            raise EncodeError(
                f"column {i}: pivot vanished, frame cannot be encoded"
            )
        sign = -1.0 if x[0] < 0 else 1.0
        alpha = -sign * norm_x
        v = x.copy()
        v[0] -= alpha
        pivot = v[0]  # |pivot| = |x_0| + ||x|| >= ||x|| > 0
        canvas[i:, i] = v / pivot  # rescale so the diagonal cell is exactly 1
        u = v / np.linalg.norm(v)
        a[i:, :] -= 2.0 * np.outer(u, u @ a[i:, :])
        signs[i] = 1.0 if alpha >= 0 else -1.0
    return layout_from_dense(canvas, d, r, FULL), signs


def reduce_layout(layout: HouseholderLayout) -> HouseholderLayout:
    """Project a full layout onto the reduced pattern (zero the gauge cells)."""
    canvas = layout.dense()[: layout.d, : layout.r]
    return layout_from_dense(canvas, layout.d, layout.r, REDUCED)


def init_layout(scheme: str, d: int, r: int, seed: int,
                variant: str = FULL, alpha: float = 1e-4,
                ) -> tuple[HouseholderLayout, np.ndarray]:
    """Initialize a layout from one of three frame initialization schemes.

    ``identity`` encodes the truncated identity; ``random_orthogonal``
    encodes the orthonormalization of a standard-normal matrix;
    ``noisy_identity`` encodes the orthonormalization of ``I + alpha * N``.
    Returns ``(layout, signs)``; deterministic for a given seed.  For the
    reduced variant the encoded gauge cells are zeroed (exact for identity,
    an O(alpha) projection for noisy identity).
    """
    if scheme not in INIT_SCHEMES:
        raise DomainError(f"unknown init scheme {scheme!r}")
    rng = np.random.default_rng(seed)
    eye = np.eye(d, r)
    if scheme == "identity":
        target = eye
    elif scheme == "random_orthogonal":
        target = orthonormalize(rng.standard_normal((d, r)))
    else:
        target = orthonormalize(eye + alpha * rng.standard_normal((d, r)))
    layout, signs = encode(target)
    if variant == REDUCED:
        layout = reduce_layout(layout)
    return layout, signs


def pad_layout(layout: HouseholderLayout, d_pad: int, r_pad: int
               ) -> HouseholderLayout:
    """Re-home a layout on a larger canvas; the decoded frame is unchanged."""
    return make_layout(layout.d, layout.r, layout.variant, layout.params,
                       d_pad, r_pad)
