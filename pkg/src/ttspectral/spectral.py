"""Spectrum parameterizations and spectral diagnostics.

The diagonal factor of an assembled weight matrix is either fixed to
``+-1`` entries (identity mode, the signs coming from frame encoding) or
learned as a free vector ``s`` rescaled by its infinity norm,
``sigma = s / max|s|``.  The rescaling pins ``max|sigma|`` to exactly 1, so
every assembled matrix has spectral norm 1 and any stack of such layers has
a product Lipschitz bound of 1.

Also here: the log-determinant style penalty that pushes singular values
away from zero, the Lipschitz bound aggregator, stable rank, the
convolution-kernel matrix shape map, and the parameter-count compression
ratio.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dense import power_iteration_sigma_max
from .errors import DomainError
from .spectrum_modes import IDENTITY, LEARNED, LEARNED_REGULARIZED, SPECTRUM_MODES

__all__ = [
    "IDENTITY",
    "LEARNED",
    "LEARNED_REGULARIZED",
    "SPECTRUM_MODES",
    "SpectrumParams",
    "materialize_sigma",
    "d_optimal_penalty",
    "lipschitz_bound",
    "stable_rank",
    "stable_rank_from_spectrum",
    "conv_kernel_matrix_dims",
    "LayerBudget",
    "NetworkSummary",
    "compression_ratio",
]


@dataclass(frozen=True)
class SpectrumParams:
    """Diagonal-factor state for one parameterized matrix.

    ``signs`` absorbs the ``+-1`` column-sign ambiguity of frame encoding.
    In identity mode the materialized diagonal is exactly ``signs`` and
    carries no free parameters; in the learned modes the free vector ``s``
    (signs already folded in at initialization) is the parameter and
    ``signs`` is kept only as bookkeeping.
    """

    mode: str
    r: int
    s: np.ndarray | None = None
    signs: np.ndarray | None = None
    lam: float = 0.0

    def __post_init__(self):
        if self.mode not in SPECTRUM_MODES:
            raise DomainError(f"unknown spectrum mode {self.mode!r}")
        if self.r < 1:
            raise DomainError("spectrum needs r >= 1")
        signs = np.ones(self.r) if self.signs is None else \
            np.asarray(self.signs, dtype=np.float64).ravel()
        if signs.size != self.r or not np.all(np.abs(signs) == 1.0):
            raise DomainError("signs must be an r-vector of +-1")
        object.__setattr__(self, "signs", signs)
        if self.mode == IDENTITY:
            if self.s is not None:
                raise DomainError("identity spectrum carries no free vector")
        else:
            s = np.asarray(self.s, dtype=np.float64).ravel()
            if s.size != self.r:
                raise DomainError(f"expected {self.r} spectrum values, got {s.size}")
            object.__setattr__(self, "s", s)
        if self.lam < 0:
            raise DomainError("regularizer weight must be >= 0")

    @property
    def n_params(self) -> int:
        return 0 if self.mode == IDENTITY else self.r

    def with_s(self, s) -> "SpectrumParams":
        if self.mode == IDENTITY:
            raise DomainError("identity spectrum carries no free vector")
        return SpectrumParams(self.mode, self.r, np.asarray(s, dtype=np.float64),
                              self.signs, self.lam)


def init_spectrum(mode: str, r: int, signs=None, lam: float = 0.0
                  ) -> SpectrumParams:
    """Fresh spectrum: identity keeps the signs; learned starts at s = signs."""
    signs = np.ones(r) if signs is None else np.asarray(signs, dtype=np.float64)
    if mode == IDENTITY:
        return SpectrumParams(IDENTITY, r, None, signs, lam)
    return SpectrumParams(mode, r, signs.copy(), signs, lam)


def materialize_sigma(sp: SpectrumParams) -> np.ndarray:
    """The r diagonal entries: ``signs`` (identity) or ``s / max|s|``.

    Learned modes require at least one nonzero entry; the max-magnitude
    entry maps to exactly +-1.
    """
    if sp.mode == IDENTITY:
        return sp.signs.copy()
    m = float(np.max(np.abs(sp.s)))
    if m == 0.0:
        raise DomainError("degenerate spectrum: all entries are zero")
    return sp.s / m


def d_optimal_penalty(sigma) -> float:
    """``-sum_i log|sigma_i|``: zero iff all magnitudes are 1, +inf at zero."""
    sigma = np.asarray(sigma, dtype=np.float64).ravel()
    if np.any(sigma == 0.0):
        raise DomainError("penalty is infinite at a zero singular value")
    return float(-np.sum(np.log(np.abs(sigma))))


def lipschitz_bound(sigma_max_per_layer) -> float:
    """Product of per-layer spectral norms: the feed-forward Lipschitz bound."""
    vals = [float(v) for v in sigma_max_per_layer]
    if any(v < 0 for v in vals):
        raise DomainError("spectral norms must be non-negative")
    return float(math.prod(vals))


def stable_rank(m: np.ndarray, seed: int = 0) -> float:
    """``||m||_F^2 / sigma_max(m)^2`` for a raw matrix, via power iteration."""
    m = np.asarray(m, dtype=np.float64)
    if not np.any(m):
        raise DomainError("stable rank is undefined for the zero matrix")
    smax = power_iteration_sigma_max(m, seed)
    return float(np.sum(m * m) / (smax * smax))


def stable_rank_from_spectrum(sigma) -> float:
    """Exact stable rank of a parameterized matrix from its diagonal."""
    sigma = np.asarray(sigma, dtype=np.float64).ravel()
    smax = float(np.max(np.abs(sigma)))
    if smax == 0.0:
        raise DomainError("stable rank is undefined for the zero matrix")
    return float(np.sum(sigma * sigma) / (smax * smax))


def conv_kernel_matrix_dims(c_out: int, c_in: int, kernel_dims) -> tuple[int, int]:
    """Matrix shape of a conv kernel tensor: (C_out, C_in * M_1 * ... * M_N)."""
    kernel_dims = tuple(int(k) for k in kernel_dims)
    if c_out < 1 or c_in < 1 or any(k < 1 for k in kernel_dims):
        raise DomainError("kernel dimensions must be positive")
    return c_out, c_in * math.prod(kernel_dims)


@dataclass(frozen=True)
class LayerBudget:
    """Parameter accounting for one layer: dims, scheme dof, extras."""

    d_out: int
    d_in: int
    dof: int
    extra: int = 0  # scalars not subject to reparameterization (bias, norms)

    def __post_init__(self):
        if min(self.d_out, self.d_in) < 1 or self.dof < 0 or self.extra < 0:
            raise DomainError("layer budget entries must be non-negative")

    @property
    def numel(self) -> int:
        return self.d_out * self.d_in


@dataclass(frozen=True)
class NetworkSummary:
    layers: tuple[LayerBudget, ...] = field(default_factory=tuple)


def compression_ratio(net: NetworkSummary) -> float:
    """Percentage of parameters kept: 100 * (sum dof + extra) / (numel + extra)."""
    layers = net.layers
    if not layers:
        raise DomainError("compression ratio of an empty network is undefined")
    kept = sum(l.dof + l.extra for l in layers)
    total = sum(l.numel + l.extra for l in layers)
    if total <= 0:
        raise DomainError("network has no parameters")
    return 100.0 * kept / total
