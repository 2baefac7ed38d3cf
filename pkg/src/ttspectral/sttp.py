"""Tensor-train parameterization of the two frames of a rank-r matrix.

Both matrix dimensions are factored (ascending primes by default), the
factored weight tensor gets a capped rank schedule over the concatenated
dimension list (output factors in order, then input factors reversed), and
every chain core is Householder-parameterized so that its matricization is
an orthonormal frame.  Composing each chain reproduces the two frames of the
plain rank-r assembly, with the diagonal spectrum between them; since the
interior interface ranks are gauge degrees of freedom, all cores except the
two adjacent to the spectrum use the reduced (gauge-fixed) layout, which
makes the free-parameter count exactly the dimension of the fixed-rank
tensor manifold:

    dof = sum_k R_{k-1} n_k R_k  -  sum_{interior k} R_k^2      (learned)

with an extra ``r*(r+1)/2`` removed for the identity spectrum (its r values
plus one more gauge fixed by reducing U's innermost core).

When every interior rank (excluding the middle r) sits at its cap, the
chain is the plain two-frame parameterization in disguise: all other cores
have square matricizations, which carry no free parameters in reduced form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import householder as hh
from .errors import DomainError, ShapeError
from .spectral import SpectrumParams, init_spectrum, materialize_sigma
from .spectrum_modes import IDENTITY
from .svdp import rank_cap, svdp_dof
from .tensortrain import (
    RankSchedule,
    frames_from_cores,
    rank_caps,
    rank_schedule,
)

__all__ = [
    "factorize",
    "DimFactorization",
    "global_dims",
    "build_schedule",
    "core_specs",
    "core_size_schedule",
    "sttp_dof",
    "SttpParams",
    "init_sttp_params",
    "assemble_sttp",
    "edge_case_is_svdp",
]


def factorize(d: int) -> "DimFactorization":
    """Ascending prime factorization with repetition; rejects d < 2."""
    if d < 2:
        raise DomainError(f"dimension {d} cannot be factored (needs d >= 2)")
    factors = []
    rem = d
    f = 2
    while f * f <= rem:
        while rem % f == 0:
            factors.append(f)
            rem //= f
        f += 1
    if rem > 1:
        factors.append(rem)
    return DimFactorization(d, tuple(factors))


@dataclass(frozen=True)
class DimFactorization:
    """A dimension and its ascending factor list (product equals d)."""

    d: int
    factors: tuple[int, ...]

    def __post_init__(self):
        if self.d < 2:
            raise DomainError("factored dimension must be >= 2")
        if math.prod(self.factors) != self.d:
            raise DomainError(
                f"factors {self.factors} do not multiply to {self.d}"
            )
        if any(f < 2 for f in self.factors):
            raise DomainError("factors must all be >= 2")

    def __len__(self) -> int:
        return len(self.factors)


def global_dims(out_fac: DimFactorization, in_fac: DimFactorization
                ) -> tuple[int, ...]:
    """Dimension list of the factored weight tensor.

    Output factors in order, then input factors reversed, so that the
    spectrum junction sits between position ``D_out`` and ``D_out + 1``.
    """
    return out_fac.factors + tuple(reversed(in_fac.factors))


def build_schedule(out_fac: DimFactorization, in_fac: DimFactorization,
                   r: int) -> RankSchedule:
    """Capped rank schedule over the global dims; the middle rank equals r."""
    cap = rank_cap(out_fac.d, in_fac.d)
    if not 1 <= r <= cap:
        raise DomainError(f"rank {r} violates 1 <= r <= {cap}")
    sched = rank_schedule(global_dims(out_fac, in_fac), r)
    assert sched.ranks[len(out_fac)] == r  # middle cap is min(d_out, d_in) >= r
    return sched


@dataclass(frozen=True)
class CoreSpec:
    """Shape and layout variant of one chain core.

    ``side`` is "u" or "v"; ``local_k`` counts from the outer end of that
    side (0-based), so the core adjacent to the spectrum has the largest
    local index.  ``shape`` is the stored (r_left, n, r_right) tensor shape
    with ``r_right`` the interface toward the spectrum; the frame is its
    matricization (r_left * n, r_right).
    """

    side: str
    local_k: int
    shape: tuple[int, int, int]
    variant: str

    @property
    def frame_dims(self) -> tuple[int, int]:
        r_left, n, r_right = self.shape
        return r_left * n, r_right


def core_specs(out_fac: DimFactorization, in_fac: DimFactorization, r: int,
               spectrum_mode: str) -> tuple[list[CoreSpec], list[CoreSpec]]:
    """Per-core shapes and variants for the U side and the V side.

    Within each side, cores run from the outer (dimension) end toward the
    spectrum.  All cores are reduced except the one adjacent to the spectrum
    on each side; with the identity spectrum, U's adjacent core is reduced
    as well (V's stays full).
    """
    sched = build_schedule(out_fac, in_fac, r)
    d_out_len = len(out_fac)
    u_specs = []
    for k in range(d_out_len):
        shape = (sched.ranks[k], out_fac.factors[k], sched.ranks[k + 1])
        last = k == d_out_len - 1
        variant = hh.FULL if last and spectrum_mode != IDENTITY else hh.REDUCED
        u_specs.append(CoreSpec("u", k, shape, variant))
    # V-side local ranks mirror the tail of the global schedule.
    v_ranks = tuple(reversed(sched.ranks[d_out_len:]))  # rho_0=1 ... rho_Din=r
    v_specs = []
    for k in range(len(in_fac)):
        shape = (v_ranks[k], in_fac.factors[k], v_ranks[k + 1])
        last = k == len(in_fac) - 1
        variant = hh.FULL if last else hh.REDUCED
        v_specs.append(CoreSpec("v", k, shape, variant))
    return u_specs, v_specs


def core_size_schedule(out_fac: DimFactorization, in_fac: DimFactorization,
                       r: int, spectrum_mode: str = "learned"
                       ) -> list[tuple[int, int, str]]:
    """Matricized (rows, cols, variant) of every core, U side then V side.

    The V side is listed from the spectrum outward, matching the left-to-
    right order of the assembled chain.
    """
    u_specs, v_specs = core_specs(out_fac, in_fac, r, spectrum_mode)
    out = [(spec.frame_dims[0], spec.frame_dims[1], spec.variant)
           for spec in u_specs]
    out.extend((spec.frame_dims[0], spec.frame_dims[1], spec.variant)
               for spec in reversed(v_specs))
    return out


def sttp_dof(d_out: int, d_in: int, r: int, spectrum_mode: str) -> int:
    """Free-parameter count of the chain parameterization.

    Learned spectrum: ``sum_k R_{k-1} n_k R_k - sum_{interior} R_k^2`` over
    the global schedule, the dimension of the fixed-rank tensor manifold.
    Identity spectrum: ``r*(r+1)/2`` less (r spectrum values plus the
    ``r*(r-1)/2`` gauge parameters removed from U's innermost core).
    """
    out_fac, in_fac = factorize(d_out), factorize(d_in)
    sched = build_schedule(out_fac, in_fac, r)
    dims = sched.dims
    ranks = sched.ranks
    total = sum(ranks[k] * dims[k] * ranks[k + 1] for k in range(len(dims)))
    total -= sum(ranks[k] ** 2 for k in range(1, len(dims)))
    if spectrum_mode == IDENTITY:
        total -= r * (r + 1) // 2
    return total


@dataclass(frozen=True)
class SttpParams:
    """Complete chain parameter set.

    ``u_layouts`` and ``v_layouts`` run from the outer end of each side
    toward the spectrum, one layout per core, with shapes and variants
    matching :func:`core_specs`.
    """

    out_fac: DimFactorization
    in_fac: DimFactorization
    r: int
    schedule: RankSchedule
    u_layouts: tuple[hh.HouseholderLayout, ...]
    v_layouts: tuple[hh.HouseholderLayout, ...]
    spectrum: SpectrumParams

    def __post_init__(self):
        sched = build_schedule(self.out_fac, self.in_fac, self.r)
        if sched.ranks != self.schedule.ranks or sched.dims != self.schedule.dims:
            raise DomainError("schedule does not match the capped-rank policy")
        u_specs, v_specs = core_specs(self.out_fac, self.in_fac, self.r,
                                      self.spectrum.mode)
        for name, layouts, specs in (("U", self.u_layouts, u_specs),
                                     ("V", self.v_layouts, v_specs)):
            if len(layouts) != len(specs):
                raise ShapeError(f"{name} side expects {len(specs)} layouts")
            for layout, spec in zip(layouts, specs):
                if (layout.d, layout.r) != spec.frame_dims:
                    raise ShapeError(
                        f"{name} core {spec.local_k}: layout dims "
                        f"({layout.d}, {layout.r}) != {spec.frame_dims}"
                    )
                if layout.variant != spec.variant:
                    raise ShapeError(
                        f"{name} core {spec.local_k}: variant {layout.variant}"
                        f" != required {spec.variant}"
                    )
        if self.spectrum.r != self.r:
            raise ShapeError("spectrum length does not match rank")

    @property
    def d_out(self) -> int:
        return self.out_fac.d

    @property
    def d_in(self) -> int:
        return self.in_fac.d

    @property
    def n_params(self) -> int:
        return (sum(la.params.size for la in self.u_layouts)
                + sum(la.params.size for la in self.v_layouts)
                + self.spectrum.n_params)


def _encode_chain(frames, specs) -> tuple[list[hh.HouseholderLayout], np.ndarray]:
    """Encode a chain of target core frames, carrying encode signs inward.

    Each encoding loses per-column signs; flipping the next core's rows by
    the carried signs is an (orthogonal, diagonal) gauge rotation, so the
    composed chain reproduces the intended frame product up to a final
    column-sign vector, which is returned for absorption into the spectrum.
    """
    layouts = []
    carry = np.ones(1)
    for frame, spec in zip(frames, specs):
        r_left, n, _ = spec.shape
        flipped = frame * np.repeat(carry, n)[:, None]
        layout, signs = hh.encode(flipped)
        if spec.variant == hh.REDUCED:
            layout = hh.reduce_layout(layout)
        layouts.append(layout)
        carry = signs
    return layouts, carry


def init_sttp_params(d_out: int, d_in: int, r: int, spectrum_mode: str,
                     seed: int, init_scheme: str = "noisy_identity",
                     alpha: float = 1e-4, lam: float = 0.0) -> SttpParams:
    """Fresh chain parameters; per-core frames follow the init scheme."""
    out_fac, in_fac = factorize(d_out), factorize(d_in)
    sched = build_schedule(out_fac, in_fac, r)
    u_specs, v_specs = core_specs(out_fac, in_fac, r, spectrum_mode)
    rng = np.random.default_rng(seed)

    def side_frames(specs):
        frames = []
        for spec in specs:
            rows, cols = spec.frame_dims
            layout, signs = hh.init_layout(init_scheme, rows, cols,
                                           int(rng.integers(2**32)),
                                           hh.FULL, alpha)
            frames.append(hh.decode(layout) * signs)
        return frames

    u_layouts, su = _encode_chain(side_frames(u_specs), u_specs)
    v_layouts, sv = _encode_chain(side_frames(v_specs), v_specs)
    spectrum = init_spectrum(spectrum_mode, r, su * sv, lam)
    return SttpParams(out_fac, in_fac, r, sched, tuple(u_layouts),
                      tuple(v_layouts), spectrum)


def decode_cores(layouts, specs) -> list[np.ndarray]:
    """Decode per-core layouts into (r_left, n, r_right) core tensors."""
    cores = []
    for layout, spec in zip(layouts, specs):
        frame = hh.decode(layout)
        cores.append(frame.reshape(spec.shape))
    return cores


def assemble_sttp(p: SttpParams) -> np.ndarray:
    """Materialize the d_out x d_in matrix from the chain parameters.

    Decodes every core, composes each side into its orthonormal frame, and
    multiplies through the diagonal spectrum; the singular values of the
    result are ``|sigma|``.
    """
    u_specs, v_specs = core_specs(p.out_fac, p.in_fac, p.r, p.spectrum.mode)
    u = frames_from_cores(decode_cores(p.u_layouts, u_specs))
    v = frames_from_cores(decode_cores(p.v_layouts, v_specs))
    sigma = materialize_sigma(p.spectrum)
    return (u * sigma) @ v.T


def edge_case_is_svdp(d_out: int, d_in: int, r: int) -> tuple[bool, dict]:
    """Whether the capped schedule saturates every cap away from the middle.

    When it does, the chain spans the same rank-r manifold as the plain
    two-frame parameterization; the witness maps the free parameters onto
    the two spectrum-adjacent cores (all others are square, hence empty in
    reduced form) and shows the parameter counts agree.
    """
    out_fac, in_fac = factorize(d_out), factorize(d_in)
    sched = build_schedule(out_fac, in_fac, r)
    dims = sched.dims
    caps = rank_caps(dims)
    middle = len(out_fac)
    saturated = all(
        sched.ranks[k] == caps[k - 1]
        for k in range(1, len(dims))
        if k != middle
    )
    sizes = core_size_schedule(out_fac, in_fac, r)
    square = [rows == cols for rows, cols, _ in sizes]
    witness = {
        "ranks": sched.ranks,
        "caps": (1, *caps, 1),
        "square_cores": square,
        "sigma_adjacent_frames": (sizes[middle - 1][:2], sizes[middle][:2]),
        "sttp_dof": sttp_dof(d_out, d_in, r, "learned"),
        "svdp_dof": svdp_dof(d_out, d_in, r, "learned"),
    }
    return saturated, witness
