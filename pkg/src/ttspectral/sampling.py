"""Seeded random parameter sets for property tests and gradcheck runs.

Any real-valued layout parameters decode to a valid orthonormal frame, so
random parameter sets simply draw standard normals for every free cell.
Learned spectra draw magnitudes from a jittered descending grid over
[0.3, 1.0] with random signs: the magnitudes stay pairwise separated, which
keeps the max-magnitude normalization differentiable at the sampled point
and keeps nearly-degenerate singular pairs (a slow manifold for descent)
out of randomly constructed fitting targets.
"""

from __future__ import annotations

import numpy as np

from . import householder as hh
from .spectral import SpectrumParams
from .spectrum_modes import IDENTITY
from .sttp import SttpParams, build_schedule, core_specs, factorize
from .svdp import SvdpParams

__all__ = ["random_spectrum", "random_svdp_params", "random_sttp_params"]


def random_spectrum(mode: str, r: int, rng: np.random.Generator,
                    lam: float = 0.0) -> SpectrumParams:
    signs = np.where(rng.integers(0, 2, r) == 0, -1.0, 1.0)
    if mode == IDENTITY:
        return SpectrumParams(IDENTITY, r, None, signs, lam)
    if r == 1:
        mags = np.array([1.0])
    else:
        gap = 0.7 / (r - 1)
        mags = np.linspace(1.0, 0.3, r) + rng.uniform(-gap / 3, gap / 3, r)
    return SpectrumParams(mode, r, mags * signs, None, lam)


def random_svdp_params(d_out: int, d_in: int, r: int, mode: str, seed: int,
                       lam: float = 0.0) -> SvdpParams:
    rng = np.random.default_rng(seed)
    u_variant = hh.REDUCED if mode == IDENTITY else hh.FULL
    u = make_random_layout(d_out, r, u_variant, rng)
    v = make_random_layout(d_in, r, hh.FULL, rng)
    return SvdpParams(d_out, d_in, r, u, v, random_spectrum(mode, r, rng, lam))


def make_random_layout(d: int, r: int, variant: str, rng: np.random.Generator,
                       d_pad: int | None = None, r_pad: int | None = None
                       ) -> hh.HouseholderLayout:
    layout = hh.make_layout(d, r, variant, None, d_pad, r_pad)
    return layout.with_params(rng.standard_normal(layout.params.size))


def random_sttp_params(d_out: int, d_in: int, r: int, mode: str, seed: int,
                       lam: float = 0.0) -> SttpParams:
    rng = np.random.default_rng(seed)
    out_fac, in_fac = factorize(d_out), factorize(d_in)
    sched = build_schedule(out_fac, in_fac, r)
    u_specs, v_specs = core_specs(out_fac, in_fac, r, mode)
    u_layouts = tuple(
        make_random_layout(*spec.frame_dims, spec.variant, rng)
        for spec in u_specs
    )
    v_layouts = tuple(
        make_random_layout(*spec.frame_dims, spec.variant, rng)
        for spec in v_specs
    )
    return SttpParams(out_fac, in_fac, r, sched, u_layouts, v_layouts,
                      random_spectrum(mode, r, rng, lam))
