"""Two-frame assembly: dof accounting, assembly, span, gauge redundancy."""

import numpy as np
import pytest

from ttspectral import householder as hh
from ttspectral import svdp
from ttspectral.dense import svd_full
from ttspectral.errors import DomainError
from ttspectral.sampling import random_svdp_params
from ttspectral.spectral import SpectrumParams, materialize_sigma
from ttspectral.spectrum_modes import IDENTITY, LEARNED


class TestRankCap:
    def test_conv_first_layer(self):
        assert svdp.rank_cap(64, 27) == 27

    def test_square(self):
        assert svdp.rank_cap(5, 5) == 5

    def test_row_vector(self):
        assert svdp.rank_cap(1, 100) == 1


class TestDof:
    def test_learned_16x72_r4(self):
        # oracle: sum of layout free-cell counts plus r spectrum values
        cells = int(hh.layout_mask(16, 4, hh.FULL).sum()) + \
            int(hh.layout_mask(72, 4, hh.FULL).sum()) + 4
        assert cells == 336
        assert svdp.svdp_dof(16, 72, 4, LEARNED) == cells

    def test_identity_16x72_r4(self):
        cells = int(hh.layout_mask(16, 4, hh.REDUCED).sum()) + \
            int(hh.layout_mask(72, 4, hh.FULL).sum())
        assert cells == 326
        assert svdp.svdp_dof(16, 72, 4, IDENTITY) == cells

    def test_square_full_rank(self):
        assert svdp.svdp_dof(4, 4, 4, LEARNED) == 16

    def test_exhaustive_small_dims(self):
        for d_out in range(1, 9):
            for d_in in range(1, 9):
                for r in range(1, min(d_out, d_in) + 1):
                    learned = svdp.svdp_dof(d_out, d_in, r, LEARNED)
                    cells = (
                        int(hh.layout_mask(d_out, r, hh.FULL).sum())
                        + int(hh.layout_mask(d_in, r, hh.FULL).sum()) + r
                    )
                    assert learned == cells
                    assert learned <= d_out * d_in
                    ident = svdp.svdp_dof(d_out, d_in, r, IDENTITY)
                    assert ident == (
                        int(hh.layout_mask(d_out, r, hh.REDUCED).sum())
                        + int(hh.layout_mask(d_in, r, hh.FULL).sum())
                    )

    def test_rank_violation(self):
        with pytest.raises(DomainError):
            svdp.svdp_dof(16, 72, 100, LEARNED)

    def test_param_container_matches_dof(self):
        for mode in (IDENTITY, LEARNED):
            p = random_svdp_params(9, 7, 3, mode, 0)
            assert p.n_params == svdp.svdp_dof(9, 7, 3, mode)


class TestAssemble:
    def test_identity_init_gives_truncated_identity(self):
        p = svdp.init_svdp_params(6, 5, 3, IDENTITY, 0, "identity")
        w = svdp.assemble(p)
        assert np.allclose(w, np.eye(6, 3) @ np.eye(5, 3).T, atol=1e-10)

    def test_zero_sigma_entry_drops_rank(self):
        p = random_svdp_params(6, 5, 3, LEARNED, 1)
        s = p.spectrum.s.copy()
        s[2] = 0.0
        p = svdp.SvdpParams(6, 5, 3, p.u_layout, p.v_layout,
                            p.spectrum.with_s(s))
        _, sv, _ = svd_full(svdp.assemble(p))
        assert sv[2] <= 1e-10

    @pytest.mark.parametrize("seed", range(10))
    def test_singular_values_match_sigma(self, seed):
        p = random_svdp_params(4, 3, 2, LEARNED, seed)
        w = svdp.assemble(p)
        sigma = materialize_sigma(p.spectrum)
        _, sv, _ = svd_full(w)
        assert np.allclose(sv[:2], np.sort(np.abs(sigma))[::-1], atol=1e-9)
        assert sv[0] == pytest.approx(np.max(np.abs(sigma)), abs=1e-9)

    def test_identity_variant_rules_enforced_by_factory(self):
        p = svdp.init_svdp_params(8, 6, 3, IDENTITY, 0)
        assert p.u_layout.variant == hh.REDUCED
        assert p.v_layout.variant == hh.FULL
        p = svdp.init_svdp_params(8, 6, 3, LEARNED, 0)
        assert p.u_layout.variant == hh.FULL


class TestSpanProperty:
    @pytest.mark.parametrize("seed", range(5))
    def test_rank_r_target_with_unit_top_value(self, seed):
        # constructive span: truncate an SVD, rescale to top value 1,
        # encode frames, absorb signs into the spectrum
        rng = np.random.default_rng(seed)
        raw = rng.standard_normal((9, 7))
        u, s, v = svd_full(raw)
        target = (u[:, :3] * (s[:3] / s[0])) @ v[:, :3].T
        params, scale = svdp.svdp_from_matrix(target, 3)
        assert scale == pytest.approx(1.0, rel=1e-12)
        w = svdp.assemble(params)
        assert np.linalg.norm(w - target) <= 1e-9 * np.linalg.norm(target)

    def test_scale_reported_for_unnormalized_targets(self):
        rng = np.random.default_rng(42)
        target = 5.0 * rng.standard_normal((6, 4))
        params, scale = svdp.svdp_from_matrix(target, 4)
        _, s, _ = svd_full(target)
        assert scale == pytest.approx(s[0], rel=1e-12)
        w = svdp.assemble(params)
        u, sv, v = svd_full(target)
        best = (u[:, :4] * sv[:4]) @ v[:, :4].T
        assert np.linalg.norm(scale * w - best) <= 1e-9 * np.linalg.norm(best)


class TestRedundancyWitness:
    def _full_full_identity(self, seed):
        rng = np.random.default_rng(seed)
        u_layout = hh.make_layout(6, 2, hh.FULL,
                                  rng.standard_normal(hh.dof(6, 2, hh.FULL)))
        v_layout = hh.make_layout(5, 2, hh.FULL,
                                  rng.standard_normal(hh.dof(5, 2, hh.FULL)))
        spectrum = SpectrumParams(IDENTITY, 2, None, np.array([1.0, -1.0]))
        return svdp.SvdpParams(6, 5, 2, u_layout, v_layout, spectrum)

    def test_identity_rotation_is_noop_on_w(self):
        p = self._full_full_identity(0)
        p2 = svdp.redundancy_witness(p, np.eye(2))
        assert np.allclose(svdp.assemble(p2), svdp.assemble(p), atol=1e-10)

    def test_rotation_changes_frames_not_w(self):
        p = self._full_full_identity(1)
        c, s = np.cos(0.7), np.sin(0.7)
        q = np.array([[c, -s], [s, c]])
        p2 = svdp.redundancy_witness(p, q)
        assert np.allclose(svdp.assemble(p2), svdp.assemble(p), atol=1e-10)
        assert not np.allclose(hh.decode(p2.u_layout), hh.decode(p.u_layout),
                               atol=1e-3)

    def test_reflection(self):
        p = self._full_full_identity(2)
        p2 = svdp.redundancy_witness(p, np.diag([1.0, -1.0]))
        assert np.allclose(svdp.assemble(p2), svdp.assemble(p), atol=1e-10)

    def test_non_orthogonal_rejected(self):
        p = self._full_full_identity(3)
        with pytest.raises(DomainError):
            svdp.redundancy_witness(p, np.array([[1.0, 1.0], [0.0, 1.0]]))
