"""Dense substrate: ordering, reshaping, QR, power iteration, SVD oracle."""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ttspectral import dense
from ttspectral.errors import DomainError, ShapeError


def enumerate_positions(dims):
    """Independent ordering oracle: lexicographic enumeration of the box."""
    return {
        idx: pos + 1
        for pos, idx in enumerate(
            itertools.product(*(range(1, d + 1) for d in dims))
        )
    }


class TestMultiIndex:
    def test_first_element(self):
        assert dense.multi_index((2, 3), (1, 1)) == 1

    def test_last_element(self):
        assert dense.multi_index((2, 3), (2, 3)) == 6

    def test_enumeration_oracle_2x3(self):
        oracle = enumerate_positions((2, 3))
        assert oracle[(2, 1)] == 4
        assert dense.multi_index((2, 3), (2, 1)) == 4
        for idx, pos in oracle.items():
            assert dense.multi_index((2, 3), idx) == pos

    def test_out_of_range_names_axis(self):
        with pytest.raises(DomainError, match="axis 1"):
            dense.multi_index((2, 3), (1, 4))

    def test_arity_mismatch(self):
        with pytest.raises(ShapeError):
            dense.multi_index((2, 3), (1, 1, 1))

    @given(
        st.lists(st.integers(min_value=1, max_value=6), min_size=1, max_size=5)
    )
    @settings(max_examples=80, deadline=None)
    def test_bijection(self, dims):
        total = math.prod(dims)
        if total > 10_000:
            return
        seen = [
            dense.multi_index(dims, idx)
            for idx in itertools.product(*(range(1, d + 1) for d in dims))
        ]
        assert sorted(seen) == list(range(1, total + 1))

    def test_inverse(self):
        dims = (3, 4, 2)
        for pos in range(1, 25):
            assert dense.multi_index(dims, dense.linear_to_multi(dims, pos)) == pos


class TestReshape:
    def test_metadata_only(self):
        t = dense.as_tensor(np.arange(6.0), (6,))
        r = dense.reshape(t, (2, 3))
        assert r.shape == (2, 3)
        assert np.array_equal(r.ravel(), t)

    def test_transposed_dims_follow_ordering(self):
        t = dense.as_tensor(np.arange(6.0), (2, 3))
        r = dense.reshape(t, (3, 2))
        # element at multi-index (i, j) of the new dims sits at the same
        # linear position as before
        for i in range(1, 4):
            for j in range(1, 3):
                pos = dense.multi_index((3, 2), (i, j))
                assert r[i - 1, j - 1] == t.ravel()[pos - 1]

    def test_count_mismatch(self):
        with pytest.raises(ShapeError):
            dense.reshape(np.zeros(4), (5,))

    @given(st.integers(min_value=1, max_value=4),
           st.integers(min_value=1, max_value=4),
           st.integers(min_value=1, max_value=4))
    @settings(max_examples=40, deadline=None)
    def test_round_trip_bitwise(self, a, b, c):
        rng = np.random.default_rng(a * 16 + b * 4 + c)
        t = rng.standard_normal((a, b, c))
        back = dense.reshape(dense.reshape(t, (a * b * c,)), (a, b, c))
        assert np.array_equal(back, t)


class TestMatricizeCore:
    def test_unit_leading_axis(self):
        core = dense.as_tensor(np.arange(6.0), (1, 3, 2))
        m = dense.matricize_core(core)
        assert m.shape == (3, 2)
        assert np.array_equal(m.ravel(), core.ravel())

    def test_fused_enumeration(self):
        # independent oracle: fuse (i, j) by explicit enumeration
        core = dense.as_tensor([1.0, 2.0, 3.0, 4.0], (2, 2, 1))
        m = dense.matricize_core(core)
        assert m.shape == (4, 1)
        expected = np.empty((4, 1))
        for i in range(1, 3):
            for j in range(1, 3):
                row = dense.multi_index((2, 2), (i, j))
                expected[row - 1, 0] = core[i - 1, j - 1, 0]
        assert np.array_equal(m, expected)
        assert np.array_equal(m[:, 0], [1.0, 2.0, 3.0, 4.0])

    def test_wrong_arity(self):
        with pytest.raises(ShapeError):
            dense.matricize_core(np.zeros((2, 3)))


class TestHouseholderQr:
    def test_identity_input(self):
        _, r = dense.householder_qr(np.eye(4))
        assert np.allclose(np.abs(np.diag(r)), 1.0)
        assert np.allclose(r, np.diag(np.diag(r)))

    def test_orthonormal_input_gives_diagonal_sign_r(self):
        rng = np.random.default_rng(0)
        q = dense.orthonormalize(rng.standard_normal((6, 4)))
        _, r = dense.householder_qr(q)
        off = r - np.diag(np.diag(r))
        assert np.linalg.norm(off) < 1e-12
        assert np.allclose(np.abs(np.diag(r)), 1.0, atol=1e-12)

    def test_sign_choice(self):
        # R_ii = -sign(x_1) * ||x|| at the first step
        m = np.array([[2.0, 1.0], [0.0, 1.0], [0.0, 3.0]])
        _, r = dense.householder_qr(m)
        assert r[0, 0] == pytest.approx(-2.0)

    @pytest.mark.parametrize("shape", [(5, 3), (8, 8), (12, 2), (7, 7)])
    def test_reconstruction(self, shape):
        for seed in range(100):
            rng = np.random.default_rng(seed)
            m = rng.standard_normal(shape)
            reflectors, r = dense.householder_qr(m)
            q = dense.reflectors_to_frame(reflectors, shape[1])
            err = np.linalg.norm(q @ r - m)
            assert err <= 1e-12 * np.linalg.norm(m)

    def test_rank_deficient_column(self):
        m = np.zeros((4, 2))
        m[:, 1] = [1.0, 2.0, 3.0, 4.0]
        reflectors, r = dense.householder_qr(m)
        assert not reflectors[:, 0].any()  # zero reflector, documented
        q = dense.reflectors_to_frame(reflectors, 2)
        assert np.linalg.norm(q @ r - m) <= 1e-12 * np.linalg.norm(m)

    def test_wide_matrix_rejected(self):
        with pytest.raises(DomainError):
            dense.householder_qr(np.zeros((2, 3)))


class TestPowerIteration:
    def test_diagonal(self):
        assert dense.power_iteration_sigma_max(np.diag([3.0, 2.0, 1.0]), 0) == \
            pytest.approx(3.0, abs=1e-10)

    def test_identity(self):
        assert dense.power_iteration_sigma_max(np.eye(4), 1) == \
            pytest.approx(1.0, abs=1e-10)

    def test_zero_matrix(self):
        assert dense.power_iteration_sigma_max(np.zeros((3, 2)), 0) == 0.0

    def test_matches_svd(self):
        rng = np.random.default_rng(7)
        m = rng.standard_normal((8, 5))
        _, s, _ = dense.svd_full(m)
        est = dense.power_iteration_sigma_max(m, 11)
        assert abs(est - s[0]) <= 1e-8 * s[0]

    def test_deterministic(self):
        m = np.random.default_rng(3).standard_normal((6, 6))
        assert dense.power_iteration_sigma_max(m, 5) == \
            dense.power_iteration_sigma_max(m, 5)


class TestSvdFull:
    def test_diagonal(self):
        _, s, _ = dense.svd_full(np.diag([3.0, 2.0, 1.0]))
        assert np.allclose(s, [3.0, 2.0, 1.0])

    def test_zero(self):
        _, s, _ = dense.svd_full(np.zeros((4, 3)))
        assert np.all(s == 0.0)

    def test_reconstruction_and_orthonormality(self):
        rng = np.random.default_rng(17)
        m = rng.standard_normal((6, 4))
        u, s, v = dense.svd_full(m)
        assert np.linalg.norm(u @ np.diag(s) @ v.T - m) <= 1e-10 * np.linalg.norm(m)
        assert np.linalg.norm(u.T @ u - np.eye(4)) <= 1e-10
        assert np.linalg.norm(v.T @ v - np.eye(4)) <= 1e-10
        assert np.all(np.diff(s) <= 0) and np.all(s >= 0)

    def test_non_finite_rejected(self):
        with pytest.raises(DomainError):
            dense.svd_full(np.array([[np.nan, 0.0], [0.0, 1.0]]))

    @pytest.mark.parametrize("seed", range(5))
    def test_eckart_young_identity(self, seed):
        rng = np.random.default_rng(seed)
        m = rng.standard_normal((9, 7))
        u, s, v = dense.svd_full(m)
        for k in range(1, 7):
            mk = (u[:, :k] * s[:k]) @ v[:, :k].T
            resid_sq = np.linalg.norm(m - mk) ** 2
            tail_sq = float(np.sum(s[k:] ** 2))
            assert resid_sq == pytest.approx(tail_sq, rel=1e-9)
