import numpy as np
import pytest

from paddle import ContractError, Model
from paddle.metrics import (
    dual_distance,
    largest_principal_angle,
    match_atoms,
    pca_basis,
    support_stats,
)
from oracles import best_assignment_cosines, pca_basis_by_jacobi


def subspace_gap(a, b):
    qa, _ = np.linalg.qr(a)
    qb, _ = np.linalg.qr(b)
    return np.linalg.norm(qa @ qa.T - qb @ qb.T)


class TestPcaBasis:
    def test_orthonormal_output(self):
        x = np.random.default_rng(0).standard_normal((7, 40))
        q = pca_basis(x, 3)
        assert q.shape == (7, 3)
        assert np.allclose(q.T @ q, np.eye(3), atol=1e-12)

    def test_matches_jacobi_eigenbasis(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((6, 80))
        xc = x - x.mean(axis=1, keepdims=True)
        got = pca_basis(x, 4)
        ref = pca_basis_by_jacobi(xc, 4)
        # bases may differ by sign/rotation within eigenspaces; compare spans
        assert subspace_gap(got, ref) < 1e-8

    def test_recovers_planted_subspace(self):
        rng = np.random.default_rng(2)
        g = rng.standard_normal((9, 2))
        x = g @ rng.standard_normal((2, 300))
        x = x - x.mean(axis=1, keepdims=True)
        q = pca_basis(x, 2)
        assert subspace_gap(q, g) < 1e-10

    def test_bad_k_rejected(self):
        x = np.random.default_rng(3).standard_normal((4, 10))
        with pytest.raises(ContractError):
            pca_basis(x, 0)
        with pytest.raises(ContractError):
            pca_basis(x, 5)


class TestLargestPrincipalAngle:
    def test_identical_spans_give_zero(self):
        a = np.random.default_rng(4).standard_normal((6, 3))
        assert largest_principal_angle(a, 2.0 * a) < 1e-7

    def test_orthogonal_spans_give_right_angle(self):
        e = np.eye(6)
        assert largest_principal_angle(e[:, :2], e[:, 2:4]) == pytest.approx(
            np.pi / 2
        )

    def test_forty_five_degrees(self):
        a = np.array([[1.0], [0.0]])
        b = np.array([[1.0], [1.0]]) / np.sqrt(2)
        assert largest_principal_angle(a, b) == pytest.approx(np.pi / 4)

    def test_symmetry_and_basis_invariance(self):
        rng = np.random.default_rng(5)
        a = rng.standard_normal((8, 3))
        b = rng.standard_normal((8, 3))
        th = largest_principal_angle(a, b)
        assert largest_principal_angle(b, a) == pytest.approx(th)
        # recombining columns by any invertible mix leaves the span unchanged
        w = rng.standard_normal((3, 3)) + 3 * np.eye(3)
        assert largest_principal_angle(a @ w, b) == pytest.approx(th, abs=1e-10)

    def test_rank_deficient_rejected(self):
        a = np.ones((5, 2))
        b = np.random.default_rng(6).standard_normal((5, 2))
        with pytest.raises(ContractError):
            largest_principal_angle(a, b)


class TestDualDistance:
    def test_transpose_pair_is_zero(self):
        rng = np.random.default_rng(7)
        q, _ = np.linalg.qr(rng.standard_normal((5, 3)))
        m = Model(dictionary=q, dual=q.T.copy())
        assert dual_distance(m) == pytest.approx(0.0, abs=1e-15)

    def test_orthogonal_pair_is_one(self):
        d_mat = np.eye(4)[:, :2]
        c_mat = np.array([[0.0, 1.0, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0]])
        m = Model(dictionary=d_mat, dual=c_mat)
        assert dual_distance(m) == pytest.approx(1.0)

    def test_sign_flip_ignored(self):
        rng = np.random.default_rng(8)
        q, _ = np.linalg.qr(rng.standard_normal((5, 3)))
        m = Model(dictionary=q, dual=-q.T.copy())
        assert dual_distance(m) == pytest.approx(0.0, abs=1e-15)

    def test_scale_invariance(self):
        rng = np.random.default_rng(9)
        q, _ = np.linalg.qr(rng.standard_normal((6, 2)))
        m1 = Model(dictionary=q, dual=q.T.copy())
        m2 = Model(dictionary=0.3 * q, dual=0.7 * q.T.copy())
        assert dual_distance(m2) == pytest.approx(dual_distance(m1), abs=1e-12)

    def test_hand_value_mean(self):
        # pair 0 aligned (distance 0); pair 1 at 60 degrees (distance 0.5)
        d_mat = np.array([[1.0, 0.5], [0.0, np.sqrt(3) / 2]])
        c_mat = np.array([[1.0, 0.0], [1.0, 0.0]])
        m = Model(dictionary=d_mat, dual=c_mat)
        assert dual_distance(m) == pytest.approx(0.25)

    def test_indices_subset(self):
        d_mat = np.array([[1.0, 0.5], [0.0, np.sqrt(3) / 2]])
        c_mat = np.array([[1.0, 0.0], [1.0, 0.0]])
        m = Model(dictionary=d_mat, dual=c_mat)
        assert dual_distance(m, indices=[0]) == pytest.approx(0.0, abs=1e-15)
        assert dual_distance(m, indices=[1]) == pytest.approx(0.5)
        with pytest.raises(ContractError):
            dual_distance(m, indices=[2])

    def test_zero_pairs_skipped_with_warning(self):
        d_mat = np.array([[1.0, 0.0], [0.0, 0.0]])
        c_mat = np.array([[1.0, 0.0], [0.0, 0.0]])
        m = Model(dictionary=d_mat, dual=c_mat)
        with pytest.warns(UserWarning, match="zero-norm"):
            assert dual_distance(m) == pytest.approx(0.0, abs=1e-15)
        all_zero = Model(dictionary=np.zeros((2, 2)), dual=np.zeros((2, 2)))
        with pytest.raises(ContractError):
            dual_distance(all_zero)


class TestSupportStats:
    def test_hand_counts(self):
        u = np.zeros((6, 3))
        u[:2, 0] = 1.0
        u[:4, 1] = -0.5
        u[:, 2] = 2.0
        avg, counts = support_stats(u)
        assert counts.tolist() == [2, 4, 6]
        assert avg == pytest.approx(4.0)

    def test_zero_tolerance_filters_noise(self):
        u = np.array([[1e-14, 1.0], [0.5, 1e-13]])
        avg, counts = support_stats(u, zero_tol=1e-12)
        assert counts.tolist() == [1, 1]
        avg2, counts2 = support_stats(u, zero_tol=0.0)
        assert counts2.tolist() == [2, 2]
        assert avg2 == 2.0

    def test_negative_tolerance_rejected(self):
        with pytest.raises(ContractError):
            support_stats(np.ones((2, 2)), zero_tol=-1.0)


class TestMatchAtoms:
    def test_permuted_negated_copy_fully_matched(self):
        rng = np.random.default_rng(10)
        t = rng.standard_normal((8, 5))
        t /= np.linalg.norm(t, axis=0)
        perm = np.array([3, 0, 4, 1, 2])
        learned = t[:, perm] * np.array([1, -1, 1, -1, 1])
        rep = match_atoms(t, learned, theta=0.999)
        assert rep.matched_fraction == 1.0
        for i, j, c in rep.pairs:
            assert perm[j] == i
            assert c == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal_atoms_unmatched(self):
        t = np.eye(4)[:, :2]
        learned = np.eye(4)[:, 2:]
        rep = match_atoms(t, learned, theta=0.5)
        assert rep.matched_fraction == 0.0

    def test_greedy_agrees_with_exhaustive_assignment(self):
        rng = np.random.default_rng(11)
        for seed in range(6):
            r2 = np.random.default_rng(100 + seed)
            t = r2.standard_normal((7, 5))
            learned = r2.standard_normal((7, 5))
            rep = match_atoms(t, learned, theta=0.0)
            oracle = best_assignment_cosines(t, learned)
            got_total = sum(c for _, _, c in rep.pairs)
            # greedy matching is not always optimal but must come close and
            # never exceed the exhaustive optimum
            assert got_total <= oracle.sum() + 1e-12
            assert got_total >= 0.85 * oracle.sum()

    def test_greedy_exact_on_dominant_diagonal(self):
        # one clearly best partner per atom: greedy equals exhaustive
        rng = np.random.default_rng(12)
        base, _ = np.linalg.qr(rng.standard_normal((6, 4)))
        noise = 0.05 * rng.standard_normal((6, 4))
        learned = base + noise
        rep = match_atoms(base, learned, theta=0.9)
        oracle = best_assignment_cosines(base, learned)
        got = sorted(c for _, _, c in rep.pairs)
        assert np.allclose(got, sorted(oracle), atol=1e-12)
        assert rep.matched_fraction == 1.0

    def test_rectangular_learned_side(self):
        t = np.eye(5)[:, :2]
        learned = np.eye(5)  # more learned atoms than true atoms
        rep = match_atoms(t, learned, theta=0.99)
        assert rep.matched_fraction == 1.0
        assert len(rep.pairs) == 2

    def test_zero_atoms_warn_and_stay_unmatched(self):
        t = np.eye(3)
        learned = np.eye(3)
        learned[:, 1] = 0.0
        with pytest.warns(UserWarning, match="zero-norm"):
            rep = match_atoms(t, learned, theta=0.9)
        assert rep.matched_fraction == pytest.approx(2 / 3)

    def test_bad_theta_rejected(self):
        with pytest.raises(ContractError):
            match_atoms(np.eye(2), np.eye(2), theta=1.5)
