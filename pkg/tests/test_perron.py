import numpy as np
import pytest

from cocylim import perron, sft
from conftest import random_irreducible
from test_sft import brute_force_period


class TestCyclicNormalForm:
    def test_two_cycle(self):
        nf = perron.cyclic_normal_form([[0, 1], [1, 0]])
        assert nf.h == 2
        assert all(b.shape == (1, 1) and b[0, 0] == 1 for b in nf.blocks)
        sq = np.linalg.matrix_power(nf.permuted, 2)
        assert np.array_equal(sq, np.eye(2))

    def test_primitive_input(self):
        nf = perron.cyclic_normal_form([[1.0, 2.0], [0.5, 1.0]])
        assert nf.h == 1
        assert nf.permutation == (0, 1)

    def test_four_state_two_periodic(self):
        T = np.array([[0, 0, 1, 1],
                      [0, 0, 1, 0],
                      [1, 1, 0, 0],
                      [1, 0, 0, 0]], dtype=float)
        nf = perron.cyclic_normal_form(T)
        assert nf.h == 2
        P = nf.permuted
        sizes = [len(c) for c in nf.classes]
        off = np.concatenate([[0], np.cumsum(sizes)])
        mask = np.zeros_like(P, dtype=bool)
        for p in range(2):
            q = (p + 1) % 2
            mask[off[p]:off[p + 1], off[q]:off[q + 1]] = True
        assert np.abs(P[~mask]).max() == 0.0

    def test_matches_sft_period(self):
        rng = np.random.default_rng(5)
        for q in range(2, 9):
            for _ in range(5):
                T = random_irreducible(rng, q)
                nf = perron.cyclic_normal_form(T.astype(float))
                assert nf.h == sft.period_and_classes(T)[0]

    def test_rejects_reducible(self):
        with pytest.raises(ValueError):
            perron.cyclic_normal_form(np.eye(2))


class TestRotationSymmetry:
    def test_two_cycle(self):
        assert perron.rotation_symmetry_check([[0, 1], [1, 0]], 2)

    def test_three_cycle(self):
        T = [[0, 1, 0], [0, 0, 1], [1, 0, 0]]
        assert perron.rotation_symmetry_check(T, 3)

    def test_random_two_periodic(self):
        rng = np.random.default_rng(8)
        B = rng.random((3, 2)) + 0.2
        C = rng.random((2, 3)) + 0.2
        M = np.block([[np.zeros((3, 3)), B], [C, np.zeros((2, 2))]])
        assert perron.rotation_symmetry_check(M, 2)

    def test_primitive_fails_rotation(self):
        M = np.array([[1.0, 1.0], [1.0, 0.5]])
        assert not perron.rotation_symmetry_check(M, 2)


class TestPFDecomposition:
    def test_ones(self):
        dec = perron.pf_decomposition(np.ones((2, 2)))
        assert dec.rho == pytest.approx(2.0, abs=1e-12)
        assert np.allclose(dec.u / dec.u[0], [1, 1])
        assert np.abs(dec.S).max() <= 1e-12

    def test_stochastic_transposed(self):
        P = np.array([[0.9, 0.1], [0.3, 0.7]])     # row stochastic
        dec = perron.pf_decomposition(P.T)
        assert dec.rho == pytest.approx(1.0, abs=1e-12)
        # u_star of P^T is the right PF vector of P: the all-ones direction;
        # u is the stationary distribution of the chain
        pi = dec.u / dec.u.sum()
        assert np.allclose(pi @ P, pi, atol=1e-10)

    def test_random_positive_contraction(self):
        rng = np.random.default_rng(1)
        M = rng.random((5, 5)) + 0.05
        dec = perron.pf_decomposition(M)
        roots = dec.S_norm_sequence ** (1.0 / np.arange(1, 51))
        assert roots[-1] < 1.0
        assert dec.gamma_hat < 1.0
        # reconstruction and commutation certificates
        P = np.outer(dec.u, dec.u_star)
        assert np.abs(M - dec.rho * (P + dec.S)).max() <= 1e-10
        assert np.abs(P @ dec.S).max() <= 1e-10
        assert np.abs(dec.S @ P).max() <= 1e-10

    def test_rejects_nonprimitive(self):
        with pytest.raises(ValueError, match="primitive"):
            perron.pf_decomposition(np.array([[0.0, 1.0], [1.0, 0.0]]))

    def test_duality_under_transpose(self):
        rng = np.random.default_rng(2)
        M = rng.random((4, 4)) + 0.1
        d1 = perron.pf_decomposition(M)
        d2 = perron.pf_decomposition(M.T)
        assert d1.rho == pytest.approx(d2.rho, rel=1e-11)
        # swapped eigenvectors up to normalization
        assert np.allclose(d1.u / np.linalg.norm(d1.u),
                           d2.u_star / np.linalg.norm(d2.u_star), atol=1e-9)
        assert np.allclose(d1.u_star / np.linalg.norm(d1.u_star),
                           d2.u / np.linalg.norm(d2.u), atol=1e-9)

    def test_convergence_bound_uniform(self):
        # sup_x ||rho^-n M^n x - <x,u*> u|| / (||x|| gamma^n) bounded in n,
        # checked while gamma^n stays above the float roundoff floor
        rng = np.random.default_rng(3)
        M = rng.random((4, 4)) + 0.1
        dec = perron.pf_decomposition(M)
        P = np.outer(dec.u, dec.u_star)
        worst = 0.0
        power = np.eye(4)
        for n in range(1, 51):
            power = power @ (M / dec.rho)
            if dec.gamma_hat ** n < 1e-10:
                break
            for _ in range(100 if n == 1 else 5):
                x = rng.normal(size=4)
                err = np.linalg.norm(power @ x - P @ x)
                worst = max(worst, err / (np.linalg.norm(x)
                                          * dec.gamma_hat ** n))
        assert np.isfinite(worst)
        assert worst < 100.0
