import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cocylim import gibbs, sft

GOLDEN = (1 + np.sqrt(5)) / 2


class TestRuelleMatrix:
    def test_full_shift_zero_potential(self, full_shift):
        pot = gibbs.LocallyConstantPotential.constant(full_shift, 0.0, 1)
        M = gibbs.ruelle_matrix(pot, full_shift)
        assert np.array_equal(M, np.ones((2, 2)))
        assert gibbs.pf_eigendata(M)[0] == pytest.approx(2.0, abs=1e-12)

    def test_bernoulli_columns_sum_to_one(self, full_shift):
        pot = gibbs.LocallyConstantPotential.bernoulli([0.3, 0.7])
        M = gibbs.ruelle_matrix(pot, full_shift)
        assert np.allclose(M.sum(axis=0), 1.0)
        assert gibbs.pf_eigendata(M)[0] == pytest.approx(1.0, abs=1e-12)

    def test_golden_mean_radius(self, golden_mean):
        pot = gibbs.LocallyConstantPotential.constant(golden_mean, 0.0, 1)
        M = gibbs.ruelle_matrix(pot, golden_mean)
        assert gibbs.pf_eigendata(M)[0] == pytest.approx(GOLDEN, abs=1e-11)

    def test_missing_value_raises(self, golden_mean):
        pot = gibbs.LocallyConstantPotential(1, {(0,): 0.0})
        with pytest.raises((ValueError, KeyError)):
            gibbs.ruelle_matrix(pot, golden_mean)


class TestPfEigendata:
    def test_ones_matrix(self):
        rho, right, left = gibbs.pf_eigendata(np.ones((2, 2)))
        assert rho == pytest.approx(2.0, abs=1e-12)
        assert np.allclose(right / right[0], [1, 1])

    def test_column_stochastic_radius_one(self):
        P = np.array([[0.9, 0.5], [0.1, 0.5]])   # columns sum to 1
        rho, _, _ = gibbs.pf_eigendata(P)
        assert rho == pytest.approx(1.0, abs=1e-12)

    def test_normalization_contract(self, golden_mean):
        pot = gibbs.LocallyConstantPotential.constant(golden_mean, 0.0, 2)
        M = gibbs.ruelle_matrix(pot, golden_mean)
        rho, right, left = gibbs.pf_eigendata(M)
        assert left.sum() == pytest.approx(1.0, abs=1e-12)
        assert right @ left == pytest.approx(1.0, abs=1e-12)
        assert np.max(np.abs(M @ right - rho * right)) <= 1e-12 * rho

    def test_periodic_matrix(self):
        M = np.array([[0.0, 2.0], [0.5, 0.0]])
        rho, right, _ = gibbs.pf_eigendata(M)
        assert rho == pytest.approx(1.0, abs=1e-12)
        assert np.max(np.abs(M @ right - rho * right)) <= 1e-12

    def test_rejects_reducible(self):
        with pytest.raises(ValueError):
            gibbs.pf_eigendata(np.eye(2))

    @given(st.lists(st.floats(-1.0, 1.0), min_size=2, max_size=2),
           st.floats(-2.0, 2.0))
    @settings(max_examples=25, deadline=None)
    def test_pressure_shift(self, vals, c):
        S = sft.SymbolicSystem.from_matrix([[1, 1], [1, 0]])
        pot = gibbs.LocallyConstantPotential(1, {(0,): vals[0], (1,): vals[1]})
        shifted = gibbs.LocallyConstantPotential(
            1, {(0,): vals[0] + c, (1,): vals[1] + c})
        r1 = gibbs.pf_eigendata(gibbs.ruelle_matrix(pot, S))[0]
        r2 = gibbs.pf_eigendata(gibbs.ruelle_matrix(shifted, S))[0]
        assert r2 == pytest.approx(np.exp(c) * r1, rel=1e-10)


class TestGibbsModel:
    def test_g_function_identity(self, golden_mean):
        pot = gibbs.LocallyConstantPotential(
            2, {(0, 0): 0.3, (0, 1): -0.2, (1, 0): 0.5})
        gm = gibbs.build_gibbs_model(pot, golden_mean)
        for w in gm.words:
            total = sum(gm.g[(a,) + w] for a in range(2)
                        if golden_mean.allows(a, w[0]))
            assert abs(total - 1.0) <= 1e-10

    def test_bernoulli_recovers_g(self, full_shift):
        pot = gibbs.LocallyConstantPotential.bernoulli([0.3, 0.7])
        gm = gibbs.build_gibbs_model(pot, full_shift)
        # potential already log of a g-function: lambda = 1, h constant
        assert gm.pressure == pytest.approx(0.0, abs=1e-12)
        assert gm.g[(0, 0)] == pytest.approx(0.3, abs=1e-12)
        assert gm.g[(1, 1)] == pytest.approx(0.7, abs=1e-12)

    def test_uniform_full_shift(self, full_shift):
        pot = gibbs.LocallyConstantPotential.constant(full_shift, 0.0, 1)
        gm = gibbs.build_gibbs_model(pot, full_shift)
        for y in gm.g.values():
            assert y == pytest.approx(0.5, abs=1e-12)
        assert np.allclose(gm.stationary, [0.5, 0.5])

    def test_stationarity(self, golden_mean):
        pot = gibbs.LocallyConstantPotential(1, {(0,): 0.5, (1,): -0.1})
        gm = gibbs.build_gibbs_model(pot, golden_mean)
        kernel = gibbs.forward_kernel(gm)
        mu_next = np.zeros(len(gm.words))
        for i, w in enumerate(gm.words):
            for b, p in kernel[w]:
                j = gm.word_index[w[1:] + (b,)]
                mu_next[j] += gm.stationary[i] * p
        assert np.allclose(mu_next, gm.stationary, atol=1e-12)

    def test_padding_preserves_model(self, golden_mean):
        pot = gibbs.LocallyConstantPotential(1, {(0,): 0.4, (1,): -0.3})
        g1 = gibbs.build_gibbs_model(pot, golden_mean)
        g2 = gibbs.build_gibbs_model(pot.padded_to(2, golden_mean), golden_mean)
        assert g2.pressure == pytest.approx(g1.pressure, abs=1e-11)
        for w in g2.words:
            assert g2.cylinder_mass(w) == pytest.approx(
                g1.cylinder_mass(w), rel=1e-9)


class TestGibbsRatio:
    def test_bernoulli_ratios_one(self, full_shift):
        gm = gibbs.build_gibbs_model(
            gibbs.LocallyConstantPotential.bernoulli([0.3, 0.7]), full_shift)
        lo, hi = gibbs.gibbs_ratio_check(gm, 4)
        assert lo == pytest.approx(1.0, abs=1e-12)
        assert hi == pytest.approx(1.0, abs=1e-12)

    def test_markov_ratios_closed_form(self, full_shift):
        # exact ratio for a Markov chain: pi(b) / Q(a, b) where (a, b) is
        # the canonical extension step past the cylinder
        Q = np.array([[0.8, 0.2], [0.4, 0.6]])
        pi = np.array([2 / 3, 1 / 3])
        gm = gibbs.build_gibbs_model(
            gibbs.LocallyConstantPotential.markov(Q), full_shift)
        lo, hi = gibbs.gibbs_ratio_check(gm, 5)
        # canonical extension always picks symbol 0 on the full shift
        expected = {pi[0] / Q[a, 0] for a in range(2)}
        assert lo == pytest.approx(min(expected), abs=1e-10)
        assert hi == pytest.approx(max(expected), abs=1e-10)

    def test_band_stable_in_n(self, golden_mean):
        pot = gibbs.LocallyConstantPotential(
            3, {w: 0.1 * sum(w) for w in sft.enumerate_words(golden_mean, 3)})
        gm = gibbs.build_gibbs_model(pot, golden_mean)
        bands = [gibbs.gibbs_ratio_check(gm, n) for n in (4, 5, 6)]
        los, his = zip(*bands)
        assert max(his) / min(los) < 10.0
        assert max(his) - min(his) < 1e-9    # band does not widen with n
        assert max(los) - min(los) < 1e-9


class TestSamplePath:
    def test_degenerate_bernoulli(self, full_shift):
        pot = gibbs.LocallyConstantPotential.bernoulli([1 - 1e-12, 1e-12])
        gm = gibbs.build_gibbs_model(pot, full_shift)
        path = gibbs.sample_path(gm, 50, seed=1)
        assert path == (0,) * 50

    def test_symbol_frequency(self, bernoulli_half):
        n = 100_000
        path = gibbs.sample_path(bernoulli_half, n, seed=4)
        freq = sum(path) / n
        assert abs(freq - 0.5) <= 3 * np.sqrt(0.25 / n)

    def test_two_word_frequencies(self, golden_mean):
        pot = gibbs.LocallyConstantPotential.constant(golden_mean, 0.0, 1)
        gm = gibbs.build_gibbs_model(pot, golden_mean)
        n = 200_000
        path = gibbs.sample_path(gm, n, seed=9)
        counts = {}
        for a, b in zip(path, path[1:]):
            counts[(a, b)] = counts.get((a, b), 0) + 1
        for w in sft.enumerate_words(golden_mean, 2):
            p = gm.cylinder_mass(w)
            se = np.sqrt(p * (1 - p) / (n - 1))
            assert abs(counts.get(w, 0) / (n - 1) - p) <= 3 * se

    def test_deterministic_given_seed(self, bernoulli_half):
        p1 = gibbs.sample_path(bernoulli_half, 500, seed=123)
        p2 = gibbs.sample_path(bernoulli_half, 500, seed=123)
        assert p1 == p2

    def test_path_admissible(self, golden_mean):
        pot = gibbs.LocallyConstantPotential.constant(golden_mean, 0.0, 1)
        gm = gibbs.build_gibbs_model(pot, golden_mean)
        path = gibbs.sample_path(gm, 2000, seed=2)
        assert golden_mean.is_admissible(path)
