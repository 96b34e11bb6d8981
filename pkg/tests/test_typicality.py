import numpy as np
import pytest

from cocylim import cocycle, sft, typicality
from cocylim.cocycle import MatrixCocycle


class TestFindPeriodicWords:
    def test_full_shift_up_to_two(self, full_shift):
        words = typicality.find_periodic_words(full_shift, 2)
        assert words == [(0,), (1,), (0, 1)]

    def test_golden_mean_excludes_11(self, golden_mean):
        words = typicality.find_periodic_words(golden_mean, 2)
        assert (1,) not in words          # no self-loop at 1
        assert all(golden_mean.allows(w[-1], w[0]) for w in words)

    def test_three_symbols_fixed_words(self):
        S = sft.SymbolicSystem.from_matrix(np.ones((3, 3), dtype=int))
        assert typicality.find_periodic_words(S, 1) == [(0,), (1,), (2,)]

    def test_rotations_deduplicated(self, full_shift):
        words = typicality.find_periodic_words(full_shift, 4)
        assert (1, 0) not in words        # rotation of (0, 1)
        assert (0, 0) not in words        # power of (0,)


class TestPinching:
    def test_distinct_diagonal_passes(self, full_shift):
        A = cocycle.constant_cocycle(np.diag([2.0, 1.0]))
        ok, margin = typicality.pinching_check(A, full_shift, (0,))
        assert ok and margin == pytest.approx(0.5)

    def test_rotation_fails(self, full_shift):
        A = cocycle.constant_cocycle(cocycle.rotation(0.7))
        ok, margin = typicality.pinching_check(A, full_shift, (0,))
        assert not ok and margin == pytest.approx(0.0, abs=1e-12)

    def test_repeated_modulus_fails(self, full_shift):
        A = cocycle.constant_cocycle(np.diag([2.0, 2.0]))
        ok, _ = typicality.pinching_check(A, full_shift, (0,))
        assert not ok

    def test_periodic_word_product(self, full_shift, showcase_cocycle):
        P = typicality.periodic_matrix(showcase_cocycle, full_shift, (0, 1))
        expected = (showcase_cocycle.generators[(1,)]
                    @ showcase_cocycle.generators[(0,)])
        assert np.allclose(P, expected)


class TestTwisting:
    def test_identity_loop_fails_duplicated_column(self, showcase_cocycle):
        vecs = np.eye(2)
        ok, margin, worst = typicality.twisting_check(
            showcase_cocycle, vecs, np.eye(2))
        assert not ok
        assert margin == pytest.approx(0.0, abs=1e-12)
        assert set(worst[0]) & set(worst[1])     # duplicated column case

    def test_quarter_rotation_passes(self, showcase_cocycle):
        vecs = np.eye(2)
        loop = cocycle.rotation(np.pi / 4)
        ok, margin, _ = typicality.twisting_check(showcase_cocycle, vecs, loop)
        assert ok
        # every assembled 2-column set has |det| = sqrt(2)/2; for unit
        # columns the smallest singular value of such a 2x2 matrix
        assert margin == pytest.approx(np.sqrt(1 - np.sqrt(2) / 2), rel=1e-6)

    def test_eigenvector_swap_fails(self, showcase_cocycle):
        vecs = np.eye(2)
        loop = np.array([[0.0, 1.0], [1.0, 0.0]])   # v1 -> v2 exactly
        ok, margin, worst = typicality.twisting_check(
            showcase_cocycle, vecs, loop)
        assert not ok and margin <= 1e-12


class TestIsOneTypical:
    def test_constant_diagonal_inconclusive(self, full_shift):
        A = cocycle.constant_cocycle(np.diag([2.0, 1.0]))
        with pytest.warns(UserWarning, match="fiber-bunched"):
            v = typicality.is_one_typical(A, full_shift, period_budget=2,
                                          connector_budget=3)
        assert v.status == "INCONCLUSIVE"
        dup = [e for e in v.log if e.get("duplicated_column")]
        assert dup, "expected a logged duplicated-column twisting failure"

    def test_identity_inconclusive_via_pinching(self, full_shift,
                                                identity_cocycle):
        v = typicality.is_one_typical(identity_cocycle, full_shift,
                                      period_budget=2, connector_budget=3)
        assert v.status == "INCONCLUSIVE"
        assert all(e["stage"] == "pinching" for e in v.log)

    def test_showcase_accepts(self, full_shift, showcase_cocycle):
        v = typicality.is_one_typical(showcase_cocycle, full_shift,
                                      period_budget=3, connector_budget=4)
        assert v.status == "ACCEPT"
        assert v.witness.pinch_margin >= typicality.DEFAULT_GAP_TOL
        assert v.witness.twist_margin >= typicality.DEFAULT_SV_FLOOR

    def test_thread_count_does_not_change_verdict(self, full_shift,
                                                  showcase_cocycle):
        v1 = typicality.is_one_typical(showcase_cocycle, full_shift,
                                       period_budget=3, connector_budget=3,
                                       threads=1)
        v4 = typicality.is_one_typical(showcase_cocycle, full_shift,
                                       period_budget=3, connector_budget=3,
                                       threads=4)
        assert v1.status == v4.status == "ACCEPT"
        assert v1.witness.periodic_word == v4.witness.periodic_word
        assert v1.witness.homoclinic_encoding == v4.witness.homoclinic_encoding

    def test_orthogonal_conjugation_invariance(self, full_shift,
                                               showcase_cocycle):
        Q = cocycle.rotation(0.83)
        conj = MatrixCocycle(1, 2, {
            w: Q @ G @ Q.T for w, G in showcase_cocycle.generators.items()})
        v1 = typicality.is_one_typical(showcase_cocycle, full_shift,
                                       period_budget=3, connector_budget=3)
        v2 = typicality.is_one_typical(conj, full_shift,
                                       period_budget=3, connector_budget=3)
        assert v1.status == v2.status == "ACCEPT"
        assert v1.witness.pinch_margin == pytest.approx(
            v2.witness.pinch_margin, abs=1e-9)
        assert v1.witness.twist_margin == pytest.approx(
            v2.witness.twist_margin, abs=1e-9)
