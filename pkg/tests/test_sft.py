import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cocylim import sft
from conftest import random_irreducible


class TestAdjacency:
    def test_rejects_zero_row(self):
        with pytest.raises(ValueError, match="row"):
            sft.AdjacencyMatrix([[0, 0], [1, 1]])

    def test_rejects_zero_column(self):
        with pytest.raises(ValueError, match="column"):
            sft.AdjacencyMatrix([[1, 0], [1, 0]])

    def test_rejects_non_binary(self):
        with pytest.raises(ValueError):
            sft.AdjacencyMatrix([[2, 0], [1, 1]])

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            sft.AdjacencyMatrix([[1, 1, 0], [1, 1, 1]])


class TestIrreducible:
    def test_golden_mean(self):
        assert sft.check_irreducible([[1, 1], [1, 0]])

    def test_identity_is_reducible(self):
        assert not sft.check_irreducible([[1, 0], [0, 1]])

    def test_two_cycle(self):
        assert sft.check_irreducible([[0, 1], [1, 0]])


def brute_force_period(T):
    """gcd of the lengths of all simple cycles, found by exhaustive DFS.

    Every closed walk decomposes into simple cycles, so this gcd equals
    the gcd of all cycle lengths, i.e. the period.
    """
    from math import gcd
    T = np.asarray(T)
    n = T.shape[0]
    g = 0

    def dfs(start, v, length, visited):
        nonlocal g
        for w in np.flatnonzero(T[v]):
            w = int(w)
            if w == start:
                g = gcd(g, length + 1)
            elif w > start and w not in visited:
                dfs(start, w, length + 1, visited | {w})

    for s in range(n):
        dfs(s, s, 0, frozenset())
    return g if g else 1


class TestPeriod:
    def test_two_cycle(self):
        h, classes = sft.period_and_classes([[0, 1], [1, 0]])
        assert h == 2 and classes == ((0,), (1,))

    def test_self_loop(self):
        h, classes = sft.period_and_classes([[1, 1], [1, 0]])
        assert h == 1 and classes == ((0, 1),)

    def test_three_cycle(self):
        h, _ = sft.period_and_classes([[0, 1, 0], [0, 0, 1], [1, 0, 0]])
        assert h == 3

    def test_rejects_reducible(self):
        with pytest.raises(ValueError):
            sft.period_and_classes([[1, 0], [0, 1]])

    def test_classes_ascend_under_transitions(self):
        T = [[0, 1, 0, 0], [0, 0, 1, 1], [1, 0, 0, 0], [1, 0, 0, 0]]
        h, classes = sft.period_and_classes(T)
        S = sft.SymbolicSystem.from_matrix(T)
        arr = np.asarray(T)
        for a in range(4):
            for b in np.flatnonzero(arr[a]):
                assert S.class_of(int(b)) == (S.class_of(a) + 1) % h

    def test_against_cycle_gcd_oracle(self):
        rng = np.random.default_rng(7)
        for q in (2, 3, 4, 5, 6, 7, 8):
            for _ in range(8):
                T = random_irreducible(rng, q)
                h, _ = sft.period_and_classes(T)
                assert h == brute_force_period(T)


class TestEnumerateWords:
    def test_golden_mean_n3(self, golden_mean):
        words = sft.enumerate_words(golden_mean, 3)
        assert len(words) == 5          # entry sum of T^2 = 2+1+1+1
        assert words == sorted(words)

    def test_full_shift_n2(self, full_shift):
        assert len(sft.enumerate_words(full_shift, 2)) == 4

    def test_n1_gives_alphabet(self, golden_mean):
        assert sft.enumerate_words(golden_mean, 1) == [(0,), (1,)]

    def test_count_matches_power_sum(self, golden_mean):
        T = golden_mean.adjacency.entries
        for n in range(1, 13):
            expected = (int(np.linalg.matrix_power(T.astype(object), n - 1).sum())
                        if n > 1 else 2)
            assert len(sft.enumerate_words(golden_mean, n)) == expected

    def test_cap_enforced(self, full_shift):
        with pytest.raises(ValueError, match="cap"):
            sft.enumerate_words(full_shift, 10, cap=100)


class TestWordDistance:
    def test_identical(self):
        assert sft.word_distance((0, 1, 0), (0, 1, 0)) == 0.0

    def test_first_symbol_differs(self):
        assert sft.word_distance((0, 1), (1, 1)) == 1.0

    def test_common_prefix_three(self):
        assert sft.word_distance((0, 1, 0, 0), (0, 1, 0, 1), theta=1.0) == 0.125

    def test_theta_rescaling(self):
        assert sft.word_distance((0, 1, 1), (0, 0, 1), theta=0.5) == 2 ** -0.5

    @given(st.lists(st.integers(0, 1), min_size=1, max_size=10).flatmap(
        lambda x: st.tuples(
            st.just(tuple(x)),
            st.lists(st.integers(0, 1), min_size=len(x), max_size=len(x)).map(tuple),
            st.lists(st.integers(0, 1), min_size=len(x), max_size=len(x)).map(tuple))))
    @settings(max_examples=200, deadline=None)
    def test_ultrametric(self, words):
        x, y, z = words
        dxz = sft.word_distance(x, z)
        assert dxz <= max(sft.word_distance(x, y), sft.word_distance(y, z)) + 1e-15


class TestSplice:
    def test_basic(self, full_shift):
        assert sft.splice(full_shift, "01", "10") == (0, 1, 0)

    def test_identity_splice(self, full_shift):
        assert sft.splice(full_shift, "0", "0") == (0,)

    def test_golden_mean_admissible(self, golden_mean):
        assert sft.splice(golden_mean, "10", "01") == (1, 0, 1)

    def test_junction_mismatch(self, full_shift):
        with pytest.raises(ValueError, match="junction"):
            sft.splice(full_shift, "01", "01")

    def test_inadmissible_result(self, golden_mean):
        with pytest.raises(ValueError, match="admissible"):
            sft.splice(golden_mean, "01", "11")
