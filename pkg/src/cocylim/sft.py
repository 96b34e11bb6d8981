"""Subshifts of finite type: adjacency matrices, word combinatorics, and
the rescaled sequence metric.

Words are tuples of 0-based integer symbols.  Two-sided objects elsewhere
in the package are represented by finite past/future word pairs, so
everything here works with finite words only.
"""

from dataclasses import dataclass
from math import gcd

import numpy as np

DEFAULT_WORD_CAP = 10_000_000

Word = tuple


def word(symbols):
    """Coerce an iterable or string like '010' to a word tuple."""
    if isinstance(symbols, str):
        return tuple(int(c) for c in symbols)
    return tuple(int(s) for s in symbols)


def word_str(w):
    return "".join(str(s) for s in w)


@dataclass(frozen=True)
class AdjacencyMatrix:
    """0/1 transition matrix of a subshift of finite type.

    Every row and column must contain at least one 1; entries must be
    exactly 0 or 1.
    """

    entries: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=np.int64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError("adjacency matrix must be square")
        if not np.isin(arr, (0, 1)).all():
            raise ValueError("adjacency entries must be 0 or 1")
        if (arr.sum(axis=1) == 0).any():
            raise ValueError("adjacency matrix has an all-zero row")
        if (arr.sum(axis=0) == 0).any():
            raise ValueError("adjacency matrix has an all-zero column")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def q(self):
        return self.entries.shape[0]

    def allows(self, a, b):
        return bool(self.entries[a, b])


def _reachable(adj, start, reverse=False):
    arr = adj.entries.T if reverse else adj.entries
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for w in np.flatnonzero(arr[v]):
            if w not in seen:
                seen.add(int(w))
                stack.append(int(w))
    return seen


def check_irreducible(T):
    """True iff the transition graph of ``T`` is strongly connected.

    Equivalently: for any pair of symbols (i, j) some power of ``T`` has a
    positive (i, j) entry.
    """
    if not isinstance(T, AdjacencyMatrix):
        T = AdjacencyMatrix(T)
    n = T.q
    return len(_reachable(T, 0)) == n and len(_reachable(T, 0, reverse=True)) == n


def period_and_classes(T):
    """Period and cyclic classes of an irreducible adjacency matrix.

    The period h is computed by BFS level-coloring: h is the gcd of
    (level(u) + 1 - level(v)) over all edges u -> v, which equals the gcd
    of all cycle lengths.  Classes are ordered so that every admissible
    transition maps class p into class (p + 1) mod h, with symbol 0 in
    class 0.

    Returns
    -------
    (h, classes) : (int, tuple of tuples)
    """
    if not isinstance(T, AdjacencyMatrix):
        T = AdjacencyMatrix(T)
    if not check_irreducible(T):
        raise ValueError("matrix is reducible; period is undefined")
    n = T.q
    level = {0: 0}
    queue = [0]
    h = 0
    while queue:
        nxt = []
        for u in queue:
            for v in np.flatnonzero(T.entries[u]):
                v = int(v)
                if v in level:
                    h = gcd(h, level[u] + 1 - level[v])
                else:
                    level[v] = level[u] + 1
                    nxt.append(v)
        queue = nxt
    h = abs(h) if h else 1
    classes = [[] for _ in range(h)]
    for v in range(n):
        classes[level[v] % h].append(v)
    return h, tuple(tuple(sorted(c)) for c in classes)


@dataclass(frozen=True)
class SymbolicSystem:
    """A subshift of finite type plus its derived combinatorics.

    theta is the Holder exponent of the rescaled metric
    rho(x, y) = rho0(x, y)**theta.
    """

    adjacency: AdjacencyMatrix
    irreducible: bool
    primitive: bool
    period: int
    cyclic_classes: tuple
    theta: float = 1.0
    word_cap: int = DEFAULT_WORD_CAP

    @classmethod
    def from_matrix(cls, rows, theta=1.0, word_cap=DEFAULT_WORD_CAP):
        adj = rows if isinstance(rows, AdjacencyMatrix) else AdjacencyMatrix(rows)
        if not check_irreducible(adj):
            raise ValueError("subshift requires an irreducible adjacency matrix")
        if not 0.0 < theta <= 1.0:
            raise ValueError("theta must lie in (0, 1]")
        h, classes = period_and_classes(adj)
        primitive = h == 1
        return cls(adj, True, primitive, h, classes, float(theta), int(word_cap))

    @property
    def q(self):
        return self.adjacency.q

    def allows(self, a, b):
        return self.adjacency.allows(a, b)

    def is_admissible(self, w):
        T = self.adjacency.entries
        return all(0 <= s < self.q for s in w) and all(
            T[a, b] for a, b in zip(w, w[1:]))

    def class_of(self, symbol):
        for p, cls in enumerate(self.cyclic_classes):
            if symbol in cls:
                return p
        raise ValueError(f"unknown symbol {symbol}")


def count_words(S, n):
    """Number of admissible words of length n (entry-sum of T^(n-1))."""
    if n < 1:
        raise ValueError("word length must be >= 1")
    T = S.adjacency.entries.astype(object)
    acc = np.linalg.matrix_power(T, n - 1) if n > 1 else np.ones_like(T)
    return int(acc.sum()) if n > 1 else S.q


def enumerate_words(S, n, cap=None):
    """All admissible words of length n, in lexicographic order.

    Refuses to enumerate when the count exceeds the word cap.
    """
    if n < 1:
        raise ValueError("word length must be >= 1")
    cap = S.word_cap if cap is None else cap
    total = count_words(S, n)
    if total > cap:
        raise ValueError(f"{total} words of length {n} exceed the cap {cap}")
    T = S.adjacency.entries
    words = [(s,) for s in range(S.q)]
    for _ in range(n - 1):
        words = [w + (b,) for w in words for b in range(S.q) if T[w[-1], b]]
    return words


def word_distance(x, y, theta=1.0):
    """Rescaled metric 2**(-k*theta) between equal-length one-sided prefixes.

    k is the length of the longest common prefix; identical words are at
    distance 0 and words differing in the first symbol at distance 1.
    """
    if len(x) != len(y):
        raise ValueError("words must have equal length")
    if tuple(x) == tuple(y):
        return 0.0
    k = 0
    for a, b in zip(x, y):
        if a != b:
            break
        k += 1
    return 2.0 ** (-k * theta)


def splice(S, past, future):
    """Join two words overlapping on their shared junction symbol.

    The last symbol of ``past`` must equal the first symbol of ``future``;
    the result must be admissible.
    """
    past, future = word(past), word(future)
    if not past or not future:
        raise ValueError("cannot splice empty words")
    if past[-1] != future[0]:
        raise ValueError(
            f"junction mismatch: {word_str(past)!r} ends with {past[-1]}, "
            f"{word_str(future)!r} starts with {future[0]}")
    out = past + future[1:]
    if not S.is_admissible(out):
        raise ValueError(f"spliced word {word_str(out)!r} is not admissible")
    return out
