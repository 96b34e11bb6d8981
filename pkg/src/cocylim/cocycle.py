"""Locally constant invertible-matrix cocycles.

A cocycle with memory m assigns an invertible d x d matrix to each
admissible m-word.  Products along orbits, adjoints, the projective
action with its sine metric, canonical holonomies (computed as certified
truncations of their defining limits), top-direction extraction and the
two-sided to one-sided reduction all live here.

Infinite sequences are encoded finitely: periodic points by one period
word, homoclinic points by connector words glued into the periodic
orbit, with implicit phase-aligned periodic extension on both sides.
"""

from dataclasses import dataclass, field

import numpy as np

from . import sft

SINGULAR_GAP_FLOOR = 1e-8
INVERTIBILITY_FLOOR = 1e-10


def operator_norm(M):
    """Operator 2-norm via SVD; exact at the sizes used here (d <= 8)."""
    return float(np.linalg.svd(M, compute_uv=False)[0])


@dataclass(frozen=True)
class MatrixCocycle:
    """Locally constant GL(d) cocycle over a subshift."""

    memory: int
    dimension: int
    generators: dict
    theta: float = 1.0

    def __post_init__(self):
        gens = {}
        for w, M in self.generators.items():
            M = np.asarray(M, dtype=float).reshape(self.dimension, self.dimension)
            s = np.linalg.svd(M, compute_uv=False)
            if s[-1] < INVERTIBILITY_FLOOR:
                raise ValueError(
                    f"generator at {w} is numerically singular "
                    f"(smallest singular value {s[-1]:.3e})")
            M.setflags(write=False)
            gens[sft.word(w)] = M
        object.__setattr__(self, "generators", gens)
        if self.memory < 1:
            raise ValueError("cocycle memory must be >= 1")

    def generator(self, w):
        """Generator at the m-word given by the first m symbols of w."""
        return self.generators[tuple(w[: self.memory])]

    def scaled(self, factor):
        """Cocycle with every generator multiplied by exp(factor)."""
        c = float(np.exp(factor))
        return MatrixCocycle(self.memory, self.dimension,
                             {w: c * M for w, M in self.generators.items()},
                             self.theta)

    def validate_against(self, S):
        missing = [w for w in sft.enumerate_words(S, self.memory)
                   if w not in self.generators]
        if missing:
            raise ValueError(f"generators missing for words {missing}")


def constant_cocycle(M, q=2, memory=1, theta=1.0):
    M = np.asarray(M, dtype=float)
    words = [(a,) for a in range(q)] if memory == 1 else None
    if words is None:
        raise ValueError("constant_cocycle only builds memory-1 cocycles")
    return MatrixCocycle(memory, M.shape[0], {w: M for w in words}, theta)


def rotation(phi):
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[c, -s], [s, c]])


def product(A, w, n=None):
    """Forward product of n generators along the word w.

    Factor j sees the m-word starting at position j, and the factors are
    composed as A(position n-1) ... A(position 0).  Requires
    len(w) >= n + m - 1.
    """
    m = A.memory
    if n is None:
        n = len(w) - m + 1
    if n < 1:
        raise ValueError("need at least one factor")
    if len(w) < n + m - 1:
        raise ValueError(f"word of length {len(w)} too short for {n} factors")
    out = np.eye(A.dimension)
    for j in range(n):
        out = A.generator(w[j:j + m]) @ out
    return out


def adjoint_product(A, w, n=None):
    """Transpose of product(A, w, n): the reverse-ordered adjoint factors."""
    return product(A, w, n).T


def fiber_bunching_margin(A, theta=None):
    """max over generators of ||M|| * ||M^-1|| / 2**theta.

    Values below 1 certify fiber bunching, which is what makes the
    holonomy limits converge.
    """
    theta = A.theta if theta is None else theta
    worst = 0.0
    for M in A.generators.values():
        s = np.linalg.svd(M, compute_uv=False)
        worst = max(worst, s[0] / s[-1])
    return worst / 2.0**theta


@dataclass(frozen=True)
class ProjectivePoint:
    """A line in R^d: unit representative with canonical sign."""

    vector: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=float)
        nrm = np.linalg.norm(v)
        if nrm == 0.0:
            raise ValueError("zero vector does not define a line")
        v = v / nrm
        for c in v:
            if abs(c) > 1e-14:
                if c < 0:
                    v = -v
                break
        v.setflags(write=False)
        object.__setattr__(self, "vector", v)

    @property
    def dimension(self):
        return self.vector.shape[0]


def projective_point(v):
    return ProjectivePoint(np.asarray(v, dtype=float))


def projective_distance(u, v):
    """Sine of the angle between two lines: ||u ^ v|| for unit vectors.

    Computed as the norm of the rejection, which stays accurate for
    nearly parallel lines.
    """
    uv = u.vector if isinstance(u, ProjectivePoint) else np.asarray(u, float)
    vv = v.vector if isinstance(v, ProjectivePoint) else np.asarray(v, float)
    uv = uv / np.linalg.norm(uv)
    vv = vv / np.linalg.norm(vv)
    r = uv - (uv @ vv) * vv
    return min(1.0, float(np.linalg.norm(r)))


def projective_action(M, u):
    """Image line of u under an invertible matrix."""
    vec = u.vector if isinstance(u, ProjectivePoint) else np.asarray(u, float)
    return ProjectivePoint(np.asarray(M, float) @ vec)


@dataclass(frozen=True)
class HolonomyApproximation:
    """Truncated holonomy limit with its convergence certificate."""

    matrix: np.ndarray
    truncation_depth: int
    tail_bound: float
    increments: tuple = field(default=(), repr=False)


class PeriodicOrbit:
    """Bi-infinite periodic sequence given by one period word."""

    def __init__(self, S, period_word):
        w = sft.word(period_word)
        if not S.is_admissible(w) or not S.allows(w[-1], w[0]):
            raise ValueError(f"{w} is not an admissible cycle")
        self.word = w
        self.n = len(w)
        self.system = S

    def symbol(self, i):
        return self.word[i % self.n]

    def factor_word(self, i, m):
        return tuple(self.symbol(i + j) for j in range(m))


class HomoclinicPoint:
    """Sequence agreeing with a periodic orbit outside a finite window.

    Coordinates i < -len(left) and i >= len(right) carry the phase-aligned
    periodic symbols; the window holds the connector words left (ending at
    position -1) and right (starting at position 0).
    """

    def __init__(self, orbit, left=(), right=()):
        self.orbit = orbit
        self.left = sft.word(left)
        self.right = sft.word(right)
        S = orbit.system
        lo = -len(self.left)
        hi = len(self.right)
        for i in range(lo - orbit.n, hi + orbit.n):
            if not S.allows(self.symbol(i), self.symbol(i + 1)):
                raise ValueError(
                    f"homoclinic encoding inadmissible at position {i}")

    def symbol(self, i):
        if i < -len(self.left):
            return self.orbit.symbol(i)
        if i < 0:
            return self.left[i + len(self.left)]
        if i < len(self.right):
            return self.right[i]
        return self.orbit.symbol(i)

    def factor_word(self, i, m):
        return tuple(self.symbol(i + j) for j in range(m))


def _truncated_limit(partials, depth, tol):
    """Consume successive partial products until increments settle.

    Returns once two consecutive increments are below tol, reporting the
    last increment as the tail certificate.
    """
    prev = None
    increments = []
    for K, cur in enumerate(partials):
        if prev is not None:
            inc = operator_norm(cur - prev)
            increments.append(inc)
            if len(increments) >= 2 and increments[-1] <= tol and increments[-2] <= tol:
                return HolonomyApproximation(cur, K, inc, tuple(increments))
        prev = cur
    raise RuntimeError(
        f"holonomy limit did not converge within depth {depth} "
        f"(last increment {increments[-1]:.3e}); the cocycle may not be "
        "fiber-bunched or the encoding is wrong")


def unstable_holonomy(A, orbit, point, depth=64, tol=1e-12):
    """Backward holonomy from the periodic orbit to a homoclinic point.

    Truncates lim_K A^K(sigma^-K z) [A^K(sigma^-K p)]^-1, where both
    partial products run over the shared past.  For locally constant
    cocycles the increments vanish exactly once the factor windows clear
    the connector, so the tail certificate is typically 0.
    """
    m = A.memory

    def partials():
        Z = np.eye(A.dimension)
        Q = np.eye(A.dimension)
        yield Z @ Q
        for j in range(1, depth + 1):
            Z = Z @ A.generators[point.factor_word(-j, m)]
            Q = np.linalg.inv(A.generators[orbit.factor_word(-j, m)]) @ Q
            yield Z @ Q

    return _truncated_limit(partials(), depth, tol)


def stable_holonomy(A, point, orbit, depth=64, tol=1e-12):
    """Forward holonomy from a homoclinic point back to the orbit.

    Truncates lim_K [A^K(p)]^-1 A^K(z) over the shared future.
    """
    m = A.memory

    def partials():
        Z = np.eye(A.dimension)
        Q = np.eye(A.dimension)
        yield Q @ Z
        for j in range(depth):
            Z = A.generators[point.factor_word(j, m)] @ Z
            Q = Q @ np.linalg.inv(A.generators[orbit.factor_word(j, m)])
            yield Q @ Z

    return _truncated_limit(partials(), depth, tol)


def top_direction(A, w, gap_floor=SINGULAR_GAP_FLOOR):
    """Leading left-singular direction of the product along a long word.

    Returns the line together with the relative singular gap
    (s1 - s2) / s1.  Products are renormalized factor by factor so long
    words cannot overflow.
    """
    m = A.memory
    n = len(w) - m + 1
    if n < 1:
        raise ValueError("word too short")
    P = np.eye(A.dimension)
    for j in range(n):
        P = A.generator(w[j:j + m]) @ P
        P /= operator_norm(P)
    if A.dimension == 1:
        return ProjectivePoint(np.ones(1)), float("inf")
    s = np.linalg.svd(P, compute_uv=False)
    gap = (s[0] - s[1]) / s[0]
    if gap < gap_floor:
        raise ValueError(
            f"top singular gap {gap:.3e} below floor {gap_floor:g}; "
            "direction is ill-conditioned")
    U = np.linalg.svd(P)[0]
    return ProjectivePoint(U[:, 0]), float(gap)


@dataclass(frozen=True)
class TwoSidedMatrixCocycle:
    """Cocycle whose generator reads the window [-past, future) around 0."""

    past: int
    future: int
    dimension: int
    generators: dict
    theta: float = 1.0

    def __post_init__(self):
        gens = {sft.word(w): np.asarray(M, dtype=float).reshape(
            self.dimension, self.dimension)
            for w, M in self.generators.items()}
        object.__setattr__(self, "generators", gens)


def anchor_past(S, symbol, length):
    """Deterministic admissible past for a symbol.

    Walks backward choosing the smallest admissible predecessor at every
    step, giving an eventually periodic past; returns the last ``length``
    symbols before (and excluding) ``symbol``.
    """
    past = []
    cur = symbol
    T = S.adjacency.entries
    for _ in range(length):
        pred = int(np.flatnonzero(T[:, cur])[0])
        past.append(pred)
        cur = pred
    return tuple(reversed(past))


def two_sided_to_one_sided(A2, S):
    """Reduce a two-sided cocycle to a one-sided locally constant one.

    The reduced cocycle is the conjugate of the input by the stable
    holonomies into the anchored points sharing each zeroth symbol: its
    generator at an (l+m)-word w is

        H^s(sigma x_eta -> (sigma x)_eta) @ A2(anchor past of w[0] + w),

    which depends on future coordinates only.  The conjugating holonomies
    are uniformly bounded, so Lyapunov exponents are preserved; for
    locally constant input every holonomy is an exact finite product of
    2l factors and the truncation tail is exactly zero.

    Returns (cocycle, tail) where tail is the reported truncation error.
    """
    if isinstance(A2, MatrixCocycle):
        return A2, 0.0
    if A2.past == 0:
        return MatrixCocycle(A2.future, A2.dimension, A2.generators, A2.theta), 0.0
    l, m, d = A2.past, A2.future, A2.dimension

    def window(coords, j):
        return tuple(coords(j + i) for i in range(-l, m))

    gens = {}
    for w in sft.enumerate_words(S, l + m):
        pa0 = anchor_past(S, w[0], l + 1)
        pa1 = anchor_past(S, w[1], l)

        def y_coords(i):
            # sigma(x_eta): past is w[0] preceded by the anchor past of w[0]
            if i >= 0:
                return w[1 + i]
            if i == -1:
                return w[0]
            return pa0[i + 1]

        def z_coords(i):
            # (sigma x)_eta: past is the anchor past of w[1]
            return w[1 + i] if i >= 0 else pa1[i]

        # A2 at the anchored base point x_eta
        anchored = A2.generators[anchor_past(S, w[0], l) + w[:m]]
        Y = np.eye(d)
        Zinv = np.eye(d)
        for j in range(l):
            Y = A2.generators[window(y_coords, j)] @ Y
            Zinv = Zinv @ np.linalg.inv(A2.generators[window(z_coords, j)])
        gens[w] = (Zinv @ Y) @ anchored
    return MatrixCocycle(l + m, d, gens, A2.theta), 0.0
