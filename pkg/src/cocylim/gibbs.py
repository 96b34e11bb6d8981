"""Equilibrium states of locally constant potentials.

A potential with memory k assigns one value per admissible k-word.  Its
transfer matrix acts on k-word indexed vectors; the leading eigendata
yield the pressure, the normalized g-function on (k+1)-words, and the
equilibrium state as a stationary k-step Markov chain.  Cylinder masses
and path sampling are exact in this representation.
"""

from dataclasses import dataclass, field

import numpy as np

from . import sft
from ._power import power_eigenvector
from ._rng import SplitMix64

MAX_POTENTIAL_MEMORY = 12
G_SUM_TOL = 1e-10


@dataclass(frozen=True)
class LocallyConstantPotential:
    """Real-valued function of the first k symbols of a sequence."""

    memory: int
    values: dict

    def __post_init__(self):
        if not 1 <= self.memory <= MAX_POTENTIAL_MEMORY:
            raise ValueError(f"potential memory must be in [1, {MAX_POTENTIAL_MEMORY}]")
        object.__setattr__(
            self, "values", {sft.word(w): float(v) for w, v in self.values.items()})

    def __call__(self, w):
        return self.values[tuple(w[: self.memory])]

    @classmethod
    def constant(cls, S, value=0.0, memory=1):
        vals = {w: value for w in sft.enumerate_words(S, memory)}
        return cls(memory, vals)

    @classmethod
    def bernoulli(cls, probs):
        probs = np.asarray(probs, dtype=float)
        if (probs <= 0).any():
            raise ValueError("bernoulli weights must be positive")
        probs = probs / probs.sum()
        return cls(1, {(i,): float(np.log(p)) for i, p in enumerate(probs)})

    @classmethod
    def markov(cls, transition):
        """Potential log P[a, b] of a stochastic matrix, memory 2."""
        P = np.asarray(transition, dtype=float)
        vals = {(a, b): float(np.log(P[a, b]))
                for a in range(P.shape[0]) for b in range(P.shape[1])
                if P[a, b] > 0}
        return cls(2, vals)

    def padded_to(self, k, S):
        """Same potential represented on k-words (k >= memory)."""
        if k < self.memory:
            raise ValueError("cannot shrink potential memory")
        if k == self.memory:
            return self
        vals = {w: self(w) for w in sft.enumerate_words(S, k)}
        return LocallyConstantPotential(k, vals)


def ruelle_matrix(pot, S):
    """Transfer matrix of a memory-k potential on admissible k-words.

    Rows index the preimage words, columns the source words: the entry at
    (target y, source w) is exp(psi(y)) exactly when y = (a,) + w[:k-1]
    with a -> w[0] admissible, so applying the operator to a function is
    M.T @ f and each column sums over the preimages of its word.  A
    potential that is already the log of a g-function therefore gives
    column sums 1 and spectral radius 1.  The matrix is irreducible iff
    the adjacency matrix is.
    """
    k = pot.memory
    words = sft.enumerate_words(S, k)
    index = {w: i for i, w in enumerate(words)}
    M = np.zeros((len(words), len(words)))
    for w in words:
        for a in range(S.q):
            if not S.allows(a, w[0]):
                continue
            y = (a,) + w[:-1]
            if y not in index:
                continue
            try:
                M[index[y], index[w]] = np.exp(pot(y))
            except KeyError as exc:
                raise ValueError(f"potential missing value for word {y}") from exc
    return M


def pf_eigendata(M, tol=1e-12, maxiter=100_000):
    """Perron-Frobenius eigendata of an irreducible nonnegative matrix.

    Returns (rho, right, left) with M right = rho right, left M = rho left,
    both strictly positive, left summing to 1 and <right, left> = 1.
    The sup-norm residual of each eigenpair is certified to tol * rho.
    """
    M = np.asarray(M, dtype=float)
    if (M < 0).any():
        raise ValueError("matrix must be nonnegative")
    support = (M > 0).astype(np.int64)
    if not sft.check_irreducible(sft.AdjacencyMatrix(support)):
        raise ValueError("matrix must be irreducible")
    h, _ = sft.period_and_classes(sft.AdjacencyMatrix(support))
    rho, right = power_eigenvector(lambda v: M @ v, M.shape[0], h, tol, maxiter)
    rho_l, left = power_eigenvector(lambda v: M.T @ v, M.shape[0], h, tol, maxiter)
    # two-sided Rayleigh quotient: error is quadratic in the residual
    rho = float(left @ (M @ right) / (left @ right))
    right = right / (right @ left)
    return rho, right, left


@dataclass(frozen=True)
class GibbsModel:
    """Equilibrium state of a locally constant potential.

    Stored as the k-word Markov chain induced by the g-function: this
    makes path sampling and cylinder masses exact.  eigenfunction_h is
    scaled so <h, eta> = 1 with eta a probability vector; the stationary
    law is mu = h * eta pointwise.
    """

    system: sft.SymbolicSystem
    potential: LocallyConstantPotential
    words: tuple
    word_index: dict = field(repr=False)
    matrix: np.ndarray = field(repr=False)
    pressure: float
    eigenfunction_h: np.ndarray = field(repr=False)
    eigenmeasure_eta: np.ndarray = field(repr=False)
    g: dict = field(repr=False)
    stationary: np.ndarray = field(repr=False)

    @property
    def memory(self):
        return self.potential.memory

    def g_value(self, y):
        """g on the (k+1)-word y (first k+1 symbols are used)."""
        return self.g[tuple(y[: self.memory + 1])]

    def mu_word(self, w):
        """Stationary mass of the k-word w."""
        return float(self.stationary[self.word_index[tuple(w)]])

    def cylinder_mass(self, w):
        """Exact equilibrium mass of the cylinder [w]."""
        w = sft.word(w)
        k = self.memory
        if not self.system.is_admissible(w):
            return 0.0
        if len(w) >= k:
            mass = self.mu_word(w[len(w) - k:])
            for i in range(len(w) - k):
                mass *= self.g[w[i:i + k + 1]]
            return mass
        return sum(self.stationary[i] for i, v in enumerate(self.words)
                   if v[: len(w)] == w)

    def preimage_symbols(self, w):
        """Symbols a with (a,) + w admissible."""
        return [a for a in range(self.system.q) if self.system.allows(a, w[0])]


def build_gibbs_model(pot, S, tol=1e-12, maxiter=100_000):
    """Construct the GibbsModel for a potential on a symbolic system.

    With the row = preimage orientation of ruelle_matrix, the operator
    eigenfunction h is the left eigenvector and the eigenmeasure eta the
    right one; they are rescaled so eta is a probability vector and
    <h, eta> = 1.
    """
    M = ruelle_matrix(pot, S)
    rho, eta, h_vec = pf_eigendata(M, tol=tol, maxiter=maxiter)
    scale = eta.sum()
    eta = eta / scale
    h_vec = h_vec * scale
    return _normalize_to_g(pot, S, M, rho, h_vec, eta)


def _normalize_to_g(pot, S, M, rho, h_vec, eta):
    """Assemble g, mu and the model from transfer eigendata."""
    if h_vec.min() <= 0.0:
        raise ValueError("transfer eigenfunction has a nonpositive entry")
    k = pot.memory
    words = tuple(sft.enumerate_words(S, k))
    index = {w: i for i, w in enumerate(words)}
    g = {}
    for y in sft.enumerate_words(S, k + 1):
        head, tail = y[:k], y[1:]
        g[y] = float(np.exp(pot(head)) * h_vec[index[head]] / (rho * h_vec[index[tail]]))
    # certificate: preimage sums of g must be 1
    worst = 0.0
    for w in words:
        s = sum(g[(a,) + w] for a in range(S.q) if S.allows(a, w[0]))
        worst = max(worst, abs(s - 1.0))
    if worst > G_SUM_TOL:
        raise ValueError(f"g-function identity violated by {worst:.3e}")
    mu = h_vec * eta
    mu = mu / mu.sum()
    return GibbsModel(
        system=S, potential=pot, words=words, word_index=index, matrix=M,
        pressure=float(np.log(rho)), eigenfunction_h=h_vec,
        eigenmeasure_eta=eta, g=g, stationary=mu)


def normalize_to_g(pot, S, M, rho, h_vec, eta):
    """Public wrapper kept separate so eigendata can be reused."""
    return _normalize_to_g(pot, S, M, rho, h_vec, eta)


def gibbs_ratio_check(model, n):
    """Extremes of mu([I]) / g^(n)(x) over all n-cylinders I.

    x is the canonical point of I: the cylinder word extended by its
    lexicographically smallest admissible continuation, far enough that
    all n g-factors are defined.
    """
    S = model.system
    k = model.memory
    ratios = []
    for w in sft.enumerate_words(S, n):
        x = list(w)
        while len(x) < n + k:
            x.append(min(b for b in range(S.q) if S.allows(x[-1], b)))
        gn = 1.0
        for j in range(n):
            gn *= model.g[tuple(x[j:j + k + 1])]
        ratios.append(model.cylinder_mass(w) / gn)
    return min(ratios), max(ratios)


def forward_kernel(model):
    """Forward k-word transition probabilities of the equilibrium chain.

    P(w -> shift(w)+(b,)) = mu([w + (b,)]) / mu([w]).
    """
    S, k = model.system, model.memory
    probs = {}
    for w in model.words:
        row = []
        for b in range(S.q):
            if not S.allows(w[-1], b):
                continue
            nxt = w[1:] + (b,)
            if nxt not in model.word_index:
                continue
            row.append((b, model.cylinder_mass(w + (b,)) / model.mu_word(w)))
        probs[w] = row
    return probs


def sample_path(model, n, seed):
    """One word of length n drawn from the equilibrium chain.

    The initial k-word follows the stationary law; successive symbols
    follow the forward kernel.  Deterministic given the seed.
    """
    k = model.memory
    if n < k:
        raise ValueError("path length must be at least the potential memory")
    rng = SplitMix64(seed)
    kernel = forward_kernel(model)
    cum = np.cumsum(model.stationary)
    w = list(model.words[rng.choice(cum)])
    while len(w) < n:
        row = kernel[tuple(w[-k:])]
        cumrow = np.cumsum([p for _, p in row])
        w.append(row[rng.choice(cumrow)][0])
    return tuple(w)
