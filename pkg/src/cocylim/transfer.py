"""Discretized transfer operators on (word, projective grid) states.

The extended operator acts on functions of a one-sided sequence and a
line: each application sums over shift preimages y with weight
g(y) * ||A(y)* u / ||u|| ||^z and moves the line to A(y)* u.  We realize
it as a sparse matrix over (k-word, grid point) states, columns indexed
by the source state, so columns sum to exactly 1 at z = 0 whenever the
grid assignment is stochastic.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.special import ndtri

from . import sft
from ._power import PowerIterationError, power_eigenvector
from ._rng import SplitMix64, derive_seed

COLUMN_SUM_TOL = 1e-10
PERIPHERAL_TOL = 1e-6
DENSE_EIG_CUTOFF = 1200


class TransferSpectrumError(RuntimeError):
    """Raised when the peripheral spectrum fails its structural contract."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass(frozen=True)
class ProjectiveGrid:
    """Finite point set on projective space with its assignment rule.

    d = 1 is a single point; d = 2 uses N uniformly spaced line angles in
    [0, pi) with linear interpolation between neighbors (stochastic by
    construction); d >= 3 uses a deterministic low-discrepancy point set
    with nearest-point assignment.
    """

    dimension: int
    resolution: int
    points: np.ndarray = field(repr=False)
    covering_radius: float
    kind: str

    @property
    def size(self):
        return self.points.shape[0]


def _canonical_rows(P):
    nrm = np.linalg.norm(P, axis=1, keepdims=True)
    P = P / nrm
    for row in P:
        for c in row:
            if abs(c) > 1e-14:
                if c < 0:
                    row *= -1.0
                break
    return P


def build_grid(d, N):
    """Deterministic projective grid with reported covering radius."""
    if d < 1 or N < 1:
        raise ValueError("need d >= 1 and N >= 1")
    if d == 1:
        return ProjectiveGrid(1, 1, np.ones((1, 1)), 0.0, "point")
    if d == 2:
        ang = np.arange(N) * np.pi / N
        pts = _canonical_rows(np.column_stack([np.cos(ang), np.sin(ang)]))
        return ProjectiveGrid(2, N, pts, float(np.sin(np.pi / (2 * N))), "angles")
    # Halton points in (0,1)^d mapped through the normal quantile to the
    # sphere; quasi-uniform and reproducible.
    pts = _canonical_rows(ndtri(_halton(N, d)))
    cover = _covering_radius_estimate(pts)
    return ProjectiveGrid(d, N, pts, cover, "halton")


def _halton(n, d):
    primes = [2, 3, 5, 7, 11, 13, 17, 19][:d]
    out = np.empty((n, d))
    for j, b in enumerate(primes):
        seq = np.zeros(n)
        denom = 1.0
        idx = np.arange(1, n + 1)
        rem = idx.copy()
        while rem.max() > 0:
            denom *= b
            seq += (rem % b) / denom
            rem //= b
        out[:, j] = seq
    return np.clip(out, 1e-12, 1 - 1e-12)


def _covering_radius_estimate(pts, probes=4096, seed=20240):
    """Max distance from deterministic probe lines to the grid."""
    d = pts.shape[1]
    rng = SplitMix64(seed)
    raw = np.array([[rng.uniform() for _ in range(d)] for _ in range(probes)])
    probes_v = _canonical_rows(ndtri(np.clip(raw, 1e-12, 1 - 1e-12)))
    dots = np.abs(probes_v @ pts.T)
    sin2 = np.clip(1.0 - np.minimum(dots, 1.0) ** 2, 0.0, 1.0)
    return float(np.sqrt(sin2.min(axis=1)).max())


@dataclass(frozen=True)
class DiscretizedOperator:
    """Sparse realization of the perturbed operator at a real parameter z.

    matrix[target, source]: target is the preimage state, source the
    state the operator is evaluated at, so applying the operator to a
    function f is matrix.T @ f and evolving a measure is matrix @ nu.
    """

    words: tuple
    word_index: dict = field(repr=False)
    grid: ProjectiveGrid
    z: float
    matrix: sp.csr_matrix = field(repr=False)
    gibbs: object = field(repr=False)
    cocycle: object = field(repr=False)
    period: int
    column_defect: float
    assignment_defect: float

    @property
    def size(self):
        return self.matrix.shape[0]

    def state(self, i):
        return self.words[i // self.grid.size], i % self.grid.size

    def state_index(self, w, j):
        return self.word_index[tuple(w)] * self.grid.size + j

    def apply(self, f):
        return self.matrix.T @ f

    def to_coo_text(self, path):
        """Write (row, col, value) triples for external inspection."""
        coo = self.matrix.tocoo()
        with open(path, "w") as fh:
            fh.write(f"# {self.size} x {self.size}, z={self.z!r}\n")
            for r, c, v in zip(coo.row, coo.col, coo.data):
                fh.write(f"{int(r)} {int(c)} {float(v)!r}\n")


def grid_assign(grid, v):
    """Split a line among grid points; weights sum to 1.

    d=2 interpolates linearly between the two neighboring angles; other
    dimensions assign all mass to the nearest point.
    """
    if grid.dimension == 1:
        return [(0, 1.0)]
    if grid.dimension == 2:
        N = grid.resolution
        phi = np.arctan2(v[1], v[0]) % np.pi
        pos = phi / (np.pi / N)
        j0 = int(pos) % N
        frac = pos - int(pos)
        if frac <= 1e-15:
            return [(j0, 1.0)]
        return [(j0, 1.0 - frac), ((j0 + 1) % N, frac)]
    dots = np.abs(grid.points @ (v / np.linalg.norm(v)))
    return [(int(np.argmax(dots)), 1.0)]


def build_operator(gibbs_model, A, grid, z=0.0, max_covering=None):
    """Assemble the sparse operator for a potential/cocycle pair.

    Requires potential memory k >= cocycle memory m (pad the potential
    first).  At z = 0 every column sums to 1 up to COLUMN_SUM_TOL; the
    defect is certified and stored.
    """
    S = gibbs_model.system
    k, m, d = gibbs_model.memory, A.memory, A.dimension
    if k < m:
        raise ValueError(f"potential memory {k} < cocycle memory {m}; pad first")
    if grid.dimension != d:
        raise ValueError("grid dimension does not match the cocycle")
    if max_covering is not None and grid.covering_radius > max_covering:
        raise ValueError(
            f"grid too coarse: covering radius {grid.covering_radius:.3e} "
            f"> {max_covering:.3e}")
    words = gibbs_model.words
    N = grid.size
    n_states = len(words) * N
    rows, cols, vals = [], [], []
    assignment_defect = 0.0
    for wi, w in enumerate(words):
        for a in range(S.q):
            if not S.allows(a, w[0]):
                continue
            src_word = (a,) + w[:-1]
            ti = gibbs_model.word_index[src_word]
            gval = gibbs_model.g[(a,) + w]
            G = A.generators[((a,) + w)[:m]]
            imgs = grid.points @ G            # rows: A(y)* u_j for each grid point
            norms = np.linalg.norm(imgs, axis=1)
            weights = gval * norms**z if z != 0.0 else np.full(N, gval)
            for j in range(N):
                tgt_assign = grid_assign(grid, imgs[j])
                src = wi * N + j
                for jj, frac in tgt_assign:
                    rows.append(ti * N + jj)
                    cols.append(src)
                    vals.append(weights[j] * frac)
                if grid.dimension >= 3:
                    u_img = imgs[j] / norms[j]
                    jj = tgt_assign[0][0]
                    dev = np.sqrt(max(0.0, 1.0 - min(1.0, abs(
                        u_img @ grid.points[jj]))**2))
                    assignment_defect = max(assignment_defect, dev)
    M = sp.csr_matrix(
        sp.coo_matrix((vals, (rows, cols)), shape=(n_states, n_states)))
    col_sums = np.asarray(M.sum(axis=0)).ravel()
    if z == 0.0:
        defect = float(np.abs(col_sums - 1.0).max())
        if defect > COLUMN_SUM_TOL:
            raise AssertionError(f"operator lost mass: column defect {defect:.3e}")
    else:
        defect = float("nan")
    return DiscretizedOperator(
        words=words, word_index=gibbs_model.word_index, grid=grid, z=float(z),
        matrix=M, gibbs=gibbs_model, cocycle=A, period=S.period,
        column_defect=defect, assignment_defect=assignment_defect)


@dataclass(frozen=True)
class SpectralResult:
    rho: float
    right_vector: np.ndarray = field(repr=False)
    left_vector: np.ndarray = field(repr=False)
    residual: float
    subleading_modulus: float
    peripheral: tuple
    method: str


def _eigenvalues_near_circle(op, count):
    """Largest-modulus eigenvalues of the operator matrix."""
    M = op.matrix
    n = M.shape[0]
    if n <= DENSE_EIG_CUTOFF:
        lam = np.linalg.eigvals(M.toarray())
        return lam[np.argsort(-np.abs(lam))][:count], "dense"
    k = min(count, n - 2)
    v0 = np.ones(n)
    lam = spla.eigs(M, k=k, which="LM", v0=v0, return_eigenvectors=False,
                    maxiter=5000)
    return lam[np.argsort(-np.abs(lam))], "arnoldi"


def spectral_radius(op, tol=1e-12, maxiter=200_000, subspace=None,
                    want_gap=True):
    """Leading eigendata of a discretized operator.

    Power iteration with h-fold averaging (h the base period) gives the
    spectral radius, the right eigenfunction, and the left eigenvector
    normalized to a probability vector (the discrete eigenmeasure).  The
    subleading modulus is estimated from a small set of largest-modulus
    eigenvalues unless want_gap is False (derivative stencils only need
    rho).
    """
    M = op.matrix
    h = op.period
    try:
        rho_r, right = power_eigenvector(lambda v: M.T @ v, op.size, h, tol, maxiter)
        rho_l, left = power_eigenvector(lambda v: M @ v, op.size, h, tol, maxiter)
    except PowerIterationError as exc:
        raise TransferSpectrumError(
            f"spectral radius iteration failed at z={op.z!r}: {exc}",
            diagnostics={"residual": exc.residual, "iterations": exc.iterations},
        ) from exc
    # two-sided Rayleigh quotient: error is quadratic in the residual
    rho = float(left @ (M.T @ right) / (left @ right))
    residual = float(np.max(np.abs(M @ left - rho * left)))
    lam, method, sub = np.array([]), "skipped", float("nan")
    if want_gap:
        count = subspace or max(8, 2 * h)
        try:
            lam, method = _eigenvalues_near_circle(op, count)
            mods = np.abs(lam)
            sub = float(mods[h]) if len(mods) > h else float("nan")
        except Exception:  # ARPACK failures leave the gap unreported
            lam, method, sub = np.array([]), "unavailable", float("nan")
    return SpectralResult(
        rho=float(rho), right_vector=right, left_vector=left,
        residual=residual, subleading_modulus=sub,
        peripheral=tuple(lam[: 2 * h]), method=method)


def peripheral_spectrum(op, gap_hint=0.05):
    """Eigenvalue estimates of modulus near 1 for the z = 0 operator.

    Validates the structural contract: exactly h estimates, each within
    PERIPHERAL_TOL of an h-th root of unity and each simple.  Extra
    peripheral mass raises TransferSpectrumError with diagnostics; that
    signals either a grid artifact or a cocycle failing typicality.
    """
    if op.z != 0.0:
        raise ValueError("peripheral spectrum is defined for the z=0 operator")
    h = op.period
    count = max(8, 2 * h)
    lam, method = _eigenvalues_near_circle(op, count)
    mods = np.abs(lam)
    cutoff = 1.0 - gap_hint / 2.0
    peripheral = lam[mods >= cutoff]
    roots = np.exp(2j * np.pi * np.arange(h) / h)
    diagnostics = {"estimates": [complex(x) for x in lam],
                   "cutoff": cutoff, "method": method}
    if len(peripheral) != h:
        raise TransferSpectrumError(
            f"expected {h} peripheral eigenvalues, found {len(peripheral)} "
            f"above modulus {cutoff}: grid artifact or typicality failure",
            diagnostics)
    matched = []
    for r in roots:
        dist = np.abs(peripheral - r)
        i = int(np.argmin(dist))
        if dist[i] > PERIPHERAL_TOL:
            raise TransferSpectrumError(
                f"peripheral estimate {peripheral[i]} is {dist[i]:.2e} away "
                f"from the root of unity {r}", diagnostics)
        near = np.sum(np.abs(lam - r) <= PERIPHERAL_TOL)
        if near != 1:
            raise TransferSpectrumError(
                f"eigenvalue at {r} is not simple ({near} estimates nearby)",
                diagnostics)
        matched.append(complex(peripheral[i]))
    return matched


def block_structure_check(op, classes=None):
    """Verify the block-cyclic pattern of the operator matrix.

    States are classed by the cyclic class of their word's first symbol.
    Every nonzero entry must map a source in class p to a target in class
    p - 1 (mod h), equivalently the operator carries the indicator of
    class p to the indicator of class p + 1 (mod h), with our class
    labels ascending along admissible transitions.
    """
    S = op.gibbs.system
    classes = classes or S.cyclic_classes
    h = len(classes)
    if h == 1:
        return True
    class_of = {}
    for p, cls in enumerate(classes):
        for s in cls:
            class_of[s] = p
    state_class = np.array([class_of[op.words[i // op.grid.size][0]]
                            for i in range(op.size)])
    coo = op.matrix.tocoo()
    if not np.all((state_class[coo.col] - state_class[coo.row]) % h == 1):
        return False
    # indicator cycling, exact at z=0 thanks to stochastic columns
    for p in range(h):
        chi = (state_class == p).astype(float)
        img = op.apply(chi)
        expect = (state_class == (p + 1) % h).astype(float)
        if np.abs(img - expect).max() > 1e-9:
            return False
    return True


def lasota_yorke_estimate(gibbs_model, A, alpha, n, samples=200, seed=0,
                          pair_samples=4, max_contexts=64, max_base_pairs=32):
    """Empirical contraction quantities of the n-th operator iterate.

    Estimates w_hat: the supremum over base points and line pairs of the
    preimage sum of g^(n)(y) times the alpha-power of the projective
    contraction ratio, and tau_hat: the same with the two trajectories
    driven by the same preimage prefix over two base points sharing their
    first symbol.  Preimage sums are evaluated by Monte Carlo: prefixes
    are drawn with probability g^(n), so the plain sample mean is
    unbiased for the weighted sum.
    """
    from .cocycle import projective_distance
    from .kernels.chain import build_prepend_chain

    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    if n > 30:
        raise ValueError("n capped at 30")
    S = gibbs_model.system
    chain = build_prepend_chain(gibbs_model, A)
    d = A.dimension
    rng = SplitMix64(derive_seed(seed, 101))
    pairs = []
    while len(pairs) < pair_samples:
        u = np.array([rng.uniform() - 0.5 for _ in range(d)])
        v = np.array([rng.uniform() - 0.5 for _ in range(d)])
        nu, nv = np.linalg.norm(u), np.linalg.norm(v)
        if min(nu, nv) < 1e-3:
            continue
        u, v = u / nu, v / nv
        if d == 1 or projective_distance(u, v) > 1e-3:
            pairs.append((u, v))

    L_tau = max(chain.L0, 2)
    contexts = sft.enumerate_words(S, L_tau)
    if len(contexts) > max_contexts:
        stride = len(contexts) // max_contexts + 1
        contexts = contexts[::stride]
    ctx_chain_index = [chain.ctx_index[c[:chain.L0]] for c in contexts]

    def ratio_mean(ci, base_words, u, v, tag):
        """Mean over sampled prefixes of the alpha-power distance ratio.

        base_words has one entry for w_hat (pair of lines) or two for
        tau_hat (same line, two base words).
        """
        acc = 0.0
        for s in range(samples):
            stream = SplitMix64(derive_seed(seed, tag, ci, s))
            prefix = _draw_prefix(chain, ctx_chain_index[ci], n, stream)
            if len(base_words) == 1:
                Mn = _adjoint_prefix_product(A, prefix, base_words[0])
                acc += (projective_distance(Mn @ u, Mn @ v)
                        / projective_distance(u, v)) ** alpha
            else:
                M1 = _adjoint_prefix_product(A, prefix, base_words[0])
                M2 = _adjoint_prefix_product(A, prefix, base_words[1])
                acc += projective_distance(M1 @ u, M2 @ u) ** alpha
        return acc / samples

    if d >= 2:
        w_hat = max(
            ratio_mean(ci, (ctx,), u, v, 1000 + pi)
            for ci, ctx in enumerate(contexts)
            for pi, (u, v) in enumerate(pairs))
    else:
        w_hat = 0.0    # projective space is a point in dimension 1

    base_pairs = [(ci, cj) for ci in range(len(contexts))
                  for cj in range(ci + 1, len(contexts))
                  if contexts[ci][0] == contexts[cj][0]]
    if len(base_pairs) > max_base_pairs:
        stride = len(base_pairs) // max_base_pairs + 1
        base_pairs = base_pairs[::stride]
    tau_hat = 0.0
    for ci, cj in base_pairs:
        rho_xy = sft.word_distance(contexts[ci], contexts[cj], S.theta)
        for pi, (u, _) in enumerate(pairs):
            mean = ratio_mean(ci, (contexts[ci], contexts[cj]), u, None,
                              2000 + 31 * cj + pi)
            tau_hat = max(tau_hat, mean / rho_xy**alpha)
    return w_hat, tau_hat


def _draw_prefix(chain, ctx_index, n, stream):
    """n-word prefix drawn with probability g^(n), newest symbol first."""
    out = []
    ci = ctx_index
    for _ in range(n):
        row_p = chain.prob[ci]
        live = np.flatnonzero(row_p > 0)
        cum = np.cumsum(row_p[live])
        pick = live[stream.choice(cum)]
        out.append(int(chain.sym[ci, pick]))
        ci = int(chain.nctx[ci, pick])
    return list(reversed(out))   # prefix in sequence order


def _adjoint_prefix_product(A, prefix, ctx):
    """Adjoint product over prefix + context, i.e. A^[n] of the glued word."""
    m = A.memory
    w = tuple(prefix) + tuple(ctx)
    n = len(prefix)
    out = np.eye(A.dimension)
    for j in range(n - 1, -1, -1):
        out = A.generators[w[j:j + m]].T @ out
    return out
