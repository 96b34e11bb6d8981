"""Limit laws for matrix cocycles: top Lyapunov exponent by three routes,
CLT variance, distributional CLT check, and the large-deviation rate
function with empirical tails.

Sampling statistics are log-norms of adjoint cocycle products along
equilibrium paths, generated by the prepend walker; spectral quantities
are finite differences of the leading eigenvalue of the discretized
perturbed operator; the Furstenberg route integrates one-step log-norms
against the discrete eigenmeasure.
"""

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev
from scipy.special import ndtr

from ._rng import derive_seed
from .kernels import build_prepend_chain, walk
from .transfer import build_operator, spectral_radius

DEFAULT_DELTA = 1e-3
SIGMA_DEGENERATE = 1e-12


def _unit(u, d):
    if u is None:
        u = np.zeros(d)
        u[0] = 1.0
    u = np.asarray(u, dtype=float)
    return u / np.linalg.norm(u)


def _sample_S(gibbs, A, n, trials, u, seed, chain=None):
    """Per-trial log ||A^[n](x) u|| along equilibrium paths."""
    chain = chain or build_prepend_chain(gibbs, A)
    res = walk(chain, _unit(u, A.dimension), n, trials, seed, [n])
    return res["S"][:, 0]


def lyapunov_mc(gibbs, A, n, trials, u=None, seed=0):
    """Monte Carlo route: mean of (1/n) log ||A^[n](x) u||.

    Returns (estimate, std_error).  Log-norms are accumulated with
    per-step renormalization, so long products cannot overflow.
    """
    k, m = gibbs.memory, A.memory
    if n < 10 * (k + m):
        raise ValueError(f"n must be >= {10 * (k + m)} for this memory")
    if trials < 100:
        raise ValueError("need at least 100 trials")
    S = _sample_S(gibbs, A, n, trials, u, seed)
    vals = S / n
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(trials))


def lyapunov_furstenberg(gibbs, A, op, spectral=None):
    """Eigenmeasure route: integrate one-step log-norms against nu.

    nu is the discrete eigenmeasure (left eigenvector, probability
    normalized) of the z = 0 operator.
    """
    spectral = spectral or spectral_radius(op, want_gap=False)
    nu = spectral.left_vector
    if abs(nu.sum() - 1.0) > 1e-8:
        raise ValueError("eigenmeasure is not normalized")
    S = gibbs.system
    N = op.grid.size
    total = 0.0
    for wi, w in enumerate(op.words):
        block = nu[wi * N:(wi + 1) * N]
        for a in range(S.q):
            if not S.allows(a, w[0]):
                continue
            g = gibbs.g[(a,) + w]
            G = A.generators[((a,) + w)[: A.memory]]
            norms = np.linalg.norm(op.grid.points @ G, axis=1)
            total += g * float(block @ np.log(norms))
    return total


def _rho(gibbs, A, grid, z, tol=1e-12, maxiter=200_000):
    op = build_operator(gibbs, A, grid, z=z)
    return spectral_radius(op, tol=tol, maxiter=maxiter, want_gap=False).rho


def lyapunov_spectral(gibbs, A, grid, delta=DEFAULT_DELTA, tol=1e-12):
    """Spectral route: Richardson-extrapolated central difference of rho.

    delta must lie in [1e-4, 1e-2]; the stencil evaluates rho at
    +-delta and +-delta/2.
    """
    if not 1e-4 <= delta <= 1e-2:
        raise ValueError("delta must lie in [1e-4, 1e-2]")
    rho = {z: _rho(gibbs, A, grid, z, tol=tol)
           for z in (delta, -delta, delta / 2, -delta / 2)}
    d1 = (rho[delta] - rho[-delta]) / (2 * delta)
    d2 = (rho[delta / 2] - rho[-delta / 2]) / delta
    return (4 * d2 - d1) / 3


def variance_spectral(gibbs, A, grid, delta=DEFAULT_DELTA, tol=1e-12):
    """Second derivative of log rho_z at 0 by a five-point stencil.

    Equals rho_0'' - lambda1^2, i.e. the CLT variance without
    pre-normalizing the cocycle.  Small negative values within 1e-8 are
    clamped to zero; anything lower is reported as a numerical failure.
    """
    if not 1e-4 <= delta <= 1e-2:
        raise ValueError("delta must lie in [1e-4, 1e-2]")
    L = {z: np.log(_rho(gibbs, A, grid, z, tol=tol))
         for z in (2 * delta, delta, 0.0, -delta, -2 * delta)}
    val = (-L[2 * delta] + 16 * L[delta] - 30 * L[0.0]
           + 16 * L[-delta] - L[-2 * delta]) / (12 * delta**2)
    if val < -1e-8:
        raise RuntimeError(f"variance stencil returned {val:.3e} < -1e-8")
    return max(val, 0.0)


def variance_mc(gibbs, A, n, trials, lambda1, u=None, seed=0):
    """Monte Carlo variance: (1/n) mean of (log||A^[n]u|| - n lambda1)^2."""
    S = _sample_S(gibbs, A, n, trials, u, seed)
    vals = (S - n * lambda1) ** 2 / n
    return float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(trials))


@dataclass(frozen=True)
class CltResult:
    statistic: float
    kind: str                  # "ks" or "degenerate-max"
    n: int
    trials: int
    samples: np.ndarray = field(repr=False)


def clt_test(gibbs, A, n, trials, lambda1, sigma2, u=None, seed=0):
    """Kolmogorov-Smirnov distance of the normalized statistic to its limit.

    Compares (log||A^[n]u|| - n lambda1)/sqrt(n) against N(0, sigma2).
    When sigma2 is numerically zero the limit is degenerate and the
    maximum |statistic| is returned instead.
    """
    if n < 500:
        raise ValueError("CLT check needs n >= 500")
    S = _sample_S(gibbs, A, n, trials, u, seed)
    stats = (S - n * lambda1) / np.sqrt(n)
    if sigma2 <= SIGMA_DEGENERATE:
        return CltResult(float(np.abs(stats).max()), "degenerate-max",
                         n, trials, stats)
    z = np.sort(stats) / np.sqrt(sigma2)
    cdf = ndtr(z)
    i = np.arange(1, trials + 1)
    ks = float(np.maximum(i / trials - cdf, cdf - (i - 1) / trials).max())
    return CltResult(ks, "ks", n, trials, stats)


@dataclass(frozen=True)
class LdpRate:
    """Log-moment curve and its Legendre transform on a node set."""

    eta: float
    lambda1: float
    t_nodes: np.ndarray = field(repr=False)
    lmgf: np.ndarray = field(repr=False)        # Lambda(t) = log rho_t - t*lambda1
    eps_nodes: np.ndarray = field(repr=False)
    rate: np.ndarray = field(repr=False)        # Lambda*(eps)
    convex_defect: float
    halvings: int
    endpoint_slope: float


def _refine_max(ts, phis, i, lo, hi):
    """Quadratic refinement of a discrete maximum, clipped to [lo, hi]."""
    if i == 0 or i == len(ts) - 1:
        return ts[i], phis[i]
    t0, t1, t2 = ts[i - 1], ts[i], ts[i + 1]
    f0, f1, f2 = phis[i - 1], phis[i], phis[i + 1]
    denom = (t0 - t1) * (t0 - t2) * (t1 - t2)
    a = (t2 * (f1 - f0) + t1 * (f0 - f2) + t0 * (f2 - f1)) / denom
    b = (t2**2 * (f0 - f1) + t1**2 * (f2 - f0) + t0**2 * (f1 - f2)) / denom
    if a >= 0:
        return t1, f1
    tstar = min(max(-b / (2 * a), max(lo, t0)), min(hi, t2))
    c = f1 - a * t1**2 - b * t1
    return tstar, a * tstar**2 + b * tstar + c


def ldp_rate(gibbs, A, grid, lambda1, eta=0.5, n_nodes=11, tol=1e-12,
             max_halvings=6, convex_tol=1e-6):
    """Rate function: Lambda on symmetric nodes and Lambda* by Legendre.

    Lambda(t) = log rho_t - t*lambda1 with Lambda(0) pinned to 0 exactly
    (the raw log rho_0 is subtracted from every node, cancelling solver
    bias).  eta shrinks by halving whenever a spectral evaluation fails
    or the sampled curve is non-convex beyond tolerance.  Lambda* is a
    discrete maximum over the t >= 0 nodes plus one local quadratic
    refinement, evaluated on an epsilon grid spanning the achieved
    slopes; the endpoint slope is reported rather than extrapolated.
    """
    if n_nodes < 5 or n_nodes % 2 == 0:
        raise ValueError("n_nodes must be odd and >= 5")
    halvings = 0
    while True:
        ts = np.linspace(-eta, eta, n_nodes)
        try:
            lam = np.array([np.log(_rho(gibbs, A, grid, t, tol=tol)) - t * lambda1
                            for t in ts])
        except Exception:
            if halvings >= max_halvings:
                raise
            eta, halvings = eta / 2, halvings + 1
            continue
        lam = lam - lam[n_nodes // 2]      # Lambda(0) = 0 exactly
        second = lam[:-2] - 2 * lam[1:-1] + lam[2:]
        defect = float(-second.min())
        if defect > convex_tol:
            if halvings >= max_halvings:
                raise RuntimeError(
                    f"Lambda samples non-convex (defect {defect:.3e}); "
                    "likely a grid artifact")
            eta, halvings = eta / 2, halvings + 1
            continue
        break
    pos = ts >= 0.0
    tpos, lpos = ts[pos], lam[pos]
    slope_end = (lpos[-1] - lpos[-2]) / (tpos[-1] - tpos[-2])
    eps_nodes = np.linspace(0.0, max(slope_end, 1e-12), n_nodes)
    rate = np.empty_like(eps_nodes)
    for j, eps in enumerate(eps_nodes):
        if eps == 0.0:
            rate[j] = 0.0
            continue
        phi = tpos * eps - lpos
        i = int(np.argmax(phi))
        rate[j] = max(_refine_max(tpos, phi, i, 0.0, eta)[1], 0.0)
    return LdpRate(eta=eta, lambda1=lambda1, t_nodes=ts, lmgf=lam,
                   eps_nodes=eps_nodes, rate=rate,
                   convex_defect=max(defect, 0.0), halvings=halvings,
                   endpoint_slope=float(slope_end))


def rate_at(rate_info, eps):
    """Lambda*(eps) from stored nodes with quadratic refinement."""
    pos = rate_info.t_nodes >= 0.0
    tpos, lpos = rate_info.t_nodes[pos], rate_info.lmgf[pos]
    phi = tpos * eps - lpos
    i = int(np.argmax(phi))
    return max(_refine_max(tpos, phi, i, 0.0, rate_info.eta)[1], 0.0)


def tilt_parameters(rate_info, eps):
    """Optimal exponential tilts for the upper and lower eps-tails."""
    pos = rate_info.t_nodes >= 0.0
    tpos, lpos = rate_info.t_nodes[pos], rate_info.lmgf[pos]
    phi = tpos * eps - lpos
    t_plus = _refine_max(tpos, phi, int(np.argmax(phi)), 0.0, rate_info.eta)[0]
    neg = rate_info.t_nodes <= 0.0
    # lower tail: maximize s*eps - Lambda(-s) over s = -t in [0, eta]
    svals = -rate_info.t_nodes[neg][::-1]
    lneg = rate_info.lmgf[neg][::-1]
    psi = svals * eps - lneg
    i = int(np.argmax(psi))
    sstar = _refine_max(svals, psi, i, 0.0, rate_info.eta)[0]
    return float(t_plus), float(-sstar)


@dataclass(frozen=True)
class EmpiricalRate:
    n: int
    p_hat: float
    rate: float | None
    hits_upper: int
    hits_lower: int
    std_error: float
    usable: bool


def ldp_empirical(gibbs, A, n_list, eps, lambda1, trials, seed, u=None,
                  grid=None, rate_info=None, tilt=True, statistic="vector"):
    """Empirical tail rates -(1/n) log P(|log||A^[n]u|| - n lambda1| > n eps).

    With tilt=True (the default) the upper and lower tails are estimated
    by guided importance sampling: prepend proposals are locally tilted
    by ||A(y)* v||^t times the eigenfunction of the discretized operator
    at the conjugate parameter t, and the exact likelihood ratio
    prod g/q is carried along, so the estimator is unbiased however
    rough the guide.  Plain counting (tilt=False) is exact but cannot
    see tails beyond a few sigma.

    statistic="norm" replaces the vector norm by the operator norm of
    the full adjoint product.

    An n with zero hits in both tails is marked unusable.
    """
    n_list = sorted(int(n) for n in n_list)
    chain = build_prepend_chain(gibbs, A)
    d = A.dimension
    u = _unit(u, d)
    track = statistic == "norm"

    def collect(t_par, guide, tag):
        res = walk(chain, u, n_list[-1], trials, derive_seed(seed, tag),
                   n_list, tilt_t=t_par, guide=guide,
                   grid_n=(grid.resolution if grid is not None
                           and grid.dimension == 2 else (1 if grid is not None
                                                         and grid.dimension == 1 else 0)),
                   grid_points=(grid.points if grid is not None
                                and grid.dimension >= 3 else None),
                   track_matrix=track)
        if track:
            sv = np.linalg.svd(res["mats"], compute_uv=False)[..., 0]
            S = res["mat_logs"] + np.log(sv)
        else:
            S = res["S"]
        return S, res["logw"]

    runs = []
    if tilt:
        if rate_info is None:
            if grid is None:
                raise ValueError("tilted estimation needs a grid")
            rate_info = ldp_rate(gibbs, A, grid, lambda1)
        t_plus, t_minus = tilt_parameters(rate_info, eps)
        for tag, t_par, side in ((11, t_plus, +1), (12, t_minus, -1)):
            guide = None
            if grid is not None and t_par != 0.0:
                op = build_operator(gibbs, A, grid, z=t_par)
                gv = spectral_radius(op, want_gap=False).right_vector
                guide = gv / gv.mean()
            runs.append((collect(t_par, guide, tag), side))
    else:
        runs.append((collect(0.0, None, 10), 0))

    out = []
    for j, n in enumerate(n_list):
        p_hat, var_acc, hits_up, hits_lo = 0.0, 0.0, 0, 0
        for (S, logw), side in runs:
            dev = S[:, j] - n * lambda1
            if side > 0:
                hit = dev > n * eps
                hits_up += int(hit.sum())
            elif side < 0:
                hit = dev < -n * eps
                hits_lo += int(hit.sum())
            else:
                hit_u = dev > n * eps
                hit_l = dev < -n * eps
                hits_up += int(hit_u.sum())
                hits_lo += int(hit_l.sum())
                hit = hit_u | hit_l
            contrib = np.where(hit, np.exp(logw[:, j]), 0.0)
            p_hat += float(contrib.mean())
            var_acc += float(contrib.var(ddof=1) / trials)
        usable = (hits_up + hits_lo) > 0
        rate = float(-np.log(p_hat) / n) if usable and p_hat > 0 else None
        out.append(EmpiricalRate(n, p_hat, rate, hits_up, hits_lo,
                                 float(np.sqrt(var_acc)), usable))
    return out


def ldp_norm_tail(gibbs, A, n_list, eps, lambda1, trials, seed, u=None,
                  grid=None, rate_info=None, tilt=True):
    """Tail rates for the operator-norm statistic log ||A^[n](x)||."""
    return ldp_empirical(gibbs, A, n_list, eps, lambda1, trials, seed, u=u,
                         grid=grid, rate_info=rate_info, tilt=tilt,
                         statistic="norm")


@dataclass(frozen=True)
class ExponentCurve:
    t_nodes: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    cheb_coeffs: np.ndarray = field(repr=False)
    tail_start: int
    tail_max: float
    decay_ratio: float | None


def exponent_curve(A, family, t_nodes, grid, delta=DEFAULT_DELTA):
    """Exponent along a family of equilibrium states, with a smoothness
    diagnostic.

    family[i] is the GibbsModel at t_nodes[i]; the exponent is computed
    by the spectral route at every node.  The diagnostic fits Chebyshev
    coefficients over the node interval: geometric decay of their
    magnitudes is consistent with analyticity (reported, not asserted).
    """
    t_nodes = np.asarray(t_nodes, dtype=float)
    if len(family) != len(t_nodes):
        raise ValueError("family and t_nodes must align")
    vals = np.array([lyapunov_spectral(gm, A, grid, delta=delta)
                     for gm in family])
    span = t_nodes[-1] - t_nodes[0]
    x = 2 * (t_nodes - t_nodes[0]) / span - 1.0
    deg = min(len(t_nodes) - 1, 10)
    coeffs = chebyshev.chebfit(x, vals, deg)
    mags = np.abs(coeffs)
    tail_start = 2
    tail = mags[tail_start:]
    decay = None
    big = mags[mags > 1e-14]
    if len(big) >= 3:
        ratios = big[1:] / big[:-1]
        decay = float(np.exp(np.mean(np.log(ratios))))
    return ExponentCurve(t_nodes, vals, coeffs, tail_start,
                         float(tail.max(initial=0.0)), decay)


@dataclass
class LimitReport:
    """Aggregated limit-law results for one experiment."""

    lambda1_spectral: float | None = None
    lambda1_mc: tuple | None = None          # (estimate, std_error, n, trials)
    lambda1_furstenberg: float | None = None
    grid_budget: float | None = None
    sigma2_spectral: float | None = None
    sigma2_mc: float | None = None
    clt: dict | None = None
    ldp: dict | None = None
    skipped: dict = field(default_factory=dict)
    seeds: dict = field(default_factory=dict)
    grid_meta: dict = field(default_factory=dict)
