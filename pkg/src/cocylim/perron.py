"""Finite-dimensional Perron-Frobenius structure theory.

Block-cyclic normal form of irreducible nonnegative matrices, the
rotation symmetry of block-cyclic spectra, and the rank-one plus
contraction decomposition of primitive matrices with its empirical
convergence rate.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import sft
from .gibbs import pf_eigendata


def _support(M):
    return sft.AdjacencyMatrix((np.asarray(M) > 0).astype(np.int64))


def is_primitive(M, max_power=None):
    """Primitivity test: some power of the support is entrywise positive.

    Uses the Wielandt bound (n-1)^2 + 1 on the required exponent.
    """
    P = (np.asarray(M) > 0).astype(np.int64)
    n = P.shape[0]
    max_power = max_power or (n - 1) ** 2 + 1
    acc = P.copy()
    for _ in range(max_power):
        if acc.min() > 0:
            return True
        acc = np.minimum(acc @ P, 1)
    return bool(acc.min() > 0)


@dataclass(frozen=True)
class CyclicNormalForm:
    """Permutation putting a matrix into block-cyclic superdiagonal form."""

    permutation: tuple
    h: int
    classes: tuple
    blocks: tuple = field(repr=False)
    permuted: np.ndarray = field(repr=False)


def cyclic_normal_form(M):
    """Block-cyclic normal form of an irreducible nonnegative matrix.

    Indices are reordered by cyclic class so the permuted matrix is zero
    outside the blocks (class p rows, class p+1 columns), and the h-th
    power is block diagonal with primitive diagonal blocks.
    """
    M = np.asarray(M, dtype=float)
    if (M < 0).any():
        raise ValueError("matrix must be nonnegative")
    adj = _support(M)
    if not sft.check_irreducible(adj):
        raise ValueError("matrix must be irreducible")
    h, classes = sft.period_and_classes(adj)
    perm = tuple(i for cls in classes for i in cls)
    P = M[np.ix_(perm, perm)]
    sizes = [len(c) for c in classes]
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    blocks = []
    for p in range(h):
        q = (p + 1) % h
        rows = slice(offsets[p], offsets[p + 1])
        cols = slice(offsets[q], offsets[q + 1])
        blocks.append(P[rows, cols].copy())
    # certify the zero pattern
    mask = np.zeros_like(P, dtype=bool)
    for p in range(h):
        q = (p + 1) % h
        mask[offsets[p]:offsets[p + 1], offsets[q]:offsets[q + 1]] = True
    if np.abs(P[~mask]).max(initial=0.0) > 0:
        raise AssertionError("cyclic class computation produced a wrong pattern")
    # certify that the h-th power is block diagonal with primitive blocks
    Ph = np.linalg.matrix_power(P, h)
    for p in range(h):
        sl = slice(offsets[p], offsets[p + 1])
        if not is_primitive(Ph[sl, sl]):
            raise AssertionError("diagonal block of the h-th power is not primitive")
    return CyclicNormalForm(perm, h, classes, tuple(blocks), P)


def rotation_symmetry_check(M, h, tol=1e-8):
    """Whether the spectrum is invariant under rotation by exp(2*pi*i/h).

    Eigenvalues are matched to their rotated images by minimum-cost
    pairing; the check passes when the worst matched distance is below
    tol.
    """
    lam = np.linalg.eigvals(np.asarray(M, dtype=float))
    rot = lam * np.exp(2j * np.pi / h)
    cost = np.abs(rot[:, None] - lam[None, :])
    rows, cols = linear_sum_assignment(cost)
    return bool(cost[rows, cols].max() <= tol)


@dataclass(frozen=True)
class PFDecomposition:
    """M = rho (P + S) with P the rank-one eigenprojection, rho(S) < 1."""

    rho: float
    u: np.ndarray
    u_star: np.ndarray
    S: np.ndarray = field(repr=False)
    S_norm_sequence: np.ndarray = field(repr=False)
    gamma_hat: float


def pf_decomposition(M, n_powers=50, tol=1e-12):
    """Rank-one decomposition of a primitive nonnegative matrix.

    u and u_star are the right/left leading eigenvectors normalized so
    <u, u_star> = 1 and u_star sums to 1; S = M/rho - u u_star^T.  The
    sequence ||S^n|| for n = 1..n_powers and the fitted geometric rate
    gamma_hat = ||S^N||^(1/N) quantify the convergence speed of
    rho^-n M^n towards the projection.
    """
    M = np.asarray(M, dtype=float)
    if not is_primitive(M):
        raise ValueError("matrix is not primitive; use cyclic_normal_form first")
    rho, u, u_star = pf_eigendata(M, tol=tol)
    S = M / rho - np.outer(u, u_star)
    norms = []
    power = np.eye(M.shape[0])
    for _ in range(n_powers):
        power = power @ S
        norms.append(float(np.linalg.svd(power, compute_uv=False)[0]))
    norms = np.array(norms)
    gamma_hat = float(norms[-1] ** (1.0 / n_powers))
    return PFDecomposition(rho, u, u_star, S, norms, gamma_hat)
