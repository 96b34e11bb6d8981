"""Power iteration for nonnegative matrices, with h-fold averaging.

For an irreducible nonnegative matrix of period h the peripheral spectrum
is rho times the h-th roots of unity, so plain power iteration does not
settle.  We iterate the h-th power (block-diagonal with primitive blocks,
so it converges) and then project onto the leading eigendirection with
the exact average sum_{j<h} rho^(-j) M^j z, which kills the rotating
peripheral components.
"""

import numpy as np


class PowerIterationError(RuntimeError):
    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


def power_eigenvector(matvec, dim, h=1, tol=1e-12, maxiter=100_000, v0=None):
    """Leading eigenpair of a nonnegative irreducible operator.

    Parameters
    ----------
    matvec : callable
        Action v -> M v of the matrix.
    dim : int
        Dimension of the vector space.
    h : int
        Period of the support pattern (1 for primitive matrices).
    tol : float
        Relative sup-norm residual required of the eigenpair.
    maxiter : int
        Cap on single matrix applications.

    Returns
    -------
    (rho, v) with M v = rho v, v > 0 componentwise, sum(v) = 1.
    """
    v = np.full(dim, 1.0 / dim) if v0 is None else np.asarray(v0, dtype=float)
    v = v / v.sum()
    applications = 0
    rho_h = None
    while applications < maxiter:
        w = v
        for _ in range(h):
            w = matvec(w)
            applications += 1
        s = w.sum()
        if not np.isfinite(s) or s <= 0.0:
            raise PowerIterationError("iteration collapsed to a nonpositive vector")
        w = w / s
        rho_h = s
        if np.max(np.abs(w - v)) <= 0.25 * tol:
            v = w
            break
        v = w
    rho = rho_h ** (1.0 / h)
    if h > 1:
        # exact projection onto the eigenvalue-rho component
        acc = v.copy()
        z = v
        for j in range(1, h):
            z = matvec(z)
            acc += z / rho**j
        v = acc / acc.sum()
    # residual polish and certificate
    residual = None
    for _ in range(50):
        mv = matvec(v)
        rho = mv.sum() / v.sum()
        residual = np.max(np.abs(mv - rho * v)) / max(rho, 1e-300)
        if residual <= tol:
            break
        v = mv / mv.sum()
    if residual is None or residual > tol:
        raise PowerIterationError(
            f"power iteration did not reach tol={tol:g} "
            f"(achieved residual {residual:.3e} after {applications} applications)",
            residual=residual, iterations=applications)
    if v.min() <= 0.0:
        raise PowerIterationError("leading eigenvector has a nonpositive entry")
    return float(rho), v
