"""Pure-NumPy walker: trials advance in lockstep, one prepend per step.

Bitwise-identical to the compiled kernel: both consume the same SplitMix64
stream per trial (one uniform for the initial context, one per step) and
use the same scalar formulas, with inner products accumulated in ascending
index order.
"""

import numpy as np

from .._rng import next_uniform, trial_states

RENORM_EVERY = 20


def walk(chain, u, n_steps, trials, seed, checkpoints,
         tilt_t=0.0, guide=None, grid_n=0, grid_points=None,
         track_matrix=False):
    """Run `trials` independent prepend walks of length `n_steps`.

    Parameters
    ----------
    chain : PrependChain
    u : (d,) unit vector the adjoint products act on.
    checkpoints : increasing step counts at which outputs are recorded.
    tilt_t, guide : exponential tilt parameter and guide table (values per
        (k-word, grid point) state, flattened); guide requires grid_n (the
        d=2 angle count) or grid_points for nearest lookup.
    track_matrix : also track the full adjoint matrix product.

    Returns
    -------
    dict with "S" (trials, K) log-norms, "logw" importance log-weights,
    and when tracking matrices "mats" (trials, K, d, d) with separate
    "mat_logs" scale logs.
    """
    d = chain.dimension
    q = chain.sym.shape[1]
    checkpoints = np.asarray(checkpoints, dtype=np.int64)
    K = len(checkpoints)
    tilted = tilt_t != 0.0 or guide is not None
    guide_flat = None if guide is None else np.asarray(guide, dtype=float)
    if grid_points is not None:
        grid_points = np.asarray(grid_points, dtype=float)
    stride = grid_n if grid_n > 0 else (
        len(grid_points) if grid_points is not None else 1)

    states = trial_states(seed, trials)
    u0 = next_uniform(states)
    ctx = np.searchsorted(chain.init_cum, u0 * chain.init_cum[-1], side="right")
    ctx = np.minimum(ctx, len(chain.init_cum) - 1).astype(np.int64)

    v = np.broadcast_to(np.asarray(u, dtype=float), (trials, d)).copy()
    S = np.zeros(trials)
    logw = np.zeros(trials)
    out_S = np.zeros((trials, K))
    out_logw = np.zeros((trials, K))
    if track_matrix:
        M = np.broadcast_to(np.eye(d), (trials, d, d)).copy()
        mat_log = np.zeros(trials)
        out_mats = np.zeros((trials, K, d, d))
        out_mat_logs = np.zeros((trials, K))

    ck = 0
    for step in range(1, n_steps + 1):
        G = chain.gens_T[chain.gen[ctx]]               # (t, q, d, d)
        img = np.einsum("tqij,tj->tqi", G, v)          # candidate images
        norms = np.sqrt(np.einsum("tqi,tqi->tq", img, img))
        p = chain.prob[ctx]
        if tilted:
            w = p * norms**tilt_t
            if guide_flat is not None:
                kw = chain.kword_of_ctx[chain.nctx[ctx]]
                gi = _grid_lookup(img, grid_n, grid_points)
                w = w * guide_flat[kw * stride + gi]
        else:
            w = p
        cum = np.cumsum(w, axis=1)
        total = cum[:, -1]
        r = next_uniform(states) * total
        choice = (cum > r[:, None]).argmax(axis=1)
        rows = np.arange(trials)
        if tilted:
            logw += np.log(p[rows, choice]) - (
                np.log(w[rows, choice]) - np.log(total))
        v = img[rows, choice]
        nrm = norms[rows, choice]
        S += np.log(nrm)
        v = v / nrm[:, None]
        if track_matrix:
            Gc = G[rows, choice]
            M = np.einsum("tij,tjk->tik", Gc, M)
            if step % RENORM_EVERY == 0:
                fro = np.sqrt(np.einsum("tij,tij->t", M, M))
                mat_log += np.log(fro)
                M = M / fro[:, None, None]
        ctx = chain.nctx[ctx, choice].astype(np.int64)
        while ck < K and checkpoints[ck] == step:
            out_S[:, ck] = S
            out_logw[:, ck] = logw
            if track_matrix:
                out_mats[:, ck] = M
                out_mat_logs[:, ck] = mat_log
            ck += 1
    out = {"S": out_S, "logw": out_logw}
    if track_matrix:
        out["mats"] = out_mats
        out["mat_logs"] = out_mat_logs
    return out


def _grid_lookup(img, grid_n, grid_points):
    """Nearest grid index for every candidate image line."""
    if grid_points is not None and grid_n == 0:
        nrm = np.sqrt(np.einsum("tqi,tqi->tq", img, img))
        unit = img / nrm[..., None]
        dots = np.abs(np.einsum("tqi,gi->tqg", unit, grid_points))
        return dots.argmax(axis=2)
    if grid_n == 1:
        return np.zeros(img.shape[:2], dtype=np.int64)
    phi = np.arctan2(img[..., 1], img[..., 0])
    phi = np.where(phi < 0.0, phi + np.pi, phi)
    pos = phi * grid_n / np.pi
    j = (pos + 0.5).astype(np.int64)
    return np.where(j >= grid_n, j - grid_n, j)
