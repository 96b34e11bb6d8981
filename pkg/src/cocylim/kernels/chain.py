"""Flat-array form of the sampling chain driving the Monte Carlo walkers.

Equilibrium paths are built by prepending symbols: starting from a
context drawn from the stationary law, symbol a is prepended to the
current sequence with probability g((a,) + context).  Each prepend
multiplies the tracked vector by the transposed generator of the new
leading word, which is exactly how the transfer operator moves lines, and
accumulates one log-norm increment of the adjoint product.

The context keeps the first L0 = max(k, m - 1) symbols: enough for the
g-function (k symbols) and for the new generator word (m - 1 symbols).
"""

from dataclasses import dataclass, field

import numpy as np

from .. import sft


@dataclass(frozen=True)
class PrependChain:
    L0: int
    contexts: tuple
    ctx_index: dict = field(repr=False)
    init_cum: np.ndarray = field(repr=False)
    sym: np.ndarray = field(repr=False)       # (C, q) candidate symbols, -1 pad
    prob: np.ndarray = field(repr=False)      # (C, q) g-probabilities
    nctx: np.ndarray = field(repr=False)      # (C, q) next context index
    gen: np.ndarray = field(repr=False)       # (C, q) generator index
    gens_T: np.ndarray = field(repr=False)    # (G, d, d) transposed generators
    kword_of_ctx: np.ndarray = field(repr=False)
    dimension: int


def build_prepend_chain(gibbs_model, A):
    """Tabulate contexts, transitions and generators for the walkers."""
    S = gibbs_model.system
    k, m, d = gibbs_model.memory, A.memory, A.dimension
    L0 = max(k, m - 1)
    contexts = tuple(sft.enumerate_words(S, L0))
    ctx_index = {c: i for i, c in enumerate(contexts)}
    C, q = len(contexts), S.q

    masses = np.empty(C)
    for i, c in enumerate(contexts):
        masses[i] = gibbs_model.cylinder_mass(c)
    masses /= masses.sum()
    init_cum = np.cumsum(masses)

    gen_words = sorted(A.generators)
    gen_index = {w: i for i, w in enumerate(gen_words)}
    gens_T = np.stack([A.generators[w].T.copy() for w in gen_words])

    sym = np.full((C, q), -1, dtype=np.int32)
    prob = np.zeros((C, q))
    nctx = np.zeros((C, q), dtype=np.int32)
    gen = np.zeros((C, q), dtype=np.int32)
    for i, c in enumerate(contexts):
        slot = 0
        for a in range(q):
            if not S.allows(a, c[0]):
                continue
            sym[i, slot] = a
            prob[i, slot] = gibbs_model.g[(a,) + c[:k]]
            nctx[i, slot] = ctx_index[((a,) + c)[:L0]]
            gen[i, slot] = gen_index[((a,) + c)[: m]]
            slot += 1

    kword_of_ctx = np.array(
        [gibbs_model.word_index[c[:k]] for c in contexts], dtype=np.int32)
    return PrependChain(L0, contexts, ctx_index, init_cum, sym, prob, nctx,
                        gen, gens_T, kword_of_ctx, d)
