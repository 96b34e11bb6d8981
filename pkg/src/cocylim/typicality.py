"""One-typicality checker: pinching and twisting witnesses.

A cocycle is accepted once some periodic word p and homoclinic encoding z
pass both tests: the matrix of the cocycle around the periodic orbit has
simple eigenvalues of pairwise distinct moduli (pinching), and the
holonomy loop through z moves the eigendirections into general position
(twisting).  Rejection is never certified: the property is existential,
so an exhausted budget only yields INCONCLUSIVE.
"""

import itertools
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import sft
from .cocycle import (HomoclinicPoint, PeriodicOrbit, fiber_bunching_margin,
                      stable_holonomy, unstable_holonomy)

DEFAULT_GAP_TOL = 1e-6
DEFAULT_SV_FLOOR = 1e-8
DEFAULT_PERIOD_BUDGET = 6
DEFAULT_CONNECTOR_BUDGET = 8


@dataclass(frozen=True)
class TypicalityWitness:
    periodic_word: tuple
    homoclinic_encoding: tuple
    P_matrix: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)
    holonomy_loop: np.ndarray = field(repr=False)
    pinch_margin: float
    twist_margin: float
    loop_tail: float


@dataclass(frozen=True)
class TypicalityVerdict:
    status: str                    # "ACCEPT" or "INCONCLUSIVE"
    witness: TypicalityWitness | None
    attempts: int
    log: tuple


def find_periodic_words(S, max_period):
    """One representative per primitive periodic orbit up to max_period.

    Representatives are the lexicographically least rotation, listed by
    (length, word).
    """
    if max_period > 12:
        raise ValueError("period budget capped at 12")
    seen = set()
    out = []
    for n in range(1, max_period + 1):
        for w in sft.enumerate_words(S, n):
            if not S.allows(w[-1], w[0]):
                continue
            rotations = [w[i:] + w[:i] for i in range(n)]
            canon = min(rotations)
            if canon in seen:
                continue
            # primitive: not a power of a shorter cycle
            if any(n % d == 0 and canon == canon[:d] * (n // d)
                   for d in range(1, n)):
                continue
            seen.add(canon)
            out.append(canon)
    return out


def periodic_matrix(A, S, p):
    """Product of the cocycle once around the periodic orbit of p."""
    orbit = PeriodicOrbit(S, p)
    P = np.eye(A.dimension)
    for j in range(orbit.n):
        P = A.generators[orbit.factor_word(j, A.memory)] @ P
    return P


def pinching_check(A, S, p, gap_tol=DEFAULT_GAP_TOL):
    """Distinct-modulus eigenvalue test at a periodic word.

    Returns (passed, margin) where the margin is the smallest relative
    gap between consecutive eigenvalue moduli.  Distinct moduli force all
    eigenvalues to be real and simple.  Eigensolver failures surface as
    (False, nan).
    """
    P = periodic_matrix(A, S, p)
    try:
        lam = np.linalg.eigvals(P)
    except np.linalg.LinAlgError:
        return False, float("nan")
    mods = np.sort(np.abs(lam))[::-1]
    if mods[-1] == 0.0:
        return False, 0.0
    if len(mods) == 1:
        return True, float("inf")
    margin = float(np.min((mods[:-1] - mods[1:]) / mods[:-1]))
    return margin >= gap_tol, margin


def build_holonomy_loop(A, S, p, left, right, depth=64, tol=1e-12):
    """Holonomy loop through the homoclinic point encoded by (left, right).

    Composes the stable holonomy from the point back to the orbit with
    the unstable holonomy from the orbit out to the point.  Returns the
    loop matrix and the worse of the two truncation tails.
    """
    orbit = PeriodicOrbit(S, p)
    z = HomoclinicPoint(orbit, left, right)
    hu = unstable_holonomy(A, orbit, z, depth=depth, tol=tol)
    hs = stable_holonomy(A, z, orbit, depth=depth, tol=tol)
    return hs.matrix @ hu.matrix, max(hu.tail_bound, hs.tail_bound)


def twisting_check(A, eigenvectors, loop, sv_floor=DEFAULT_SV_FLOOR):
    """General-position test for the loop images of the eigendirections.

    For every pair of index sets I, J with 1 <= |I| + |J| <= d the
    columns {loop v_i : i in I} and {v_j : j in J} (unit normalized) must
    have smallest singular value at least sv_floor.  Returns
    (passed, margin, worst) where worst identifies the weakest (I, J).
    """
    d = A.dimension
    vs = [eigenvectors[:, i] / np.linalg.norm(eigenvectors[:, i]) for i in range(d)]
    ws = []
    for v in vs:
        w = loop @ v
        ws.append(w / np.linalg.norm(w))
    margin = float("inf")
    worst = None
    idx = list(range(d))
    for isz in range(d + 1):
        for jsz in range(d + 1 - isz):
            if isz + jsz == 0:
                continue
            for I in itertools.combinations(idx, isz):
                for J in itertools.combinations(idx, jsz):
                    cols = [ws[i] for i in I] + [vs[j] for j in J]
                    sv = np.linalg.svd(np.column_stack(cols), compute_uv=False)[-1]
                    if sv < margin:
                        margin = float(sv)
                        worst = (I, J)
    return margin >= sv_floor, margin, worst


def _connector_candidates(S, orbit, budget):
    """All (left, right) connector pairs in canonical order.

    Candidates are ordered by total length, then left length, then
    lexicographically; admissibility of the junctions is checked by the
    HomoclinicPoint constructor.  The empty pair (the orbit itself) is
    skipped: its loop is always the identity.
    """
    for total in range(1, budget + 1):
        for llen in range(total + 1):
            rlen = total - llen
            lefts = sft.enumerate_words(S, llen) if llen else [()]
            rights = sft.enumerate_words(S, rlen) if rlen else [()]
            for left in lefts:
                for right in rights:
                    try:
                        HomoclinicPoint(orbit, left, right)
                    except ValueError:
                        continue
                    yield left, right


def is_one_typical(A, S, period_budget=DEFAULT_PERIOD_BUDGET,
                   connector_budget=DEFAULT_CONNECTOR_BUDGET,
                   gap_tol=DEFAULT_GAP_TOL, sv_floor=DEFAULT_SV_FLOOR,
                   depth=64, tol=1e-12, threads=1):
    """Search for a 1-typicality witness within the given budgets.

    Returns ACCEPT with the first witness in canonical order (shortest
    periodic words, then shortest connectors), or INCONCLUSIVE when the
    budget is exhausted.  The candidate loop evaluations are a parallel
    map with a deterministic first-wins reduction, so the verdict does
    not depend on the thread count.
    """
    if fiber_bunching_margin(A) >= 1.0:
        warnings.warn("cocycle is not fiber-bunched; holonomy limits may fail",
                      stacklevel=2)
    log = []
    attempts = 0
    for p in find_periodic_words(S, period_budget):
        passed, pinch = pinching_check(A, S, p, gap_tol)
        attempts += 1
        if not passed:
            log.append({"periodic_word": sft.word_str(p), "stage": "pinching",
                        "margin": pinch})
            continue
        P = periodic_matrix(A, S, p)
        lam, vecs = np.linalg.eig(P)
        order = np.argsort(-np.abs(lam))
        lam, vecs = lam[order].real, vecs[:, order].real
        orbit = PeriodicOrbit(S, p)

        def examine(enc, p=p, vecs=vecs):
            left, right = enc
            try:
                loop, tail = build_holonomy_loop(A, S, p, left, right,
                                                 depth=depth, tol=tol)
            except RuntimeError as exc:
                return ("error", enc, str(exc))
            ok, margin, worst = twisting_check(A, vecs, loop, sv_floor)
            return ("ok" if ok else "fail", enc, (loop, tail, margin, worst))

        candidates = list(_connector_candidates(S, orbit, connector_budget))
        with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
            results = pool.map(examine, candidates)
            for status, enc, payload in results:
                attempts += 1
                if status == "error":
                    log.append({"periodic_word": sft.word_str(p),
                                "connectors": enc, "stage": "holonomy",
                                "error": payload})
                    continue
                loop, tail, margin, worst = payload
                if status == "ok":
                    witness = TypicalityWitness(
                        periodic_word=p, homoclinic_encoding=enc,
                        P_matrix=P, eigenvalues=lam, eigenvectors=vecs,
                        holonomy_loop=loop,
                        pinch_margin=pinch, twist_margin=margin,
                        loop_tail=tail)
                    return TypicalityVerdict("ACCEPT", witness, attempts, tuple(log))
                log.append({
                    "periodic_word": sft.word_str(p), "connectors": enc,
                    "stage": "twisting", "margin": margin,
                    "worst_sets": worst,
                    "duplicated_column": bool(worst and set(worst[0]) & set(worst[1])
                                              and margin < sv_floor)})
    return TypicalityVerdict("INCONCLUSIVE", None, attempts, tuple(log))
