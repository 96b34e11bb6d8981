import numpy as np
import pytest

from cocylim import cocycle, gibbs, sft


@pytest.fixture(scope="session")
def golden_mean():
    return sft.SymbolicSystem.from_matrix([[1, 1], [1, 0]])


@pytest.fixture(scope="session")
def full_shift():
    return sft.SymbolicSystem.from_matrix([[1, 1], [1, 1]])


@pytest.fixture(scope="session")
def period2_shift():
    return sft.SymbolicSystem.from_matrix([[0, 1], [1, 0]])


@pytest.fixture(scope="session")
def bernoulli_half(full_shift):
    pot = gibbs.LocallyConstantPotential.bernoulli([0.5, 0.5])
    return gibbs.build_gibbs_model(pot, full_shift)


@pytest.fixture(scope="session")
def conformal_cocycle():
    """c = (2, 1/2) times rotations: every limit law has a closed form."""
    return cocycle.MatrixCocycle(1, 2, {
        (0,): 2.0 * cocycle.rotation(1.0),
        (1,): 0.5 * cocycle.rotation(2.2)})


@pytest.fixture(scope="session")
def showcase_cocycle():
    """Diagonal stretch plus rotation; 1-typical with positive variance."""
    return cocycle.MatrixCocycle(1, 2, {
        (0,): np.diag([1.25, 0.8]),
        (1,): cocycle.rotation(0.7)})


@pytest.fixture(scope="session")
def identity_cocycle():
    return cocycle.MatrixCocycle(1, 2, {(0,): np.eye(2), (1,): np.eye(2)})


def random_irreducible(rng, q):
    """Random irreducible 0/1 adjacency matrix on q symbols."""
    while True:
        T = (rng.random((q, q)) < 0.4).astype(int)
        try:
            adj = sft.AdjacencyMatrix(T)
        except ValueError:
            continue
        if sft.check_irreducible(adj):
            return T
