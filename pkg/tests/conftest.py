"""Shared fixtures: reference instances and seeded random matrices."""

import random

import pytest

from perphylo.matrix import BinaryMatrix, build_extended, load_matrix

# smallest matrix with no classic perfect phylogeny; a persistent tree exists
FORBIDDEN_PAIR_TEXT = "3 2\n0 1\n1 0\n1 1\n"

# five species, five characters; solvable, with a known good reduction b,a,c,d,e
FIVE_BY_FIVE_TEXT = (
    "# characters: a,b,c,d,e\n"
    "5 5\n"
    "0 0 1 1 0\n"
    "0 1 0 0 0\n"
    "1 0 0 0 0\n"
    "1 0 0 0 1\n"
    "1 1 1 0 0\n"
)

# the completion induced by realizing b,a,c,d,e on the five-by-five instance,
# columns ordered a,a-,b,b-,c,c-,d,d-,e,e-
FIVE_BY_FIVE_COMPLETION = [
    [1, 1, 1, 1, 1, 0, 1, 0, 0, 0],
    [0, 0, 1, 0, 0, 0, 0, 0, 0, 0],
    [1, 0, 1, 1, 1, 1, 0, 0, 0, 0],
    [1, 0, 1, 1, 1, 1, 0, 0, 1, 0],
    [1, 0, 1, 0, 1, 0, 0, 0, 0, 0],
]

# four species, four characters, conflict graph a 4-cycle; realizing the
# characters in index order strands an all-red path
FOUR_CYCLE_TEXT = "4 4\n1 1 0 0\n0 1 1 0\n0 0 1 1\n1 0 0 1\n"

# the completion induced by realizing c1,c2,c3,c4 on the four-cycle instance
FOUR_CYCLE_COMPLETION = [
    [1, 0, 1, 0, 0, 0, 0, 0],
    [1, 1, 1, 0, 1, 0, 1, 1],
    [1, 1, 1, 1, 1, 0, 1, 0],
    [1, 0, 1, 1, 1, 1, 1, 0],
]

# four species, four characters; star pattern used for graph construction tests
STAR_CHAIN_TEXT = "# characters: a,b,c,d\n4 4\n1 0 0 0\n1 1 0 0\n0 1 0 1\n0 0 1 1\n"

# smallest instance with no solution under any completion, found by exhaustive
# enumeration ordered by cell count (see test_smallest_unsat_is_minimal)
UNSAT_4X4_TEXT = "4 4\n1 1 0 0\n1 0 1 0\n0 1 0 1\n0 0 1 1\n"


@pytest.fixture
def forbidden_pair():
    return load_matrix(FORBIDDEN_PAIR_TEXT)


@pytest.fixture
def five_by_five():
    return load_matrix(FIVE_BY_FIVE_TEXT)


@pytest.fixture
def four_cycle():
    return load_matrix(FOUR_CYCLE_TEXT)


@pytest.fixture
def star_chain():
    return load_matrix(STAR_CHAIN_TEXT)


@pytest.fixture
def unsat_4x4():
    return load_matrix(UNSAT_4X4_TEXT)


def random_matrix(rng: random.Random, n: int, m: int) -> BinaryMatrix:
    """Uniform zero-column-free 0/1 matrix (rejection sampled per column)."""
    cols = []
    for _ in range(m):
        col = 0
        while not col:
            col = rng.getrandbits(n) & ((1 << n) - 1)
        cols.append(col)
    rows = [[(cols[j] >> i) & 1 for j in range(m)] for i in range(n)]
    return BinaryMatrix.from_rows(rows)


def extended(matrix: BinaryMatrix):
    return build_extended(matrix)
