"""Matrix loading, the extended pairing, and the four-gametes primitives."""

import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from perphylo.matrix import (
    BinaryMatrix,
    MatrixFormatError,
    build_extended,
    conflict_graph,
    dump_matrix,
    four_gametes,
    has_forbidden_submatrix,
    load_matrix,
)

from conftest import (
    FIVE_BY_FIVE_COMPLETION,
    FORBIDDEN_PAIR_TEXT,
    random_matrix,
)


# -- loading ----------------------------------------------------------------

def test_load_basic(forbidden_pair):
    assert forbidden_pair.n_species == 3
    assert forbidden_pair.n_characters == 2
    assert [forbidden_pair.cell(s, c) for s in range(3) for c in range(2)] == [0, 1, 1, 0, 1, 1]


def test_load_minimal():
    m = load_matrix("1 1\n1\n")
    assert m.rows == (1,)
    assert m.species_groups == (("1",),)


def test_load_rejects_zero_column():
    with pytest.raises(MatrixFormatError, match="column 1"):
        load_matrix("2 2\n0 0\n0 1\n")


def test_drop_zero_columns_flag():
    m = load_matrix("2 2\n0 1\n0 1\n", drop_zero_columns=True)
    assert m.n_characters == 1
    assert m.character_labels == ("c2",)


def test_load_labels_and_comments():
    text = "# species: x,y\n# characters: p,q\n# free comment\n2 2\n1 0\n0 1\n"
    m = load_matrix(text)
    assert m.species_groups == (("x",), ("y",))
    assert m.character_labels == ("p", "q")


def test_load_collapses_duplicate_rows():
    m = load_matrix("3 2\n1 0\n1 0\n1 1\n")
    assert m.n_species == 2
    assert m.species_groups == (("1", "2"), ("3",))


def test_load_errors_carry_coordinates():
    with pytest.raises(MatrixFormatError, match="row 2, column 2"):
        load_matrix("2 2\n1 0\n1 x\n")
    with pytest.raises(MatrixFormatError, match="row 2"):
        load_matrix("2 3\n1 0 1\n0 1\n")
    with pytest.raises(MatrixFormatError, match="expected 2 matrix rows"):
        load_matrix("2 2\n1 1\n")


def test_dump_round_trips(five_by_five):
    again = load_matrix(dump_matrix(five_by_five))
    assert again.rows == five_by_five.rows
    assert again.character_labels == five_by_five.character_labels


def test_dump_can_expand_duplicates():
    m = load_matrix("3 2\n1 0\n1 0\n1 1\n")
    text = dump_matrix(m, expand_groups=True)
    again = load_matrix(text)
    assert sum(len(g) for g in again.species_groups) == 3


# -- extended matrix ---------------------------------------------------------

def test_build_extended_single_zero_row(five_by_five):
    me = build_extended(five_by_five)
    # second species carries only the second character
    assert [me.cell(1, col) for col in range(10)] == [None, None, 1, 0, None, None, None, None, None, None]


def test_build_extended_all_ones_row():
    m = BinaryMatrix.from_rows([[1, 1, 1]])
    me = build_extended(m)
    assert [me.cell(0, col) for col in range(6)] == [1, 0, 1, 0, 1, 0]


def test_build_extended_minimal():
    me = build_extended(BinaryMatrix.from_rows([[1]]))
    assert (me.cell(0, 0), me.cell(0, 1)) == (1, 0)


def test_pairs_resolve_together():
    m = BinaryMatrix.from_rows([[1, 0], [0, 1]])
    me = build_extended(m)
    me.complete_character(1, 0b01)
    assert me.pair(0, 1) == (1, 1)
    assert me.pair(1, 1) == (1, 0)
    with pytest.raises(ValueError):
        me.complete_character(1, 0)
    with pytest.raises(ValueError):
        me.complete_character(0, 0b01)  # overlaps the observed species


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_extended_round_trip(data):
    n = data.draw(st.integers(1, 6))
    m = data.draw(st.integers(1, 6))
    rng = random.Random(data.draw(st.integers(0, 10**6)))
    matrix = random_matrix(rng, n, m)
    me = build_extended(matrix)
    assert me.to_binary().rows == matrix.rows


# -- four gametes and conflicts ----------------------------------------------

def _gametes_by_enumeration(matrix, u, v):
    seen = set()
    for s in range(matrix.n_species):
        seen.add((matrix.cell(s, u), matrix.cell(s, v)))
    return seen == {(0, 0), (0, 1), (1, 0), (1, 1)}


def test_four_gametes_four_cycle(four_cycle):
    # frozen from the row-pair enumeration below
    assert _gametes_by_enumeration(four_cycle, 0, 1) is True
    assert _gametes_by_enumeration(four_cycle, 0, 2) is False
    assert four_gametes(four_cycle, 0, 1) is True
    assert four_gametes(four_cycle, 0, 2) is False


def test_four_gametes_single_row():
    m = BinaryMatrix.from_rows([[1, 1]])
    assert four_gametes(m, 0, 1) is False


@settings(max_examples=80, deadline=None)
@given(st.data())
def test_four_gametes_matches_enumeration(data):
    n = data.draw(st.integers(1, 7))
    m = data.draw(st.integers(2, 6))
    rng = random.Random(data.draw(st.integers(0, 10**6)))
    matrix = random_matrix(rng, n, m)
    u = data.draw(st.integers(0, m - 1))
    v = data.draw(st.integers(0, m - 1))
    if u == v:
        return
    assert four_gametes(matrix, u, v) == _gametes_by_enumeration(matrix, u, v)


def test_conflict_graph_four_cycle(four_cycle):
    g = conflict_graph(four_cycle)
    # frozen from pairwise enumeration over all six pairs: a 4-cycle
    expected = {(u, v) for u, v in itertools.combinations(range(4), 2)
                if _gametes_by_enumeration(four_cycle, u, v)}
    assert expected == {(0, 1), (1, 2), (2, 3), (0, 3)}
    assert g.edges == frozenset(expected)


def test_conflict_graph_forbidden_pair_has_no_edges(forbidden_pair):
    assert conflict_graph(forbidden_pair).n_edges == 0


def test_conflict_graph_single_column():
    assert conflict_graph(BinaryMatrix.from_rows([[1], [0]])).n_edges == 0


# -- forbidden submatrix ------------------------------------------------------

def test_forbidden_witness_on_forbidden_pair(forbidden_pair):
    w = has_forbidden_submatrix(forbidden_pair.columns(), 3)
    assert w is not None
    assert (w.col_a, w.col_b) == (0, 1)
    assert w.rows == (0, 1, 2)


def test_forbidden_absent_on_reference_completion():
    cols = [0] * 10
    for s, row in enumerate(FIVE_BY_FIVE_COMPLETION):
        for j, v in enumerate(row):
            if v:
                cols[j] |= 1 << s
    assert has_forbidden_submatrix(cols, 5) is None


def test_forbidden_needs_three_rows():
    m = BinaryMatrix.from_rows([[0, 1], [1, 0]])
    assert has_forbidden_submatrix(m.columns(), 2) is None


def test_edgeless_conflict_graph_does_not_imply_perfect_phylogeny(forbidden_pair):
    # the standard caution: zero conflicts, yet no classic tree
    assert conflict_graph(forbidden_pair).n_edges == 0
    assert has_forbidden_submatrix(forbidden_pair.columns(), 3) is not None


def _forbidden_brute(cells):
    # O(n^3 m^2) scan over row triples and column pairs
    n = len(cells)
    m = len(cells[0]) if n else 0
    for u in range(m):
        for v in range(u + 1, m):
            pats = set()
            for r in range(n):
                pats.add((cells[r][u], cells[r][v]))
            if {(0, 1), (1, 0), (1, 1)} <= pats:
                return True
    return False


def test_forbidden_matches_brute_force_exhaustively():
    # every 0/1 matrix up to 4x4, zero columns included
    for n in range(1, 5):
        for m in range(1, 5):
            for bits in range(1 << (n * m)):
                cells = [[(bits >> (i * m + j)) & 1 for j in range(m)] for i in range(n)]
                cols = [sum(((cells[i][j]) << i) for i in range(n)) for j in range(m)]
                got = has_forbidden_submatrix(cols, n) is not None
                assert got == _forbidden_brute(cells), (n, m, bits)


def test_forbidden_witness_rows_ascending():
    # witness rows are reported in ascending index order
    m = load_matrix(FORBIDDEN_PAIR_TEXT)
    w = has_forbidden_submatrix(m.columns(), 3)
    assert list(w.rows) == sorted(w.rows)
