"""Species/character matrices and the four-gametes machinery.

A ``BinaryMatrix`` is the problem instance: rows are species, columns are
binary characters, and every character must be present in at least one
species.  ``ExtendedMatrix`` doubles each character ``c`` into a
(``c``, ``c-lost``) column pair over {0, 1, unknown}: species carrying ``c``
start at (1, 0), all others at (?, ?) and are resolved to (1, 1) or (0, 0)
one whole character at a time.  A fully resolved matrix plus the record of
who resolved what is a ``Completion``.

Columns are stored as species bitmasks throughout, which keeps the pairwise
scans (four gametes, forbidden submatrix) down to a handful of integer ops.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

from ._native import iter_bits, lowest_bit

_LABEL_RE = re.compile(r"^[A-Za-z0-9_.\-]+$")


class MatrixFormatError(ValueError):
    """Malformed or invalid matrix input; coordinates are 1-based."""


def _check_labels(labels: Sequence[str], kind: str) -> tuple[str, ...]:
    seen = set()
    for lab in labels:
        if not _LABEL_RE.match(lab):
            raise MatrixFormatError(f"invalid {kind} label {lab!r} (allowed: letters, digits, '_', '.', '-')")
        if lab in seen:
            raise MatrixFormatError(f"duplicate {kind} label {lab!r}")
        seen.add(lab)
    return tuple(labels)


@dataclass(frozen=True)
class BinaryMatrix:
    """Validated species-by-character 0/1 matrix with collapsed row groups.

    ``rows[i]`` is the bitmask of characters present in species ``i``;
    ``species_groups[i]`` lists every input row name collapsed onto it
    (duplicated rows share one species).  Character columns are never all
    zero.
    """

    rows: tuple[int, ...]
    n_characters: int
    species_groups: tuple[tuple[str, ...], ...]
    character_labels: tuple[str, ...]

    @property
    def n_species(self) -> int:
        return len(self.rows)

    def cell(self, s: int, c: int) -> int:
        return (self.rows[s] >> c) & 1

    def column(self, c: int) -> int:
        mask = 0
        for s, row in enumerate(self.rows):
            if (row >> c) & 1:
                mask |= 1 << s
        return mask

    def columns(self) -> list[int]:
        return [self.column(c) for c in range(self.n_characters)]

    def species_label(self, s: int) -> str:
        return "|".join(self.species_groups[s])

    @classmethod
    def from_rows(
        cls,
        rows: Sequence[Sequence[int]],
        species_labels: Optional[Sequence[str]] = None,
        character_labels: Optional[Sequence[str]] = None,
        drop_zero_columns: bool = False,
    ) -> "BinaryMatrix":
        """Validate, optionally strip all-zero columns, collapse duplicate rows."""
        if not rows:
            raise MatrixFormatError("matrix has no rows")
        m = len(rows[0])
        for i, row in enumerate(rows):
            if len(row) != m:
                raise MatrixFormatError(f"row {i + 1} has {len(row)} cells, expected {m}")
            for j, v in enumerate(row):
                if v not in (0, 1):
                    raise MatrixFormatError(f"malformed cell at row {i + 1}, column {j + 1}: {v!r}")
        if species_labels is None:
            species_labels = [str(i + 1) for i in range(len(rows))]
        elif len(species_labels) != len(rows):
            raise MatrixFormatError(f"{len(species_labels)} species labels for {len(rows)} rows")
        if character_labels is None:
            character_labels = [f"c{j + 1}" for j in range(m)]
        elif len(character_labels) != m:
            raise MatrixFormatError(f"{len(character_labels)} character labels for {m} columns")
        species_labels = _check_labels(species_labels, "species")
        character_labels = _check_labels(character_labels, "character")

        zero = [j for j in range(m) if not any(row[j] for row in rows)]
        if zero and not drop_zero_columns:
            raise MatrixFormatError(f"column {zero[0] + 1} ({character_labels[zero[0]]}) is all-zero; no species has the character")
        if zero:
            keep = [j for j in range(m) if j not in set(zero)]
            if not keep:
                raise MatrixFormatError("all columns are zero; nothing left after dropping them")
            rows = [[row[j] for j in keep] for row in rows]
            character_labels = tuple(character_labels[j] for j in keep)
            m = len(keep)

        packed: list[int] = []
        groups: list[list[str]] = []
        index: dict[int, int] = {}
        for label, row in zip(species_labels, rows):
            key = sum(1 << j for j, v in enumerate(row) if v)
            if key in index:
                groups[index[key]].append(label)
            else:
                index[key] = len(packed)
                packed.append(key)
                groups.append([label])
        return cls(
            rows=tuple(packed),
            n_characters=m,
            species_groups=tuple(tuple(g) for g in groups),
            character_labels=character_labels,
        )


def load_matrix(text: str, drop_zero_columns: bool = False) -> BinaryMatrix:
    """Parse the plain-text matrix format.

    First non-comment line is ``n m``, followed by ``n`` lines of ``m``
    space-separated 0/1 tokens.  Lines starting with ``#`` are comments; the
    special comments ``# species: a,b,...`` and ``# characters: x,y,...``
    supply labels (defaults are 1..n and c1..cm).
    """
    species_labels = None
    character_labels = None
    data_lines: list[tuple[int, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("species:"):
                species_labels = [t.strip() for t in body[len("species:"):].split(",") if t.strip()]
            elif body.startswith("characters:"):
                character_labels = [t.strip() for t in body[len("characters:"):].split(",") if t.strip()]
            continue
        data_lines.append((lineno, line))
    if not data_lines:
        raise MatrixFormatError("empty matrix file")

    header = data_lines[0][1].split()
    if len(header) != 2:
        raise MatrixFormatError(f"line {data_lines[0][0]}: header must be 'n m'")
    try:
        n, m = int(header[0]), int(header[1])
    except ValueError:
        raise MatrixFormatError(f"line {data_lines[0][0]}: header must be 'n m'") from None
    if n < 1 or m < 1:
        raise MatrixFormatError(f"line {data_lines[0][0]}: dimensions must be positive")
    body_lines = data_lines[1:]
    if len(body_lines) != n:
        raise MatrixFormatError(f"expected {n} matrix rows, found {len(body_lines)}")

    rows: list[list[int]] = []
    for i, (lineno, line) in enumerate(body_lines):
        tokens = line.split()
        if len(tokens) != m:
            raise MatrixFormatError(f"row {i + 1} (line {lineno}) has {len(tokens)} cells, expected {m}")
        row = []
        for j, tok in enumerate(tokens):
            if tok == "0":
                row.append(0)
            elif tok == "1":
                row.append(1)
            else:
                raise MatrixFormatError(f"malformed cell at row {i + 1}, column {j + 1}: {tok!r}")
        rows.append(row)
    return BinaryMatrix.from_rows(rows, species_labels, character_labels, drop_zero_columns=drop_zero_columns)


def dump_matrix(matrix: BinaryMatrix, expand_groups: bool = False) -> str:
    """Back to the text format; collapsed rows can be re-expanded."""
    lines = []
    rows: list[tuple[str, int]] = []
    for s in range(matrix.n_species):
        if expand_groups:
            rows.extend((name, matrix.rows[s]) for name in matrix.species_groups[s])
        else:
            rows.append((matrix.species_label(s), matrix.rows[s]))
    lines.append(f"# species: {','.join(name for name, _ in rows)}")
    lines.append(f"# characters: {','.join(matrix.character_labels)}")
    lines.append(f"{len(rows)} {matrix.n_characters}")
    for _, row in rows:
        lines.append(" ".join(str((row >> j) & 1) for j in range(matrix.n_characters)))
    return "\n".join(lines) + "\n"


class ExtendedMatrix:
    """Character-pair matrix over {0, 1, unknown}, bit-packed per pair.

    For character ``c``: ``ones[c]`` marks species whose pair is (1, 0),
    ``persist[c]`` marks species resolved to (1, 1); once ``completed[c]`` is
    set the remaining species are (0, 0), before that they are (?, ?).  Both
    halves of a pair always resolve together.
    """

    __slots__ = ("n", "m", "ones", "persist", "completed", "species_groups", "character_labels")

    def __init__(self, n, ones, persist, completed, species_groups, character_labels):
        self.n = n
        self.m = len(ones)
        self.ones = tuple(ones)
        self.persist = list(persist)
        self.completed = list(completed)
        self.species_groups = species_groups
        self.character_labels = character_labels

    def copy(self) -> "ExtendedMatrix":
        return ExtendedMatrix(self.n, self.ones, self.persist, self.completed,
                              self.species_groups, self.character_labels)

    @property
    def full_mask(self) -> int:
        return (1 << self.n) - 1

    def pair(self, s: int, c: int) -> tuple[Optional[int], Optional[int]]:
        """(positive, negated) values for species ``s``; None means unknown."""
        bit = 1 << s
        if self.ones[c] & bit:
            return (1, 0)
        if self.persist[c] & bit:
            return (1, 1)
        if self.completed[c]:
            return (0, 0)
        return (None, None)

    def cell(self, s: int, col: int) -> Optional[int]:
        """Value at 2m-wide column index; even = positive, odd = negated."""
        pos, neg = self.pair(s, col // 2)
        return neg if col % 2 else pos

    def complete_character(self, c: int, species_mask: int) -> None:
        if self.completed[c]:
            raise ValueError(f"character {c} already completed")
        if species_mask & self.ones[c]:
            raise ValueError(f"character {c}: (1,1) assignment overlaps observed species")
        if species_mask >> self.n:
            raise ValueError(f"character {c}: species mask out of range")
        self.persist[c] = species_mask
        self.completed[c] = True

    @property
    def is_complete(self) -> bool:
        return all(self.completed)

    def unknown_count(self) -> int:
        full = self.full_mask
        k = 0
        for c in range(self.m):
            if not self.completed[c]:
                k += (full & ~self.ones[c]).bit_count()
        return k

    def positive_column(self, c: int) -> int:
        return self.ones[c] | self.persist[c]

    def negated_column(self, c: int) -> int:
        return self.persist[c]

    def all_columns(self) -> list[int]:
        """The 2m column masks in pair order; only valid once complete."""
        cols = []
        for c in range(self.m):
            cols.append(self.positive_column(c))
            cols.append(self.negated_column(c))
        return cols

    def completed_columns(self) -> list[tuple[int, int]]:
        """(2m-column index, mask) for every resolved pair."""
        cols = []
        for c in range(self.m):
            if self.completed[c]:
                cols.append((2 * c, self.positive_column(c)))
                cols.append((2 * c + 1, self.negated_column(c)))
        return cols

    def to_binary(self) -> BinaryMatrix:
        """Collapse pairs back to the source matrix: (1,0) -> 1, else 0."""
        rows = [[(self.ones[c] >> s) & 1 for c in range(self.m)] for s in range(self.n)]
        labels = [g[0] for g in self.species_groups] if self.species_groups else None
        bm = BinaryMatrix.from_rows(rows, labels, self.character_labels)
        if self.species_groups:
            bm = BinaryMatrix(bm.rows, bm.n_characters, self.species_groups, bm.character_labels)
        return bm


def build_extended(matrix: BinaryMatrix) -> ExtendedMatrix:
    """Pair every character with its negation: 1 -> (1,0), 0 -> (?,?)."""
    return ExtendedMatrix(
        n=matrix.n_species,
        ones=matrix.columns(),
        persist=[0] * matrix.n_characters,
        completed=[False] * matrix.n_characters,
        species_groups=matrix.species_groups,
        character_labels=matrix.character_labels,
    )


@dataclass(frozen=True)
class Completion:
    """Fully resolved extended matrix plus who-resolved-what provenance.

    ``provenance`` lists (character, species mask assigned (1,1)) in
    resolution order.  The species carrying the negated character are always
    a subset of those carrying the positive one.
    """

    matrix: ExtendedMatrix
    provenance: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if not self.matrix.is_complete:
            raise ValueError("completion requires a fully resolved matrix")

    def column(self, col: int) -> int:
        c = col // 2
        return self.matrix.negated_column(c) if col % 2 else self.matrix.positive_column(c)

    def all_columns(self) -> list[int]:
        return self.matrix.all_columns()

    @property
    def n_species(self) -> int:
        return self.matrix.n

    @property
    def n_characters(self) -> int:
        return self.matrix.m


class ForbiddenWitness(NamedTuple):
    """Column pair and ascending row triple inducing (0,1), (1,0), (1,1)."""

    col_a: int
    col_b: int
    rows: tuple[int, int, int]


def pair_is_forbidden(a: int, b: int, universe: int) -> bool:
    """Do columns ``a``, ``b`` show (0,1), (1,0) and (1,1) within ``universe``?"""
    return bool(a & b & universe) and bool(a & ~b & universe) and bool(b & ~a & universe)


def has_forbidden_submatrix(columns: Sequence[int], n_rows: int) -> Optional[ForbiddenWitness]:
    """Scan all column pairs for the three-row (0,1),(1,0),(1,1) pattern.

    Works on any fully determined 0/1 column set (a plain matrix, a
    completion, or the resolved pairs of a partial completion).  Pairs are
    scanned in ascending order and the first witness is returned with its
    three rows sorted ascending; a matrix with an empty witness admits a
    perfect phylogeny.
    """
    universe = (1 << n_rows) - 1
    k = len(columns)
    for a in range(k):
        ca = columns[a]
        for b in range(a + 1, k):
            cb = columns[b]
            both = ca & cb & universe
            if not both:
                continue
            only_a = ca & ~cb & universe
            if not only_a:
                continue
            only_b = cb & ~ca & universe
            if not only_b:
                continue
            rows = tuple(sorted((lowest_bit(only_b), lowest_bit(only_a), lowest_bit(both))))
            return ForbiddenWitness(a, b, rows)  # type: ignore[arg-type]
    return None


def four_gametes(matrix: BinaryMatrix, u: int, v: int) -> bool:
    """True iff columns ``u`` and ``v`` show all of (0,0), (0,1), (1,0), (1,1)."""
    if u == v:
        raise ValueError("four-gametes test needs two distinct characters")
    a = matrix.column(u)
    b = matrix.column(v)
    universe = (1 << matrix.n_species) - 1
    return (
        bool(a & b)
        and bool(a & ~b & universe)
        and bool(b & ~a & universe)
        and bool(~a & ~b & universe)
    )


@dataclass(frozen=True)
class ConflictGraph:
    """Characters as vertices, four-gamete pairs as edges."""

    n_characters: int
    edges: frozenset[tuple[int, int]]

    @property
    def n_edges(self) -> int:
        return len(self.edges)


def conflict_graph(matrix: BinaryMatrix) -> ConflictGraph:
    edges = set()
    for u in range(matrix.n_characters):
        for v in range(u + 1, matrix.n_characters):
            if four_gametes(matrix, u, v):
                edges.add((u, v))
    return ConflictGraph(matrix.n_characters, frozenset(edges))


__all__ = [
    "BinaryMatrix",
    "Completion",
    "ConflictGraph",
    "ExtendedMatrix",
    "ForbiddenWitness",
    "MatrixFormatError",
    "build_extended",
    "conflict_graph",
    "dump_matrix",
    "four_gametes",
    "has_forbidden_submatrix",
    "iter_bits",
    "load_matrix",
    "pair_is_forbidden",
]
