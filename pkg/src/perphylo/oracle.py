"""Independent ground truth and seeded instance generation.

``oracle_solve`` decides solvability by brute force: every unresolved
(?, ?) pair can become (0, 0) or (1, 1), and an assignment is a solution iff
the resulting matrix has no forbidden submatrix.  It never touches the graph
reduction or the tree builder, which is the point: the solver is tested
against it, not with it.

``generate_instance`` runs the model forwards: grow a random rooted tree,
give every character one gain edge and, with some probability, one loss edge
strictly below it, then read the species rows off the leaves.  By
construction such a matrix is always solvable.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional

from ._native import iter_bits
from .matrix import (
    BinaryMatrix,
    Completion,
    ExtendedMatrix,
    conflict_graph,
    has_forbidden_submatrix,
    pair_is_forbidden,
)
from .phylo import Change, PersistentPhylogeny, TreeNode


class OracleBudgetError(RuntimeError):
    """Too many unknown pairs to enumerate."""


class GenerationError(RuntimeError):
    """Retry budget exhausted without an acceptable instance."""


def oracle_solve(me: ExtendedMatrix, max_unknowns: int = 24) -> Optional[Completion]:
    """Exhaustively search the 2^k pair assignments for a forbidden-free one.

    Characters are processed in ascending order and, within a character, the
    species subsets receiving (1, 1) in ascending binary order (all-(0,0)
    first), so the witness is the first solution of a fixed enumeration.
    Prefixes whose resolved columns already contain a forbidden pair are cut;
    that only skips assignments that cannot win.  Raises
    ``OracleBudgetError`` when more than ``max_unknowns`` pairs are unknown.
    """
    k = me.unknown_count()
    if k > max_unknowns:
        raise OracleBudgetError(f"{k} unknown pairs exceed the enumeration budget ({max_unknowns})")
    universe = me.full_mask
    fixed: list[int] = []
    for c in range(me.m):
        if me.completed[c]:
            fixed.append(me.positive_column(c))
            fixed.append(me.negated_column(c))
    for i, a in enumerate(fixed):
        for b in fixed[i + 1:]:
            if pair_is_forbidden(a, b, universe):
                return None

    targets = [c for c in range(me.m) if not me.completed[c]]
    spots = [list(iter_bits(universe & ~me.ones[c])) for c in targets]

    def dfs(i: int, cols: list[int]) -> Optional[list[tuple[int, int]]]:
        if i == len(targets):
            return []
        c = targets[i]
        bits = spots[i]
        for value in range(1 << len(bits)):
            mask = 0
            for j, s in enumerate(bits):
                if (value >> j) & 1:
                    mask |= 1 << s
            pos = me.ones[c] | mask
            if any(pair_is_forbidden(col, pos, universe) or pair_is_forbidden(col, mask, universe)
                   for col in cols):
                continue
            rest = dfs(i + 1, cols + [pos, mask])
            if rest is not None:
                return [(c, mask)] + rest
        return None

    assignment = dfs(0, fixed)
    if assignment is None:
        return None
    solved = me.copy()
    for c, mask in assignment:
        solved.complete_character(c, mask)
    completion = Completion(solved, tuple(assignment))
    if has_forbidden_submatrix(completion.all_columns(), me.n) is not None:
        raise AssertionError("oracle produced a completion with a forbidden submatrix")
    return completion


def count_conflicts(matrix: BinaryMatrix) -> int:
    """Number of character pairs showing all four gametes."""
    return conflict_graph(matrix).n_edges


@dataclass(frozen=True)
class GeneratorParams:
    """Knobs for the forward simulator; the seed fully determines the output.

    A tree with g labeled edges supports at most g + 1 distinct rows, so with
    ``require_distinct_rows`` the species count is effectively capped at
    2 * n_characters + 1; benchmark-scale instances disable the cap and emit
    duplicate rows, which the loader collapses again.
    """

    n_species: int
    n_characters: int
    loss_probability: float
    seed: int
    max_retries: int = 2000
    require_distinct_rows: bool = True

    def __post_init__(self):
        if self.n_species < 1 or self.n_characters < 1:
            raise ValueError("need at least one species and one character")
        if not 0.0 <= self.loss_probability <= 1.0:
            raise ValueError("loss_probability must be in [0, 1]")
        if self.max_retries < 1:
            raise ValueError("max_retries must be positive")


def _grow_tree(rng: random.Random, n_leaves: int) -> list[list[int]]:
    """Random rooted tree by uniform attachment until it has n_leaves leaves."""
    children: list[list[int]] = [[]]
    leaves = 0
    while leaves < n_leaves:
        parent = rng.randrange(len(children))
        if parent != 0 and not children[parent]:
            leaves -= 1
        children.append([])
        children[parent].append(len(children) - 1)
        leaves += 1
    return children


def generate_instance(params: GeneratorParams) -> tuple[BinaryMatrix, PersistentPhylogeny]:
    """Simulate gains and losses on a random tree; returns matrix and truth tree.

    Rejected and retried: instances with an all-zero character column, and
    (when distinct rows are required) instances where duplicate leaves would
    collapse the matrix below ``n_species``.
    """
    rng = random.Random(params.seed)
    n, m = params.n_species, params.n_characters
    for _ in range(params.max_retries):
        children = _grow_tree(rng, n)
        size = len(children)
        gain_at: list[int] = []
        loss_at: list[Optional[int]] = []
        for _j in range(m):
            gain = rng.randrange(1, size)
            gain_at.append(gain)
            loss = None
            if rng.random() < params.loss_probability and children[gain]:
                # random descent; an edge is a legal loss only once the walk
                # has passed a branching node, else the character would
                # survive in no leaf at all
                cur = gain
                eligible = []
                branched = len(children[gain]) > 1
                while children[cur]:
                    cur = rng.choice(children[cur])
                    if branched:
                        eligible.append(cur)
                    if len(children[cur]) > 1:
                        branched = True
                if eligible:
                    loss = rng.choice(eligible)
            loss_at.append(loss)

        vectors = [0] * size
        order = [0]
        for node in order:
            for child in children[node]:
                vec = vectors[node]
                for j in range(m):
                    if gain_at[j] == child:
                        vec |= 1 << j
                    if loss_at[j] == child:
                        vec &= ~(1 << j)
                vectors[child] = vec
                order.append(child)

        leaf_ids = [v for v in range(1, size) if not children[v]]
        rows = [vectors[v] for v in leaf_ids]
        if any(not any((row >> j) & 1 for row in rows) for j in range(m)):
            continue
        if params.require_distinct_rows and len(set(rows)) < n:
            continue

        matrix = BinaryMatrix.from_rows(
            [[(row >> j) & 1 for j in range(m)] for row in rows]
        )
        leaf_names = {v: str(i + 1) for i, v in enumerate(leaf_ids)}
        nodes = [TreeNode(vector=vectors[v]) for v in range(size)]
        for v in range(size):
            for child in children[v]:
                changes = sorted(
                    [Change(j, True) for j in range(m) if gain_at[j] == child]
                    + [Change(j, False) for j in range(m) if loss_at[j] == child],
                    key=lambda ch: ch.character,
                )
                nodes[v].children.append((tuple(changes), nodes[child]))
            if v in leaf_names:
                nodes[v].species = (leaf_names[v],)
        tree = PersistentPhylogeny(nodes[0], m, matrix.character_labels)
        return matrix, tree
    raise GenerationError(
        f"no acceptable instance in {params.max_retries} attempts "
        f"(n={n}, m={m}, loss={params.loss_probability}, seed={params.seed})"
    )


__all__ = [
    "GenerationError",
    "GeneratorParams",
    "OracleBudgetError",
    "count_conflicts",
    "generate_instance",
    "oracle_solve",
]
