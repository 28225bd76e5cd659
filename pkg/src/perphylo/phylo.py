"""Tree construction, relabeling, verification and serialization.

``build_perfect_phylogeny`` turns a forbidden-free completion into a classic
directed perfect phylogeny over the 2m paired columns: columns are sorted by
decreasing population, every species row spells a root-to-leaf column
sequence, and the sequences are merged into a trie.  ``to_persistent``
collapses each (gained, lost) column pair back to a single character: a node
carries a character iff it has the positive column and not the negated one,
and negated-column edges become loss edges.

Trees are plain node records; species sit only on leaves (a species whose
vector equals an internal state hangs off it as a zero-length pendant leaf).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

from .matrix import BinaryMatrix, Completion

NEWICK = "newick"
EDGELIST = "edgelist"

EDGELIST_HEADER = "# ppp-edgelist v1"


class TreeFormatError(ValueError):
    """Malformed serialized tree."""


class Change(NamedTuple):
    """One character flip on an edge: a gain (0 -> 1) or a loss (1 -> 0)."""

    character: int
    gain: bool

    def token(self, labels: Sequence[str]) -> str:
        return ("+" if self.gain else "-") + labels[self.character]


@dataclass
class TreeNode:
    """Rooted-tree node; ``children`` pairs edge labels with subtrees.

    Labels are column ids on perfect-phylogeny trees and ``Change`` tuples on
    persistent trees; an empty label tuple is a zero-length pendant edge.
    """

    vector: int = 0
    children: list[tuple[tuple, "TreeNode"]] = field(default_factory=list)
    species: tuple[str, ...] = ()

    def is_leaf(self) -> bool:
        return not self.children


@dataclass
class PerfectPhylogeny:
    """Directed perfect phylogeny over the 2m paired columns."""

    root: TreeNode
    n_columns: int
    character_labels: tuple[str, ...]


@dataclass
class PersistentPhylogeny:
    """Rooted tree with per-character gain and loss edges."""

    root: TreeNode
    n_characters: int
    character_labels: tuple[str, ...]

    def leaves(self) -> list[TreeNode]:
        out = []

        def walk(node):
            if node.is_leaf():
                out.append(node)
            for _, child in node.children:
                walk(child)

        walk(self.root)
        return out


def build_perfect_phylogeny(completion: Completion) -> PerfectPhylogeny:
    """Trie construction over columns sorted by decreasing one-count.

    Requires a forbidden-free completion (callers test first); a column that
    would have to label two edges raises, since that is exactly a forbidden
    configuration.  Species whose column sequence ends at an internal node
    are attached as pendant leaves.
    """
    me = completion.matrix
    n, m2 = me.n, 2 * me.m
    cols = completion.all_columns()
    order = sorted((c for c in range(m2) if cols[c]), key=lambda c: (-cols[c].bit_count(), c))
    rank = {c: i for i, c in enumerate(order)}

    root = TreeNode()
    used_columns: set[int] = set()
    # trie children as dict col -> node per node, flattened afterwards
    kids: dict[int, dict[int, TreeNode]] = {id(root): {}}
    ends: list[TreeNode] = []
    for s in range(n):
        seq = sorted((c for c in range(m2) if (cols[c] >> s) & 1), key=rank.__getitem__)
        node = root
        for c in seq:
            table = kids[id(node)]
            nxt = table.get(c)
            if nxt is None:
                if c in used_columns:
                    raise ValueError(
                        f"column {c} would label a second edge; the completion admits no perfect phylogeny"
                    )
                used_columns.add(c)
                nxt = TreeNode(vector=node.vector | (1 << c))
                table[c] = nxt
                kids[id(nxt)] = {}
                node.children.append(((c,), nxt))
            node = nxt
        ends.append(node)

    for s, node in enumerate(ends):
        names = me.species_groups[s]
        if node.children or node is root:
            pendant = TreeNode(vector=node.vector, species=names)
            node.children.append(((), pendant))
        else:
            if node.species:
                raise AssertionError("two distinct completion rows reached one leaf")
            node.species = names
    return PerfectPhylogeny(root, m2, me.character_labels)


def to_persistent(tree: PerfectPhylogeny) -> PersistentPhylogeny:
    """Collapse column pairs: node has character j iff gained and not lost."""
    m = len(tree.character_labels)

    def fold(vec2m: int) -> int:
        out = 0
        for j in range(m):
            if (vec2m >> (2 * j)) & 1 and not (vec2m >> (2 * j + 1)) & 1:
                out |= 1 << j
        return out

    def convert(node: TreeNode) -> TreeNode:
        new = TreeNode(vector=fold(node.vector), species=node.species)
        for labels, child in node.children:
            changes = tuple(Change(c // 2, c % 2 == 0) for c in labels)
            new.children.append((changes, convert(child)))
        return new

    return PersistentPhylogeny(convert(tree.root), m, tree.character_labels)


class Violation(NamedTuple):
    prop: int
    message: str


@dataclass
class VerifyReport:
    violations: list[Violation] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def first(self) -> Optional[Violation]:
        return self.violations[0] if self.violations else None

    def __str__(self) -> str:
        if self.ok:
            return "tree verifies: all properties hold"
        return "\n".join(f"property {v.prop} violated: {v.message}" for v in self.violations)


def verify_persistent(tree: PersistentPhylogeny, matrix: BinaryMatrix) -> VerifyReport:
    """Check the defining tree properties against the source matrix.

    1. every node carries an m-wide 0/1 state vector;
    2. the root vector is all zeros;
    3. each character changes state on at most one gain and at most one loss
       edge, the two lie on one root-leaf path with the gain above the loss,
       and every edge's labels match its endpoint vectors exactly;
    4. every matrix row labels exactly one leaf, whose vector equals the row.

    Violations are data, not errors; pendant (zero-length) leaf attachments
    are reported as notes.
    """
    report = VerifyReport()
    m = tree.n_characters
    if m != matrix.n_characters:
        report.violations.append(Violation(1, f"tree has {m} characters, matrix has {matrix.n_characters}"))
        return report

    gain_edge: dict[int, int] = {}
    loss_edge: dict[int, int] = {}
    leaves: list[tuple[int, TreeNode]] = []
    counter = 0

    def walk(node: TreeNode, node_id: int, path_edges: set[int]):
        nonlocal counter
        if node.vector >> m or node.vector < 0:
            report.violations.append(Violation(1, f"node {node_id}: state vector out of range"))
        if node.is_leaf():
            leaves.append((node_id, node))
        elif node.species:
            report.violations.append(Violation(4, f"node {node_id}: species {node.species} on an internal node"))
        for labels, child in node.children:
            counter += 1
            child_id = counter
            vec = node.vector
            edge_key = child_id  # edge named by its lower endpoint
            for ch in labels:
                if not 0 <= ch.character < m:
                    report.violations.append(Violation(3, f"edge to node {child_id}: unknown character {ch.character}"))
                    continue
                bit = 1 << ch.character
                if ch.gain:
                    if vec & bit:
                        report.violations.append(Violation(
                            3, f"edge to node {child_id}: gain of {_label(tree, ch.character)} but state is already 1"))
                    if ch.character in gain_edge:
                        report.violations.append(Violation(
                            3, f"character {_label(tree, ch.character)} gained on more than one edge"))
                    gain_edge[ch.character] = edge_key
                    vec |= bit
                else:
                    if not vec & bit:
                        report.violations.append(Violation(
                            3, f"edge to node {child_id}: loss of {_label(tree, ch.character)} but state is already 0"))
                    if ch.character in loss_edge:
                        report.violations.append(Violation(
                            3, f"character {_label(tree, ch.character)} lost on more than one edge"))
                    loss_edge[ch.character] = edge_key
                    if ch.character not in gain_edge or gain_edge[ch.character] not in path_edges | {edge_key}:
                        report.violations.append(Violation(
                            3, f"loss of {_label(tree, ch.character)} without a gain above it on the same path"))
                    vec &= ~bit
            if vec != child.vector:
                report.violations.append(Violation(
                    3, f"edge to node {child_id}: labels do not account for the state change"))
            if not labels and child.is_leaf():
                report.notes.append(
                    f"species {'|'.join(child.species) or '?'} attached as zero-length leaf of node {node_id}")
            walk(child, child_id, path_edges | {edge_key})

    if tree.root.vector != 0:
        report.violations.append(Violation(2, "root state vector is not all zeros"))
    walk(tree.root, 0, set())

    name_to_leaf: dict[str, list[int]] = {}
    for node_id, leaf in leaves:
        if not leaf.species:
            report.violations.append(Violation(4, f"leaf {node_id} carries no species"))
        for name in leaf.species:
            name_to_leaf.setdefault(name, []).append(node_id)
    leaf_by_id = dict(leaves)
    for s in range(matrix.n_species):
        for name in matrix.species_groups[s]:
            hits = name_to_leaf.pop(name, [])
            if len(hits) != 1:
                report.violations.append(Violation(
                    4, f"species {name} labels {len(hits)} leaves, expected exactly one"))
                continue
            leaf = leaf_by_id[hits[0]]
            if leaf.vector != matrix.rows[s]:
                report.violations.append(Violation(
                    4, f"species {name}: leaf {hits[0]} state vector differs from its matrix row"))
    for name, hits in name_to_leaf.items():
        report.violations.append(Violation(4, f"leaf species {name} does not occur in the matrix"))
    return report


def _label(tree, c: int) -> str:
    return tree.character_labels[c]


# -- serialization ---------------------------------------------------------


def _contract(node: TreeNode, incoming: tuple) -> tuple[tuple, TreeNode]:
    # fold unary species-free chains into multi-label edges
    while len(node.children) == 1 and not node.species:
        labels, child = node.children[0]
        incoming = incoming + labels
        node = child
    return incoming, node


def _child_sort_key(tree: PersistentPhylogeny, labels: tuple, child: TreeNode):
    if labels:
        ch = labels[0]
        return (1, 2 * ch.character + (0 if ch.gain else 1), "")
    names = child.species or ()
    return (0, 0, names[0] if names else "")


def _annot(labels: tuple, char_labels: Sequence[str]) -> str:
    if not labels:
        return ""
    return ":" + "".join(ch.token(char_labels) for ch in labels)


def write_newick(tree: PersistentPhylogeny) -> str:
    """Nested-parentheses form; edge changes ride on ':+name'/'-name' tokens,
    co-located species names are joined by '|'."""

    def render(node: TreeNode, incoming: tuple) -> str:
        incoming, node = _contract(node, incoming)
        if node.is_leaf():
            name = "|".join(node.species)
            return name + _annot(incoming, tree.character_labels)
        parts = [render(child, labels) for labels, child in _sorted_children(tree, node)]
        return "(" + ",".join(parts) + ")" + _annot(incoming, tree.character_labels)

    parts = [render(child, labels) for labels, child in _sorted_children(tree, tree.root)]
    return "(" + ",".join(parts) + ");"


def _sorted_children(tree, node):
    return sorted(node.children, key=lambda lc: _child_sort_key(tree, lc[0], lc[1]))


def write_edgelist(tree: PersistentPhylogeny) -> str:
    """One 'parent child label' line per edge, nodes numbered in pre-order;
    '# leaf id names' comments carry the species placement."""
    lines = [EDGELIST_HEADER]
    leaf_lines = []
    counter = 0

    def walk(node: TreeNode, node_id: int):
        nonlocal counter
        if node.species:
            leaf_lines.append(f"# leaf {node_id} {'|'.join(node.species)}")
        for labels, child in _sorted_children(tree, node):
            labels, child = _contract(child, labels)
            counter += 1
            child_id = counter
            token = "".join(ch.token(tree.character_labels) for ch in labels) or "-"
            lines.append(f"{node_id} {child_id} {token}")
            walk(child, child_id)

    walk(tree.root, 0)
    return "\n".join(lines + leaf_lines) + "\n"


def serialize(tree: PersistentPhylogeny, fmt: str) -> str:
    if fmt == NEWICK:
        return write_newick(tree)
    if fmt == EDGELIST:
        return write_edgelist(tree)
    raise ValueError(f"unknown tree format {fmt!r}")


_TOKEN_SPLIT = re.compile(r"([+-])")


def _parse_label_token(token: str, char_index: dict[str, int], lineno: int) -> tuple:
    if token == "-":
        return ()
    parts = _TOKEN_SPLIT.split(token)
    if parts[0] != "" or len(parts) < 3 or len(parts) % 2 == 0:
        raise TreeFormatError(f"line {lineno}: malformed edge label {token!r}")
    changes = []
    for sign, name in zip(parts[1::2], parts[2::2]):
        if not name:
            raise TreeFormatError(f"line {lineno}: malformed edge label {token!r}")
        if name not in char_index:
            raise TreeFormatError(f"line {lineno}: unknown character {name!r}")
        changes.append(Change(char_index[name], sign == "+"))
    return tuple(changes)


def parse_edgelist(text: str, character_labels: Sequence[str]) -> PersistentPhylogeny:
    """Inverse of ``write_edgelist``; node vectors are recomputed root-down."""
    char_index = {lab: j for j, lab in enumerate(character_labels)}
    lines = text.splitlines()
    if not lines or lines[0].strip() != EDGELIST_HEADER:
        raise TreeFormatError(f"missing header line {EDGELIST_HEADER!r}")
    edges: list[tuple[int, int, tuple]] = []
    leaf_names: dict[int, tuple[str, ...]] = {}
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if parts[:1] == ["leaf"]:
                if len(parts) != 3:
                    raise TreeFormatError(f"line {lineno}: malformed leaf line")
                leaf_names[int(parts[1])] = tuple(parts[2].split("|"))
            continue
        parts = line.split()
        if len(parts) != 3:
            raise TreeFormatError(f"line {lineno}: expected 'parent child label'")
        try:
            parent, child = int(parts[0]), int(parts[1])
        except ValueError:
            raise TreeFormatError(f"line {lineno}: node ids must be integers") from None
        edges.append((parent, child, _parse_label_token(parts[2], char_index, lineno)))

    nodes: dict[int, TreeNode] = {0: TreeNode()}
    children_of: dict[int, list] = {0: []}
    seen_child: set[int] = set()
    for parent, child, labels in edges:
        if child in seen_child or child == 0:
            raise TreeFormatError(f"node {child} has two parents")
        seen_child.add(child)
        if parent not in nodes:
            raise TreeFormatError(f"edge references unknown parent {parent} (ids must be pre-order)")
        node = TreeNode()
        nodes[child] = node
        nodes[parent].children.append((labels, node))
    for node_id, names in leaf_names.items():
        if node_id not in nodes:
            raise TreeFormatError(f"leaf line references unknown node {node_id}")
        nodes[node_id].species = names

    def assign(node: TreeNode):
        for labels, child in node.children:
            vec = node.vector
            for ch in labels:
                if ch.gain:
                    vec |= 1 << ch.character
                else:
                    vec &= ~(1 << ch.character)
            child.vector = vec
            assign(child)

    assign(nodes[0])
    return PersistentPhylogeny(nodes[0], len(character_labels), tuple(character_labels))


__all__ = [
    "Change",
    "EDGELIST",
    "NEWICK",
    "PerfectPhylogeny",
    "PersistentPhylogeny",
    "TreeFormatError",
    "TreeNode",
    "VerifyReport",
    "Violation",
    "build_perfect_phylogeny",
    "parse_edgelist",
    "serialize",
    "to_persistent",
    "verify_persistent",
    "write_edgelist",
    "write_newick",
]
