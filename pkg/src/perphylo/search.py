"""Depth-first branch-and-bound over character realization orders.

Each node of the decision tree realizes one more non-realized character on a
private copy of the graph (copy-on-branch: the free-character cascades make
undo bookkeeping error-prone, and a clone is a handful of machine words per
character).  A branch dies as soon as the graph shows a red sigma path; a
branch that realizes every character on an edge-free graph is a certificate.

The sigma prune is provably safe (the induced pair of resolved columns can
never lose its forbidden triple), so disabling it changes node counts only.
Whether the reached graph depends on the realized *set* alone, not its
order, is unproven; set-memoization therefore ships switched off and is
exposed as ``memo="unsafe"`` for experiments.
"""

from __future__ import annotations

import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

from .matrix import ExtendedMatrix, has_forbidden_submatrix
from .redblack import RealizationLog, RedBlackGraph, replay


class Status(str, Enum):
    SAT = "SAT"
    UNSAT = "UNSAT"
    TIMEOUT = "TIMEOUT"

    def __str__(self) -> str:
        return self.value


ORDERINGS = ("lex", "component-degree")
MEMO_MODES = ("off", "unsafe")


class PruneDisagreement(RuntimeError):
    """Sigma prune and forbidden-submatrix prune disagreed on a state."""


@dataclass
class SearchOptions:
    order: str = "lex"
    max_time: Optional[float] = None
    max_nodes: Optional[int] = None
    memo: str = "off"
    parallel: int = 1
    prune: bool = True
    cross_check: bool = False

    def __post_init__(self):
        if self.order not in ORDERINGS:
            raise ValueError(f"unknown ordering {self.order!r}")
        if self.memo not in MEMO_MODES:
            raise ValueError(f"unknown memo mode {self.memo!r}")
        if self.parallel < 1:
            raise ValueError("parallel must be >= 1")


@dataclass
class SearchState:
    """Graph after realizing ``realized`` in order, plus the source matrix."""

    graph: RedBlackGraph
    realized: tuple[int, ...]
    source: ExtendedMatrix

    def branch(self, c: int) -> "SearchState":
        child = self.graph.clone()
        child.realize(c)
        return SearchState(child, self.realized + (c,), self.source)

    @property
    def matrix(self) -> ExtendedMatrix:
        """The partial completion reached by this state, materialized."""
        me = self.source.copy()
        for c, mask in self.completed_pairs():
            me.complete_character(c, mask)
        return me

    def completed_pairs(self) -> list[tuple[int, int]]:
        eng = self.graph.engine
        return [(c, eng.persist_mask(c)) for c in self.realized]


def next_candidates(state: SearchState, heuristic: str = "lex") -> list[int]:
    """Non-realized characters in expansion order.

    ``lex`` is ascending index; ``component-degree`` prefers characters in
    smaller components (species + character nodes), breaking ties by higher
    black degree, then index.
    """
    free = state.graph.candidates()
    if heuristic == "lex":
        return free
    if heuristic == "component-degree":
        eng = state.graph.engine

        def key(c: int):
            chars, species = eng.component(c)
            size = chars.bit_count() + species.bit_count()
            return (size, -eng.black_mask(c).bit_count(), c)

        return sorted(free, key=key)
    raise ValueError(f"unknown ordering {heuristic!r}")


def prune(state: SearchState, cross_check: bool = False) -> bool:
    """True iff the branch is dead: the graph shows a red sigma path.

    With ``cross_check`` the resolved column pairs are also scanned for a
    forbidden submatrix and the two answers must agree.
    """
    hit = state.graph.find_sigma() is not None
    if cross_check:
        cols = state.graph.completed_column_masks()
        witness = has_forbidden_submatrix([mask for _, mask in cols], state.graph.n_species)
        if (witness is not None) != hit:
            raise PruneDisagreement(
                f"after {state.realized}: sigma={'yes' if hit else 'no'} "
                f"forbidden={witness!r}"
            )
    return hit


@dataclass
class SolveOutcome:
    status: Status
    reduction: Optional[tuple[int, ...]] = None
    completion: Optional[object] = None
    log: Optional[RealizationLog] = None
    nodes: int = 0
    prunes: int = 0
    elapsed: float = 0.0


class _Budget(Exception):
    pass


@dataclass
class _Ctx:
    opts: SearchOptions
    deadline: Optional[float]
    nodes: int = 0
    prunes: int = 0
    memo: Optional[set] = None
    cancel: Optional[threading.Event] = None

    def tick(self) -> None:
        self.nodes += 1
        if self.opts.max_nodes is not None and self.nodes > self.opts.max_nodes:
            raise _Budget
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise _Budget
        if self.cancel is not None and self.cancel.is_set():
            raise _Budget


def _dfs(state: SearchState, ctx: _Ctx) -> Optional[SearchState]:
    opts = ctx.opts
    m = state.graph.n_characters
    for c in next_candidates(state, opts.order):
        ctx.tick()
        child = state.branch(c)
        if opts.prune and prune(child, cross_check=opts.cross_check):
            ctx.prunes += 1
            continue
        if len(child.realized) == m:
            if child.graph.is_e_empty():
                return child
            continue
        if ctx.memo is not None:
            key = child.graph.engine.active_set_mask()
            if key in ctx.memo:
                continue
            ctx.memo.add(key)
        hit = _dfs(child, ctx)
        if hit is not None:
            return hit
    return None


def decide_pp(me: ExtendedMatrix, opts: Optional[SearchOptions] = None) -> SolveOutcome:
    """Search for a successful reduction of the extended matrix.

    SAT comes with a full character ordering whose replay empties the graph,
    plus the induced completion and log; UNSAT certifies the decision tree
    was exhausted.  Exceeding ``max_time``/``max_nodes`` yields TIMEOUT.
    """
    if opts is None:
        opts = SearchOptions()
    if any(me.completed):
        raise ValueError("search expects a freshly built extended matrix")
    start = time.monotonic()
    deadline = start + opts.max_time if opts.max_time is not None else None
    root = SearchState(RedBlackGraph.from_extended(me), (), me)

    if opts.parallel > 1:
        status, win, nodes, prunes = _solve_parallel(root, opts, deadline)
    else:
        ctx = _Ctx(opts, deadline, memo=set() if opts.memo == "unsafe" else None)
        try:
            win = _dfs(root, ctx)
            status = Status.SAT if win is not None else Status.UNSAT
        except _Budget:
            win = None
            status = Status.TIMEOUT
        nodes, prunes = ctx.nodes, ctx.prunes

    outcome = SolveOutcome(status=status, nodes=nodes, prunes=prunes, elapsed=time.monotonic() - start)
    if win is not None:
        result = replay(me, win.realized)
        if result.completion is None:
            raise AssertionError("SAT certificate failed to replay to an edge-free graph")
        outcome.reduction = tuple(win.realized)
        outcome.completion = result.completion
        outcome.log = result.log
    return outcome


def _solve_parallel(root: SearchState, opts: SearchOptions, deadline):
    """Race the top-level branches; the SAT branch with the smallest rank wins.

    Branches ranked after a finished SAT branch are cancelled and their
    statistics dropped, so the reported counts stay reproducible.  The node
    budget applies per branch.
    """
    tops = next_candidates(root, opts.order)
    cancels = [threading.Event() for _ in tops]
    results: list = [None] * len(tops)

    def run(rank: int, c: int):
        ctx = _Ctx(opts, deadline, memo=set() if opts.memo == "unsafe" else None,
                   cancel=cancels[rank])
        try:
            ctx.tick()
            child = root.branch(c)
            win = None
            if opts.prune and prune(child, cross_check=opts.cross_check):
                ctx.prunes += 1
            elif len(child.realized) == child.graph.n_characters:
                win = child if child.graph.is_e_empty() else None
            else:
                win = _dfs(child, ctx)
            status = Status.SAT if win is not None else Status.UNSAT
        except _Budget:
            if cancels[rank].is_set():
                return (rank, None, None, 0, 0)
            win, status = None, Status.TIMEOUT
        if status == Status.SAT:
            for ev in cancels[rank + 1:]:
                ev.set()
        return (rank, status, win, ctx.nodes, ctx.prunes)

    with ThreadPoolExecutor(max_workers=opts.parallel) as pool:
        for rec in pool.map(run, range(len(tops)), tops):
            results[rec[0]] = rec

    win_rank = next((r for r, rec in enumerate(results) if rec[1] == Status.SAT), None)
    counted = results if win_rank is None else results[: win_rank + 1]
    nodes = sum(rec[3] for rec in counted)
    prunes = sum(rec[4] for rec in counted)
    if win_rank is not None:
        return Status.SAT, results[win_rank][2], nodes, prunes
    if any(rec[1] == Status.TIMEOUT for rec in results):
        return Status.TIMEOUT, None, nodes, prunes
    return Status.UNSAT, None, nodes, prunes


__all__ = [
    "PruneDisagreement",
    "SearchOptions",
    "SearchState",
    "SolveOutcome",
    "Status",
    "decide_pp",
    "next_candidates",
    "prune",
]
