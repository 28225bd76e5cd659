"""Red-black reduction graph: realization, free cleanup, sigma detection.

The graph is bipartite over species and characters.  A black edge (c, s)
records that species ``s`` carries character ``c``; realizing ``c`` rewires
its component: every component species not already adjacent gets a red edge
(it is forced to gain and lose ``c``), the black edges disappear, and any
realized character left red-adjacent to its whole component is freed.  A
sequence of realizations that deletes every edge is the certificate that the
instance has a solution.

Mutations go through ``realize``/``replay`` only; clones are independent, so
search branches can share a parent graph read-only and complete their own
copies.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional, Sequence, Union

from ._engine import ReductionEngine, backend_name
from ._native import ACTIVE, EV_FREE, EV_REALIZE, EV_SPECIES, FREED, INACTIVE, iter_bits
from .matrix import Completion, ExtendedMatrix


class CharacterRealized(NamedTuple):
    character: int
    species: frozenset[int]


class CharacterFreed(NamedTuple):
    character: int
    species: frozenset[int]


class SpeciesRealized(NamedTuple):
    species: int


LogEvent = Union[CharacterRealized, CharacterFreed, SpeciesRealized]


class TraceError(ValueError):
    """Malformed or inconsistent realization trace."""


@dataclass
class RealizationLog:
    """Ordered record of realize/free/species events.

    Serializes to a line-oriented trace (``realize c`` / ``free c`` /
    ``species s``) used by the CLI and by regression fixtures; the species
    sets attached to realize/free events record the component at the moment
    of the event.
    """

    events: list[LogEvent] = field(default_factory=list)

    def append_raw(self, raw_events: Iterable[tuple]) -> None:
        for ev in raw_events:
            if ev[0] == EV_REALIZE:
                self.events.append(CharacterRealized(ev[1], frozenset(iter_bits(ev[2]))))
            elif ev[0] == EV_FREE:
                self.events.append(CharacterFreed(ev[1], frozenset(iter_bits(ev[2]))))
            elif ev[0] == EV_SPECIES:
                self.events.append(SpeciesRealized(ev[1]))
            else:
                raise ValueError(f"unknown engine event {ev!r}")

    def realized_sequence(self) -> list[int]:
        return [ev.character for ev in self.events if isinstance(ev, CharacterRealized)]

    def to_trace(self, character_labels: Sequence[str], species_groups: Sequence[Sequence[str]]) -> str:
        lines = []
        for ev in self.events:
            if isinstance(ev, CharacterRealized):
                lines.append(f"realize {character_labels[ev.character]}")
            elif isinstance(ev, CharacterFreed):
                lines.append(f"free {character_labels[ev.character]}")
            else:
                lines.append(f"species {'|'.join(species_groups[ev.species])}")
        return "\n".join(lines) + ("\n" if lines else "")


def parse_trace(text: str) -> list[tuple[str, str]]:
    """Trace text -> list of (verb, name); comments and blanks are skipped."""
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2 or parts[0] not in ("realize", "free", "species"):
            raise TraceError(f"line {lineno}: expected 'realize|free|species NAME', got {line!r}")
        out.append((parts[0], parts[1]))
    return out


class SigmaWitness(NamedTuple):
    """Red path s1 - c - s2 - c2 - s3 over two characters, three species."""

    c: int
    c2: int
    s1: int
    s2: int
    s3: int

    @property
    def characters(self) -> tuple[int, int]:
        return (self.c, self.c2)

    @property
    def species(self) -> tuple[int, int, int]:
        return (self.s1, self.s2, self.s3)


class Component(NamedTuple):
    characters: frozenset[int]
    species: frozenset[int]


class RedBlackGraph:
    """Label-aware wrapper over the bitset reduction engine.

    ``ones`` keeps the observed columns of the source matrix; the engine
    consumes its black edges during realization, so the wrapper needs them to
    reconstruct completed columns.
    """

    __slots__ = ("engine", "ones", "n_species", "n_characters", "character_labels", "species_groups")

    def __init__(self, engine: ReductionEngine, ones, character_labels, species_groups):
        self.engine = engine
        self.ones = ones
        self.n_species = engine.n
        self.n_characters = engine.m
        self.character_labels = character_labels
        self.species_groups = species_groups

    @classmethod
    def from_extended(cls, me: ExtendedMatrix) -> "RedBlackGraph":
        """Black edges exactly at the (1, 0) pairs; nothing realized yet."""
        if any(me.completed):
            raise ValueError("graph construction expects a fresh extended matrix")
        engine = ReductionEngine(me.n, list(me.ones))
        return cls(engine, me.ones, me.character_labels, me.species_groups)

    def clone(self) -> "RedBlackGraph":
        return RedBlackGraph(self.engine.clone(), self.ones, self.character_labels, self.species_groups)

    # -- queries -----------------------------------------------------------

    def is_active(self, c: int) -> bool:
        return self.engine.is_active(c)

    def is_freed(self, c: int) -> bool:
        return self.engine.char_state(c) == FREED

    def candidates(self) -> list[int]:
        return [c for c in range(self.n_characters) if self.engine.char_state(c) == INACTIVE]

    def black_edges(self) -> set[tuple[int, int]]:
        return {(c, s) for c in range(self.n_characters) for s in iter_bits(self.engine.black_mask(c))}

    def red_edges(self) -> set[tuple[int, int]]:
        return {(c, s) for c in range(self.n_characters) for s in iter_bits(self.engine.red_mask(c))}

    def is_e_empty(self) -> bool:
        return self.engine.is_empty()

    def component_of(self, c: int) -> Component:
        chars, species = self.engine.component(c)
        return Component(frozenset(iter_bits(chars)), frozenset(iter_bits(species)))

    def find_sigma(self) -> Optional[SigmaWitness]:
        hit = self.engine.find_sigma()
        return SigmaWitness(*hit) if hit is not None else None

    def persisted_species(self, c: int) -> int:
        return self.engine.persist_mask(c)

    def completed_column_masks(self) -> list[tuple[int, int]]:
        """Resolved (2m-column, mask) pairs implied by the realizations so far."""
        cols = []
        eng = self.engine
        for c in range(self.n_characters):
            if eng.is_active(c):
                cols.append((2 * c, self.ones[c] | eng.persist_mask(c)))
                cols.append((2 * c + 1, eng.persist_mask(c)))
        return cols

    # -- mutation ----------------------------------------------------------

    def realize(
        self,
        c: int,
        me: Optional[ExtendedMatrix] = None,
        log: Optional[RealizationLog] = None,
    ) -> None:
        """Realize character ``c``; optionally applies the canonical
        completion to ``me`` and appends the events to ``log``."""
        events = self.engine.realize(c)
        if me is not None:
            me.complete_character(c, self.engine.persist_mask(c))
        if log is not None:
            log.append_raw(events)


@dataclass
class ReplayResult:
    graph: RedBlackGraph
    matrix: ExtendedMatrix
    log: RealizationLog
    completion: Optional[Completion]

    @property
    def is_successful(self) -> bool:
        return self.completion is not None


def replay(me: ExtendedMatrix, sequence: Sequence[int]) -> ReplayResult:
    """Realize ``sequence`` in order on fresh copies of matrix and graph.

    ``sequence`` must be duplicate-free; a full permutation that leaves the
    graph edge-free yields a ``Completion`` (the ordering was a successful
    reduction), anything else leaves ``completion`` as None.
    """
    seen = set()
    for c in sequence:
        if not (0 <= c < me.m):
            raise ValueError(f"character index {c} out of range")
        if c in seen:
            raise ValueError(f"duplicate realization of character {c}")
        seen.add(c)
    graph = RedBlackGraph.from_extended(me)
    work = me.copy()
    log = RealizationLog()
    for c in sequence:
        graph.realize(c, work, log)
    completion = None
    if len(seen) == me.m and graph.is_e_empty():
        provenance = tuple((c, graph.persisted_species(c)) for c in sequence)
        completion = Completion(work, provenance)
    return ReplayResult(graph, work, log, completion)


__all__ = [
    "CharacterFreed",
    "CharacterRealized",
    "Component",
    "RealizationLog",
    "RedBlackGraph",
    "ReplayResult",
    "SigmaWitness",
    "SpeciesRealized",
    "TraceError",
    "backend_name",
    "parse_trace",
    "replay",
]
