"""Pure-Python reduction engine for the red-black species/character graph.

This is the fallback twin of the compiled engine in ``perphylo._speedups``;
both expose the same class with the same observable behaviour, event for
event.  Species sets are plain Python integers used as bitmasks (bit ``s`` =
species ``s``), characters are dense indices ``0..m-1``.

The engine knows nothing about labels, matrices or trees.  It maintains, per
character, the black-edge mask (observed presence not yet consumed), the
red-edge mask (persistence forced by realization) and the frozen set of
species that received a (gained, lost) completion when the character was
realized.
"""

from __future__ import annotations

INACTIVE = 0
ACTIVE = 1
FREED = 2

EV_REALIZE = "realize"
EV_SPECIES = "species"
EV_FREE = "free"


def lowest_bit(mask: int) -> int:
    """Index of the lowest set bit; undefined for mask == 0."""
    return (mask & -mask).bit_length() - 1


def iter_bits(mask: int):
    """Yield set-bit indices of ``mask`` in ascending order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


class ReductionEngine:
    """Mutable red-black graph state supporting character realization.

    One writer per instance; ``clone()`` gives a fully independent copy, which
    is how the permutation search branches.
    """

    __slots__ = ("n", "m", "black", "red", "persist", "state", "alive")

    def __init__(self, n_species: int, ones):
        self.n = n_species
        self.m = len(ones)
        self.black = list(ones)
        self.red = [0] * self.m
        self.persist = [0] * self.m
        self.state = bytearray(self.m)
        occupied = 0
        for b in self.black:
            occupied |= b
        # species with no incident edges were never in play
        self.alive = ((1 << n_species) - 1) & occupied

    def clone(self) -> "ReductionEngine":
        other = ReductionEngine.__new__(ReductionEngine)
        other.n = self.n
        other.m = self.m
        other.black = self.black.copy()
        other.red = self.red.copy()
        other.persist = self.persist.copy()
        other.state = bytearray(self.state)
        other.alive = self.alive
        return other

    # -- queries -----------------------------------------------------------

    def char_state(self, c: int) -> int:
        return self.state[c]

    def is_active(self, c: int) -> bool:
        """True once the character has been realized (freed counts)."""
        return self.state[c] != INACTIVE

    def active_count(self) -> int:
        return sum(1 for s in self.state if s != INACTIVE)

    def active_set_mask(self) -> int:
        mask = 0
        for c in range(self.m):
            if self.state[c] != INACTIVE:
                mask |= 1 << c
        return mask

    def black_mask(self, c: int) -> int:
        return self.black[c]

    def red_mask(self, c: int) -> int:
        return self.red[c]

    def persist_mask(self, c: int) -> int:
        return self.persist[c]

    def alive_mask(self) -> int:
        return self.alive

    def is_empty(self) -> bool:
        for c in range(self.m):
            if self.black[c] or self.red[c]:
                return False
        return True

    def component(self, c: int) -> tuple[int, int]:
        """Connected component of character ``c`` over edges of both colors.

        Returns (character mask, species mask); ``c`` itself is always in the
        character mask, an isolated character yields an empty species mask.
        """
        black = self.black
        red = self.red
        m = self.m
        comp_chars = 1 << c
        comp_species = black[c] | red[c]
        changed = True
        while changed:
            changed = False
            for c2 in range(m):
                if (comp_chars >> c2) & 1:
                    continue
                adj = black[c2] | red[c2]
                if adj & comp_species:
                    comp_chars |= 1 << c2
                    comp_species |= adj
                    changed = True
        return comp_chars, comp_species

    def find_sigma(self) -> tuple[int, int, int, int, int] | None:
        """First red path s1-c-s2-c'-s3 on three species and two characters.

        Pairs are scanned in ascending (c, c') order; within a pair the three
        witness species are the lowest indices of the exclusive-to-c, shared,
        and exclusive-to-c' sets.  Returns (c, c', s1, s2, s3) or None.
        """
        red = self.red
        m = self.m
        for c in range(m):
            rc = red[c]
            if not rc:
                continue
            for c2 in range(c + 1, m):
                r2 = red[c2]
                if not r2:
                    continue
                shared = rc & r2
                if not shared:
                    continue
                only_c = rc & ~r2
                if not only_c:
                    continue
                only_c2 = r2 & ~rc
                if not only_c2:
                    continue
                return (c, c2, lowest_bit(only_c), lowest_bit(shared), lowest_bit(only_c2))
        return None

    # -- mutation ----------------------------------------------------------

    def realize(self, c: int) -> list[tuple]:
        """Realize character ``c``; returns the ordered event list.

        Events are ("realize", c, species_mask), ("species", s) and
        ("free", c, species_mask).  The realize event records the species of
        the component of ``c`` before any edge changes; those outside the
        black neighbourhood become the persisted (gained-then-lost) set.
        """
        if self.state[c] != INACTIVE:
            raise ValueError(f"character {c} already realized")
        _, comp_species = self.component(c)
        events = [(EV_REALIZE, c, comp_species)]
        self.red[c] = comp_species & ~self.black[c]
        self.persist[c] = self.red[c]
        self.black[c] = 0
        self.state[c] = ACTIVE
        self._sweep_species(events)
        # free cleanup: repeat ascending scans until a full pass is quiet
        progress = True
        while progress:
            progress = False
            for c2 in range(self.m):
                if self.state[c2] != ACTIVE:
                    continue
                _, comp2 = self.component(c2)
                if self.red[c2] == comp2:
                    events.append((EV_FREE, c2, comp2))
                    self.red[c2] = 0
                    self.state[c2] = FREED
                    self._sweep_species(events)
                    progress = True
        return events

    def _sweep_species(self, events: list) -> None:
        occupied = 0
        for c in range(self.m):
            occupied |= self.black[c] | self.red[c]
        isolated = self.alive & ~occupied
        if isolated:
            for s in iter_bits(isolated):
                events.append((EV_SPECIES, s))
            self.alive &= occupied
