# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled reduction engine; behavioural twin of ``perphylo._native``.

Species masks live in flat uint64 word arrays instead of Python integers;
everything else, including the order of emitted events, matches the pure
implementation bit for bit.
"""

from cpython.mem cimport PyMem_Free, PyMem_Malloc
from libc.string cimport memcpy, memset

from libc.stdint cimport uint64_t

cdef extern from *:
    int __builtin_ctzll(unsigned long long) nogil

INACTIVE = 0
ACTIVE = 1
FREED = 2

cdef int C_INACTIVE = 0
cdef int C_ACTIVE = 1
cdef int C_FREED = 2


cdef inline uint64_t _low_word(object mask, int shift):
    return <uint64_t> ((mask >> shift) & 0xFFFFFFFFFFFFFFFF)


cdef object _words_to_int(uint64_t* words, int nwords):
    cdef object out = 0
    cdef int w
    for w in range(nwords - 1, -1, -1):
        out = (out << 64) | words[w]
    return out


cdef class ReductionEngine:
    """Mutable red-black graph state supporting character realization."""

    cdef public int n
    cdef public int m
    cdef int words
    cdef uint64_t* black
    cdef uint64_t* red
    cdef uint64_t* persist
    cdef uint64_t* alive
    cdef uint64_t* scratch_comp
    cdef uint64_t* scratch_occ
    cdef unsigned char* state
    cdef unsigned char* in_comp

    def __cinit__(self, int n_species, ones=None, int m_hint=0):
        cdef int m = m_hint if ones is None else len(ones)
        cdef int words = (n_species + 63) >> 6
        if words == 0:
            words = 1
        self.n = n_species
        self.m = m
        self.words = words
        self.black = <uint64_t*> PyMem_Malloc(m * words * sizeof(uint64_t))
        self.red = <uint64_t*> PyMem_Malloc(m * words * sizeof(uint64_t))
        self.persist = <uint64_t*> PyMem_Malloc(m * words * sizeof(uint64_t))
        self.alive = <uint64_t*> PyMem_Malloc(words * sizeof(uint64_t))
        self.scratch_comp = <uint64_t*> PyMem_Malloc(words * sizeof(uint64_t))
        self.scratch_occ = <uint64_t*> PyMem_Malloc(words * sizeof(uint64_t))
        self.state = <unsigned char*> PyMem_Malloc(m if m else 1)
        self.in_comp = <unsigned char*> PyMem_Malloc(m if m else 1)
        if (self.black == NULL or self.red == NULL or self.persist == NULL
                or self.alive == NULL or self.scratch_comp == NULL
                or self.scratch_occ == NULL or self.state == NULL or self.in_comp == NULL):
            raise MemoryError
        memset(self.black, 0, m * words * sizeof(uint64_t))
        memset(self.red, 0, m * words * sizeof(uint64_t))
        memset(self.persist, 0, m * words * sizeof(uint64_t))
        memset(self.alive, 0, words * sizeof(uint64_t))
        memset(self.state, 0, m if m else 1)

        cdef int c, w
        if ones is not None:
            for c in range(m):
                mask = ones[c]
                for w in range(words):
                    self.black[c * words + w] = _low_word(mask, 64 * w)
            # species with no incident edges were never in play
            for c in range(m):
                for w in range(words):
                    self.alive[w] |= self.black[c * words + w]

    def __dealloc__(self):
        PyMem_Free(self.black)
        PyMem_Free(self.red)
        PyMem_Free(self.persist)
        PyMem_Free(self.alive)
        PyMem_Free(self.scratch_comp)
        PyMem_Free(self.scratch_occ)
        PyMem_Free(self.state)
        PyMem_Free(self.in_comp)

    def clone(self):
        cdef ReductionEngine other = ReductionEngine(self.n, None, m_hint=self.m)
        memcpy(other.black, self.black, self.m * self.words * sizeof(uint64_t))
        memcpy(other.red, self.red, self.m * self.words * sizeof(uint64_t))
        memcpy(other.persist, self.persist, self.m * self.words * sizeof(uint64_t))
        memcpy(other.alive, self.alive, self.words * sizeof(uint64_t))
        memcpy(other.state, self.state, self.m if self.m else 1)
        return other

    # -- queries -----------------------------------------------------------

    def char_state(self, int c):
        return self.state[c]

    def is_active(self, int c):
        return self.state[c] != C_INACTIVE

    def active_count(self):
        cdef int c, k = 0
        for c in range(self.m):
            if self.state[c] != C_INACTIVE:
                k += 1
        return k

    def active_set_mask(self):
        cdef object mask = 0
        cdef int c
        for c in range(self.m):
            if self.state[c] != C_INACTIVE:
                mask |= 1 << c
        return mask

    def black_mask(self, int c):
        return _words_to_int(self.black + c * self.words, self.words)

    def red_mask(self, int c):
        return _words_to_int(self.red + c * self.words, self.words)

    def persist_mask(self, int c):
        return _words_to_int(self.persist + c * self.words, self.words)

    def alive_mask(self):
        return _words_to_int(self.alive, self.words)

    def is_empty(self):
        cdef int i
        for i in range(self.m * self.words):
            if self.black[i] or self.red[i]:
                return False
        return True

    cdef void _component(self, int c):
        """Fill in_comp (char flags) and scratch_comp (species words)."""
        cdef int words = self.words
        cdef int m = self.m
        cdef int c2, w
        cdef bint changed = True, hit
        memset(self.in_comp, 0, m)
        self.in_comp[c] = 1
        for w in range(words):
            self.scratch_comp[w] = self.black[c * words + w] | self.red[c * words + w]
        while changed:
            changed = False
            for c2 in range(m):
                if self.in_comp[c2]:
                    continue
                hit = False
                for w in range(words):
                    if (self.black[c2 * words + w] | self.red[c2 * words + w]) & self.scratch_comp[w]:
                        hit = True
                        break
                if hit:
                    self.in_comp[c2] = 1
                    for w in range(words):
                        self.scratch_comp[w] |= self.black[c2 * words + w] | self.red[c2 * words + w]
                    changed = True

    def component(self, int c):
        self._component(c)
        cdef object chars = 0
        cdef int c2
        for c2 in range(self.m):
            if self.in_comp[c2]:
                chars |= 1 << c2
        return chars, _words_to_int(self.scratch_comp, self.words)

    def find_sigma(self):
        cdef int words = self.words
        cdef int m = self.m
        cdef int c, c2, w
        cdef bint shared, only1, only2
        cdef uint64_t a, b
        for c in range(m):
            only1 = False
            for w in range(words):
                if self.red[c * words + w]:
                    only1 = True
                    break
            if not only1:
                continue
            for c2 in range(c + 1, m):
                shared = only1 = only2 = False
                for w in range(words):
                    a = self.red[c * words + w]
                    b = self.red[c2 * words + w]
                    if a & b:
                        shared = True
                    if a & ~b:
                        only1 = True
                    if b & ~a:
                        only2 = True
                    if shared and only1 and only2:
                        break
                if shared and only1 and only2:
                    return (c, c2,
                            self._lowest(c, c2, 1),
                            self._lowest(c, c2, 0),
                            self._lowest(c2, c, 1))
        return None

    cdef int _lowest(self, int c, int other, int exclusive):
        """Lowest species of red[c] & ~red[other] (exclusive) or red & red."""
        cdef int words = self.words
        cdef int w
        cdef uint64_t v
        for w in range(words):
            if exclusive:
                v = self.red[c * words + w] & ~self.red[other * words + w]
            else:
                v = self.red[c * words + w] & self.red[other * words + w]
            if v:
                return 64 * w + __builtin_ctzll(v)
        return -1

    # -- mutation ----------------------------------------------------------

    def realize(self, int c):
        if self.state[c] != C_INACTIVE:
            raise ValueError(f"character {c} already realized")
        cdef int words = self.words
        cdef int w, c2
        cdef bint progress, is_free
        self._component(c)
        events = [("realize", c, _words_to_int(self.scratch_comp, words))]
        for w in range(words):
            self.red[c * words + w] = self.scratch_comp[w] & ~self.black[c * words + w]
            self.persist[c * words + w] = self.red[c * words + w]
            self.black[c * words + w] = 0
        self.state[c] = C_ACTIVE
        self._sweep_species(events)
        progress = True
        while progress:
            progress = False
            for c2 in range(self.m):
                if self.state[c2] != C_ACTIVE:
                    continue
                self._component(c2)
                is_free = True
                for w in range(words):
                    if self.red[c2 * words + w] != self.scratch_comp[w]:
                        is_free = False
                        break
                if is_free:
                    events.append(("free", c2, _words_to_int(self.scratch_comp, words)))
                    for w in range(words):
                        self.red[c2 * words + w] = 0
                    self.state[c2] = C_FREED
                    self._sweep_species(events)
                    progress = True
        return events

    cdef void _sweep_species(self, list events):
        cdef int words = self.words
        cdef int c, w, bit
        cdef uint64_t iso
        memset(self.scratch_occ, 0, words * sizeof(uint64_t))
        for c in range(self.m):
            for w in range(words):
                self.scratch_occ[w] |= self.black[c * words + w] | self.red[c * words + w]
        for w in range(words):
            iso = self.alive[w] & ~self.scratch_occ[w]
            while iso:
                bit = __builtin_ctzll(iso)
                events.append(("species", 64 * w + bit))
                iso &= iso - 1
            self.alive[w] &= self.scratch_occ[w]
