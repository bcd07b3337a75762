"""Brute-force shattering checks for finite domain spaces.

A point set S is shattered by a space of (ID support, OOD support)
pairs if every two-coloring of S is realized exactly: for each A
subset of S some pair has ID support meeting S in A and OOD support
meeting S in S minus A.  The VC dimension is the largest shattered
cardinality.  Everything here is exponential by design with a hard
size cap; the module exists to serve as a test oracle, not to scale.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

SIZE_CAP = 20


@dataclass(frozen=True)
class FiniteSupportPair:
    """The shattering abstraction of a domain: its two support sets."""

    id_support: frozenset
    ood_support: frozenset

    def __post_init__(self):
        object.__setattr__(self, "id_support", frozenset(self.id_support))
        object.__setattr__(self, "ood_support", frozenset(self.ood_support))


def shatters(space, S) -> bool:
    """True iff every (A, S minus A) split of S is realized by some pair."""
    S = frozenset(S)
    if len(S) > SIZE_CAP:
        raise ValueError(f"set of size {len(S)} exceeds the cap {SIZE_CAP}")
    pairs = [(frozenset(p.id_support) & S, frozenset(p.ood_support) & S) for p in space]
    realized = set(pairs)
    elements = sorted(S, key=repr)
    for r in range(len(elements) + 1):
        for combo in combinations(elements, r):
            A = frozenset(combo)
            if (A, S - A) not in realized:
                return False
    return True


def vc_dimension(space, universe) -> int:
    """Largest cardinality of a shattered subset of the universe."""
    universe = sorted(frozenset(universe), key=repr)
    if len(universe) > SIZE_CAP:
        raise ValueError(f"universe of size {len(universe)} exceeds the cap {SIZE_CAP}")
    for size in range(len(universe), 0, -1):
        for S in combinations(universe, size):
            if shatters(space, S):
                return size
    # The empty set is shattered by any non-empty space realizing (empty, empty).
    return 0


def set_system_vc(sets, universe) -> int:
    """Classical VC dimension of a family of sets, via the pair machinery.

    A family F shatters S classically iff the pairs (f, universe minus
    f) shatter S in the two-support sense, because the complement side
    then automatically realizes S minus A.
    """
    universe = frozenset(universe)
    pairs = [FiniteSupportPair(frozenset(f) & universe, universe - frozenset(f))
             for f in sets]
    return vc_dimension(pairs, universe)
