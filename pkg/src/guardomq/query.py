"""Boolean conjunctive queries and unions of them."""
from __future__ import annotations

import itertools
from collections.abc import Iterable, Iterator

from .errors import PreconditionError
from .relstruct import Fact, Structure, maps_to


def _first_occurrence(atoms) -> list:
    order = []
    seen = set()
    for f in sorted(atoms):
        for a in f.args:
            if a not in seen:
                seen.add(a)
                order.append(a)
    return order


class CQ:
    """A Boolean CQ: a nonempty set of atoms whose terms are all variables."""

    __slots__ = ("atoms", "variables", "name")

    def __init__(self, atoms: Iterable, name: str | None = None):
        atoms = frozenset(Fact(a[0], tuple(a[1])) for a in atoms)
        if not atoms:
            raise PreconditionError("a CQ must contain at least one atom")
        self.atoms = atoms
        self.variables = tuple(_first_occurrence(atoms))
        self.name = name

    def __eq__(self, other):
        if not isinstance(other, CQ):
            return NotImplemented
        return self.atoms == other.atoms

    def __hash__(self):
        return hash(self.atoms)

    def __len__(self):
        return len(self.atoms)

    def __iter__(self):
        return iter(sorted(self.atoms))

    def __repr__(self):
        return f"CQ({', '.join(map(str, self))})"

    def __str__(self):
        return ", ".join(map(str, self))

    def canonical_db(self) -> Structure:
        return Structure(self.atoms)

    def rename(self, mapping) -> CQ:
        return CQ((f.rename(mapping) for f in self.atoms), self.name)

    def canonical(self) -> CQ:
        """Rename variables to V0, V1, ... by first occurrence in the sorted atom list.

        Renaming changes the sort order, so the step is repeated until it is
        stable (or a short cycle is detected, in which case the least form wins).
        """
        current = self
        seen = []
        while True:
            order = _first_occurrence(current.atoms)
            nxt = current.rename({v: f"V{i}" for i, v in enumerate(order)})
            if nxt == current:
                return nxt
            if nxt in seen:
                return min(seen, key=lambda c: sorted(c.atoms))
            seen.append(nxt)
            current = nxt

    def relations(self) -> frozenset:
        return frozenset(f.relation for f in self.atoms)


def as_cq(x) -> CQ:
    if isinstance(x, CQ):
        return x
    if isinstance(x, Structure):
        return CQ(x.facts)
    return CQ(x)


class UCQ:
    __slots__ = ("disjuncts", "name")

    def __init__(self, disjuncts: Iterable, name: str | None = None):
        ds = tuple(as_cq(d) for d in disjuncts)
        if not ds:
            raise PreconditionError("a UCQ needs at least one disjunct")
        self.disjuncts = ds
        self.name = name

    def __iter__(self):
        return iter(self.disjuncts)

    def __len__(self):
        return len(self.disjuncts)

    def __eq__(self, other):
        if not isinstance(other, UCQ):
            return NotImplemented
        return self.disjuncts == other.disjuncts

    def __hash__(self):
        return hash(self.disjuncts)

    def __repr__(self):
        return "UCQ(" + " | ".join(map(str, self.disjuncts)) + ")"

    def relations(self) -> frozenset:
        return frozenset().union(*(d.relations() for d in self.disjuncts))


def as_ucq(x) -> UCQ:
    if isinstance(x, UCQ):
        return x
    if isinstance(x, CQ):
        return UCQ([x])
    return UCQ(x)


def canonical_db(q: CQ) -> Structure:
    return q.canonical_db()


def set_partitions(items: list) -> Iterator[list[list]]:
    """All set partitions of ``items`` as restricted growth strings."""
    n = len(items)
    if n == 0:
        yield []
        return

    def grow(i, labels, blocks):
        if i == n:
            yield [[items[j] for j in range(n) if labels[j] == b] for b in range(blocks)]
            return
        for b in range(blocks + 1):
            labels.append(b)
            yield from grow(i + 1, labels, max(blocks, b + 1))
            labels.pop()

    yield from grow(0, [], 0)


def identification(q: CQ, partition) -> dict:
    """Map every variable to the first member of its block."""
    return {v: block[0] for block in partition for v in block}


def contractions(q: CQ, canonical: bool = True) -> Iterator[CQ]:
    """One CQ per partition of the variables, duplicates removed after renaming."""
    seen = set()
    for part in set_partitions(list(q.variables)):
        c = q.rename(identification(q, part))
        if canonical:
            c = c.canonical()
        if c not in seen:
            seen.add(c)
            yield c


def contractions_with_maps(q: CQ) -> Iterator[tuple[CQ, dict]]:
    """Contractions together with the identification map from ``q``; no dedup."""
    for part in set_partitions(list(q.variables)):
        m = identification(q, part)
        yield q.rename(m), m


def subqueries(q: CQ) -> Iterator[CQ]:
    atoms = sorted(q.atoms)
    for k in range(1, len(atoms) + 1):
        for combo in itertools.combinations(atoms, k):
            yield CQ(combo).canonical()


def evaluate_cq(q: CQ, instance: Structure) -> bool:
    return maps_to(q.canonical_db(), instance)


def evaluate_ucq(q, instance: Structure) -> bool:
    return any(evaluate_cq(p, instance) for p in as_ucq(q))
