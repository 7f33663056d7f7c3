"""Relational schemas, finite structures and homomorphisms between them.

Constants are plain strings. Constants minted by a construction (chase nulls,
unraveling copies, diversification fresh constants) are :class:`Constant`
instances, a ``str`` subclass carrying an ``origin`` tag; equality and hashing
are by name only, so names must be unique within a structure.
"""
from __future__ import annotations

import itertools
from collections import defaultdict
from collections.abc import Iterable, Iterator, Mapping
from types import MappingProxyType
from typing import NamedTuple

from .errors import SchemaError

ORIGINS = ("input", "chase-null", "unravel-copy", "fresh-diversify")


class Constant(str):
    """A named domain element with a provenance tag."""

    def __new__(cls, name, origin="input"):
        if origin not in ORIGINS:
            raise ValueError(f"unknown constant origin {origin!r}")
        obj = super().__new__(cls, name)
        obj.origin = origin
        return obj

    def __reduce__(self):
        return (Constant, (str(self), self.origin))

    def __repr__(self):
        return f"Constant({str(self)!r}, {self.origin!r})"


def origin_of(c) -> str:
    return getattr(c, "origin", "input")


class Fact(NamedTuple):
    relation: str
    args: tuple

    @classmethod
    def of(cls, relation, *args):
        return cls(relation, tuple(args))

    @property
    def terms(self) -> frozenset:
        return frozenset(self.args)

    def rename(self, mapping) -> Fact:
        return Fact(self.relation, tuple(mapping.get(a, a) for a in self.args))

    def __str__(self):
        return f"{self.relation}({','.join(self.args)})"


class Schema(Mapping):
    """Immutable map from relation name to arity."""

    __slots__ = ("_arities",)

    def __init__(self, arities=None, **kwargs):
        items = dict(arities or {}, **kwargs)
        for name, arity in items.items():
            if not isinstance(arity, int) or arity < 1:
                raise SchemaError(f"relation {name} must have a positive arity, got {arity!r}")
        self._arities = dict(sorted(items.items()))

    @classmethod
    def infer(cls, facts: Iterable[Fact]) -> Schema:
        arities: dict[str, int] = {}
        for f in facts:
            known = arities.setdefault(f.relation, len(f.args))
            if known != len(f.args):
                raise SchemaError(
                    f"relation {f.relation} used with arities {known} and {len(f.args)}"
                )
        return cls(arities)

    def __getitem__(self, name):
        return self._arities[name]

    def __iter__(self):
        return iter(self._arities)

    def __len__(self):
        return len(self._arities)

    def __hash__(self):
        return hash(tuple(self._arities.items()))

    def __repr__(self):
        return f"Schema({self._arities!r})"

    def __str__(self):
        return ", ".join(f"{r}/{a}" for r, a in self._arities.items())

    def check(self, fact: Fact) -> None:
        if fact.relation not in self._arities:
            raise SchemaError(f"relation {fact.relation} is not declared in schema {{{self}}}")
        if self._arities[fact.relation] != len(fact.args):
            raise SchemaError(
                f"fact {fact} has {len(fact.args)} arguments, "
                f"{fact.relation} has arity {self._arities[fact.relation]}"
            )

    def compatible(self, other: Schema) -> bool:
        return all(other[r] == a for r, a in self.items() if r in other)

    def union(self, other: Schema) -> Schema:
        if not self.compatible(other):
            raise SchemaError(f"incompatible schemas {{{self}}} and {{{other}}}")
        return Schema({**self._arities, **dict(other)})


class Structure:
    """A finite set of facts over a schema.

    The domain is exactly the set of constants occurring in facts. Instances
    are immutable; every operation returns a new structure.
    """

    __slots__ = ("facts", "schema", "_domain", "_index")

    def __init__(self, facts: Iterable[Fact] = (), schema: Schema | None = None):
        facts = frozenset(Fact(f[0], tuple(f[1])) for f in facts)
        if schema is None:
            schema = Schema.infer(facts)
        else:
            for f in facts:
                schema.check(f)
        self.facts = facts
        self.schema = schema
        self._domain = None
        self._index = None

    @property
    def domain(self) -> frozenset:
        if self._domain is None:
            self._domain = frozenset(a for f in self.facts for a in f.args)
        return self._domain

    def by_relation(self, relation) -> tuple:
        if self._index is None:
            index = defaultdict(list)
            for f in sorted(self.facts):
                index[f.relation].append(f.args)
            self._index = {r: tuple(v) for r, v in index.items()}
        return self._index.get(relation, ())

    def __iter__(self) -> Iterator[Fact]:
        return iter(sorted(self.facts))

    def __len__(self):
        return len(self.facts)

    def __contains__(self, fact):
        return fact in self.facts

    def __eq__(self, other):
        if not isinstance(other, Structure):
            return NotImplemented
        return self.facts == other.facts

    def __hash__(self):
        return hash(self.facts)

    def __le__(self, other):
        return self.facts <= other.facts

    def __or__(self, other):
        return self.union(other)

    def __repr__(self):
        return f"Structure({{{', '.join(map(str, self))}}})"

    def __str__(self):
        return " ".join(f"{f}." for f in self)

    def union(self, other: Structure) -> Structure:
        return Structure(self.facts | other.facts, self.schema.union(other.schema))

    def restrict(self, constants: Iterable) -> Structure:
        """The substructure induced by ``constants``."""
        keep = frozenset(constants)
        return Structure((f for f in self.facts if keep.issuperset(f.args)), self.schema)

    def rename(self, mapping: Mapping) -> Structure:
        return Structure((f.rename(mapping) for f in self.facts), self.schema)

    def with_schema(self, schema: Schema) -> Structure:
        return Structure(self.facts, schema)

    def without(self, facts: Iterable[Fact]) -> Structure:
        return Structure(self.facts - frozenset(facts), self.schema)


class Homomorphism:
    """A total map ``dom(source) -> dom(target)``; use :meth:`is_valid` to check it."""

    __slots__ = ("source", "target", "mapping")

    def __init__(self, source: Structure, target: Structure, mapping: Mapping):
        self.source = source
        self.target = target
        self.mapping = MappingProxyType(dict(mapping))

    def __call__(self, c):
        return self.mapping[c]

    def __eq__(self, other):
        if not isinstance(other, Homomorphism):
            return NotImplemented
        return dict(self.mapping) == dict(other.mapping)

    def __hash__(self):
        return hash(frozenset(self.mapping.items()))

    def __repr__(self):
        pairs = ", ".join(f"{k}->{v}" for k, v in sorted(self.mapping.items()))
        return f"Homomorphism({{{pairs}}})"

    def key(self) -> tuple:
        return tuple(self.mapping[c] for c in sorted(self.source.domain))

    def image(self) -> Structure:
        return Structure((f.rename(self.mapping) for f in self.source.facts), self.target.schema)

    def is_valid(self) -> bool:
        if not self.source.domain <= self.mapping.keys():
            return False
        return all(f.rename(self.mapping) in self.target.facts for f in self.source.facts)

    def is_injective(self) -> bool:
        values = [self.mapping[c] for c in self.source.domain]
        return len(set(values)) == len(values)

    def is_injective_on(self, constants) -> bool:
        values = [self.mapping[c] for c in set(constants)]
        return len(set(values)) == len(values)

    def restrict(self, constants) -> dict:
        return {c: self.mapping[c] for c in constants}

    def then(self, other: Homomorphism) -> Homomorphism:
        """Composition ``other o self``."""
        return Homomorphism(
            self.source, other.target, {c: other.mapping[v] for c, v in self.mapping.items()}
        )


def identity(structure: Structure, target: Structure | None = None) -> Homomorphism:
    return Homomorphism(structure, target or structure, {c: c for c in structure.domain})


# ---------------------------------------------------------------------------
# homomorphism search


def _compatible_tuple(pattern, t, partial):
    seen = {}
    for p, v in zip(pattern, t):
        if p in seen:
            if seen[p] != v:
                return False
        else:
            seen[p] = v
            if partial is not None and p in partial and partial[p] != v:
                return False
    return True


def iter_homomorphisms(
    source: Structure,
    target: Structure,
    injective: bool = False,
    partial: Mapping | None = None,
    distinct: Iterable | None = None,
) -> Iterator[Homomorphism]:
    """Enumerate homomorphisms by backtracking with generalized arc consistency.

    ``distinct`` is an optional collection of constant sets on which the map
    must be injective (e.g. the guarded sets, for i.g.s. maps). Variables are
    chosen most-constrained first (ties by name) and values are tried in
    sorted order, so the enumeration order is deterministic.
    """
    for m in _search(source, target, injective, partial, distinct):
        yield Homomorphism(source, target, m)


def _neq_table(variables, injective, distinct):
    if injective:
        everyone = frozenset(variables)
        return {v: everyone - {v} for v in variables}
    table = {v: set() for v in variables}
    for group in distinct or ():
        group = [v for v in group if v in table]
        for v in group:
            table[v].update(u for u in group if u != v)
    return {v: frozenset(us) for v, us in table.items()}


def _search(source, target, injective, partial, distinct=None):
    facts = sorted(source.facts)
    if not facts:
        yield {}
        return
    cands = []
    for f in facts:
        lst = [t for t in target.by_relation(f.relation) if _compatible_tuple(f.args, t, partial)]
        if not lst:
            return
        cands.append(lst)
    variables = sorted(source.domain)
    occ = defaultdict(list)  # var -> [(fact index, first position)]
    fact_vars = []
    for fi, f in enumerate(facts):
        positions = defaultdict(list)
        for pos, a in enumerate(f.args):
            positions[a].append(pos)
        fact_vars.append(dict(positions))
        for a, ps in positions.items():
            occ[a].append((fi, ps[0]))
    doms = {}
    for v in variables:
        d = None
        for fi, pos in occ[v]:
            vals = {t[pos] for t in cands[fi]}
            d = vals if d is None else d & vals
        if partial is not None and v in partial:
            d &= {partial[v]}
        if not d:
            return
        doms[v] = d
    state = _propagate(doms, cands, range(len(facts)), facts, fact_vars, occ)
    if state is None:
        return
    doms, cands = state
    neq = _neq_table(variables, injective, distinct) if (injective or distinct) else None
    yield from _branch({}, doms, cands, variables, facts, fact_vars, occ, neq)


def _propagate(doms, cands, queue, facts, fact_vars, occ):
    doms = dict(doms)
    cands = list(cands)
    pending = list(queue)
    queued = set(pending)
    while pending:
        fi = pending.pop()
        queued.discard(fi)
        fv = fact_vars[fi]
        lst = [t for t in cands[fi] if all(t[ps[0]] in doms[v] for v, ps in fv.items())]
        if not lst:
            return None
        cands[fi] = lst
        for v, ps in fv.items():
            vals = {t[ps[0]] for t in lst}
            if not doms[v] <= vals:
                nd = doms[v] & vals
                if not nd:
                    return None
                doms[v] = nd
                for fj, _ in occ[v]:
                    if fj != fi and fj not in queued:
                        queued.add(fj)
                        pending.append(fj)
    return doms, cands


def _branch(assign, doms, cands, variables, facts, fact_vars, occ, neq):
    free = [v for v in variables if v not in assign]
    if not free:
        yield dict(assign)
        return
    var = min(free, key=lambda v: len(doms[v]))
    for val in sorted(doms[var]):
        nd = dict(doms)
        nd[var] = {val}
        touched = {fi for fi, _ in occ[var]}
        if neq is not None:
            dead = False
            for u in neq[var]:
                if u in assign:
                    if assign[u] == val:
                        dead = True
                        break
                elif val in nd[u]:
                    nd[u] = nd[u] - {val}
                    if not nd[u]:
                        dead = True
                        break
                    touched.update(fi for fi, _ in occ[u])
            if dead:
                continue
        state = _propagate(nd, cands, touched, facts, fact_vars, occ)
        if state is None:
            continue
        assign[var] = val
        yield from _branch(assign, state[0], state[1], variables, facts, fact_vars, occ, neq)
        del assign[var]


def find_homomorphism(
    source: Structure,
    target: Structure,
    mode: str = "any",
    limit: int | None = 1,
    partial: Mapping | None = None,
) -> list[Homomorphism]:
    """Return up to ``limit`` homomorphisms (all of them when ``limit`` is None).

    ``mode`` is ``"any"``, ``"injective"`` or ``"fixed-partial"`` (the latter
    requires ``partial``). The result is sorted by image tuple.
    """
    if mode not in ("any", "injective", "fixed-partial"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "fixed-partial" and partial is None:
        raise ValueError("fixed-partial mode needs a partial map")
    if not source.schema.compatible(target.schema):
        return []
    it = iter_homomorphisms(source, target, injective=(mode == "injective"), partial=partial)
    found = list(itertools.islice(it, limit)) if limit is not None else list(it)
    return sorted(found, key=Homomorphism.key)


def maps_to(source: Structure, target: Structure, **kwargs) -> bool:
    return next(iter_homomorphisms(source, target, **kwargs), None) is not None


def naive_homomorphisms(source: Structure, target: Structure) -> Iterator[dict]:
    """Reference enumerator: try every function ``dom(source) -> dom(target)``."""
    dom = sorted(source.domain)
    rng = sorted(target.domain)
    for values in itertools.product(rng, repeat=len(dom)):
        m = dict(zip(dom, values))
        if all(f.rename(m) in target.facts for f in source.facts):
            yield m


def is_injective_only(source: Structure, target: Structure) -> bool:
    """True iff some homomorphism exists and every homomorphism is injective."""
    found = False
    for h in iter_homomorphisms(source, target):
        if not h.is_injective():
            return False
        found = True
    return found


def homomorphically_equivalent(a: Structure, b: Structure) -> bool:
    return maps_to(a, b) and maps_to(b, a)


def find_isomorphism(a: Structure, b: Structure) -> Homomorphism | None:
    if len(a) != len(b) or len(a.domain) != len(b.domain):
        return None
    counts = lambda s: sorted((r, len(s.by_relation(r))) for r in {f.relation for f in s.facts})
    if counts(a) != counts(b):
        return None
    # an injective homomorphism between equal-size structures is onto on facts
    return next(iter_homomorphisms(a, b, injective=True), None)


def is_isomorphic(a: Structure, b: Structure) -> bool:
    return find_isomorphism(a, b) is not None


def core_of(structure: Structure) -> tuple[Structure, Homomorphism]:
    """Compute the core together with a retraction onto it.

    Constants are tried for removal from the largest name down, so the
    surviving names are the lexicographically smallest possible ones.
    """
    current = structure
    retraction = {c: c for c in structure.domain}
    changed = True
    while changed:
        changed = False
        for c in sorted(current.domain, reverse=True):
            smaller = current.restrict(current.domain - {c})
            h = next(_search(current, smaller, False, None), None)
            if h is not None:
                retraction = {k: h[v] for k, v in retraction.items()}
                current = smaller
                changed = True
                break
    return current, Homomorphism(structure, current, retraction)


def is_core(structure: Structure) -> bool:
    return len(core_of(structure)[0]) == len(structure)


def pair_name(a, b) -> Constant:
    return Constant(f"[{a}|{b}]", "input")


def product(a: Structure, b: Structure) -> tuple[Structure, Homomorphism, Homomorphism]:
    """Categorical product with both projections.

    Pair constants are named ``[a|b]``; the bracket makes names of nested
    products unambiguous.
    """
    schema = a.schema.union(b.schema)
    facts = []
    left, right = {}, {}
    for rel in sorted({f.relation for f in a.facts} & {f.relation for f in b.facts}):
        for s in a.by_relation(rel):
            for t in b.by_relation(rel):
                args = []
                for x, y in zip(s, t):
                    p = pair_name(x, y)
                    left[p], right[p] = x, y
                    args.append(p)
                facts.append(Fact(rel, tuple(args)))
    prod = Structure(facts, schema)
    return prod, Homomorphism(prod, a, left), Homomorphism(prod, b, right)


# ---------------------------------------------------------------------------
# guarded sets


def maximal_guarded_sets(structure: Structure) -> list[frozenset]:
    sets = {f.terms for f in structure.facts}
    maximal = [s for s in sets if not any(s < t for t in sets)]
    return sorted(maximal, key=lambda s: (sorted(s), len(s)))


def is_guarded_set(structure: Structure, constants) -> bool:
    constants = frozenset(constants)
    return any(constants <= f.terms for f in structure.facts)


def kernel(structure: Structure) -> frozenset:
    """Constants occurring in at least two distinct facts."""
    count = defaultdict(int)
    for f in structure.facts:
        for c in f.terms:
            count[c] += 1
    return frozenset(c for c, n in count.items() if n >= 2)


def guarded_analysis(structure: Structure) -> tuple[list[frozenset], frozenset]:
    return maximal_guarded_sets(structure), kernel(structure)


def is_igs(h: Homomorphism) -> bool:
    """Injective on every guarded set of the source."""
    return all(h.is_injective_on(f.terms) for f in h.source.facts)
