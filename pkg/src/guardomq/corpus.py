"""Database corpora for equivalence refutation.

``all_databases`` is the literal enumeration and only feasible for tiny
schemas. ``minimal_models`` yields, for an OMQ with a Datalog ontology, fact
sets over a pool of n constants that are minimal supports of some image of a
disjunct. Every database with at most n constants that entails the OMQ
contains one of them up to renaming, so two monotone OMQs agree on all such
databases iff each agrees on the other's minimal models.
"""
from __future__ import annotations

import itertools
from collections import defaultdict
from collections.abc import Iterator

from .chase import OMQ
from .errors import PreconditionError
from .relstruct import Fact, Schema, Structure


def pool(n: int) -> list[str]:
    return [f"c{i}" for i in range(n)]


def all_facts(schema: Schema, constants) -> list[Fact]:
    out = []
    for rel, arity in schema.items():
        for args in itertools.product(sorted(constants), repeat=arity):
            out.append(Fact(rel, args))
    return out


def all_databases(schema: Schema, max_constants: int, include_empty: bool = False) -> Iterator[Structure]:
    """Every database over ``schema`` using constants c0..c{n-1}."""
    facts = all_facts(schema, pool(max_constants))
    if len(facts) > 24:
        raise PreconditionError(f"{2 ** len(facts)} databases is too many to enumerate literally")
    for k in range(0 if include_empty else 1, len(facts) + 1):
        for combo in itertools.combinations(facts, k):
            yield Structure(combo, schema)


def _minimize(sets):
    sets = sorted(set(sets), key=lambda s: (len(s), sorted(s)))
    out = []
    for s in sets:
        if not any(o <= s for o in out):
            out.append(s)
    return out


def support_table(omq: OMQ, n: int) -> dict:
    """Minimal sets of data facts over the pool deriving each fact (why-provenance)."""
    if any(r.existentials for r in omq.ontology):
        raise PreconditionError("minimal models need an ontology without existential rules")
    consts = pool(n)
    table = defaultdict(list)
    for f in all_facts(omq.schema, consts):
        table[f] = [frozenset([f])]
    changed = True
    while changed:
        changed = False
        for rule in omq.ontology:
            vs = sorted(rule.universals)
            for values in itertools.product(consts, repeat=len(vs)):
                m = dict(zip(vs, values))
                body = [a.rename(m) for a in rule.body]
                if any(b not in table for b in body):
                    continue
                combos = [frozenset().union(*c) for c in itertools.product(*(table[b] for b in body))]
                for h in rule.head:
                    f = h.rename(m)
                    old = table.get(f, [])
                    merged = _minimize(old + combos)
                    if set(merged) != set(old):
                        table[f] = merged
                        changed = True
    return dict(table)


def _canonical_maps(variables, consts):
    """Restricted-growth maps of the variables into the pool."""
    n = len(consts)

    def grow(i, used, acc):
        if i == len(variables):
            yield dict(acc)
            return
        for j in range(min(used + 1, n)):
            acc[variables[i]] = consts[j]
            yield from grow(i + 1, max(used, j + 1), acc)
        del acc[variables[i]]

    yield from grow(0, 0, {})


def minimal_models(omq: OMQ, n: int) -> Iterator[Structure]:
    """Lazily yield candidate minimal models over at most ``n`` constants."""
    table = support_table(omq, n)
    consts = pool(n)
    seen = set()
    for p in omq.query:
        for m in _canonical_maps(list(p.variables), consts):
            image = sorted({a.rename(m) for a in p.atoms})
            if any(a not in table for a in image):
                continue
            for combo in itertools.product(*(table[a] for a in image)):
                facts = frozenset().union(*combo)
                if facts in seen:
                    continue
                seen.add(facts)
                yield Structure(facts, omq.schema)


def random_databases(schema: Schema, n_constants: int, n_facts: int, count: int, rng) -> Iterator[Structure]:
    facts = all_facts(schema, pool(n_constants))
    for _ in range(count):
        k = rng.randint(1, min(n_facts, len(facts)))
        yield Structure(rng.sample(facts, k), schema)
