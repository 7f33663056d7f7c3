import itertools

import pytest

from guardomq.catalog import clique_instance, triangle_instance, unary_pair_instance
from guardomq.corpus import all_databases, minimal_models
from guardomq.cover import (
    adornment_from_cover,
    check_equiv_on_corpus,
    cover_cqs_from,
    cover_omq,
    identity_spec,
    minimal_guard_sets,
    validate_extended_adornment,
)
from guardomq.errors import PreconditionError
from guardomq.relstruct import Structure, find_isomorphism, maximal_guarded_sets
from guardomq.textformat import parse_facts
from guardomq.unravel import ext
from guardomq.width import TreeDecomposition

T = triangle_instance()


@pytest.mark.parametrize("i", [2, 3, 4])
def test_clique_cover_is_guarded_query(i):
    c = clique_instance(i)
    res = cover_cqs_from(c.omq, identity_spec(c.guard_db, c.base))
    assert len(res) == 1
    assert find_isomorphism(res.cqs[0].cq.canonical_db(), c.q_guarded.canonical_db())


def test_clique_cover_refuted_from_three_on():
    c = clique_instance(3)
    cov = cover_omq(c.omq, cover_cqs_from(c.omq, identity_spec(c.guard_db, c.base)))
    corpus = itertools.chain(minimal_models(c.omq, 4), minimal_models(cov, 4))
    res = check_equiv_on_corpus(c.omq, cov, corpus)
    assert res.status == "counterexample" and res.side == "left"
    # the collapsed guard yields a loop clique that only the plain query sees
    assert res.database == parse_facts("S3(c0,c0,c1). T(c0,c0).")


def test_two_clique_cover_survives_corpus():
    c = clique_instance(2)
    cov = cover_omq(c.omq, cover_cqs_from(c.omq, identity_spec(c.guard_db, c.base)))
    assert check_equiv_on_corpus(c.omq, cov, all_databases(c.omq.schema, 2))


def test_triangle_cover_and_adornment():
    spec = identity_spec(T.D, T.D2)
    res = cover_cqs_from(T.omq, spec)
    assert len(res) == 1
    entry = res.cqs[0]
    assert any(f.relation == "U" for f in entry.S)
    p, td, S, up = adornment_from_cover(entry, res.ext)
    assert validate_extended_adornment(p, td, Structure(S), up, T.D2, T.omq)


def test_adornment_rejects_broken_decomposition():
    spec = identity_spec(T.D, T.D2)
    res = cover_cqs_from(T.omq, spec)
    p, td, S, up = adornment_from_cover(res.cqs[0], res.ext)
    broken = TreeDecomposition({0: td.bags[0]}, {0: None}, 0)
    chk = validate_extended_adornment(p, broken, Structure(S), up, T.D2, T.omq)
    assert not chk.valid and chk.reasons


def test_minimal_guard_sets():
    e = ext(T.D, {c: c for c in T.D.domain}, T.D2, T.omq)
    hp = parse_facts("R(a,b). S(b,c). T(c,a).").facts
    sets = minimal_guard_sets(hp, T.D, e.structure)
    assert sets and all(T.D.facts <= s for s in sets)
    maximal = set(maximal_guarded_sets(e.structure))

    def covered(facts):
        return all(any(a.terms <= g.terms and g.terms in maximal for g in facts) for a in hp)

    for s in sets:
        assert covered(s)
        for f in s - T.D.facts:
            assert not covered(s - {f})
    with pytest.raises(PreconditionError):
        minimal_guard_sets(parse_facts("R(a,zz).").facts, T.D, e.structure)


def test_equivalent_pair_has_no_counterexample():
    pair = unary_pair_instance()
    assert check_equiv_on_corpus(pair.derived, pair.plain, all_databases(pair.plain.schema, 3))
