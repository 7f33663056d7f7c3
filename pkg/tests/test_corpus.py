import itertools

from guardomq.catalog import chain_instance, unary_pair_instance
from guardomq.chase import OMQ, eval_omq
from guardomq.corpus import all_databases, minimal_models, support_table
from guardomq.query import UCQ
from guardomq.relstruct import Fact, Schema
from guardomq.textformat import parse_cq, parse_ontology


def _brute_minimal(omq, n):
    """Minimal entailing databases over n constants, by literal enumeration."""
    hits = [d.facts for d in all_databases(omq.schema, n) if eval_omq(omq, d)]
    return {h for h in hits if not any(o < h for o in hits)}


def _small_omqs():
    yield unary_pair_instance().derived
    yield unary_pair_instance().plain
    ont = parse_ontology("R(X,Y), P(X) -> P(Y).")
    yield OMQ(ont, Schema(R=2, P=1), UCQ([parse_cq("P(X), R(X,X)")]))
    yield OMQ(ont, Schema(R=2, P=1), UCQ([parse_cq("P(X), R(X,Y), R(Y,X)")]))


def test_minimal_models_cover_every_minimal_database():
    for omq in _small_omqs():
        for n in (1, 2):
            brute = _brute_minimal(omq, n)
            gen = {d.facts for d in minimal_models(omq, n)}
            # every minimal database appears up to renaming of the pool
            for b in brute:
                assert any(
                    frozenset(f.rename(dict(zip(sorted({c for g in b for c in g.args}), p))) for f in b) in gen
                    for p in itertools.permutations([f"c{k}" for k in range(n)])
                ), (omq, b)
            for g in gen:
                from guardomq.relstruct import Structure

                assert eval_omq(omq, Structure(g, omq.schema))


def test_support_table_tracks_derivations():
    ch = chain_instance(1)
    table = support_table(ch.omq, 2)
    b1 = Fact("B", ("c1",))
    assert frozenset({Fact("A", ("c0",)), Fact("R", ("c0", "c1"))}) in table[b1]


def test_all_databases_count():
    assert sum(1 for _ in all_databases(Schema(P=1), 2)) == 3
