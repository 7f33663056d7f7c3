import random

import pytest

from conftest import random_gdlog, random_structure
from guardomq.catalog import triangle_instance
from guardomq.chase import (
    GDLOG,
    GTGD,
    UNRESTRICTED,
    OMQ,
    TGD,
    Ontology,
    atomic_consequences,
    classify,
    eval_omq,
    run_chase,
)
from guardomq.errors import BudgetRequired, PreconditionError, SchemaError
from guardomq.query import UCQ
from guardomq.relstruct import Fact, Schema, Structure, maps_to
from guardomq.textformat import parse_cq, parse_facts, parse_ontology


def _fixpoint(ontology, db):
    """Hand-rolled naive Datalog fixpoint: try every assignment of constants."""
    import itertools

    facts = set(db.facts)
    consts = sorted(db.domain)
    while True:
        new = set()
        for rule in ontology:
            vs = sorted(rule.universals)
            for vals in itertools.product(consts, repeat=len(vs)):
                m = dict(zip(vs, vals))
                if all(a.rename(m) in facts for a in rule.body):
                    new |= {h.rename(m) for h in rule.head}
        if new <= facts:
            return facts
        facts |= new


def test_rule_classification():
    g = parse_ontology("U(X,Y,Z), V(X,Z) -> T(X,Z).").rules[0]
    assert classify(g)[0] == "datalog-guarded" and g.guard == Fact("U", ("X", "Y", "Z"))
    e = TGD([Fact("R", ("X", "Y"))], [Fact("S", ("Y", "Z"))])
    assert e.kind == "guarded" and e.existentials == {"Z"}
    u = TGD([Fact("R", ("X", "Y")), Fact("R", ("Y", "Z"))], [Fact("S", ("X", "Z"))])
    assert u.kind == "unguarded"
    assert Ontology([g, e]).kind == GTGD
    assert Ontology([g, u]).kind == UNRESTRICTED


def test_triangle_chase_matches_hand_fixpoint():
    t = triangle_instance()
    ont = t.omq.ontology
    for db, extra in ((t.D1, "S(b,a). T(a,a)."), (t.D2, "S(b,c). T(c,a).")):
        res = run_chase(ont, db)
        assert res.complete
        assert res.structure.facts == db.facts | parse_facts(extra).facts
        assert res.structure.facts == _fixpoint(ont, db)


def test_chase_order_independence_random_gdlog():
    rng = random.Random(7)
    edb = {"E": 2, "G": 3}
    idb = {"A": 1, "B": 2}
    for _ in range(30):
        ont = random_gdlog(rng, edb, idb, rng.randint(1, 4))
        db = random_structure(rng, edb, 4, rng.randint(1, 6))
        a = run_chase(ont, db).structure
        assert a == run_chase(ont, db, reverse=True).structure
        assert a == run_chase(ont, db, naive=True).structure
        assert a.facts == _fixpoint(ont, db)


def test_chase_preserves_homomorphisms():
    rng = random.Random(11)
    edb = {"E": 2}
    ont = parse_ontology("E(X,Y) -> A(Y).\nE(X,Y), A(X) -> B(X,Y).")
    for _ in range(30):
        a = random_structure(rng, edb, 3, 3)
        b = random_structure(rng, edb, 3, 5, prefix="d")
        if maps_to(a, b):
            assert maps_to(run_chase(ont, a).structure, run_chase(ont, b).structure)


def test_existential_chase_needs_budget():
    ont = Ontology([TGD([Fact("R", ("X", "Y"))], [Fact("R", ("Y", "Z"))])])
    db = parse_facts("R(a,b).")
    with pytest.raises(BudgetRequired):
        run_chase(ont, db)
    res = run_chase(ont, db, depth_budget=3)
    assert len(res.structure) == 4
    assert not res.complete
    assert res.level(0) == db


def test_three_valued_evaluation():
    ont = Ontology([TGD([Fact("R", ("X", "Y"))], [Fact("R", ("Y", "Z"))])])
    omq = OMQ(ont, Schema(R=2), UCQ([parse_cq("R(X,Y), R(Y,Z), R(Z,W), R(W,U)")]))
    db = parse_facts("R(a,b).")
    assert eval_omq(omq, db, depth_budget=1) is None
    assert eval_omq(omq, db, depth_budget=3) is True


def test_eval_rejects_off_schema_data():
    t = triangle_instance()
    with pytest.raises(SchemaError):
        eval_omq(t.omq, parse_facts("S(a,b)."))


def test_atomic_consequences():
    t = triangle_instance()
    got = atomic_consequences(t.omq.ontology, t.D2, {"a", "c"})
    assert got == {Fact("T", ("c", "a")), Fact("V", ("c", "a"))}
    with pytest.raises(PreconditionError):
        atomic_consequences(Ontology([TGD([Fact("R", ("X", "Y"))], [Fact("R", ("Y", "Z"))])]), t.D2, [])


def test_empty_ontology_is_datalog():
    assert Ontology().kind == GDLOG
    assert run_chase(Ontology(), Structure([])).structure == Structure([])
